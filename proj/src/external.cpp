#include <algorithm>
#include <boost/math/special_functions/bessel.hpp>

#include "flatvp/csv.hpp"
#include "flatvp/radial_field.hpp"

namespace flatvp {

namespace {

// e^-x I0(x) and e^-x (I0(x) - I1(x)) without overflow
double scaledI0(double x)
{
    if (x > 500.0)
        return (1.0 + 1.0 / (8.0 * x) + 9.0 / (128.0 * x * x)) / std::sqrt(kTwoPi * x);
    return std::exp(-x) * boost::math::cyl_bessel_i(0, x);
}

double scaledI0MinusI1(double x)
{
    if (x > 500.0)
        return (0.5 / x + 3.0 / (16.0 * x * x)) / std::sqrt(kTwoPi * x);
    return std::exp(-x) * (boost::math::cyl_bessel_i(0, x) - boost::math::cyl_bessel_i(1, x));
}

double requirePositive(const nlohmann::json& params, const char* key)
{
    if (!params.contains(key))
        throw DomainError(std::string("external density: missing parameter '") + key + "'");
    const double v = params.at(key).get<double>();
    if (!(v > 0.0) || !std::isfinite(v))
        throw DomainError(std::string("external density: parameter '") + key + "' must be positive");
    return v;
}

}  // namespace

ExternalDensity ExternalDensity::none()
{
    return ExternalDensity();
}

ExternalDensity ExternalDensity::kuzmin(double mass, double a)
{
    if (!(mass > 0.0) || !(a > 0.0))
        throw DomainError("kuzmin external density needs M > 0 and a > 0");
    ExternalDensity e;
    e.kind_ = Kind::kuzmin;
    e.mass_ = mass;
    e.scale_ = a;
    e.params_ = {{"M", mass}, {"a", a}};
    return e;
}

ExternalDensity ExternalDensity::gaussian(double mass, double width)
{
    if (!(mass > 0.0) || !(width > 0.0))
        throw DomainError("gaussian external density needs M > 0 and w > 0");
    ExternalDensity e;
    e.kind_ = Kind::gaussian;
    e.mass_ = mass;
    e.scale_ = width;
    e.params_ = {{"M", mass}, {"w", width}};
    return e;
}

ExternalDensity ExternalDensity::tabulated(std::vector<double> r, std::vector<double> rho)
{
    if (r.size() < 2 || r.size() != rho.size())
        throw DomainError("tabulated external density needs at least two (r, rho) rows");
    if (r.front() != 0.0)
        throw DomainError("tabulated external density must start at r = 0");
    for (std::size_t i = 1; i < r.size(); ++i) {
        if (!(r[i] > r[i - 1]))
            throw DomainError("tabulated external density radii must be strictly increasing");
        if (rho[i] < 0.0)
            throw DomainError("tabulated external density must be nonnegative");
        if (rho[i - 1] > 0.0 && !(rho[i] < rho[i - 1]))
            throw DomainError("tabulated external density is not strictly decreasing at row " + std::to_string(i));
        if (rho[i - 1] == 0.0 && rho[i] > 0.0)
            throw DomainError("tabulated external density is not decreasing at row " + std::to_string(i));
    }
    if (!(rho.front() > 0.0))
        throw DomainError("tabulated external density must be positive at r = 0");

    ExternalDensity e;
    e.kind_ = Kind::tabulated;
    e.params_ = {{"r", r}, {"rho", rho}};
    // mass outside each knot for the piecewise-linear profile
    const std::size_t n = r.size();
    std::vector<double> tail(n, 0.0);
    for (std::size_t i = n - 1; i-- > 0;) {
        const double slope = (rho[i + 1] - rho[i]) / (r[i + 1] - r[i]);
        const double a = r[i], b = r[i + 1];
        const double seg = kTwoPi * ((rho[i] - slope * a) * (b * b - a * a) / 2.0 + slope * (b * b * b - a * a * a) / 3.0);
        tail[i] = tail[i + 1] + seg;
    }
    e.knotsR_ = std::move(r);
    e.knotsRho_ = std::move(rho);
    e.knotsTail_ = std::move(tail);
    e.mass_ = e.knotsTail_.front();
    e.scale_ = e.knotsR_.back();
    e.buildPotentialTable();
    return e;
}

void ExternalDensity::buildPotentialTable()
{
    // potential of the cell-averaged profile at the nodes of a fine geometric grid
    auto grid = RadialGrid::geometric(600, knotsR_.back(), knotsR_.back() * 1e-4);
    const auto rho = sampled(grid);
    tableR_.assign(1, 0.0);
    for (double r : grid->nodes())
        tableR_.push_back(r);
    for (int i = 1; i <= 100; ++i)
        tableR_.push_back(knotsR_.back() * std::pow(100.0, i / 100.0));
    tableU_.resize(tableR_.size());
    tableF_.resize(tableR_.size());
#pragma omp parallel for
    for (std::ptrdiff_t i = 0; i < std::ptrdiff_t(tableR_.size()); ++i) {
        tableU_[i] = potentialAt(rho, tableR_[i]);
        tableF_[i] = forceAt(rho, tableR_[i]);
    }
}

ExternalDensity ExternalDensity::fromCsv(const std::filesystem::path& path)
{
    const auto table = csv::read(path);
    return tabulated(table.columnValues("r"), table.columnValues("rho"));
}

ExternalDensity ExternalDensity::fromJson(const nlohmann::json& j)
{
    return makeExternal(j.at("kind").get<std::string>(), j.value("params", nlohmann::json::object()));
}

ExternalDensity makeExternal(const std::string& kind, const nlohmann::json& params)
{
    if (kind == "none")
        return ExternalDensity::none();
    if (kind == "kuzmin")
        return ExternalDensity::kuzmin(requirePositive(params, "M"), requirePositive(params, "a"));
    if (kind == "gaussian")
        return ExternalDensity::gaussian(requirePositive(params, "M"), requirePositive(params, "w"));
    if (kind == "tabulated") {
        if (params.contains("path"))
            return ExternalDensity::fromCsv(params.at("path").get<std::string>());
        return ExternalDensity::tabulated(params.at("r").get<std::vector<double>>(),
                                          params.at("rho").get<std::vector<double>>());
    }
    throw DomainError("unknown external density kind '" + kind + "'");
}

std::string ExternalDensity::name() const
{
    switch (kind_) {
    case Kind::none: return "none";
    case Kind::kuzmin: return "kuzmin";
    case Kind::gaussian: return "gaussian";
    case Kind::tabulated: return "tabulated";
    }
    return "none";
}

nlohmann::json ExternalDensity::toJson() const
{
    return {{"kind", name()}, {"params", params_}};
}

double ExternalDensity::density(double r) const
{
    if (!(r >= 0.0))
        throw DomainError("external density: negative radius");
    switch (kind_) {
    case Kind::none: return 0.0;
    case Kind::kuzmin: {
        const double q = r * r + scale_ * scale_;
        return mass_ * scale_ / (kTwoPi * q * std::sqrt(q));
    }
    case Kind::gaussian:
        return mass_ / (kTwoPi * scale_ * scale_) * std::exp(-0.5 * r * r / (scale_ * scale_));
    case Kind::tabulated:
        if (r >= knotsR_.back())
            return 0.0;
        return math::interpLinear(knotsR_, knotsRho_, r);
    }
    return 0.0;
}

double ExternalDensity::tailMass(double r) const
{
    switch (kind_) {
    case Kind::none: return 0.0;
    case Kind::kuzmin: return mass_ * scale_ / std::sqrt(r * r + scale_ * scale_);
    case Kind::gaussian: return mass_ * std::exp(-0.5 * r * r / (scale_ * scale_));
    case Kind::tabulated: {
        if (r >= knotsR_.back())
            return 0.0;
        auto it = std::upper_bound(knotsR_.begin(), knotsR_.end(), r);
        const std::size_t i = std::size_t(it - knotsR_.begin()) - 1;
        const double a = knotsR_[i], b = knotsR_[i + 1];
        const double slope = (knotsRho_[i + 1] - knotsRho_[i]) / (b - a);
        const double c0 = knotsRho_[i] - slope * a;
        const double seg = kTwoPi * (c0 * (b * b - r * r) / 2.0 + slope * (b * b * b - r * r * r) / 3.0);
        return knotsTail_[i + 1] + seg;
    }
    }
    return 0.0;
}

double ExternalDensity::potential(double r) const
{
    switch (kind_) {
    case Kind::none: return 0.0;
    case Kind::kuzmin: return -mass_ / std::sqrt(r * r + scale_ * scale_);
    case Kind::gaussian: {
        const double x = r * r / (4.0 * scale_ * scale_);
        return -mass_ * std::sqrt(kPi / 2.0) / scale_ * scaledI0(x);
    }
    case Kind::tabulated:
        if (r >= tableR_.back())
            return -mass_ / r;
        return math::interpLinear(tableR_, tableU_, r);
    }
    return 0.0;
}

double ExternalDensity::force(double r) const
{
    switch (kind_) {
    case Kind::none: return 0.0;
    case Kind::kuzmin: {
        const double q = r * r + scale_ * scale_;
        return mass_ * r / (q * std::sqrt(q));
    }
    case Kind::gaussian: {
        const double x = r * r / (4.0 * scale_ * scale_);
        return mass_ * std::sqrt(kPi / 2.0) / scale_ * scaledI0MinusI1(x) * r / (2.0 * scale_ * scale_);
    }
    case Kind::tabulated:
        if (r >= tableR_.back())
            return mass_ / (r * r);
        return math::interpLinear(tableR_, tableF_, r);
    }
    return 0.0;
}

RadialDensity ExternalDensity::sampled(GridPtr grid) const
{
    if (kind_ == Kind::none)
        return RadialDensity::zero(std::move(grid));
    return RadialDensity::fromTailMass(std::move(grid), [this](double r) { return tailMass(r); });
}

std::vector<double> ExternalDensity::potentialOn(const RadialGrid& grid) const
{
    std::vector<double> u(grid.size());
    for (std::size_t i = 0; i < u.size(); ++i)
        u[i] = potential(grid.node(i));
    return u;
}

std::vector<std::pair<double, double>> ExternalDensity::qNormDiagnostics(GridPtr grid) const
{
    const auto rho = sampled(std::move(grid));
    std::vector<std::pair<double, double>> out;
    // q = 4/3 is the standing assumption; p in {1.25, 1.5, 1.75} gives q = p/(p-1)
    for (double q : {4.0 / 3.0, 5.0, 3.0, 7.0 / 3.0})
        out.emplace_back(q, lpNorm(rho, q));
    return out;
}

}  // namespace flatvp
