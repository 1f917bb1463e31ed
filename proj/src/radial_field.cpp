#include "flatvp/radial_field.hpp"

#include <algorithm>
#include <iostream>

#include "flatvp/csv.hpp"

namespace flatvp {

namespace {

constexpr double kLn4 = 1.3862943611198906;

// x ln|x| - x, antiderivative of ln|x| (0 at x = 0)
double logAntiderivative(double x)
{
    return x == 0.0 ? 0.0 : x * std::log(std::fabs(x)) - x;
}

double complementaryParameter(double r, double s)
{
    const double q = (r - s) / (r + s);
    return q * q;
}

// full kernel H and dH/dr at source radius s
void fullKernel(double r, double s, double& h, double& dh)
{
    if (s == 0.0) {
        h = dh = 0.0;
        return;
    }
    const double sum = r + s;
    const auto [k, e] = math::ellipticKE(complementaryParameter(r, s));
    h = -4.0 * s * k / sum;
    dh = 2.0 * s / r * (k / sum - e / (s - r));
}

// H minus 2 ln|r-s|, and dH/dr minus (-(1/r) ln|r-s| - 2/(s-r)); both bounded at s = r
void regularKernel(double r, double s, double& h, double& dh)
{
    if (s == r) {
        const double base = kLn4 + std::log(2.0 * r);
        h = -2.0 * base;
        dh = (base - 2.0) / r;
        return;
    }
    const double sum = r + s;
    const double m1 = complementaryParameter(r, s);
    const auto [k, e] = math::ellipticKE(m1);
    const double base = kLn4 + std::log(sum) + (k - kLn4 + 0.5 * std::log(m1));
    const double lnd = std::log(std::fabs(s - r));
    h = -4.0 * s / sum * base + 2.0 * (s - r) / sum * lnd;
    dh = 2.0 * s / (r * sum) * base - (s - r) / (r * sum) * lnd - 2.0 * s / r * (e - 1.0) / (s - r) - 2.0 / r;
}

// x^2/2 ln|x| - x^2/4, antiderivative of x ln|x|
double xLogAntiderivative(double x)
{
    return x == 0.0 ? 0.0 : 0.5 * x * x * std::log(std::fabs(x)) - 0.25 * x * x;
}

// Gauss-Legendre on [a,p] and [p,b] with s = p -+ len u^2, clustering nodes at p.
template <class G>
void clusteredQuadrature(G&& g, double a, double b, double p, int order)
{
    const auto& rule = math::gaussLegendreRule(order);
    for (const auto& [lo, hi, sign] : {std::tuple{a, p, -1.0}, std::tuple{p, b, 1.0}}) {
        const double len = hi - lo;
        if (len <= 0.0)
            continue;
        for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
            const double u = 0.5 * (rule.nodes[k] + 1.0);
            g(p + sign * len * u * u, rule.weights[k] * len * u);
        }
    }
}

template <class G>
void plainQuadrature(G&& g, double a, double b, int order)
{
    const auto& rule = math::gaussLegendreRule(order);
    const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
    for (std::size_t k = 0; k < rule.nodes.size(); ++k)
        g(mid + half * rule.nodes[k], rule.weights[k] * half);
}

bool isNearCell(double r, double a, double b)
{
    const double dist = r < a ? a - r : (r > b ? r - b : 0.0);
    return dist < 2.0 * (b - a);
}

void requireSameGrid(const RadialGrid& a, const RadialGrid& b)
{
    if (&a != &b && !a.sameAs(b))
        throw DomainError("densities live on different radial grids");
}

}  // namespace

// ---------------------------------------------------------------------------
// kernel

double ringKernel(double r, double s)
{
    if (r == 0.0)
        return s == 0.0 ? 0.0 : -kTwoPi;
    double h, dh;
    fullKernel(r, s, h, dh);
    return h;
}

double ringKernelDerivative(double r, double s)
{
    if (r == 0.0)
        return 0.0;
    double h, dh;
    fullKernel(r, s, h, dh);
    return dh;
}

double cellCentroid(double a, double b)
{
    return 2.0 / 3.0 * (a * a + a * b + b * b) / (a + b);
}

CellIntegrals cellIntegrals(double r, double a, double b, int order)
{
    const double c = cellCentroid(a, b);
    CellIntegrals out;
    if (r == 0.0) {
        out.u0 = -kTwoPi * (b - a);
        out.u1 = -kTwoPi * ((b - a) * (0.5 * (a + b) - c));
        return out;
    }
    if (!isNearCell(r, a, b)) {
        plainQuadrature([&](double s, double wt) {
            double h, dh;
            fullKernel(r, s, h, dh);
            out.u0 += wt * h;
            out.u1 += wt * h * (s - c);
            out.f0 += wt * dh;
            out.f1 += wt * dh * (s - c);
        }, a, b, 8);
        return out;
    }
    clusteredQuadrature([&](double s, double wt) {
        double h, dh;
        regularKernel(r, s, h, dh);
        out.u0 += wt * h;
        out.u1 += wt * h * (s - c);
        out.f0 += wt * dh;
        out.f1 += wt * dh * (s - c);
    }, a, b, std::clamp(r, a, b), order);

    const double logInt = logAntiderivative(b - r) - logAntiderivative(a - r);
    const double logMoment = xLogAntiderivative(b - r) - xLogAntiderivative(a - r) + (r - c) * logInt;
    const double principal = std::log(std::fabs(b - r)) - std::log(std::fabs(a - r));
    out.u0 += 2.0 * logInt;
    out.u1 += 2.0 * logMoment;
    out.f0 += -logInt / r - 2.0 * principal;
    out.f1 += -logMoment / r - 2.0 * ((b - a) + (r - c) * principal);
    return out;
}

double cellPotential(double r, double a, double b, int order)
{
    return cellIntegrals(r, a, b, order).u0;
}

double cellForce(double r, double a, double b, int order)
{
    return cellIntegrals(r, a, b, order).f0;
}

std::vector<double> cellSlopes(const RadialGrid& grid, std::span<const double> values)
{
    const std::size_t n = grid.size();
    std::vector<double> slope(n, 0.0);
    for (std::size_t j = 1; j + 1 < n; ++j)
        slope[j] = (values[j + 1] - values[j - 1]) / (grid.node(j + 1) - grid.node(j - 1));
    return slope;
}

// ---------------------------------------------------------------------------
// RadialGrid

std::string toString(GridMode mode)
{
    switch (mode) {
    case GridMode::uniform: return "uniform";
    case GridMode::geometric: return "geometric";
    case GridMode::custom: return "custom";
    }
    return "custom";
}

GridMode gridModeFromString(const std::string& name)
{
    if (name == "uniform")
        return GridMode::uniform;
    if (name == "geometric")
        return GridMode::geometric;
    throw DomainError("unknown grid mode '" + name + "' (expected uniform or geometric)");
}

RadialGrid::RadialGrid(GridMode mode, std::vector<double> edges) : mode_(mode), edges_(std::move(edges))
{
    if (edges_.size() < 2 || edges_.front() != 0.0)
        throw DomainError("radial grid edges must start at 0 and contain at least one cell");
    for (std::size_t j = 1; j < edges_.size(); ++j)
        if (!(edges_[j] > edges_[j - 1]) || !std::isfinite(edges_[j]))
            throw DomainError("radial grid edges must be finite and strictly increasing");
    const std::size_t n = edges_.size() - 1;
    nodes_.resize(n);
    weights_.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        nodes_[j] = 0.5 * (edges_[j] + edges_[j + 1]);
        weights_[j] = kPi * (edges_[j + 1] - edges_[j]) * (edges_[j + 1] + edges_[j]);
    }
}

RadialGrid::~RadialGrid() = default;

GridPtr RadialGrid::uniform(std::size_t n, double rMax)
{
    if (n < 2 || !(rMax > 0.0))
        throw DomainError("uniform grid needs n >= 2 and r_max > 0");
    std::vector<double> e(n + 1);
    for (std::size_t j = 0; j <= n; ++j)
        e[j] = rMax * double(j) / double(n);
    e[n] = rMax;
    return std::make_shared<const RadialGrid>(GridMode::uniform, std::move(e));
}

GridPtr RadialGrid::geometric(std::size_t n, double rMax, double rMin)
{
    if (n < 2 || !(rMax > 0.0))
        throw DomainError("geometric grid needs n >= 2 and r_max > 0");
    if (rMin <= 0.0)
        rMin = rMax * 1e-4;
    if (!(rMin < rMax))
        throw DomainError("geometric grid needs r_min < r_max");
    std::vector<double> e(n + 1);
    e[0] = 0.0;
    const double logRatio = std::log(rMax / rMin);
    for (std::size_t j = 1; j <= n; ++j)
        e[j] = rMin * std::exp(logRatio * double(j - 1) / double(n - 1));
    e[n] = rMax;
    return std::make_shared<const RadialGrid>(GridMode::geometric, std::move(e));
}

GridPtr RadialGrid::fromEdges(std::vector<double> edges)
{
    return std::make_shared<const RadialGrid>(GridMode::custom, std::move(edges));
}

GridPtr RadialGrid::fromJson(const nlohmann::json& j)
{
    const auto mode = gridModeFromString(j.at("mode").get<std::string>());
    const auto n = j.at("n").get<std::size_t>();
    const double rMax = j.at("r_max").get<double>();
    if (mode == GridMode::uniform)
        return uniform(n, rMax);
    return geometric(n, rMax, j.value("r_min", 0.0));
}

std::size_t RadialGrid::cellOf(double r) const
{
    auto it = std::upper_bound(edges_.begin(), edges_.end(), r);
    if (it == edges_.begin())
        return 0;
    return std::min(std::size_t(it - edges_.begin()) - 1, size() - 1);
}

nlohmann::json RadialGrid::toJson() const
{
    nlohmann::json j{{"mode", toString(mode_)}, {"n", size()}, {"r_max", rMax()}};
    if (mode_ == GridMode::geometric)
        j["r_min"] = rMin();
    if (mode_ == GridMode::custom)
        j["edges"] = edges_;
    return j;
}

bool RadialGrid::sameAs(const RadialGrid& other) const
{
    if (other.edges_.size() != edges_.size())
        return false;
    for (std::size_t j = 0; j < edges_.size(); ++j)
        if (std::fabs(edges_[j] - other.edges_[j]) > 1e-12 * edges_.back())
            return false;
    return true;
}

const PotentialOperator& RadialGrid::potentialOperator() const
{
    std::call_once(operatorOnce_, [this] { operator_ = std::make_unique<PotentialOperator>(*this); });
    return *operator_;
}

// ---------------------------------------------------------------------------
// PotentialOperator

PotentialOperator::PotentialOperator(const RadialGrid& grid) : n_(grid.size())
{
    const auto e = grid.edges();
    const auto r = grid.nodes();
    const auto w = grid.weights();
    std::vector<double> raw(n_ * n_, 0.0);
    f_.assign(n_ * n_, 0.0);
    std::vector<double> errs(n_, 0.0);

    // in-cell profile rho_j + slope_j (s - c_j), slope_j = (rho_{j+1} - rho_{j-1}) / (r_{j+1} - r_{j-1})
    std::vector<double> invSpan(n_, 0.0);
    for (std::size_t j = 1; j + 1 < n_; ++j)
        invSpan[j] = 1.0 / (r[j + 1] - r[j - 1]);

#pragma omp parallel for schedule(dynamic, 8)
    for (std::ptrdiff_t ii = 0; ii < std::ptrdiff_t(n_); ++ii) {
        const std::size_t i = std::size_t(ii);
        double* kRow = &raw[i * n_];
        double* fRow = &f_[i * n_];
        for (std::size_t j = 0; j < n_; ++j) {
            const auto c = cellIntegrals(r[i], e[j], e[j + 1]);
            kRow[j] += c.u0;
            fRow[j] += c.f0;
            if (invSpan[j] != 0.0) {
                kRow[j + 1] += c.u1 * invSpan[j];
                kRow[j - 1] -= c.u1 * invSpan[j];
                fRow[j + 1] += c.f1 * invSpan[j];
                fRow[j - 1] -= c.f1 * invSpan[j];
            }
        }
        const double coarse = cellPotential(r[i], e[i], e[i + 1]);
        const double fine = cellPotential(r[i], e[i], e[i + 1], 32);
        errs[i] = std::fabs(fine - coarse) / std::max(std::fabs(fine), 1e-300);
    }
    quadError_ = *std::max_element(errs.begin(), errs.end());

    ks_.resize(n_ * n_);
    for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t j = 0; j < n_; ++j)
            ks_[i * n_ + j] = 0.5 * (w[i] * raw[i * n_ + j] + w[j] * raw[j * n_ + i]) / w[i];
    k_ = std::move(raw);
}

namespace {

std::vector<double> applyDense(const std::vector<double>& m, std::size_t n, std::span<const double> x)
{
    if (x.size() != n)
        throw DomainError("potential operator: density size mismatch");
    std::vector<double> y(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = &m[i * n];
        double sum = 0.0;
        for (std::size_t j = 0; j < n; ++j)
            sum += row[j] * x[j];
        y[i] = sum;
    }
    return y;
}

}  // namespace

std::vector<double> PotentialOperator::potential(std::span<const double> rho) const
{
    return applyDense(k_, n_, rho);
}

std::vector<double> PotentialOperator::energyGradient(std::span<const double> rho) const
{
    return applyDense(ks_, n_, rho);
}

std::vector<double> PotentialOperator::force(std::span<const double> rho) const
{
    return applyDense(f_, n_, rho);
}

// ---------------------------------------------------------------------------
// RadialDensity

RadialDensity::RadialDensity(GridPtr grid, std::vector<double> values)
    : grid_(std::move(grid)), values_(std::move(values)), mass_(0.0), decreasing_(true)
{
    if (!grid_)
        throw DomainError("density without a grid");
    if (values_.size() != grid_->size())
        throw DomainError("density size does not match its grid");
    for (std::size_t i = 0; i < values_.size(); ++i) {
        if (!(values_[i] >= 0.0) || !std::isfinite(values_[i]))
            throw DomainError("density values must be finite and nonnegative");
        mass_ += grid_->weight(i) * values_[i];
        if (i > 0 && values_[i] > values_[i - 1])
            decreasing_ = false;
    }
}

RadialDensity RadialDensity::zero(GridPtr grid)
{
    const std::size_t n = grid->size();
    return RadialDensity(std::move(grid), std::vector<double>(n, 0.0));
}

RadialDensity RadialDensity::fromTailMass(GridPtr grid, const std::function<double(double)>& tail)
{
    const auto e = grid->edges();
    std::vector<double> v(grid->size());
    double outer = tail(e[0]);
    for (std::size_t j = 0; j < v.size(); ++j) {
        const double next = tail(e[j + 1]);
        v[j] = std::max(0.0, (outer - next) / grid->weight(j));
        outer = next;
    }
    return RadialDensity(std::move(grid), std::move(v));
}

RadialDensity RadialDensity::fromFunction(GridPtr grid, const std::function<double(double)>& rho)
{
    const auto e = grid->edges();
    std::vector<double> v(grid->size());
    for (std::size_t j = 0; j < v.size(); ++j) {
        double m = 0.0;
        plainQuadrature([&](double s, double wt) { m += wt * rho(s) * kTwoPi * s; }, e[j], e[j + 1], 16);
        v[j] = std::max(0.0, m / grid->weight(j));
    }
    return RadialDensity(std::move(grid), std::move(v));
}

RadialDensity RadialDensity::disk(GridPtr grid, double sigma, double radius)
{
    return fromTailMass(std::move(grid), [=](double r) {
        return r >= radius ? 0.0 : sigma * kPi * (radius - r) * (radius + r);
    });
}

double RadialDensity::supportRadius() const
{
    for (std::size_t i = values_.size(); i-- > 0;)
        if (values_[i] > 0.0)
            return grid_->edges()[i + 1];
    return 0.0;
}

RadialDensity RadialDensity::scaled(double c) const
{
    std::vector<double> v(values_);
    for (auto& x : v)
        x *= c;
    return RadialDensity(grid_, std::move(v));
}

RadialDensity RadialDensity::plus(const RadialDensity& other) const
{
    requireSameGrid(*grid_, other.grid());
    std::vector<double> v(values_);
    for (std::size_t i = 0; i < v.size(); ++i)
        v[i] += other[i];
    return RadialDensity(grid_, std::move(v));
}

void RadialDensity::writeCsv(const std::filesystem::path& path, const std::string& comment) const
{
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < values_.size(); ++i)
        rows.push_back({grid_->node(i), values_[i]});
    csv::write(path, {"r", "value"}, rows, comment);
}

RadialDensity RadialDensity::readCsv(const std::filesystem::path& path, GridPtr grid)
{
    const auto table = csv::read(path);
    const auto r = table.columnValues("r");
    auto v = table.columnValues("value");
    if (r.size() != grid->size())
        throw DomainError("density CSV row count does not match the grid");
    for (std::size_t i = 0; i < r.size(); ++i)
        if (std::fabs(r[i] - grid->node(i)) > 1e-9 * grid->rMax())
            throw DomainError("density CSV radii do not match the grid nodes");
    return RadialDensity(std::move(grid), std::move(v));
}

void RadialPotential::writeCsv(const std::filesystem::path& path, const std::string& comment) const
{
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < values.size(); ++i)
        rows.push_back({grid->node(i), values[i]});
    csv::write(path, {"r", "value"}, rows, comment);
}

// ---------------------------------------------------------------------------
// potential, energy, norms

double potentialAt(const RadialDensity& rho, double r)
{
    if (!(r >= 0.0))
        throw DomainError("potentialAt: negative radius");
    const auto e = rho.grid().edges();
    const auto slope = cellSlopes(rho.grid(), rho.values());
    double u = 0.0;
    for (std::size_t j = 0; j < rho.size(); ++j) {
        if (rho[j] == 0.0 && slope[j] == 0.0)
            continue;
        const auto c = cellIntegrals(r, e[j], e[j + 1]);
        u += rho[j] * c.u0 + slope[j] * c.u1;
    }
    return u;
}

double forceAt(const RadialDensity& rho, double r)
{
    if (!(r >= 0.0))
        throw DomainError("forceAt: negative radius");
    const auto e = rho.grid().edges();
    const auto slope = cellSlopes(rho.grid(), rho.values());
    double g = 0.0;
    for (std::size_t j = 0; j < rho.size(); ++j) {
        if (rho[j] == 0.0 && slope[j] == 0.0)
            continue;
        const auto c = cellIntegrals(r, e[j], e[j + 1]);
        g += rho[j] * c.f0 + slope[j] * c.f1;
    }
    return g;
}

RadialPotential diskPotential(const RadialDensity& rho, double tol)
{
    const auto& op = rho.grid().potentialOperator();
    if (op.singularQuadratureError() > tol)
        std::cerr << "warning: singular-cell quadrature error " << op.singularQuadratureError()
                  << " exceeds tolerance " << tol << " (grid too coarse)\n";
    return RadialPotential{rho.gridPtr(), op.potential(rho.values()), op.force(rho.values())};
}

double coulombEnergy(const RadialDensity& rho, std::span<const double> potentialOfSigma)
{
    if (potentialOfSigma.size() != rho.size())
        throw DomainError("coulombEnergy: potential size mismatch");
    double sum = 0.0;
    for (std::size_t i = 0; i < rho.size(); ++i)
        sum += rho.grid().weight(i) * rho[i] * potentialOfSigma[i];
    return -0.5 * sum;
}

double coulombEnergy(const RadialDensity& rho, const RadialDensity& sigma)
{
    requireSameGrid(rho.grid(), sigma.grid());
    return coulombEnergy(rho, rho.grid().potentialOperator().energyGradient(sigma.values()));
}

double lpNorm(std::span<const double> values, std::span<const double> weights, double p)
{
    if (!(p >= 1.0))
        throw DomainError("lp norm needs p >= 1");
    double sum = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i)
        if (values[i] > 0.0)
            sum += weights[i] * std::pow(values[i], p);
    return std::pow(sum, 1.0 / p);
}

double lpNorm(const RadialDensity& rho, double p)
{
    return lpNorm(rho.values(), rho.grid().weights(), p);
}

}  // namespace flatvp
