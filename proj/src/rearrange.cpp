#include "flatvp/rearrange.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "flatvp/csv.hpp"

namespace flatvp {

CellProfile::CellProfile(std::vector<Cell> cells) : cells_(std::move(cells))
{
    for (const auto& c : cells_) {
        if (!(c.area > 0.0) || !std::isfinite(c.area))
            throw DomainError("cell profile: areas must be positive and finite");
        if (!(c.value >= 0.0) || !std::isfinite(c.value))
            throw DomainError("cell profile: values must be nonnegative and finite");
    }
}

CellProfile CellProfile::fromDensity(const RadialDensity& rho)
{
    std::vector<Cell> cells(rho.size());
    for (std::size_t i = 0; i < rho.size(); ++i)
        cells[i] = {rho.grid().weight(i), rho[i]};
    return CellProfile(std::move(cells));
}

double CellProfile::totalArea() const
{
    double a = 0.0;
    for (const auto& c : cells_)
        a += c.area;
    return a;
}

double CellProfile::mass() const
{
    double m = 0.0;
    for (const auto& c : cells_)
        m += c.area * c.value;
    return m;
}

double CellProfile::lpNorm(double p) const
{
    if (!(p >= 1.0))
        throw DomainError("lp norm needs p >= 1");
    double s = 0.0;
    for (const auto& c : cells_)
        if (c.value > 0.0)
            s += c.area * std::pow(c.value, p);
    return std::pow(s, 1.0 / p);
}

std::vector<double> CellProfile::edges() const
{
    std::vector<double> e(cells_.size() + 1, 0.0);
    double cumulative = 0.0;
    for (std::size_t k = 0; k < cells_.size(); ++k) {
        cumulative += cells_[k].area;
        e[k + 1] = std::sqrt(cumulative / kPi);
    }
    return e;
}

RadialDensity CellProfile::toDensity() const
{
    std::vector<double> v(cells_.size());
    for (std::size_t k = 0; k < cells_.size(); ++k)
        v[k] = cells_[k].value;
    return RadialDensity(RadialGrid::fromEdges(edges()), std::move(v));
}

void CellProfile::writeCsv(const std::filesystem::path& path, const std::string& comment) const
{
    std::vector<std::vector<double>> rows;
    for (const auto& c : cells_)
        rows.push_back({c.area, c.value});
    csv::write(path, {"area", "value"}, rows, comment);
}

CellProfile CellProfile::readCsv(const std::filesystem::path& path)
{
    const auto t = csv::read(path);
    const auto a = t.columnValues("area"), v = t.columnValues("value");
    std::vector<Cell> cells(a.size());
    for (std::size_t k = 0; k < a.size(); ++k)
        cells[k] = {a[k], v[k]};
    return CellProfile(std::move(cells));
}

CellProfile rearrangeCells(const CellProfile& profile)
{
    auto cells = profile.cells();
    std::stable_sort(cells.begin(), cells.end(), [](const auto& x, const auto& y) { return x.value > y.value; });
    return CellProfile(std::move(cells));
}

RadialDensity symmetricDecreasingRearrangement(const CellProfile& profile)
{
    return rearrangeCells(profile).toDensity();
}

RadialDensity symmetricDecreasingRearrangement(const RadialDensity& rho)
{
    return symmetricDecreasingRearrangement(CellProfile::fromDensity(rho));
}

RadialDensity binToGrid(const RadialDensity& source, GridPtr target)
{
    const auto se = source.grid().edges();
    const auto te = target->edges();
    std::vector<double> mass(target->size(), 0.0);
    std::size_t t = 0;
    for (std::size_t j = 0; j < source.size(); ++j) {
        const double v = source[j];
        if (v == 0.0)
            continue;
        double a = se[j];
        const double b = se[j + 1];
        while (t < target->size() && te[t + 1] <= a)
            ++t;
        std::size_t k = t;
        while (a < b) {
            if (k >= target->size())
                throw DomainError("binToGrid: source mass beyond the target grid");
            const double hi = std::min(b, te[k + 1]);
            mass[k] += v * kPi * (hi - a) * (hi + a);
            a = hi;
            if (a < b)
                ++k;
        }
    }
    std::vector<double> values(mass.size());
    for (std::size_t k = 0; k < mass.size(); ++k)
        values[k] = mass[k] / target->weight(k);
    return RadialDensity(std::move(target), std::move(values));
}

GridPtr refinedAnnulusGrid(const CellProfile& profile, std::size_t resolution)
{
    const auto e = profile.edges();
    const std::size_t per = std::max<std::size_t>(1, resolution / std::max<std::size_t>(1, profile.size()));
    std::vector<double> edges{0.0};
    for (std::size_t k = 0; k + 1 < e.size(); ++k)
        for (std::size_t s = 1; s <= per; ++s)
            edges.push_back(s == per ? e[k + 1] : e[k] + (e[k + 1] - e[k]) * double(s) / double(per));
    return RadialGrid::fromEdges(std::move(edges));
}

namespace {

double selfEnergyOnRefinedGrid(const CellProfile& profile, std::size_t resolution)
{
    const auto rho = profile.toDensity();
    const auto grid = refinedAnnulusGrid(profile, resolution);
    const auto fine = binToGrid(rho, grid);
    return coulombEnergy(fine, fine);
}

}  // namespace

RieszGain rieszGain(const CellProfile& profile, double tol, std::size_t resolution)
{
    const auto sorted = rearrangeCells(profile);
    RieszGain g{selfEnergyOnRefinedGrid(profile, resolution), selfEnergyOnRefinedGrid(sorted, resolution)};
    if (g.gain() >= -tol)
        return g;
    // the irregular annulus grid of rho* carries an O(h^2) error that can mask a zero gain
    const std::size_t fine = 2 * std::max(resolution, profile.size());
    RieszGain f{selfEnergyOnRefinedGrid(profile, fine), selfEnergyOnRefinedGrid(sorted, fine)};
    f.quadratureError = std::fabs(f.original - g.original) + std::fabs(f.rearranged - g.rearranged);
    g = f;
    if (g.gain() < -std::max(tol, g.quadratureError)) {
        std::ostringstream msg;
        msg << "Riesz rearrangement inequality violated: D(rho,rho) = " << g.original
            << ", D(rho*,rho*) = " << g.rearranged << " (tolerance " << std::max(tol, g.quadratureError) << ")";
        throw PropertyViolation(msg.str());
    }
    return g;
}

CompositionCheck compositionCheck(const ReducedProfile& psi, const CellProfile& profile)
{
    auto integral = [&psi](const CellProfile& p) {
        double s = 0.0;
        for (const auto& c : p.cells())
            s += c.area * psi.psi(c.value);
        return s;
    };
    return {integral(profile), integral(rearrangeCells(profile))};
}

double externalInteraction(const ExternalDensity& ext, const CellProfile& profile)
{
    const auto e = profile.edges();
    double sum = 0.0;
    for (std::size_t k = 0; k < profile.size(); ++k) {
        const double v = profile.cells()[k].value;
        if (v == 0.0)
            continue;
        sum += v * math::gaussLegendre([&ext](double r) { return ext.potential(r) * kTwoPi * r; }, e[k], e[k + 1], 16);
    }
    return -0.5 * sum;
}

}  // namespace flatvp
