#pragma once

// Axisymmetric planar fields on a radial grid and the in-plane Newtonian
// potential U(r) = -int rho(y)/|x-y| dy of a surface density.
//
// Densities are cell averages over annuli [e_j, e_{j+1}). Inside a cell the field
// is rho_j + slope_j (s - c_j), with c_j the area centroid (so the cell mass is
// exactly w_j rho_j) and slope_j a central difference of neighbouring averages.
// Potentials are evaluated at the cell midpoints. For a ring of radius s the
// kernel reduces to H(r,s) = -4 s K(m)/(r+s), m = 4rs/(r+s)^2.

#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "flatvp/numerics.hpp"

namespace flatvp {

class PotentialOperator;

enum class GridMode { uniform, geometric, custom };

std::string toString(GridMode mode);
GridMode gridModeFromString(const std::string& name);

/// Radial cells [e_j, e_{j+1}), j = 0..n-1, with e_0 = 0. Nodes are cell midpoints
/// and weights the exact annulus areas, so sum_j w_j g(r_j) approximates
/// int_0^inf g(r) 2 pi r dr and reproduces disk areas exactly at cell edges.
/// Always handled through GridPtr; the potential operator is built lazily once.
class RadialGrid {
public:
    /// Edges e_j = j r_max / n.
    static std::shared_ptr<const RadialGrid> uniform(std::size_t n, double rMax);
    /// e_1 = r_min, then geometric up to r_max. r_min <= 0 selects r_max * 1e-4.
    static std::shared_ptr<const RadialGrid> geometric(std::size_t n, double rMax, double rMin = 0.0);
    /// Arbitrary strictly increasing edges starting at 0.
    static std::shared_ptr<const RadialGrid> fromEdges(std::vector<double> edges);
    /// {mode, n, r_max[, r_min]}.
    static std::shared_ptr<const RadialGrid> fromJson(const nlohmann::json& j);

    RadialGrid(GridMode mode, std::vector<double> edges);
    RadialGrid(const RadialGrid&) = delete;
    RadialGrid& operator=(const RadialGrid&) = delete;
    ~RadialGrid();

    GridMode mode() const { return mode_; }
    std::size_t size() const { return nodes_.size(); }
    double rMax() const { return edges_.back(); }
    /// Outer edge of the innermost cell.
    double rMin() const { return edges_[1]; }
    std::span<const double> nodes() const { return nodes_; }
    std::span<const double> edges() const { return edges_; }
    std::span<const double> weights() const { return weights_; }
    double node(std::size_t i) const { return nodes_[i]; }
    double weight(std::size_t i) const { return weights_[i]; }

    /// Index of the cell containing r (clamped to the last cell).
    std::size_t cellOf(double r) const;
    nlohmann::json toJson() const;
    bool sameAs(const RadialGrid& other) const;

    /// Shared singular-kernel matrices for this grid (built on first use, thread-safe).
    const PotentialOperator& potentialOperator() const;

private:
    GridMode mode_;
    std::vector<double> edges_, nodes_, weights_;
    mutable std::once_flag operatorOnce_;
    mutable std::unique_ptr<PotentialOperator> operator_;
};

using GridPtr = std::shared_ptr<const RadialGrid>;

/// Nonnegative cell-average density on a grid.
class RadialDensity {
public:
    RadialDensity(GridPtr grid, std::vector<double> values);

    static RadialDensity zero(GridPtr grid);
    /// Exact cell averages from the mass outside radius r (tail(0) = total mass).
    static RadialDensity fromTailMass(GridPtr grid, const std::function<double(double)>& tail);
    /// Cell averages of a pointwise density by Gauss-Legendre quadrature on each cell.
    static RadialDensity fromFunction(GridPtr grid, const std::function<double(double)>& rho);
    /// Uniform disk of surface density sigma and radius R.
    static RadialDensity disk(GridPtr grid, double sigma, double radius);

    const RadialGrid& grid() const { return *grid_; }
    const GridPtr& gridPtr() const { return grid_; }
    std::span<const double> values() const { return values_; }
    double operator[](std::size_t i) const { return values_[i]; }
    std::size_t size() const { return values_.size(); }

    double mass() const { return mass_; }
    /// Values nonincreasing in radius (checked at construction).
    bool symmetricDecreasing() const { return decreasing_; }
    /// Outer edge of the last cell with a positive value (0 for the zero density).
    double supportRadius() const;

    RadialDensity scaled(double c) const;
    RadialDensity plus(const RadialDensity& other) const;

    /// CSV `r,value` (node radius, cell value).
    void writeCsv(const std::filesystem::path& path, const std::string& comment = {}) const;
    static RadialDensity readCsv(const std::filesystem::path& path, GridPtr grid);

private:
    GridPtr grid_;
    std::vector<double> values_;
    double mass_;
    bool decreasing_;
};

/// Potential values at the grid nodes and their radial derivative.
struct RadialPotential {
    GridPtr grid;
    std::vector<double> values;
    std::vector<double> derivative;

    void writeCsv(const std::filesystem::path& path, const std::string& comment = {}) const;
};

/// Dense matrices mapping cell densities to node potentials and node forces.
/// potential() gives point values U(r_i) = (K rho)_i. energyGradient() applies the
/// weighted symmetrization Ks = (K + W^-1 K^T W)/2: the discrete Coulomb energy
/// -1/2 rho^T W K rho is then an exact symmetric bilinear form whose gradient is
/// Ks rho. The two differ by O(h^2).
class PotentialOperator {
public:
    explicit PotentialOperator(const RadialGrid& grid);

    std::size_t size() const { return n_; }
    double potentialEntry(std::size_t i, std::size_t j) const { return k_[i * n_ + j]; }
    double gradientEntry(std::size_t i, std::size_t j) const { return ks_[i * n_ + j]; }
    double forceEntry(std::size_t i, std::size_t j) const { return f_[i * n_ + j]; }

    std::vector<double> potential(std::span<const double> rho) const;
    std::vector<double> energyGradient(std::span<const double> rho) const;
    std::vector<double> force(std::span<const double> rho) const;

    /// Largest change of a singular-cell integral between 20- and 32-point rules.
    double singularQuadratureError() const { return quadError_; }

private:
    std::size_t n_;
    std::vector<double> k_, ks_, f_;
    double quadError_ = 0.0;
};

/// Ring kernel H(r,s) = -4 s K(m)/(r+s) and its r-derivative (for tests and oracles).
double ringKernel(double r, double s);
double ringKernelDerivative(double r, double s);

/// Integrals of the kernel over a cell [a,b] against 1 and (s - c), c the area centroid.
struct CellIntegrals {
    double u0 = 0.0, u1 = 0.0;  // potential
    double f0 = 0.0, f1 = 0.0;  // d/dr
};
CellIntegrals cellIntegrals(double r, double a, double b, int order = 20);
double cellCentroid(double a, double b);
/// Central-difference slopes used for the in-cell profile (zero in the first and last cell).
std::vector<double> cellSlopes(const RadialGrid& grid, std::span<const double> values);

/// int_a^b H(r,s) ds with the logarithmic singularity at s = r subtracted and
/// integrated analytically.
double cellPotential(double r, double a, double b, int order = 20);
/// int_a^b dH/dr(r,s) ds (principal value when r lies inside the cell).
double cellForce(double r, double a, double b, int order = 20);

/// Potential and its derivative of the grid density at an arbitrary radius.
double potentialAt(const RadialDensity& rho, double r);
double forceAt(const RadialDensity& rho, double r);

/// U and dU/dr at the grid nodes. Warns on stderr when the singular-cell
/// quadrature error estimate exceeds tol (grid too coarse).
RadialPotential diskPotential(const RadialDensity& rho, double tol = 1e-8);

/// D(rho, sigma) = -1/2 sum_i w_i rho_i (Ks sigma)_i, symmetric and bilinear.
/// Throws DomainError on grid mismatch.
double coulombEnergy(const RadialDensity& rho, const RadialDensity& sigma);
/// Same with a precomputed potential of sigma on the grid of rho.
double coulombEnergy(const RadialDensity& rho, std::span<const double> potentialOfSigma);

/// Sharp planar HLS constant: iint rho(x) rho(y)/|x-y| <= C ||rho||_{4/3}^2,
/// i.e. 2 D(rho,rho) <= C ||rho||_{4/3}^2.
inline constexpr double kHlsConstant = 2.0 * 1.7724538509055160273;  // 2 sqrt(pi)

/// (sum_i w_i rho_i^p)^(1/p), p >= 1.
double lpNorm(const RadialDensity& rho, double p);
double lpNorm(std::span<const double> values, std::span<const double> weights, double p);

/// External surface density, strictly symmetric decreasing, with potential and
/// force available at any radius.
class ExternalDensity {
public:
    enum class Kind { none, kuzmin, gaussian, tabulated };

    static ExternalDensity none();
    /// rho = M a / (2 pi (r^2+a^2)^(3/2)), U = -M / sqrt(r^2+a^2).
    static ExternalDensity kuzmin(double mass, double a);
    /// rho = M/(2 pi w^2) exp(-r^2/(2 w^2)), U = -M sqrt(pi/2)/w exp(-x) I0(x), x = r^2/(4 w^2).
    static ExternalDensity gaussian(double mass, double width);
    /// Piecewise-linear density through (r_k, rho_k), r_0 = 0, zero past the last knot.
    /// Positive values must be strictly decreasing.
    static ExternalDensity tabulated(std::vector<double> r, std::vector<double> rho);
    static ExternalDensity fromCsv(const std::filesystem::path& path);
    /// {"kind": ..., "params": {...}}.
    static ExternalDensity fromJson(const nlohmann::json& j);

    Kind kind() const { return kind_; }
    std::string name() const;
    nlohmann::json toJson() const;

    double mass() const { return mass_; }
    double density(double r) const;
    /// Mass outside radius r.
    double tailMass(double r) const;
    double potential(double r) const;
    /// dU/dr >= 0.
    double force(double r) const;

    RadialDensity sampled(GridPtr grid) const;
    std::vector<double> potentialOn(const RadialGrid& grid) const;

    /// ||rho_ext||_q on the grid for the exponents q = p/(p-1) a continuity argument may use.
    std::vector<std::pair<double, double>> qNormDiagnostics(GridPtr grid) const;

private:
    ExternalDensity() = default;
    void buildPotentialTable();

    Kind kind_ = Kind::none;
    double mass_ = 0.0;
    double scale_ = 1.0;
    nlohmann::json params_ = nlohmann::json::object();
    std::vector<double> knotsR_, knotsRho_, knotsTail_;
    std::vector<double> tableR_, tableU_, tableF_;
};

/// make_external(kind, params).
ExternalDensity makeExternal(const std::string& kind, const nlohmann::json& params);

}  // namespace flatvp
