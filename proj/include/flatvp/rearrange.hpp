#pragma once

// Symmetric decreasing rearrangement of radial simple functions and the
// rearrangement inequalities for the Coulomb and Casimir terms.

#include <filesystem>
#include <vector>

#include "flatvp/profiles.hpp"
#include "flatvp/radial_field.hpp"

namespace flatvp {

/// A simple function on the plane given as (area, value) pieces. Geometrically the
/// pieces are concentric annuli laid out from the origin in list order, which
/// makes the profile radial (but not necessarily decreasing).
class CellProfile {
public:
    struct Cell {
        double area;
        double value;
    };

    explicit CellProfile(std::vector<Cell> cells);
    static CellProfile fromDensity(const RadialDensity& rho);

    const std::vector<Cell>& cells() const { return cells_; }
    std::size_t size() const { return cells_.size(); }
    double totalArea() const;
    double mass() const;
    double lpNorm(double p) const;

    /// Edges of the annuli, sqrt(cumulative area / pi).
    std::vector<double> edges() const;
    /// The profile as a density on its own annulus grid.
    RadialDensity toDensity() const;

    void writeCsv(const std::filesystem::path& path, const std::string& comment = {}) const;
    static CellProfile readCsv(const std::filesystem::path& path);

private:
    std::vector<Cell> cells_;
};

/// rho*: cells sorted by value (descending, stable) and packed into annuli from the origin.
RadialDensity symmetricDecreasingRearrangement(const CellProfile& profile);
/// Rearrangement of a grid density, returned on its own annulus grid.
RadialDensity symmetricDecreasingRearrangement(const RadialDensity& rho);
/// Cell-level rearrangement (values nonincreasing, same multiset of cells).
CellProfile rearrangeCells(const CellProfile& profile);

/// Conservative binning of a density onto another grid: each target cell receives
/// the exact mass of the source cells it overlaps. Throws DomainError when source
/// mass lies beyond the target grid.
RadialDensity binToGrid(const RadialDensity& source, GridPtr target);

struct RieszGain {
    double original;    // D(rho, rho)
    double rearranged;  // D(rho*, rho*)
    double quadratureError = 0.0;  // set only when a refinement was needed
    double gain() const { return rearranged - original; }
};

/// Both self-energies, each evaluated on the profile's own annulus grid refined so
/// that it has about `resolution` cells. A gain below -tol is recomputed on a grid
/// twice as fine; the change of the two energies between the resolutions is the
/// quadrature error estimate, and PropertyViolation is thrown only when the fine
/// gain is below -max(tol, error).
RieszGain rieszGain(const CellProfile& profile, double tol = 1e-6, std::size_t resolution = 256);

/// Annulus grid of the profile with every annulus split into equal-width sub-cells.
GridPtr refinedAnnulusGrid(const CellProfile& profile, std::size_t resolution);

struct CompositionCheck {
    double original;    // int Psi(rho)
    double rearranged;  // int Psi(rho*)
    double gap() const { return original - rearranged; }
    bool holds(double tol) const { return rearranged <= original + tol; }
};

CompositionCheck compositionCheck(const ReducedProfile& psi, const CellProfile& profile);

/// D(rho_ext, rho) = -1/2 int rho U_ext with the annulus integrals done by
/// Gauss-Legendre on the closed-form external potential.
double externalInteraction(const ExternalDensity& ext, const CellProfile& profile);

}  // namespace flatvp
