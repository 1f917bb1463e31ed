#pragma once

// Casimir integrands: the microscopic profile Phi(f) on phase-space densities and
// the reduced profile Psi(rho) on spatial densities obtained by minimizing the
// kinetic-plus-Casimir cost over planar velocity distributions of fixed mass.

#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "flatvp/numerics.hpp"

namespace flatvp {

/// Convex Casimir integrand Phi with Phi(0) = Phi'(0) = 0.
/// Either the power law Phi(f) = f^(1+1/k) or a table of (f, Phi'(f)) pairs.
/// Immutable; all evaluators throw DomainError on negative arguments.
class MicroProfile {
public:
    enum class Kind { polytrope, tabulated };

    /// Power-law profile Phi(f) = f^(1+1/k). Accepts 0 < k <= 1; k = 1 lies
    /// outside the existence theorem and is flagged by outsideTheoremRange().
    static MicroProfile polytrope(double k);

    /// Tabulated profile from strictly increasing (f, Phi'(f)) pairs starting at (0,0).
    /// Phi' is interpolated by a monotone cubic, Phi by its exact integral.
    static MicroProfile tabulated(std::vector<double> f, std::vector<double> phiPrime);

    /// Reads a CSV with header `f,phi_prime`.
    static MicroProfile fromCsv(const std::filesystem::path& path);

    Kind kind() const;
    /// Growth exponent k (Phi ~ f^(1+1/k)); fitted from the table tail when tabulated.
    double exponent() const { return k_; }
    bool outsideTheoremRange() const { return !(k_ < 1.0); }

    double phi(double f) const;
    double phiPrime(double f) const;
    double phiSecond(double f) const;
    double phiPrimeInverse(double y) const;
    /// Convex conjugate Phi*(lambda) = sup_{f >= 0} (lambda f - Phi(f)).
    double conjugate(double lambda) const;

    std::string describe() const;
    /// Interpolant of Phi' for tabulated profiles, nullptr for polytropes.
    const math::MonotoneCubic* table() const;

private:
    struct Polytrope {
        double k;
        double conjugateCoeff;  // k^k (k+1)^-(k+1)
    };
    struct Tabulated {
        std::shared_ptr<const math::MonotoneCubic> phiPrime;
    };

    explicit MicroProfile(std::variant<Polytrope, Tabulated> impl, double k)
        : impl_(std::move(impl)), k_(k) {}

    std::variant<Polytrope, Tabulated> impl_;
    double k_;
};

/// Reduced integrand Psi(rho) = inf { int |v|^2/2 g + Phi(g) dv : int g dv = rho }.
/// Built from the identities (Psi')^-1(lambda) = 2 pi Phi*(lambda) and
/// Psi*(lambda) = 2 pi int_0^lambda Phi*(s) ds.
class ReducedProfile {
public:
    explicit ReducedProfile(MicroProfile micro);

    /// n = k + 1.
    double n() const { return micro_.exponent() + 1.0; }
    const MicroProfile& micro() const { return micro_; }

    /// Psi(rho) = int_0^rho Psi'(s) ds, evaluated after the substitution s = (Psi')^-1(lambda).
    double psi(double rho) const;
    /// Psi'(rho), by bisection on (Psi')^-1 over a bracket grown from [0, 1].
    double psiPrime(double rho) const;
    /// (Psi')^-1(lambda) = 2 pi Phi*(lambda); zero for lambda <= 0.
    double psiPrimeInverse(double lambda) const;
    /// Psi*(lambda) = 2 pi int_0^lambda Phi*(s) ds.
    double conjugate(double lambda) const;
    /// d/dlambda (Psi')^-1; zero for lambda <= 0.
    double psiPrimeInverseDerivative(double lambda) const;

private:
    MicroProfile micro_;
};

/// reduce_profile: Phi -> Psi.
inline ReducedProfile reduceProfile(const MicroProfile& micro) { return ReducedProfile(micro); }

/// sup_{x >= 0} (lambda x - F(x)) for a convex F with F(0) = 0 and superlinear growth,
/// by geometric bracket growth and Brent maximization. Throws ConvergenceError when
/// no bracket is found (F not superlinear, e.g. a malformed table).
double legendreTransform(const std::function<double(double)>& convex, double lambda);
double legendreTransform(const MicroProfile& profile, double lambda);
double legendreTransform(const ReducedProfile& profile, double lambda);

/// The minimizing velocity distribution at local density rho:
/// g(v) = (Phi')^-1((lambda - |v|^2/2)_+), lambda = Psi'(rho).
class VelocityProfile {
public:
    VelocityProfile(const ReducedProfile& reduced, double rho);

    double density() const { return rho_; }
    double cutoff() const { return lambda_; }
    /// Radius of the velocity support, sqrt(2 lambda).
    double maxSpeed() const;
    double operator()(double speed) const;

    /// 2 pi int g(v) v dv, by radial quadrature.
    double mass() const;
    /// I(g) = 2 pi int (v^2/2 g + Phi(g)) v dv.
    double cost() const;
    /// Kinetic and Casimir parts of the cost separately.
    double kineticPart() const;
    double casimirPart() const;

private:
    const MicroProfile* micro_;
    double rho_;
    double lambda_;
};

inline VelocityProfile optimalVelocityProfile(const ReducedProfile& reduced, double rho)
{
    return VelocityProfile(reduced, rho);
}

/// d/dlambda (Psi')^-1 = 2 pi int_0^sqrt(2 lambda) r dr / Phi''((Phi')^-1(lambda - r^2/2)).
/// Evaluated after the substitution s = lambda - r^2/2. Throws ConvergenceError when
/// the integral diverges.
double psiInverseDerivative(const MicroProfile& micro, double lambda);

}  // namespace flatvp
