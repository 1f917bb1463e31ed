#pragma once

// Low-level numerical helpers shared by all modules: complete elliptic
// integrals, bracketing root finders, quadrature wrappers and a monotone
// piecewise-cubic interpolant.

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace flatvp {

/// Raised when an argument lies outside the mathematical domain of an evaluator.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Raised when an iterative numerical procedure fails to converge.
class ConvergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when a property that holds as a theorem fails numerically
/// (signals a quadrature or resolution problem, not bad input).
class PropertyViolation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

namespace math {

/// Complete elliptic integral of the first kind K(m) = int_0^{pi/2} dt / sqrt(1 - m sin^2 t),
/// parametrized by the complementary parameter m1 = 1 - m so that the logarithmic
/// regime m -> 1 keeps full relative precision. Arithmetic-geometric mean iteration.
double ellipticK(double m1);

/// Complete elliptic integral of the second kind E(m), same parametrization as ellipticK.
double ellipticE(double m1);

/// K(m) and E(m) from a single AGM pass.
std::pair<double, double> ellipticKE(double m1);

/// K(m) - (ln 4 - 0.5 ln m1): the bounded remainder after removing the
/// logarithmic singularity at m -> 1. Finite at m1 = 0 (value 0).
double ellipticKRegular(double m1);

/// Bisection for a nondecreasing function: returns x in [lo, hi] with f(x) ~ target.
/// Stops when hi - lo <= absTol + relTol * |hi| or after maxIter halvings.
template <class F>
double bisectIncreasing(F&& f, double target, double lo, double hi,
                        double absTol, double relTol, int maxIter = 400)
{
    for (int it = 0; it < maxIter; ++it) {
        if (hi - lo <= absTol + relTol * std::fabs(hi))
            break;
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi)
            break;
        if (f(mid) < target)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

/// Adaptive tanh-sinh quadrature on a finite interval (tolerates integrable endpoint
/// singularities). Throws ConvergenceError if the result is not finite.
double integrateEndpointSingular(const std::function<double(double)>& f, double a, double b,
                                 double relTol = 1e-13, double* errorEstimate = nullptr);

/// Fixed-order Gauss-Legendre rule on [a,b] (order 8, 16 or 32).
double gaussLegendre(const std::function<double(double)>& f, double a, double b, int order = 16);

/// Gauss-Legendre nodes and weights on [-1,1] for the given order (8, 16, 20 or 32).
struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};
const QuadratureRule& gaussLegendreRule(int order);

/// Monotone piecewise-cubic Hermite interpolant (Fritsch-Carlson slopes).
/// Knots must be strictly increasing; values must be monotone for the shape
/// guarantee. Beyond the last knot the interpolant continues linearly with the
/// end slope; it is undefined below the first knot.
class MonotoneCubic {
public:
    MonotoneCubic() = default;
    MonotoneCubic(std::vector<double> x, std::vector<double> y);

    double operator()(double x) const;
    double derivative(double x) const;
    /// Exact integral of the interpolant from x.front() to x.
    double integral(double x) const;
    /// Inverse of an increasing interpolant: the x with value y (y >= y.front()).
    double inverse(double y) const;

    std::span<const double> knots() const { return xs_; }
    std::span<const double> values() const { return ys_; }

private:
    std::size_t segment(double x) const;
    std::vector<double> xs_, ys_, slopes_, prefix_;
};

/// Linear interpolation on strictly increasing nodes; constant extension on both ends.
double interpLinear(std::span<const double> x, std::span<const double> y, double at);

}  // namespace math
}  // namespace flatvp
