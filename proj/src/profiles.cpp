#include "flatvp/profiles.hpp"

#include <algorithm>
#include <boost/math/tools/minima.hpp>
#include <sstream>

#include "flatvp/csv.hpp"

namespace flatvp {

namespace {

void requireNonNegative(double x, const char* what)
{
    if (!(x >= 0.0))
        throw DomainError(std::string(what) + ": negative or NaN argument");
}

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

}  // namespace

// ---------------------------------------------------------------------------
// MicroProfile

MicroProfile MicroProfile::polytrope(double k)
{
    if (!(k > 0.0 && k <= 1.0))
        throw DomainError("polytrope exponent k must lie in (0,1], got " + std::to_string(k));
    const double coeff = std::pow(k, k) * std::pow(k + 1.0, -(k + 1.0));
    return MicroProfile(Polytrope{k, coeff}, k);
}

MicroProfile MicroProfile::tabulated(std::vector<double> f, std::vector<double> phiPrime)
{
    if (f.size() < 3 || f.size() != phiPrime.size())
        throw DomainError("tabulated profile needs at least three (f, phi_prime) rows");
    if (f.front() != 0.0 || phiPrime.front() != 0.0)
        throw DomainError("tabulated profile must start with the row 0,0");
    for (std::size_t i = 1; i < f.size(); ++i)
        if (!(f[i] > f[i - 1]) || !(phiPrime[i] > phiPrime[i - 1]))
            throw DomainError("tabulated profile columns must be strictly increasing (row " + std::to_string(i) + ")");

    // growth exponent from the log-slope of Phi' over the last segment: Phi' ~ f^(1/k)
    const std::size_t n = f.size();
    const double slope = std::log(phiPrime[n - 1] / phiPrime[n - 2]) / std::log(f[n - 1] / f[n - 2]);
    const double k = std::clamp(1.0 / slope, 1e-6, 1.0);

    auto cubic = std::make_shared<const math::MonotoneCubic>(std::move(f), std::move(phiPrime));
    return MicroProfile(Tabulated{std::move(cubic)}, k);
}

MicroProfile MicroProfile::fromCsv(const std::filesystem::path& path)
{
    const auto table = csv::read(path);
    return tabulated(table.columnValues("f"), table.columnValues("phi_prime"));
}

MicroProfile::Kind MicroProfile::kind() const
{
    return std::holds_alternative<Polytrope>(impl_) ? Kind::polytrope : Kind::tabulated;
}

double MicroProfile::phi(double f) const
{
    requireNonNegative(f, "Phi");
    return std::visit(Overloaded{
        [f](const Polytrope& p) { return std::pow(f, 1.0 + 1.0 / p.k); },
        [f](const Tabulated& t) { return t.phiPrime->integral(f); },
    }, impl_);
}

double MicroProfile::phiPrime(double f) const
{
    requireNonNegative(f, "Phi'");
    return std::visit(Overloaded{
        [f](const Polytrope& p) { return (1.0 + 1.0 / p.k) * std::pow(f, 1.0 / p.k); },
        [f](const Tabulated& t) { return (*t.phiPrime)(f); },
    }, impl_);
}

double MicroProfile::phiSecond(double f) const
{
    requireNonNegative(f, "Phi''");
    return std::visit(Overloaded{
        [f](const Polytrope& p) {
            if (p.k == 1.0)
                return 2.0;
            return (1.0 + 1.0 / p.k) / p.k * std::pow(f, 1.0 / p.k - 1.0);
        },
        [f](const Tabulated& t) { return t.phiPrime->derivative(f); },
    }, impl_);
}

double MicroProfile::phiPrimeInverse(double y) const
{
    requireNonNegative(y, "(Phi')^-1");
    return std::visit(Overloaded{
        [y](const Polytrope& p) { return std::pow(y * p.k / (p.k + 1.0), p.k); },
        [y](const Tabulated& t) { return y == 0.0 ? 0.0 : t.phiPrime->inverse(y); },
    }, impl_);
}

double MicroProfile::conjugate(double lambda) const
{
    requireNonNegative(lambda, "Phi*");
    return std::visit(Overloaded{
        [lambda](const Polytrope& p) { return p.conjugateCoeff * std::pow(lambda, p.k + 1.0); },
        [this, lambda](const Tabulated&) { return legendreTransform(*this, lambda); },
    }, impl_);
}

const math::MonotoneCubic* MicroProfile::table() const
{
    if (const auto* t = std::get_if<Tabulated>(&impl_))
        return t->phiPrime.get();
    return nullptr;
}

std::string MicroProfile::describe() const
{
    std::ostringstream out;
    if (kind() == Kind::polytrope)
        out << "polytrope(k=" << k_ << ")";
    else
        out << "tabulated(k~" << k_ << ")";
    return out.str();
}

// ---------------------------------------------------------------------------
// Legendre transform

double legendreTransform(const std::function<double(double)>& convex, double lambda)
{
    requireNonNegative(lambda, "legendre_transform");
    if (lambda == 0.0)
        return 0.0;
    auto objective = [&](double x) { return lambda * x - convex(x); };

    // grow [0, hi] until the concave objective is past its maximum
    double hi = 1.0;
    int growth = 0;
    while (objective(2.0 * hi) >= objective(hi)) {
        hi *= 2.0;
        if (++growth > 200)
            throw ConvergenceError("legendre_transform: no bracket found (integrand not superlinear?)");
    }
    const double upper = 2.0 * hi;
    boost::uintmax_t maxIter = 500;
    auto [arg, negValue] = boost::math::tools::brent_find_minima(
        [&](double x) { return -objective(x); }, 0.0, upper, 40, maxIter);
    (void)arg;
    if (maxIter >= 500)
        throw ConvergenceError("legendre_transform: Brent search did not converge");
    return std::max(0.0, -negValue);
}

double legendreTransform(const MicroProfile& profile, double lambda)
{
    return legendreTransform([&profile](double f) { return profile.phi(f); }, lambda);
}

double legendreTransform(const ReducedProfile& profile, double lambda)
{
    return legendreTransform([&profile](double rho) { return profile.psi(rho); }, lambda);
}

// ---------------------------------------------------------------------------
// ReducedProfile

ReducedProfile::ReducedProfile(MicroProfile micro) : micro_(std::move(micro)) {}

double ReducedProfile::psiPrimeInverse(double lambda) const
{
    if (!(lambda > 0.0))
        return 0.0;
    return kTwoPi * micro_.conjugate(lambda);
}

double ReducedProfile::psiPrimeInverseDerivative(double lambda) const
{
    if (!(lambda > 0.0))
        return 0.0;
    if (micro_.kind() == MicroProfile::Kind::polytrope) {
        const double k = micro_.exponent();
        return (k + 1.0) * psiPrimeInverse(lambda) / lambda;
    }
    return psiInverseDerivative(micro_, lambda);
}

double ReducedProfile::psiPrime(double rho) const
{
    requireNonNegative(rho, "Psi'");
    if (rho == 0.0)
        return 0.0;
    if (micro_.kind() == MicroProfile::Kind::polytrope) {
        const double k = micro_.exponent();
        return std::pow(rho / psiPrimeInverse(1.0), 1.0 / (k + 1.0));
    }
    double hi = 1.0;
    int growth = 0;
    while (psiPrimeInverse(hi) < rho) {
        hi *= 2.0;
        if (++growth > 1100)
            throw ConvergenceError("Psi': inversion bracket failed to grow");
    }
    return math::bisectIncreasing([this](double l) { return psiPrimeInverse(l); }, rho, 0.0, hi,
                                  1e-300, 1e-15);
}

double ReducedProfile::psi(double rho) const
{
    requireNonNegative(rho, "Psi");
    if (rho == 0.0)
        return 0.0;
    if (micro_.kind() == MicroProfile::Kind::polytrope) {
        // (Psi')^-1 = A lambda^(k+1) integrates to a pure power of rho
        const double k = micro_.exponent();
        return (k + 1.0) / (k + 2.0) * rho * psiPrime(rho);
    }
    const double cutoff = psiPrime(rho);
    // int_0^rho Psi'(s) ds = int_0^cutoff lambda d[(Psi')^-1](lambda) = 2 pi int_0^cutoff lambda (Phi')^-1(lambda) dlambda
    return kTwoPi * math::integrateEndpointSingular(
        [this](double l) { return l * micro_.phiPrimeInverse(std::max(l, 0.0)); }, 0.0, cutoff);
}

double ReducedProfile::conjugate(double lambda) const
{
    if (!(lambda > 0.0))
        return 0.0;
    if (micro_.kind() == MicroProfile::Kind::polytrope) {
        const double k = micro_.exponent();
        return kTwoPi * micro_.conjugate(lambda) * lambda / (k + 2.0);
    }
    return kTwoPi * math::integrateEndpointSingular(
        [this](double s) { return micro_.conjugate(std::max(s, 0.0)); }, 0.0, lambda, 1e-12);
}

// ---------------------------------------------------------------------------
// VelocityProfile

VelocityProfile::VelocityProfile(const ReducedProfile& reduced, double rho)
    : micro_(&reduced.micro()), rho_(rho), lambda_(reduced.psiPrime(rho))
{
}

double VelocityProfile::maxSpeed() const { return std::sqrt(2.0 * lambda_); }

double VelocityProfile::operator()(double speed) const
{
    const double arg = lambda_ - 0.5 * speed * speed;
    return arg > 0.0 ? micro_->phiPrimeInverse(arg) : 0.0;
}

double VelocityProfile::mass() const
{
    if (lambda_ == 0.0)
        return 0.0;
    return kTwoPi * math::integrateEndpointSingular([this](double v) { return (*this)(v) * v; }, 0.0, maxSpeed());
}

double VelocityProfile::kineticPart() const
{
    if (lambda_ == 0.0)
        return 0.0;
    return kTwoPi * math::integrateEndpointSingular(
        [this](double v) { return 0.5 * v * v * (*this)(v) * v; }, 0.0, maxSpeed());
}

double VelocityProfile::casimirPart() const
{
    if (lambda_ == 0.0)
        return 0.0;
    return kTwoPi * math::integrateEndpointSingular(
        [this](double v) { return micro_->phi((*this)(v)) * v; }, 0.0, maxSpeed());
}

double VelocityProfile::cost() const { return kineticPart() + casimirPart(); }

// ---------------------------------------------------------------------------

double psiInverseDerivative(const MicroProfile& micro, double lambda)
{
    if (!(lambda > 0.0))
        throw DomainError("psi_inverse_derivative: lambda must be positive");
    // r dr = -ds with s = lambda - r^2/2
    auto integrand = [&micro](double s) {
        const double curvature = micro.phiSecond(micro.phiPrimeInverse(std::max(s, 0.0)));
        return 1.0 / curvature;
    };
    double err = 0.0;
    double value = 0.0;
    try {
        value = math::integrateEndpointSingular(integrand, 0.0, lambda, 1e-12, &err);
    } catch (const ConvergenceError&) {
        throw ConvergenceError("psi_inverse_derivative: divergent integral (Phi'' vanishes too fast)");
    }
    if (!std::isfinite(value) || err > 1e-6 * std::fabs(value))
        throw ConvergenceError("psi_inverse_derivative: divergent integral (Phi'' vanishes too fast)");
    return kTwoPi * value;
}

}  // namespace flatvp
