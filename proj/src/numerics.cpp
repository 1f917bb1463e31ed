#include "flatvp/numerics.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

namespace flatvp::math {

namespace {

constexpr double kLn4 = 1.3862943611198906;

struct AgmResult {
    double a;    // arithmetic-geometric mean of (1, sqrt(m1))
    double sum;  // sum_n 2^(n-1) c_n^2
};

AgmResult agm(double m1)
{
    double a = 1.0, b = std::sqrt(m1);
    double c = std::sqrt(1.0 - m1);
    double sum = 0.5 * c * c;
    double weight = 0.5;
    for (int it = 0; it < 64; ++it) {
        if (c <= 1e-17 * a)
            break;
        const double an = 0.5 * (a + b);
        // c_{n+1} = c_n^2 / (4 a_{n+1}) avoids the cancellation in (a - b)/2
        c = c * c / (4.0 * an);
        b = std::sqrt(a * b);
        a = an;
        weight *= 2.0;
        sum += weight * c * c;
    }
    return {a, sum};
}

template <unsigned N>
QuadratureRule makeRule()
{
    using G = boost::math::quadrature::gauss<double, N>;
    const auto& x = G::abscissa();
    const auto& w = G::weights();
    QuadratureRule rule;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] == 0.0) {
            rule.nodes.push_back(0.0);
            rule.weights.push_back(w[i]);
            continue;
        }
        rule.nodes.push_back(-x[i]);
        rule.weights.push_back(w[i]);
        rule.nodes.push_back(x[i]);
        rule.weights.push_back(w[i]);
    }
    return rule;
}

}  // namespace

double ellipticK(double m1)
{
    if (!(m1 >= 0.0) || m1 > 1.0)
        throw DomainError("ellipticK: complementary parameter outside [0,1]");
    if (m1 == 0.0)
        return std::numeric_limits<double>::infinity();
    return kPi / (2.0 * agm(m1).a);
}

double ellipticE(double m1)
{
    if (!(m1 >= 0.0) || m1 > 1.0)
        throw DomainError("ellipticE: complementary parameter outside [0,1]");
    if (m1 == 0.0)
        return 1.0;
    const auto r = agm(m1);
    return kPi / (2.0 * r.a) * (1.0 - r.sum);
}

std::pair<double, double> ellipticKE(double m1)
{
    if (!(m1 >= 0.0) || m1 > 1.0)
        throw DomainError("ellipticKE: complementary parameter outside [0,1]");
    if (m1 == 0.0)
        return {std::numeric_limits<double>::infinity(), 1.0};
    const auto r = agm(m1);
    const double k = kPi / (2.0 * r.a);
    return {k, k * (1.0 - r.sum)};
}

double ellipticKRegular(double m1)
{
    if (m1 == 0.0)
        return 0.0;
    return ellipticK(m1) - (kLn4 - 0.5 * std::log(m1));
}

double integrateEndpointSingular(const std::function<double(double)>& f, double a, double b,
                                 double relTol, double* errorEstimate)
{
    if (b == a)
        return 0.0;
    static thread_local boost::math::quadrature::tanh_sinh<double> integrator(12);
    double err = 0.0, l1 = 0.0;
    const double value = integrator.integrate(f, a, b, relTol, &err, &l1);
    if (!std::isfinite(value))
        throw ConvergenceError("tanh-sinh quadrature produced a non-finite value");
    if (errorEstimate)
        *errorEstimate = err;
    return value;
}

const QuadratureRule& gaussLegendreRule(int order)
{
    static const QuadratureRule r8 = makeRule<8>();
    static const QuadratureRule r16 = makeRule<16>();
    static const QuadratureRule r20 = makeRule<20>();
    static const QuadratureRule r32 = makeRule<32>();
    switch (order) {
    case 8: return r8;
    case 16: return r16;
    case 20: return r20;
    case 32: return r32;
    default: throw std::invalid_argument("gaussLegendreRule: unsupported order " + std::to_string(order));
    }
}

double gaussLegendre(const std::function<double(double)>& f, double a, double b, int order)
{
    const auto& rule = gaussLegendreRule(order);
    const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
    double sum = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i)
        sum += rule.weights[i] * f(mid + half * rule.nodes[i]);
    return sum * half;
}

// ---------------------------------------------------------------------------
// MonotoneCubic

MonotoneCubic::MonotoneCubic(std::vector<double> x, std::vector<double> y)
    : xs_(std::move(x)), ys_(std::move(y))
{
    const std::size_t n = xs_.size();
    if (n < 2 || ys_.size() != n)
        throw std::invalid_argument("MonotoneCubic: need at least two knots of matching size");
    for (std::size_t i = 1; i < n; ++i)
        if (!(xs_[i] > xs_[i - 1]))
            throw std::invalid_argument("MonotoneCubic: knots must be strictly increasing");

    std::vector<double> delta(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i)
        delta[i] = (ys_[i + 1] - ys_[i]) / (xs_[i + 1] - xs_[i]);

    slopes_.assign(n, 0.0);
    slopes_[0] = delta[0];
    slopes_[n - 1] = delta[n - 2];
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (delta[i - 1] * delta[i] <= 0.0) {
            slopes_[i] = 0.0;
            continue;
        }
        // weighted harmonic mean (Fritsch-Butland), keeps the interpolant monotone
        const double h0 = xs_[i] - xs_[i - 1], h1 = xs_[i + 1] - xs_[i];
        const double w1 = 2 * h1 + h0, w2 = h1 + 2 * h0;
        slopes_[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
    }

    prefix_.assign(n, 0.0);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double h = xs_[i + 1] - xs_[i];
        // exact integral of the cubic Hermite segment
        prefix_[i + 1] = prefix_[i] + h * (ys_[i] + ys_[i + 1]) / 2 + h * h * (slopes_[i] - slopes_[i + 1]) / 12;
    }
}

std::size_t MonotoneCubic::segment(double x) const
{
    auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
    std::size_t i = it == xs_.begin() ? 0 : std::size_t(it - xs_.begin()) - 1;
    return std::min(i, xs_.size() - 2);
}

double MonotoneCubic::operator()(double x) const
{
    if (x >= xs_.back())
        return ys_.back() + slopes_.back() * (x - xs_.back());
    const std::size_t i = segment(x);
    const double h = xs_[i + 1] - xs_[i], t = (x - xs_[i]) / h;
    const double t2 = t * t, t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * ys_[i] + (t3 - 2 * t2 + t) * h * slopes_[i]
         + (-2 * t3 + 3 * t2) * ys_[i + 1] + (t3 - t2) * h * slopes_[i + 1];
}

double MonotoneCubic::derivative(double x) const
{
    if (x >= xs_.back())
        return slopes_.back();
    const std::size_t i = segment(x);
    const double h = xs_[i + 1] - xs_[i], t = (x - xs_[i]) / h;
    const double t2 = t * t;
    return ((6 * t2 - 6 * t) * ys_[i] + (-6 * t2 + 6 * t) * ys_[i + 1]) / h
         + (3 * t2 - 4 * t + 1) * slopes_[i] + (3 * t2 - 2 * t) * slopes_[i + 1];
}

double MonotoneCubic::integral(double x) const
{
    if (x >= xs_.back()) {
        const double d = x - xs_.back();
        return prefix_.back() + ys_.back() * d + 0.5 * slopes_.back() * d * d;
    }
    const std::size_t i = segment(x);
    const double h = xs_[i + 1] - xs_[i], t = (x - xs_[i]) / h;
    const double t2 = t * t, t3 = t2 * t, t4 = t3 * t;
    // antiderivatives of the Hermite basis functions on [0, t]
    const double a00 = t4 / 2 - t3 + t, a10 = t4 / 4 - 2 * t3 / 3 + t2 / 2;
    const double a01 = -t4 / 2 + t3, a11 = t4 / 4 - t3 / 3;
    return prefix_[i] + h * (a00 * ys_[i] + a10 * h * slopes_[i] + a01 * ys_[i + 1] + a11 * h * slopes_[i + 1]);
}

double MonotoneCubic::inverse(double y) const
{
    if (y >= ys_.back()) {
        if (slopes_.back() <= 0.0)
            throw DomainError("MonotoneCubic::inverse: value beyond a flat tail");
        return xs_.back() + (y - ys_.back()) / slopes_.back();
    }
    auto it = std::upper_bound(ys_.begin(), ys_.end(), y);
    std::size_t i = it == ys_.begin() ? 0 : std::size_t(it - ys_.begin()) - 1;
    i = std::min(i, xs_.size() - 2);
    return bisectIncreasing([this](double x) { return (*this)(x); }, y, xs_[i], xs_[i + 1], 0.0, 1e-15, 200);
}

double interpLinear(std::span<const double> x, std::span<const double> y, double at)
{
    if (at <= x.front())
        return y.front();
    if (at >= x.back())
        return y.back();
    auto it = std::upper_bound(x.begin(), x.end(), at);
    const std::size_t i = std::size_t(it - x.begin()) - 1;
    const double t = (at - x[i]) / (x[i + 1] - x[i]);
    return y[i] + t * (y[i + 1] - y[i]);
}

}  // namespace flatvp::math
