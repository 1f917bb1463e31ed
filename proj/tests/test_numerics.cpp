#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "flatvp/numerics.hpp"

using namespace flatvp;
using doctest::Approx;

TEST_CASE("elliptic integrals against reference values")
{
    CHECK(math::ellipticK(1.0) == Approx(kPi / 2).epsilon(1e-15));
    CHECK(math::ellipticE(1.0) == Approx(kPi / 2).epsilon(1e-15));
    // m = 1/2
    CHECK(math::ellipticK(0.5) == Approx(1.8540746773013719).epsilon(1e-14));
    CHECK(math::ellipticE(0.5) == Approx(1.3506438810476755).epsilon(1e-14));
    // m = 0.99
    CHECK(math::ellipticK(0.01) == Approx(3.6956373629898747).epsilon(1e-13));
    CHECK(math::ellipticE(0.01) == Approx(1.0159935450252239).epsilon(1e-13));
    CHECK(math::ellipticE(0.0) == 1.0);
    CHECK(math::ellipticKRegular(1e-30) == Approx(0.0).epsilon(1e-12));
    CHECK_THROWS_AS(math::ellipticK(-0.1), DomainError);
}

TEST_CASE("bisection finds the crossing of an increasing map")
{
    const double x = math::bisectIncreasing([](double t) { return t * t * t; }, 8.0, 0.0, 10.0, 1e-14, 0.0);
    CHECK(x == Approx(2.0).epsilon(1e-12));
}

TEST_CASE("quadrature rules")
{
    CHECK(math::gaussLegendre([](double x) { return x * x * x * x; }, 0.0, 2.0, 8) == Approx(32.0 / 5));
    CHECK(math::integrateEndpointSingular([](double x) { return 1.0 / std::sqrt(x); }, 0.0, 1.0)
          == Approx(2.0).epsilon(1e-12));
    CHECK_THROWS(math::gaussLegendreRule(7));
}

TEST_CASE("monotone cubic reproduces a linear function and its integral")
{
    math::MonotoneCubic line({0.0, 1.0, 3.0, 4.0}, {1.0, 3.0, 7.0, 9.0});
    CHECK(line(2.0) == Approx(5.0));
    CHECK(line.derivative(0.5) == Approx(2.0));
    CHECK(line.integral(4.0) == Approx(4.0 + 16.0));
    CHECK(line.integral(5.0) == Approx(5.0 + 25.0));
    CHECK(line.inverse(5.0) == Approx(2.0));
    CHECK(line.inverse(11.0) == Approx(5.0));
}

TEST_CASE("monotone cubic stays monotone on steep data")
{
    math::MonotoneCubic c({0.0, 1.0, 2.0, 3.0}, {0.0, 0.01, 0.02, 10.0});
    double prev = -1.0;
    for (double x = 0.0; x <= 3.0; x += 0.01) {
        CHECK(c(x) >= prev);
        prev = c(x);
    }
}

TEST_CASE("linear interpolation clamps at the ends")
{
    std::vector<double> x{0.0, 1.0, 2.0}, y{0.0, 10.0, 0.0};
    CHECK(math::interpLinear(x, y, 0.5) == Approx(5.0));
    CHECK(math::interpLinear(x, y, -1.0) == 0.0);
    CHECK(math::interpLinear(x, y, 3.0) == 0.0);
}
