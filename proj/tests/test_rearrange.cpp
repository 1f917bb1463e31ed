#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <random>

#include "flatvp/rearrange.hpp"
#include "oracles.hpp"

using namespace flatvp;
using doctest::Approx;

namespace {

CellProfile annulusProfile()
{
    // value 0 on the unit disk, 1 on 1 <= r <= sqrt(2): both pieces have area pi
    return CellProfile({{kPi, 0.0}, {kPi, 1.0}});
}

CellProfile randomProfile(std::mt19937_64& rng, std::size_t n)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<CellProfile::Cell> cells(n);
    for (auto& c : cells)
        c = {0.05 + u(rng), u(rng) < 0.2 ? 0.0 : 3.0 * u(rng)};
    return CellProfile(std::move(cells));
}

}  // namespace

TEST_CASE("cell profile validation")
{
    CHECK_THROWS_AS(CellProfile({{0.0, 1.0}}), DomainError);
    CHECK_THROWS_AS(CellProfile({{1.0, -0.5}}), DomainError);
    const CellProfile p({{1.0, 2.0}, {3.0, 0.5}});
    CHECK(p.totalArea() == Approx(4.0));
    CHECK(p.mass() == Approx(3.5));
    const auto e = p.edges();
    CHECK(e[1] == Approx(std::sqrt(1.0 / kPi)));
    CHECK(e[2] == Approx(std::sqrt(4.0 / kPi)));
}

TEST_CASE("annulus rearranges to the disk of equal area")
{
    const auto star = symmetricDecreasingRearrangement(annulusProfile());
    REQUIRE(star.size() == 2);
    CHECK(star[0] == 1.0);
    CHECK(star[1] == 0.0);
    CHECK(star.grid().edges()[1] == Approx(1.0).epsilon(1e-14));
    CHECK(star.supportRadius() == Approx(1.0).epsilon(1e-14));
    CHECK(star.mass() == Approx(kPi).epsilon(1e-14));
    CHECK(star.symmetricDecreasing());
}

TEST_CASE("decreasing densities are fixed points")
{
    const auto g = RadialGrid::geometric(64, 10.0, 0.01);
    const auto rho = RadialDensity::fromFunction(g, [](double r) { return std::exp(-r * r); });
    REQUIRE(rho.symmetricDecreasing());
    const auto star = symmetricDecreasingRearrangement(rho);
    REQUIRE(star.size() == rho.size());
    for (std::size_t i = 0; i < rho.size(); ++i) {
        CHECK(star[i] == rho[i]);
        CHECK(star.grid().edges()[i + 1] == Approx(g->edges()[i + 1]).epsilon(1e-12));
    }
}

TEST_CASE("rearrangement preserves mass and every Lp norm, and is idempotent")
{
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 10; ++trial) {
        const auto p = randomProfile(rng, 3 + trial);
        const auto once = rearrangeCells(p);
        const auto twice = rearrangeCells(once);
        CHECK(once.mass() == Approx(p.mass()).epsilon(1e-13));
        for (double q : {1.0, 4.0 / 3.0, 2.0, 3.0})
            CHECK(once.lpNorm(q) == Approx(p.lpNorm(q)).epsilon(1e-13));
        for (std::size_t k = 0; k + 1 < once.size(); ++k)
            CHECK(once.cells()[k].value >= once.cells()[k + 1].value);
        for (std::size_t k = 0; k < once.size(); ++k) {
            CHECK(twice.cells()[k].value == once.cells()[k].value);
            CHECK(twice.cells()[k].area == once.cells()[k].area);
        }
    }
}

TEST_CASE("conservative binning keeps mass and rejects mass off the grid")
{
    const auto src = symmetricDecreasingRearrangement(CellProfile({{1.0, 2.0}, {2.5, 1.0}, {0.7, 0.3}}));
    const auto target = RadialGrid::uniform(50, 2.0);
    const auto binned = binToGrid(src, target);
    CHECK(binned.mass() == Approx(src.mass()).epsilon(1e-13));
    CHECK(binned.symmetricDecreasing());
    CHECK_THROWS_AS(binToGrid(src, RadialGrid::uniform(10, 0.5)), DomainError);
}

TEST_CASE("Riesz gain for the annulus against the Monte-Carlo oracle")
{
    const auto gain = rieszGain(annulusProfile(), 1e-6, 512);
    // rearranged: unit disk of density 1, D = 8/(3 pi) M^2 / R with M = pi
    CHECK(gain.rearranged == Approx(8.0 * kPi / 3.0).epsilon(1e-4));
    const double outer = std::sqrt(2.0);
    const auto mc = oracle::radialSelfEnergy(
        [outer](double r) { return oracle::annulusDensity(r, 1.0, outer, 1.0); },
        [](double u) { return std::sqrt(1.0 + u); }, kPi, 2.0 * outer, 400000, 7);
    CHECK(std::fabs(gain.original - mc.mean) < 4.0 * mc.stderr_);
    CHECK(gain.gain() > 0.1);
}

TEST_CASE("Riesz inequality on random profiles")
{
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 8; ++trial) {
        const auto p = randomProfile(rng, 4 + trial);
        RieszGain g{};
        CHECK_NOTHROW(g = rieszGain(p, 1e-6, 256));
        CHECK(g.gain() >= -1e-6);
    }
}

TEST_CASE("composition with Psi is rearrangement invariant")
{
    const ReducedProfile psi(MicroProfile::polytrope(0.5));
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 5; ++trial) {
        const auto c = compositionCheck(psi, randomProfile(rng, 6));
        CHECK(c.holds(1e-12));
        CHECK(c.gap() == Approx(0.0).scale(std::fabs(c.original) + 1.0).epsilon(1e-12));
    }
}

TEST_CASE("external interaction increases under rearrangement")
{
    const auto ext = ExternalDensity::kuzmin(2.0, 0.5);
    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 8; ++trial) {
        const auto p = randomProfile(rng, 5);
        CHECK(externalInteraction(ext, rearrangeCells(p)) >= externalInteraction(ext, p) - 1e-12);
    }
    // annulus against its rearrangement: disk potential is radially increasing
    CHECK(externalInteraction(ext, rearrangeCells(annulusProfile())) > externalInteraction(ext, annulusProfile()));
    // matches the grid pairing for the Gaussian external
    const auto gauss = ExternalDensity::gaussian(1.0, 0.7);
    const CellProfile p({{0.5, 1.0}, {1.0, 0.0}, {2.0, 0.4}});
    const auto fine = binToGrid(p.toDensity(), refinedAnnulusGrid(p, 2000));
    CHECK(coulombEnergy(fine, gauss.potentialOn(fine.grid())) == Approx(externalInteraction(gauss, p)).epsilon(1e-5));
}

TEST_CASE("cell profile CSV round trip")
{
    const CellProfile p({{0.25, 1.5}, {1.75, 0.125}});
    const auto path = std::filesystem::temp_directory_path() / "flatvp_cells.csv";
    p.writeCsv(path, "config_hash: test");
    const auto back = CellProfile::readCsv(path);
    REQUIRE(back.size() == 2);
    CHECK(back.cells()[1].area == p.cells()[1].area);
    CHECK(back.cells()[0].value == p.cells()[0].value);
    std::filesystem::remove(path);
}
