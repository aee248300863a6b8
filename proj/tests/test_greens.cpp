#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "mfpd/greens.hpp"
#include "oracles.hpp"

using namespace mfpd;
using Catch::Approx;

TEST_CASE("green: diagonal and domain errors", "[greens]") {
    CHECK_THROWS_AS(greens::green({0.5, 0.0}, {0.5, 0.0}), std::domain_error);
    CHECK_THROWS_AS(greens::green({1.5, 0.0}, {0.0, 0.0}), std::domain_error);
    CHECK_THROWS_AS(greens::green({0.2, 0.0}, {1.0, 0.0}), std::domain_error);
    CHECK_THROWS_AS(greens::robin({1.0, 0.0}), std::domain_error);
    CHECK_THROWS_AS(greens::regular_part({0.0, 0.0}, {1.0, 0.0}), std::domain_error);
}

TEST_CASE("green: symmetry is exact", "[greens]") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> U(-0.7, 0.7);
    for (int k = 0; k < 200; ++k) {
        const Point x{U(rng), U(rng)}, y{U(rng), U(rng)};
        if ((x - y).norm() < 1e-6) continue;
        CHECK(greens::green(x, y) == greens::green(y, x));
    }
    CHECK(greens::green({0.3, 0.1}, {-0.2, 0.4}) == greens::green({-0.2, 0.4}, {0.3, 0.1}));
}

TEST_CASE("green: boundary vanishing", "[greens]") {
    const Point y{0.37, -0.21};
    for (int k = 0; k < 64; ++k) {
        const double th = 2.0 * pi * k / 64;
        const double r = 1.0 - 1e-13;
        CHECK(std::abs(greens::green({r * std::cos(th), r * std::sin(th)}, y)) <= 1e-12);
    }
}

TEST_CASE("green: value against the finite-difference oracle", "[greens]") {
    // point source on a 512^2 Shortley-Weller grid; 3-digit agreement
    const Point x{0.25, 0.0}, y{0.5, 0.0};
    oracles::DiskPoissonFD fd(512);
    const auto u = fd.solve_point_source(y);
    const double got = fd.value_near(u, x);
    const double want = greens::green(x, y);
    CHECK(want == Approx(std::log(3.5) / (2.0 * pi)).epsilon(1e-12));
    CHECK(got == Approx(want).epsilon(1e-3));
}

TEST_CASE("regular part: origin limit and boundary identity", "[greens]") {
    CHECK(greens::regular_part({0.0, 0.0}, {0.0, 0.0}) == 0.0);
    CHECK(greens::regular_part({0.3, -0.2}, {0.0, 0.0}) == Approx(0.0).margin(1e-15));
    const Point y{0.4, 0.2};
    for (int k = 0; k < 32; ++k) {
        const double th = 2.0 * pi * k / 32;
        const Point x{std::cos(th), std::sin(th)};
        CHECK(greens::regular_part(x, y) - std::log((x - y).norm()) / (2.0 * pi) ==
              Approx(0.0).margin(1e-14));
    }
}

TEST_CASE("regular part: harmonicity via 5-point oracle", "[greens]") {
    const Point y{0.3, -0.1};
    auto H = [&](Point p) { return greens::regular_part(p, y); };
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> U(-0.6, 0.6);
    int checked = 0;
    for (int k = 0; k < 200 && checked < 100; ++k) {
        const Point p{U(rng), U(rng)};
        if (p.norm() > 0.8) continue;
        ++checked;
        CHECK(std::abs(oracles::fd_laplacian(H, p, 1e-3)) < 1e-4); // O(h^2), harmonic
        // order is measured at steps where truncation still dominates round-off
        const double r1 = oracles::fd_laplacian(H, p, 1e-2);
        const double r2 = oracles::fd_laplacian(H, p, 5e-3);
        if (std::abs(r1) > 1e-9) CHECK(oracles::observed_order(r1, r2) >= 1.9);
    }
    CHECK(checked == 100);
}

TEST_CASE("robin function values", "[greens]") {
    CHECK(greens::robin({0.0, 0.0}) == 0.0);
    CHECK(greens::robin({0.6, 0.0}) == Approx(std::log(0.64) / (2.0 * pi)).epsilon(1e-14));
    const Point x{0.3, 0.4};
    CHECK(greens::robin(x) == Approx(greens::regular_part(x, x)).epsilon(1e-14));
}
