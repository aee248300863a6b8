#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "mfpd/bubble.hpp"
#include "oracles.hpp"

using namespace mfpd;
using Catch::Approx;

TEST_CASE("bubble: construction guards", "[bubble]") {
    CHECK_THROWS_AS(Bubble({0, 0}, -1.0, 3.0), std::invalid_argument);
    CHECK_THROWS_AS(Bubble({0, 0}, 0.1, 2.0), std::invalid_argument);
    CHECK(Bubble::alpha_near_even(4.0));
    CHECK(Bubble::alpha_near_even(6.0 + 5e-10));
    CHECK_FALSE(Bubble::alpha_near_even(3.0));
    CHECK_FALSE(Bubble::alpha_near_even(2.5));
}

TEST_CASE("bubble: pointwise values", "[bubble]") {
    const Bubble b4({0.1, -0.2}, 1.0, 4.0);
    CHECK(bubble::eval_u(b4, b4.center) == Approx(std::log(32.0)).epsilon(1e-14));
    const Bubble b3({0, 0}, 0.1, 3.0);
    CHECK(bubble::eval_u(b3, {0.1, 0.0}) == Approx(std::log(4500.0)).epsilon(1e-13));
    // strictly decreasing in the radius
    double prev = bubble::eval_u(b3, b3.center);
    for (double r = 0.01; r < 1.0; r *= 1.5) {
        const double v = bubble::eval_u(b3, {r, 0.0});
        CHECK(v < prev);
        prev = v;
    }
}

TEST_CASE("bubble: source values and total mass", "[bubble]") {
    const Bubble b3({0.2, 0.1}, 0.3, 3.0);
    CHECK(bubble::source(b3, b3.center) == 0.0);
    const Bubble b4({0, 0}, 1.0, 4.0);
    CHECK(bubble::source(b4, {1.0, 0.0}) == Approx(8.0).epsilon(1e-14));
    // product form vs exp form
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    for (int k = 0; k < 50; ++k) {
        const Point x{U(rng), U(rng)};
        const double direct = bubble::source(b3, x);
        const double via_exp =
            std::pow(dist(x, b3.center), b3.alpha - 2.0) * std::exp(bubble::eval_u(b3, x));
        CHECK(direct == Approx(via_exp).margin(1e-300).epsilon(1e-12));
    }
    CHECK(bubble::total_mass(b3) == Approx(4.0 * pi * 3.0).epsilon(1e-6));
    CHECK(bubble::total_mass(Bubble({0, 0}, 0.05, 2.5)) == Approx(10.0 * pi).epsilon(1e-6));
}

TEST_CASE("bubble: Liouville equation residual is O(h^2)", "[bubble]") {
    // property over random weights and scales, away from the center; the FD
    // step follows the local feature size so truncation dominates round-off
    std::mt19937 rng(17);
    std::uniform_real_distribution<double> Ua(2.2, 6.0), Ud(1e-3, 1.0), Ur(0.0, 2.0 * pi);
    for (int trial = 0; trial < 10; ++trial) {
        const double alpha = Ua(rng), delta = Ud(rng);
        const Bubble b({0, 0}, delta, alpha);
        auto w = [&](Point p) { return bubble::eval_u(b, p); };
        for (int k = 0; k < 5; ++k) {
            const double r = delta * (0.5 + 2.0 * (k + 1) / 5.0);
            const Point p{r * std::cos(Ur(rng)), r * std::sin(Ur(rng))};
            const double h1 = 0.02 * r;
            const double res1 = oracles::fd_laplacian(w, p, h1) + bubble::source(b, p);
            const double res2 = oracles::fd_laplacian(w, p, h1 / 2) + bubble::source(b, p);
            const double scale = std::abs(bubble::source(b, p)) + 1.0;
            CHECK(std::abs(res1) / scale < 2e-2);
            if (std::abs(res1) / scale > 1e-7)
                CHECK(oracles::observed_order(res1, res2) > 1.8);
        }
    }
}

TEST_CASE("bubble: kernel functions", "[bubble]") {
    const Bubble b({0, 0}, 1.0, 3.0);
    auto at0 = bubble::kernel_functions(b, {0, 0});
    CHECK(at0.Y0 == 1.0);
    CHECK(at0.Y1 == 0.0);
    CHECK(at0.Y2 == 0.0);
    auto at1 = bubble::kernel_functions(b, {std::cos(0.7), std::sin(0.7)});
    CHECK(at1.Y0 == Approx(0.0).margin(1e-14));
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> U(-3.0, 3.0);
    for (int k = 0; k < 100; ++k) {
        const Point y{U(rng), U(rng)};
        CHECK(std::abs(bubble::kernel_functions(b, y).Y0) <= 1.0);
    }
    // L(Y0) = lap Y0 + 2 a^2 |y|^(a-2)/(1+|y|^a)^2 Y0 = 0, checked at order h^2
    auto Y0 = [&](Point y) { return bubble::kernel_functions(b, y).Y0; };
    std::uniform_real_distribution<double> Ur(0.3, 2.5), Uth(0.0, 2.0 * pi);
    for (int k = 0; k < 50; ++k) {
        const double r = Ur(rng), th = Uth(rng);
        const Point y{r * std::cos(th), r * std::sin(th)};
        auto L = [&](double h) {
            const double t = std::pow(y.norm(), b.alpha);
            const double V = 2.0 * b.alpha * b.alpha * std::pow(y.norm(), b.alpha - 2.0) /
                             ((1.0 + t) * (1.0 + t));
            return oracles::fd_laplacian(Y0, y, h) + V * Y0(y);
        };
        const double r1 = L(5e-3), r2 = L(2.5e-3);
        CHECK(std::abs(r1) < 1e-3);
        if (std::abs(r1) > 1e-8) CHECK(oracles::observed_order(r1, r2) > 1.8);
    }
}

TEST_CASE("bubble: test functions and their identities", "[bubble]") {
    const double delta = 0.2, alpha = 3.0;
    const Bubble b({0.1, 0.0}, delta, alpha);
    auto atc = bubble::test_functions(b, b.center);
    CHECK(atc.Z0 == 1.0);
    CHECK(atc.eta0 == -2.0);
    CHECK(atc.eta ==
          Approx((4.0 / 3.0) * std::log(std::pow(delta, alpha)) + 8.0 / 3.0).epsilon(1e-13));
    auto atd = bubble::test_functions(b, {0.1 + delta, 0.0});
    CHECK(atd.Z0 == Approx(0.0).margin(1e-15));
    CHECK(atd.eta0 == Approx(-1.0).epsilon(1e-14));

    // Z0 + eta0 + 1 = 0 pointwise exactly
    std::mt19937 rng(23);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    for (int k = 0; k < 200; ++k) {
        auto tf = bubble::test_functions(b, {U(rng), U(rng)});
        CHECK(tf.Z0 + tf.eta0 + 1.0 == Approx(0.0).margin(1e-15));
    }

    // FD checks of lap eta + src eta = 2 src Z0 and lap eta0 + src eta0 = -src
    auto eta = [&](Point p) { return bubble::test_functions(b, p).eta; };
    auto eta0 = [&](Point p) { return bubble::test_functions(b, p).eta0; };
    std::uniform_real_distribution<double> Ur(0.5 * delta, 3.0 * delta), Uth(0.0, 2.0 * pi);
    for (int k = 0; k < 50; ++k) {
        const double r = Ur(rng), th = Uth(rng);
        const Point p{b.center.x + r * std::cos(th), b.center.y + r * std::sin(th)};
        const double src = bubble::source(b, p);
        auto tf = bubble::test_functions(b, p);
        const double h1 = 0.02 * r;
        const double e1 =
            oracles::fd_laplacian(eta, p, h1) + src * tf.eta - 2.0 * src * tf.Z0;
        const double e2 =
            oracles::fd_laplacian(eta, p, h1 / 2) + src * tf.eta - 2.0 * src * tf.Z0;
        const double f1 = oracles::fd_laplacian(eta0, p, h1) + src * tf.eta0 + src;
        const double f2 = oracles::fd_laplacian(eta0, p, h1 / 2) + src * tf.eta0 + src;
        const double scale = std::abs(src) + 1.0;
        CHECK(std::abs(e1) / scale < 2e-2);
        CHECK(std::abs(f1) / scale < 2e-2);
        if (std::abs(e1) / scale > 1e-7) CHECK(oracles::observed_order(e1, e2) > 1.8);
        if (std::abs(f1) / scale > 1e-7) CHECK(oracles::observed_order(f1, f2) > 1.8);
    }
}

TEST_CASE("bubble: radial identities against closed forms", "[bubble]") {
    for (const double a : {2.5, 3.0, 4.0, 5.5}) {
        const auto got = bubble::radial_identities(a);
        const double want[6] = {2.0 * pi / a,  (4.0 * pi / 3.0) * a, -4.0 * pi,
                                -2.0 * pi * a, 2.0 * pi * a,         0.0};
        for (int k = 0; k < 6; ++k) {
            if (want[k] == 0.0)
                CHECK(std::abs(got[k]) < 1e-8);
            else
                CHECK(got[k] == Approx(want[k]).epsilon(1e-8));
        }
    }
    CHECK(bubble::radial_identities(4.0)[1] == Approx(16.0 * pi / 3.0).epsilon(1e-8));
    CHECK(bubble::radial_identities(2.5)[4] == Approx(5.0 * pi).epsilon(1e-8));
    CHECK_THROWS_AS(bubble::radial_identities(1.5), std::invalid_argument);
}
