#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "hwq/grid.hpp"
#include "hwq/rng.hpp"

using namespace hwq;

namespace {

H1GridFunction sampled_exp(double r_max, double dr) {
    const auto n = static_cast<Eigen::Index>(std::llround(r_max / dr)) + 1;
    Eigen::ArrayXd f(n), df(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        f(k) = std::exp(-dr * k);
        df(k) = -f(k);
    }
    return H1GridFunction(GridFunction(dr, f), GridFunction(dr, df));
}

// random smooth decaying H1 function: a*sin(w r) e^{-c r} + b e^{-c r}
H1GridFunction random_h1(SeqRng& rng, double r_max, double dr) {
    const double a = 2.0 * rng.uniform() - 1.0;
    const double b = 2.0 * rng.uniform() - 1.0;
    const double w = 0.5 + 3.0 * rng.uniform();
    const double c = 0.3 + 2.0 * rng.uniform();
    const auto n = static_cast<Eigen::Index>(std::llround(r_max / dr)) + 1;
    Eigen::ArrayXd f(n), df(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        const double r = dr * k, e = std::exp(-c * r);
        f(k) = (a * std::sin(w * r) + b) * e;
        df(k) = (a * w * std::cos(w * r) - c * (a * std::sin(w * r) + b)) * e;
    }
    return H1GridFunction(GridFunction(dr, f), GridFunction(dr, df));
}

}  // namespace

TEST_CASE("l2 norm") {
    GridFunction zero(0.01, Eigen::ArrayXd::Zero(101));
    CHECK(l2_norm(zero) == 0.0);

    auto g = sampled_exp(40.0, 1e-3);
    CHECK(l2_norm(g.f) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-4));

    GridFunction one(0.25, Eigen::ArrayXd::Ones(5));  // r_max = 1
    CHECK(l2_norm(one) == doctest::Approx(1.0));
}

TEST_CASE("h1 norm") {
    auto g = sampled_exp(40.0, 1e-3);
    CHECK(h1_norm(g) == doctest::Approx(1.0).epsilon(1e-4));
    CHECK(sup_norm(g.f) == 1.0);
}

TEST_CASE("translate") {
    auto g = sampled_exp(20.0, 1e-2);
    auto id = translate(g, 0.0);
    CHECK((id.f.v == g.f.v).all());

    auto sh = translate(g, 1.0);
    for (int k : {0, 50, 400}) CHECK(sh.f.v(k) == g.f.v(k + 100));

    CHECK_THROWS(translate(g, 0.005));   // off grid
    CHECK_THROWS(translate(g, -1.0));

    // composition is exact index arithmetic
    auto ab = translate(translate(g, 3.0), 2.0);
    auto once = translate(g, 5.0);
    CHECK((ab.f.v == once.f.v).all());
    CHECK((ab.df.v == once.df.v).all());

    // vanishing tail norm
    CHECK(h1_norm(translate(g, 19.0)) < 1e-7);
}

TEST_CASE("translation properties on random functions") {
    SeqRng rng(1234);
    for (int rep = 0; rep < 20; ++rep) {
        auto g = random_h1(rng, 30.0, 0.01);
        double prev = h1_norm(g);
        for (double t : {1.0, 2.0, 5.0, 12.0, 25.0}) {
            const double cur = h1_norm(translate(g, t));
            CHECK(cur <= prev + 1e-12);
            prev = cur;
        }
        // sup-norm controlled by the h1 norm (half-line embedding)
        CHECK(sup_norm(g.f) <= std::sqrt(2.0) * h1_norm(g));
    }
}

TEST_CASE("h1 compatibility defect") {
    auto good = sampled_exp(10.0, 0.01);
    CHECK(h1_compat_defect(good) < 1e-7);
    CHECK(h1_compatible(good, 1e-4));

    auto broken = good;
    broken.df.v.setZero();  // derivative inconsistent with the values
    CHECK(h1_compat_defect(broken) > 1e-3);
}

TEST_CASE("state point membership") {
    auto z = sampled_exp(10.0, 0.01);  // z(0) = 1 != x ^ 0 for any x
    CHECK_THROWS(StatePoint(0.0, z));

    auto zneg = z;
    zneg.f.v *= -0.5;
    zneg.df.v *= -0.5;  // z(0) = -0.5
    StatePoint ok(-0.5, zneg);
    CHECK(ok.x == -0.5);

    Eigen::ArrayXd zero = Eigen::ArrayXd::Zero(11);
    StatePoint pos(2.0, H1GridFunction(GridFunction(0.1, zero), GridFunction(0.1, zero)));
    CHECK(pos.z.f.v(0) == 0.0);
}

TEST_CASE("cumtrapz") {
    Eigen::ArrayXd y(5);
    y << 0, 1, 2, 3, 4;  // integral of t with dt=1: t^2/2
    auto c = cumtrapz(y, 1.0);
    CHECK(c(4) == doctest::Approx(8.0));
    CHECK(c(0) == 0.0);
}
