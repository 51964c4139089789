#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "hwq/noise.hpp"
#include "hwq/parallel.hpp"
#include "hwq/stats.hpp"

using namespace hwq;

TEST_CASE("reproducibility by seed") {
    auto d = ServiceDistribution::exponential(1.0);
    NoiseField a(d, 42, 0.05, 100, 0.05, 20), b(d, 42, 0.05, 100, 0.05, 20);
    Eigen::ArrayXd ca, cb;
    a.column(7, ca);
    b.column(7, cb);
    CHECK((ca == cb).all());

    NoiseField c(d, 43, 0.05, 100, 0.05, 20);
    c.column(7, cb);
    CHECK(!(ca == cb).all());
}

TEST_CASE("integral linearity is exact") {
    auto d = ServiceDistribution::exponential(1.0);
    NoiseField M(d, 5, 0.1, 50, 0.1, 10);
    auto p1 = [](double x, double) { return std::sin(x); };
    auto p2 = [](double x, double s) { return x * 0.1 + s; };
    const double a = 1.7, b = -0.4;
    auto mix = [&](double x, double s) { return a * p1(x, s) + b * p2(x, s); };
    CHECK(noise_integral(M, mix, 1.0) ==
          doctest::Approx(a * noise_integral(M, p1, 1.0) + b * noise_integral(M, p2, 1.0))
              .epsilon(1e-12));
}

TEST_CASE("variance of M_1(1)") {
    auto d = ServiceDistribution::exponential(1.0);
    const int reps = 4000;
    std::vector<double> vals(reps);
    parallel_for(reps, [&](int r) {
        NoiseField M(d, 1000 + r, 0.02, 1250, 0.02, 50);  // r_max = 25
        Eigen::ArrayXd col;
        double acc = 0.0;
        for (int i = 0; i < 50; ++i) {
            M.column(i, col);
            acc += col.sum();
        }
        vals[static_cast<std::size_t>(r)] = acc;
    });
    auto s = summarize(vals);
    CHECK(std::abs(s.mean) < 3.0 * s.se_mean + 1e-3);
    CHECK(std::abs(s.var - 1.0) < 3.0 * s.se_var);
}

TEST_CASE("disjoint supports are uncorrelated") {
    auto d = ServiceDistribution::exponential(1.0);
    const int reps = 2000;
    std::vector<double> prod(reps);
    for (int r = 0; r < reps; ++r) {
        NoiseField M(d, 7000 + r, 0.05, 200, 0.1, 10);
        auto lo = [](double x, double) { return x < 3.0 ? 1.0 : 0.0; };
        auto hi = [](double x, double) { return x >= 3.0 ? 1.0 : 0.0; };
        prod[static_cast<std::size_t>(r)] = noise_integral(M, lo, 1.0) * noise_integral(M, hi, 1.0);
    }
    auto s = summarize(prod);
    CHECK(std::abs(s.mean) < 3.0 * s.se_mean);
}

TEST_CASE("martingale increments are centered") {
    auto d = ServiceDistribution::lomax(3.0, 2.0);
    const int reps = 1500;
    std::vector<double> inc(reps);
    for (int r = 0; r < reps; ++r) {
        NoiseField M(d, 4000 + r, 0.05, 300, 0.05, 40);
        auto phi = [](double x, double) { return std::exp(-0.3 * x); };
        inc[static_cast<std::size_t>(r)] =
            noise_integral(M, phi, 2.0) - noise_integral(M, phi, 1.0);
    }
    auto s = summarize(inc);
    CHECK(std::abs(s.mean) < 3.0 * s.se_mean);
}

TEST_CASE("psi integrand semigroup identity") {
    // (Psi_s Phi_t f)(x, v) = (Psi_{s+t} f)(x, v) for v <= s, with f = theta^r
    for (const auto& d : {ServiceDistribution::exponential(1.0),
                          ServiceDistribution::lomax(3.0, 2.0),
                          ServiceDistribution::gamma(2.0, 2.0)}) {
        const double s = 1.3, t = 0.9, r = 0.4;
        for (double x : {0.0, 0.7, 2.2}) {
            for (double v : {0.0, 0.5, 1.3}) {
                // Phi_t f at age y: f(y+t) Gbar(y+t)/Gbar(y) with f = Phi_r 1
                auto phi_r_one = [&](double y) { return d.ccdf(y + r) / d.ccdf(y); };
                auto phi_t_f = [&](double y) { return phi_r_one(y + t) * d.ccdf(y + t) / d.ccdf(y); };
                const double lag = s - v;
                const double lhs = phi_t_f(x + lag) * d.ccdf(x + lag) / d.ccdf(x);
                const double rhs = d.ccdf(x + lag + t + r) / d.ccdf(x);
                CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("exponential stochastic convolution factorizes") {
    auto d = ServiceDistribution::exponential(1.0);
    NoiseField M(d, 11, 0.05, 400, 0.05, 40);
    const double t = 2.0;
    const double h0 = stoch_conv(M, t, 0.0, NoiseWeight::One);
    for (double r : {0.5, 1.0, 3.0}) {
        const double hr = stoch_conv(M, t, r, NoiseWeight::One);
        CHECK(hr == doctest::Approx(std::exp(-r) * h0).epsilon(1e-11));
    }
}

TEST_CASE("walker matches direct sums") {
    auto d = ServiceDistribution::lomax(3.0, 2.0);
    NoiseField M(d, 21, 0.05, 200, 0.05, 40);
    NoiseWalker w(M, 1, 80);
    for (int k = 0; k < 30; ++k) w.step();
    const double t = 30 * 0.05;

    Eigen::ArrayXd col;
    double m1 = 0.0;
    for (int i = 0; i < 30; ++i) {
        M.column(i, col);
        m1 += col.sum();
    }
    CHECK(w.m_one() == doctest::Approx(m1).epsilon(1e-12));

    for (int l : {0, 10, 40}) {
        const double r = 0.05 * l;
        CHECK(w.psi_value(NoiseWeight::One, l) ==
              doctest::Approx(stoch_conv(M, t, r, NoiseWeight::One)).epsilon(1e-10));
        CHECK(w.psi_value(NoiseWeight::Hazard, l) ==
              doctest::Approx(stoch_conv(M, t, r, NoiseWeight::Hazard)).epsilon(1e-10));
    }

    // Phi profile against a hand sum
    const auto prof = w.phi_profile(3);
    double direct = 0.0;
    for (int i = 0; i < 30; ++i) {
        M.column(i, col);
        for (int j = 0; j < 200; ++j) {
            const double x = 0.05 * (j + 0.5);
            direct += d.ccdf(x + 2 * 0.05) / d.ccdf(x) * col(j);
        }
    }
    CHECK(prof(2) == doctest::Approx(direct).epsilon(1e-10));
}

TEST_CASE("coarsened walker aggregates the base field") {
    auto d = ServiceDistribution::gamma(2.0, 2.0);
    NoiseField M(d, 33, 0.025, 400, 0.025, 80);
    NoiseWalker fine(M, 1, 10), coarse(M, 2, 10);
    for (int k = 0; k < 40; ++k) {
        coarse.step();
        fine.step();
        fine.step();
        CHECK(coarse.m_one() == doctest::Approx(fine.m_one()).epsilon(1e-12));
    }
}

TEST_CASE("fubini identity") {
    auto d = ServiceDistribution::exponential(1.0);

    // t = 0: empty integral
    NoiseField M0(d, 3, 0.05, 200, 0.05, 20);
    CHECK(fubini_residual(M0, 0.0, 0.0) == 0.0);

    // residual is centered over replications
    const int reps = 600;
    std::vector<double> res(reps);
    for (int r = 0; r < reps; ++r) {
        NoiseField M(d, 9000 + r, 0.05, 200, 0.05, 20);
        res[static_cast<std::size_t>(r)] = fubini_residual(M, 1.0, 0.0);
    }
    auto s = summarize(res);
    CHECK(std::abs(s.mean) < 3.0 * s.se_mean);

    // halving dt halves the residual on the coupled field
    std::vector<double> ratios;
    for (int seed = 100; seed < 110; ++seed) {
        NoiseField base(d, seed, 0.005, 2000, 0.005, 200);  // r_max 10, t_max 1
        auto fine = fubini_residual_paths(base, 1, {0, 100});
        auto coarse = fubini_residual_paths(base, 2, {0, 50});
        double sf = 0.0, sc = 0.0;
        for (std::size_t a = 0; a < 2; ++a) {
            sf = std::max(sf, fine[a].abs().maxCoeff());
            sc = std::max(sc, coarse[a].abs().maxCoeff());
        }
        ratios.push_back(sc / sf);
    }
    double mean_ratio = 0.0;
    for (double x : ratios) mean_ratio += x;
    mean_ratio /= static_cast<double>(ratios.size());
    CHECK(mean_ratio > 1.6);
    CHECK(mean_ratio < 2.4);
}

TEST_CASE("brownian path") {
    auto B = BrownianPath::generate(77, 0.01, 500);
    CHECK(B.b.v(0) == 0.0);
    CHECK(B.b.steps() == 500);
    auto C = B.subsample(5);
    CHECK(C.b.dt == doctest::Approx(0.05));
    CHECK(C.b.v(10) == B.b.v(50));
}
