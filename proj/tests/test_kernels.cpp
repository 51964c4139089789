#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "hwq/kernels.hpp"
#include "hwq/rng.hpp"

using namespace hwq;

namespace {

TimePath sampled(double dt, double t_max, const std::function<double(double)>& f) {
    const auto n = static_cast<Eigen::Index>(std::llround(t_max / dt)) + 1;
    Eigen::ArrayXd v(n);
    for (Eigen::Index k = 0; k < n; ++k) v(k) = f(dt * k);
    return TimePath(dt, std::move(v));
}

// Picard fixed-point oracle for x = r + g * x+, run on its own grid until the
// iteration stalls; independent of the production stepping scheme.
Eigen::ArrayXd picard_volterra(const Eigen::ArrayXd& r, const Eigen::ArrayXd& g, double dt) {
    Eigen::ArrayXd x = r;
    for (int it = 0; it < 400; ++it) {
        Eigen::ArrayXd xp = x.max(0.0);
        Eigen::ArrayXd nxt(r.size());
        nxt(0) = r(0);
        for (Eigen::Index i = 1; i < r.size(); ++i) {
            double acc = 0.5 * (xp(0) * g(i) + xp(i) * g(0));
            for (Eigen::Index j = 1; j < i; ++j) acc += xp(j) * g(i - j);
            nxt(i) = r(i) + dt * acc;
        }
        const double diff = (nxt - x).abs().maxCoeff();
        x = nxt;
        if (diff < 1e-13) break;
    }
    return x;
}

}  // namespace

TEST_CASE("convolution") {
    auto zero = sampled(1e-3, 5.0, [](double) { return 0.0; });
    CHECK(convolve(zero, [](double s) { return std::exp(-s); }).v.abs().maxCoeff() == 0.0);

    // 1 * g = G
    auto one = sampled(1e-3, 5.0, [](double) { return 1.0; });
    auto conv = convolve(one, [](double s) { return std::exp(-s); });
    double worst = 0.0;
    for (Eigen::Index i = 0; i < conv.v.size(); ++i)
        worst = std::max(worst, std::abs(conv.v(i) - (1.0 - std::exp(-1e-3 * i))));
    CHECK(worst < 1e-6);

    // t * e^{-t} = t - 1 + e^{-t}  (integration by parts)
    auto ramp = sampled(1e-3, 5.0, [](double t) { return t; });
    auto conv2 = convolve(ramp, [](double s) { return std::exp(-s); });
    worst = 0.0;
    for (Eigen::Index i = 0; i < conv2.v.size(); ++i) {
        const double t = 1e-3 * i;
        worst = std::max(worst, std::abs(conv2.v(i) - (t - 1.0 + std::exp(-t))));
    }
    CHECK(worst < 1e-6);
}

TEST_CASE("renewal density") {
    auto expo = ServiceDistribution::exponential(1.0);
    auto u = renewal_density(expo, 10.0, 1e-3);
    CHECK((u.v - 1.0).abs().maxCoeff() < 1e-3);

    // Erlang-2: u(t) = 1 - e^{-4t}
    auto erl = ServiceDistribution::gamma(2.0, 2.0);
    auto u2 = renewal_density(erl, 10.0, 1e-3);
    double worst = 0.0;
    for (Eigen::Index i = 0; i < u2.v.size(); ++i)
        worst = std::max(worst, std::abs(u2.v(i) - (1.0 - std::exp(-4e-3 * i))));
    CHECK(worst < 1e-2);

    // renewal theorem: u -> 1/mean = 1
    auto lom = ServiceDistribution::lomax(3.0, 2.0);
    auto u3 = renewal_density(lom, 50.0, 0.01);
    CHECK(std::abs(u3.v(u3.v.size() - 1) - 1.0) < 1e-2);
}

TEST_CASE("renewal equation solve") {
    auto expo = ServiceDistribution::exponential(1.0);

    // f = Gbar: phi = 1
    auto f = sampled(1e-3, 10.0, [](double t) { return std::exp(-t); });
    auto sol = solve_renewal(f, expo);
    CHECK((sol.phi.v - 1.0).abs().maxCoeff() < 1e-3);
    CHECK(sol.residual_sup < 1e-6);
    CHECK(sol.c1 == doctest::Approx(1.0 + sol.u_minus_one_l1));

    // zero input, zero output
    auto z = sampled(1e-3, 5.0, [](double) { return 0.0; });
    CHECK(solve_renewal(z, expo).phi.v.abs().maxCoeff() == 0.0);

    // linearity
    SeqRng rng(7);
    auto lom = ServiceDistribution::lomax(3.0, 2.0);
    auto u = renewal_density(lom, 5.0, 0.005);
    auto f1 = sampled(0.005, 5.0, [&](double t) { return std::sin(3.0 * t) * std::exp(-t); });
    auto f2 = sampled(0.005, 5.0, [&](double t) { return std::cos(t) / (1.0 + t); });
    const double a = 0.7, b = -1.3;
    auto mix = TimePath(0.005, a * f1.v + b * f2.v);
    auto phi_mix = solve_renewal(mix, lom, u).phi.v;
    auto phi_lin = a * solve_renewal(f1, lom, u).phi.v + b * solve_renewal(f2, lom, u).phi.v;
    CHECK((phi_mix - phi_lin).abs().maxCoeff() < 1e-10);

    // L2 inequality with the constructive constants
    for (int rep = 0; rep < 5; ++rep) {
        const double w = 1.0 + 4.0 * rng.uniform(), c = 0.5 + rng.uniform();
        auto fr = sampled(0.005, 5.0,
                          [&](double t) { return std::sin(w * t) * std::exp(-c * t); });
        auto s = solve_renewal(fr, lom, u);
        const double lhs = std::sqrt(trapz(s.phi.v.square().eval(), 0.005));
        const double nf = std::sqrt(trapz(fr.v.square().eval(), 0.005));
        const double ni = std::sqrt(trapz(cumtrapz(fr.v, 0.005).square().eval(), 0.005));
        CHECK(lhs <= s.c1 * nf + ni + 1e-9);
    }
}

TEST_CASE("volterra with positive part") {
    auto expo = ServiceDistribution::exponential(1.0);

    auto z = sampled(0.01, 5.0, [](double) { return 0.0; });
    CHECK(solve_volterra_plus(z, expo).v.abs().maxCoeff() == 0.0);

    // forcing pinned negative: nonlinearity off
    auto neg = sampled(0.01, 5.0, [](double) { return -1.0; });
    CHECK((solve_volterra_plus(neg, expo).v + 1.0).abs().maxCoeff() == 0.0);

    // r = 1 with exponential kernel: x(t) = 1 + t
    auto one = sampled(0.01, 5.0, [](double) { return 1.0; });
    auto x = solve_volterra_plus(one, expo);
    double worst = 0.0;
    for (Eigen::Index i = 0; i < x.v.size(); ++i)
        worst = std::max(worst, std::abs(x.v(i) - (1.0 + 0.01 * i)));
    CHECK(worst < 5e-4);

    // sign-changing forcing against the fine-grid Picard oracle
    const double dt = 0.02, fine = dt / 16.0, tmax = 4.0;
    auto r = sampled(dt, tmax, [](double t) { return std::sin(2.0 * t) - 0.2; });
    auto sol = solve_volterra_plus(r, expo);

    auto rf = sampled(fine, tmax, [](double t) { return std::sin(2.0 * t) - 0.2; });
    Eigen::ArrayXd gf(rf.v.size());
    for (Eigen::Index k = 0; k < gf.size(); ++k) gf(k) = std::exp(-fine * k);
    auto oracle = picard_volterra(rf.v, gf, fine);
    worst = 0.0;
    for (Eigen::Index i = 0; i < sol.v.size(); ++i)
        worst = std::max(worst, std::abs(sol.v(i) - oracle(16 * i)));
    CHECK(worst < 5e-3);

    // convergence certificate: halving dt at least halves the error
    auto rh = sampled(dt / 2.0, tmax, [](double t) { return std::sin(2.0 * t) - 0.2; });
    auto sol2 = solve_volterra_plus(rh, expo);
    double worst2 = 0.0;
    for (Eigen::Index i = 0; i < sol2.v.size(); ++i)
        worst2 = std::max(worst2, std::abs(sol2.v(i) - oracle(8 * i)));
    CHECK(worst2 < 0.55 * worst);
}

TEST_CASE("gamma operator") {
    const double dt = 0.005;
    for (const auto& d : {ServiceDistribution::exponential(1.0),
                          ServiceDistribution::lomax(3.0, 2.0),
                          ServiceDistribution::gamma(2.0, 2.0)}) {
        INFO(family_name(d.family()));
        // kappa = 1: (Gamma_t 1)(r) = Gbar(t + r)
        auto one = sampled(dt, 2.0, [](double) { return 1.0; });
        auto gk = gamma_op(one, d, 10.0, 2000);
        double worst = 0.0;
        for (int l = 0; l <= 2000; ++l)
            worst = std::max(worst, std::abs(gk.f.v(l) - d.ccdf(2.0 + 0.005 * l)));
        CHECK(worst < 10.0 * dt * dt);
    }

    // t = 0: empty integral
    auto expo = ServiceDistribution::exponential(1.0);
    TimePath k0(0.01, Eigen::ArrayXd::Constant(1, 0.7));
    auto g0 = gamma_op(k0, expo, 5.0, 500);
    for (int l = 0; l <= 500; ++l)
        CHECK(g0.f.v(l) == doctest::Approx(0.7 * std::exp(-0.01 * l)).epsilon(1e-12));

    // exponential closed form for kappa(s) = s
    auto ramp = sampled(0.002, 1.5, [](double t) { return t; });
    auto gr = gamma_op(ramp, expo, 6.0, 3000);
    double worst = 0.0;
    for (int l = 0; l <= 3000; ++l) {
        const double r = 0.002 * l;
        worst = std::max(worst,
                         std::abs(gr.f.v(l) - std::exp(-r) * (1.0 - std::exp(-1.5))));
    }
    CHECK(worst < 1e-5);

    // r = 0 slice agrees with the dedicated path
    auto zp = gamma_zero_path(ramp, expo);
    auto tail = gamma_op(ramp, expo, 6.0, 3000);
    CHECK(zp.v(zp.v.size() - 1) == doctest::Approx(tail.f.v(0)).epsilon(1e-12));
}

TEST_CASE("gamma operator bounds") {
    SeqRng rng(3);
    auto lom = ServiceDistribution::lomax(3.0, 2.0);
    for (int rep = 0; rep < 10; ++rep) {
        const double w = 0.5 + 5.0 * rng.uniform();
        auto kap = sampled(0.01, 2.0, [&](double t) { return std::sin(w * t) + 0.3; });
        const double ksup = kap.v.abs().maxCoeff();
        auto gk = gamma_op(kap, lom, 8.0, 800);
        for (int l = 0; l <= 800; l += 40) {
            const double r = 0.01 * l;
            CHECK(std::abs(gk.f.v(l)) <= 2.0 * ksup * lom.ccdf(r) + 1e-9);
            const double dbound = ksup * (lom.hazard_bound() * lom.ccdf(r) +
                                          lom.h2_bound() * lom.ccdf_integral(r));
            CHECK(std::abs(gk.df.v(l)) <= dbound + 1e-9);
        }
    }
}
