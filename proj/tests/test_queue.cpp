#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "hwq/queue_sim.hpp"
#include "hwq/stats.hpp"

using namespace hwq;

namespace {

// stationary M/M/N occupancy by direct enumeration of the birth-death chain
double mmn_busy_fraction(int N, double lambda) {
    std::vector<double> logp;
    double lp = 0.0;
    logp.push_back(lp);
    for (int n = 1; n < 4000; ++n) {
        lp += std::log(lambda) - std::log(static_cast<double>(std::min(n, N)));
        logp.push_back(lp);
        if (n > 4 * N && lp < logp[0] - 60.0) break;
    }
    const double mx = *std::max_element(logp.begin(), logp.end());
    double norm = 0.0, busy = 0.0;
    for (std::size_t n = 0; n < logp.size(); ++n) {
        const double p = std::exp(logp[n] - mx);
        norm += p;
        busy += p * std::min<double>(static_cast<double>(n), N);
    }
    return busy / (norm * N);
}

}  // namespace

TEST_CASE("single job, no arrivals") {
    QueueConfig cfg;
    cfg.N = 1;
    cfg.horizon = 0.5;
    cfg.service = ServiceDistribution::exponential(1.0);
    cfg.fluid_init = false;
    cfg.initial_in_service = 1;
    cfg.arrival_rate_override = 0.0;
    cfg.sample_times = {0.0};
    cfg.r_max = 5.0;
    cfg.n_r = 50;
    cfg.seed = 4;
    auto res = run_queue(cfg);
    REQUIRE(res.z_at.size() == 1);
    for (int l = 0; l <= 50; ++l)
        CHECK(res.z_at[0](l) == doctest::Approx(std::exp(-0.1 * l)).epsilon(1e-12));
    CHECK(res.x_at(0) == 1.0);
    CHECK(res.arrivals == 0);
}

TEST_CASE("conservation laws hold exactly") {
    QueueConfig cfg;
    cfg.N = 20;
    cfg.beta = 0.5;
    cfg.horizon = 1e9;
    cfg.max_events = 100000;
    cfg.service = ServiceDistribution::lomax(3.0, 2.0);
    cfg.interarrival = ServiceDistribution::gamma(2.0, 2.0);
    cfg.seed = 12;
    auto res = run_queue(cfg);
    CHECK(res.invariants.events == 100000);
    CHECK(res.invariants.exact());
}

TEST_CASE("M/M/N occupancy matches the birth-death oracle") {
    QueueConfig cfg;
    cfg.N = 5;
    cfg.beta = 0.5;
    cfg.horizon = 4000.0;
    cfg.service = ServiceDistribution::exponential(1.0);
    cfg.interarrival = ServiceDistribution::exponential(1.0);
    cfg.seed = 21;
    auto res = run_queue(cfg);
    const double lambda = 5.0 - 0.5 * std::sqrt(5.0);
    const double oracle = mmn_busy_fraction(5, lambda);
    // work conservation pins the same number
    CHECK(oracle == doctest::Approx(lambda / 5.0).epsilon(1e-6));
    CHECK(std::abs(res.busy_fraction - oracle) < 0.01);
}

TEST_CASE("Z at age zero counts the servers in use") {
    QueueConfig cfg;
    cfg.N = 30;
    cfg.beta = 0.5;
    cfg.horizon = 2.0;
    cfg.sample_times = {0.5, 1.0, 2.0};
    cfg.service = ServiceDistribution::lomax(3.0, 2.0);
    cfg.r_max = 5.0;
    cfg.n_r = 10;
    cfg.seed = 77;
    auto res = run_queue(cfg);
    // theta^0 = 1, so Z(t, 0) is exactly the number in service (<= N)
    for (const auto& z : res.z_at) {
        CHECK(z(0) == std::floor(z(0)));
        CHECK(z(0) <= 30.0);
    }
}

TEST_CASE("reproducible by seed") {
    QueueConfig cfg;
    cfg.N = 10;
    cfg.horizon = 5.0;
    cfg.sample_times = {1.0, 3.0};
    cfg.seed = 33;
    auto a = run_queue(cfg), b = run_queue(cfg);
    CHECK((a.x_at == b.x_at).all());
    cfg.seed = 34;
    auto c = run_queue(cfg);
    CHECK(!(a.x_at == c.x_at).all());
}

TEST_CASE("diffusion scaling") {
    QueueConfig cfg;
    cfg.N = 400;
    cfg.beta = 0.5;
    cfg.horizon = 1.0;
    cfg.sample_times = {0.0, 1.0};
    cfg.r_max = 4.0;
    cfg.n_r = 40;
    cfg.seed = 55;
    auto res = run_queue(cfg);
    auto sc = scale_state(res, cfg);

    // exact fluid start
    CHECK(sc.x_hat(0) == 0.0);
    // centering of the exponential family is e^{-r}
    for (int l = 0; l <= 40; ++l)
        CHECK(sc.fluid_centering(l) == doctest::Approx(std::exp(-0.1 * l)).epsilon(1e-5));

    // exponential collapse: Z_hat(t, r) = e^{-r} Z_hat(t, 0) up to the
    // quadrature error of the centering
    for (const auto& z : sc.z_hat)
        for (int l = 0; l <= 40; ++l)
            CHECK(std::abs(z(l) - std::exp(-0.1 * l) * z(0)) < 1e-3);
}

TEST_CASE("centered start has zero-mean fluctuations") {
    const int reps = 300;
    std::vector<double> x0(reps);
    for (int r = 0; r < reps; ++r) {
        QueueConfig cfg;
        cfg.N = 100;
        cfg.beta = 0.5;
        cfg.horizon = 0.25;
        cfg.sample_times = {0.25};
        cfg.r_max = 2.0;
        cfg.n_r = 2;
        cfg.seed = 7000 + r;
        auto res = run_queue(cfg);
        auto sc = scale_state(res, cfg);
        // E X_hat(t) ~ -beta t for small t at the fluid start
        x0[static_cast<std::size_t>(r)] = sc.x_hat(0) + cfg.beta * 0.25;
    }
    auto s = summarize(x0);
    CHECK(std::abs(s.mean) < 3.0 * s.se_mean + 0.05);
}
