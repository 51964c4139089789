#include "hwq/queue_sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace hwq {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// inverse of a decreasing function by doubling + bisection
double invert_decreasing(const std::function<double(double)>& f, double target, double hi0) {
    double lo = 0.0, hi = hi0;
    while (f(hi) > target && hi < 1e12) hi *= 2.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) > target ? lo : hi) = mid;
        if (hi - lo < 1e-13 * (1.0 + hi)) break;
    }
    return 0.5 * (lo + hi);
}

struct Job {
    double departure = 0.0;
    double entry = 0.0;
    bool operator>(const Job& o) const { return departure > o.departure; }
};

}  // namespace

QueueResult run_queue(const QueueConfig& cfg) {
    if (cfg.N < 1) throw std::invalid_argument("run_queue: N >= 1 required");
    QueueResult out;
    out.sample_times = cfg.sample_times;
    std::sort(out.sample_times.begin(), out.sample_times.end());
    out.x_at = Eigen::ArrayXd::Zero(static_cast<Eigen::Index>(out.sample_times.size()));

    const double lambda = cfg.arrival_rate_override >= 0.0
                              ? cfg.arrival_rate_override
                              : cfg.N - cfg.beta * std::sqrt(static_cast<double>(cfg.N));
    if (lambda < 0.0) throw std::invalid_argument("run_queue: negative arrival rate");
    out.lambda_n = lambda;

    SeqRng rng(cfg.seed, 7);

    std::vector<Job> serving;  // min-heap on departure time
    serving.reserve(cfg.N + 8);
    long long waiting = 0;

    if (cfg.fluid_init) {
        // ages i.i.d. from the stationary age density Gbar (mean-1 service),
        // residual time from the conditional survival given the age
        for (int j = 0; j < cfg.N; ++j) {
            const double u = rng.uniform();
            const double age = invert_decreasing(
                [&](double x) { return cfg.service.ccdf_integral(x); }, 1.0 - u, 4.0);
            const double ga = cfg.service.ccdf(age);
            const double v = rng.uniform();
            const double rem = invert_decreasing(
                [&](double x) { return cfg.service.ccdf(age + x); }, v * ga, 4.0);
            serving.push_back({rem, -age});
        }
    } else {
        const int n0 = std::max(cfg.initial_in_service, 0);
        if (n0 > cfg.N) throw std::invalid_argument("run_queue: more initial jobs than servers");
        for (int j = 0; j < n0; ++j) serving.push_back({cfg.service.sample(rng), 0.0});
    }
    std::make_heap(serving.begin(), serving.end(), std::greater<>());

    const long long in_service0 = static_cast<long long>(serving.size());
    long long in_service = in_service0;
    long long x_count = in_service + waiting;
    const long long x0 = x_count;
    long long e_count = 0, d_count = 0, k_count = 0;

    double next_arrival = lambda > 0.0 ? cfg.interarrival.sample(rng) / lambda : kInf;

    auto& inv = out.invariants;
    auto check_invariants = [&] {
        ++inv.events;
        if (x_count != x0 + e_count - d_count) ++inv.mass_balance_violations;
        if (std::min(x_count - cfg.N, 0LL) != in_service - cfg.N) ++inv.nonidling_violations;
        if (k_count != in_service - in_service0 + d_count) ++inv.entry_balance_violations;
    };

    auto record_sample = [&](std::size_t idx, double t) {
        out.x_at(static_cast<Eigen::Index>(idx)) = static_cast<double>(x_count);
        const double dr = cfg.r_max / cfg.n_r;
        Eigen::ArrayXd z = Eigen::ArrayXd::Zero(cfg.n_r + 1);
        Eigen::ArrayXd gbar, g, gp;
        for (const auto& job : serving) {
            const double age = t - job.entry;
            cfg.service.survival_sweep(dr, cfg.n_r + 1, gbar, g, gp, age);
            if (gbar(0) <= 0.0) continue;
            z += gbar / gbar(0);
        }
        out.z_at.push_back(std::move(z));
    };

    double t = 0.0, busy_integral = 0.0;
    std::size_t next_sample = 0;
    const long long max_events = cfg.max_events > 0 ? cfg.max_events
                                                    : std::numeric_limits<long long>::max();
    while (inv.events < max_events) {
        const double next_departure = serving.empty() ? kInf : serving.front().departure;
        const double t_next = std::min(next_arrival, next_departure);
        const double stop = std::min(cfg.horizon, t_next);
        busy_integral += static_cast<double>(in_service) * (stop - t);

        while (next_sample < out.sample_times.size() && out.sample_times[next_sample] <= stop) {
            record_sample(next_sample, out.sample_times[next_sample]);
            ++next_sample;
        }
        if (t_next > cfg.horizon) {
            t = cfg.horizon;
            break;
        }
        t = t_next;

        if (next_arrival <= next_departure) {  // arrivals first on ties
            ++e_count;
            ++x_count;
            if (in_service < cfg.N) {
                ++in_service;
                ++k_count;
                ++out.entries;
                serving.push_back({t + cfg.service.sample(rng), t});
                std::push_heap(serving.begin(), serving.end(), std::greater<>());
            } else {
                ++waiting;
            }
            next_arrival = t + cfg.interarrival.sample(rng) / lambda;
            ++out.arrivals;
        } else {
            std::pop_heap(serving.begin(), serving.end(), std::greater<>());
            serving.pop_back();
            ++d_count;
            --x_count;
            --in_service;
            ++out.departures;
            if (waiting > 0) {
                --waiting;
                ++in_service;
                ++k_count;
                ++out.entries;
                serving.push_back({t + cfg.service.sample(rng), t});
                std::push_heap(serving.begin(), serving.end(), std::greater<>());
            }
        }
        check_invariants();
    }
    while (next_sample < out.sample_times.size() && out.sample_times[next_sample] <= cfg.horizon) {
        record_sample(next_sample, out.sample_times[next_sample]);
        ++next_sample;
    }
    out.end_time = t;
    if (t > 0.0) out.busy_fraction = busy_integral / (static_cast<double>(cfg.N) * t);
    return out;
}

ScaledQueue scale_state(const QueueResult& res, const QueueConfig& cfg) {
    ScaledQueue out;
    const double rootn = std::sqrt(static_cast<double>(cfg.N));
    out.x_hat = (res.x_at - static_cast<double>(cfg.N)) / rootn;

    // fluid centering nu*(theta^r) = integral of Gbar(x + r) dx over x >= 0,
    // trapezoidal on a fine grid with the analytic remainder past the window
    const double dr = cfg.r_max / cfg.n_r;
    const double fine = std::min(dr, 0.01);
    const double window = 60.0;
    const auto m = static_cast<Eigen::Index>(std::llround((cfg.r_max + window) / fine)) + 1;
    Eigen::ArrayXd gbar, g, gp;
    cfg.service.survival_sweep(fine, static_cast<int>(m), gbar, g, gp);
    Eigen::ArrayXd suffix(m);
    suffix(m - 1) = 0.0;
    for (Eigen::Index i = m - 2; i >= 0; --i)
        suffix(i) = suffix(i + 1) + 0.5 * fine * (gbar(i) + gbar(i + 1));

    const auto stride = static_cast<Eigen::Index>(std::llround(dr / fine));
    out.fluid_centering = Eigen::ArrayXd::Zero(cfg.n_r + 1);
    const double rem = cfg.service.ccdf_integral(fine * (m - 1));
    for (int l = 0; l <= cfg.n_r; ++l)
        out.fluid_centering(l) = suffix(std::min<Eigen::Index>(l * stride, m - 1)) + rem;

    for (const auto& z : res.z_at)
        out.z_hat.push_back((z - cfg.N * out.fluid_centering) / rootn);
    return out;
}

}  // namespace hwq
