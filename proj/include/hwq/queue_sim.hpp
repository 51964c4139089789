#pragma once

#include <vector>

#include "hwq/distributions.hpp"
#include "hwq/grid.hpp"

namespace hwq {

/// GI/GI/N configuration in the heavy-traffic scaling: the arrival rate is
/// N - beta sqrt(N) for unit-mean service, unless overridden.
struct QueueConfig {
    int N = 1;
    double beta = 0.5;
    double horizon = 1.0;
    ServiceDistribution service = ServiceDistribution::exponential(1.0);
    ServiceDistribution interarrival = ServiceDistribution::exponential(1.0);  // mean-1 shape
    std::uint64_t seed = 0;
    std::vector<double> sample_times;
    double r_max = 10.0;
    int n_r = 100;
    bool fluid_init = true;          // N jobs in service, ages from the stationary density
    int initial_in_service = -1;     // when not fluid: jobs entering empty service at t=0
    double arrival_rate_override = -1.0;  // >= 0 replaces N - beta sqrt(N); 0 disables arrivals
    long long max_events = -1;
};

struct QueueInvariantReport {
    long long events = 0;
    long long mass_balance_violations = 0;   // X = X(0) + E - D
    long long nonidling_violations = 0;      // (X - N) ^ 0 = in_service - N
    long long entry_balance_violations = 0;  // K = in_service - in_service(0) + D
    bool exact() const {
        return mass_balance_violations == 0 && nonidling_violations == 0 &&
               entry_balance_violations == 0;
    }
};

struct QueueResult {
    std::vector<double> sample_times;
    Eigen::ArrayXd x_at;               // raw job counts at the sample times
    std::vector<Eigen::ArrayXd> z_at;  // Z^N(t, .) on the age grid
    QueueInvariantReport invariants;
    long long arrivals = 0, departures = 0, entries = 0;
    double lambda_n = 0.0;
    double end_time = 0.0;
    double busy_fraction = 0.0;  // time-average of in-service servers / N
};

QueueResult run_queue(const QueueConfig& cfg);

struct ScaledQueue {
    Eigen::ArrayXd x_hat;
    std::vector<Eigen::ArrayXd> z_hat;
    Eigen::ArrayXd fluid_centering;  // nu*(theta^r) on the age grid
};

/// Diffusion scaling: X_hat = (X - N)/sqrt(N) and Z_hat centered by the fluid
/// value of Z, N integral of Gbar(x + r) dx, computed by quadrature.
ScaledQueue scale_state(const QueueResult& res, const QueueConfig& cfg);

}  // namespace hwq
