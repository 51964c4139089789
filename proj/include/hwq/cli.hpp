#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "hwq/distributions.hpp"

namespace hwq {

/// Parameter record shared by the subcommands; JSON config file first, flags
/// override.
struct ExperimentConfig {
    double dt = 0.01, t_max = 10.0, r_max = 20.0;
    std::string family = "exponential";
    std::map<std::string, double> params{{"rate", 1.0}};
    bool normalize_mean = true;
    double sigma = 1.0, beta = 0.5, lambda = 1.0;
    int reps = 1;
    std::uint64_t seed = 1;
    int threads = 0;
    std::string out_dir = "out";
    bool allow_nonpositive_beta = false;

    double x0 = 0.0, x0_tilde = 1.0;
    double perturb_amp = 0.0, perturb_freq = 1.0, perturb_decay = 1.0;
    double perturb_amp_tilde = 0.0;
    int z_stride = 0;
    std::vector<double> snapshot_times;
    std::vector<double> decay_times;

    int queue_n = 100;
    double queue_horizon = 2.0;
    std::string interarrival_family = "exponential";
    std::map<std::string, double> interarrival_params{{"rate", 1.0}};
    std::vector<double> queue_sample_times;
    int queue_n_r = 100;
    double queue_r_max = 10.0;
    long long queue_max_events = -1;

    std::string order_target = "spde";  // spde | markov | fubini

    nlohmann::json echo() const;
    void load_json(const nlohmann::json& j);
};

ServiceDistribution make_distribution(const std::string& family,
                                      const std::map<std::string, double>& params,
                                      bool normalize_mean);

/// Entry point used by both the binary and the tests; returns the exit code.
int run_cli(const std::vector<std::string>& args);

}  // namespace hwq
