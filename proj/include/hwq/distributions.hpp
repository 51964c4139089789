#pragma once

#include <Eigen/Core>
#include <map>
#include <string>

#include "hwq/rng.hpp"

namespace hwq {

enum class Family { Exponential, Lomax, LogNormal, Gamma, PhaseType };

std::string family_name(Family f);
Family family_from_name(const std::string& name);

/// Service distribution with closed-form survival function, density, density
/// derivative and hazard machinery.  Values are immutable after construction;
/// normalization to mean one (when requested) rescales the scale parameter and
/// keeps the original parameters in `original_params`.
class ServiceDistribution {
public:
    static ServiceDistribution exponential(double rate, bool normalize_mean = true);
    static ServiceDistribution lomax(double shape, double scale, bool normalize_mean = true);
    static ServiceDistribution log_normal(double mu, double sigma, bool normalize_mean = true);
    static ServiceDistribution gamma(double shape, double rate, bool normalize_mean = true);
    static ServiceDistribution phase_type(Eigen::RowVectorXd initial, Eigen::MatrixXd subgenerator,
                                          bool normalize_mean = true);
    /// Erlang-k, each stage at rate `stage_rate`.
    static ServiceDistribution erlang(int stages, double stage_rate, bool normalize_mean = true);

    Family family() const { return family_; }
    const std::map<std::string, double>& original_params() const { return original_; }
    double normalization_scale() const { return norm_scale_; }

    double ccdf(double x) const;           // survival function
    double cdf(double x) const { return 1.0 - ccdf(x); }
    double pdf(double x) const;            // density
    double dpdf(double x) const;           // density derivative
    double hazard(double x) const;         // pdf/ccdf, analytic limit past the far tail
    double h2(double x) const;             // dpdf/ccdf, analytic limit past the far tail
    double ccdf_integral(double x) const;  // integral of ccdf over [x, inf)

    /// ccdf, pdf and dpdf sampled at x = offset + k*dr, k = 0..n-1.  For
    /// phase-type this steps the matrix exponential once per point instead of
    /// restarting the uniformization series.
    void survival_sweep(double dr, int n, Eigen::ArrayXd& gbar, Eigen::ArrayXd& g,
                        Eigen::ArrayXd& gp, double offset = 0.0) const;

    double mean() const { return mean_; }
    double hazard_limit() const { return h_limit_; }
    double h2_limit() const { return h2_limit_; }
    double hazard_bound() const { return h_bound_; }  // sup hazard (analytic where available)
    double h2_bound() const { return h2_bound_; }
    double hazard_tail_threshold() const { return tail_x_; }

    double sample(SeqRng& rng) const;

    // family parameters after normalization
    double p1() const { return p1_; }
    double p2() const { return p2_; }
    const Eigen::RowVectorXd& ph_initial() const { return ph_alpha_; }
    const Eigen::MatrixXd& ph_subgenerator() const { return ph_S_; }

private:
    ServiceDistribution() = default;
    void finalize(bool normalize_mean);
    double raw_mean() const;
    void ph_front(double x, Eigen::RowVectorXd& out) const;  // alpha * expm(x S)
    Eigen::MatrixXd ph_expm(double x) const;

    Family family_ = Family::Exponential;
    double p1_ = 1.0, p2_ = 0.0;  // rate | (shape, scale) | (mu, sigma) | (shape, rate)
    Eigen::RowVectorXd ph_alpha_;
    Eigen::MatrixXd ph_S_;
    Eigen::VectorXd ph_exit_;   // -S 1
    Eigen::VectorXd ph_s2one_;  // S^2 1
    double ph_q_ = 0.0;         // uniformization rate

    std::map<std::string, double> original_;
    double norm_scale_ = 1.0;
    double mean_ = 1.0;
    double h_limit_ = 0.0, h2_limit_ = 0.0;
    double h_bound_ = 0.0, h2_bound_ = 0.0;
    double tail_x_ = 0.0;  // hazard switches to the analytic limit past this point
};

struct AssumptionReport {
    double h_sup = 0.0, h_argmax = 0.0;
    double h2_sup = 0.0;
    double hazard_limit = 0.0, h2_limit = 0.0;
    double tail_exponent_estimate = 0.0;
    double mean = 0.0, second_moment = 0.0;
    double mean_tail_remainder = 0.0, second_moment_tail_remainder = 0.0;
    double grid_r_max = 0.0;
    bool pass_density_mean = false;  // continuous density, mean normalized to 1
    bool pass_hazard_bounded = false;
    bool pass_h2_bounded = false;
    bool pass_tail = false;  // finite (2+eps) moment signature
    bool pass() const {
        return pass_density_mean && pass_hazard_bounded && pass_h2_bounded && pass_tail;
    }
};

struct AssumptionCheckOptions {
    double r_max = 0.0;  // 0: grow until ccdf < 1e-6
    int points = 40001;
};

AssumptionReport check_assumptions(const ServiceDistribution& d, AssumptionCheckOptions opt = {});

// Regularized incomplete gamma functions (series + continued fraction).
double gamma_q(double a, double x);  // upper
double gamma_p(double a, double x);  // lower

}  // namespace hwq
