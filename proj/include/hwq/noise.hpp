#pragma once

#include <functional>
#include <vector>

#include "hwq/distributions.hpp"
#include "hwq/grid.hpp"

namespace hwq {

inline constexpr std::uint64_t kStreamBrownian = 0;
inline constexpr std::uint64_t kStreamNoise = 1;

enum class NoiseWeight { One, Hazard };

/// Driving Brownian motion sampled on the time grid, B(0) = 0.
struct BrownianPath {
    TimePath b;
    std::uint64_t seed = 0;

    static BrownianPath generate(std::uint64_t seed, double dt, Eigen::Index steps);
    /// Same Brownian motion read on a grid coarsened by `stride`.
    BrownianPath subsample(int stride) const;
};

/// White-noise increments of the martingale measure on the age x time grid.
/// Entry (j,i) is centered Gaussian with variance g(x_j*) dr dt, x_j* the cell
/// midpoint.  Columns are produced on demand from a counter rng, so a field is
/// cheap to hold and bit-reproducible for a given seed.
class NoiseField {
public:
    NoiseField(const ServiceDistribution& d, std::uint64_t seed, double dr, int n_r, double dt,
               int n_t, double amplitude = 1.0);

    void column(int i, Eigen::ArrayXd& out) const;  // fills n_r increments of step i

    const ServiceDistribution& dist() const { return *d_; }
    double dr() const { return dr_; }
    double dt() const { return dt_; }
    int n_r() const { return n_r_; }
    int n_t() const { return n_t_; }
    std::uint64_t seed() const { return seed_; }
    double truncated_mass() const { return trunc_mass_; }  // neglected variance, ccdf(r_max)
    const Eigen::ArrayXd& cell_sd() const { return sd_; }
    const Eigen::ArrayXd& midpoint_ccdf() const { return gbar_mid_; }

private:
    const ServiceDistribution* d_;
    CounterRng rng_;
    std::uint64_t seed_;
    double dr_, dt_;
    int n_r_, n_t_;
    Eigen::ArrayXd sd_, gbar_mid_;
    double trunc_mass_;
};

/// M_t(phi) by direct summation over cells, phi evaluated at cell midpoints
/// and left time endpoints.
double noise_integral(const NoiseField& M, const std::function<double(double, double)>& phi,
                      double t);

/// Psi integrand weights for M_t(Psi_{t+r} f) as a matrix over (cell, step);
/// reusable across replications of the same geometry.
Eigen::MatrixXd psi_weights(const ServiceDistribution& d, double dr, int n_r, double dt, int n_t,
                            double t, double r, NoiseWeight w);

/// Sum of weights(j,i) * dM(j,i) over all steps with t_i < t.
double weighted_sum(const NoiseField& M, const Eigen::MatrixXd& weights, double t);

/// M_t(Psi_{t+r} f), one shot.
double stoch_conv(const NoiseField& M, double t, double r, NoiseWeight w);

/// Streaming evaluator for the stochastic convolutions on an aligned grid
/// (dr == dt on the macro level).  Maintains diagonal and row prefix sums of
/// the increments so that M_t(1), M_t(Psi_{t+r}f) and M_t(Phi_r 1) are
/// available at every step at O(n_r + k) cost.  A coarsening factor c >= 1
/// aggregates c x c blocks of the base field, which keeps dyadic refinements
/// of the same seed coupled.
class NoiseWalker {
public:
    NoiseWalker(const NoiseField& base, int coarsen, int max_age_index);

    int steps() const { return k_; }       // macro steps consumed; t = steps * delta
    int n_t() const { return n_t_; }       // macro steps available
    int n_r() const { return n_r_; }
    double delta() const { return delta_; }

    void step();

    double m_one() const { return m1_; }
    /// M_t(Psi_{t + l*delta} f)
    double psi_value(NoiseWeight w, int age_index) const;
    /// M_t(Phi_{l*delta} 1)
    double phi_value(int age_index) const;
    Eigen::ArrayXd psi_profile(NoiseWeight w, int n_points) const;
    Eigen::ArrayXd phi_profile(int n_points) const;

    struct State {
        Eigen::ArrayXd q, cn;
        double m1 = 0.0;
        int k = 0;
    };
    State save() const;
    double psi_value_at(const State& s, NoiseWeight w, int age_index) const;
    double phi_value_at(const State& s, int age_index) const;

private:
    double psi_sum(const Eigen::ArrayXd& q, int k, NoiseWeight w, int age_index) const;
    double phi_sum(const Eigen::ArrayXd& cn, int age_index) const;

    const NoiseField* base_;
    int coarsen_, n_r_, n_t_, k_ = 0;
    double delta_;
    Eigen::ArrayXd q_;        // diagonal prefix sums of dM / Gbar(x_j*)
    Eigen::ArrayXd cn_;       // row prefix sums of dM / Gbar(x_j*)
    double m1_ = 0.0;         // running M_t(1)
    Eigen::ArrayXd tab_gbar_, tab_g_;  // Gbar, g at macro midpoints (m + 1/2) delta
    Eigen::ArrayXd scratch_base_, scratch_macro_;
};

/// Pathwise residual of the Fubini identity
///   M_t(Psi_{t+r}1) - M_t(Phi_r 1) + integral_0^t M_s(Psi_{s+r}h) ds
/// (trapezoid in s) at every macro step, for each requested age index.
std::vector<Eigen::ArrayXd> fubini_residual_paths(const NoiseField& base,
                                                  int coarsen,
                                                  const std::vector<int>& age_indices);

/// Single-point residual of the identity at time t and age r (aligned grid).
double fubini_residual(const NoiseField& M, double t, double r);

}  // namespace hwq
