#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "hwq/distributions.hpp"
#include "hwq/grid.hpp"
#include "hwq/kernels.hpp"
#include "hwq/noise.hpp"
#include "hwq/stats.hpp"

namespace hwq {

/// Shared age/time grid of the diffusion machinery: dr == dt so that
/// translation by elapsed time is exact index shifting.
struct DiffusionGrid {
    double dt = 0.0;
    int n_t = 0;
    int n_r = 0;

    double t_max() const { return dt * n_t; }
    double r_max() const { return dt * n_r; }
    static DiffusionGrid make(double dt, double t_max, double r_max);
};

/// Initial state (x0, z0) given through callables so the construction can
/// evaluate z0(t + r) past the age grid (analytic tail rule).
struct InitialCondition {
    double x0 = 0.0;
    std::function<double(double)> z0;
    std::function<double(double)> dz0;
};

/// Canonical family z0(r) = (x0 ^ 0) Gbar(r) + amp sin(freq r) e^{-decay r}.
InitialCondition make_initial(double x0, const ServiceDistribution& d, double amp = 0.0,
                              double freq = 1.0, double decay = 1.0);

struct CmsSolution {
    TimePath kappa, x;
    double residual1_sup = 0.0;  // boundary equation defect
    double residual2_sup = 0.0;  // kappa identity defect (zero by construction)
};

/// Centered many-server map: (eta, x0, zeta) -> (kappa, x).
CmsSolution cms_map(const TimePath& eta, double x0, const TimePath& zeta,
                    const ServiceDistribution& d);

struct ZSnapshot {
    double t = 0.0;
    H1GridFunction z;
};

struct DiffusionPath {
    DiffusionGrid grid;
    TimePath E, X, K;
    TimePath boundary;  // Z(t, 0)
    TimePath h_one;     // H_t(1)
    TimePath h_haz;     // H_t(h), when requested
    std::vector<ZSnapshot> snapshots;
    double boundary_residual_sup = 0.0;
    double cms_residual_sup = 0.0;
    std::uint64_t seed = 0;
};

struct BuildOptions {
    std::vector<double> snapshot_times;
    bool with_hazard_conv = false;
    double noise_amplitude = 1.0;  // 0 silences the martingale measure (determinism checks)
};

std::vector<double> snapshot_times_by_stride(const DiffusionGrid& grid, int stride);

DiffusionPath build_diffusion(const InitialCondition& y0, const DiffusionGrid& grid,
                              const ServiceDistribution& d, double sigma, double beta,
                              std::uint64_t seed, const BuildOptions& opt = {});

/// Same construction driven by an existing base noise field coarsened by a
/// dyadic factor; used by the convergence harnesses to keep refinements of one
/// seed coupled.
DiffusionPath build_diffusion_on(const InitialCondition& y0, const ServiceDistribution& d,
                                 double sigma, double beta, const NoiseField& base, int coarsen,
                                 const BuildOptions& opt = {});

struct SpdeProbe {
    double t = 0.0, r = 0.0;
};

struct SpdeResidual {
    double t = 0.0, r = 0.0;
    double res_z = 0.0, res_x = 0.0;
};

/// Residuals of the integrated SPDE at the probe points, with the
/// time-integral of the weak derivative evaluated by trapezoidal quadrature of
/// the derivative formula (the residual is exactly the defect of that
/// quadrature against the closed-form integral identity).
std::vector<SpdeResidual> spde_residuals(const InitialCondition& y0, const ServiceDistribution& d,
                                         double sigma, double beta, const NoiseField& base,
                                         int coarsen, const std::vector<SpdeProbe>& probes);

struct TransportSolution {
    H1GridFunction xi;
    std::vector<double> probe_r;
    std::vector<double> residual;  // transport equation defect at the probes
    double residual_sup = 0.0;
};

/// xi(t, .) = Gamma_t F solving the inhomogeneous transport equation; F(0)
/// must vanish.
TransportSolution transport_solution(const TimePath& F, const ServiceDistribution& d, double r_max,
                                     int n_r, int probe_count = 9);

struct MarkovShiftResult {
    double s = 0.0, t = 0.0;
    double res_zshift_sup = 0.0;   // shift identity for Z
    double res_lambda = 0.0;       // re-solved CMS against the shifted path
    double telescoping_sup = 0.0;  // Gamma shift telescoping identity
};

MarkovShiftResult markov_shift_check(const InitialCondition& y0, const ServiceDistribution& d,
                                     double sigma, double beta, const NoiseField& base, int coarsen,
                                     double s, double t, const std::vector<double>& probe_r);

struct StationarySample {
    double x = 0.0, z_h1 = 0.0, z_at0 = 0.0;
};

struct StationaryEstimate {
    Summary x, z_h1, z_at0;
    std::vector<StationarySample> samples;
};

/// Monte Carlo sample of (X(T), |Z(T)|_H1, Z(T,0)) over replications.
StationaryEstimate estimate_stationary(const InitialCondition& y0, const DiffusionGrid& grid,
                                       const ServiceDistribution& d, double sigma, double beta,
                                       int reps, std::uint64_t seed, bool collect_z = true,
                                       int threads = 0);

}  // namespace hwq
