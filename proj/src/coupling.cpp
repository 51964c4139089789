#include "hwq/coupling.hpp"

#include <cmath>
#include <stdexcept>

#include "hwq/parallel.hpp"

namespace hwq {

namespace {

int grid_index(double x, double delta, const char* what) {
    const double ratio = x / delta;
    const auto k = static_cast<int>(std::llround(ratio));
    if (k < 0 || std::abs(ratio - k) > 1e-9)
        throw std::invalid_argument(std::string(what) + ": value off the grid");
    return k;
}

}  // namespace

CoupledPair build_coupled(const InitialCondition& y, const InitialCondition& yt, double lambda,
                          const DiffusionGrid& grid, const ServiceDistribution& d, double sigma,
                          double beta, std::uint64_t seed, const CouplingOptions& opt) {
    if (y.x0 < 0.0 || yt.x0 < 0.0)
        throw std::invalid_argument("build_coupled: initial conditions must have x0 >= 0");
    if (lambda <= 0.0) throw std::invalid_argument("build_coupled: lambda must be positive");

    CoupledPair p;
    p.grid = grid;
    p.lambda = lambda;
    p.sigma = sigma;
    p.beta = beta;
    p.x0 = y.x0;
    p.x0_tilde = yt.x0;
    p.seed = seed;
    p.y = y;
    p.yt = yt;
    p.dist = d;

    BuildOptions bo;
    bo.with_hazard_conv = opt.full;
    bo.snapshot_times = opt.snapshot_times;
    auto path = build_diffusion(y, grid, d, sigma, beta, seed, bo);
    p.E = path.E;
    p.X = path.X;
    p.K = path.K;
    p.Z = std::move(path.snapshots);
    p.boundary_residual_sup = path.boundary_residual_sup;

    const int n = grid.n_t;
    const double dt = grid.dt;
    Eigen::ArrayXd gbar_n, g_n, gp_n;
    d.survival_sweep(dt, n + 1, gbar_n, g_n, gp_n);
    const double g0 = g_n(0);

    Eigen::ArrayXd dz0_t(n + 1), dz0t_t(n + 1);
    for (int k = 0; k <= n; ++k) {
        dz0_t(k) = y.dz0(dt * k);
        dz0t_t(k) = yt.dz0(dt * k);
    }

    // exact gap and the coupled count path
    const double dx0 = y.x0 - yt.x0;
    Eigen::ArrayXd ts = Eigen::ArrayXd::LinSpaced(n + 1, 0.0, dt * n);
    p.dX = TimePath(dt, dx0 * (-lambda * ts).exp());
    p.Xt = TimePath(dt, p.X.v - p.dX.v);
    p.x_integral_residual =
        (p.Xt.v - (yt.x0 - y.x0 - lambda * cumtrapz(p.Xt.v, dt) + p.X.v +
                   lambda * cumtrapz(p.X.v, dt)))
            .abs()
            .maxCoeff();

    // gap of the negative parts: X^- - Xt^-, a path quantity
    Eigen::ArrayXd dxm = (-p.X.v).max(0.0) - (-p.Xt.v).max(0.0);

    const TimePath* u_ptr = opt.renewal_u;
    TimePath u_local;
    if (u_ptr == nullptr) {
        u_local = renewal_density(d, grid.t_max(), dt);
        u_ptr = &u_local;
    }

    // gap drift via its own renewal equation; the martingale-measure terms
    // cancel in the difference, so only paths enter
    TimePath f_bar(dt, (dz0_t - dz0t_t) + g0 * dxm + convolve_sampled(dxm, gp_n, dt));
    auto dr_sol = solve_renewal(f_bar, d, *u_ptr);
    p.dR = std::move(dr_sol.phi);
    p.renewal_residual = dr_sol.residual_sup;
    p.u_minus_one_l1 = dr_sol.u_minus_one_l1;
    p.u_tail_remainder = dr_sol.tail_remainder;

    // Girsanov drift and log weight along this Brownian path
    p.m = TimePath(dt, -(p.dR.v + lambda * p.dX.v));
    Eigen::ArrayXd logn(n + 1);
    logn(0) = 0.0;
    for (int i = 0; i < n; ++i) {
        const double db = (p.E.v(i + 1) - p.E.v(i) + beta * dt) / sigma;
        logn(i + 1) = logn(i) + p.m.v(i) * db - 0.5 * p.m.v(i) * p.m.v(i) * dt;
    }
    p.logN = TimePath(dt, std::move(logn));

    if (!opt.full) return p;

    // R(t) = z0'(t) + H_t(h) - g(0) K(t) - (K * g')(t)
    p.R = TimePath(dt, dz0_t + path.h_haz.v - g0 * p.K.v - convolve_sampled(p.K.v, gp_n, dt));

    // Kbar, then Rt through its renewal equation, then Kt
    p.Kbar = TimePath(dt, p.E.v - (p.Xt.v.max(0.0) - std::max(yt.x0, 0.0)) +
                              cumtrapz(p.R.v + lambda * (p.X.v - p.Xt.v), dt));
    TimePath f_tilde(dt, dz0t_t - g0 * p.Kbar.v - convolve_sampled(p.Kbar.v, gp_n, dt) +
                             path.h_haz.v);
    auto rt_sol = solve_renewal(f_tilde, d, *u_ptr);
    p.Rt = std::move(rt_sol.phi);
    p.Kt = TimePath(dt, p.Kbar.v - cumtrapz(p.Rt.v, dt));
    p.dr_consistency_sup = ((p.R.v - p.Rt.v) - p.dR.v).abs().maxCoeff();

    // coupled boundary and the re-solved CMS identity with the tilted input
    Eigen::ArrayXd zt0(n + 1);
    for (int k = 0; k <= n; ++k) zt0(k) = yt.z0(dt * k) - path.h_one.v(k);
    p.boundary_tilde = TimePath(dt, zt0 + gamma_zero_path(p.Kt, d).v);
    p.boundary_tilde_sup = (p.boundary_tilde.v - p.Xt.v.min(0.0)).abs().maxCoeff();

    TimePath e_tilde(dt, p.E.v - cumtrapz(p.m.v, dt));
    auto re = cms_map(e_tilde, yt.x0, TimePath(dt, zt0), d);
    p.cms_tilde_residual = std::max((re.x.v - p.Xt.v).abs().maxCoeff(),
                                    (re.kappa.v - p.Kt.v).abs().maxCoeff());

    // Ztilde snapshots from the Z snapshots: the noise terms are shared, so
    // only the initial gap and the Gamma term of K - Kt differ
    for (const auto& snap : p.Z) {
        const int k = grid_index(snap.t, dt, "snapshot time");
        const auto dk = TimePath(dt, (p.K.v - p.Kt.v).head(k + 1).eval());
        const auto gdk = gamma_op(dk, d, grid.r_max(), grid.n_r);
        Eigen::ArrayXd vals(grid.n_r + 1), ders(grid.n_r + 1);
        for (int l = 0; l <= grid.n_r; ++l) {
            const double a = snap.t + dt * l;
            vals(l) = snap.z.f.v(l) - (y.z0(a) - yt.z0(a)) - gdk.f.v(l);
            ders(l) = snap.z.df.v(l) - (y.dz0(a) - yt.dz0(a)) - gdk.df.v(l);
        }
        p.Zt.push_back({snap.t, H1GridFunction(GridFunction(dt, std::move(vals)),
                                               GridFunction(dt, std::move(ders)))});
    }
    return p;
}

std::vector<DecayRow> decay_report(const CoupledPair& pair, const std::vector<double>& times) {
    const auto& d = pair.dist;
    const double dt = pair.grid.dt;
    const int n_r = pair.grid.n_r;
    Eigen::ArrayXd gbar_long, g_long, gp_long;
    d.survival_sweep(dt, pair.grid.n_t + n_r + 2, gbar_long, g_long, gp_long);

    // Gbar as an H1 element, for the dX^- term
    double gbar_h1;
    {
        Eigen::ArrayXd v = gbar_long.head(n_r + 1), dv = -g_long.head(n_r + 1);
        gbar_h1 = h1_norm(H1GridFunction(GridFunction(dt, v), GridFunction(dt, dv)));
    }

    const Eigen::ArrayXd dxm_path = (-pair.X.v).max(0.0) - (-pair.Xt.v).max(0.0);

    std::vector<DecayRow> rows;
    for (double t : times) {
        const int k = grid_index(t, dt, "decay time");
        if (k > pair.grid.n_t) throw std::invalid_argument("decay_report: time past horizon");
        DecayRow row;
        row.t = t;
        row.abs_dx = std::abs(pair.dX.v(k));
        const double dxm_t = dxm_path(k);

        // gap profile through the renewal-route entry gap (better conditioned
        // than subtracting the two large solutions)
        const Eigen::ArrayXd dk_det = -dxm_path - cumtrapz(pair.dR.v, dt);
        const auto dk = TimePath(dt, dk_det.head(k + 1).eval());
        const auto gdk = gamma_op(dk, d, pair.grid.r_max(), n_r);
        Eigen::ArrayXd dzv(n_r + 1), dzd(n_r + 1);
        for (int l = 0; l <= n_r; ++l) {
            const double a = t + dt * l;
            dzv(l) = (pair.y.z0(a) - pair.yt.z0(a)) + gdk.f.v(l);
            dzd(l) = (pair.y.dz0(a) - pair.yt.dz0(a)) + gdk.df.v(l);
        }
        row.dz_h1 = h1_norm(H1GridFunction(GridFunction(dt, dzv), GridFunction(dt, dzd)));

        // decomposition terms
        Eigen::ArrayXd tz(n_r + 1), tzd(n_r + 1);
        for (int l = 0; l <= n_r; ++l) {
            const double a = t + dt * l;
            tz(l) = pair.y.z0(a) - pair.yt.z0(a);
            tzd(l) = pair.y.dz0(a) - pair.yt.dz0(a);
        }
        row.term_dz0 = h1_norm(H1GridFunction(GridFunction(dt, tz), GridFunction(dt, tzd)));
        row.term_gbar = gbar_h1 * std::abs(dxm_t);

        // zeta = int dX^-(s) g(t + r - s) ds, via the Gamma identity
        const auto gxm =
            gamma_op(TimePath(dt, dxm_path.head(k + 1).eval()), d, pair.grid.r_max(), n_r);
        Eigen::ArrayXd zv(n_r + 1), zd(n_r + 1);
        for (int l = 0; l <= n_r; ++l) {
            zv(l) = gbar_long(l) * dxm_t - gxm.f.v(l);
            zd(l) = -g_long(l) * dxm_t - gxm.df.v(l);
        }
        row.term_zeta = h1_norm(H1GridFunction(GridFunction(dt, zv), GridFunction(dt, zd)));

        // xi = -int dR(s) Gbar(t + r - s) ds
        Eigen::ArrayXd xv = Eigen::ArrayXd::Zero(n_r + 1), xd = Eigen::ArrayXd::Zero(n_r + 1);
        if (k > 0) {
            for (int l = 0; l <= n_r; ++l) {
                double accv = 0.5 * (pair.dR.v(0) * gbar_long(k + l) + pair.dR.v(k) * gbar_long(l));
                double accd = 0.5 * (pair.dR.v(0) * g_long(k + l) + pair.dR.v(k) * g_long(l));
                for (int j = 1; j < k; ++j) {
                    accv += pair.dR.v(j) * gbar_long(k + l - j);
                    accd += pair.dR.v(j) * g_long(k + l - j);
                }
                xv(l) = -dt * accv;
                xd(l) = dt * accd;
            }
        }
        row.term_xi = h1_norm(H1GridFunction(GridFunction(dt, xv), GridFunction(dt, xd)));

        // closure of the decomposition
        Eigen::ArrayXd sv = tz - gbar_long.head(n_r + 1) * dxm_t + zv + xv;
        Eigen::ArrayXd sd = tzd + g_long.head(n_r + 1) * dxm_t + zd + xd;
        row.sum_defect = h1_norm(H1GridFunction(GridFunction(dt, (dzv - sv).eval()),
                                                GridFunction(dt, (dzd - sd).eval())));
        rows.push_back(row);
    }
    return rows;
}

DeltaRBound delta_r_bound_check(const CoupledPair& pair) {
    DeltaRBound out;
    const auto& d = pair.dist;
    out.lhs = path_l2(pair.dR);

    const double dt = pair.grid.dt;
    const int n_r = pair.grid.n_r;
    Eigen::ArrayXd dz(n_r + 1), dzd(n_r + 1);
    for (int l = 0; l <= n_r; ++l) {
        const double r = dt * l;
        dz(l) = pair.y.z0(r) - pair.yt.z0(r);
        dzd(l) = pair.y.dz0(r) - pair.yt.dz0(r);
    }
    out.dz0_h1 = h1_norm(H1GridFunction(GridFunction(dt, dz), GridFunction(dt, dzd)));
    out.abs_dx0 = std::abs(pair.x0 - pair.x0_tilde);

    out.c1 = 1.0 + pair.u_minus_one_l1;
    out.c2 = 1.0;
    out.big_c = (d.pdf(0.0) + d.h2_bound()) / std::sqrt(2.0 * pair.lambda);
    out.cbar1 = out.c1 + out.c2;
    out.cbar2 = (out.c1 + out.c2) * out.big_c;
    out.rhs = out.cbar1 * out.dz0_h1 + out.cbar2 * out.abs_dx0;
    out.pass = out.lhs <= out.rhs + 1e-12;
    out.truncation_flag =
        pair.u_tail_remainder * (out.dz0_h1 + out.big_c * out.abs_dx0) > (out.rhs - out.lhs);
    return out;
}

GirsanovReport girsanov_weight(const CoupledPair& pair) {
    GirsanovReport rep;
    rep.logN = pair.logN;
    rep.m_l2_sq = trapz(pair.m.v.square().eval(), pair.grid.dt);
    rep.bound = 2.0 * trapz(pair.dR.v.square().eval(), pair.grid.dt) +
                2.0 * pair.lambda * pair.lambda * trapz(pair.dX.v.square().eval(), pair.grid.dt);
    rep.ok = rep.m_l2_sq <= rep.bound + 1e-12;
    return rep;
}

std::vector<double> girsanov_weight_samples(const CoupledPair& pair, int reps, std::uint64_t seed,
                                            int threads) {
    const auto u = renewal_density(pair.dist, pair.grid.t_max(), pair.grid.dt);
    std::vector<double> out(reps);
    parallel_for(
        reps,
        [&](int rep) {
            CouplingOptions opt;
            opt.full = false;
            opt.renewal_u = &u;
            const auto p =
                build_coupled(pair.y, pair.yt, pair.lambda, pair.grid, pair.dist, pair.sigma,
                              pair.beta, seed + 0x51ED2701u * (rep + 1), opt);
            out[rep] = std::exp(p.logN.v(pair.grid.n_t));
        },
        threads);
    return out;
}

}  // namespace hwq
