#include "hwq/diffusion.hpp"

#include <algorithm>
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

DiffusionGrid DiffusionGrid::make(double dt, double t_max, double r_max) {
    if (dt <= 0.0 || t_max <= 0.0 || r_max <= 0.0)
        throw std::invalid_argument("DiffusionGrid: positive dt, t_max, r_max required");
    DiffusionGrid g;
    g.dt = dt;
    g.n_t = grid_index(t_max, dt, "t_max");
    g.n_r = grid_index(r_max, dt, "r_max");
    return g;
}

InitialCondition make_initial(double x0, const ServiceDistribution& d, double amp, double freq,
                              double decay) {
    InitialCondition y;
    y.x0 = x0;
    const double neg = std::min(x0, 0.0);
    y.z0 = [neg, d, amp, freq, decay](double r) {
        return neg * d.ccdf(r) + amp * std::sin(freq * r) * std::exp(-decay * r);
    };
    y.dz0 = [neg, d, amp, freq, decay](double r) {
        return -neg * d.pdf(r) +
               amp * (freq * std::cos(freq * r) - decay * std::sin(freq * r)) *
                   std::exp(-decay * r);
    };
    return y;
}

CmsSolution cms_map(const TimePath& eta, double x0, const TimePath& zeta,
                    const ServiceDistribution& d) {
    if (eta.v.size() != zeta.v.size() || eta.dt != zeta.dt)
        throw std::invalid_argument("cms_map: eta and zeta grids differ");
    if (std::abs(eta.v(0)) > 1e-9) throw std::invalid_argument("cms_map: eta(0) != 0");
    if (std::abs(zeta.v(0) - std::min(x0, 0.0)) > 1e-9)
        throw std::invalid_argument("cms_map: zeta(0) != x0 ^ 0");

    const auto n = eta.v.size();
    const double dt = eta.dt;
    Eigen::ArrayXd gbar, g, gp;
    d.survival_sweep(dt, n, gbar, g, gp);

    // forcing r(t) = zeta + eta - g*eta + Gbar(t) x0+, with the survival factor
    // taken quadrature-consistent (1 - cumtrapz g) so the boundary identity
    // holds to solver precision
    const double x0p = std::max(x0, 0.0);
    const Eigen::ArrayXd geta = convolve_sampled(eta.v, g, dt);
    const Eigen::ArrayXd gbar_disc = 1.0 - cumtrapz(g, dt);
    TimePath forcing(dt, zeta.v + eta.v - geta + gbar_disc * x0p);

    CmsSolution out;
    out.x = solve_volterra_plus(forcing, d);
    out.kappa = TimePath(dt, eta.v - out.x.v.max(0.0) + x0p);

    const Eigen::ArrayXd gkappa = convolve_sampled(out.kappa.v, g, dt);
    out.residual1_sup = (out.x.v.min(0.0) - zeta.v - out.kappa.v + gkappa).abs().maxCoeff();
    out.residual2_sup = 0.0;
    return out;
}

std::vector<double> snapshot_times_by_stride(const DiffusionGrid& grid, int stride) {
    std::vector<double> times;
    if (stride <= 0) return times;
    for (int k = 0; k <= grid.n_t; k += stride) times.push_back(grid.dt * k);
    return times;
}

DiffusionPath build_diffusion(const InitialCondition& y0, const DiffusionGrid& grid,
                              const ServiceDistribution& d, double sigma, double beta,
                              std::uint64_t seed, const BuildOptions& opt) {
    NoiseField base(d, seed, grid.dt, grid.n_r, grid.dt, grid.n_t, opt.noise_amplitude);
    return build_diffusion_on(y0, d, sigma, beta, base, 1, opt);
}

DiffusionPath build_diffusion_on(const InitialCondition& y0, const ServiceDistribution& d,
                                 double sigma, double beta, const NoiseField& base, int coarsen,
                                 const BuildOptions& opt) {
    DiffusionPath out;
    NoiseWalker w(base, coarsen, base.n_r() / coarsen + 2);
    const int n_t = w.n_t(), n_r = w.n_r();
    const double dt = w.delta();
    out.grid = DiffusionGrid{dt, n_t, n_r};
    out.seed = base.seed();

    const auto B = BrownianPath::generate(base.seed(), base.dt(), base.n_t()).subsample(coarsen);
    Eigen::ArrayXd ts = Eigen::ArrayXd::LinSpaced(n_t + 1, 0.0, dt * n_t);
    out.E = TimePath(dt, sigma * B.b.v - beta * ts);

    Eigen::ArrayXd h1(n_t + 1), hh;
    h1(0) = 0.0;
    if (opt.with_hazard_conv) {
        hh.resize(n_t + 1);
        hh(0) = 0.0;
    }
    for (int k = 1; k <= n_t; ++k) {
        w.step();
        h1(k) = w.psi_value(NoiseWeight::One, 0);
        if (opt.with_hazard_conv) hh(k) = w.psi_value(NoiseWeight::Hazard, 0);
    }
    out.h_one = TimePath(dt, h1);
    if (opt.with_hazard_conv) out.h_haz = TimePath(dt, hh);

    Eigen::ArrayXd zeta(n_t + 1);
    for (int k = 0; k <= n_t; ++k) zeta(k) = y0.z0(dt * k) - h1(k);

    auto cms = cms_map(out.E, y0.x0, TimePath(dt, zeta), d);
    out.X = std::move(cms.x);
    out.K = std::move(cms.kappa);
    out.cms_residual_sup = cms.residual1_sup;

    out.boundary = TimePath(dt, zeta + gamma_zero_path(out.K, d).v);
    out.boundary_residual_sup = (out.boundary.v - out.X.v.min(0.0)).abs().maxCoeff();

    if (!opt.snapshot_times.empty()) {
        std::vector<int> marks;
        for (double t : opt.snapshot_times) {
            const int k = grid_index(t, dt, "snapshot time");
            if (k > n_t) throw std::invalid_argument("snapshot time past the horizon");
            marks.push_back(k);
        }
        std::sort(marks.begin(), marks.end());
        marks.erase(std::unique(marks.begin(), marks.end()), marks.end());

        NoiseWalker w2(base, coarsen, n_r + 2);
        std::size_t next = 0;
        for (int k = 0; k <= n_t && next < marks.size(); ++k) {
            if (k > 0) w2.step();
            if (marks[next] != k) continue;
            ++next;
            const double t = dt * k;
            const Eigen::ArrayXd psi1 = w2.psi_profile(NoiseWeight::One, n_r + 1);
            const Eigen::ArrayXd psih = w2.psi_profile(NoiseWeight::Hazard, n_r + 1);
            const auto gk = gamma_op(TimePath(dt, out.K.v.head(k + 1)), d, dt * n_r, n_r);
            Eigen::ArrayXd vals(n_r + 1), ders(n_r + 1);
            for (int l = 0; l <= n_r; ++l) {
                const double r = dt * l;
                vals(l) = y0.z0(t + r) - psi1(l) + gk.f.v(l);
                ders(l) = y0.dz0(t + r) + psih(l) + gk.df.v(l);
            }
            out.snapshots.push_back(
                {t, H1GridFunction(GridFunction(dt, vals), GridFunction(dt, ders))});
        }
    }
    return out;
}

std::vector<SpdeResidual> spde_residuals(const InitialCondition& y0, const ServiceDistribution& d,
                                         double sigma, double beta, const NoiseField& base,
                                         int coarsen, const std::vector<SpdeProbe>& probes) {
    NoiseWalker w(base, coarsen, base.n_r() / coarsen + base.n_t() / coarsen + 2);
    const int n_t = w.n_t();
    const double dt = w.delta();

    std::vector<int> ells{0};
    for (const auto& p : probes) {
        const int l = grid_index(p.r, dt, "probe r");
        if (std::find(ells.begin(), ells.end(), l) == ells.end()) ells.push_back(l);
    }

    // one walk records everything the assembly needs
    Eigen::ArrayXd m1(n_t + 1), h1(n_t + 1);
    m1(0) = h1(0) = 0.0;
    std::vector<Eigen::ArrayXd> psi1(ells.size()), psih(ells.size()), phi(ells.size());
    for (auto& a : psi1) a = Eigen::ArrayXd::Zero(n_t + 1);
    for (auto& a : psih) a = Eigen::ArrayXd::Zero(n_t + 1);
    for (auto& a : phi) a = Eigen::ArrayXd::Zero(n_t + 1);
    for (int k = 1; k <= n_t; ++k) {
        w.step();
        m1(k) = w.m_one();
        h1(k) = w.psi_value(NoiseWeight::One, 0);
        for (std::size_t a = 0; a < ells.size(); ++a) {
            psi1[a](k) = w.psi_value(NoiseWeight::One, ells[a]);
            psih[a](k) = w.psi_value(NoiseWeight::Hazard, ells[a]);
            phi[a](k) = w.phi_value(ells[a]);
        }
    }

    const auto B = BrownianPath::generate(base.seed(), base.dt(), base.n_t()).subsample(coarsen);
    Eigen::ArrayXd ts = Eigen::ArrayXd::LinSpaced(n_t + 1, 0.0, dt * n_t);
    TimePath E(dt, sigma * B.b.v - beta * ts);
    Eigen::ArrayXd zeta(n_t + 1);
    for (int k = 0; k <= n_t; ++k) zeta(k) = y0.z0(dt * k) - h1(k);
    auto cms = cms_map(E, y0.x0, TimePath(dt, zeta), d);

    // I(l) = trapz of the derivative formula, per age offset
    std::vector<Eigen::ArrayXd> integ(ells.size());
    for (std::size_t a = 0; a < ells.size(); ++a) {
        const double r = dt * ells[a];
        Eigen::ArrayXd gbar_r, g_r, gp_r;
        d.survival_sweep(dt, n_t + 1, gbar_r, g_r, gp_r, r);
        const Eigen::ArrayXd conv = convolve_sampled(cms.kappa.v, gp_r, dt);
        Eigen::ArrayXd der(n_t + 1);
        for (int s = 0; s <= n_t; ++s)
            der(s) = y0.dz0(dt * s + r) + psih[a](s) - g_r(0) * cms.kappa.v(s) - conv(s);
        integ[a] = cumtrapz(der, dt);
    }

    std::vector<SpdeResidual> out;
    for (const auto& p : probes) {
        const int kt = grid_index(p.t, dt, "probe t");
        const int l = grid_index(p.r, dt, "probe r");
        const std::size_t a =
            std::find(ells.begin(), ells.end(), l) - ells.begin();
        const double r = p.r;

        // Z(t, r) as constructed
        Eigen::ArrayXd gbar_r, g_r, gp_r;
        d.survival_sweep(dt, kt + 1, gbar_r, g_r, gp_r, r);
        double conv_k = 0.0;
        if (kt > 0) {
            conv_k = 0.5 * (cms.kappa.v(0) * g_r(kt) + cms.kappa.v(kt) * g_r(0));
            for (int j = 1; j < kt; ++j) conv_k += cms.kappa.v(j) * g_r(kt - j);
            conv_k *= dt;
        }
        const double gbar_at_r = d.ccdf(r);
        const double z_tr = y0.z0(p.t + r) - psi1[a](kt) + gbar_at_r * cms.kappa.v(kt) - conv_k;

        SpdeResidual res;
        res.t = p.t;
        res.r = p.r;
        res.res_z = z_tr - (y0.z0(r) + integ[a](kt) - phi[a](kt) + gbar_at_r * cms.kappa.v(kt));
        res.res_x = cms.x.v(kt) - (y0.x0 + E.v(kt) - m1(kt) + integ[0](kt));
        out.push_back(res);
    }
    return out;
}

TransportSolution transport_solution(const TimePath& F, const ServiceDistribution& d, double r_max,
                                     int n_r, int probe_count) {
    if (std::abs(F.v(0)) > 0.0) throw std::invalid_argument("transport_solution: F(0) != 0");
    TransportSolution out;
    out.xi = gamma_op(F, d, r_max, n_r);

    const double dt = F.dt;
    const auto n = F.v.size();
    const double t = F.t_max();
    for (int i = 0; i < probe_count; ++i) {
        const int l = static_cast<int>(static_cast<double>(i) * n_r / std::max(probe_count - 1, 1));
        const double r = out.xi.f.dr * l;
        Eigen::ArrayXd gbar_r, g_r, gp_r;
        d.survival_sweep(dt, n, gbar_r, g_r, gp_r, r);
        const Eigen::ArrayXd conv = convolve_sampled(F.v, gp_r, dt);
        Eigen::ArrayXd der(n);
        for (Eigen::Index s = 0; s < n; ++s) der(s) = -g_r(0) * F.v(s) - conv(s);
        const double integ = trapz(der, dt);
        const double resid = out.xi.f.v(l) - integ - d.ccdf(r) * F.v(n - 1);
        (void)t;
        out.probe_r.push_back(r);
        out.residual.push_back(resid);
        out.residual_sup = std::max(out.residual_sup, std::abs(resid));
    }
    return out;
}

MarkovShiftResult markov_shift_check(const InitialCondition& y0, const ServiceDistribution& d,
                                     double sigma, double beta, const NoiseField& base, int coarsen,
                                     double s, double t, const std::vector<double>& probe_r) {
    MarkovShiftResult out;
    out.s = s;
    out.t = t;
    NoiseWalker w(base, coarsen, base.n_r() / coarsen + base.n_t() / coarsen + 2);
    const double dt = w.delta();
    const int ks = grid_index(s, dt, "shift s");
    const int kt = grid_index(t, dt, "shift t");
    const int n_t = ks + kt;
    if (n_t > w.n_t()) throw std::invalid_argument("markov_shift_check: s + t past the horizon");

    Eigen::ArrayXd h1(n_t + 1);
    h1(0) = 0.0;
    NoiseWalker::State at_s;
    for (int k = 1; k <= n_t; ++k) {
        w.step();
        h1(k) = w.psi_value(NoiseWeight::One, 0);
        if (k == ks) at_s = w.save();
    }
    if (ks == 0) at_s = NoiseWalker::State{Eigen::ArrayXd::Zero(w.n_r() + w.n_t() + 1),
                                           Eigen::ArrayXd::Zero(w.n_r()), 0.0, 0};

    const auto B = BrownianPath::generate(base.seed(), base.dt(), base.n_t()).subsample(coarsen);
    Eigen::ArrayXd ts = Eigen::ArrayXd::LinSpaced(n_t + 1, 0.0, dt * n_t);
    TimePath E(dt, sigma * B.b.v.head(n_t + 1) - beta * ts);
    Eigen::ArrayXd zeta(n_t + 1);
    for (int k = 0; k <= n_t; ++k) zeta(k) = y0.z0(dt * k) - h1(k);
    auto cms = cms_map(E, y0.x0, TimePath(dt, zeta), d);
    const TimePath& K = cms.kappa;

    // survival tables at node lags, long enough for all scalar Gamma sums
    Eigen::ArrayXd gbar_n, g_n, gp_n;
    d.survival_sweep(dt, 2 * (n_t + w.n_r()) + 4, gbar_n, g_n, gp_n);

    auto gamma_scalar = [&](const Eigen::ArrayXd& kap, int klen, int age) {
        // (Gamma_{klen dt} kap)(age dt) with the shared trapezoid
        double acc = 0.0;
        if (klen > 0) {
            acc = 0.5 * (kap(0) * g_n(klen + age) + kap(klen) * g_n(age));
            for (int j = 1; j < klen; ++j) acc += kap(j) * g_n(klen + age - j);
            acc *= dt;
        }
        return gbar_n(age) * kap(klen) - acc;
    };

    for (double rv : probe_r) {
        const int lr = grid_index(rv, dt, "probe r");
        // Z(s + t, r)
        const double z_full = y0.z0(dt * (n_t + lr)) - w.psi_value(NoiseWeight::One, lr) +
                              gamma_scalar(K.v, n_t, lr);
        // Z(s, t + r)
        const double z_shift = y0.z0(dt * (n_t + lr)) -
                               w.psi_value_at(at_s, NoiseWeight::One, kt + lr) +
                               gamma_scalar(K.v, ks, kt + lr);
        // (Gamma_t Theta_s K)(r)
        Eigen::ArrayXd theta_k(kt + 1);
        for (int v = 0; v <= kt; ++v) theta_k(v) = K.v(ks + v) - K.v(ks);
        const double gamma_theta = gamma_scalar(theta_k, kt, lr);
        // (Theta_s H)_t(Phi_r 1)
        const double theta_h = w.psi_value(NoiseWeight::One, lr) -
                               w.psi_value_at(at_s, NoiseWeight::One, kt + lr);
        const double res = z_full - z_shift - gamma_theta + theta_h;
        out.res_zshift_sup = std::max(out.res_zshift_sup, std::abs(res));

        const double tele = gamma_theta - (gamma_scalar(K.v, n_t, lr) - gamma_scalar(K.v, ks, kt + lr));
        out.telescoping_sup = std::max(out.telescoping_sup, std::abs(tele));
    }

    // re-solve the CMS equation for the shifted inputs
    Eigen::ArrayXd eta_hat(kt + 1), zeta_hat(kt + 1);
    for (int v = 0; v <= kt; ++v) {
        eta_hat(v) = E.v(ks + v) - E.v(ks);
        zeta_hat(v) = y0.z0(dt * (ks + v)) + gamma_scalar(K.v, ks, v) - h1(ks + v);
    }
    // the shifted zeta starts at Z(s, 0), which matches X(s) ^ 0 only to the
    // boundary residual; snap it so the precondition check passes
    const double xs = cms.x.v(ks);
    zeta_hat(0) = std::min(xs, 0.0);
    auto re = cms_map(TimePath(dt, eta_hat), xs, TimePath(dt, zeta_hat), d);
    for (int v = 0; v <= kt; ++v)
        out.res_lambda = std::max(out.res_lambda, std::abs(re.x.v(v) - cms.x.v(ks + v)));
    return out;
}

StationaryEstimate estimate_stationary(const InitialCondition& y0, const DiffusionGrid& grid,
                                       const ServiceDistribution& d, double sigma, double beta,
                                       int reps, std::uint64_t seed, bool collect_z, int threads) {
    StationaryEstimate out;
    out.samples.resize(reps);
    parallel_for(
        reps,
        [&](int rep) {
            BuildOptions opt;
            if (collect_z) opt.snapshot_times = {grid.t_max()};
            const auto path = build_diffusion(y0, grid, d, sigma, beta,
                                              seed + 0x9E3779B9u * (rep + 1), opt);
            StationarySample s;
            s.x = path.X.v(grid.n_t);
            if (collect_z && !path.snapshots.empty()) {
                s.z_h1 = h1_norm(path.snapshots.back().z);
                s.z_at0 = path.snapshots.back().z.f.v(0);
            } else {
                s.z_at0 = path.boundary.v(grid.n_t);
            }
            out.samples[rep] = s;
        },
        threads);
    std::vector<double> xs(reps), zs(reps), z0s(reps);
    for (int i = 0; i < reps; ++i) {
        xs[i] = out.samples[i].x;
        zs[i] = out.samples[i].z_h1;
        z0s[i] = out.samples[i].z_at0;
    }
    out.x = summarize(xs);
    out.z_h1 = summarize(zs);
    out.z_at0 = summarize(z0s);
    return out;
}

}  // namespace hwq
