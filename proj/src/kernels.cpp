#include "hwq/kernels.hpp"

#include <cmath>
#include <stdexcept>

namespace hwq {

namespace {

// ccdf/pdf/dpdf tables on k*dt, k = 0..n-1 (one sweep, fast for phase-type)
struct SurvTables {
    Eigen::ArrayXd gbar, g, gp;
    SurvTables(const ServiceDistribution& d, double dt, Eigen::Index n) {
        d.survival_sweep(dt, static_cast<int>(n), gbar, g, gp);
    }
};

bool aligned(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(a, b); }

}  // namespace

Eigen::ArrayXd convolve_sampled(const Eigen::ArrayXd& f, const Eigen::ArrayXd& kern, double dt) {
    const auto n = f.size();
    if (kern.size() < n) throw std::invalid_argument("convolve_sampled: kernel too short");
    Eigen::ArrayXd out(n);
    out(0) = 0.0;
    for (Eigen::Index i = 1; i < n; ++i) {
        double acc = 0.5 * (f(0) * kern(i) + f(i) * kern(0));
        for (Eigen::Index j = 1; j < i; ++j) acc += f(j) * kern(i - j);
        out(i) = dt * acc;
    }
    return out;
}

TimePath convolve(const TimePath& f, const std::function<double(double)>& kern) {
    const auto n = f.v.size();
    Eigen::ArrayXd kv(n);
    for (Eigen::Index k = 0; k < n; ++k) kv(k) = kern(f.dt * static_cast<double>(k));
    return TimePath(f.dt, convolve_sampled(f.v, kv, f.dt));
}

TimePath renewal_density(const ServiceDistribution& d, double t_max, double dt) {
    const auto n = static_cast<Eigen::Index>(std::llround(t_max / dt)) + 1;
    const SurvTables tb(d, dt, n);
    Eigen::ArrayXd u(n);
    u(0) = tb.g(0);
    const double denom = 1.0 - 0.5 * dt * tb.g(0);
    if (denom <= 0.0) throw std::invalid_argument("renewal_density: dt too large for g(0)");
    for (Eigen::Index i = 1; i < n; ++i) {
        double acc = 0.5 * tb.g(i) * u(0);
        for (Eigen::Index j = 1; j < i; ++j) acc += tb.g(i - j) * u(j);
        u(i) = (tb.g(i) + dt * acc) / denom;
    }
    return TimePath(dt, std::move(u));
}

RenewalSolution solve_renewal(const TimePath& f, const ServiceDistribution& d) {
    return solve_renewal(f, d, renewal_density(d, f.t_max(), f.dt));
}

RenewalSolution solve_renewal(const TimePath& f, const ServiceDistribution& d, const TimePath& u) {
    if (u.v.size() < f.v.size() || !aligned(u.dt, f.dt))
        throw std::invalid_argument("solve_renewal: renewal density grid mismatch");
    RenewalSolution out;
    out.phi = TimePath(f.dt, f.v + convolve_sampled(f.v, u.v, f.dt));

    const SurvTables tb(d, f.dt, f.v.size());
    const Eigen::ArrayXd gphi = convolve_sampled(out.phi.v, tb.g, f.dt);
    out.residual_sup = (out.phi.v - f.v - gphi).abs().maxCoeff();

    out.u_minus_one_l1 = trapz((u.v - 1.0).abs().eval(), u.dt);
    out.c1 = 1.0 + out.u_minus_one_l1;
    // remainder of the truncated |u-1| mass, estimated over one more window
    out.tail_remainder = std::abs(u.v(u.v.size() - 1) - 1.0) * u.t_max();
    return out;
}

TimePath solve_volterra_plus(const TimePath& r, const ServiceDistribution& d) {
    const auto n = r.v.size();
    const double dt = r.dt;
    const SurvTables tb(d, dt, n);
    Eigen::ArrayXd x(n), xp(n);
    x(0) = r(0);
    xp(0) = std::max(x(0), 0.0);
    const double w0 = 0.5 * dt * tb.g(0);
    if (w0 >= 1.0) throw std::invalid_argument("solve_volterra_plus: dt too large for g(0)");
    for (Eigen::Index i = 1; i < n; ++i) {
        double acc = 0.5 * tb.g(i) * xp(0);
        for (Eigen::Index j = 1; j < i; ++j) acc += tb.g(i - j) * xp(j);
        const double base = r(i) + dt * acc;
        // endpoint term w0 * x+(t_i): the fixed point is piecewise linear
        const double pos = base / (1.0 - w0);
        x(i) = pos >= 0.0 ? pos : base;
        xp(i) = std::max(x(i), 0.0);
    }
    return TimePath(dt, std::move(x));
}

H1GridFunction gamma_op(const TimePath& kappa, const ServiceDistribution& d, double r_max,
                        int n_r) {
    const double dt = kappa.dt;
    const auto nk = kappa.v.size();
    const double t = kappa.t_max();
    const double dr = r_max / static_cast<double>(n_r);
    const int np = n_r + 1;
    const double kt = kappa.v(nk - 1);

    Eigen::ArrayXd vals(np), ders(np);
    if (aligned(dr, dt)) {
        // lags t + r - t_j land on the grid: one survival sweep serves all
        const SurvTables tb(d, dt, nk + np);
        for (int l = 0; l < np; ++l) {
            double accg = 0.0, accgp = 0.0;
            if (nk > 1) {
                const Eigen::Index top = nk - 1 + l;  // index of t + r
                accg = 0.5 * (kappa.v(0) * tb.g(top) + kt * tb.g(l));
                accgp = 0.5 * (kappa.v(0) * tb.gp(top) + kt * tb.gp(l));
                for (Eigen::Index j = 1; j + 1 < nk; ++j) {
                    accg += kappa.v(j) * tb.g(top - j);
                    accgp += kappa.v(j) * tb.gp(top - j);
                }
            }
            vals(l) = tb.gbar(l) * kt - dt * accg;
            ders(l) = -tb.g(l) * kt - dt * accgp;
        }
    } else {
        for (int l = 0; l < np; ++l) {
            const double r = dr * static_cast<double>(l);
            double accg = 0.0, accgp = 0.0;
            if (nk > 1) {
                accg = 0.5 * (kappa.v(0) * d.pdf(t + r) + kt * d.pdf(r));
                accgp = 0.5 * (kappa.v(0) * d.dpdf(t + r) + kt * d.dpdf(r));
                for (Eigen::Index j = 1; j + 1 < nk; ++j) {
                    const double lag = t + r - dt * static_cast<double>(j);
                    accg += kappa.v(j) * d.pdf(lag);
                    accgp += kappa.v(j) * d.dpdf(lag);
                }
            }
            vals(l) = d.ccdf(r) * kt - dt * accg;
            ders(l) = -d.pdf(r) * kt - dt * accgp;
        }
    }
    return H1GridFunction(GridFunction(dr, std::move(vals)), GridFunction(dr, std::move(ders)));
}

TimePath gamma_zero_path(const TimePath& kappa, const ServiceDistribution& d) {
    const SurvTables tb(d, kappa.dt, kappa.v.size());
    return TimePath(kappa.dt, kappa.v - convolve_sampled(kappa.v, tb.g, kappa.dt));
}

}  // namespace hwq
