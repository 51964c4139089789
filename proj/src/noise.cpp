#include "hwq/noise.hpp"

#include <cmath>
#include <stdexcept>

namespace hwq {

BrownianPath BrownianPath::generate(std::uint64_t seed, double dt, Eigen::Index steps) {
    CounterRng rng(seed, kStreamBrownian);
    const double sd = std::sqrt(dt);
    Eigen::ArrayXd v(steps + 1);
    v(0) = 0.0;
    for (Eigen::Index i = 0; i < steps; ++i) v(i + 1) = v(i) + sd * rng.normal(i);
    BrownianPath out;
    out.b = TimePath(dt, std::move(v));
    out.seed = seed;
    return out;
}

BrownianPath BrownianPath::subsample(int stride) const {
    if (b.steps() % stride != 0) throw std::invalid_argument("BrownianPath: stride mismatch");
    const Eigen::Index n = b.steps() / stride;
    Eigen::ArrayXd v(n + 1);
    for (Eigen::Index i = 0; i <= n; ++i) v(i) = b.v(i * stride);
    BrownianPath out;
    out.b = TimePath(b.dt * stride, std::move(v));
    out.seed = seed;
    return out;
}

NoiseField::NoiseField(const ServiceDistribution& d, std::uint64_t seed, double dr, int n_r,
                       double dt, int n_t, double amplitude)
    : d_(&d), rng_(seed, kStreamNoise), seed_(seed), dr_(dr), dt_(dt), n_r_(n_r), n_t_(n_t) {
    if (dr <= 0 || dt <= 0 || n_r < 1 || n_t < 1)
        throw std::invalid_argument("NoiseField: bad grid");
    Eigen::ArrayXd gbar, g, gp;
    d.survival_sweep(dr, n_r, gbar, g, gp, 0.5 * dr);  // midpoints
    sd_ = amplitude * (g * dr * dt).sqrt();
    gbar_mid_ = gbar;
    trunc_mass_ = d.ccdf(dr * n_r);
}

void NoiseField::column(int i, Eigen::ArrayXd& out) const {
    out.resize(n_r_);
    const std::uint64_t base = static_cast<std::uint64_t>(i) * static_cast<std::uint64_t>(n_r_);
    for (int j = 0; j < n_r_; ++j) out(j) = sd_(j) * rng_.normal(base + j);
}

double noise_integral(const NoiseField& M, const std::function<double(double, double)>& phi,
                      double t) {
    const int k = static_cast<int>(std::llround(t / M.dt()));
    if (k < 0 || k > M.n_t()) throw std::invalid_argument("noise_integral: t off grid");
    double acc = 0.0;
    Eigen::ArrayXd col;
    for (int i = 0; i < k; ++i) {
        M.column(i, col);
        const double s = M.dt() * static_cast<double>(i);
        for (int j = 0; j < M.n_r(); ++j)
            acc += phi(M.dr() * (static_cast<double>(j) + 0.5), s) * col(j);
    }
    return acc;
}

Eigen::MatrixXd psi_weights(const ServiceDistribution& d, double dr, int n_r, double dt, int n_t,
                            double t, double r, NoiseWeight w) {
    Eigen::MatrixXd out(n_r, n_t);
    Eigen::ArrayXd gbar_mid, g_mid, gp_mid;
    d.survival_sweep(dr, n_r, gbar_mid, g_mid, gp_mid, 0.5 * dr);
    Eigen::ArrayXd gbar, g, gp;
    for (int i = 0; i < n_t; ++i) {
        const double s = dt * static_cast<double>(i);
        if (s >= t) {
            out.col(i).setZero();
            continue;
        }
        const double lag = t + r - s;
        d.survival_sweep(dr, n_r, gbar, g, gp, 0.5 * dr + lag);
        const Eigen::ArrayXd& num = w == NoiseWeight::One ? gbar : g;
        out.col(i) = (num / gbar_mid).matrix();
    }
    return out;
}

double weighted_sum(const NoiseField& M, const Eigen::MatrixXd& weights, double t) {
    const int k = static_cast<int>(std::llround(t / M.dt()));
    double acc = 0.0;
    Eigen::ArrayXd col;
    for (int i = 0; i < k; ++i) {
        M.column(i, col);
        acc += (weights.col(i).array() * col).sum();
    }
    return acc;
}

double stoch_conv(const NoiseField& M, double t, double r, NoiseWeight w) {
    const Eigen::MatrixXd wt =
        psi_weights(M.dist(), M.dr(), M.n_r(), M.dt(), M.n_t(), t, r, w);
    return weighted_sum(M, wt, t);
}

NoiseWalker::NoiseWalker(const NoiseField& base, int coarsen, int max_age_index)
    : base_(&base), coarsen_(coarsen) {
    if (coarsen < 1 || base.n_r() % coarsen != 0 || base.n_t() % coarsen != 0)
        throw std::invalid_argument("NoiseWalker: coarsening must divide the base grid");
    if (std::abs(base.dr() - base.dt()) > 1e-12 * base.dt())
        throw std::invalid_argument("NoiseWalker: base grid must have dr == dt");
    n_r_ = base.n_r() / coarsen;
    n_t_ = base.n_t() / coarsen;
    delta_ = base.dt() * coarsen;
    q_ = Eigen::ArrayXd::Zero(n_r_ + n_t_ + 1);
    cn_ = Eigen::ArrayXd::Zero(n_r_);
    const int tab_len = n_r_ + 2 * n_t_ + max_age_index + 4;
    Eigen::ArrayXd g, gp;
    base.dist().survival_sweep(delta_, tab_len, tab_gbar_, g, gp, 0.5 * delta_);
    tab_g_ = g;
    scratch_base_.resize(base.n_r());
    scratch_macro_.resize(n_r_);
}

void NoiseWalker::step() {
    if (k_ >= n_t_) throw std::logic_error("NoiseWalker: stepped past the horizon");
    scratch_macro_.setZero();
    for (int s = 0; s < coarsen_; ++s) {
        base_->column(k_ * coarsen_ + s, scratch_base_);
        for (int J = 0; J < n_r_; ++J)
            scratch_macro_(J) += scratch_base_.segment(J * coarsen_, coarsen_).sum();
    }
    const int off = n_t_;  // q_ index of diagonal d is d + off
    for (int j = 0; j < n_r_; ++j) {
        const double dn = scratch_macro_(j) / tab_gbar_(j);
        q_(j - k_ + off) += dn;
        cn_(j) += dn;
        m1_ += scratch_macro_(j);
    }
    ++k_;
}

double NoiseWalker::psi_sum(const Eigen::ArrayXd& q, int k, NoiseWeight w, int age_index) const {
    if (k == 0) return 0.0;
    const Eigen::ArrayXd& tab = w == NoiseWeight::One ? tab_gbar_ : tab_g_;
    const int off = n_t_;
    double acc = 0.0;
    for (int d = -(k - 1); d < n_r_; ++d) acc += tab(d + k + age_index) * q(d + off);
    return acc;
}

double NoiseWalker::phi_sum(const Eigen::ArrayXd& cn, int age_index) const {
    double acc = 0.0;
    for (int j = 0; j < n_r_; ++j) acc += tab_gbar_(j + age_index) * cn(j);
    return acc;
}

double NoiseWalker::psi_value(NoiseWeight w, int age_index) const {
    return psi_sum(q_, k_, w, age_index);
}

double NoiseWalker::phi_value(int age_index) const { return phi_sum(cn_, age_index); }

Eigen::ArrayXd NoiseWalker::psi_profile(NoiseWeight w, int n_points) const {
    Eigen::ArrayXd out(n_points);
    for (int l = 0; l < n_points; ++l) out(l) = psi_sum(q_, k_, w, l);
    return out;
}

Eigen::ArrayXd NoiseWalker::phi_profile(int n_points) const {
    Eigen::ArrayXd out(n_points);
    for (int l = 0; l < n_points; ++l) out(l) = phi_sum(cn_, l);
    return out;
}

NoiseWalker::State NoiseWalker::save() const { return State{q_, cn_, m1_, k_}; }

double NoiseWalker::psi_value_at(const State& s, NoiseWeight w, int age_index) const {
    return psi_sum(s.q, s.k, w, age_index);
}

double NoiseWalker::phi_value_at(const State& s, int age_index) const {
    return phi_sum(s.cn, age_index);
}

std::vector<Eigen::ArrayXd> fubini_residual_paths(const NoiseField& base, int coarsen,
                                                  const std::vector<int>& age_indices) {
    int max_age = 0;
    for (int l : age_indices) max_age = std::max(max_age, l);
    NoiseWalker w(base, coarsen, max_age);
    const int n = w.n_t();
    std::vector<Eigen::ArrayXd> res(age_indices.size(), Eigen::ArrayXd::Zero(n + 1));
    std::vector<double> integral(age_indices.size(), 0.0);
    std::vector<double> prev(age_indices.size(), 0.0);
    for (int k = 1; k <= n; ++k) {
        w.step();
        for (std::size_t a = 0; a < age_indices.size(); ++a) {
            const int l = age_indices[a];
            const double hv = w.psi_value(NoiseWeight::Hazard, l);
            integral[a] += 0.5 * w.delta() * (prev[a] + hv);
            prev[a] = hv;
            res[a](k) = w.psi_value(NoiseWeight::One, l) - w.phi_value(l) + integral[a];
        }
    }
    return res;
}

double fubini_residual(const NoiseField& M, double t, double r) {
    const int l = static_cast<int>(std::llround(r / M.dt()));
    const int k = static_cast<int>(std::llround(t / M.dt()));
    auto paths = fubini_residual_paths(M, 1, {l});
    return paths[0](k);
}

}  // namespace hwq
