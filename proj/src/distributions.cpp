#include "hwq/distributions.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "hwq/grid.hpp"

namespace hwq {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTailSwitch = 1e-30;  // hazard uses its analytic limit once ccdf < this

double lower_gamma_series(double a, double x) {
    // regularized lower incomplete gamma, series branch (x < a+1)
    double term = 1.0 / a, sum = term;
    for (int n = 1; n < 10000; ++n) {
        term *= x / (a + n);
        sum += term;
        if (std::abs(term) < std::abs(sum) * 1e-17) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// continued-fraction factor H with Q(a,x) = exp(-x + a ln x - lgamma(a)) * H
double upper_gamma_cf(double a, double x) {
    const double fpmin = 1e-300;
    double b = x + 1.0 - a, c = 1.0 / fpmin, d = 1.0 / b, h = d;
    for (int i = 1; i < 10000; ++i) {
        const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < fpmin) d = fpmin;
        c = b + an / c;
        if (std::abs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < 1e-17) break;
    }
    return h;
}

double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI); }
double normal_ccdf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

// Mills-ratio form of the Gaussian hazard, for z large enough that the
// direct ratio would divide two underflowed quantities.
double mills_inverse(double z) {
    const double z2 = z * z;
    return z / (1.0 - 1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2));
}

}  // namespace

double gamma_p(double a, double x) {
    if (a <= 0.0 || x < 0.0) throw std::invalid_argument("gamma_p: bad arguments");
    if (x == 0.0) return 0.0;
    if (x < a + 1.0) return lower_gamma_series(a, x);
    return 1.0 - std::exp(-x + a * std::log(x) - std::lgamma(a)) * upper_gamma_cf(a, x);
}

double gamma_q(double a, double x) {
    if (a <= 0.0 || x < 0.0) throw std::invalid_argument("gamma_q: bad arguments");
    if (x == 0.0) return 1.0;
    if (x < a + 1.0) return 1.0 - lower_gamma_series(a, x);
    return std::exp(-x + a * std::log(x) - std::lgamma(a)) * upper_gamma_cf(a, x);
}

std::string family_name(Family f) {
    switch (f) {
        case Family::Exponential: return "exponential";
        case Family::Lomax: return "lomax";
        case Family::LogNormal: return "lognormal";
        case Family::Gamma: return "gamma";
        case Family::PhaseType: return "phasetype";
    }
    return "unknown";
}

Family family_from_name(const std::string& name) {
    if (name == "exponential") return Family::Exponential;
    if (name == "lomax") return Family::Lomax;
    if (name == "lognormal") return Family::LogNormal;
    if (name == "gamma") return Family::Gamma;
    if (name == "phasetype" || name == "erlang") return Family::PhaseType;
    throw std::invalid_argument("unknown distribution family: " + name);
}

ServiceDistribution ServiceDistribution::exponential(double rate, bool normalize_mean) {
    if (rate <= 0.0) throw std::invalid_argument("exponential: rate must be positive");
    ServiceDistribution d;
    d.family_ = Family::Exponential;
    d.p1_ = rate;
    d.original_ = {{"rate", rate}};
    d.finalize(normalize_mean);
    return d;
}

ServiceDistribution ServiceDistribution::lomax(double shape, double scale, bool normalize_mean) {
    if (shape <= 0.0 || scale <= 0.0) throw std::invalid_argument("lomax: parameters must be positive");
    if (normalize_mean && shape <= 1.0) throw std::invalid_argument("lomax: infinite mean, cannot normalize");
    ServiceDistribution d;
    d.family_ = Family::Lomax;
    d.p1_ = shape;
    d.p2_ = scale;
    d.original_ = {{"shape", shape}, {"scale", scale}};
    d.finalize(normalize_mean);
    return d;
}

ServiceDistribution ServiceDistribution::log_normal(double mu, double sigma, bool normalize_mean) {
    if (sigma <= 0.0) throw std::invalid_argument("log_normal: sigma must be positive");
    ServiceDistribution d;
    d.family_ = Family::LogNormal;
    d.p1_ = mu;
    d.p2_ = sigma;
    d.original_ = {{"mu", mu}, {"sigma", sigma}};
    d.finalize(normalize_mean);
    return d;
}

ServiceDistribution ServiceDistribution::gamma(double shape, double rate, bool normalize_mean) {
    if (shape <= 0.0 || rate <= 0.0) throw std::invalid_argument("gamma: parameters must be positive");
    ServiceDistribution d;
    d.family_ = Family::Gamma;
    d.p1_ = shape;
    d.p2_ = rate;
    d.original_ = {{"shape", shape}, {"rate", rate}};
    d.finalize(normalize_mean);
    return d;
}

ServiceDistribution ServiceDistribution::phase_type(Eigen::RowVectorXd initial,
                                                    Eigen::MatrixXd subgenerator,
                                                    bool normalize_mean) {
    const auto m = subgenerator.rows();
    if (m == 0 || subgenerator.cols() != m || initial.size() != m)
        throw std::invalid_argument("phase_type: dimension mismatch");
    double asum = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
        if (initial(i) < 0.0) throw std::invalid_argument("phase_type: negative initial probability");
        asum += initial(i);
        if (subgenerator(i, i) >= 0.0)
            throw std::invalid_argument("phase_type: diagonal of subgenerator must be negative");
        double row = 0.0;
        for (Eigen::Index j = 0; j < m; ++j) {
            if (j != i && subgenerator(i, j) < 0.0)
                throw std::invalid_argument("phase_type: negative off-diagonal rate");
            row += subgenerator(i, j);
        }
        if (row > 1e-12) throw std::invalid_argument("phase_type: positive row sum (not a subgenerator)");
    }
    if (std::abs(asum - 1.0) > 1e-9)
        throw std::invalid_argument("phase_type: initial probabilities must sum to 1");
    initial /= asum;

    ServiceDistribution d;
    d.family_ = Family::PhaseType;
    d.ph_alpha_ = std::move(initial);
    d.ph_S_ = std::move(subgenerator);
    d.original_ = {{"size", static_cast<double>(m)}};
    d.finalize(normalize_mean);
    return d;
}

ServiceDistribution ServiceDistribution::erlang(int stages, double stage_rate, bool normalize_mean) {
    if (stages < 1) throw std::invalid_argument("erlang: stages must be >= 1");
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(stages, stages);
    for (int i = 0; i < stages; ++i) {
        S(i, i) = -stage_rate;
        if (i + 1 < stages) S(i, i + 1) = stage_rate;
    }
    Eigen::RowVectorXd alpha = Eigen::RowVectorXd::Zero(stages);
    alpha(0) = 1.0;
    return phase_type(alpha, S, normalize_mean);
}

double ServiceDistribution::raw_mean() const {
    switch (family_) {
        case Family::Exponential: return 1.0 / p1_;
        case Family::Lomax: return p1_ > 1.0 ? p2_ / (p1_ - 1.0) : kInf;
        case Family::LogNormal: return std::exp(p1_ + 0.5 * p2_ * p2_);
        case Family::Gamma: return p1_ / p2_;
        case Family::PhaseType: {
            Eigen::VectorXd w = ph_S_.partialPivLu().solve(Eigen::VectorXd::Ones(ph_S_.rows()));
            return -(ph_alpha_ * w)(0);
        }
    }
    return kInf;
}

void ServiceDistribution::finalize(bool normalize_mean) {
    if (normalize_mean) {
        const double m = raw_mean();
        if (!std::isfinite(m) || m <= 0.0)
            throw std::invalid_argument("cannot normalize: mean not finite");
        norm_scale_ = m;
        switch (family_) {
            case Family::Exponential: p1_ *= m; break;
            case Family::Lomax: p2_ /= m; break;
            case Family::LogNormal: p1_ -= std::log(m); break;
            case Family::Gamma: p2_ *= m; break;
            case Family::PhaseType: ph_S_ *= m; break;
        }
    }
    mean_ = raw_mean();

    tail_x_ = kInf;
    switch (family_) {
        case Family::Exponential:
            h_limit_ = p1_;
            h2_limit_ = -p1_ * p1_;
            h_bound_ = p1_;
            h2_bound_ = p1_ * p1_;
            break;
        case Family::Lomax:
            h_limit_ = 0.0;
            h2_limit_ = 0.0;
            h_bound_ = p1_ / p2_;
            h2_bound_ = p1_ * (p1_ + 1.0) / (p2_ * p2_);
            break;
        case Family::LogNormal:
            h_limit_ = 0.0;
            h2_limit_ = 0.0;
            break;
        case Family::Gamma:
            h_limit_ = p2_;
            h2_limit_ = -p2_ * p2_;
            break;
        case Family::PhaseType: {
            ph_exit_ = -ph_S_ * Eigen::VectorXd::Ones(ph_S_.rows());
            ph_s2one_ = ph_S_ * ph_S_ * Eigen::VectorXd::Ones(ph_S_.rows());
            ph_q_ = 0.0;
            for (Eigen::Index i = 0; i < ph_S_.rows(); ++i)
                ph_q_ = std::max(ph_q_, -ph_S_(i, i));
            Eigen::EigenSolver<Eigen::MatrixXd> es(ph_S_, false);
            double lam1 = -kInf;
            for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
                lam1 = std::max(lam1, es.eigenvalues()(i).real());
            h_bound_ = ph_exit_.maxCoeff();
            h_limit_ = std::min(-lam1, h_bound_);  // theory: -lam1 <= max exit rate
            h2_limit_ = -h_limit_ * h_limit_;
            h2_bound_ = ph_s2one_.cwiseAbs().maxCoeff();
            break;
        }
    }

    // locate the far-tail switch where the closed form would divide two
    // vanishing tails (only where the hazard has a finite nonzero limit)
    if (family_ == Family::Gamma || family_ == Family::PhaseType) {
        double hi = 1.0;
        while (ccdf(hi) >= kTailSwitch && hi < 1e9) hi *= 2.0;
        if (hi < 1e9) {
            double lo = hi / 2.0;
            for (int it = 0; it < 80; ++it) {
                const double mid = 0.5 * (lo + hi);
                (ccdf(mid) < kTailSwitch ? hi : lo) = mid;
            }
            tail_x_ = hi;
        }
    }

    // numeric sup of the hazard machinery where no closed bound exists
    if (family_ == Family::LogNormal || (family_ == Family::Gamma && p1_ != 2.0)) {
        double hs = 0.0, h2s = 0.0;
        for (int k = 0; k <= 4000; ++k) {
            const double x = 1e-4 * std::pow(1.005, static_cast<double>(k));
            hs = std::max(hs, hazard(x));
            h2s = std::max(h2s, std::abs(h2(x)));
        }
        h_bound_ = std::max(hs, h_limit_);
        h2_bound_ = std::max(h2s, std::abs(h2_limit_));
        if (family_ == Family::Gamma && p1_ < 2.0) h2_bound_ = kInf;
        if (family_ == Family::Gamma && p1_ < 1.0) h_bound_ = kInf;
    } else if (family_ == Family::Gamma) {
        h_bound_ = p2_;             // hazard nondecreasing for shape 2
        h2_bound_ = p2_ * p2_;      // |h2| peaks at the origin for shape 2
    }
}

Eigen::MatrixXd ServiceDistribution::ph_expm(double x) const {
    const auto m = ph_S_.rows();
    Eigen::MatrixXd E = Eigen::MatrixXd::Identity(m, m);
    if (x <= 0.0) return E;
    const double qx = ph_q_ * x;
    if (qx <= 600.0) {
        // uniformization, truncated once the Poisson remainder is < 1e-14
        Eigen::MatrixXd P = Eigen::MatrixXd::Identity(m, m) + ph_S_ / ph_q_;
        Eigen::MatrixXd term = Eigen::MatrixXd::Identity(m, m);
        double w = std::exp(-qx), wsum = w;
        E = w * term;
        const int K = static_cast<int>(qx + 12.0 + 10.0 * std::sqrt(qx + 12.0));
        for (int k = 1; k <= K; ++k) {
            term = term * P;
            w *= qx / static_cast<double>(k);
            E += w * term;
            wsum += w;
            if (1.0 - wsum < 1e-14) break;
        }
        return E;
    }
    // extreme tail: scaling and squaring
    int halvings = 0;
    double s = 1.0;
    while (qx / s > 1.0) {
        s *= 2.0;
        ++halvings;
    }
    Eigen::MatrixXd B = ph_S_ * (x / s);
    Eigen::MatrixXd term = Eigen::MatrixXd::Identity(m, m);
    for (int k = 1; k <= 40; ++k) {
        term = term * B / static_cast<double>(k);
        E += term;
        if (term.cwiseAbs().maxCoeff() < 1e-18) break;
    }
    for (int i = 0; i < halvings; ++i) E = E * E;
    return E;
}

void ServiceDistribution::ph_front(double x, Eigen::RowVectorXd& v) const {
    if (x <= 0.0) {
        v = ph_alpha_;
        return;
    }
    v = ph_alpha_ * ph_expm(x);
}

double ServiceDistribution::ccdf(double x) const {
    if (x < 0.0) throw std::invalid_argument("ccdf: x must be nonnegative");
    switch (family_) {
        case Family::Exponential: return std::exp(-p1_ * x);
        case Family::Lomax: return std::pow(1.0 + x / p2_, -p1_);
        case Family::LogNormal:
            return x == 0.0 ? 1.0 : normal_ccdf((std::log(x) - p1_) / p2_);
        case Family::Gamma: return gamma_q(p1_, p2_ * x);
        case Family::PhaseType: {
            Eigen::RowVectorXd v;
            ph_front(x, v);
            return std::max(v.sum(), 0.0);
        }
    }
    return 0.0;
}

double ServiceDistribution::pdf(double x) const {
    if (x < 0.0) throw std::invalid_argument("pdf: x must be nonnegative");
    switch (family_) {
        case Family::Exponential: return p1_ * std::exp(-p1_ * x);
        case Family::Lomax: return (p1_ / p2_) * std::pow(1.0 + x / p2_, -(p1_ + 1.0));
        case Family::LogNormal:
            return x == 0.0 ? 0.0 : normal_pdf((std::log(x) - p1_) / p2_) / (x * p2_);
        case Family::Gamma: {
            if (x == 0.0) return p1_ > 1.0 ? 0.0 : (p1_ == 1.0 ? p2_ : kInf);
            return std::exp(p1_ * std::log(p2_) + (p1_ - 1.0) * std::log(x) - p2_ * x -
                            std::lgamma(p1_));
        }
        case Family::PhaseType: {
            Eigen::RowVectorXd v;
            ph_front(x, v);
            return std::max((v * ph_exit_)(0), 0.0);
        }
    }
    return 0.0;
}

double ServiceDistribution::dpdf(double x) const {
    if (x < 0.0) throw std::invalid_argument("dpdf: x must be nonnegative");
    switch (family_) {
        case Family::Exponential: return -p1_ * p1_ * std::exp(-p1_ * x);
        case Family::Lomax:
            return -(p1_ * (p1_ + 1.0) / (p2_ * p2_)) * std::pow(1.0 + x / p2_, -(p1_ + 2.0));
        case Family::LogNormal: {
            if (x == 0.0) return 0.0;
            const double z = (std::log(x) - p1_) / p2_;
            return -pdf(x) * (z / p2_ + 1.0) / x;
        }
        case Family::Gamma: {
            if (x == 0.0) {
                if (p1_ > 2.0) return 0.0;
                if (p1_ == 2.0) return p2_ * p2_;  // right limit
                if (p1_ == 1.0) return -p2_ * p2_;
                return p1_ > 1.0 ? kInf : -kInf;
            }
            return pdf(x) * ((p1_ - 1.0) / x - p2_);
        }
        case Family::PhaseType: {
            Eigen::RowVectorXd v;
            ph_front(x, v);
            return -(v * ph_s2one_)(0);
        }
    }
    return 0.0;
}

double ServiceDistribution::hazard(double x) const {
    if (x < 0.0) throw std::invalid_argument("hazard: x must be nonnegative");
    if (x >= tail_x_) return h_limit_;
    switch (family_) {
        case Family::Exponential: return p1_;
        case Family::Lomax: return (p1_ / p2_) / (1.0 + x / p2_);
        case Family::LogNormal: {
            if (x == 0.0) return 0.0;
            const double z = (std::log(x) - p1_) / p2_;
            const double q = normal_ccdf(z);
            if (q > 1e-280) return pdf(x) / q;
            return mills_inverse(z) / (x * p2_);
        }
        case Family::Gamma: {
            if (x == 0.0) return p1_ > 1.0 ? 0.0 : (p1_ == 1.0 ? p2_ : kInf);
            const double s = p2_ * x;
            if (s < p1_ + 1.0) return pdf(x) / (1.0 - lower_gamma_series(p1_, s));
            return p2_ / (s * upper_gamma_cf(p1_, s));  // exponential factors cancel
        }
        case Family::PhaseType: {
            Eigen::RowVectorXd v;
            ph_front(x, v);
            const double gbar = v.sum();
            if (gbar <= 0.0) return h_limit_;
            return (v * ph_exit_)(0) / gbar;
        }
    }
    return 0.0;
}

double ServiceDistribution::h2(double x) const {
    if (x < 0.0) throw std::invalid_argument("h2: x must be nonnegative");
    if (x >= tail_x_) return h2_limit_;
    switch (family_) {
        case Family::Exponential: return -p1_ * p1_;
        case Family::Lomax: {
            const double b = 1.0 + x / p2_;
            return -(p1_ * (p1_ + 1.0) / (p2_ * p2_)) / (b * b);
        }
        case Family::LogNormal: {
            if (x == 0.0) return 0.0;
            const double z = (std::log(x) - p1_) / p2_;
            return -hazard(x) * (z / p2_ + 1.0) / x;
        }
        case Family::Gamma: {
            if (x == 0.0) return dpdf(0.0);
            return hazard(x) * ((p1_ - 1.0) / x - p2_);
        }
        case Family::PhaseType: {
            Eigen::RowVectorXd v;
            ph_front(x, v);
            const double gbar = v.sum();
            if (gbar <= 0.0) return h2_limit_;
            return -(v * ph_s2one_)(0) / gbar;
        }
    }
    return 0.0;
}

double ServiceDistribution::ccdf_integral(double x) const {
    if (x < 0.0) throw std::invalid_argument("ccdf_integral: x must be nonnegative");
    switch (family_) {
        case Family::Exponential: return std::exp(-p1_ * x) / p1_;
        case Family::Lomax:
            return (p2_ / (p1_ - 1.0)) * std::pow(1.0 + x / p2_, 1.0 - p1_);
        case Family::LogNormal: {
            if (x == 0.0) return mean_;
            const double lx = std::log(x);
            return mean_ * normal_ccdf((lx - p1_ - p2_ * p2_) / p2_) -
                   x * normal_ccdf((lx - p1_) / p2_);
        }
        case Family::Gamma:
            return (p1_ / p2_) * gamma_q(p1_ + 1.0, p2_ * x) - x * gamma_q(p1_, p2_ * x);
        case Family::PhaseType: {
            Eigen::RowVectorXd v;
            ph_front(x, v);
            Eigen::VectorXd y = ph_S_.partialPivLu().solve(Eigen::VectorXd::Ones(ph_S_.rows()));
            return -(v * y)(0);
        }
    }
    return 0.0;
}

void ServiceDistribution::survival_sweep(double dr, int n, Eigen::ArrayXd& gbar, Eigen::ArrayXd& g,
                                         Eigen::ArrayXd& gp, double offset) const {
    gbar.resize(n);
    g.resize(n);
    gp.resize(n);
    if (family_ == Family::PhaseType) {
        const Eigen::MatrixXd E = ph_expm(dr);
        Eigen::RowVectorXd v;
        ph_front(offset, v);
        for (int k = 0; k < n; ++k) {
            const double s = v.sum();
            if (s < 1e-280) {
                gbar.tail(n - k).setZero();
                g.tail(n - k).setZero();
                gp.tail(n - k).setZero();
                break;
            }
            gbar(k) = s;
            g(k) = (v * ph_exit_)(0);
            gp(k) = -(v * ph_s2one_)(0);
            v = v * E;
        }
        return;
    }
    for (int k = 0; k < n; ++k) {
        const double x = offset + dr * static_cast<double>(k);
        gbar(k) = ccdf(x);
        g(k) = pdf(x);
        gp(k) = dpdf(x);
    }
}

double ServiceDistribution::sample(SeqRng& rng) const {
    switch (family_) {
        case Family::Exponential: return -std::log(rng.uniform()) / p1_;
        case Family::Lomax: return p2_ * (std::pow(rng.uniform(), -1.0 / p1_) - 1.0);
        case Family::LogNormal: return std::exp(p1_ + p2_ * rng.normal());
        case Family::Gamma: {
            // Marsaglia-Tsang; shape < 1 boosted via the shape+1 trick
            double a = p1_, boost = 1.0;
            if (a < 1.0) {
                boost = std::pow(rng.uniform(), 1.0 / a);
                a += 1.0;
            }
            const double d = a - 1.0 / 3.0, c = 1.0 / std::sqrt(9.0 * d);
            for (;;) {
                double zn, vv;
                do {
                    zn = rng.normal();
                    vv = 1.0 + c * zn;
                } while (vv <= 0.0);
                vv = vv * vv * vv;
                const double u = rng.uniform();
                if (u < 1.0 - 0.0331 * zn * zn * zn * zn) return boost * d * vv / p2_;
                if (std::log(u) < 0.5 * zn * zn + d * (1.0 - vv + std::log(vv)))
                    return boost * d * vv / p2_;
            }
        }
        case Family::PhaseType: {
            // CTMC absorption time
            const auto m = ph_S_.rows();
            double u = rng.uniform(), acc = 0.0;
            Eigen::Index phase = m - 1;
            for (Eigen::Index i = 0; i < m; ++i) {
                acc += ph_alpha_(i);
                if (u <= acc) {
                    phase = i;
                    break;
                }
            }
            double t = 0.0;
            for (;;) {
                const double rate = -ph_S_(phase, phase);
                t += -std::log(rng.uniform()) / rate;
                double w = rng.uniform() * rate;
                double cum = ph_exit_(phase);
                if (w <= cum) return t;
                Eigen::Index next = phase;
                for (Eigen::Index j = 0; j < m; ++j) {
                    if (j == phase) continue;
                    cum += ph_S_(phase, j);
                    if (w <= cum) {
                        next = j;
                        break;
                    }
                }
                phase = next;
            }
        }
    }
    return 0.0;
}

AssumptionReport check_assumptions(const ServiceDistribution& d, AssumptionCheckOptions opt) {
    AssumptionReport rep;
    double r_max = opt.r_max;
    if (r_max <= 0.0) {
        r_max = 16.0;
        while (d.ccdf(r_max) >= 1e-6 && r_max < 1e7) r_max *= 2.0;
    }
    rep.grid_r_max = r_max;
    const int n = opt.points;
    const double dr = r_max / static_cast<double>(n - 1);

    Eigen::ArrayXd gbar, g, gp;
    d.survival_sweep(dr, n, gbar, g, gp);

    double h_sup = -kInf, h_arg = 0.0, h2_sup = 0.0;
    for (int k = 0; k < n; ++k) {
        double h, a2;
        if (gbar(k) < kTailSwitch) {
            h = d.hazard_limit();
            a2 = std::abs(d.h2_limit());
        } else {
            h = g(k) / gbar(k);
            a2 = std::abs(gp(k)) / gbar(k);
        }
        if (h > h_sup) {
            h_sup = h;
            h_arg = dr * static_cast<double>(k);
        }
        h2_sup = std::max(h2_sup, a2);
    }

    // refine toward the origin; sustained growth flags an unbounded hazard or
    // h2 (e.g. Gamma with shape < 2)
    bool h_diverges = false, h2_diverges = false;
    {
        std::vector<double> hs, h2s;
        for (double x = dr * 0.5; x > 1e-12; x *= 0.25) {
            hs.push_back(d.hazard(x));
            h2s.push_back(std::abs(d.h2(x)));
        }
        auto diverging = [](const std::vector<double>& vals) {
            if (vals.size() < 8) return false;
            int grow = 0;
            for (std::size_t i = vals.size() - 6; i < vals.size(); ++i)
                if (vals[i] > vals[i - 1] * 1.2) ++grow;
            return grow >= 5 || vals.back() > 1e8;
        };
        h_diverges = diverging(hs);
        h2_diverges = diverging(h2s);
        for (double v : hs)
            if (v > h_sup) h_sup = v;
        for (double v : h2s) h2_sup = std::max(h2_sup, v);
    }

    rep.h_sup = h_sup;
    rep.h_argmax = h_arg;
    rep.h2_sup = h2_sup;
    rep.hazard_limit = d.hazard_limit();
    rep.h2_limit = d.h2_limit();

    rep.mean = trapz(gbar, dr);
    Eigen::ArrayXd xw(n);
    for (int k = 0; k < n; ++k) xw(k) = 2.0 * dr * static_cast<double>(k) * gbar(k);
    rep.second_moment = trapz(xw, dr);
    rep.mean_tail_remainder = d.ccdf_integral(r_max);

    // log-log regression of the survival function over the last decade
    {
        const double lo = r_max / 10.0, hi = r_max;
        const int pts = 200;
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        int used = 0;
        for (int i = 0; i < pts; ++i) {
            const double x = lo * std::pow(hi / lo, static_cast<double>(i) / (pts - 1));
            const double gg = d.ccdf(x);
            if (gg <= 0.0) continue;
            const double lx = std::log(x), ly = std::log(gg);
            sx += lx;
            sy += ly;
            sxx += lx * lx;
            sxy += lx * ly;
            ++used;
        }
        rep.tail_exponent_estimate =
            used >= 10 ? -(used * sxy - sx * sy) / (used * sxx - sx * sx) : kInf;
    }
    const double p = rep.tail_exponent_estimate;
    rep.second_moment_tail_remainder =
        (p > 2.05 && std::isfinite(p)) ? 2.0 * gbar(n - 1) * r_max * r_max / (p - 2.0)
                                       : (std::isfinite(p) ? kInf : 0.0);

    rep.pass_density_mean = std::abs(rep.mean + rep.mean_tail_remainder - 1.0) < 1e-3;
    rep.pass_hazard_bounded = !h_diverges && h_sup < 1e8;
    rep.pass_h2_bounded = !h2_diverges && h2_sup < 1e8;
    rep.pass_tail = p > 2.05;
    return rep;
}

}  // namespace hwq
