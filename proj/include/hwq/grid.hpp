#pragma once

#include <Eigen/Core>
#include <cmath>
#include <stdexcept>

namespace hwq {

/// Composite trapezoidal rule over equally spaced samples.
inline double trapz(const Eigen::ArrayXd& y, double h) {
    const auto n = y.size();
    if (n < 2) return 0.0;
    return h * (y.sum() - 0.5 * (y(0) + y(n - 1)));
}

/// Running trapezoidal integral: out(i) = integral of y over [0, i*h].
inline Eigen::ArrayXd cumtrapz(const Eigen::ArrayXd& y, double h) {
    Eigen::ArrayXd out(y.size());
    out(0) = 0.0;
    for (Eigen::Index i = 1; i < y.size(); ++i)
        out(i) = out(i - 1) + 0.5 * h * (y(i - 1) + y(i));
    return out;
}

/// Function sampled on the uniform age grid r_k = k*dr, k = 0..n.
struct GridFunction {
    double dr = 0.0;
    Eigen::ArrayXd v;

    GridFunction() = default;
    GridFunction(double dr_, Eigen::ArrayXd v_) : dr(dr_), v(std::move(v_)) {
        if (dr <= 0.0) throw std::invalid_argument("GridFunction: dr must be positive");
    }

    Eigen::Index points() const { return v.size(); }
    double r_max() const { return dr * static_cast<double>(v.size() - 1); }
    double operator()(Eigen::Index k) const { return v(k); }
};

/// Real path on the uniform time grid t_i = i*dt, i = 0..n.
struct TimePath {
    double dt = 0.0;
    Eigen::ArrayXd v;

    TimePath() = default;
    TimePath(double dt_, Eigen::ArrayXd v_) : dt(dt_), v(std::move(v_)) {
        if (dt <= 0.0) throw std::invalid_argument("TimePath: dt must be positive");
    }
    static TimePath zeros(double dt, Eigen::Index steps) {
        return TimePath(dt, Eigen::ArrayXd::Zero(steps + 1));
    }

    Eigen::Index steps() const { return v.size() - 1; }
    double t_max() const { return dt * static_cast<double>(steps()); }
    double operator()(Eigen::Index i) const { return v(i); }
};

/// Grid function paired with its weak derivative on the same grid.
struct H1GridFunction {
    GridFunction f;
    GridFunction df;

    H1GridFunction() = default;
    H1GridFunction(GridFunction f_, GridFunction df_) : f(std::move(f_)), df(std::move(df_)) {
        if (f.v.size() != df.v.size() || f.dr != df.dr)
            throw std::invalid_argument("H1GridFunction: value and derivative grids differ");
    }
};

inline double l2_norm(const GridFunction& g) { return std::sqrt(trapz(g.v.square(), g.dr)); }
inline double sup_norm(const GridFunction& g) { return g.v.abs().maxCoeff(); }

inline double h1_norm(const H1GridFunction& g) {
    const double a = l2_norm(g.f), b = l2_norm(g.df);
    return std::sqrt(a * a + b * b);
}

/// Largest per-cell defect of f(r_{k+1}) - f(r_k) against the trapezoidal
/// integral of the stored derivative.  Used to validate (value, derivative)
/// pairs assembled from independent formulas.
inline double h1_compat_defect(const H1GridFunction& g) {
    double worst = 0.0;
    for (Eigen::Index k = 0; k + 1 < g.f.v.size(); ++k) {
        const double cell = g.f.v(k + 1) - g.f.v(k) - 0.5 * g.f.dr * (g.df.v(k) + g.df.v(k + 1));
        worst = std::max(worst, std::abs(cell));
    }
    return worst;
}

inline bool h1_compatible(const H1GridFunction& g, double tol) { return h1_compat_defect(g) <= tol; }

/// g(r) = f(t + r) with t aligned to the grid; zero extension past r_max.
inline H1GridFunction translate(const H1GridFunction& g, double t) {
    const double ratio = t / g.f.dr;
    const auto shift = static_cast<Eigen::Index>(std::llround(ratio));
    if (std::abs(ratio - static_cast<double>(shift)) > 1e-9 || shift < 0)
        throw std::invalid_argument("translate: t must be a nonnegative grid multiple");
    const Eigen::Index n = g.f.v.size();
    Eigen::ArrayXd fv = Eigen::ArrayXd::Zero(n), dv = Eigen::ArrayXd::Zero(n);
    if (shift < n) {
        fv.head(n - shift) = g.f.v.tail(n - shift);
        dv.head(n - shift) = g.df.v.tail(n - shift);
    }
    return H1GridFunction(GridFunction(g.f.dr, std::move(fv)), GridFunction(g.df.dr, std::move(dv)));
}

/// State of the diffusion model: (x, z) with z(0) = x ^ 0 enforced exactly.
struct StatePoint {
    double x = 0.0;
    H1GridFunction z;

    StatePoint(double x_, H1GridFunction z_) : x(x_), z(std::move(z_)) {
        if (z.f.v(0) != std::min(x, 0.0))
            throw std::invalid_argument("StatePoint: z(0) != x ^ 0");
    }
};

}  // namespace hwq
