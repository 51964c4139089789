#pragma once

#include <functional>

#include "hwq/distributions.hpp"
#include "hwq/grid.hpp"

namespace hwq {

/// One-sided convolution (f*kern)(t_i) = integral of f(t_i - s) kern(s) ds by
/// the composite trapezoidal rule; zero at t = 0.
TimePath convolve(const TimePath& f, const std::function<double(double)>& kern);

/// Trapezoidal convolution against sampled kernel values kern(k*dt).
Eigen::ArrayXd convolve_sampled(const Eigen::ArrayXd& f, const Eigen::ArrayXd& kern, double dt);

/// Renewal density u = g + g*u by implicit trapezoidal time stepping.
TimePath renewal_density(const ServiceDistribution& d, double t_max, double dt);

struct RenewalSolution {
    TimePath phi;             // solution of phi = f + g*phi
    double u_minus_one_l1;    // L1 norm of u-1 on the grid
    double c1;                // 1 + u_minus_one_l1
    double residual_sup;      // sup |phi - f - g*phi| on the grid
    double tail_remainder;    // crude estimate of the truncated |u-1| mass
};

/// Solves phi = f + g*phi via phi = f + u*f with the renewal density u.
RenewalSolution solve_renewal(const TimePath& f, const ServiceDistribution& d);
RenewalSolution solve_renewal(const TimePath& f, const ServiceDistribution& d, const TimePath& u);

/// Nonlinear Volterra equation x(t) = r(t) + integral of g(t-s) x+(s) ds.
/// Explicit trapezoidal stepping with the implicit endpoint term solved
/// exactly (the positive-part nonlinearity is piecewise linear in x(t_i)).
TimePath solve_volterra_plus(const TimePath& r, const ServiceDistribution& d);

/// (Gamma_t kappa)(r) = Gbar(r) kappa(t) - integral_0^t kappa(s) g(t+r-s) ds
/// with the derivative filled from the displayed closed form.  kappa must be
/// defined on [0, t] with t = kappa.t_max().
H1GridFunction gamma_op(const TimePath& kappa, const ServiceDistribution& d, double r_max, int n_r);

/// (Gamma_t kappa)(0) for every grid t: K(t) - integral_0^t kappa(s) g(t-s) ds.
TimePath gamma_zero_path(const TimePath& kappa, const ServiceDistribution& d);

}  // namespace hwq
