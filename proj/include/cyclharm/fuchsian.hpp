#pragma once

#include <vector>

#include "cyclharm/geometry.hpp"

namespace cyclharm {

// Accessory parameters of the separated ODE
//   A(s) w'' + (1/2) A'(s) w' + (3/16 s^2 + lambda1 s + lambda2) w = 0,
// A(s) = prod_j (s - a_j). All four finite singularities are regular with
// exponents {0, 1/2}.
struct LambdaPair {
    double lambda1 = 0.0;
    double lambda2 = 0.0;
};

// One Frobenius solution w = |s-a_j|^{parity/2} * sum_k c_k (s-a_j)^k.
// The signed-power form makes a single coefficient set valid on both sides
// of the center. c_0 = 1 always; scaling is applied downstream.
struct SeriesSolution {
    int center = 0;
    int parity = 0;
    std::vector<double> coeffs;
    double trust_radius = 0.0;
};

struct SolutionState {
    double s = 0.0;
    double w = 0.0;
    double dw = 0.0;
};

// E = a*P + b*Q against the normalized endpoint pair (P(end)=1,
// lim omega*Q' = 1); c = -1/(2ab).
struct ConnectionData {
    double a_coef = 0.0;
    double b_coef = 0.0;
    double c_coef = 0.0;
};

// Residual of the ODE in the cleared form
// A(s)[ddw + (1/2) sum_j dw/(s-a_j)] + (3/16 s^2 + lambda1 s + lambda2) w.
double ode_residual(double s, double w, double dw, double ddw,
                    const LambdaPair& lam, const Params& params = {});

// Coefficients up to at least order K (K >= 8); the order grows automatically
// until the truncation tail at the trust radius is below 1e-16 of the largest
// retained term (cap 200, after which the trust radius shrinks instead).
SeriesSolution frobenius_series(int j, int parity, const LambdaPair& lam,
                                const Params& params = {}, int K = 40);

// Evaluate w and dw/ds inside the trust radius, either side of the center.
SolutionState eval_series(const SeriesSolution& sol, double s,
                          const Params& params = {});

// Adaptive embedded Runge-Kutta propagation strictly inside one interval
// between adjacent singularities (the two outer rays count as intervals).
SolutionState propagate(const SolutionState& state, double s_target,
                        const LambdaPair& lam, const Params& params = {},
                        double tol = 1e-12);

// omega(s) = |A(s)|^{1/2}
double wronskian_weight(double s, const Params& params = {});

// omega(s) (u.w v.dw - v.w u.dw); constant in s for two solutions sharing lam.
double wronskian_mod(const SolutionState& u, const SolutionState& v,
                     const Params& params = {});

// Decompose a solution E of the interval adjacent to which_end (singularity
// index 0 or 3) against the endpoint-normalized pair P, Q. The two states
// must be E evaluated at two distinct interior abscissae of that interval.
ConnectionData connection_coeffs(const SolutionState& e1,
                                 const SolutionState& e2, int which_end,
                                 const LambdaPair& lam,
                                 const Params& params = {});

// Modified Wronskian at the frac-point of the interval between the
// parity-specified Frobenius solutions launched from its two ends; zero iff
// a doubly-Frobenius solution exists.
double endpoint_mismatch(int interval, const LambdaPair& lam, int parity_left,
                         int parity_right, const Params& params = {},
                         double frac = 0.5);

// Sign changes of the left-launched parity solution strictly inside the
// interval, on a doubling mesh until two consecutive counts agree.
int count_zeros(int interval, const LambdaPair& lam, int parity_left,
                const Params& params = {});

namespace detail {

// (w, dw) renormalized whenever the max-norm exceeds 1e100; log_scale
// accumulates the removed factor so callers can fold it back or cancel it.
struct ScaledState {
    SolutionState y;
    double log_scale = 0.0;
};

ScaledState propagate_scaled(const SolutionState& state, double s_target,
                             const LambdaPair& lam, const Params& params,
                             double tol);

// Series value at the trust-radius edge of an interval end (launch point for
// propagation into the interval). scale multiplies the unit-c0 series.
SolutionState launch_series(int interval, bool left_end, int parity,
                            const LambdaPair& lam, const Params& params,
                            double scale = 1.0);

// Left- or right-launched solution evaluated at s_target (series inside the
// trust region, propagation beyond it).
ScaledState launch_to(int interval, bool left_end, int parity,
                      const LambdaPair& lam, const Params& params,
                      double s_target, double tol = 1e-12);

// endpoint mismatch divided by the hypot(w, omega dw) sizes of both launched
// solutions; scale-free, O(1), safe for wide eigenvalue scans.
double mismatch_normed(int interval, const LambdaPair& lam, int pl, int pr,
                       const Params& params, double frac = 0.5);

} // namespace detail

} // namespace cyclharm
