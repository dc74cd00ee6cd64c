#include "cyclharm/fuchsian.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace cyclharm {

namespace {

double cpoly(double s, const LambdaPair& lam) {
    return (3.0 / 16.0) * s * s + lam.lambda1 * s + lam.lambda2;
}

double apoly(double s, const Params& prm) {
    double v = 1.0;
    for (double aj : prm.a) v *= s - aj;
    return v;
}

void rhs(double s, const double y[2], double f[2], const LambdaPair& lam,
         const Params& prm) {
    double invsum = 0.0;
    double A = 1.0;
    for (double aj : prm.a) {
        const double d = s - aj;
        invsum += 1.0 / d;
        A *= d;
    }
    f[0] = y[1];
    f[1] = -0.5 * invsum * y[1] - cpoly(s, lam) / A * y[0];
}

// working interval bounds for propagation; the outer rays count, with an
// infinite far end
void interval_bounds(double s, const Params& prm, double& lo, double& hi) {
    if (s < prm.a[0]) {
        lo = -std::numeric_limits<double>::infinity();
        hi = prm.a[0];
        return;
    }
    if (s > prm.a[3]) {
        lo = prm.a[3];
        hi = std::numeric_limits<double>::infinity();
        return;
    }
    for (int i = 0; i < 3; ++i)
        if (s > prm.a[i] && s < prm.a[i + 1]) {
            lo = prm.a[i];
            hi = prm.a[i + 1];
            return;
        }
    throw DomainError("propagate: state sits on a singular point");
}

// Launch offset from the endpoint a_j into the interval, capped against
// series cancellation. In the oscillatory regime the partial sums peak near
// exp(phase) before cancelling down to the solution size, with local phase
// about 2 sqrt(Cmax t / |A'(a_j)|); keeping the phase under ~23 bounds the
// peak-to-sum ratio near 1e10, which still leaves ~6 reliable digits.
double safe_launch_radius(int interval, int j, const LambdaPair& lam,
                          const Params& prm, double trust) {
    double ap = 1.0;
    for (int k = 0; k < 4; ++k)
        if (k != j) ap *= prm.a[j] - prm.a[k];
    const double cmax =
        1.0 + std::max(std::abs(cpoly(prm.a[interval - 1], lam)),
                       std::abs(cpoly(prm.a[interval], lam)));
    return std::min(trust, 132.0 * std::abs(ap) / cmax);
}

} // namespace

double ode_residual(double s, double w, double dw, double ddw,
                    const LambdaPair& lam, const Params& prm) {
    prm.validate();
    for (double aj : prm.a)
        if (s == aj) throw DomainError("ode_residual: s is a singular point");
    double invsum = 0.0;
    for (double aj : prm.a) invsum += 1.0 / (s - aj);
    return apoly(s, prm) * (ddw + 0.5 * invsum * dw) + cpoly(s, lam) * w;
}

SeriesSolution frobenius_series(int j, int parity, const LambdaPair& lam,
                                const Params& prm, int K) {
    prm.validate();
    if (j < 0 || j > 3) throw DomainError("frobenius_series: j must be 0..3");
    if (parity != 0 && parity != 1)
        throw DomainError("frobenius_series: parity must be 0 or 1");
    if (K < 8) throw DomainError("frobenius_series: K must be at least 8");

    const double aj = prm.a[j];
    const double alpha = 0.5 * parity;
    double d[3];
    int m = 0;
    for (int i = 0; i < 4; ++i)
        if (i != j) d[m++] = aj - prm.a[i];
    const double q0 = d[0] * d[1] * d[2];
    const double q1 = d[0] * d[1] + d[0] * d[2] + d[1] * d[2];
    const double q2 = d[0] + d[1] + d[2];
    const double C0 = cpoly(aj, lam);
    const double C1 = (3.0 / 8.0) * aj + lam.lambda1;
    const double C2 = 3.0 / 16.0;

    std::vector<double> c{1.0};
    const auto extend_to = [&](int upto) {
        for (int mm = static_cast<int>(c.size()); mm <= upto; ++mm) {
            const double m1 = mm - 1 + alpha;
            double t = (m1 * m1 * q1 + C0) * c[mm - 1];
            if (mm >= 2)
                t += ((mm - 2 + alpha) * (mm + alpha - 1.5) * q2 + C1) * c[mm - 2];
            if (mm >= 3)
                t += ((mm - 3 + alpha) * (mm - 2 + alpha) + C2) * c[mm - 3];
            const double den = q0 * (mm + alpha) * (mm + alpha - 0.5);
            if (std::abs(den) < 1e-300)
                throw SolverError("frobenius_series: indicial factor underflow");
            c.push_back(-t / den);
        }
    };
    extend_to(K);

    double tr = 0.25 * std::min({std::abs(d[0]), std::abs(d[1]), std::abs(d[2])});
    const auto tail_ok = [&]() {
        double mx = 0.0;
        double rk = 1.0;
        for (double ck : c) {
            mx = std::max(mx, std::abs(ck) * rk);
            rk *= tr;
        }
        const double last =
            std::abs(c.back()) * std::pow(tr, static_cast<double>(c.size() - 1));
        return last <= 1e-16 * mx;
    };
    while (!tail_ok() && static_cast<int>(c.size()) - 1 < 200)
        extend_to(static_cast<int>(c.size()) - 1 + 8);
    while (!tail_ok()) tr *= 0.9;

    SeriesSolution out;
    out.center = j;
    out.parity = parity;
    out.coeffs = std::move(c);
    out.trust_radius = tr;
    return out;
}

SolutionState eval_series(const SeriesSolution& sol, double s,
                          const Params& prm) {
    const double t = s - prm.a[sol.center];
    const double at = std::abs(t);
    if (at > sol.trust_radius * (1.0 + 1e-12))
        throw DomainError("eval_series: point outside the trust radius");
    if (t == 0.0) {
        if (sol.parity == 0)
            return {s, sol.coeffs[0],
                    sol.coeffs.size() > 1 ? sol.coeffs[1] : 0.0};
        return {s, 0.0, std::numeric_limits<double>::infinity()};
    }
    const double alpha = 0.5 * sol.parity;
    const double sg = t > 0.0 ? 1.0 : -1.0;
    double ws = 0.0;
    double dws = 0.0;
    double tk = 1.0;
    double sgk = 1.0;
    for (std::size_t k = 0; k < sol.coeffs.size(); ++k) {
        const double term = sol.coeffs[k] * tk * sgk;
        ws += term;
        dws += (static_cast<double>(k) + alpha) * term;
        tk *= at;
        sgk *= sg;
    }
    return {s, std::pow(at, alpha) * ws,
            sg * std::pow(at, alpha - 1.0) * dws};
}

namespace detail {

ScaledState propagate_scaled(const SolutionState& state, double s_target,
                             const LambdaPair& lam, const Params& prm,
                             double tol) {
    prm.validate();
    if (!(tol > 0.0)) throw DomainError("propagate: tol must be positive");
    double lo, hi;
    interval_bounds(state.s, prm, lo, hi);
    if (!(s_target > lo && s_target < hi))
        throw DomainError("propagate: target leaves the working interval");
    ScaledState out{state, 0.0};
    if (s_target == state.s) return out;

    // Dormand-Prince 5(4), FSAL
    static constexpr double A21 = 1.0 / 5.0;
    static constexpr double A31 = 3.0 / 40.0, A32 = 9.0 / 40.0;
    static constexpr double A41 = 44.0 / 45.0, A42 = -56.0 / 15.0,
                            A43 = 32.0 / 9.0;
    static constexpr double A51 = 19372.0 / 6561.0, A52 = -25360.0 / 2187.0,
                            A53 = 64448.0 / 6561.0, A54 = -212.0 / 729.0;
    static constexpr double A61 = 9017.0 / 3168.0, A62 = -355.0 / 33.0,
                            A63 = 46732.0 / 5247.0, A64 = 49.0 / 176.0,
                            A65 = -5103.0 / 18656.0;
    static constexpr double B1 = 35.0 / 384.0, B3 = 500.0 / 1113.0,
                            B4 = 125.0 / 192.0, B5 = -2187.0 / 6784.0,
                            B6 = 11.0 / 84.0;
    static constexpr double E1 = 71.0 / 57600.0, E3 = -71.0 / 16695.0,
                            E4 = 71.0 / 1920.0, E5 = -17253.0 / 339200.0,
                            E6 = 22.0 / 525.0, E7 = -1.0 / 40.0;
    static constexpr double C2 = 1.0 / 5.0, C3 = 3.0 / 10.0, C4 = 4.0 / 5.0,
                            C5 = 8.0 / 9.0;

    const double span =
        std::isfinite(hi - lo) ? hi - lo : prm.span();
    const double hmin = 1e-13 * span;
    const double atol = 1e-300;
    double s = state.s;
    double y[2] = {state.w, state.dw};
    double k1[2];
    rhs(s, y, k1, lam, prm);
    const double dir = s_target > s ? 1.0 : -1.0;
    double h = dir * std::min(std::abs(s_target - s),
                              std::max(std::abs(s_target - s) / 64.0, hmin));
    bool done = false;
    while (!done) {
        if ((s + h - s_target) * dir >= 0.0) {
            h = s_target - s;
            done = true;
        }
        double k2[2], k3[2], k4[2], k5[2], k6[2], k7[2], yt[2], y5[2];
        for (int i = 0; i < 2; ++i) yt[i] = y[i] + h * A21 * k1[i];
        rhs(s + C2 * h, yt, k2, lam, prm);
        for (int i = 0; i < 2; ++i)
            yt[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        rhs(s + C3 * h, yt, k3, lam, prm);
        for (int i = 0; i < 2; ++i)
            yt[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        rhs(s + C4 * h, yt, k4, lam, prm);
        for (int i = 0; i < 2; ++i)
            yt[i] = y[i] +
                    h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        rhs(s + C5 * h, yt, k5, lam, prm);
        for (int i = 0; i < 2; ++i)
            yt[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] +
                                A64 * k4[i] + A65 * k5[i]);
        rhs(s + h, yt, k6, lam, prm);
        for (int i = 0; i < 2; ++i)
            y5[i] = y[i] + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] +
                                B5 * k5[i] + B6 * k6[i]);
        rhs(s + h, y5, k7, lam, prm);

        double errsq = 0.0;
        for (int i = 0; i < 2; ++i) {
            const double e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] +
                                  E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            const double sc = atol + tol * std::max(std::abs(y[i]),
                                                    std::abs(y5[i]));
            errsq += (e / sc) * (e / sc);
        }
        const double err = std::sqrt(0.5 * errsq);
        if (err <= 1.0) {
            s = done ? s_target : s + h;
            y[0] = y5[0];
            y[1] = y5[1];
            k1[0] = k7[0];
            k1[1] = k7[1];
            const double mag = std::max(std::abs(y[0]), std::abs(y[1]));
            if (mag > 1e100) {
                y[0] /= mag;
                y[1] /= mag;
                k1[0] /= mag;
                k1[1] /= mag;
                out.log_scale += std::log(mag);
            }
        } else {
            done = false;
        }
        const double fac =
            err > 0.0 ? std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0) : 5.0;
        h *= fac;
        if (!done && std::abs(h) < hmin)
            throw SolverError(
                "propagate: step size underflow (hand off to series near the ends)");
        if (done && s != s_target) done = false;
    }
    out.y = {s_target, y[0], y[1]};
    return out;
}

SolutionState launch_series(int interval, bool left_end, int parity,
                            const LambdaPair& lam, const Params& prm,
                            double scale) {
    if (interval < 1 || interval > 3)
        throw DomainError("launch_series: interval must be 1..3");
    const int j = left_end ? interval - 1 : interval;
    const auto ser = frobenius_series(j, parity, lam, prm);
    const double r = safe_launch_radius(interval, j, lam, prm, ser.trust_radius);
    const double s_edge = left_end ? prm.a[j] + r : prm.a[j] - r;
    auto st = eval_series(ser, s_edge, prm);
    st.w *= scale;
    st.dw *= scale;
    return st;
}

ScaledState launch_to(int interval, bool left_end, int parity,
                      const LambdaPair& lam, const Params& prm,
                      double s_target, double tol) {
    const int j = left_end ? interval - 1 : interval;
    const auto ser = frobenius_series(j, parity, lam, prm);
    const double r = safe_launch_radius(interval, j, lam, prm, ser.trust_radius);
    if (std::abs(s_target - prm.a[j]) <= r)
        return {eval_series(ser, s_target, prm), 0.0};
    const double s_edge = left_end ? prm.a[j] + r : prm.a[j] - r;
    return propagate_scaled(eval_series(ser, s_edge, prm), s_target, lam, prm,
                            tol);
}

double mismatch_normed(int interval, const LambdaPair& lam, int pl, int pr,
                       const Params& prm, double frac) {
    const double lo = prm.a[interval - 1];
    const double hi = prm.a[interval];
    const double sm = lo + frac * (hi - lo);
    const auto u = launch_to(interval, true, pl, lam, prm, sm);
    const auto v = launch_to(interval, false, pr, lam, prm, sm);
    const double om = wronskian_weight(sm, prm);
    const double nu = std::hypot(u.y.w, om * u.y.dw);
    const double nv = std::hypot(v.y.w, om * v.y.dw);
    if (nu == 0.0 || nv == 0.0)
        throw SolverError("mismatch: launched solution vanished identically");
    return om * (u.y.w * v.y.dw - v.y.w * u.y.dw) / (nu * nv);
}

} // namespace detail

SolutionState propagate(const SolutionState& state, double s_target,
                        const LambdaPair& lam, const Params& prm, double tol) {
    const auto sc = detail::propagate_scaled(state, s_target, lam, prm, tol);
    if (sc.log_scale > 690.0)
        throw SolverError("propagate: solution magnitude overflow");
    const double f = std::exp(sc.log_scale);
    return {sc.y.s, sc.y.w * f, sc.y.dw * f};
}

double wronskian_weight(double s, const Params& prm) {
    return std::sqrt(std::abs(apoly(s, prm)));
}

double wronskian_mod(const SolutionState& u, const SolutionState& v,
                     const Params& prm) {
    if (std::abs(u.s - v.s) > 1e-12 * prm.span())
        throw DomainError("wronskian_mod: states at different abscissae");
    return wronskian_weight(u.s, prm) * (u.w * v.dw - v.w * u.dw);
}

ConnectionData connection_coeffs(const SolutionState& e1,
                                 const SolutionState& e2, int which_end,
                                 const LambdaPair& lam, const Params& prm) {
    prm.validate();
    if (which_end != 0 && which_end != 3)
        throw DomainError("connection_coeffs: which_end must be 0 or 3");
    const int interval = which_end == 0 ? 1 : 3;
    const bool from_left = which_end == 0;
    const double lo = prm.a[interval - 1];
    const double hi = prm.a[interval];
    for (const auto* e : {&e1, &e2})
        if (!(e->s > lo && e->s < hi))
            throw DomainError(
                "connection_coeffs: E state outside the end's interval");

    // P: exponent-0 solution with P(end)=1; Q: exponent-1/2 solution scaled so
    // lim omega Q' = 1, i.e. unit series times 2*eps/sqrt|q0| with eps = +1
    // entering rightward from a0 and -1 entering leftward from a3
    double q0 = 1.0;
    for (int i = 0; i < 4; ++i)
        if (i != which_end) q0 *= prm.a[which_end] - prm.a[i];
    const double qscale = (from_left ? 2.0 : -2.0) / std::sqrt(std::abs(q0));

    double acc_a = 0.0, acc_b = 0.0, w_pq = 0.0;
    double vals_a[2], vals_b[2];
    int idx = 0;
    for (const auto* e : {&e1, &e2}) {
        const auto P =
            detail::launch_to(interval, from_left, 0, lam, prm, e->s);
        auto Q = detail::launch_to(interval, from_left, 1, lam, prm, e->s);
        const double fp = std::exp(P.log_scale);
        const double fq = std::exp(Q.log_scale) * qscale;
        const SolutionState Ps{e->s, P.y.w * fp, P.y.dw * fp};
        const SolutionState Qs{e->s, Q.y.w * fq, Q.y.dw * fq};
        w_pq = wronskian_mod(Ps, Qs, prm);
        if (std::abs(w_pq - 1.0) > 1e-8)
            std::fprintf(stderr,
                         "cyclharm: W[P,Q] = %.17g deviates from 1 at s=%.17g\n",
                         w_pq, e->s);
        vals_a[idx] = wronskian_mod(*e, Qs, prm) / w_pq;
        vals_b[idx] = wronskian_mod(Ps, *e, prm) / w_pq;
        acc_a += vals_a[idx];
        acc_b += vals_b[idx];
        ++idx;
    }
    ConnectionData cd;
    cd.a_coef = 0.5 * acc_a;
    cd.b_coef = 0.5 * acc_b;
    const double scale = std::hypot(cd.a_coef, cd.b_coef);
    if (scale < 1e-300)
        throw SolverError("connection_coeffs: input solution vanishes");
    if (std::abs(vals_a[0] - vals_a[1]) > 1e-8 * (1.0 + scale) ||
        std::abs(vals_b[0] - vals_b[1]) > 1e-8 * (1.0 + scale))
        std::fprintf(stderr,
                     "cyclharm: connection coefficients disagree between "
                     "abscissae (%.3e, %.3e)\n",
                     vals_a[0] - vals_a[1], vals_b[0] - vals_b[1]);
    // a*b = 0 (pure-P or pure-Q input) is legal here; harmonic assembly
    // rejects it where a nonzero product is genuinely required
    cd.c_coef = -1.0 / (2.0 * cd.a_coef * cd.b_coef);
    return cd;
}

double endpoint_mismatch(int interval, const LambdaPair& lam, int parity_left,
                         int parity_right, const Params& prm, double frac) {
    prm.validate();
    if (interval < 1 || interval > 3)
        throw DomainError("endpoint_mismatch: interval must be 1..3");
    if (!(frac > 0.0 && frac < 1.0))
        throw DomainError("endpoint_mismatch: frac must lie in (0,1)");
    const double lo = prm.a[interval - 1];
    const double hi = prm.a[interval];
    const double sm = lo + frac * (hi - lo);
    const auto u = detail::launch_to(interval, true, parity_left, lam, prm, sm);
    const auto v =
        detail::launch_to(interval, false, parity_right, lam, prm, sm);
    const double f = std::exp(u.log_scale + v.log_scale);
    return wronskian_mod(u.y, v.y, prm) * f;
}

int count_zeros(int interval, const LambdaPair& lam, int parity_left,
                const Params& prm) {
    prm.validate();
    if (interval < 1 || interval > 3)
        throw DomainError("count_zeros: interval must be 1..3");
    const double lo = prm.a[interval - 1];
    const double hi = prm.a[interval];
    const double len = hi - lo;
    const int j = interval - 1;
    const auto ser = frobenius_series(j, parity_left, lam, prm);
    const double edge =
        prm.a[j] + safe_launch_radius(interval, j, lam, prm, ser.trust_radius);

    int prev = -1;
    for (int m = 256; m <= (1 << 16); m *= 2) {
        int count = 0;
        double last_sign = 0.0;
        detail::ScaledState cur{eval_series(ser, edge, prm), 0.0};
        for (int k = 1; k <= m; ++k) {
            // clustered toward both ends: zero spacing there shrinks like
            // sqrt(distance), which the sin^2 map renders uniform in k
            const double uk = std::sin(0.5 * M_PI * k / (m + 1));
            const double sk = lo + len * uk * uk;
            double w;
            if (sk <= edge) {
                w = eval_series(ser, sk, prm).w;
            } else {
                cur = detail::propagate_scaled(cur.y, sk, lam, prm, 1e-11);
                w = cur.y.w;
            }
            const double sign = w > 0.0 ? 1.0 : (w < 0.0 ? -1.0 : 0.0);
            if (sign != 0.0) {
                if (last_sign != 0.0 && sign != last_sign) ++count;
                last_sign = sign;
            }
        }
        if (count == prev) return count;
        prev = count;
    }
    throw SolverError("count_zeros: zero count failed to stabilize");
}

} // namespace cyclharm
