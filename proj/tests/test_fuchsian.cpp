#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "cyclharm/fuchsian.hpp"
#include "support/oracle_data.hpp"

using namespace cyclharm;

namespace {

// second derivative of the series solution, reconstructed from the
// coefficients (same signed-power pattern as w and dw)
double series_ddw(const SeriesSolution& sol, double s, const Params& prm = {}) {
    const double t = s - prm.a[sol.center];
    const double at = std::abs(t);
    const double sg = t > 0.0 ? 1.0 : -1.0;
    const double alpha = 0.5 * sol.parity;
    double acc = 0.0;
    double tk = 1.0, sgk = 1.0;
    for (std::size_t k = 0; k < sol.coeffs.size(); ++k) {
        const double ka = static_cast<double>(k) + alpha;
        acc += ka * (ka - 1.0) * sol.coeffs[k] * tk * sgk;
        tk *= at;
        sgk *= sg;
    }
    return std::pow(at, alpha - 2.0) * acc;
}

} // namespace

TEST_CASE("ode residual basics") {
    CHECK(ode_residual(0.37, 0.0, 0.0, 0.0, {1.3, -2.2}) == 0.0);
    CHECK_THROWS_AS(ode_residual(1.0, 1.0, 0.0, 0.0, {0.0, 0.0}), DomainError);
}

TEST_CASE("series solves the equation on both sides of its center") {
    const LambdaPair lam{0.7, -1.3};
    for (int j : {0, 1, 2, 3})
        for (int parity : {0, 1}) {
            const auto ser = frobenius_series(j, parity, lam);
            CHECK(ser.coeffs[0] == 1.0);
            CHECK(ser.trust_radius <= 0.25);
            for (double frac : {0.4, -0.4}) {
                const double s = Params{}.a[j] + frac * ser.trust_radius;
                if (s < 0.0 || s > 3.0) continue;
                const auto st = eval_series(ser, s);
                const double res =
                    ode_residual(s, st.w, st.dw, series_ddw(ser, s), lam);
                const double scale =
                    std::abs(st.w) + std::abs(st.dw) + 1.0;
                CHECK(std::abs(res) < 1e-12 * scale);
            }
        }
}

TEST_CASE("series endpoint behavior and derivative consistency") {
    const LambdaPair lam{0.0, 0.0};
    const auto s0 = frobenius_series(0, 0, lam, {}, 40);
    CHECK(eval_series(s0, 0.0).w == 1.0);
    const auto s1 = frobenius_series(2, 1, lam);
    CHECK(eval_series(s1, 2.0).w == 0.0);

    const auto st = eval_series(s0, 0.1);
    const double res = ode_residual(0.1, st.w, st.dw, series_ddw(s0, 0.1), lam);
    CHECK(std::abs(res) < 1e-12);

    const double h = 1e-6;
    const double fd = (eval_series(s0, 0.1 + h).w - eval_series(s0, 0.1 - h).w) /
                      (2.0 * h);
    CHECK(std::abs(fd - st.dw) < 1e-8);

    CHECK_THROWS_AS(eval_series(s0, 0.9), DomainError);
    CHECK_THROWS_AS(frobenius_series(0, 0, lam, {}, 4), DomainError);
}

TEST_CASE("propagation: linearity, round trip, wronskian constancy") {
    const LambdaPair lam{-0.4, 0.9};
    const SolutionState zero{0.1, 0.0, 0.0};
    const auto z = propagate(zero, 0.9, lam);
    CHECK(z.w == 0.0);
    CHECK(z.dw == 0.0);

    const SolutionState y0{0.1, 0.8, -0.3};
    const auto fwd = propagate(y0, 0.9, lam);
    const auto back = propagate(fwd, 0.1, lam);
    CHECK(std::abs(back.w - y0.w) < 1e-10 * std::abs(y0.w));
    CHECK(std::abs(back.dw - y0.dw) < 1e-10 * std::abs(y0.dw));

    // two independent launches from the left end of interval 2
    auto u = detail::launch_series(2, true, 0, lam, {});
    auto v = detail::launch_series(2, true, 1, lam, {});
    const double w0 = wronskian_mod(u, v);
    CHECK(std::abs(w0) > 1e-6);
    for (double s : {1.3, 1.5, 1.72, 1.9}) {
        const auto us = propagate(u, s, lam);
        const auto vs = propagate(v, s, lam);
        CHECK(std::abs(wronskian_mod(us, vs) - w0) < 1e-11 * std::abs(w0));
    }

    CHECK_THROWS_AS(propagate(y0, 1.5, lam), DomainError);
    CHECK_THROWS_AS(propagate(y0, 1.0, lam), DomainError);
}

TEST_CASE("propagation works on the outer rays") {
    const LambdaPair lam{0.2, 0.4};
    const SolutionState y0{3.5, 1.0, 0.1};
    const auto out = propagate(y0, 5.5, lam);
    const auto back = propagate(out, 3.5, lam);
    CHECK(std::abs(back.w - 1.0) < 1e-10);
    const SolutionState yn{-0.5, 0.4, 0.2};
    CHECK_NOTHROW(propagate(yn, -2.0, lam));
}

TEST_CASE("wronskian weight and antisymmetry") {
    CHECK(std::abs(wronskian_weight(1.5) - 0.75) < 1e-15);
    CHECK(wronskian_weight(2.0) == 0.0);
    CHECK(wronskian_weight(0.4) > 0.0);

    const SolutionState u{0.5, 1.2, 0.3}, v{0.5, -0.4, 2.0};
    CHECK(wronskian_mod(u, u) == 0.0);
    CHECK(wronskian_mod(u, v) == -wronskian_mod(v, u));
    const SolutionState far{0.6, 1.0, 1.0};
    CHECK_THROWS_AS(wronskian_mod(u, far), DomainError);
}

TEST_CASE("normalized endpoint pair has unit modified wronskian") {
    const LambdaPair lam{0.31, -0.62};
    // P, Q at a0 entering interval 1; Q scaled by 2/sqrt(6)
    const auto P = frobenius_series(0, 0, lam);
    const auto Q = frobenius_series(0, 1, lam);
    const double kq = 2.0 / std::sqrt(6.0);
    for (double s : {0.01, 0.1, 0.2}) {
        auto ps = eval_series(P, s);
        auto qs = eval_series(Q, s);
        qs.w *= kq;
        qs.dw *= kq;
        CHECK(std::abs(wronskian_mod(ps, qs) - 1.0) < 1e-10);
    }
    // mirrored pair at a3 entering interval 3; Q scaled by -2/sqrt(6)
    const auto P3 = frobenius_series(3, 0, lam);
    const auto Q3 = frobenius_series(3, 1, lam);
    for (double s : {2.99, 2.9, 2.8}) {
        auto ps = eval_series(P3, s);
        auto qs = eval_series(Q3, s);
        qs.w *= -2.0 / std::sqrt(6.0);
        qs.dw *= -2.0 / std::sqrt(6.0);
        CHECK(std::abs(wronskian_mod(ps, qs) - 1.0) < 1e-10);
    }
}

TEST_CASE("connection coefficients recover pure and mixed inputs") {
    const LambdaPair lam{0.31, -0.62};
    const auto P = detail::launch_to(1, true, 0, lam, {}, 0.4);
    const auto P2 = detail::launch_to(1, true, 0, lam, {}, 0.6);
    const auto cp = connection_coeffs(P.y, P2.y, 0, lam);
    CHECK(std::abs(cp.a_coef - 1.0) < 1e-10);
    CHECK(std::abs(cp.b_coef) < 1e-12);

    auto Qa = detail::launch_to(1, true, 1, lam, {}, 0.4);
    auto Qb = detail::launch_to(1, true, 1, lam, {}, 0.6);
    const double kq = 2.0 / std::sqrt(6.0);
    for (auto* q : {&Qa, &Qb}) {
        q->y.w *= kq;
        q->y.dw *= kq;
    }
    const auto cq = connection_coeffs(Qa.y, Qb.y, 0, lam);
    CHECK(std::abs(cq.a_coef) < 1e-12);
    CHECK(std::abs(cq.b_coef - 1.0) < 1e-10);

    // synthetic mixture 0.7 P - 1.3 Q, reconstructed then re-decomposed
    SolutionState m1{0.4, 0.7 * P.y.w - 1.3 * Qa.y.w,
                     0.7 * P.y.dw - 1.3 * Qa.y.dw};
    SolutionState m2{0.6, 0.7 * P2.y.w - 1.3 * Qb.y.w,
                     0.7 * P2.y.dw - 1.3 * Qb.y.dw};
    const auto cm = connection_coeffs(m1, m2, 0, lam);
    CHECK(std::abs(cm.a_coef - 0.7) < 1e-9);
    CHECK(std::abs(cm.b_coef + 1.3) < 1e-9);
    CHECK(std::abs(cm.c_coef - (-1.0 / (2.0 * cm.a_coef * cm.b_coef))) == 0.0);
}

TEST_CASE("mismatch vanishes at a catalogued eigenpair and only there") {
    // frozen kind-2 ground state: doubly-Frobenius on intervals 1 and 3
    const auto& rec = oracle::kind2[0];
    const LambdaPair lam{rec.lam1, rec.lam2};
    for (double frac : {0.4, 0.5, 0.6}) {
        CHECK(std::abs(detail::mismatch_normed(1, lam, rec.p[0], rec.p[1], {},
                                               frac)) < 1e-9);
        CHECK(std::abs(detail::mismatch_normed(3, lam, rec.p[2], rec.p[3], {},
                                               frac)) < 1e-9);
    }
    const LambdaPair off{rec.lam1 + 0.05, rec.lam2 + 0.05};
    CHECK(std::abs(detail::mismatch_normed(1, off, rec.p[0], rec.p[1], {})) >
          1e-4);

    CHECK(count_zeros(1, lam, rec.p[0]) == 0);
    CHECK(count_zeros(3, lam, rec.p[2]) == 0);
}

TEST_CASE("zero counts match the frozen indices across parities") {
    for (const auto& rec : {oracle::kind2[3], oracle::kind2[15],
                            oracle::kind2[16], oracle::kind2[31]}) {
        const LambdaPair lam{rec.lam1, rec.lam2};
        CHECK(count_zeros(1, lam, rec.p[0]) == rec.n1);
        CHECK(count_zeros(3, lam, rec.p[2]) == rec.n2);
    }
}

TEST_CASE("affine covariance of the equation") {
    // a solution for stretched parameters, pulled back by s = 2 sigma + 1
    Params wide;
    wide.a = {1.0, 3.0, 5.0, 7.0};
    const LambdaPair lam{0.3, -0.7};
    const LambdaPair mapped{(lam.lambda1 + 3.0 / 8.0) / 2.0,
                            (lam.lambda2 + lam.lambda1 + 3.0 / 16.0) / 4.0};
    const auto ser = frobenius_series(0, 0, lam, wide);
    for (double sigma : {0.05, 0.1, 0.2}) {
        const double s = 2.0 * sigma + 1.0;
        const auto st = eval_series(ser, s, wide);
        const double ddw = series_ddw(ser, s, wide);
        const double res = ode_residual(sigma, st.w, 2.0 * st.dw, 4.0 * ddw,
                                        mapped, Params{});
        CHECK(std::abs(res) < 1e-11 * (1.0 + std::abs(st.w)));
    }
}
