#include "support/colloc_oracle.hpp"

#include <cmath>

#include <Eigen/Dense>

namespace colloc {

namespace {

// Chebyshev-Gauss-Lobatto differentiation matrix on [-1,1], nodes descending
void cheb(int N, Eigen::MatrixXd& D, Eigen::VectorXd& x) {
    x.resize(N + 1);
    for (int k = 0; k <= N; ++k) x[k] = std::cos(M_PI * k / N);
    Eigen::VectorXd c(N + 1);
    for (int k = 0; k <= N; ++k)
        c[k] = ((k == 0 || k == N) ? 2.0 : 1.0) * ((k % 2) ? -1.0 : 1.0);
    D.resize(N + 1, N + 1);
    for (int i = 0; i <= N; ++i) {
        double rowsum = 0.0;
        for (int j = 0; j <= N; ++j) {
            if (i == j) continue;
            D(i, j) = (c[i] / c[j]) / (x[i] - x[j]);
            rowsum += D(i, j);
        }
        D(i, i) = -rowsum;
    }
}

} // namespace

std::vector<std::pair<double, int>> lambda2_spectrum(int interval, int pl,
                                                     int pr, double lam1,
                                                     const cyclharm::Params& prm,
                                                     int N) {
    const auto& a = prm.a;
    const double b = a[interval - 1];
    const double ce = a[interval];
    // factor out the endpoint exponents: w = (s-b)^al (s-ce)^be v. For
    // exponents 0 or 1/2 the conjugated operator has polynomial coefficients
    // (the candidate 1/(s-b) pieces carry the factor al(al-1/2) and vanish),
    // so no boundary rows are needed: the endpoint equations themselves
    // enforce regularity of v.
    const double al = pl / 2.0;
    const double be = pr / 2.0;

    Eigen::MatrixXd D;
    Eigen::VectorXd xx;
    cheb(N, D, xx);
    const int M = N + 1;
    Eigen::VectorXd s(M);
    for (int i = 0; i < M; ++i) s[i] = 0.5 * (b + ce) + 0.5 * (ce - b) * xx[i];
    D *= 2.0 / (ce - b);
    const Eigen::MatrixXd D2 = D * D;

    double o0 = 0.0, o1 = 0.0;
    {
        int got = 0;
        for (int j = 0; j < 4; ++j) {
            if (j == interval - 1 || j == interval) continue;
            (got++ == 0 ? o0 : o1) = a[j];
        }
    }

    Eigen::MatrixXd op(M, M);
    for (int i = 0; i < M; ++i) {
        const double si = s[i];
        const double rho = (si - o0) * (si - o1);
        const double rhop = 2.0 * si - o0 - o1;
        const double A = (si - b) * (si - ce) * rho;
        const double Ap =
            (si - ce) * rho + (si - b) * rho + (si - b) * (si - ce) * rhop;
        const double B = 2.0 * rho * (al * (si - ce) + be * (si - b)) + 0.5 * Ap;
        const double C = rho * (2.0 * al * be + 0.5 * (al + be)) +
                         0.5 * rhop * (al * (si - ce) + be * (si - b)) +
                         (3.0 / 16.0) * si * si + lam1 * si;
        op.row(i) = A * D2.row(i) + B * D.row(i);
        op(i, i) += C;
    }

    Eigen::EigenSolver<Eigen::MatrixXd> es(op);
    std::vector<std::pair<double, int>> out;
    for (int k = 0; k < M; ++k) {
        const std::complex<double> ev = es.eigenvalues()[k];
        if (std::abs(ev.imag()) >= 1e-6 * (1.0 + std::abs(ev.real()))) continue;
        const Eigen::VectorXd vec = es.eigenvectors().col(k).real();
        int nz = 0;
        double prev = 0.0;
        for (int i = 0; i < M; ++i) {
            const double v = vec[i];
            if (v == 0.0) continue;
            if (prev != 0.0 && (v < 0.0) != (prev < 0.0)) ++nz;
            prev = v;
        }
        out.emplace_back(-ev.real(), nz);
    }
    return out;
}

std::optional<double> lambda2_for_count(int interval, int pl, int pr,
                                        double lam1, int n,
                                        const cyclharm::Params& prm, int N) {
    const auto spec = lambda2_spectrum(interval, pl, pr, lam1, prm, N);
    std::optional<double> best;
    for (const auto& [l2, nz] : spec) {
        if (nz != n) continue;
        if (!best) {
            best = l2;
            continue;
        }
        if (interval == 2) {
            if (std::abs(l2) < std::abs(*best)) best = l2;
        } else {
            if (l2 > *best) best = l2;
        }
    }
    return best;
}

std::optional<cyclharm::LambdaPair> kind2_pair(const std::array<int, 2>& n,
                                               const std::array<int, 4>& p,
                                               const cyclharm::Params& prm,
                                               int N, double lam1_lo,
                                               double lam1_hi) {
    auto delta = [&](double l1) -> std::optional<double> {
        const auto m1 = lambda2_for_count(1, p[0], p[1], l1, n[0], prm, N);
        const auto m3 = lambda2_for_count(3, p[2], p[3], l1, n[1], prm, N);
        if (!m1 || !m3) return std::nullopt;
        return *m1 - *m3;
    };
    const int G = 41;
    std::vector<std::optional<double>> vals(G);
    std::vector<double> grid(G);
    for (int i = 0; i < G; ++i) {
        grid[i] = lam1_lo + (lam1_hi - lam1_lo) * i / double(G - 1);
        vals[i] = delta(grid[i]);
    }
    for (int i = 0; i + 1 < G; ++i) {
        if (!vals[i] || !vals[i + 1]) continue;
        if (*vals[i] * *vals[i + 1] >= 0.0) continue;
        double lo = grid[i], hi = grid[i + 1];
        double flo = *vals[i];
        for (int it = 0; it < 60; ++it) {
            const double mid = 0.5 * (lo + hi);
            const auto fm = delta(mid);
            if (!fm) break;
            if (flo * *fm <= 0.0) {
                hi = mid;
            } else {
                lo = mid;
                flo = *fm;
            }
        }
        const double l1 = 0.5 * (lo + hi);
        const auto l2 = lambda2_for_count(1, p[0], p[1], l1, n[0], prm, N);
        if (!l2) return std::nullopt;
        return cyclharm::LambdaPair{l1, *l2};
    }
    return std::nullopt;
}

} // namespace colloc
