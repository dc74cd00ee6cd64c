#include "cyclharm/eigen.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace cyclharm {

namespace {

std::atomic<long> g_solve_count{0};

std::string key_str(int kind, const MultiIndex& n, const ParityVector& p) {
    std::string s = "kind=" + std::to_string(kind) + " n=(" + std::to_string(n.n1) +
                    "," + std::to_string(n.n2) + ") p=(";
    for (int i = 0; i < p.size(); ++i) {
        s += std::to_string(p.bits[i]);
        s += (i + 1 < p.size()) ? "," : ")";
    }
    return s;
}

// One doubly-Frobenius interval of the two-parameter pencil as seen by the
// search. In the variable y = sigma*lambda2 the interior zero count of the
// left-launched solution is non-decreasing: the polynomial A is positive on
// interval 2 and negative on intervals 1 and 3, which flips the oscillatory
// direction.
struct Slice {
    int interval = 1;
    int pl = 0;
    int pr = 0;
    int target = 0;
    const Params* prm = nullptr;
    double win = 0.0; // |lambda2| cap

    double sigma() const { return interval == 2 ? 1.0 : -1.0; }

    double f(double l1, double l2) const {
        return detail::mismatch_normed(interval, {l1, l2}, pl, pr, *prm);
    }

    int count(double l1, double l2) const {
        // a zero sitting exactly on a probe node can defeat the mesh-doubling
        // agreement check inside count_zeros; nudge once before giving up
        try {
            return count_zeros(interval, {l1, l2}, pl, *prm);
        } catch (const SolverError&) {
            return count_zeros(interval, {l1, l2 + 1e-7 * (1.0 + std::abs(l2))},
                               pl, *prm);
        }
    }
};

double bisect_to_root(const std::function<double(double)>& fn, double a, double b,
                      double fa) {
    if (fa == 0.0) return a;
    for (int it = 0; it < 90; ++it) {
        const double m = 0.5 * (a + b);
        if (b - a <= 1e-14 * (1.0 + std::abs(a) + std::abs(b))) return m;
        const double fm = fn(m);
        if (fm == 0.0) return m;
        if ((fm < 0.0) != (fa < 0.0)) {
            b = m;
        } else {
            a = m;
            fa = fm;
        }
    }
    return 0.5 * (a + b);
}

// lambda2 on the count-labelled branch at fixed lambda1, cold start. The
// mismatch zeros with left parity pl and right parity 1 are exactly the
// points where the zero count steps, so counts bracket the plateau that
// contains the wanted root for either right parity; a sign-change scan of
// the mismatch over that plateau (plus slivers of its neighbours) followed
// by a count check at each root picks the right branch.
std::optional<double> gamma_cold(const Slice& S, double l1, const double* hint,
                                 std::string* diag) {
    const double sg = S.sigma();
    const int t = S.target;
    auto count_y = [&](double y) { return S.count(l1, sg * y); };
    auto f_y = [&](double y) { return S.f(l1, sg * y); };

    double lo = -S.win, hi = S.win;
    bool localized = false;
    if (hint != nullptr && t >= 1) {
        // a hint from a neighbouring branch point lets the plateau be
        // bracketed by stepping outward instead of bisecting the full
        // window, which avoids zero counts at extreme lambda2
        const double y0 = sg * *hint;
        double d = 0.1 * (1.0 + std::abs(y0));
        double a = y0, b = y0;
        bool alo = false, bhi = false;
        for (int k = 0; k < 8 && !(alo && bhi); ++k, d *= 4.0) {
            if (!alo) {
                a = std::max(y0 - d, -S.win);
                alo = count_y(a) <= t - 1;
                if (!alo && a == -S.win) break;
            }
            if (!bhi) {
                b = std::min(y0 + d, S.win);
                bhi = count_y(b) >= t + 1;
                if (!bhi && b == S.win) break;
            }
        }
        if (alo && bhi) {
            lo = a;
            hi = b;
            localized = true;
        }
    }
    if (!localized &&
        (count_y(lo) > std::max(0, t - 1) || count_y(hi) < t + 1)) {
        if (diag)
            *diag += " [lambda2 window " + std::to_string(S.win) +
                     " fails to bracket count " + std::to_string(t) +
                     " on interval " + std::to_string(S.interval) + "]";
        return std::nullopt;
    }
    std::optional<double> inside;
    for (int it = 0; it < 64; ++it) {
        if (hi - lo <= 0.02 * (1.0 + std::abs(lo) + std::abs(hi))) break;
        const double m = 0.5 * (lo + hi);
        const int c = count_y(m);
        if (c <= t - 1) {
            lo = m;
        } else if (c >= t + 1) {
            hi = m;
        } else {
            inside = m;
            break;
        }
    }
    if (inside) {
        // tighten both plateau edges, keeping the bounds strictly outside
        double la = lo, lb = *inside;
        while (lb - la > 0.01 * (1.0 + std::abs(la) + std::abs(lb))) {
            const double m = 0.5 * (la + lb);
            if (count_y(m) >= t) lb = m; else la = m;
        }
        double ua = *inside, ub = hi;
        while (ub - ua > 0.01 * (1.0 + std::abs(ua) + std::abs(ub))) {
            const double m = 0.5 * (ua + ub);
            if (count_y(m) <= t) ua = m; else ub = m;
        }
        lo = la;
        hi = ub;
    }
    for (int m = 65; m <= 1025; m = (m - 1) * 4 + 1) {
        std::vector<double> ys(m), fv(m);
        for (int i = 0; i < m; ++i) {
            ys[i] = lo + (hi - lo) * i / double(m - 1);
            fv[i] = f_y(ys[i]);
        }
        for (int i = 0; i + 1 < m; ++i) {
            const bool change =
                fv[i] == 0.0 || ((fv[i] < 0.0) != (fv[i + 1] < 0.0));
            if (!change) continue;
            const double yr = bisect_to_root(f_y, ys[i], ys[i + 1], fv[i]);
            const double l2 = sg * yr;
            if (S.count(l1, l2) == t) return l2;
        }
    }
    if (diag)
        *diag += " [no count-" + std::to_string(t) +
                 " mismatch root inside the bracketed plateau]";
    return std::nullopt;
}

std::optional<double> gamma_warm(const Slice& S, double l1, double hint) {
    double delta = 0.01 * (1.0 + std::abs(hint));
    for (int k = 0; k < 7; ++k, delta *= 4.0) {
        const double a = std::max(hint - delta, -S.win);
        const double b = std::min(hint + delta, S.win);
        const double fa = S.f(l1, a);
        const double fb = S.f(l1, b);
        if (fa == 0.0 || (fa < 0.0) != (fb < 0.0)) {
            auto fn = [&](double x) { return S.f(l1, x); };
            const double r = bisect_to_root(fn, a, b, fa);
            if (S.count(l1, r) == S.target) return r;
            return std::nullopt; // bracketed a neighbouring branch
        }
    }
    return std::nullopt;
}

std::optional<double> gamma_branch(const Slice& S, double l1, const double* hint,
                                   std::string* diag) {
    if (hint != nullptr) {
        if (auto r = gamma_warm(S, l1, *hint)) return r;
    }
    return gamma_cold(S, l1, hint, diag);
}

SolutionState launch_folded(int interval, bool left_end, int parity,
                            const LambdaPair& lam, const Params& prm, double s) {
    const auto ss = detail::launch_to(interval, left_end, parity, lam, prm, s);
    const double k = std::exp(ss.log_scale);
    return {ss.y.s, ss.y.w * k, ss.y.dw * k};
}

struct Fpair {
    double f1;
    double f2;
};

Fpair eval_mismatches(const Slice& S1, const Slice& S2, const LambdaPair& lam) {
    return {S1.f(lam.lambda1, lam.lambda2), S2.f(lam.lambda1, lam.lambda2)};
}

bool newton_polish(const Slice& S1, const Slice& S2, LambdaPair& lam) {
    for (int it = 0; it < 15; ++it) {
        const Fpair f0 = eval_mismatches(S1, S2, lam);
        const double h1 = 1e-6 * (1.0 + std::abs(lam.lambda1));
        const double h2 = 1e-6 * (1.0 + std::abs(lam.lambda2));
        const Fpair fp1 = eval_mismatches(S1, S2, {lam.lambda1 + h1, lam.lambda2});
        const Fpair fm1 = eval_mismatches(S1, S2, {lam.lambda1 - h1, lam.lambda2});
        const Fpair fp2 = eval_mismatches(S1, S2, {lam.lambda1, lam.lambda2 + h2});
        const Fpair fm2 = eval_mismatches(S1, S2, {lam.lambda1, lam.lambda2 - h2});
        const double j11 = (fp1.f1 - fm1.f1) / (2.0 * h1);
        const double j12 = (fp2.f1 - fm2.f1) / (2.0 * h2);
        const double j21 = (fp1.f2 - fm1.f2) / (2.0 * h1);
        const double j22 = (fp2.f2 - fm2.f2) / (2.0 * h2);
        const double det = j11 * j22 - j12 * j21;
        if (!(std::abs(det) > 1e-300)) return false;
        const double d1 = (f0.f1 * j22 - f0.f2 * j12) / det;
        const double d2 = (f0.f2 * j11 - f0.f1 * j21) / det;
        lam.lambda1 -= d1;
        lam.lambda2 -= d2;
        const double rel = std::max(std::abs(d1) / (1.0 + std::abs(lam.lambda1)),
                                    std::abs(d2) / (1.0 + std::abs(lam.lambda2)));
        if (rel <= 1e-10) return true;
    }
    return false;
}

// residual + zero-count + middle-solution validation; fills the record
std::optional<EigenRecord> finalize_candidate(int kind, const MultiIndex& n,
                                              const ParityVector& p,
                                              const Slice& S1, const Slice& S2,
                                              const LambdaPair& lam,
                                              const Params& prm, double tol,
                                              std::string& diag) {
    const Fpair f = eval_mismatches(S1, S2, lam);
    if (!(std::abs(f.f1) <= tol && std::abs(f.f2) <= tol)) {
        diag += " [candidate residuals " + std::to_string(f.f1) + "," +
                std::to_string(f.f2) + " above tolerance]";
        return std::nullopt;
    }
    const int c1 = S1.count(lam.lambda1, lam.lambda2);
    const int c2 = S2.count(lam.lambda1, lam.lambda2);
    if (c1 != n.n1 || c2 != n.n2) {
        diag += " [root has zero counts (" + std::to_string(c1) + "," +
                std::to_string(c2) + ") instead of (" + std::to_string(n.n1) +
                "," + std::to_string(n.n2) + ")]";
        return std::nullopt;
    }

    // the single-sided solution on the remaining interval must not itself be
    // Frobenius at its far end, otherwise the product field degenerates
    int mid_interval;
    int mid_parity;
    bool anchored_left;
    if (kind == 1) {
        mid_interval = 1;
        anchored_left = false;
        mid_parity = p.bits[0];
    } else if (kind == 2) {
        mid_interval = 2;
        anchored_left = true;
        mid_parity = p.bits[1];
    } else {
        mid_interval = 3;
        anchored_left = true;
        mid_parity = p.bits[2];
    }
    for (int q = 0; q <= 1; ++q) {
        const double mm =
            anchored_left
                ? detail::mismatch_normed(mid_interval, lam, mid_parity, q, prm)
                : detail::mismatch_normed(mid_interval, lam, q, mid_parity, prm);
        if (std::abs(mm) <= 1e-6)
            throw SolverError("degenerate middle solution (far-end parity " +
                              std::to_string(q) + ") for " + key_str(kind, n, p));
    }

    EigenRecord rec;
    rec.kind = kind;
    rec.n = n;
    rec.p = p;
    rec.lam = lam;
    rec.norm_scale = 0.0;
    rec.residuals = {std::abs(f.f1), std::abs(f.f2)};
    rec.zero_counts = {c1, c2};

    if (kind != 2) {
        const auto& a = prm.a;
        SolutionState e1, e2;
        if (kind == 1) {
            // unit series anchored at the right end of interval 1,
            // decomposed into the P/Q pair at the left end
            e1 = launch_folded(1, false, p.bits[0], lam, prm,
                               a[0] + 0.4 * (a[1] - a[0]));
            e2 = launch_folded(1, false, p.bits[0], lam, prm,
                               a[0] + 0.6 * (a[1] - a[0]));
            rec.connection = connection_coeffs(e1, e2, 0, lam, prm);
        } else {
            e1 = launch_folded(3, true, p.bits[2], lam, prm,
                               a[2] + 0.4 * (a[3] - a[2]));
            e2 = launch_folded(3, true, p.bits[2], lam, prm,
                               a[2] + 0.6 * (a[3] - a[2]));
            rec.connection = connection_coeffs(e1, e2, 3, lam, prm);
        }
        const double mag =
            std::hypot(rec.connection->a_coef, rec.connection->b_coef);
        if (!(std::abs(rec.connection->a_coef) > 1e-10 * mag) ||
            !(std::abs(rec.connection->b_coef) > 1e-10 * mag))
            throw SolverError("degenerate connection coefficients for " +
                              key_str(kind, n, p));
    }
    return rec;
}

std::optional<EigenRecord> attempt(int kind, const MultiIndex& n,
                                   const ParityVector& p, const Params& prm,
                                   double W, double tol, std::string& diag) {
    const auto specs = eigen_intervals(kind, p);
    const Slice S1{specs[0].interval, specs[0].parity_left, specs[0].parity_right,
                   n.n1, &prm, W * W};
    const Slice S2{specs[1].interval, specs[1].parity_left, specs[1].parity_right,
                   n.n2, &prm, W * W};

    // trace the count-n1 branch of the first interval over a lambda1 grid;
    // at each branch point record the second interval's mismatch and zero
    // count so cells can be screened before any bisection work
    const int G = 64;
    std::vector<double> l1(G), l2(G), gv(G);
    std::vector<int> cv(G, -1);
    std::vector<char> ok(G, 0);
    auto second_count = [&](double x, double y) {
        try {
            return S2.count(x, y);
        } catch (const SolverError&) {
            return -1; // probe mesh failed to settle; leave the tag unknown
        }
    };
    double hint = 0.0;
    bool has_hint = false;
    bool window_note = false;
    for (int i = 0; i < G; ++i) {
        l1[i] = -W + 2.0 * W * i / (G - 1);
        auto r = gamma_branch(S1, l1[i], has_hint ? &hint : nullptr,
                              window_note ? nullptr : &diag);
        if (r) {
            ok[i] = 1;
            l2[i] = *r;
            gv[i] = S2.f(l1[i], *r);
            cv[i] = second_count(l1[i], *r);
            hint = *r;
            has_hint = true;
        } else {
            window_note = true;
            has_hint = false;
        }
    }

    // walk one bracket: refine x4, bisect lambda1 along the branch, then
    // polish; returns nothing when the root fails its count screen
    auto hunt = [&](double xa, double xb, double ga,
                    double lam2a) -> std::optional<EigenRecord> {
        double h = lam2a;
        auto g_at = [&](double x) -> std::optional<std::pair<double, double>> {
            auto r = gamma_branch(S1, x, &h, nullptr);
            if (!r) return std::nullopt;
            h = *r;
            return std::make_pair(S2.f(x, *r), *r);
        };
        // refine the cell before bisecting
        {
            double px = xa, pg = ga;
            for (int k = 1; k <= 3; ++k) {
                const double x = xa + (xb - xa) * k / 4.0;
                auto gr = g_at(x);
                if (!gr) break;
                const double g = gr->first;
                if (g == 0.0 || (pg < 0.0) != (g < 0.0)) {
                    xb = x;
                    break;
                }
                px = x;
                pg = g;
            }
            xa = px;
            ga = pg;
        }
        LambdaPair cand{0.5 * (xa + xb), lam2a};
        bool have_cand = false;
        for (int it = 0; it < 80; ++it) {
            const double m = 0.5 * (xa + xb);
            auto gr = g_at(m);
            if (!gr) {
                diag += " [branch lost during lambda1 bisection]";
                return std::nullopt;
            }
            cand = {m, gr->second};
            have_cand = true;
            if (gr->first == 0.0) break;
            if ((gr->first < 0.0) != (ga < 0.0)) {
                xb = m;
            } else {
                xa = m;
                ga = gr->first;
            }
            if (xb - xa <= 1e-8 * (1.0 + std::abs(xa) + std::abs(xb))) break;
        }
        if (!have_cand) return std::nullopt;
        if (S2.count(cand.lambda1, cand.lambda2) != n.n2) {
            diag += " [bracketed root rejected by second-interval count]";
            return std::nullopt;
        }
        LambdaPair pol = cand;
        if (!newton_polish(S1, S2, pol)) pol = cand;
        if (auto rec = finalize_candidate(kind, n, p, S1, S2, pol, prm, tol, diag))
            return rec;
        // polish fallback: push the bisection itself to convergence
        for (int it = 0; it < 64; ++it) {
            if (xb - xa <= 5e-14 * (1.0 + std::abs(xa) + std::abs(xb))) break;
            const double m = 0.5 * (xa + xb);
            auto gr = g_at(m);
            if (!gr) return std::nullopt;
            cand = {m, gr->second};
            if (gr->first == 0.0) break;
            if ((gr->first < 0.0) != (ga < 0.0)) {
                xb = m;
            } else {
                xa = m;
                ga = gr->first;
            }
        }
        return finalize_candidate(kind, n, p, S1, S2, cand, prm, tol, diag);
    };

    auto sign_change = [](double ga, double gb) {
        return ga == 0.0 || (ga < 0.0) != (gb < 0.0);
    };

    // one extra branch point evaluated on demand while a cell is refined
    struct Node {
        double x;
        double l2;
        double g;
        int c;
    };
    auto eval_node = [&](double x, double l2h) -> std::optional<Node> {
        double h = l2h;
        auto r = gamma_branch(S1, x, &h, nullptr);
        if (!r) return std::nullopt;
        return Node{x, *r, S2.f(x, *r), second_count(x, *r)};
    };

    // polish straight from a branch point; reaches roots whose bracket the
    // one-dimensional reduction only grazes
    auto polish_at = [&](double x, double y) -> std::optional<EigenRecord> {
        LambdaPair pol{x, y};
        if (!newton_polish(S1, S2, pol)) return std::nullopt;
        return finalize_candidate(kind, n, p, S1, S2, pol, prm, tol, diag);
    };

    struct Cell {
        double xa, xb, ga, gb, l2a;
        int ca, cb;
    };

    // endpoint counts admit the target when it lies in their closed range;
    // an unknown side defers to the other one
    auto spans_target = [&](int ca, int cb) {
        if (ca < 0 && cb < 0) return false;
        if (ca < 0) return cb == n.n2;
        if (cb < 0) return ca == n.n2;
        return std::min(ca, cb) <= n.n2 && n.n2 <= std::max(ca, cb);
    };

    // a cell whose second-interval count moves across the target while the
    // mismatch keeps its sign hides an even number of crossings; split until
    // a bracket with the wanted count sits at an endpoint, then hand to hunt
    std::function<std::optional<EigenRecord>(const Cell&, int)> split =
        [&](const Cell& cell, int depth) -> std::optional<EigenRecord> {
        if (sign_change(cell.ga, cell.gb) && spans_target(cell.ca, cell.cb))
            if (auto rec = hunt(cell.xa, cell.xb, cell.ga, cell.l2a)) return rec;
        const double wtol =
            1e-6 * (1.0 + std::abs(cell.xa) + std::abs(cell.xb));
        if (depth >= 24 || cell.xb - cell.xa <= wtol) {
            if (spans_target(cell.ca, cell.cb))
                if (auto rec = polish_at(cell.xa, cell.l2a)) return rec;
            return std::nullopt;
        }
        const auto mid = eval_node(0.5 * (cell.xa + cell.xb), cell.l2a);
        if (!mid) return std::nullopt;
        const Cell halves[2] = {
            {cell.xa, mid->x, cell.ga, mid->g, cell.l2a, cell.ca, mid->c},
            {mid->x, cell.xb, mid->g, cell.gb, mid->l2, mid->c, cell.cb}};
        for (const Cell& half : halves) {
            if (!sign_change(half.ga, half.gb) && half.ca == half.cb) continue;
            if (auto rec = split(half, depth + 1)) return rec;
        }
        return std::nullopt;
    };

    // primary passes: cells whose endpoint counts admit the target, taking
    // plain sign changes first, then count steps that hide the crossing
    for (int pass = 0; pass < 2; ++pass) {
        for (int i = 0; i + 1 < G; ++i) {
            if (!ok[i] || !ok[i + 1]) continue;
            const bool sc = sign_change(gv[i], gv[i + 1]);
            const bool admit = spans_target(cv[i], cv[i + 1]);
            const bool want =
                pass == 0 ? (sc && admit)
                          : (!sc && admit && cv[i] != cv[i + 1]);
            if (!want) continue;
            const Cell cell{l1[i], l1[i + 1], gv[i], gv[i + 1], l2[i],
                            cv[i], cv[i + 1]};
            if (auto rec = split(cell, 0)) return rec;
        }
    }
    // fallback pass, the original screen: remaining sign changes are bisected
    // and left to the count check
    for (int i = 0; i + 1 < G; ++i) {
        if (!ok[i] || !ok[i + 1]) continue;
        if (!sign_change(gv[i], gv[i + 1])) continue;
        if (spans_target(cv[i], cv[i + 1])) continue; // already tried
        if (auto rec = hunt(l1[i], l1[i + 1], gv[i], l2[i])) return rec;
    }
    return std::nullopt;
}

} // namespace

int pack_parity(const ParityVector& p) {
    p.validate();
    int v = 0;
    for (int i = 0; i < p.size(); ++i) v = (v << 1) | p.bits[i];
    return v;
}

ParityVector unpack_parity(int kind, int bits) {
    ParityVector p;
    p.kind = kind;
    const int sz = (kind == 2) ? 4 : 3;
    if (kind < 1 || kind > 3 || bits < 0 || bits >= (1 << sz))
        throw DomainError("unpack_parity: bits out of range for kind");
    for (int i = 0; i < sz; ++i) p.bits[i] = (bits >> (sz - 1 - i)) & 1;
    return p;
}

std::array<EigenIntervalSpec, 2> eigen_intervals(int kind, const ParityVector& p) {
    p.validate();
    if (p.kind != kind)
        throw DomainError("eigen_intervals: parity vector kind mismatch");
    switch (kind) {
        case 1:
            return {{{2, p.bits[0], p.bits[1]}, {3, p.bits[1], p.bits[2]}}};
        case 2:
            return {{{1, p.bits[0], p.bits[1]}, {3, p.bits[2], p.bits[3]}}};
        default:
            return {{{1, p.bits[0], p.bits[1]}, {2, p.bits[1], p.bits[2]}}};
    }
}

const EigenRecord* Catalog::find(int kind, const MultiIndex& n,
                                 const ParityVector& p) const {
    const auto it = records.find(CatalogKey{kind, n.n1, n.n2, pack_parity(p)});
    return it == records.end() ? nullptr : &it->second;
}

void Catalog::insert(const EigenRecord& rec) {
    if (rec.p.kind != rec.kind)
        throw DomainError("catalog insert: parity vector kind mismatch");
    records[CatalogKey{rec.kind, rec.n.n1, rec.n.n2, pack_parity(rec.p)}] = rec;
}

EigenRecord solve_eigen(int kind, const MultiIndex& n, const ParityVector& p,
                        const Params& params, double tol) {
    params.validate();
    p.validate();
    if (kind < 1 || kind > 3) throw DomainError("solve_eigen: kind must be 1..3");
    if (p.kind != kind)
        throw DomainError("solve_eigen: parity vector kind mismatch");
    if (n.n1 < 0 || n.n2 < 0)
        throw DomainError("solve_eigen: zero counts must be nonnegative");
    if (!(tol > 0.0 && tol < 1e-2))
        throw DomainError("solve_eigen: tolerance out of range");
    ++g_solve_count;

    double maxa = 0.0;
    for (double aj : params.a) maxa = std::max(maxa, std::abs(aj));
    const double W0 = 10.0 * (1 + n.n1 + n.n2) * maxa;

    std::string diag;
    for (int d = 0; d <= 4; ++d) {
        const double W = W0 * double(1 << d);
        if (auto rec = attempt(kind, n, p, params, W, tol, diag)) return *rec;
    }
    throw SolverError("eigen search exhausted (window doubled 4x) for " +
                      key_str(kind, n, p) + ";" + diag);
}

long eigen_solve_count() { return g_solve_count.load(); }

} // namespace cyclharm
