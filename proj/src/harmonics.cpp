#include "cyclharm/harmonics.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "cyclharm/errors.hpp"
#include "cyclharm/expansion.hpp"
#include "cyclharm/geometry.hpp"

namespace cyclharm {

namespace {

// Chebyshev-Lobatto panel count across the interval interior. Even, so the
// interval midpoint used for basis matching is close to a node.
constexpr int kMidNodes = 96;

SolutionState fold(const detail::ScaledState& sc) {
    if (sc.log_scale > 690.0)
        throw SolverError("separated solution: propagated magnitude overflow");
    const double f = std::exp(sc.log_scale);
    return {sc.y.s, sc.y.w * f, sc.y.dw * f};
}

// u*y0 + v*y1, skipping terms with zero coefficient. The parity-1 branch has
// an infinite derivative at the endpoint itself; 0*inf must not become NaN.
SolutionState combine(double u, const SolutionState& y0, double v,
                      const SolutionState& y1) {
    SolutionState out{y0.s, 0.0, 0.0};
    if (u != 0.0) {
        out.w += u * y0.w;
        out.dw += u * y0.dw;
    }
    if (v != 0.0) {
        out.w += v * y1.w;
        out.dw += v * y1.dw;
    }
    return out;
}

// analytic factor of the series, sum c_k t^k with signed t
double poly_part(const SeriesSolution& ser, double t) {
    double acc = 0.0;
    for (std::size_t k = ser.coeffs.size(); k-- > 0;)
        acc = acc * t + ser.coeffs[k];
    return acc;
}

} // namespace

SeparatedSolution::SeparatedSolution(int interval, const LambdaPair& lam,
                                     bool anchor_left, int parity,
                                     double exp_left, double exp_right,
                                     const Params& params)
    : interval_(interval), al_(exp_left), ar_(exp_right), lam_(lam),
      prm_(params) {
    prm_.validate();
    if (interval < 1 || interval > 3)
        throw DomainError("separated solution: interval must be 1..3");
    if (parity != 0 && parity != 1)
        throw DomainError("separated solution: parity must be 0 or 1");
    for (double e : {exp_left, exp_right})
        if (e != 0.0 && e != 0.5)
            throw DomainError(
                "separated solution: endpoint exponents must be 0 or 1/2");
    b_ = prm_.a[interval - 1];
    c_ = prm_.a[interval];
    for (int q = 0; q < 2; ++q) {
        sL_[q] = frobenius_series(interval - 1, q, lam, prm_);
        sR_[q] = frobenius_series(interval, q, lam, prm_);
    }
    trL_ = std::min(sL_[0].trust_radius, sL_[1].trust_radius);
    trR_ = std::min(sR_[0].trust_radius, sR_[1].trust_radius);

    // tabulate the two left-end unit solutions across the interior in one
    // propagation sweep each; the leading nodes sit inside the series zone
    const double lo = b_ + 0.5 * trL_;
    const double hi = c_ - 0.5 * trR_;
    const double mid = 0.5 * (lo + hi);
    const double half = 0.5 * (hi - lo);
    nodes_.resize(kMidNodes + 1);
    for (int k = 0; k <= kMidNodes; ++k)
        nodes_[k] = mid - half * std::cos(M_PI * k / kMidNodes);
    nodes_.front() = lo;
    nodes_.back() = hi;
    for (int q = 0; q < 2; ++q) {
        bw_[q].resize(nodes_.size());
        bdw_[q].resize(nodes_.size());
        SolutionState cur{};
        for (std::size_t k = 0; k < nodes_.size(); ++k) {
            const double sk = nodes_[k];
            if (sk - b_ <= sL_[q].trust_radius)
                cur = eval_series(sL_[q], sk, prm_);
            else
                cur = propagate(cur, sk, lam_, prm_, 1e-12);
            bw_[q][k] = cur.w;
            bdw_[q][k] = cur.dw;
        }
    }

    // express the anchored unit solution in both end bases through modified
    // Wronskian ratios at the interval midpoint
    const double smid = 0.5 * (b_ + c_);
    const auto yl0 = basis_state(0, smid);
    const auto yl1 = basis_state(1, smid);
    const double wl = wronskian_mod(yl0, yl1, prm_);
    if (wl == 0.0 || !std::isfinite(wl))
        throw SolverError("separated solution: left basis degenerated");
    if (anchor_left) {
        uL_ = parity == 0 ? 1.0 : 0.0;
        vL_ = parity == 0 ? 0.0 : 1.0;
        const auto y = combine(uL_, yl0, vL_, yl1);
        const auto yr0 =
            fold(detail::launch_to(interval, false, 0, lam_, prm_, smid));
        const auto yr1 =
            fold(detail::launch_to(interval, false, 1, lam_, prm_, smid));
        const double wr = wronskian_mod(yr0, yr1, prm_);
        if (wr == 0.0 || !std::isfinite(wr))
            throw SolverError("separated solution: right basis degenerated");
        uR_ = wronskian_mod(y, yr1, prm_) / wr;
        vR_ = wronskian_mod(yr0, y, prm_) / wr;
    } else {
        uR_ = parity == 0 ? 1.0 : 0.0;
        vR_ = parity == 0 ? 0.0 : 1.0;
        const auto y =
            fold(detail::launch_to(interval, false, parity, lam_, prm_, smid));
        uL_ = wronskian_mod(y, yl1, prm_) / wl;
        vL_ = wronskian_mod(yl0, y, prm_) / wl;
    }
}

SolutionState SeparatedSolution::basis_state(int q, double s) const {
    const auto& wv = bw_[q];
    const auto& dv = bdw_[q];
    double num_w = 0.0, num_d = 0.0, den = 0.0;
    double sign = 1.0;
    for (int k = 0; k <= kMidNodes; ++k, sign = -sign) {
        const double d = s - nodes_[k];
        if (d == 0.0) return {s, wv[k], dv[k]};
        double wt = sign / d;
        if (k == 0 || k == kMidNodes) wt *= 0.5;
        num_w += wt * wv[k];
        num_d += wt * dv[k];
        den += wt;
    }
    return {s, num_w / den, num_d / den};
}

SolutionState SeparatedSolution::mid_state(double s) const {
    return combine(uL_, basis_state(0, s), vL_, basis_state(1, s));
}

SolutionState SeparatedSolution::end_series_state(bool left, double s) const {
    const auto& s0 = left ? sL_[0] : sR_[0];
    const auto& s1 = left ? sL_[1] : sR_[1];
    const double u = left ? uL_ : uR_;
    const double v = left ? vL_ : vR_;
    return combine(u, eval_series(s0, s, prm_), v, eval_series(s1, s, prm_));
}

SolutionState SeparatedSolution::state(double s) const {
    const double span = c_ - b_;
    if (s < b_ - 1e-9 * span || s > c_ + 1e-9 * span)
        throw DomainError("separated solution: abscissa outside its interval");
    s = std::clamp(s, b_, c_);
    if (s - b_ <= 0.6 * trL_) return end_series_state(true, s);
    if (c_ - s <= 0.6 * trR_) return end_series_state(false, s);
    return mid_state(s);
}

double SeparatedSolution::hat(double s) const {
    const double span = c_ - b_;
    if (s < b_ - 1e-9 * span || s > c_ + 1e-9 * span)
        throw DomainError("separated solution: abscissa outside its interval");
    s = std::clamp(s, b_, c_);
    const double tl = s - b_;
    const double tr = c_ - s;
    if (tl <= 0.6 * trL_) {
        const double w0 = poly_part(sL_[0], tl);
        const double w1 = poly_part(sL_[1], tl);
        double num;
        if (al_ == 0.5) {
            num = vL_ * w1;
            // a residual even part under a declared half exponent genuinely
            // diverges at the end; let it
            if (uL_ != 0.0) num += uL_ * w0 / std::sqrt(tl);
        } else {
            num = uL_ * w0;
            if (vL_ != 0.0) num += vL_ * std::sqrt(tl) * w1;
        }
        return ar_ == 0.0 ? num : num / std::sqrt(tr);
    }
    if (tr <= 0.6 * trR_) {
        const double w0 = poly_part(sR_[0], -tr);
        const double w1 = poly_part(sR_[1], -tr);
        double num;
        if (ar_ == 0.5) {
            num = vR_ * w1;
            if (uR_ != 0.0) num += uR_ * w0 / std::sqrt(tr);
        } else {
            num = uR_ * w0;
            if (vR_ != 0.0) num += vR_ * std::sqrt(tr) * w1;
        }
        return al_ == 0.0 ? num : num / std::sqrt(tl);
    }
    double den = 1.0;
    if (al_ == 0.5) den *= std::sqrt(tl);
    if (ar_ == 0.5) den *= std::sqrt(tr);
    return mid_state(s).w / den;
}

void SeparatedSolution::snap_left(int parity) {
    if (parity != 0 && parity != 1)
        throw DomainError("snap: parity must be 0 or 1");
    (parity == 0 ? vL_ : uL_) = 0.0;
}

void SeparatedSolution::snap_right(int parity) {
    if (parity != 0 && parity != 1)
        throw DomainError("snap: parity must be 0 or 1");
    (parity == 0 ? vR_ : uR_) = 0.0;
}

void SeparatedSolution::rescale(double factor) {
    uL_ *= factor;
    vL_ *= factor;
    uR_ *= factor;
    vR_ *= factor;
}

struct HarmonicPair::Body {
    int kind = 0;
    EigenRecord rec;
    Params prm;
    SeparatedTriple tri;
    double band = 0.0;   // region guard tolerance handed to classify_region
    double d_norm = 0.0; // abscissa of the normalization surface
};

namespace {

// Sign attached to the external member. The exterior representation comes
// from a boundary integral whose surface normal points toward decreasing
// coordinate for kinds 2 and 3; folding that orientation into the harmonic
// keeps the bilinear point-source expansions positive with their natural
// constants.
constexpr double kExternalSign[4] = {0.0, 1.0, -1.0, -1.0};

SeparatedTriple assemble_triple(int kind, const EigenRecord& rec,
                                const Params& prm) {
    const LambdaPair lam = rec.lam;
    const auto& pb = rec.p.bits;
    SeparatedTriple t;
    t.e.reserve(3);
    if (kind == 1) {
        const int p1 = pb[0], p2 = pb[1], p3 = pb[2];
        t.e.emplace_back(1, lam, false, p1, 0.0, 0.5 * p1, prm);
        t.e.emplace_back(2, lam, true, p1, 0.5 * p1, 0.5 * p2, prm);
        t.e.back().snap_right(p2);
        t.e.emplace_back(3, lam, true, p2, 0.5 * p2, 0.5 * p3, prm);
        t.e.back().snap_right(p3);
        t.pp.emplace(1, lam, true, 0, 0.0, 0.5 * p1, prm);
        t.qq.emplace(1, lam, true, 1, 0.5, 0.5 * p1, prm);
        double q0 = 1.0;
        for (int i = 1; i < 4; ++i) q0 *= prm.a[0] - prm.a[i];
        t.qq->rescale(2.0 / std::sqrt(std::abs(q0)));
    } else if (kind == 2) {
        const int p0 = pb[0], p1 = pb[1], p2 = pb[2], p3 = pb[3];
        t.e.emplace_back(1, lam, true, p0, 0.5 * p0, 0.5 * p1, prm);
        t.e.back().snap_right(p1);
        t.e.emplace_back(2, lam, true, p1, 0.5 * p1, 0.5 * p2, prm);
        t.e.emplace_back(3, lam, true, p2, 0.5 * p2, 0.5 * p3, prm);
        t.e.back().snap_right(p3);
        t.f.emplace(2, lam, false, p2, 0.5 * p1, 0.5 * p2, prm);
        const double smid = 0.5 * (prm.a[1] + prm.a[2]);
        const double w =
            wronskian_mod(t.e[1].state(smid), t.f->state(smid), prm);
        if (w == 0.0 || !std::isfinite(w))
            throw SolverError(
                "harmonic assembly: middle partner is not independent");
        t.f->rescale(1.0 / w);
    } else {
        const int p0 = pb[0], p1 = pb[1], p2 = pb[2];
        t.e.emplace_back(1, lam, true, p0, 0.5 * p0, 0.5 * p1, prm);
        t.e.back().snap_right(p1);
        t.e.emplace_back(2, lam, true, p1, 0.5 * p1, 0.5 * p2, prm);
        t.e.back().snap_right(p2);
        t.e.emplace_back(3, lam, true, p2, 0.5 * p2, 0.0, prm);
        t.pp.emplace(3, lam, false, 0, 0.5 * p2, 0.0, prm);
        t.qq.emplace(3, lam, false, 1, 0.5 * p2, 0.5, prm);
        double q3 = 1.0;
        for (int i = 0; i < 3; ++i) q3 *= prm.a[3] - prm.a[i];
        t.qq->rescale(-2.0 / std::sqrt(std::abs(q3)));
    }
    if (kind != 2) {
        if (!rec.connection)
            throw SolverError("harmonic assembly: record lacks connection data");
        t.conn = *rec.connection;
        if (t.conn.a_coef == 0.0 || t.conn.b_coef == 0.0 ||
            !std::isfinite(t.conn.c_coef))
            throw SolverError(
                "harmonic assembly: degenerate endpoint connection");
    }
    return t;
}

// Abscissa for the normalization surface: the midpoint of the kind's
// defining interval unless the solution is nearly zero there, in which case
// step outward in 5 percent increments until clear of the node.
double normalization_abscissa(int kind, const Params& prm,
                              const std::function<double(double)>& efull) {
    const double lo = prm.a[kind - 1];
    const double hi = prm.a[kind];
    const double len = hi - lo;
    double emax = 0.0;
    for (int i = 0; i <= 64; ++i) {
        const double s = lo + len * (0.05 + 0.9 * i / 64.0);
        emax = std::max(emax, std::abs(efull(s)));
    }
    if (!(emax > 0.0) || !std::isfinite(emax))
        throw SolverError("normalization: solution magnitude not usable");
    for (int k = 0; k <= 8; ++k)
        for (double sgn : {1.0, -1.0}) {
            if (k == 0 && sgn < 0.0) continue;
            const double cand = lo + len * (0.5 + sgn * 0.05 * k);
            if (cand <= lo + 0.1 * len || cand >= hi - 0.1 * len) continue;
            if (std::abs(efull(cand)) >= 0.05 * emax) return cand;
        }
    throw SolverError("normalization: no abscissa clear of solution zeros");
}

} // namespace

int HarmonicPair::kind() const { return body_->kind; }
const EigenRecord& HarmonicPair::record() const { return body_->rec; }
const Params& HarmonicPair::params() const { return body_->prm; }
const SeparatedTriple& HarmonicPair::triple() const { return body_->tri; }
double HarmonicPair::norm_scale() const { return body_->rec.norm_scale; }
double HarmonicPair::norm_abscissa() const { return body_->d_norm; }

double HarmonicPair::internal_at(const Point3& r,
                                 const std::array<double, 3>& s) const {
    const auto& B = *body_;
    const auto& t = B.tri;
    const auto& pb = B.rec.p.bits;
    double val = 1.0 / std::sqrt(1.0 + norm2(r));
    if (B.kind == 1) {
        for (int j = 1; j <= 3; ++j)
            if (pb[j - 1]) val *= detail::chi_at(j, r, s, B.prm);
        val *= t.e[1].hat(s[1]) * t.e[2].hat(s[2]);
        if (norm2(r) <= 1.0) {
            val *= t.e[0].hat(s[0]);
        } else {
            const double chi0 = detail::chi_at(0, r, s, B.prm);
            val *= t.conn.a_coef * t.pp->hat(s[0]) +
                   t.conn.b_coef * chi0 * t.qq->hat(s[0]);
        }
    } else if (B.kind == 2) {
        for (int j = 0; j <= 3; ++j)
            if (pb[j]) val *= detail::chi_at(j, r, s, B.prm);
        val *= t.e[0].hat(s[0]) * t.e[1].hat(s[1]) * t.e[2].hat(s[2]);
    } else {
        for (int j = 0; j <= 2; ++j)
            if (pb[j]) val *= detail::chi_at(j, r, s, B.prm);
        val *= t.e[0].hat(s[0]) * t.e[1].hat(s[1]);
        if (r[2] >= 0.0) {
            val *= t.e[2].hat(s[2]);
        } else {
            const double chi3 = detail::chi_at(3, r, s, B.prm);
            val *= t.conn.a_coef * t.pp->hat(s[2]) +
                   t.conn.b_coef * chi3 * t.qq->hat(s[2]);
        }
    }
    return val;
}

double HarmonicPair::eval_internal(const Point3& r) const {
    const auto& B = *body_;
    const auto tags = classify_region(r, B.prm, B.band);
    if (B.kind == 1 && tags.M1)
        throw DomainError("kind 1 internal harmonic is singular on M1");
    if (B.kind == 2 && tags.L2)
        throw DomainError("kind 2 internal harmonic is singular on L2");
    if (B.kind == 3 && tags.M2)
        throw DomainError("kind 3 internal harmonic is singular on M2");
    const auto cyc = to_cyclidic(r, B.prm);
    return internal_at(r, cyc.s);
}

double HarmonicPair::eval_external(const Point3& r) const {
    const auto& B = *body_;
    const auto tags = classify_region(r, B.prm, B.band);
    if (B.kind == 1) {
        if (tags.K1)
            throw DomainError("kind 1 external harmonic is singular on K1");
        if (norm2(r) == 0.0)
            throw DomainError(
                "kind 1 external harmonic is singular at the origin");
        const Point3 ri = apply_symmetry(0, r);
        const auto cyc = to_cyclidic(ri, B.prm);
        return kExternalSign[1] * B.tri.conn.c_coef / norm(r) *
               internal_at(ri, cyc.s);
    }
    if (B.kind == 2) {
        if (tags.L1)
            throw DomainError("kind 2 external harmonic is singular on L1");
        const auto& t = B.tri;
        const auto& pb = B.rec.p.bits;
        const auto cyc = to_cyclidic(r, B.prm);
        double val = 1.0 / std::sqrt(1.0 + norm2(r));
        for (int j = 0; j <= 3; ++j)
            if (pb[j]) val *= detail::chi_at(j, r, cyc.s, B.prm);
        val *= t.e[0].hat(cyc.s[0]) * t.f->hat(cyc.s[1]) *
               t.e[2].hat(cyc.s[2]);
        return kExternalSign[2] * val;
    }
    if (tags.K2)
        throw DomainError("kind 3 external harmonic is singular on K2");
    const Point3 rm = apply_symmetry(3, r);
    const auto cyc = to_cyclidic(rm, B.prm);
    return kExternalSign[3] * B.tri.conn.c_coef * internal_at(rm, cyc.s);
}

double HarmonicPair::eval_building_block(char which, const Point3& r) const {
    const auto& B = *body_;
    if (B.kind == 2)
        throw DomainError("building blocks exist for kinds 1 and 3 only");
    if (which != 'I' && which != 'J')
        throw DomainError("building block selector must be 'I' or 'J'");
    const auto tags = classify_region(r, B.prm, B.band);
    if (B.kind == 1 && (tags.K1 || tags.M1))
        throw DomainError("kind 1 building blocks are singular on K1 and M1");
    if (B.kind == 3 && (tags.K2 || tags.M2))
        throw DomainError("kind 3 building blocks are singular on K2 and M2");
    const auto cyc = to_cyclidic(r, B.prm);
    const auto& t = B.tri;
    const auto& pb = B.rec.p.bits;
    double val = 1.0 / std::sqrt(1.0 + norm2(r));
    if (B.kind == 1) {
        for (int j = 1; j <= 3; ++j)
            if (pb[j - 1]) val *= detail::chi_at(j, r, cyc.s, B.prm);
        const double core =
            which == 'I'
                ? t.pp->hat(cyc.s[0])
                : detail::chi_at(0, r, cyc.s, B.prm) * t.qq->hat(cyc.s[0]);
        val *= core * t.e[1].hat(cyc.s[1]) * t.e[2].hat(cyc.s[2]);
    } else {
        for (int j = 0; j <= 2; ++j)
            if (pb[j]) val *= detail::chi_at(j, r, cyc.s, B.prm);
        const double core =
            which == 'I'
                ? t.pp->hat(cyc.s[2])
                : detail::chi_at(3, r, cyc.s, B.prm) * t.qq->hat(cyc.s[2]);
        val *= t.e[0].hat(cyc.s[0]) * t.e[1].hat(cyc.s[1]) * core;
    }
    return val;
}

double HarmonicPair::axis_hat(int interval, double s, int chi_sign) const {
    const auto& B = *body_;
    if (interval < 1 || interval > 3)
        throw DomainError("axis_hat: interval must be 1..3");
    const auto& t = B.tri;
    if (B.kind == 1 && interval == 1) {
        const double root = std::sqrt(std::max(0.0, s - B.prm.a[0]));
        return t.conn.a_coef * t.pp->hat(s) +
               chi_sign * t.conn.b_coef * root * t.qq->hat(s);
    }
    if (B.kind == 3 && interval == 3) {
        const double root = std::sqrt(std::max(0.0, B.prm.a[3] - s));
        return t.conn.a_coef * t.pp->hat(s) +
               chi_sign * t.conn.b_coef * root * t.qq->hat(s);
    }
    return t.e[interval - 1].hat(s);
}

double HarmonicPair::axis_value(int interval, double s, int chi_sign) const {
    const auto& B = *body_;
    if (interval < 1 || interval > 3)
        throw DomainError("axis_value: interval must be 1..3");
    const auto& t = B.tri;
    if ((B.kind == 1 && interval == 1) || (B.kind == 3 && interval == 3)) {
        return t.conn.a_coef * t.pp->value(s) +
               chi_sign * t.conn.b_coef * t.qq->value(s);
    }
    return t.e[interval - 1].value(s);
}

HarmonicPair build_harmonic(int kind, const MultiIndex& n,
                            const ParityVector& p, const Params& params,
                            Catalog& cat, int quad_order) {
    Params prm = params;
    prm.validate();
    if (kind < 1 || kind > 3)
        throw DomainError("build_harmonic: kind must be 1..3");
    if (p.kind != kind)
        throw DomainError("build_harmonic: parity vector kind mismatch");
    p.validate();
    if (n.n1 < 0 || n.n2 < 0)
        throw DomainError("build_harmonic: orders must be nonnegative");
    if (quad_order < 8)
        throw DomainError("build_harmonic: quadrature order must be at least 8");
    if (cat.records.empty()) {
        cat.params = prm;
    } else {
        for (int i = 0; i < 4; ++i)
            if (cat.params.a[i] != prm.a[i])
                throw DomainError(
                    "build_harmonic: catalog holds a different singularity set");
    }

    const CatalogKey key{kind, n.n1, n.n2, pack_parity(p)};
    auto it = cat.records.find(key);
    if (it == cat.records.end()) {
        EigenRecord fresh = solve_eigen(kind, n, p, prm);
        it = cat.records.emplace(key, std::move(fresh)).first;
    }
    EigenRecord& rec = it->second;

    auto body = std::make_shared<HarmonicPair::Body>();
    body->kind = kind;
    body->prm = prm;
    body->band = 1e-8 * prm.span();
    body->rec = rec;
    body->tri = assemble_triple(kind, rec, prm);

    {
        const auto& t = body->tri;
        auto efull = [&](double s) {
            if (kind == 2) return t.e[1].value(s);
            return t.conn.a_coef * t.pp->value(s) +
                   t.conn.b_coef * t.qq->value(s);
        };
        body->d_norm = normalization_abscissa(kind, prm, efull);
    }

    double kappa = rec.norm_scale;
    if (!(kappa > 0.0)) {
        HarmonicPair raw;
        raw.body_ = body;
        const auto& quad = shared_quadrature(kind, body->d_norm, quad_order, prm);
        const double val = coefficient_functional(raw, raw, quad, false);
        if (!std::isfinite(val) || val <= 0.0)
            throw SolverError("build_harmonic: normalization integral is not "
                              "positive");
        kappa = 1.0 / std::sqrt(val);
        rec.norm_scale = kappa;
    }
    body->rec.norm_scale = kappa;
    body->tri.e[kind == 1 ? 1 : 0].rescale(kappa);

    HarmonicPair out;
    out.body_ = std::move(body);
    return out;
}

double eval_internal(const HarmonicPair& pair, const Point3& r) {
    return pair.eval_internal(r);
}

double eval_external(const HarmonicPair& pair, const Point3& r) {
    return pair.eval_external(r);
}

double eval_building_block(const HarmonicPair& pair, char which,
                           const Point3& r) {
    return pair.eval_building_block(which, r);
}

double kelvin(const std::function<double(const Point3&)>& field,
              const Point3& r) {
    const double rn = norm(r);
    if (rn == 0.0)
        throw DomainError("kelvin: the inversion center is excluded");
    return field(apply_symmetry(0, r)) / rn;
}

const EigenRecord& ensure_record(Catalog& cat, int kind, const MultiIndex& n,
                                 const ParityVector& p) {
    build_harmonic(kind, n, p, cat.params, cat);
    const EigenRecord* rec = cat.find(kind, n, p);
    if (!rec)
        throw SolverError("ensure_record: record failed to materialize");
    return *rec;
}

Catalog enumerate_eigen(int kind, int max_order, const Params& params) {
    if (kind < 1 || kind > 3)
        throw DomainError("enumerate_eigen: kind must be 1..3");
    if (max_order < 0)
        throw DomainError("enumerate_eigen: max_order must be nonnegative");
    Catalog cat;
    cat.params = params;
    cat.params.validate();
    const int nbits = kind == 2 ? 16 : 8;
    for (int total = 0; total <= max_order; ++total)
        for (int n1 = 0; n1 <= total; ++n1) {
            const MultiIndex n{n1, total - n1};
            for (int pbits = 0; pbits < nbits; ++pbits)
                ensure_record(cat, kind, n, unpack_parity(kind, pbits));
        }
    return cat;
}

} // namespace cyclharm
