#include "cyclharm/expansion.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <memory>
#include <mutex>

#include "cyclharm/errors.hpp"
#include "cyclharm/fuchsian.hpp"
#include "cyclharm/geometry.hpp"

namespace cyclharm {

namespace {

struct Kahan {
    double sum = 0.0, c = 0.0;
    void add(double x) {
        const double y = x - c;
        const double t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
};

// Gauss-Legendre rule mapped to (0,1)
void gauss_legendre_01(int n, std::vector<double>& x, std::vector<double>& w) {
    x.assign(n, 0.0);
    w.assign(n, 0.0);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
            }
            pp = n * (z * p0 - p1) / (z * z - 1.0);
            const double dz = p0 / pp;
            z -= dz;
            if (std::abs(dz) < 1e-15) break;
        }
        x[i] = 0.5 * (1.0 - z);
        x[n - 1 - i] = 0.5 * (1.0 + z);
        w[i] = w[n - 1 - i] = 1.0 / ((1.0 - z * z) * pp * pp);
    }
}

// tensor factors of one harmonic on one surface
struct GTables {
    std::vector<double> t1, t2;
    double core = 0.0;
    std::array<int, 4> slots{};
    std::array<int, 4> pbits{};
    int nslots = 0;
};

GTables make_tables(const HarmonicPair& pair, const SurfaceQuadrature& q) {
    GTables g;
    const int kind = pair.kind();
    const auto& ab1 = q.free_abscissae(0);
    const auto& ab2 = q.free_abscissae(1);
    g.t1.resize(ab1.size());
    g.t2.resize(ab2.size());
    for (std::size_t i = 0; i < ab1.size(); ++i)
        g.t1[i] = pair.axis_hat(q.free_axis(0), ab1[i]);
    for (std::size_t i = 0; i < ab2.size(); ++i)
        g.t2[i] = pair.axis_hat(q.free_axis(1), ab2[i]);
    g.core = pair.axis_hat(kind, q.d());
    if (kind == 1) {
        g.slots = {1, 2, 3, 0};
        g.nslots = 3;
    } else if (kind == 2) {
        g.slots = {0, 1, 2, 3};
        g.nslots = 4;
    } else {
        g.slots = {0, 1, 2, 0};
        g.nslots = 3;
    }
    g.pbits = pair.record().p.bits;
    return g;
}

double gval(const GTables& g, const SurfaceNode& nd) {
    double v = nd.pref * g.core * g.t1[nd.i1] * g.t2[nd.i2];
    for (int k = 0; k < g.nslots; ++k)
        if (g.pbits[k]) v *= nd.chi[g.slots[k]];
    return v;
}

void require_compatible(const HarmonicPair& pair, const SurfaceQuadrature& q) {
    if (pair.kind() != q.kind())
        throw DomainError(
            "surface quadrature kind does not match the harmonic");
    for (int i = 0; i < 4; ++i)
        if (pair.params().a[i] != q.params().a[i])
            throw DomainError(
                "surface quadrature and harmonic use different singularities");
}

double functional_denominator(const HarmonicPair& pair,
                              const SurfaceQuadrature& q, double ck) {
    const double om = wronskian_weight(q.d(), q.params());
    const double e = pair.axis_value(pair.kind(), q.d());
    if (e == 0.0 || !std::isfinite(e))
        throw SolverError(
            "coefficient functional: surface abscissa sits on a node of the "
            "interval solution");
    return ck * om * e * e;
}

double functional_pair_on(const HarmonicPair& pair, const HarmonicPair& f_pair,
                          const SurfaceQuadrature& q) {
    const GTables gp = make_tables(pair, q);
    const GTables gf = make_tables(f_pair, q);
    Kahan acc;
    for (const auto& nd : q.nodes())
        acc.add(gval(gp, nd) * gval(gf, nd) / nd.h_fixed * nd.weight);
    const double ck = pair.kind() == 2 ? 4.0 : 2.0;
    return acc.sum / functional_denominator(pair, q, ck);
}

double functional_fn_on(const HarmonicPair& pair,
                        const std::function<double(const Point3&)>& f,
                        const SurfaceQuadrature& q) {
    const GTables gp = make_tables(pair, q);
    Kahan acc;
    for (const auto& nd : q.nodes())
        acc.add(gval(gp, nd) * f(nd.r) / nd.h_fixed * nd.weight);
    const double ck = pair.kind() == 2 ? 4.0 : 2.0;
    return acc.sum / functional_denominator(pair, q, ck);
}

} // namespace

SurfaceQuadrature::SurfaceQuadrature(int kind, double d, int order,
                                     const Params& params)
    : kind_(kind), order_(order), d_(d), prm_(params) {
    prm_.validate();
    if (kind < 1 || kind > 3)
        throw DomainError("surface quadrature: kind must be 1..3");
    if (order < 8)
        throw DomainError("surface quadrature: order must be at least 8");
    if (!(d > prm_.a[kind - 1] && d < prm_.a[kind]))
        throw DomainError(
            "surface quadrature: d must be interior to the kind's interval");
    free_[0] = kind == 1 ? 2 : 1;
    free_[1] = kind == 3 ? 2 : 3;

    std::vector<double> gx, gw;
    gauss_legendre_01(order, gx, gw);
    for (int which = 0; which < 2; ++which) {
        const double lo = prm_.a[free_[which] - 1];
        const double hi = prm_.a[free_[which]];
        s1d_[which].resize(order);
        for (int i = 0; i < order; ++i) {
            const double sn = std::sin(0.5 * M_PI * gx[i]);
            s1d_[which][i] = lo + (hi - lo) * sn * sn;
        }
    }

    std::vector<OctantFlags> flag_list;
    if (kind == 1) {
        for (int sx : {+1, -1})
            for (int sy : {+1, -1})
                for (int sz : {+1, -1})
                    flag_list.push_back({sx, sy, sz, true});
    } else if (kind == 2) {
        for (int sx : {+1, -1})
            for (int sy : {+1, -1})
                for (int sz : {+1, -1})
                    for (bool ins : {true, false})
                        flag_list.push_back({sx, sy, sz, ins});
    } else {
        for (int sx : {+1, -1})
            for (int sy : {+1, -1})
                for (bool ins : {true, false})
                    flag_list.push_back({sx, sy, +1, ins});
    }

    nodes_.reserve(flag_list.size() * order * order);
    patches_.reserve(flag_list.size());
    for (const auto& fl : flag_list) {
        patches_.push_back({fl, nodes_.size()});
        for (int i1 = 0; i1 < order; ++i1)
            for (int i2 = 0; i2 < order; ++i2) {
                const auto cp =
                    surface_chart(kind, d, gx[i1], gx[i2], fl, prm_);
                SurfaceNode nd;
                nd.r = cp.p;
                nd.s[kind - 1] = d;
                nd.s[free_[0] - 1] = s1d_[0][i1];
                nd.s[free_[1] - 1] = s1d_[1][i2];
                nd.i1 = i1;
                nd.i2 = i2;
                for (int j = 0; j < 4; ++j)
                    nd.chi[j] = detail::chi_at(j, nd.r, nd.s, prm_);
                nd.pref = 1.0 / std::sqrt(1.0 + norm2(nd.r));
                nd.h_fixed = detail::scale_factor_at(kind, nd.r, nd.s, prm_);
                nd.weight = cp.area_element * gw[i1] * gw[i2];
                nodes_.push_back(nd);
            }
    }
}

double SurfaceQuadrature::integrate(
    const std::function<double(const SurfaceNode&)>& fn) const {
    Kahan acc;
    for (const auto& nd : nodes_) acc.add(fn(nd) * nd.weight);
    return acc.sum;
}

const SurfaceQuadrature& shared_quadrature(int kind, double d, int order,
                                           const Params& params) {
    static std::mutex mu;
    // leaked deliberately so harmonics built at static scope stay usable
    static auto* cache =
        new std::map<std::string, std::unique_ptr<SurfaceQuadrature>>;
    char key[200];
    std::snprintf(key, sizeof key, "%d|%d|%a|%a|%a|%a|%a", kind, order, d,
                  params.a[0], params.a[1], params.a[2], params.a[3]);
    std::scoped_lock lk(mu);
    auto& slot = (*cache)[key];
    if (!slot)
        slot = std::make_unique<SurfaceQuadrature>(kind, d, order, params);
    return *slot;
}

double coefficient_functional(const HarmonicPair& pair,
                              const HarmonicPair& f_pair,
                              const SurfaceQuadrature& quad,
                              bool check_convergence) {
    require_compatible(pair, quad);
    require_compatible(f_pair, quad);
    const double v1 = functional_pair_on(pair, f_pair, quad);
    if (check_convergence) {
        const auto& q2 = shared_quadrature(quad.kind(), quad.d(),
                                           2 * quad.order(), quad.params());
        const double v2 = functional_pair_on(pair, f_pair, q2);
        if (std::abs(v2 - v1) > 1e-7 * (1.0 + std::abs(v1)))
            throw SolverError(
                "coefficient functional: quadrature did not converge");
    }
    return v1;
}

double coefficient_functional(const HarmonicPair& pair,
                              const std::function<double(const Point3&)>& f,
                              const SurfaceQuadrature& quad,
                              bool check_convergence) {
    require_compatible(pair, quad);
    const double v1 = functional_fn_on(pair, f, quad);
    if (check_convergence) {
        const auto& q2 = shared_quadrature(quad.kind(), quad.d(),
                                           2 * quad.order(), quad.params());
        const double v2 = functional_fn_on(pair, f, q2);
        if (std::abs(v2 - v1) > 1e-7 * (1.0 + std::abs(v1)))
            throw SolverError(
                "coefficient functional: quadrature did not converge");
    }
    return v1;
}

double external_via_integral(const HarmonicPair& pair, const Point3& r_prime,
                             const SurfaceQuadrature& quad) {
    require_compatible(pair, quad);
    const auto& prm = quad.params();
    const int kind = pair.kind();
    const double d = quad.d();
    const auto cyc = to_cyclidic(r_prime, prm);
    bool outside = false;
    if (kind == 1)
        outside = !(norm2(r_prime) <= 1.0 && cyc.s[0] >= d);
    else if (kind == 2)
        outside = cyc.s[1] > d;
    else
        outside = !(r_prime[2] >= 0.0 && cyc.s[2] <= d);
    if (!outside)
        throw DomainError("external_via_integral: r' must lie strictly "
                          "outside the closed enclosed domain");

    const GTables gp = make_tables(pair, quad);
    Kahan acc;
    for (const auto& nd : quad.nodes())
        acc.add(gval(gp, nd) / (nd.h_fixed * dist(nd.r, r_prime)) * nd.weight);
    const double om = wronskian_weight(d, prm);
    const double e = pair.axis_value(kind, d);
    if (e == 0.0 || !std::isfinite(e))
        throw SolverError("external_via_integral: surface abscissa sits on a "
                          "node of the interval solution");
    return acc.sum / (4.0 * M_PI * om * e * e);
}

CaseLabel applicable_case(int kind, const Point3& r, const Point3& r_prime,
                          const Params& params) {
    Params prm = params;
    prm.validate();
    if (kind < 1 || kind > 3)
        throw DomainError("applicable_case: kind must be 1..3");
    const auto s = to_cyclidic(r, prm).s;
    const auto sp = to_cyclidic(r_prime, prm).s;
    if (kind == 2)
        return s[1] < sp[1] ? CaseLabel::A : CaseLabel::inapplicable;
    if (kind == 1) {
        const double rn = norm2(r);
        const double rpn = norm2(r_prime);
        if (rn < 1.0 && rpn < 1.0 && s[0] > sp[0]) return CaseLabel::A;
        if (rn < 1.0 && rpn > 1.0) return CaseLabel::B;
        if (rn > 1.0 && rpn > 1.0 && s[0] < sp[0]) return CaseLabel::C;
        return CaseLabel::inapplicable;
    }
    const double z = r[2];
    const double zp = r_prime[2];
    if (z >= 0.0 && zp >= 0.0 && s[2] < sp[2]) return CaseLabel::A;
    if (z > 0.0 && zp < 0.0) return CaseLabel::B;
    if (z <= 0.0 && zp <= 0.0 && sp[2] < s[2]) return CaseLabel::C;
    return CaseLabel::inapplicable;
}

std::string to_csv(const ConvergenceReport& report) {
    std::string out = "order,terms,partial_sum,abs_err,rel_err\n";
    char line[192];
    for (const auto& row : report.rows) {
        std::snprintf(line, sizeof line, "%d,%ld,%.17g,%.17g,%.17g\n",
                      row.order, row.terms, row.partial_sum, row.abs_err,
                      row.rel_err);
        out += line;
    }
    return out;
}

ConvergenceReport reciprocal_expansion(int kind, const Point3& r,
                                       const Point3& r_prime, int max_order,
                                       Catalog& catalog, int quad_order) {
    if (kind < 1 || kind > 3)
        throw DomainError("reciprocal_expansion: kind must be 1..3");
    if (max_order < 0)
        throw DomainError("reciprocal_expansion: max_order must be nonnegative");
    Params prm = catalog.params;
    prm.validate();
    const double sep = dist(r, r_prime);
    if (sep == 0.0)
        throw DomainError("reciprocal_expansion: the points coincide");

    Point3 x = r, xp = r_prime;
    CaseLabel lab = applicable_case(kind, x, xp, prm);
    bool swapped = false;
    if (lab == CaseLabel::inapplicable) {
        lab = applicable_case(kind, xp, x, prm);
        if (lab != CaseLabel::inapplicable) {
            std::swap(x, xp);
            swapped = true;
        }
    }
    if (lab == CaseLabel::inapplicable)
        throw DomainError(
            "reciprocal_expansion: the pair fits no validity case of this kind");

    ConvergenceReport rep;
    rep.kind = kind;
    rep.label = lab;
    rep.swapped = swapped;
    rep.target = 1.0 / sep;
    const double cpref = kind == 2 ? M_PI : 2.0 * M_PI;
    const int nbits = kind == 2 ? 16 : 8;
    Kahan acc;
    long terms = 0;
    for (int total = 0; total <= max_order; ++total) {
        for (int n1 = 0; n1 <= total; ++n1) {
            const MultiIndex n{n1, total - n1};
            for (int pb = 0; pb < nbits; ++pb) {
                const auto pair = build_harmonic(
                    kind, n, unpack_parity(kind, pb), prm, catalog, quad_order);
                acc.add(cpref * pair.eval_internal(x) * pair.eval_external(xp));
                ++terms;
            }
        }
        ConvergenceRow row;
        row.order = total;
        row.terms = terms;
        row.partial_sum = acc.sum;
        row.abs_err = std::abs(acc.sum - rep.target);
        row.rel_err = row.abs_err / rep.target;
        rep.rows.push_back(row);
    }
    return rep;
}

ConvergenceReport spherical_expansion(const Point3& r, const Point3& r_prime,
                                      int max_order) {
    if (max_order < 0)
        throw DomainError("spherical_expansion: max_order must be nonnegative");
    Point3 x = r, xp = r_prime;
    bool swapped = false;
    if (norm(x) > norm(xp)) {
        std::swap(x, xp);
        swapped = true;
    }
    const double rn = norm(x);
    const double rpn = norm(xp);
    if (rn == rpn)
        throw DomainError("spherical_expansion: the radii must differ");

    const double ct = rn > 0.0 ? x[2] / rn : 1.0;
    const double ctp = xp[2] / rpn;
    const double dphi = (rn > 0.0 ? std::atan2(x[1], x[0]) : 0.0) -
                        std::atan2(xp[1], xp[0]);

    ConvergenceReport rep;
    rep.kind = 0;
    rep.label = CaseLabel::A;
    rep.swapped = swapped;
    rep.target = 1.0 / dist(x, xp);
    Kahan acc;
    long terms = 0;
    double rl = 1.0;         // rn^l
    double rpl = 1.0 / rpn;  // rpn^-(l+1)
    for (int l = 0; l <= max_order; ++l) {
        double ang = ferrers_p(l, 0, ct) * ferrers_p(l, 0, ctp);
        double ratio = 1.0; // (l-m)! / (l+m)!
        for (int m = 1; m <= l; ++m) {
            ratio /= (l + m) * (l - m + 1.0);
            ang += 2.0 * ratio * ferrers_p(l, m, ct) * ferrers_p(l, m, ctp) *
                   std::cos(m * dphi);
        }
        const double term = rl * rpl * ang;
        if (!std::isfinite(term))
            throw SolverError("spherical_expansion: term overflow; reduce the "
                              "maximum degree");
        acc.add(term);
        terms += 2 * l + 1;
        ConvergenceRow row;
        row.order = l;
        row.terms = terms;
        row.partial_sum = acc.sum;
        row.abs_err = std::abs(acc.sum - rep.target);
        row.rel_err = row.abs_err / rep.target;
        rep.rows.push_back(row);
        rl *= rn;
        rpl /= rpn;
    }
    return rep;
}

double ferrers_p(int l, int m, double x) {
    if (l < 0) throw DomainError("ferrers_p: l must be nonnegative");
    if (std::abs(x) > 1.0)
        throw DomainError("ferrers_p: x must lie in [-1,1]");
    const int am = std::abs(m);
    if (am > l) return 0.0;
    double scale = 1.0;
    if (m < 0) {
        for (int k = l - am + 1; k <= l + am; ++k) scale /= k;
        if (am % 2) scale = -scale;
    }
    double pmm = 1.0;
    const double somx2 = std::sqrt((1.0 - x) * (1.0 + x));
    double fact = 1.0;
    for (int i = 0; i < am; ++i) {
        pmm *= -fact * somx2;
        fact += 2.0;
    }
    if (l == am) return scale * pmm;
    double pmmp1 = x * (2.0 * am + 1.0) * pmm;
    if (l == am + 1) return scale * pmmp1;
    double pll = 0.0;
    for (int ll = am + 2; ll <= l; ++ll) {
        pll = (x * (2.0 * ll - 1.0) * pmmp1 - (ll + am - 1.0) * pmm) /
              (ll - am);
        pmm = pmmp1;
        pmmp1 = pll;
    }
    return scale * pll;
}

} // namespace cyclharm
