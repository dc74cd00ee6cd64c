#include "cyclharm/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cyclharm {

namespace {

constexpr double kPi = 3.14159265358979323846;

int sgn(double v) { return (v > 0.0) - (v < 0.0); }

// Coefficients (constant term first) of the cleared cubic
//   P(s) = sum_j w_j prod_{k!=j}(s - a_k),
// w = ((|r|^2-1)^2, 4x^2, 4y^2, 4z^2). Its leading coefficient is
// (|r|^2+1)^2 >= 1 and its roots interlace the a_j.
std::array<double, 4> cubic_coeffs(const Point3& p, const Params& prm) {
    const double r2 = norm2(p);
    const std::array<double, 4> w{(r2 - 1.0) * (r2 - 1.0), 4.0 * p[0] * p[0],
                                  4.0 * p[1] * p[1], 4.0 * p[2] * p[2]};
    std::array<double, 4> c{0.0, 0.0, 0.0, 0.0};
    for (int j = 0; j < 4; ++j) {
        double r[3];
        int m = 0;
        for (int k = 0; k < 4; ++k)
            if (k != j) r[m++] = prm.a[k];
        const double e1 = r[0] + r[1] + r[2];
        const double e2 = r[0] * r[1] + r[0] * r[2] + r[1] * r[2];
        const double e3 = r[0] * r[1] * r[2];
        c[3] += w[j];
        c[2] -= w[j] * e1;
        c[1] += w[j] * e2;
        c[0] -= w[j] * e3;
    }
    return c;
}

} // namespace

double g1(double y, double z, const Params& prm) {
    const auto& a = prm.a;
    const double w = y * y + z * z - 1.0;
    return w * w / (a[1] - a[0]) + 4.0 * y * y / (a[1] - a[2]) +
           4.0 * z * z / (a[1] - a[3]);
}

double g2(double x, double z, const Params& prm) {
    const auto& a = prm.a;
    const double w = x * x + z * z - 1.0;
    return w * w / (a[2] - a[0]) + 4.0 * x * x / (a[2] - a[1]) +
           4.0 * z * z / (a[2] - a[3]);
}

CyclidicCoords to_cyclidic(const Point3& p, const Params& prm) {
    prm.validate();
    const auto c = cubic_coeffs(p, prm);
    const double b = c[2] / c[3];
    const double c1 = c[1] / c[3];
    const double c0 = c[0] / c[3];
    // depressed form t^3 + pp*t + qq with s = t + shift
    const double shift = -b / 3.0;
    const double pp = c1 - b * b / 3.0;
    const double qq = c0 + b * (2.0 * b * b - 9.0 * c1) / 27.0;
    std::array<double, 3> s{};
    if (pp >= 0.0) {
        // interlacing forces pp < 0; only a fully collapsed root triple (not
        // attainable for strictly increasing a) or roundoff lands here
        s = {shift, shift, shift};
    } else {
        const double m = 2.0 * std::sqrt(-pp / 3.0);
        const double arg = std::clamp(-4.0 * qq / (m * m * m), -1.0, 1.0);
        const double phi = std::acos(arg) / 3.0;
        for (int k = 0; k < 3; ++k)
            s[k] = shift + m * std::cos(phi - 2.0 * kPi * k / 3.0);
        std::sort(s.begin(), s.end());
    }
    // two safeguarded Newton passes on the original cubic
    for (int k = 0; k < 3; ++k) {
        for (int it = 0; it < 2; ++it) {
            const double x = s[k];
            const double f = ((c[3] * x + c[2]) * x + c[1]) * x + c[0];
            const double df = (3.0 * c[3] * x + 2.0 * c[2]) * x + c[1];
            if (df == 0.0) break;
            const double xn = x - f / df;
            const double fn = ((c[3] * xn + c[2]) * xn + c[1]) * xn + c[0];
            if (std::abs(fn) <= std::abs(f))
                s[k] = xn;
            else
                break;
        }
    }
    std::sort(s.begin(), s.end());
    const double snap = 1e-12 * prm.span();
    CyclidicCoords out;
    for (int i = 0; i < 3; ++i) {
        const double lo = prm.a[i];
        const double hi = prm.a[i + 1];
        double v = s[i];
        if (std::abs(v - lo) < snap) v = lo;
        if (std::abs(v - hi) < snap) v = hi;
        out.s[i] = std::clamp(v, lo, hi);
    }
    return out;
}

namespace detail {

std::array<double, 4> quadruple(const CyclidicCoords& c, const Params& prm) {
    std::array<double, 4> x2{};
    for (int j = 0; j < 4; ++j) {
        double num = 1.0;
        double den = 1.0;
        for (int i = 0; i < 3; ++i) num *= c.s[i] - prm.a[j];
        for (int k = 0; k < 4; ++k)
            if (k != j) den *= prm.a[k] - prm.a[j];
        x2[j] = std::max(0.0, num / den);
    }
    return x2;
}

double scale_factor_at(int i, const Point3& p, const std::array<double, 3>& s,
                       const Params& prm) {
    if (i < 1 || i > 3) throw DomainError("scale_factor: i must be 1..3");
    const double r2 = norm2(p);
    const std::array<double, 4> X{r2 - 1.0, 2.0 * p[0], 2.0 * p[1], 2.0 * p[2]};
    double q = 0.0;
    for (int j = 0; j < 4; ++j) {
        const double d = s[i - 1] - prm.a[j];
        if (d == 0.0) return std::numeric_limits<double>::infinity();
        const double t = X[j] / d;
        q += t * t;
    }
    // q = 16 h^2; it vanishes exactly where adjacent coordinates collide and
    // the coordinate system folds
    if (q < 1e-28)
        throw DomainError("scale_factor: coordinate degenerate at this point");
    return std::sqrt(q) / 4.0;
}

} // namespace detail

Point3 from_cyclidic(const CyclidicCoords& c, const OctantFlags& f,
                     const Params& prm) {
    prm.validate();
    for (int i = 0; i < 3; ++i) {
        if (!(c.s[i] >= prm.a[i] && c.s[i] <= prm.a[i + 1]))
            throw DomainError(
                "from_cyclidic: coordinates must interlace the singularities");
    }
    // (a1,a2,a3) is the image of both the origin and the point at infinity;
    // by convention every flag combination maps it back to the origin
    if (c.s[0] == prm.a[1] && c.s[1] == prm.a[2] && c.s[2] == prm.a[3])
        return {0.0, 0.0, 0.0};
    const auto x2 = detail::quadruple(c, prm);
    const double x0 = std::sqrt(x2[0]);
    const double den = f.inside ? 1.0 + x0 : 1.0 - x0;
    if (den == 0.0) throw DomainError("from_cyclidic: preimage at infinity");
    Point3 p{std::sqrt(x2[1]) / den, std::sqrt(x2[2]) / den,
             std::sqrt(x2[3]) / den};
    if (f.sign_x < 0) p[0] = -p[0];
    if (f.sign_y < 0) p[1] = -p[1];
    if (f.sign_z < 0) p[2] = -p[2];
    return p;
}

Point3 apply_symmetry(int j, const Point3& p) {
    if (j == 0) {
        const double r2 = norm2(p);
        if (r2 == 0.0)
            throw DomainError("apply_symmetry: inversion undefined at the origin");
        return {p[0] / r2, p[1] / r2, p[2] / r2};
    }
    if (j < 1 || j > 3) throw DomainError("apply_symmetry: j must be 0..3");
    Point3 q = p;
    q[j - 1] = -q[j - 1];
    return q;
}

double chi(int j, const Point3& p, const Params& prm) {
    prm.validate();
    const auto c = to_cyclidic(p, prm);
    return detail::chi_at(j, p, c.s, prm);
}

double detail::chi_at(int j, const Point3& p, const std::array<double, 3>& s,
                      const Params& prm) {
    const auto& a = prm.a;
    switch (j) {
        case 0:
            return sgn(1.0 - norm(p)) * std::sqrt(std::max(0.0, s[0] - a[0]));
        case 1:
            return sgn(p[0]) *
                   std::sqrt(std::max(0.0, (s[1] - a[1]) * (a[1] - s[0])));
        case 2:
            return sgn(p[1]) *
                   std::sqrt(std::max(0.0, (s[2] - a[2]) * (a[2] - s[1])));
        case 3:
            return sgn(p[2]) * std::sqrt(std::max(0.0, a[3] - s[2]));
        default:
            throw DomainError("chi: j must be 0..3");
    }
}

double scale_factor(int i, const Point3& p, const Params& prm) {
    prm.validate();
    const auto c = to_cyclidic(p, prm);
    return detail::scale_factor_at(i, p, c.s, prm);
}

RegionTags classify_region(const Point3& p, const Params& prm, double tol) {
    prm.validate();
    if (tol < 0.0) tol = 1e-9 * prm.span();
    RegionTags t;
    const double r2 = norm2(p);
    const double rr = std::sqrt(r2);
    t.on_plane_x = std::abs(p[0]) <= tol;
    t.on_plane_y = std::abs(p[1]) <= tol;
    t.on_plane_z = std::abs(p[2]) <= tol;
    t.on_unit_sphere = std::abs(rr - 1.0) <= tol;
    t.R = p[0] > tol && p[1] > tol && p[2] > tol && rr < 1.0 - tol;
    // residuals of g1, g2 scale like the cleared cubic's leading coefficient
    const double tolg = tol * (1.0 + r2) * (1.0 + r2);
    if (t.on_plane_x) {
        const double g = g1(p[1], p[2], prm);
        t.A1 = std::abs(g) <= tolg;
        t.L1 = g <= tolg;
        t.K1 = rr < 1.0 - tol && g >= -tolg;
        t.M1 = rr > 1.0 + tol && g >= -tolg;
    }
    if (t.on_plane_y) {
        const double g = g2(p[0], p[2], prm);
        t.A2 = std::abs(g) <= tolg;
        t.L2 = g >= -tolg;
        t.K2 = p[2] > tol && g <= tolg;
        t.M2 = p[2] < -tol && g <= tolg;
    }
    return t;
}

ChartPoint surface_chart(int i, double d, double u, double v,
                         const OctantFlags& f, const Params& prm) {
    prm.validate();
    if (i < 1 || i > 3) throw DomainError("surface_chart: i must be 1..3");
    if (!(d > prm.a[i - 1] && d < prm.a[i]))
        throw DomainError("surface_chart: d must lie strictly inside interval i");
    if (!(u >= 0.0 && u <= 1.0) || !(v >= 0.0 && v <= 1.0))
        throw DomainError("surface_chart: u,v must lie in [0,1]");
    if (i == 1 && !f.inside)
        throw DomainError("surface_chart: s1-level surfaces carry inside patches only");
    if (i == 3 && f.sign_z < 0)
        throw DomainError("surface_chart: s3-level surfaces carry sign_z=+1 patches only");
    const int free1 = (i == 1) ? 2 : 1;
    const int free2 = (i == 3) ? 2 : 3;
    CyclidicCoords c;
    c.s[i - 1] = d;
    const auto place = [&](int idx, double t) {
        const double lo = prm.a[idx - 1];
        const double hi = prm.a[idx];
        const double sn = std::sin(kPi * t / 2.0);
        c.s[idx - 1] = lo + (hi - lo) * sn * sn;
        return (hi - lo) * (kPi / 2.0) * std::sin(kPi * t);
    };
    const double j1 = place(free1, u);
    const double j2 = place(free2, v);
    ChartPoint out;
    out.p = from_cyclidic(c, f, prm);
    if (j1 == 0.0 || j2 == 0.0) {
        // the substitution collapses the patch boundary; report zero measure
        out.area_element = 0.0;
        return out;
    }
    const double h1 = detail::scale_factor_at(free1, out.p, c.s, prm);
    const double h2 = detail::scale_factor_at(free2, out.p, c.s, prm);
    out.area_element = h1 * h2 * j1 * j2;
    return out;
}

} // namespace cyclharm
