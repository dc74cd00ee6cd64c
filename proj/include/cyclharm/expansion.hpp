#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "cyclharm/harmonics.hpp"

namespace cyclharm {

// One quadrature node on a coordinate surface.
struct SurfaceNode {
    Point3 r{};
    std::array<double, 3> s{};   // full coordinate triple, fixed slot equals d
    std::array<double, 4> chi{}; // signed chi_j at the node
    double pref = 0.0;           // (1 + ||r||^2)^{-1/2}
    double h_fixed = 0.0;        // scale factor of the surface coordinate
    double weight = 0.0;         // area element times both Gauss weights
    int i1 = 0, i2 = 0;          // indices into the free-axis abscissa tables
};

struct SurfacePatch {
    OctantFlags flags;
    std::size_t first = 0; // offset into nodes(); order*order entries follow
};

// Tensor Gauss-Legendre quadrature over the full coordinate surface
// {s_kind = d}, one chart patch per octant carrying the surface. Patch and
// node order are fixed, so compensated sums over the nodes are reproducible
// bit for bit.
class SurfaceQuadrature {
public:
    SurfaceQuadrature(int kind, double d, int order, const Params& params);

    int kind() const { return kind_; }
    double d() const { return d_; }
    int order() const { return order_; }
    const Params& params() const { return prm_; }
    // which = 0 or 1; the interval index (1..3) of that free coordinate
    int free_axis(int which) const { return free_[which]; }
    const std::vector<double>& free_abscissae(int which) const {
        return s1d_[which];
    }
    const std::vector<SurfacePatch>& patches() const { return patches_; }
    const std::vector<SurfaceNode>& nodes() const { return nodes_; }

    // compensated fixed-order sum of fn over the nodes, weights included
    double integrate(const std::function<double(const SurfaceNode&)>& fn) const;

private:
    int kind_, order_;
    double d_;
    Params prm_;
    int free_[2] = {0, 0};
    std::vector<double> s1d_[2];
    std::vector<SurfacePatch> patches_;
    std::vector<SurfaceNode> nodes_;
};

// Process-wide cache keyed on (kind, d, order, singularities); entries are
// immutable once built.
const SurfaceQuadrature& shared_quadrature(int kind, double d, int order,
                                           const Params& params);

// The coefficient functional of the pair's kind applied to f, evaluated on
// the given surface: (1/(c_k omega(d) E(d)^2)) times the surface integral of
// G * f / h_k, with c_2 = 4 and c_1 = c_3 = 2. With check_convergence the
// integral is repeated at doubled order and must agree to 1e-7.
double coefficient_functional(const HarmonicPair& pair,
                              const HarmonicPair& f_pair,
                              const SurfaceQuadrature& quad,
                              bool check_convergence = true);
double coefficient_functional(const HarmonicPair& pair,
                              const std::function<double(const Point3&)>& f,
                              const SurfaceQuadrature& quad,
                              bool check_convergence = true);

// External member reconstructed from its boundary-integral representation
// over the surface; r_prime must lie strictly outside the closed domain the
// surface bounds.
double external_via_integral(const HarmonicPair& pair, const Point3& r_prime,
                             const SurfaceQuadrature& quad);

// Which point-source expansion of the kind covers the ordered pair (r, r').
// A, B, C follow the geometric hypotheses of the three validity regimes;
// kind 2 has only A. Boundary ties are rejected as inapplicable.
enum class CaseLabel { A, B, C, inapplicable };
CaseLabel applicable_case(int kind, const Point3& r, const Point3& r_prime,
                          const Params& params = {});

struct ConvergenceRow {
    int order = 0;    // shells n1 + n2 <= order accumulated so far
    long terms = 0;   // cumulative number of (n, parity) terms
    double partial_sum = 0.0;
    double abs_err = 0.0;
    double rel_err = 0.0;
};

struct ConvergenceReport {
    int kind = 0; // 1..3; 0 marks the rotational baseline expansion
    CaseLabel label = CaseLabel::inapplicable;
    bool swapped = false; // the roles of r and r' were exchanged to fit a case
    double target = 0.0;  // 1 / ||r - r'||
    std::vector<ConvergenceRow> rows;
};

std::string to_csv(const ConvergenceReport& report);

// Partial sums of the bilinear point-source expansion of the kind,
// sum over shells of C_k * G(r) * H(r'), C_2 = pi and C_1 = C_3 = 2 pi.
// Solved records accumulate in the catalog.
ConvergenceReport reciprocal_expansion(int kind, const Point3& r,
                                       const Point3& r_prime, int max_order,
                                       Catalog& catalog, int quad_order = 48);

// Rotational-coordinate baseline for the same target, summed over degrees up
// to max_order with real pair-summed azimuthal terms.
ConvergenceReport spherical_expansion(const Point3& r, const Point3& r_prime,
                                      int max_order);

// Ferrers associated Legendre function with the (-1)^m phase; m may be
// negative, |m| > l gives 0.
double ferrers_p(int l, int m, double x);

} // namespace cyclharm
