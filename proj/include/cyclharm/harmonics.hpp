#pragma once

#include <array>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "cyclharm/eigen.hpp"

namespace cyclharm {

enum class HarmonicRole { internal, external };

struct HarmonicSpec {
    int kind = 2;
    MultiIndex n;
    ParityVector p;
    HarmonicRole role = HarmonicRole::internal;
};

// One solution of the separated ODE on the closed interval [a_{i-1}, a_i],
// represented redundantly so every evaluation has a stable form:
//   - unit Frobenius pairs at both ends with combination coefficients
//     (u,v) per side, matched through modified Wronskian ratios at the
//     interval midpoint,
//   - a barycentric Chebyshev interpolant of the two left-end basis
//     solutions across the interior (built in one propagation sweep each).
// exp_left/exp_right are the declared endpoint root factor exponents
// (0 or 1/2); hat() divides them out so the analytic remainder can be
// evaluated up to the closed ends where the declaration is honest, and
// reproduces the genuine blowup where it is not.
class SeparatedSolution {
public:
    SeparatedSolution(int interval, const LambdaPair& lam, bool anchor_left,
                      int parity, double exp_left, double exp_right,
                      const Params& params);

    int interval() const { return interval_; }
    double exp_left() const { return al_; }
    double exp_right() const { return ar_; }

    SolutionState state(double s) const;
    double value(double s) const { return state(s).w; }
    double hat(double s) const;

    // Zero the numerically negligible admixture of the opposite parity at an
    // end where an eigencondition holds exactly; keeps chi pairing exact.
    void snap_left(int parity);
    void snap_right(int parity);
    void rescale(double factor);

private:
    int interval_;
    double b_, c_, al_, ar_;
    LambdaPair lam_;
    Params prm_;
    SeriesSolution sL_[2], sR_[2];
    double trL_, trR_;
    double uL_ = 0.0, vL_ = 0.0, uR_ = 0.0, vR_ = 0.0;
    // left basis solutions tabulated on Chebyshev-Lobatto nodes of
    // [b+trL, c-trR]; state() combines them with (uL, vL)
    std::vector<double> nodes_;
    std::array<std::vector<double>, 2> bw_, bdw_;

    SolutionState end_series_state(bool left, double s) const;
    SolutionState basis_state(int q, double s) const;
    SolutionState mid_state(double s) const;
};

// Everything s-dependent a harmonic pair needs: the three interval solutions
// entering the internal harmonic, plus the external partner on the kind's
// defining interval (Wronskian-normalized F for kind 2; the endpoint
// normalized P, Q with connection coefficients for kinds 1 and 3).
struct SeparatedTriple {
    std::vector<SeparatedSolution> e; // intervals 1..3 in order
    std::optional<SeparatedSolution> f;
    std::optional<SeparatedSolution> pp;
    std::optional<SeparatedSolution> qq;
    ConnectionData conn{};
};

// Immutable internal/external harmonic pair for one (kind, n, p). Copies are
// shallow; evaluation is const and thread-safe.
class HarmonicPair {
public:
    int kind() const;
    const EigenRecord& record() const;
    const Params& params() const;
    const SeparatedTriple& triple() const;
    double norm_scale() const;

    // interval carrying the kind's defining coordinate surface
    int surface_interval() const { return kind(); }

    // abscissa the normalization surface sits on
    double norm_abscissa() const;

    double eval_internal(const Point3& r) const;
    double eval_external(const Point3& r) const;
    // 'I' or 'J' building blocks; kinds 1 and 3 only
    double eval_building_block(char which, const Point3& r) const;

    // Hatted factor of the internal harmonic along coordinate `interval`.
    // chi_sign picks the branch of the signed chi factor on the connection
    // interval of kinds 1 and 3 (+1 on the reference side); ignored elsewhere.
    double axis_hat(int interval, double s, int chi_sign = +1) const;
    // Full (unhatted) solution value along the coordinate, P,Q recombined on
    // the connection interval; denominators E(d)^2 use this.
    double axis_value(int interval, double s, int chi_sign = +1) const;

private:
    friend HarmonicPair build_harmonic(int, const MultiIndex&,
                                       const ParityVector&, const Params&,
                                       Catalog&, int);
    HarmonicPair() = default;
    struct Body;
    std::shared_ptr<const Body> body_;

    double internal_at(const Point3& r, const std::array<double, 3>& s) const;
};

// Assemble the pair from the catalog record (solved on demand), normalize so
// the kind's coefficient functional of the internal member equals 1, and
// write the applied scale back into the catalog. quad_order controls the
// normalization surface quadrature.
HarmonicPair build_harmonic(int kind, const MultiIndex& n,
                            const ParityVector& p, const Params& params,
                            Catalog& catalog, int quad_order = 48);

double eval_internal(const HarmonicPair& pair, const Point3& r);
double eval_external(const HarmonicPair& pair, const Point3& r);
double eval_building_block(const HarmonicPair& pair, char which,
                           const Point3& r);

// ||r||^{-1} field(sigma_0(r)); harmonicity preserving. r must not be 0.
double kelvin(const std::function<double(const Point3&)>& field,
              const Point3& r);

} // namespace cyclharm
