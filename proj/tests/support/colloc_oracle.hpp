#pragma once

#include <array>
#include <optional>
#include <utility>
#include <vector>

#include "cyclharm/fuchsian.hpp"

// Dense pseudospectral cross-check for the interval eigenproblems, built on
// Chebyshev collocation of the regularized equation and a stock dense
// eigensolver. Shares nothing with the library's series/propagation code
// path, so agreement is meaningful.
namespace colloc {

// All near-real eigenvalues lambda2 of the fixed-lambda1 interval problem,
// paired with the sign-change count of the eigenvector.
std::vector<std::pair<double, int>> lambda2_spectrum(
    int interval, int pl, int pr, double lam1, const cyclharm::Params& prm,
    int N = 64);

// The physical branch with the requested zero count (largest lambda2 on the
// outer intervals, smallest magnitude on the middle one).
std::optional<double> lambda2_for_count(int interval, int pl, int pr,
                                        double lam1, int n,
                                        const cyclharm::Params& prm,
                                        int N = 64);

// Two-parameter eigenvalue for the four-parity field type: lambda1 such that
// the interval-1 and interval-3 branches with counts n agree.
std::optional<cyclharm::LambdaPair> kind2_pair(const std::array<int, 2>& n,
                                               const std::array<int, 4>& p,
                                               const cyclharm::Params& prm,
                                               int N = 64, double lam1_lo = -60.0,
                                               double lam1_hi = 60.0);

} // namespace colloc
