#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>

#include "cyclharm/fuchsian.hpp"

namespace cyclharm {

// Exponent choice (0 or 1/2, encoded 0/1) at each singularity relevant to the
// kind: (p0,p1,p2,p3) for kind 2; (p1,p2,p3) for kind 1; (p0,p1,p2) for kind 3.
struct ParityVector {
    int kind = 2;
    std::array<int, 4> bits{0, 0, 0, 0};

    int size() const { return kind == 2 ? 4 : 3; }
    void validate() const {
        if (kind < 1 || kind > 3) throw DomainError("parity: kind must be 1..3");
        for (int i = 0; i < size(); ++i)
            if (bits[i] != 0 && bits[i] != 1)
                throw DomainError("parity: bits must be 0 or 1");
    }
};

// Reading-order packing, first bit most significant.
int pack_parity(const ParityVector& p);
ParityVector unpack_parity(int kind, int bits);

// Zero counts of the two doubly-Frobenius solutions, in interval order:
// intervals (2,3) for kind 1, (1,3) for kind 2, (1,2) for kind 3.
struct MultiIndex {
    int n1 = 0;
    int n2 = 0;
};

// The two eigen intervals of a kind with their endpoint parities.
struct EigenIntervalSpec {
    int interval;
    int parity_left;
    int parity_right;
};
std::array<EigenIntervalSpec, 2> eigen_intervals(int kind,
                                                 const ParityVector& p);

struct EigenRecord {
    int kind = 2;
    MultiIndex n;
    ParityVector p;
    LambdaPair lam;
    // 0.0 is the in-memory "not yet normalized" sentinel; persisted catalogs
    // always carry the positive scale of the first eigen-interval solution
    double norm_scale = 0.0;
    std::array<double, 2> residuals{0.0, 0.0};
    std::array<int, 2> zero_counts{0, 0};
    std::optional<ConnectionData> connection; // kinds 1 and 3 only
};

struct CatalogKey {
    int kind;
    int n1;
    int n2;
    int pbits;
    auto operator<=>(const CatalogKey&) const = default;
};

struct Catalog {
    Params params;
    std::map<CatalogKey, EigenRecord> records;

    const EigenRecord* find(int kind, const MultiIndex& n,
                            const ParityVector& p) const;
    void insert(const EigenRecord& rec);
};

// Two-stage search (lambda2 branch tracing by zero count, then lambda1 root
// scan, then 2-D Newton polish). tol bounds the accepted normalized endpoint
// mismatches.
EigenRecord solve_eigen(int kind, const MultiIndex& n, const ParityVector& p,
                        const Params& params = {}, double tol = 1e-10);

// All records with n1+n2 <= max_order across every parity vector of the kind,
// normalization scales included.
Catalog enumerate_eigen(int kind, int max_order, const Params& params = {});

// Fetch or solve+normalize one record, caching it in the catalog.
const EigenRecord& ensure_record(Catalog& cat, int kind, const MultiIndex& n,
                                 const ParityVector& p);

// JSON persistence with hex-float encoded reals (bit-exact round trip).
// Loading re-validates params equality, schema version, and record invariants.
void save_catalog(const Catalog& cat, const std::string& path);
Catalog load_catalog(const std::string& path, const Params& expected_params);

// Number of eigen solves performed since process start (cache-coherence
// checks in the CLI rely on this).
long eigen_solve_count();

} // namespace cyclharm
