#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include "json.hpp"

#include "cyclharm/eigen.hpp"
#include "support/colloc_oracle.hpp"
#include "support/oracle_data.hpp"

using namespace cyclharm;

namespace {

ParityVector pv(int kind, std::initializer_list<int> bits) {
    ParityVector p;
    p.kind = kind;
    int i = 0;
    for (int b : bits) p.bits[i++] = b;
    return p;
}

bool close(double x, double ref, double tol) {
    return std::abs(x - ref) <= tol * (1.0 + std::abs(ref));
}

} // namespace

TEST_CASE("parity packing round trips and validates") {
    for (int kind : {1, 2, 3}) {
        const int lim = (kind == 2) ? 16 : 8;
        for (int m = 0; m < lim; ++m) {
            const ParityVector p = unpack_parity(kind, m);
            CHECK(p.kind == kind);
            CHECK(pack_parity(p) == m);
        }
        CHECK_THROWS_AS((void)unpack_parity(kind, lim), DomainError);
        CHECK_THROWS_AS((void)unpack_parity(kind, -1), DomainError);
    }
    ParityVector bad = pv(2, {0, 2, 0, 0});
    CHECK_THROWS_AS((void)pack_parity(bad), DomainError);
}

TEST_CASE("solver rejects malformed requests") {
    CHECK_THROWS_AS((void)solve_eigen(4, {0, 0}, pv(2, {0, 0, 0, 0})),
                    DomainError);
    CHECK_THROWS_AS((void)solve_eigen(1, {0, 0}, pv(2, {0, 0, 0, 0})),
                    DomainError);
    CHECK_THROWS_AS((void)solve_eigen(2, {-1, 0}, pv(2, {0, 0, 0, 0})),
                    DomainError);
    CHECK_THROWS_AS((void)solve_eigen(2, {0, 0}, pv(2, {0, 0, 0, 0}), {}, 0.0),
                    DomainError);
    CHECK_THROWS_AS((void)solve_eigen(2, {0, 0}, pv(2, {0, 0, 0, 0}), {}, 0.5),
                    DomainError);
}

TEST_CASE("four-parity records match frozen references and dense collocation") {
    const Params prm;
    for (const auto& ref : oracle::kind2) {
        const ParityVector p = pv(2, {ref.p[0], ref.p[1], ref.p[2], ref.p[3]});
        const MultiIndex n{ref.n1, ref.n2};
        const EigenRecord rec = solve_eigen(2, n, p);

        CAPTURE(ref.n1);
        CAPTURE(ref.n2);
        CAPTURE(ref.p[0] * 8 + ref.p[1] * 4 + ref.p[2] * 2 + ref.p[3]);

        CHECK(rec.residuals[0] <= 1e-10);
        CHECK(rec.residuals[1] <= 1e-10);
        CHECK(rec.zero_counts[0] == ref.n1);
        CHECK(rec.zero_counts[1] == ref.n2);
        CHECK(!rec.connection.has_value());
        CHECK(rec.norm_scale == 0.0);

        CHECK(close(rec.lam.lambda1, ref.lam1, 1e-9));
        CHECK(close(rec.lam.lambda2, ref.lam2, 1e-9));

        const auto cp = colloc::kind2_pair({ref.n1, ref.n2},
                                           {ref.p[0], ref.p[1], ref.p[2], ref.p[3]},
                                           prm);
        REQUIRE(cp.has_value());
        CHECK(close(rec.lam.lambda1, cp->lambda1, 1e-6));
        CHECK(close(rec.lam.lambda2, cp->lambda2, 1e-6));
    }
}

TEST_CASE("three-parity records match frozen references including connection") {
    for (const auto& ref : oracle::kind1) {
        const ParityVector p = pv(1, {ref.p[0], ref.p[1], ref.p[2]});
        const EigenRecord rec = solve_eigen(1, {ref.n1, ref.n2}, p);
        CAPTURE(ref.n1);
        CAPTURE(ref.n2);
        CAPTURE(ref.p[0] * 4 + ref.p[1] * 2 + ref.p[2]);
        CHECK(close(rec.lam.lambda1, ref.lam1, 1e-9));
        CHECK(close(rec.lam.lambda2, ref.lam2, 1e-9));
        REQUIRE(rec.connection.has_value());
        CHECK(close(rec.connection->a_coef, ref.a, 1e-8));
        CHECK(close(rec.connection->b_coef, ref.b, 1e-8));
        CHECK(close(rec.connection->c_coef, ref.c, 1e-8));
        CHECK(rec.zero_counts[0] == ref.n1);
        CHECK(rec.zero_counts[1] == ref.n2);
    }
    for (const auto& ref : oracle::kind3) {
        const ParityVector p = pv(3, {ref.p[0], ref.p[1], ref.p[2]});
        const EigenRecord rec = solve_eigen(3, {ref.n1, ref.n2}, p);
        CAPTURE(ref.n1);
        CAPTURE(ref.n2);
        CAPTURE(ref.p[0] * 4 + ref.p[1] * 2 + ref.p[2]);
        CHECK(close(rec.lam.lambda1, ref.lam1, 1e-9));
        CHECK(close(rec.lam.lambda2, ref.lam2, 1e-9));
        REQUIRE(rec.connection.has_value());
        CHECK(close(rec.connection->a_coef, ref.a, 1e-8));
        CHECK(close(rec.connection->b_coef, ref.b, 1e-8));
        CHECK(close(rec.connection->c_coef, ref.c, 1e-8));
    }
}

TEST_CASE("reflection through the middle singular point swaps kinds 1 and 3") {
    // s -> 3 - s maps the singular points onto themselves reversed, so a
    // kind-1 record at (n1,n2), (p1,p2,p3) must reappear as the kind-3 record
    // at (n2,n1), (p3,p2,p1) with mapped accessory parameters.
    const EigenRecord r1 = solve_eigen(1, {1, 1}, pv(1, {0, 1, 1}));
    const EigenRecord r3 = solve_eigen(3, {1, 1}, pv(3, {1, 1, 0}));
    const double m1 = -(r1.lam.lambda1 + 9.0 / 8.0);
    const double m2 = r1.lam.lambda2 + 3.0 * r1.lam.lambda1 + 27.0 / 16.0;
    CHECK(close(r3.lam.lambda1, m1, 1e-9));
    CHECK(close(r3.lam.lambda2, m2, 1e-9));
}

TEST_CASE("eigenvalues transform covariantly under affine reparametrization") {
    Params wide;
    wide.a = {1.0, 3.0, 5.0, 7.0};
    const EigenRecord base = solve_eigen(2, {0, 0}, pv(2, {0, 1, 1, 0}));
    const EigenRecord stretched = solve_eigen(2, {0, 0}, pv(2, {0, 1, 1, 0}), wide);
    // pull back by s = 2 sigma + 1
    const double b1 = (stretched.lam.lambda1 + 3.0 / 8.0) / 2.0;
    const double b2 =
        (stretched.lam.lambda2 + stretched.lam.lambda1 + 3.0 / 16.0) / 4.0;
    CHECK(close(base.lam.lambda1, b1, 1e-8));
    CHECK(close(base.lam.lambda2, b2, 1e-8));
    CHECK(stretched.zero_counts[0] == 0);
    CHECK(stretched.zero_counts[1] == 0);
}

TEST_CASE("repeated solves are bitwise identical and counted") {
    const long before = eigen_solve_count();
    const EigenRecord a1 = solve_eigen(2, {0, 0}, pv(2, {1, 0, 0, 1}));
    const EigenRecord a2 = solve_eigen(2, {0, 0}, pv(2, {1, 0, 0, 1}));
    const EigenRecord b1 = solve_eigen(1, {0, 0}, pv(1, {0, 0, 0}));
    const EigenRecord b2 = solve_eigen(1, {0, 0}, pv(1, {0, 0, 0}));
    CHECK(eigen_solve_count() - before == 4);

    CHECK(a1.lam.lambda1 == a2.lam.lambda1);
    CHECK(a1.lam.lambda2 == a2.lam.lambda2);
    CHECK(a1.residuals[0] == a2.residuals[0]);
    CHECK(a1.residuals[1] == a2.residuals[1]);
    CHECK(b1.lam.lambda1 == b2.lam.lambda1);
    CHECK(b1.lam.lambda2 == b2.lam.lambda2);
    REQUIRE(b1.connection.has_value());
    REQUIRE(b2.connection.has_value());
    CHECK(b1.connection->a_coef == b2.connection->a_coef);
    CHECK(b1.connection->b_coef == b2.connection->b_coef);
    CHECK(b1.connection->c_coef == b2.connection->c_coef);
}

namespace {

Catalog small_catalog() {
    Catalog cat;
    EigenRecord r2 = solve_eigen(2, {0, 0}, pv(2, {0, 0, 0, 0}));
    r2.norm_scale = 1.5; // any positive scale is persistable
    EigenRecord r1 = solve_eigen(1, {0, 0}, pv(1, {0, 0, 0}));
    r1.norm_scale = 2.25;
    cat.insert(r2);
    cat.insert(r1);
    return cat;
}

std::string cat_path(const char* name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

nlohmann::ordered_json read_json(const std::string& path) {
    std::ifstream in(path);
    nlohmann::ordered_json j;
    in >> j;
    return j;
}

void write_json(const std::string& path, const nlohmann::ordered_json& j) {
    std::ofstream out(path, std::ios::trunc);
    out << j.dump(1, '\t') << '\n';
}

} // namespace

TEST_CASE("catalog persistence round trips bit-exactly") {
    const Catalog cat = small_catalog();
    const std::string path = cat_path("eigen_catalog_roundtrip.json");
    save_catalog(cat, path);
    const Catalog back = load_catalog(path, Params{});

    REQUIRE(back.records.size() == cat.records.size());
    for (const auto& [key, rec] : cat.records) {
        const auto it = back.records.find(key);
        REQUIRE(it != back.records.end());
        const EigenRecord& r = it->second;
        CHECK(r.lam.lambda1 == rec.lam.lambda1);
        CHECK(r.lam.lambda2 == rec.lam.lambda2);
        CHECK(r.norm_scale == rec.norm_scale);
        CHECK(r.residuals[0] == rec.residuals[0]);
        CHECK(r.residuals[1] == rec.residuals[1]);
        CHECK(r.zero_counts == rec.zero_counts);
        CHECK(r.connection.has_value() == rec.connection.has_value());
        if (rec.connection) {
            CHECK(r.connection->a_coef == rec.connection->a_coef);
            CHECK(r.connection->b_coef == rec.connection->b_coef);
            CHECK(r.connection->c_coef == rec.connection->c_coef);
        }
    }

    // serialization itself is deterministic
    const std::string path2 = cat_path("eigen_catalog_roundtrip2.json");
    save_catalog(cat, path2);
    std::ifstream f1(path), f2(path2);
    const std::string s1((std::istreambuf_iterator<char>(f1)),
                         std::istreambuf_iterator<char>());
    const std::string s2((std::istreambuf_iterator<char>(f2)),
                         std::istreambuf_iterator<char>());
    CHECK(s1 == s2);
}

TEST_CASE("catalog loader rejects mismatches and hand-edited files") {
    const Catalog cat = small_catalog();
    const std::string path = cat_path("eigen_catalog_validate.json");
    save_catalog(cat, path);

    Params other;
    other.a = {0.0, 1.0, 2.0, 3.5};
    CHECK_THROWS_AS((void)load_catalog(path, other), IoError);
    CHECK_THROWS_AS((void)load_catalog(cat_path("no_such_catalog.json"), Params{}),
                    IoError);

    const auto base = read_json(path);
    const std::string tmp = cat_path("eigen_catalog_mut.json");

    auto expect_reject = [&](nlohmann::ordered_json j) {
        write_json(tmp, j);
        CHECK_THROWS_AS((void)load_catalog(tmp, Params{}), IoError);
    };

    {
        auto j = base;
        j["schema_version"] = 2;
        expect_reject(j);
    }
    {
        auto j = base;
        j["records"][0]["residuals"][0] = "0x1p-5";
        expect_reject(j);
    }
    {
        auto j = base;
        j["records"][0]["zero_counts"][0] =
            j["records"][0]["zero_counts"][0].get<int>() + 1;
        expect_reject(j);
    }
    {
        auto j = base;
        j["records"][0]["norm_scale"] = "-0x1p+0";
        expect_reject(j);
    }
    {
        auto j = base;
        j["records"][0]["norm_scale"] = "0x0p+0";
        expect_reject(j);
    }
    {
        // records are sorted by kind, so index 0 is the three-parity one
        auto j = base;
        REQUIRE(j["records"][0]["kind"].get<int>() == 1);
        j["records"][0].erase("connection");
        expect_reject(j);
    }
    {
        auto j = base;
        j["records"][0]["connection"]["b"] = "0x0p+0";
        expect_reject(j);
    }
    {
        auto j = base;
        REQUIRE(j["records"][1]["kind"].get<int>() == 2);
        j["records"][1]["connection"] = {{"a", "0x1p+0"},
                                         {"b", "0x1p+0"},
                                         {"c", "-0x1p-1"}};
        expect_reject(j);
    }
    {
        auto j = base;
        j["records"].push_back(j["records"][0]);
        expect_reject(j);
    }
    {
        auto j = base;
        j["records"][0]["p"] = {0, 0};
        expect_reject(j);
    }
    {
        auto j = base;
        j["records"][0]["lambda1"] = "not-a-number";
        expect_reject(j);
    }
    {
        std::ofstream out(tmp, std::ios::trunc);
        out << "{ \"schema_version\": 1, ";
        out.close();
        CHECK_THROWS_AS((void)load_catalog(tmp, Params{}), IoError);
    }
}
