#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "json.hpp"

#include "cyclharm/eigen.hpp"

// Reals are persisted as hex-float strings so a save/load round trip is
// bit-exact regardless of locale or printf shortest-round-trip quirks.

namespace cyclharm {

namespace {

constexpr int kSchemaVersion = 1;

std::string hexf(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%a", v);
    return buf;
}

double unhexf(const nlohmann::ordered_json& j, const char* what) {
    if (!j.is_string())
        throw IoError(std::string("catalog: field '") + what +
                      "' must be a hex-float string");
    const std::string s = j.get<std::string>();
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (errno != 0 || end != s.c_str() + s.size() || s.empty())
        throw IoError(std::string("catalog: cannot parse '") + s + "' in field '" +
                      what + "'");
    return v;
}

double finite(double v, const char* what) {
    if (!std::isfinite(v))
        throw IoError(std::string("catalog: non-finite value in field '") + what +
                      "'");
    return v;
}

} // namespace

void save_catalog(const Catalog& cat, const std::string& path) {
    cat.params.validate();
    nlohmann::ordered_json root;
    root["schema_version"] = kSchemaVersion;
    {
        nlohmann::ordered_json a = nlohmann::ordered_json::array();
        for (double aj : cat.params.a) a.push_back(hexf(aj));
        root["a"] = a;
    }
    nlohmann::ordered_json recs = nlohmann::ordered_json::array();
    for (const auto& [key, rec] : cat.records) {
        nlohmann::ordered_json jr;
        jr["kind"] = rec.kind;
        jr["n"] = {rec.n.n1, rec.n.n2};
        {
            nlohmann::ordered_json pv = nlohmann::ordered_json::array();
            for (int i = 0; i < rec.p.size(); ++i) pv.push_back(rec.p.bits[i]);
            jr["p"] = pv;
        }
        jr["lambda1"] = hexf(rec.lam.lambda1);
        jr["lambda2"] = hexf(rec.lam.lambda2);
        jr["norm_scale"] = hexf(rec.norm_scale);
        jr["residuals"] = {hexf(rec.residuals[0]), hexf(rec.residuals[1])};
        jr["zero_counts"] = {rec.zero_counts[0], rec.zero_counts[1]};
        if (rec.connection) {
            nlohmann::ordered_json jc;
            jc["a"] = hexf(rec.connection->a_coef);
            jc["b"] = hexf(rec.connection->b_coef);
            jc["c"] = hexf(rec.connection->c_coef);
            jr["connection"] = jc;
        }
        recs.push_back(jr);
    }
    root["records"] = recs;

    const std::filesystem::path p(path);
    if (p.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(p.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("catalog: cannot open '" + path + "' for writing");
    out << root.dump(1, '\t') << '\n';
    out.flush();
    if (!out) throw IoError("catalog: write to '" + path + "' failed");
}

Catalog load_catalog(const std::string& path, const Params& expected_params) {
    expected_params.validate();
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("catalog: cannot open '" + path + "'");
    nlohmann::ordered_json root;
    try {
        in >> root;
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("catalog: malformed JSON in '") + path +
                      "': " + e.what());
    }

    if (!root.contains("schema_version") || !root["schema_version"].is_number_integer() ||
        root["schema_version"].get<int>() != kSchemaVersion)
        throw IoError("catalog: unsupported or missing schema_version in '" + path +
                      "'");
    if (!root.contains("a") || !root["a"].is_array() || root["a"].size() != 4)
        throw IoError("catalog: singular-point array must have four entries");
    Catalog cat;
    for (int j = 0; j < 4; ++j)
        cat.params.a[j] = finite(unhexf(root["a"][j], "a"), "a");
    cat.params.validate();
    for (int j = 0; j < 4; ++j)
        if (cat.params.a[j] != expected_params.a[j])
            throw IoError("catalog: singular points do not match the requested "
                          "parameters");

    if (!root.contains("records") || !root["records"].is_array())
        throw IoError("catalog: missing records array");
    for (const auto& jr : root["records"]) {
        EigenRecord rec;
        if (!jr.contains("kind") || !jr["kind"].is_number_integer())
            throw IoError("catalog: record without integer kind");
        rec.kind = jr["kind"].get<int>();
        if (rec.kind < 1 || rec.kind > 3)
            throw IoError("catalog: record kind out of range");

        if (!jr.contains("n") || !jr["n"].is_array() || jr["n"].size() != 2)
            throw IoError("catalog: record index must be a pair");
        rec.n.n1 = jr["n"][0].get<int>();
        rec.n.n2 = jr["n"][1].get<int>();
        if (rec.n.n1 < 0 || rec.n.n2 < 0)
            throw IoError("catalog: negative zero count index");

        rec.p.kind = rec.kind;
        const int psz = rec.p.size();
        if (!jr.contains("p") || !jr["p"].is_array() ||
            int(jr["p"].size()) != psz)
            throw IoError("catalog: parity vector arity does not match kind");
        for (int i = 0; i < psz; ++i) {
            rec.p.bits[i] = jr["p"][i].get<int>();
            if (rec.p.bits[i] != 0 && rec.p.bits[i] != 1)
                throw IoError("catalog: parity bits must be 0 or 1");
        }

        rec.lam.lambda1 = finite(unhexf(jr.at("lambda1"), "lambda1"), "lambda1");
        rec.lam.lambda2 = finite(unhexf(jr.at("lambda2"), "lambda2"), "lambda2");
        rec.norm_scale = finite(unhexf(jr.at("norm_scale"), "norm_scale"),
                                "norm_scale");
        if (!(rec.norm_scale > 0.0))
            throw IoError("catalog: norm_scale must be positive");

        if (!jr.contains("residuals") || !jr["residuals"].is_array() ||
            jr["residuals"].size() != 2)
            throw IoError("catalog: residuals must be a pair");
        for (int i = 0; i < 2; ++i) {
            rec.residuals[i] =
                finite(unhexf(jr["residuals"][i], "residuals"), "residuals");
            if (!(std::abs(rec.residuals[i]) <= 1e-10))
                throw IoError("catalog: endpoint residual above 1e-10");
        }

        if (!jr.contains("zero_counts") || !jr["zero_counts"].is_array() ||
            jr["zero_counts"].size() != 2)
            throw IoError("catalog: zero_counts must be a pair");
        rec.zero_counts[0] = jr["zero_counts"][0].get<int>();
        rec.zero_counts[1] = jr["zero_counts"][1].get<int>();
        if (rec.zero_counts[0] != rec.n.n1 || rec.zero_counts[1] != rec.n.n2)
            throw IoError("catalog: zero_counts disagree with the record index");

        if (rec.kind == 2) {
            if (jr.contains("connection"))
                throw IoError("catalog: kind-2 record carries connection data");
        } else {
            if (!jr.contains("connection") || !jr["connection"].is_object())
                throw IoError("catalog: missing connection data on a kind-" +
                              std::to_string(rec.kind) + " record");
            ConnectionData cd;
            cd.a_coef = finite(unhexf(jr["connection"].at("a"), "connection.a"),
                               "connection.a");
            cd.b_coef = finite(unhexf(jr["connection"].at("b"), "connection.b"),
                               "connection.b");
            cd.c_coef = finite(unhexf(jr["connection"].at("c"), "connection.c"),
                               "connection.c");
            if (cd.a_coef * cd.b_coef == 0.0)
                throw IoError("catalog: degenerate connection coefficients");
            rec.connection = cd;
        }

        const CatalogKey key{rec.kind, rec.n.n1, rec.n.n2, pack_parity(rec.p)};
        if (cat.records.count(key))
            throw IoError("catalog: duplicate record for one (kind, index, parity)");
        cat.records.emplace(key, rec);
    }
    return cat;
}

} // namespace cyclharm
