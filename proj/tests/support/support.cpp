// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tlsaudit Authors

#include "support.hpp"

#include "tlsaudit/dh_groups.hpp"
#include "tlsaudit/error.hpp"

#include <openssl/ssl.h>

#include <algorithm>
#include <fstream>
#include <sstream>

namespace tlsaudit::testing {

std::filesystem::path data_dir() { return default_data_dir(); }

std::vector<TopAsRow> load_top_as_rows()
{
    std::ifstream in(data_dir() / "top_as_configurations.csv");
    if (!in)
        throw Error("top_as_configurations.csv missing");
    std::string line;
    std::getline(in, line);
    std::vector<std::string> header;
    {
        std::stringstream ss(line);
        std::string f;
        while (std::getline(ss, f, ','))
            header.push_back(f);
    }
    std::vector<TopAsRow> rows;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ','))
            f.push_back(cell);
        if (f.size() < header.size())
            f.resize(header.size());
        TopAsRow r;
        for (std::size_t i = 0; i < header.size(); ++i) {
            const auto& h = header[i];
            if (h == "as_name")
                r.as_name = f[i];
            else if (h == "num_sites")
                r.sites = std::stol(f[i]);
            else if (h == "pct_as")
                r.pct_as = std::stod(f[i]);
            else if (h == "grade")
                r.grade = parse_grade(f[i]);
            else if (h == "dh_bits")
                r.dh_bits = f[i].empty() ? std::nullopt : std::optional<int>(std::stoi(f[i]));
            else
                r.flags[h] = f[i] == "1";
        }
        rows.push_back(std::move(r));
    }
    return rows;
}

FixtureSpec spec_from_row(const TopAsRow& row, std::size_t index, const CipherDb& db)
{
    FixtureSpec s;
    s.name = "top-as-" + std::to_string(index + 1);
    s.cert_kind = CertSigAlg::RSA;
    const std::pair<const char*, ProtocolVersion> cols[] = {
        {"tls13", ProtocolVersion::TLS1_3}, {"tls12", ProtocolVersion::TLS1_2}, {"tls11", ProtocolVersion::TLS1_1},
        {"tls10", ProtocolVersion::TLS1_0}, {"sslv3", ProtocolVersion::SSLv3}};
    for (const auto& [k, v] : cols)
        if (row.flag(k))
            s.versions.insert(v);

    bool rsa = row.flag("kex_rsa"), dhe = row.flag("kex_dhe"), ecdhe = row.flag("kex_ecdhe");
    std::vector<SuiteId> suites;
    auto add = [&](std::initializer_list<SuiteId> ids) {
        for (auto id : ids)
            if (std::find(suites.begin(), suites.end(), id) == suites.end())
                suites.push_back(id);
    };
    if (ecdhe)
        add({0xC02F, 0xC030, 0xC013, 0xC014});
    if (row.flag("chacha")) {
        if (ecdhe)
            add({0xCCA8});
        if (dhe)
            add({0xCCAA});
    }
    if (dhe)
        add({0x009E, 0x009F, 0x0033, 0x0039});
    if (rsa)
        add({0x009C, 0x009D, 0x002F, 0x0035});
    if (row.flag("aria"))
        add({ecdhe ? SuiteId(0xC060) : rsa ? SuiteId(0xC050) : SuiteId(0xC052)});
    if (row.flag("camellia"))
        add({rsa ? SuiteId(0x0041) : dhe ? SuiteId(0x0045) : SuiteId(0xC076)});
    if (row.flag("seed"))
        add({rsa ? SuiteId(0x0096) : SuiteId(0x009A)});
    if (row.flag("idea"))
        add({0x0007});
    if (row.flag("3des"))
        add({ecdhe ? SuiteId(0xC012) : rsa ? SuiteId(0x000A) : SuiteId(0x0016)});
    if (row.flag("rc4"))
        add({ecdhe ? SuiteId(0xC011) : SuiteId(0x0005)});
    if (row.flag("md5"))
        add({0x0004});
    if (row.flag("des"))
        add({rsa ? SuiteId(0x0009) : SuiteId(0x0015)});
    if (row.flag("export"))
        add({0x0003});
    s.suites = suites;
    s.server_preference = row.flag("server_pref");
    s.session_id_cache = row.flag("session_id");
    if (row.flag("session_ticket"))
        s.tickets = 300;
    if (dhe)
        s.ffdhe_prime = row.dh_bits && *row.dh_bits < 2048 ? "rfc2409-group2" : "rfc3526-group14";
    s.heartbeat = HeartbeatMode::OFF;
    s.server_header = row.as_name;
    s.meta = {{"as_name", row.as_name}, {"expected_grade", std::string(to_string(row.grade))}};
    validate(s, db);
    return s;
}

std::vector<std::size_t> corpus_row_indices() { return {5, 9, 10, 12, 16, 18, 32, 38, 42, 47}; }

std::vector<FixtureSpec> fixture_corpus(const CipherDb& db, std::uint64_t seed, std::size_t random)
{
    auto out = load_fixture_corpus(data_dir() / "defaults", db);
    auto rows = load_top_as_rows();
    for (auto i : corpus_row_indices())
        out.push_back(spec_from_row(rows.at(i), i, db));
    for (auto& s : random_specs(seed, random, db))
        out.push_back(std::move(s));
    return out;
}

Configuration random_configuration(std::mt19937_64& rng, const CipherDb& db)
{
    auto chance = [&](double p) { return std::bernoulli_distribution(p)(rng); };
    CertSigAlg cert = chance(0.7) ? CertSigAlg::RSA : CertSigAlg::ECDSA;
    std::vector<SuiteId> pool;
    for (const auto& [id, s] : db.suites)
        if (s.kex != Kex::OTHER && cert_compatible(s, cert) && (id >> 8) != 0x13)
            pool.push_back(id);
    Configuration c;
    c.cert_sig_alg = cert;
    for (auto v : all_versions)
        if (chance(v == ProtocolVersion::SSLv2 ? 0.05 : 0.5))
            c.versions.insert(v);
    if (c.versions.empty())
        c.versions.insert(ProtocolVersion::TLS1_2);
    std::shuffle(pool.begin(), pool.end(), rng);
    std::size_t k = std::uniform_int_distribution<std::size_t>(1, std::min<std::size_t>(30, pool.size()))(rng);
    c.supported_suites = SuiteSet(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k));
    recompute_flags(c, db);
    if (c.has(KexFlag::DHE)) {
        static const int bits[] = {512, 768, 1024, 1536, 2048, 3072, 4096};
        c.dh_prime_bits = bits[std::uniform_int_distribution<int>(0, 6)(rng)];
        c.dh_group_common = chance(0.5);
    }
    c.server_preference = chance(0.5);
    std::vector<SuiteId> chosen(c.supported_suites.begin(), c.supported_suites.end());
    c.preferred_suite = chosen[std::uniform_int_distribution<std::size_t>(0, chosen.size() - 1)(rng)];
    c.session_id_resumption = chance(0.5);
    c.session_tickets = chance(0.5);
    if (c.session_tickets && chance(0.8)) {
        static const long hints[] = {0, 300, 3600, 86399, 86400, 100000, 604800, 604801, 2000000};
        c.ticket_lifetime_hint_s = hints[std::uniform_int_distribution<int>(0, 8)(rng)];
    }
    c.tls_compression = chance(0.15);
    c.heartbleed_vulnerable = chance(0.1);
    for (auto e : all_extensions)
        if (chance(0.4))
            c.extensions.insert(e);
    validate(c, db);
    return c;
}

std::optional<SuiteSet> openssl_cipher_list(const std::string& cipher_string)
{
    SSL_CTX* ctx = SSL_CTX_new(TLS_method());
    if (!ctx)
        return std::nullopt;
    SSL_CTX_set_security_level(ctx, 0);
    std::optional<SuiteSet> out;
    if (SSL_CTX_set_cipher_list(ctx, cipher_string.c_str()) == 1) {
        out.emplace();
        STACK_OF(SSL_CIPHER)* sk = SSL_CTX_get_ciphers(ctx);
        for (int i = 0; i < sk_SSL_CIPHER_num(sk); ++i) {
            const SSL_CIPHER* c = sk_SSL_CIPHER_value(sk, i);
            auto id = static_cast<SuiteId>(SSL_CIPHER_get_protocol_id(c));
            if (std::string(SSL_CIPHER_get_version(c)) == "TLSv1.3")
                continue;
            out->insert(id);
        }
    }
    SSL_CTX_free(ctx);
    return out;
}

std::vector<ScanRecord> synthetic_records(std::size_t n, std::uint64_t seed, const CipherDb& db)
{
    std::mt19937_64 rng(seed);
    std::vector<Configuration> configs;
    for (int i = 0; i < 60; ++i)
        configs.push_back(random_configuration(rng, db));
    // Skewed popularity: weight 1/(i+1).
    auto skewed = [&](std::size_t n_items) {
        std::vector<double> w;
        for (std::size_t i = 0; i < n_items; ++i)
            w.push_back(1.0 / static_cast<double>(i + 1));
        return std::discrete_distribution<std::size_t>(w.begin(), w.end());
    };
    auto pick_config = skewed(configs.size());
    auto pick_as = skewed(25);
    std::vector<ScanRecord> out;
    for (std::size_t i = 0; i < n; ++i) {
        ScanRecord r;
        r.domain = "site" + std::to_string(i) + (i % 3 ? ".com" : ".org");
        r.rank = static_cast<long>(i + 1);
        double u = std::uniform_real_distribution<double>(0, 1)(rng);
        if (u < 0.05) {
            r.eligibility = Eligibility::EXCLUDED;
            r.exclusion_reason = "baseline";
        } else {
            const auto& c = configs[pick_config(rng)];
            r.configuration = c;
            if (u < 0.08) {
                r.eligibility = Eligibility::UNGRADEABLE;
            } else {
                r.eligibility = Eligibility::ELIGIBLE;
                r.grade_report = grade(c, db);
            }
        }
        if (std::uniform_real_distribution<double>(0, 1)(rng) > 0.04) {
            long asn = 64500 + static_cast<long>(pick_as(rng));
            r.asn = AsnInfo{asn, "AS-" + std::to_string(asn)};
        }
        out.push_back(std::move(r));
    }
    return out;
}

std::map<Grade, std::size_t> recount_grades(const std::vector<ScanRecord>& records)
{
    std::map<Grade, std::size_t> m = {{Grade::A, 0}, {Grade::B, 0}, {Grade::C, 0}, {Grade::F, 0}};
    for (const auto& r : records)
        if (r.grade_report)
            m[r.grade_report->overall] += 1;
    return m;
}

namespace {

std::optional<std::string> key_of(const ScanRecord& r, GroupKey by)
{
    if (by == GroupKey::ASN) {
        if (!r.asn)
            return std::nullopt;
        return std::to_string(r.asn->number);
    }
    return config_key(*r.configuration);
}

} // namespace

std::vector<CdfPoint> recount_cdf(const std::vector<ScanRecord>& records, GroupKey by)
{
    std::vector<const ScanRecord*> graded;
    for (const auto& r : records)
        if (r.grade_report && key_of(r, by))
            graded.push_back(&r);
    std::vector<std::string> keys;
    for (auto* r : graded) {
        auto k = *key_of(*r, by);
        if (std::find(keys.begin(), keys.end(), k) == keys.end())
            keys.push_back(k);
    }
    auto sites = [&](const std::string& k) {
        return std::count_if(graded.begin(), graded.end(), [&](auto* r) { return *key_of(*r, by) == k; });
    };
    std::sort(keys.begin(), keys.end(), [&](const std::string& a, const std::string& b) {
        auto sa = sites(a), sb = sites(b);
        return sa != sb ? sa > sb : a < b;
    });
    std::vector<CdfPoint> out;
    for (Grade g : {Grade::A, Grade::B, Grade::C, Grade::F}) {
        auto total = std::count_if(graded.begin(), graded.end(), [&](auto* r) { return r->grade_report->overall == g; });
        if (total == 0)
            continue;
        for (std::size_t k = 1; k <= keys.size(); ++k) {
            std::size_t inside = 0;
            for (auto* r : graded) {
                if (r->grade_report->overall != g)
                    continue;
                auto pos = std::find(keys.begin(), keys.end(), *key_of(*r, by)) - keys.begin();
                if (static_cast<std::size_t>(pos) < k)
                    ++inside;
            }
            out.push_back({k, g, static_cast<double>(inside) / static_cast<double>(total)});
        }
    }
    return out;
}

std::map<Grade, std::map<Category, double>> recount_downgrades(const std::vector<ScanRecord>& records)
{
    std::map<Grade, std::map<Category, double>> t;
    std::size_t graded = 0;
    for (const auto& r : records)
        graded += r.grade_report ? 1 : 0;
    for (Grade g : {Grade::B, Grade::C, Grade::F}) {
        for (Category c : all_categories) {
            std::size_t n = 0;
            for (const auto& r : records)
                if (r.grade_report && r.grade_report->overall == g && r.grade_report->per_category.at(c) == g)
                    ++n;
            t[g][c] = graded ? static_cast<double>(n) / static_cast<double>(graded) : 0.0;
        }
    }
    return t;
}

std::map<std::string, std::size_t> recount_config_sites(const std::vector<ScanRecord>& records)
{
    std::map<std::string, std::size_t> m;
    for (const auto& r : records)
        if (r.grade_report)
            ++m[config_key(*r.configuration)];
    return m;
}

std::map<long, std::vector<std::pair<std::string, std::size_t>>> recount_as_top(
    const std::vector<ScanRecord>& records, std::size_t top_n)
{
    std::map<long, std::map<std::string, std::size_t>> per;
    for (const auto& r : records)
        if (r.grade_report && r.asn)
            ++per[r.asn->number][config_key(*r.configuration)];
    std::map<long, std::vector<std::pair<std::string, std::size_t>>> out;
    for (auto& [asn, m] : per) {
        std::vector<std::pair<std::string, std::size_t>> v(m.begin(), m.end());
        std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) {
            return a.second != b.second ? a.second > b.second : a.first < b.first;
        });
        if (v.size() > top_n)
            v.resize(top_n);
        out[asn] = v;
    }
    return out;
}

} // namespace tlsaudit::testing
