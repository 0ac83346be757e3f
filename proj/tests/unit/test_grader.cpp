// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tlsaudit Authors

#include "doctest.h"

#include "support/support.hpp"

#include "tlsaudit/grader.hpp"

using namespace tlsaudit;

namespace {

Configuration make(VersionSet versions, SuiteSet suites)
{
    const CipherDb& db = bundled_registry();
    Configuration c;
    c.versions = std::move(versions);
    c.supported_suites = std::move(suites);
    c.preferred_suite = *c.supported_suites.begin();
    recompute_flags(c, db);
    if (c.has(KexFlag::DHE)) {
        c.dh_prime_bits = 2048;
        c.dh_group_common = true;
    }
    return c;
}

const VersionSet modern = {ProtocolVersion::TLS1_2, ProtocolVersion::TLS1_3};

} // namespace

TEST_CASE("protocol category")
{
    using V = ProtocolVersion;
    CHECK(grade_protocol(make({V::TLS1_0, V::TLS1_1, V::TLS1_2, V::TLS1_3}, {0xC02F})) == Grade::A);
    CHECK(grade_protocol(make({V::SSLv3, V::TLS1_0, V::TLS1_1, V::TLS1_2}, {0xC02F})) == Grade::C);
    CHECK(grade_protocol(make({V::SSLv2, V::TLS1_2}, {0xC02F})) == Grade::F);
    CHECK(grade_protocol(make({V::TLS1_0, V::TLS1_1}, {0xC013})) == Grade::C);
}

TEST_CASE("key exchange category")
{
    CHECK(grade_key_exchange(make(modern, {0xC02F})) == Grade::A);
    // RSA key transport next to ECDHE stays A; several top-AS rows need it.
    CHECK(grade_key_exchange(make(modern, {0xC02F, 0x009C})) == Grade::A);
    auto dhe = make(modern, {0xC02F, 0x009E});
    CHECK(grade_key_exchange(dhe) == Grade::B);
    dhe.dh_prime_bits = 1024;
    CHECK(grade_key_exchange(dhe) == Grade::C);
    dhe.dh_group_common = false;
    CHECK(grade_key_exchange(dhe) == Grade::B);
    dhe.dh_prime_bits = 768;
    CHECK(grade_key_exchange(dhe) == Grade::C);
    dhe.dh_prime_bits = 512;
    CHECK(grade_key_exchange(dhe) == Grade::F);
}

TEST_CASE("ciphers and MAC category")
{
    CHECK(grade_ciphers_mac(make(modern, {0xC02F, 0xC030})) == Grade::A);
    CHECK(grade_ciphers_mac(make(modern, {0xC02F, 0x0041})) == Grade::B);
    CHECK(grade_ciphers_mac(make(modern, {0xC02F, 0xC011})) == Grade::C);
    CHECK(grade_ciphers_mac(make(modern, {0xC02F, 0x0009})) == Grade::F);
    CHECK(grade_ciphers_mac(make(modern, {0xC02F, 0x0003})) == Grade::F);
    // No AEAD at all keeps A out of reach.
    CHECK(grade_ciphers_mac(make(modern, {0xC013})) == Grade::B);
    // 3DES only counts under the stricter policy.
    auto tdes = make(modern, {0xC02F, 0x000A});
    CHECK(grade_ciphers_mac(tdes) == Grade::A);
    GradingPolicy strict;
    strict.penalize_3des = true;
    CHECK(grade_ciphers_mac(tdes, strict) == Grade::C);
}

TEST_CASE("preferred cipher category")
{
    const CipherDb& db = bundled_registry();
    auto c = make(modern, {0xC02F, 0xC013});
    c.server_preference = true;
    c.preferred_suite = 0xC02F;
    CHECK(grade_preferred(c, db) == Grade::A);
    c.server_preference = false;
    CHECK(grade_preferred(c, db) == Grade::B);
    c.server_preference = true;
    c.preferred_suite = 0xC013;
    CHECK(grade_preferred(c, db) == Grade::B);
    auto rsa_gcm = make(modern, {0x009C});
    rsa_gcm.server_preference = true;
    CHECK(grade_preferred(rsa_gcm, db) == Grade::B);
}

TEST_CASE("compression, tickets and vulnerabilities")
{
    auto c = make(modern, {0xC02F});
    CHECK(grade_compression(c) == Grade::A);
    c.tls_compression = true;
    CHECK(grade_compression(c) == Grade::C);

    auto t = make(modern, {0xC02F});
    CHECK(grade_ticket_lifetime(t) == Grade::A);
    t.session_tickets = true;
    CHECK(grade_ticket_lifetime(t) == Grade::A);
    for (auto [hint, want] : std::vector<std::pair<long, Grade>>{
             {300, Grade::A}, {86399, Grade::A}, {86400, Grade::B}, {604800, Grade::B}, {604801, Grade::C},
             {1209600, Grade::C}}) {
        t.ticket_lifetime_hint_s = hint;
        CHECK(grade_ticket_lifetime(t) == want);
    }

    CHECK(grade_vulnerabilities({}) == Grade::A);
    CHECK(grade_vulnerabilities({false, false, true, false}) == Grade::C);
    CHECK(grade_vulnerabilities({true, false, false, false}) == Grade::C);
    CHECK(grade_vulnerabilities({false, true, false, true}) == Grade::F);
}

TEST_CASE("vulnerability derivation")
{
    const CipherDb& db = bundled_registry();
    auto c = make({ProtocolVersion::SSLv3, ProtocolVersion::TLS1_2}, {0xC02F, 0x002F});
    CHECK(derive_vulnerabilities(c, db).poodle);
    c.versions.erase(ProtocolVersion::SSLv3);
    CHECK_FALSE(derive_vulnerabilities(c, db).poodle);
    c.tls_compression = true;
    CHECK(derive_vulnerabilities(c, db).crime);
    auto e = make(modern, {0xC02F, 0x0003});
    CHECK(derive_vulnerabilities(e, db).freak);
    // Heartbeat support alone is not Heartbleed.
    e.extensions.insert(Extension::heartbeat);
    CHECK_FALSE(derive_vulnerabilities(e, db).heartbleed);
    e.heartbleed_vulnerable = true;
    CHECK(derive_vulnerabilities(e, db).heartbleed);
}

TEST_CASE("overall grade and downgrade reasons")
{
    const CipherDb& db = bundled_registry();
    auto c = make(modern, {0xC02F, 0x0041});
    auto r = grade(c, db);
    CHECK(r.overall == Grade::B);
    CHECK(r.downgrade_reasons.at(Grade::B) == std::set<Category>{Category::CIPHERS_MAC, Category::PREFERRED});
    CHECK(grade(c, db) == r);

    auto table = downgrade_table({r});
    CHECK(table.at(Grade::B).at(Category::CIPHERS_MAC) == 1.0);
    CHECK(table.at(Grade::C).at(Category::KEY_EXCHANGE) == 0.0);
    auto empty = downgrade_table({});
    for (const auto& [g, row] : empty)
        for (const auto& [cat, f] : row)
            CHECK(f == 0.0);

    auto j = to_json(r);
    CHECK(j.at("overall") == "B");
    CHECK(j.at("categories").at("ciphers_mac") == "B");
    CHECK(grade_report_from_json(j) == r);
}

TEST_CASE("single report downgraded by key exchange")
{
    const CipherDb& db = bundled_registry();
    auto c = make(modern, {0xC02F, 0x009E});
    c.server_preference = true;
    c.dh_prime_bits = 1024;
    auto r = grade(c, db);
    REQUIRE(r.overall == Grade::C);
    auto t = downgrade_table({r});
    for (auto cat : all_categories)
        CHECK(t.at(Grade::C).at(cat) == (cat == Category::KEY_EXCHANGE ? 1.0 : 0.0));
}

TEST_CASE("downgrade table matches a brute-force recount")
{
    const CipherDb& db = bundled_registry();
    std::mt19937_64 rng(3);
    std::vector<GradeReport> reports;
    for (int i = 0; i < 100; ++i)
        reports.push_back(grade(testing::random_configuration(rng, db), db));
    auto t = downgrade_table(reports);
    for (auto g : {Grade::B, Grade::C, Grade::F}) {
        for (auto cat : all_categories) {
            std::size_t n = 0;
            for (const auto& r : reports)
                n += (r.overall == g && r.per_category.at(cat) == g) ? 1 : 0;
            CHECK(t.at(g).at(cat) == doctest::Approx(static_cast<double>(n) / 100.0));
        }
    }
}

TEST_CASE("default configurations grade as shipped")
{
    const CipherDb& db = bundled_registry();
    auto defaults = load_defaults(testing::data_dir() / "defaults", db);
    REQUIRE(defaults.size() == 10);
    for (const auto& d : defaults) {
        CAPTURE(d.name);
        REQUIRE(d.expected_grade.has_value());
        CHECK(grade(d.config, db).overall == *d.expected_grade);
    }
    auto nginx1604 = std::find_if(defaults.begin(), defaults.end(), [](auto& d) { return d.name == "nginx-16.04"; });
    REQUIRE(nginx1604 != defaults.end());
    CHECK(grade(nginx1604->config, db).per_category.at(Category::KEY_EXCHANGE) == Grade::C);
    auto apache1604 = std::find_if(defaults.begin(), defaults.end(), [](auto& d) { return d.name == "apache-16.04"; });
    REQUIRE(apache1604 != defaults.end());
    auto r = grade(apache1604->config, db);
    CHECK(r.per_category.at(Category::PREFERRED) == Grade::B);
    CHECK(r.per_category.at(Category::CIPHERS_MAC) == Grade::B);
}
