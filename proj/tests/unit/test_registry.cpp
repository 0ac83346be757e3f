// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tlsaudit Authors

#include "doctest.h"

#include "support/support.hpp"

#include "tlsaudit/cipher_registry.hpp"
#include "tlsaudit/configuration.hpp"
#include "tlsaudit/dh_groups.hpp"
#include "tlsaudit/error.hpp"

#include <openssl/bn.h>

#include <sstream>

using namespace tlsaudit;

namespace {

Bytes bn_bytes(BIGNUM* bn)
{
    Bytes out(static_cast<std::size_t>(BN_num_bytes(bn)));
    BN_bn2bin(bn, out.data());
    BN_free(bn);
    return out;
}

} // namespace

TEST_CASE("bundled registry loads known suites")
{
    const CipherDb& db = bundled_registry();
    CHECK(db.suites.size() > 300);
    const auto& s = db.at(0xC02F);
    CHECK(s.name == "TLS_ECDHE_RSA_WITH_AES_128_GCM_SHA256");
    CHECK(s.kex == Kex::ECDHE);
    CHECK(s.auth == Auth::RSA);
    CHECK(s.is_aead);
    CHECK(s.usable_at(ProtocolVersion::TLS1_2));
    CHECK_FALSE(s.usable_at(ProtocolVersion::TLS1_1));
    CHECK(db.at(0x0003).is_export);
    CHECK_THROWS_AS(db.at(0xFEFE), ValidationError);
    CHECK(db.find(0xFEFE) == nullptr);
}

TEST_CASE("registry rows round-trip through the CSV form")
{
    const CipherDb& db = bundled_registry();
    std::ostringstream csv;
    csv << registry_header << "\n";
    for (const auto& [id, s] : db.suites)
        csv << registry_row(s) << "\n";
    std::istringstream in(csv.str());
    CipherDb again = parse_registry(in);
    CHECK(again.suites == db.suites);
}

TEST_CASE("malformed registry rows report their line")
{
    std::istringstream bad(std::string(registry_header) + "\n" +
                           "0x002F,TLS_RSA_WITH_AES_128_CBC_SHA,RSA,RSA,AES,CBC,SHA1,false,false,SSLv3,TLS1.2,false\n"
                           "0x0030,broken,RSA\n");
    try {
        parse_registry(bad);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.position() == 3);
    }
    std::istringstream dup(std::string(registry_header) + "\n" +
                           "0x002F,A,RSA,RSA,AES,CBC,SHA1,false,false,SSLv3,TLS1.2,false\n"
                           "0x002F,B,RSA,RSA,AES,CBC,SHA1,false,false,SSLv3,TLS1.2,false\n");
    CHECK_THROWS_AS(parse_registry(dup), ValidationError);
}

TEST_CASE("suite filters compose by conjunction")
{
    const CipherDb& db = bundled_registry();
    SuiteFilter ecdhe;
    ecdhe.kex = Kex::ECDHE;
    SuiteFilter gcm;
    gcm.cipher_mode = CipherMode::GCM;
    auto both = suites_matching(db, ecdhe & gcm);
    for (auto id : both) {
        CHECK(db.at(id).kex == Kex::ECDHE);
        CHECK(db.at(id).cipher_mode == CipherMode::GCM);
    }
    CHECK(both.count(0xC02F));
    SuiteFilter rsa;
    rsa.kex = Kex::RSA;
    auto none = ecdhe & rsa;
    CHECK(none.contradiction);
    CHECK(suites_matching(db, none).empty());
}

TEST_CASE("engine offer order puts browser-union suites first")
{
    const CipherDb& db = bundled_registry();
    auto offer = engine_offer(db, CertSigAlg::RSA);
    REQUIRE_FALSE(offer.empty());
    for (auto id : offer) {
        CHECK_FALSE(db.at(id).unsupported_by_engine);
        CHECK(cert_compatible(db.at(id), CertSigAlg::RSA));
    }
    const auto& bu = browser_union_ids();
    std::size_t in_union = 0;
    while (in_union < offer.size() && std::find(bu.begin(), bu.end(), offer[in_union]) != bu.end())
        ++in_union;
    for (std::size_t i = in_union; i < offer.size(); ++i)
        CHECK(std::find(bu.begin(), bu.end(), offer[i]) == bu.end());
    CHECK(db.at(offer.back()).is_export);
}

TEST_CASE("version and suite id parsing")
{
    CHECK(parse_version("TLS1.2") == ProtocolVersion::TLS1_2);
    CHECK(wire_code(ProtocolVersion::TLS1_2) == 0x0303);
    CHECK(from_wire_code(0x0300) == ProtocolVersion::SSLv3);
    CHECK_FALSE(from_wire_code(0x0999).has_value());
    CHECK_THROWS_AS(parse_version("TLS9"), ParseError);
    CHECK(parse_suite_id("0xc02f") == 0xC02F);
    CHECK(parse_suite_id("C02F") == 0xC02F);
    CHECK(format_suite_id(0x002F) == "0x002F");
    CHECK_THROWS_AS(parse_suite_id("xyz"), ParseError);
    CHECK(ProtocolVersion::SSLv3 < ProtocolVersion::TLS1_0);
}

TEST_CASE("configuration flags are recomputed from suites")
{
    const CipherDb& db = bundled_registry();
    Configuration c;
    c.versions = {ProtocolVersion::TLS1_2, ProtocolVersion::SSLv3};
    c.supported_suites = {0xC02F, 0x0005, 0x0033};
    recompute_flags(c, db);
    CHECK(c.has(Component::RC4));
    CHECK(c.has(Component::AES_GCM));
    CHECK(c.has(Component::CBC));
    CHECK(c.has(KexFlag::ECDHE));
    CHECK(c.has(KexFlag::DHE));
    CHECK(c.has(KexFlag::RSA));
    CHECK(components_of(db.at(0x0003)).count(Component::EXPORT));
}

TEST_CASE("configuration JSON round trip ignores stale flags")
{
    const CipherDb& db = bundled_registry();
    std::mt19937_64 rng(17);
    for (int i = 0; i < 50; ++i) {
        Configuration c = testing::random_configuration(rng, db);
        auto j = to_json(c);
        j["component_flags"] = nlohmann::json::array({"RC4"});
        CHECK(configuration_from_json(j, db) == c);
    }
}

TEST_CASE("configuration invariants are enforced")
{
    const CipherDb& db = bundled_registry();
    Configuration c;
    c.versions = {ProtocolVersion::TLS1_2};
    c.supported_suites = {0xC02F};
    c.preferred_suite = 0xC030;
    recompute_flags(c, db);
    CHECK_THROWS_AS(validate(c, db), ValidationError);
    c.preferred_suite = 0xC02F;
    CHECK_NOTHROW(validate(c, db));
    c.ticket_lifetime_hint_s = 300;
    CHECK_THROWS_AS(validate(c, db), ValidationError);
}

TEST_CASE("bundled DH primes match the libcrypto constants")
{
    const auto& list = DhPrimeList::bundled();
    CHECK(list.primes().size() == 9);
    CHECK(list.by_name("rfc2409-group1")->prime == bn_bytes(BN_get_rfc2409_prime_768(nullptr)));
    CHECK(list.by_name("rfc2409-group2")->prime == bn_bytes(BN_get_rfc2409_prime_1024(nullptr)));
    CHECK(list.by_name("rfc3526-group5")->prime == bn_bytes(BN_get_rfc3526_prime_1536(nullptr)));
    CHECK(list.by_name("rfc3526-group14")->prime == bn_bytes(BN_get_rfc3526_prime_2048(nullptr)));
    CHECK(list.by_name("rfc3526-group15")->prime == bn_bytes(BN_get_rfc3526_prime_3072(nullptr)));
    CHECK(list.by_name("rfc3526-group16")->prime == bn_bytes(BN_get_rfc3526_prime_4096(nullptr)));
    for (const auto& p : list.primes()) {
        CHECK(bit_length(p.prime) == p.bits);
        CHECK(list.is_common(p.prime));
    }
    Bytes other = list.by_name("rfc3526-group14")->prime;
    other.back() ^= 0x02;
    CHECK_FALSE(list.is_common(other));
}

TEST_CASE("bit length and hex helpers")
{
    CHECK(bit_length({}) == 0);
    CHECK(bit_length({0x00, 0x01}) == 1);
    CHECK(bit_length({0x80, 0x00}) == 16);
    CHECK(strip_leading_zeros({0, 0, 5}) == Bytes{5});
    CHECK(to_hex(from_hex("00ff10")) == "00FF10");
}
