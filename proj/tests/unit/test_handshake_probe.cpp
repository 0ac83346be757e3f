// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tlsaudit Authors

#include "doctest.h"

#include "support/support.hpp"

#include "tlsaudit/error.hpp"
#include "tlsaudit/fixture.hpp"
#include "tlsaudit/handshake.hpp"
#include "tlsaudit/probe.hpp"

using namespace tlsaudit;
using namespace std::chrono_literals;

namespace {

const net::Millis timeout{3000};

FixtureSpec basic_spec()
{
    FixtureSpec s;
    s.name = "basic";
    s.versions = {ProtocolVersion::TLS1_0, ProtocolVersion::TLS1_1, ProtocolVersion::TLS1_2};
    s.suites = {0xC02F, 0xC013, 0x002F};
    s.server_preference = true;
    s.session_id_cache = true;
    s.tickets = 7200;
    s.server_header = "nginx/1.14.0 (Ubuntu)";
    return s;
}

struct Running {
    std::unique_ptr<FixtureServer> server;
    Target target;
};

Running start(const FixtureSpec& spec)
{
    auto server = FixtureServer::spawn(spec, bundled_registry());
    Target t{server->host(), server->port(), "fixture.test"};
    return {std::move(server), t};
}

HandshakeOffer offer_of(std::vector<SuiteId> suites, ProtocolVersion max = ProtocolVersion::TLS1_2)
{
    HandshakeOffer o;
    o.max_version = max;
    o.suites = std::move(suites);
    o.sni_name = "fixture.test";
    return o;
}

ProbePolicy fast_policy()
{
    ProbePolicy p;
    p.delay_min = p.delay_max = net::Millis(0);
    p.timeout = timeout;
    return p;
}

} // namespace

TEST_CASE("fixture spec validation")
{
    const CipherDb& db = bundled_registry();
    auto s = basic_spec();
    CHECK_NOTHROW(validate(s, db));
    auto dhe = s;
    dhe.suites.push_back(0x009E);
    CHECK_THROWS_AS(validate(dhe, db), ValidationError);
    dhe.ffdhe_prime = "rfc3526-group14";
    CHECK_NOTHROW(validate(dhe, db));
    auto ecdsa = s;
    ecdsa.cert_kind = CertSigAlg::ECDSA;
    CHECK_THROWS_AS(validate(ecdsa, db), ValidationError);
    auto dup = s;
    dup.suites.push_back(0xC02F);
    CHECK_THROWS_AS(validate(dup, db), ValidationError);
    auto gcm_only_old = s;
    gcm_only_old.suites = {0xC02F};
    CHECK_THROWS_AS(validate(gcm_only_old, db), ValidationError);
}

TEST_CASE("fixture specs round trip through JSON")
{
    const CipherDb& db = bundled_registry();
    for (const auto& spec : random_specs(5, 10, db)) {
        auto again = fixture_spec_from_json(to_json(spec), db);
        CHECK(to_json(again) == to_json(spec));
        CHECK(projection(again, db) == projection(spec, db));
    }
    auto a = random_specs(9, 3, db);
    auto b = random_specs(9, 3, db);
    for (std::size_t i = 0; i < a.size(); ++i)
        CHECK(to_json(a[i]) == to_json(b[i]));
}

TEST_CASE("projection of a basic spec")
{
    const CipherDb& db = bundled_registry();
    auto c = projection(basic_spec(), db);
    CHECK(c.supported_suites == SuiteSet{0xC02F, 0xC013, 0x002F});
    CHECK(c.preferred_suite == 0xC02F);
    CHECK(c.server_preference);
    CHECK(c.session_tickets);
    CHECK(c.ticket_lifetime_hint_s == 7200);
    CHECK(expected_eligible(basic_spec(), db));
}

TEST_CASE("handshake negotiates the server's choice")
{
    const CipherDb& db = bundled_registry();
    auto run = start(basic_spec());
    auto o = handshake(run.target, offer_of({0x002F, 0xC013, 0xC02F}), timeout, db);
    REQUIRE(o.negotiated());
    CHECK(o.selected_suite == 0xC02F);
    CHECK(o.selected_version == ProtocolVersion::TLS1_2);
    CHECK(o.certificate_sig_alg == CertSigAlg::RSA);
    REQUIRE(o.server_key_exchange.has_value());
    CHECK(o.server_key_exchange->group_kind == ServerKeyExchangeInfo::GroupKind::ECDHE);

    auto none = handshake(run.target, offer_of({0x009C}), timeout, db);
    CHECK(none.status == HandshakeStatus::TLS_ALERT);
    CHECK(none.alert == wire::alert_desc::handshake_failure);

    auto old = handshake(run.target, offer_of({0xC013, 0x002F}, ProtocolVersion::TLS1_0), timeout, db);
    REQUIRE(old.negotiated());
    CHECK(old.selected_version == ProtocolVersion::TLS1_0);
    CHECK(old.selected_suite == 0xC013);

    auto caps = run.server->capture();
    REQUIRE(caps.size() == 3);
    CHECK(caps[2].client_version == 0x0301);
    run.server->stop();
    run.server->stop();
}

TEST_CASE("completed handshakes carry HTTP and resume")
{
    const CipherDb& db = bundled_registry();
    auto run = start(basic_spec());
    auto o = http_get_over_tls(run.target, timeout, db);
    REQUIRE(o.completed);
    REQUIRE(o.http.has_value());
    CHECK(o.http->status_code == 200);
    CHECK(o.http->server_header == "nginx/1.14.0 (Ubuntu)");

    auto base = modern_completion_offer(db, "fixture.test");
    auto with_ticket = base;
    with_ticket.extensions.insert(Extension::session_ticket);
    auto full = handshake(run.target, with_ticket, timeout, db);
    REQUIRE(full.completed);
    REQUIRE(full.session_artifacts.has_value());
    CHECK(full.session_artifacts->ticket_lifetime_hint_s == 7200);
    CHECK_FALSE(full.session_artifacts->ticket.empty());

    auto by_id = resume(run.target, *full.session_artifacts, ResumeMethod::SESSION_ID, base, timeout, db);
    CHECK(by_id.resumed);
    auto by_ticket = resume(run.target, *full.session_artifacts, ResumeMethod::TICKET, base, timeout, db);
    CHECK(by_ticket.resumed);
    auto garbage = *full.session_artifacts;
    garbage.ticket = Bytes(garbage.ticket.size(), 0x55);
    garbage.session_id = Bytes(32, 0x66);
    auto bad = resume(run.target, garbage, ResumeMethod::TICKET, base, timeout, db);
    CHECK(bad.negotiated());
    CHECK_FALSE(bad.resumed);
}

TEST_CASE("heartbleed probe distinguishes patched and vulnerable")
{
    const CipherDb& db = bundled_registry();
    for (auto mode : {HeartbeatMode::VULNERABLE, HeartbeatMode::PATCHED}) {
        auto spec = basic_spec();
        spec.heartbeat = mode;
        auto run = start(spec);
        auto offer = offer_of({0xC02F});
        offer.extensions = {Extension::heartbeat};
        auto prior = handshake(run.target, offer, timeout, db);
        REQUIRE(prior.acknowledged_extensions.count(Extension::heartbeat));
        auto hb = heartbleed_probe(run.target, offer, prior, timeout, db);
        CHECK(hb.result.heartbeat_acknowledged);
        CHECK(hb.result.vulnerable == (mode == HeartbeatMode::VULNERABLE));
    }
    auto run = start(basic_spec());
    HandshakeOutcome no_ack;
    CHECK_THROWS_AS(heartbleed_probe(run.target, offer_of({0xC02F}), no_ack, timeout, db), PreconditionError);
}

TEST_CASE("special version probes")
{
    auto spec = basic_spec();
    spec.versions.insert(ProtocolVersion::SSLv2);
    spec.versions.insert(ProtocolVersion::TLS1_3);
    spec.sslv2_emulation = true;
    auto run = start(spec);
    CHECK(sslv2_probe(run.target, timeout).supported);
    CHECK(tls13_probe(run.target, timeout).supported);
    auto plain = start(basic_spec());
    CHECK_FALSE(sslv2_probe(plain.target, timeout).supported);
    CHECK_FALSE(tls13_probe(plain.target, timeout).supported);
}

TEST_CASE("unreachable endpoint is a TCP failure")
{
    const CipherDb& db = bundled_registry();
    std::uint16_t port = 0;
    {
        auto run = start(basic_spec());
        port = run.server->port();
    }
    Target t{"127.0.0.1", port, ""};
    auto o = handshake(t, offer_of({0xC02F}), net::Millis(500), db);
    CHECK(o.status == HandshakeStatus::TCP_FAILURE);
}

TEST_CASE("offer preconditions")
{
    HandshakeOffer o;
    CHECK_THROWS_AS(o.validate(), PreconditionError);
    o.suites = {0xC02F};
    CHECK_NOTHROW(o.validate());
    o.min_version = ProtocolVersion::TLS1_2;
    o.max_version = ProtocolVersion::TLS1_0;
    CHECK_THROWS_AS(o.validate(), PreconditionError);
}

TEST_CASE("probe policy parsing")
{
    auto p = probe_policy_from_json(nlohmann::json::parse(R"({"timeout_ms":100,"delay_max_ms":10,"seed":4})"));
    CHECK(p.timeout == net::Millis(100));
    CHECK(p.delay_max == net::Millis(10));
    CHECK(p.seed == 4);
    CHECK(probe_policy_from_json(to_json(p)).delay_max == p.delay_max);
    CHECK_THROWS_AS(probe_policy_from_json(nlohmann::json::parse(R"({"timeuot_ms":1})")), ValidationError);
    ProbePolicy bad;
    bad.delay_min = net::Millis(10);
    bad.delay_max = net::Millis(5);
    CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("enumeration uses one handshake per suite plus one")
{
    const CipherDb& db = bundled_registry();
    auto spec = basic_spec();
    spec.suites = {0xC030, 0xC02F, 0xC014, 0xC013, 0x009D, 0x009C, 0x0035, 0x002F};
    auto run = start(spec);
    Prober prober(run.target, fast_policy(), db);
    auto found = prober.enumerate_ciphers(CertSigAlg::RSA, ProtocolVersion::TLS1_2);
    CHECK(SuiteSet(found.begin(), found.end()) == SuiteSet(spec.suites.begin(), spec.suites.end()));
    CHECK(found.front() == 0xC030);
    CHECK(prober.trace().handshake_count == spec.suites.size() + 1);
    CHECK(prober.detect_server_preference(SuiteSet(found.begin(), found.end()), ProtocolVersion::TLS1_2));
    CHECK(prober.trace().handshake_count == spec.suites.size() + 3);

    spec.server_preference = false;
    auto client_pref = start(spec);
    Prober p2(client_pref.target, fast_policy(), db);
    CHECK_FALSE(p2.detect_server_preference(SuiteSet(spec.suites.begin(), spec.suites.end()), ProtocolVersion::TLS1_2));
}

TEST_CASE("probe_site recovers a spec and respects pacing")
{
    const CipherDb& db = bundled_registry();
    auto spec = basic_spec();
    spec.compression = true;
    spec.heartbeat = HeartbeatMode::VULNERABLE;
    auto run = start(spec);
    auto policy = fast_policy();
    policy.delay_min = policy.delay_max = net::Millis(5);
    auto site = probe_site(run.target, policy, db);
    CHECK(site.status == ProbeStatus::COMPLETE);
    CHECK(site.configuration == projection(spec, db));
    CHECK(site.configuration.heartbleed_vulnerable);
    CHECK(site.configuration.tls_compression);
    std::size_t n = site.trace.handshake_count;
    CHECK(n >= 14);
    CHECK(n <= 93);
    CHECK(site.trace.wall_ms >= 5.0 * static_cast<double>(n - 1));
    auto j = to_json(site.trace);
    CHECK(j.at("entries").size() == site.trace.entries.size());
}

TEST_CASE("ineligible sites are skipped")
{
    const CipherDb& db = bundled_registry();
    auto spec = basic_spec();
    spec.http = false;
    auto run = start(spec);
    auto site = probe_site(run.target, fast_policy(), db);
    CHECK(site.status == ProbeStatus::SKIPPED);
    CHECK_FALSE(site.baseline.eligible);
    CHECK(site.trace.handshake_count <= 2);

    auto odd = basic_spec();
    odd.suites = {0x0041, 0x0084};
    CHECK_FALSE(expected_eligible(odd, db));
    auto run2 = start(odd);
    CHECK(probe_site(run2.target, fast_policy(), db).status == ProbeStatus::SKIPPED);
}
