// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tlsaudit Authors

#include "tlsaudit/fixture.hpp"

#include "tlsaudit/dh_groups.hpp"
#include "tlsaudit/tls_crypto.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <fstream>
#include <random>

namespace tlsaudit {

std::string_view to_string(HeartbeatMode m)
{
    switch (m) {
    case HeartbeatMode::OFF: return "off";
    case HeartbeatMode::PATCHED: return "patched";
    case HeartbeatMode::VULNERABLE: return "vulnerable";
    }
    return "?";
}

HeartbeatMode parse_heartbeat_mode(std::string_view s)
{
    for (auto m : {HeartbeatMode::OFF, HeartbeatMode::PATCHED, HeartbeatMode::VULNERABLE})
        if (to_string(m) == s)
            return m;
    throw ParseError("unknown heartbeat mode '" + std::string(s) + "'");
}

namespace {

const ExtensionSet auditable_extensions = {
    Extension::server_name,          Extension::heartbeat,          Extension::session_ticket,
    Extension::alpn,                 Extension::status_request,     Extension::renegotiation_info,
    Extension::extended_master_secret, Extension::signed_certificate_timestamp,
};

} // namespace

std::optional<ProtocolVersion> highest_legacy_version(const FixtureSpec& spec)
{
    std::optional<ProtocolVersion> best;
    for (auto v : spec.versions)
        if (v >= ProtocolVersion::SSLv3 && v <= ProtocolVersion::TLS1_2)
            best = v;
    return best;
}

Bytes fixture_prime(const FixtureSpec& spec)
{
    if (!spec.ffdhe_prime)
        return {};
    if (const auto* named = DhPrimeList::bundled().by_name(*spec.ffdhe_prime))
        return named->prime;
    Bytes b;
    try {
        b = strip_leading_zeros(from_hex(*spec.ffdhe_prime));
    } catch (const Error&) {
        throw ValidationError("ffdhe_prime '" + spec.ffdhe_prime->substr(0, 32) +
                              "' is neither a bundled prime name nor hex");
    }
    if (bit_length(b) < 256)
        throw ValidationError("ffdhe_prime is shorter than 256 bits");
    return b;
}

void validate(const FixtureSpec& spec, const CipherDb& db)
{
    auto hv = highest_legacy_version(spec);
    if (!hv)
        throw ValidationError("fixture '" + spec.name + "' supports no SSLv3..TLS1.2 version");
    if (spec.versions.count(ProtocolVersion::SSLv2) != spec.sslv2_emulation)
        throw ValidationError("fixture '" + spec.name + "': SSLv2 in versions must match sslv2_emulation");
    if (spec.cert_kind == CertSigAlg::OTHER)
        throw ValidationError("fixture '" + spec.name + "': cert_kind must be RSA or ECDSA");
    if (spec.suites.empty())
        throw ValidationError("fixture '" + spec.name + "' lists no suites");
    SuiteSet seen;
    bool dhe = false;
    for (auto id : spec.suites) {
        const auto& s = db.at(id);
        if (!seen.insert(id).second)
            throw ValidationError("fixture '" + spec.name + "' lists " + format_suite_id(id) + " twice");
        if (s.unsupported_by_engine)
            throw ValidationError("fixture '" + spec.name + "': " + format_suite_id(id) +
                                  " cannot be served (engine-unsupported)");
        if (!cert_compatible(s, spec.cert_kind))
            throw ValidationError("fixture '" + spec.name + "': " + format_suite_id(id) +
                                  " does not match cert_kind " + std::string(to_string(spec.cert_kind)));
        if (!s.usable_at(*hv))
            throw ValidationError("fixture '" + spec.name + "': " + format_suite_id(id) + " is not usable at " +
                                  std::string(to_string(*hv)));
        dhe = dhe || s.kex == Kex::DHE;
    }
    // A version without a usable suite cannot be negotiated, so no probe could
    // observe it.
    for (auto v : spec.versions) {
        if (v == ProtocolVersion::SSLv2 || v == ProtocolVersion::TLS1_3)
            continue;
        bool any = std::any_of(spec.suites.begin(), spec.suites.end(),
                               [&](SuiteId id) { return db.at(id).usable_at(v); });
        if (!any)
            throw ValidationError("fixture '" + spec.name + "' has no suite usable at " +
                                  std::string(to_string(v)));
    }
    if (dhe && !spec.ffdhe_prime)
        throw ValidationError("fixture '" + spec.name + "' lists DHE suites without ffdhe_prime");
    fixture_prime(spec);
    if (spec.tickets && *spec.tickets < 0)
        throw ValidationError("fixture '" + spec.name + "': negative ticket lifetime");
    if (spec.tickets && *spec.tickets > 0xffffffffL)
        throw ValidationError("fixture '" + spec.name + "': ticket lifetime exceeds 32 bits");
    for (auto e : spec.extensions) {
        if (e == Extension::session_ticket || e == Extension::heartbeat || e == Extension::supported_versions)
            throw ValidationError("fixture '" + spec.name + "': extension " + std::string(to_string(e)) +
                                  " is derived from other fields");
    }
}

FixtureSpec fixture_spec_from_json(const nlohmann::json& j, const CipherDb& db)
{
    static const std::set<std::string> known = {
        "name",      "versions",   "suites",        "server_preference", "session_id_cache",
        "tickets",   "compression", "ffdhe_prime",  "heartbeat",         "server_header",
        "cert_kind", "sslv2_emulation", "extensions", "http",            "notes",
        "meta",
    };
    if (!j.is_object())
        throw ValidationError("fixture spec must be a JSON object");
    for (const auto& [k, v] : j.items())
        if (!known.count(k))
            throw ValidationError("unknown fixture field '" + k + "'");
    FixtureSpec s;
    try {
        s.name = j.value("name", "");
        for (const auto& v : j.at("versions"))
            s.versions.insert(parse_version(v.get<std::string>()));
        for (const auto& id : j.at("suites"))
            s.suites.push_back(parse_suite_id(id.get<std::string>()));
        s.server_preference = j.value("server_preference", false);
        s.session_id_cache = j.value("session_id_cache", false);
        if (j.contains("tickets") && !j["tickets"].is_null())
            s.tickets = j["tickets"].get<long>();
        s.compression = j.value("compression", false);
        if (j.contains("ffdhe_prime") && !j["ffdhe_prime"].is_null())
            s.ffdhe_prime = j["ffdhe_prime"].get<std::string>();
        s.heartbeat = parse_heartbeat_mode(j.value("heartbeat", "off"));
        if (j.contains("server_header") && !j["server_header"].is_null())
            s.server_header = j["server_header"].get<std::string>();
        s.cert_kind = parse_cert_sig_alg(j.value("cert_kind", "RSA"));
        s.sslv2_emulation = j.value("sslv2_emulation", false) || s.versions.count(ProtocolVersion::SSLv2);
        if (s.sslv2_emulation)
            s.versions.insert(ProtocolVersion::SSLv2);
        if (j.contains("extensions")) {
            s.extensions.clear();
            for (const auto& e : j["extensions"])
                s.extensions.insert(parse_extension(e.get<std::string>()));
        }
        s.http = j.value("http", true);
        s.notes = j.value("notes", "");
        if (j.contains("meta"))
            s.meta = j["meta"];
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("fixture spec: ") + e.what());
    }
    validate(s, db);
    return s;
}

nlohmann::json to_json(const FixtureSpec& s)
{
    nlohmann::json j;
    j["name"] = s.name;
    auto& versions = j["versions"] = nlohmann::json::array();
    for (auto v : s.versions)
        versions.push_back(to_string(v));
    auto& suites = j["suites"] = nlohmann::json::array();
    for (auto id : s.suites)
        suites.push_back(format_suite_id(id));
    j["server_preference"] = s.server_preference;
    j["session_id_cache"] = s.session_id_cache;
    j["tickets"] = s.tickets ? nlohmann::json(*s.tickets) : nlohmann::json(nullptr);
    j["compression"] = s.compression;
    j["ffdhe_prime"] = s.ffdhe_prime ? nlohmann::json(*s.ffdhe_prime) : nlohmann::json(nullptr);
    j["heartbeat"] = to_string(s.heartbeat);
    j["server_header"] = s.server_header ? nlohmann::json(*s.server_header) : nlohmann::json(nullptr);
    j["cert_kind"] = to_string(s.cert_kind);
    j["sslv2_emulation"] = s.sslv2_emulation;
    auto& exts = j["extensions"] = nlohmann::json::array();
    for (auto e : s.extensions)
        exts.push_back(to_string(e));
    j["http"] = s.http;
    j["notes"] = s.notes;
    j["meta"] = s.meta;
    return j;
}

FixtureSpec load_fixture_spec(const std::filesystem::path& path, const CipherDb& db)
{
    std::ifstream in(path);
    if (!in)
        throw Error("cannot open fixture spec " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what(), e.byte);
    }
    try {
        FixtureSpec s = fixture_spec_from_json(j, db);
        if (s.name.empty())
            s.name = path.stem().string();
        return s;
    } catch (const ValidationError& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

std::vector<FixtureSpec> load_fixture_corpus(const std::filesystem::path& dir, const CipherDb& db)
{
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".json")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    std::vector<FixtureSpec> out;
    for (const auto& f : files)
        out.push_back(load_fixture_spec(f, db));
    return out;
}

bool expected_eligible(const FixtureSpec& spec, const CipherDb& db)
{
    auto hv = highest_legacy_version(spec);
    if (!spec.http || !hv || *hv < ProtocolVersion::TLS1_0)
        return false;
    const auto& union_ids = browser_union_ids();
    SuiteSet completion = tls::completion_suites(db);
    bool in_union = false;
    bool completable = false;
    for (auto id : spec.suites) {
        in_union = in_union || std::find(union_ids.begin(), union_ids.end(), id) != union_ids.end();
        completable = completable || completion.count(id);
    }
    return in_union && completable;
}

Configuration projection(const FixtureSpec& spec, const CipherDb& db)
{
    Configuration c;
    c.versions = spec.versions;
    c.supported_suites = SuiteSet(spec.suites.begin(), spec.suites.end());
    recompute_flags(c, db);
    if (c.has(KexFlag::DHE)) {
        Bytes prime = fixture_prime(spec);
        c.dh_prime_bits = bit_length(prime);
        c.dh_group_common = DhPrimeList::bundled().is_common(prime);
    }
    // Two opposite-order offers cannot tell a single suite's server apart.
    c.server_preference = spec.server_preference && spec.suites.size() > 1;
    c.preferred_suite = c.server_preference ? spec.suites.front()
                                            : preference_order(db, c.supported_suites).front();
    c.session_id_resumption = spec.session_id_cache;
    c.session_tickets = spec.tickets.has_value();
    c.ticket_lifetime_hint_s = spec.tickets;
    c.tls_compression = spec.compression;
    for (auto e : spec.extensions)
        if (auditable_extensions.count(e))
            c.extensions.insert(e);
    if (spec.tickets)
        c.extensions.insert(Extension::session_ticket);
    if (spec.heartbeat != HeartbeatMode::OFF)
        c.extensions.insert(Extension::heartbeat);
    c.heartbleed_vulnerable = spec.heartbeat == HeartbeatMode::VULNERABLE;
    c.cert_sig_alg = spec.cert_kind;
    return c;
}

std::vector<FixtureSpec> random_specs(std::uint64_t seed, std::size_t count, const CipherDb& db)
{
    std::mt19937_64 rng(seed);
    auto chance = [&](double p) { return std::uniform_real_distribution<double>(0, 1)(rng) < p; };
    auto pick = [&](auto const& items) { return items[std::uniform_int_distribution<std::size_t>(0, items.size() - 1)(rng)]; };
    const std::vector<long> hints = {300, 3600, 86400, 100000, 604800, 1209600};
    const std::vector<std::string> headers = {"nginx/1.14.0 (Ubuntu)", "Apache/2.4.29 (Ubuntu)", "Apache",
                                              "cloudflare", "Microsoft-IIS/10.0", "LiteSpeed",
                                              "openresty/1.15.8.1"};
    const std::vector<std::string> named_primes = {"rfc2409-group2", "rfc3526-group14", "rfc7919-ffdhe2048",
                                                   "rfc3526-group15"};
    const std::vector<int> generated_bits = {512, 768, 1024, 1024, 2048};
    const std::vector<Extension> optional_exts = {Extension::server_name, Extension::alpn,
                                                  Extension::status_request, Extension::renegotiation_info,
                                                  Extension::extended_master_secret,
                                                  Extension::signed_certificate_timestamp};
    const auto& union_ids = browser_union_ids();
    SuiteSet completion = tls::completion_suites(db);

    std::vector<FixtureSpec> out;
    for (std::size_t i = 0; i < count; ++i) {
        FixtureSpec s;
        s.name = fmt::format("random-{}-{:02}", seed, i);
        s.cert_kind = chance(0.7) ? CertSigAlg::RSA : CertSigAlg::ECDSA;
        ProtocolVersion hv = chance(0.8) ? ProtocolVersion::TLS1_2
                                         : (chance(0.5) ? ProtocolVersion::TLS1_1 : ProtocolVersion::TLS1_0);
        int lowest = std::uniform_int_distribution<int>(static_cast<int>(ProtocolVersion::SSLv3),
                                                        static_cast<int>(hv))(rng);
        for (int v = lowest; v <= static_cast<int>(hv); ++v)
            s.versions.insert(static_cast<ProtocolVersion>(v));
        if (hv == ProtocolVersion::TLS1_2 && chance(0.3))
            s.versions.insert(ProtocolVersion::TLS1_3);
        s.sslv2_emulation = chance(0.1);
        if (s.sslv2_emulation)
            s.versions.insert(ProtocolVersion::SSLv2);

        std::vector<SuiteId> pool;
        std::vector<SuiteId> anchors;
        for (auto id : engine_offer(db, s.cert_kind)) {
            if (!db.at(id).usable_at(hv))
                continue;
            pool.push_back(id);
            if (completion.count(id) && std::find(union_ids.begin(), union_ids.end(), id) != union_ids.end())
                anchors.push_back(id);
        }
        std::shuffle(pool.begin(), pool.end(), rng);
        std::size_t k = std::uniform_int_distribution<std::size_t>(1, std::min<std::size_t>(24, pool.size()))(rng);
        s.suites.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k));
        bool anchored = std::any_of(s.suites.begin(), s.suites.end(), [&](SuiteId id) {
            return std::find(anchors.begin(), anchors.end(), id) != anchors.end();
        });
        if (!anchored) {
            SuiteId a = pick(anchors);
            s.suites.insert(s.suites.begin() + static_cast<std::ptrdiff_t>(
                                                   std::uniform_int_distribution<std::size_t>(0, s.suites.size())(rng)),
                            a);
        }
        for (auto it = s.versions.begin(); it != s.versions.end();) {
            ProtocolVersion v = *it;
            auto usable = [&](SuiteId id) { return db.at(id).usable_at(v); };
            if (v == ProtocolVersion::SSLv2 || v == ProtocolVersion::TLS1_3 ||
                std::any_of(s.suites.begin(), s.suites.end(), usable)) {
                ++it;
                continue;
            }
            auto extra = std::find_if(pool.begin(), pool.end(), [&](SuiteId id) {
                return usable(id) && std::find(s.suites.begin(), s.suites.end(), id) == s.suites.end();
            });
            if (extra != pool.end()) {
                s.suites.push_back(*extra);
                ++it;
            } else {
                it = s.versions.erase(it);
            }
        }
        bool dhe = std::any_of(s.suites.begin(), s.suites.end(), [&](SuiteId id) { return db.at(id).kex == Kex::DHE; });
        if (dhe) {
            if (chance(0.5))
                s.ffdhe_prime = pick(named_primes);
            else
                s.ffdhe_prime = to_hex(tls::deterministic_prime(pick(generated_bits), rng()));
        }
        s.server_preference = chance(0.5);
        s.session_id_cache = chance(0.5);
        if (chance(0.5))
            s.tickets = pick(hints);
        s.compression = chance(0.2);
        double hb = std::uniform_real_distribution<double>(0, 1)(rng);
        s.heartbeat = hb < 0.6 ? HeartbeatMode::OFF : hb < 0.85 ? HeartbeatMode::PATCHED : HeartbeatMode::VULNERABLE;
        if (chance(0.8))
            s.server_header = pick(headers);
        s.extensions.clear();
        for (auto e : optional_exts)
            if (chance(0.5))
                s.extensions.insert(e);
        validate(s, db);
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<DefaultConfig> load_defaults(const std::filesystem::path& dir, const CipherDb& db)
{
    std::vector<DefaultConfig> out;
    for (const auto& spec : load_fixture_corpus(dir, db)) {
        DefaultConfig d;
        d.name = spec.name;
        if (!spec.meta.contains("profile"))
            throw ValidationError("default '" + spec.name + "' has no meta.profile");
        d.profile = spec.meta["profile"].get<std::string>();
        if (spec.meta.contains("expected_grade"))
            d.expected_grade = parse_grade(spec.meta["expected_grade"].get<std::string>());
        d.config = projection(spec, db);
        out.push_back(std::move(d));
    }
    return out;
}

nlohmann::json to_json(const CaptureEntry& e)
{
    nlohmann::json j;
    j["connection"] = e.connection;
    j["sslv2_hello"] = e.sslv2_hello;
    j["client_version"] = e.client_version ? nlohmann::json(fmt::format("0x{:04X}", *e.client_version))
                                           : nlohmann::json(nullptr);
    auto& suites = j["suites"] = nlohmann::json::array();
    for (auto id : e.suites)
        suites.push_back(format_suite_id(id));
    j["compression"] = e.compression;
    j["extensions"] = e.extensions;
    j["result"] = e.result;
    return j;
}

} // namespace tlsaudit
