// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tlsaudit Authors

#include "tlsaudit/probe.hpp"

#include "tlsaudit/dh_groups.hpp"
#include "tlsaudit/error.hpp"
#include "tlsaudit/tls_crypto.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <functional>
#include <thread>

namespace tlsaudit {

namespace {

bool transport_failure(HandshakeStatus s)
{
    return s == HandshakeStatus::TCP_FAILURE || s == HandshakeStatus::TIMEOUT;
}

double ms_since(net::Clock::time_point t)
{
    return std::chrono::duration<double, std::milli>(net::Clock::now() - t).count();
}

const ExtensionSet minimal_extensions = {Extension::server_name, Extension::renegotiation_info};

// Steps whose loss leaves a grading input unknown.
const std::set<ProbeStep> grading_steps = {
    ProbeStep::VERSION_WALK, ProbeStep::SSLV2,      ProbeStep::ENUMERATION, ProbeStep::PREFERENCE,
    ProbeStep::EXTENSIONS,   ProbeStep::HEARTBLEED, ProbeStep::COMPRESSION, ProbeStep::TICKET,
};

nlohmann::json special_json(const SpecialProbeOutcome& o)
{
    return {{"supported", o.supported}, {"status", to_string(o.status)}, {"annotation", o.annotation}};
}

} // namespace

void ProbePolicy::validate() const
{
    if (timeout.count() <= 0)
        throw ValidationError("timeout_ms must be positive");
    if (delay_min.count() < 0 || delay_max < delay_min)
        throw ValidationError("delay range must satisfy 0 <= delay_min_ms <= delay_max_ms");
    if (max_concurrency == 0)
        throw ValidationError("max_concurrency must be at least 1");
    if (retry < 0)
        throw ValidationError("retry must be non-negative");
}

ProbePolicy probe_policy_from_json(const nlohmann::json& j)
{
    static const std::set<std::string> known = {"timeout_ms", "delay_min_ms", "delay_max_ms",
                                                "max_concurrency", "retry", "seed"};
    if (!j.is_object())
        throw ValidationError("probe policy must be a JSON object");
    for (const auto& [k, v] : j.items())
        if (!known.count(k))
            throw ValidationError("unknown policy field '" + k + "'");
    ProbePolicy p;
    try {
        p.timeout = net::Millis(j.value("timeout_ms", p.timeout.count()));
        p.delay_min = net::Millis(j.value("delay_min_ms", p.delay_min.count()));
        p.delay_max = net::Millis(j.value("delay_max_ms", p.delay_max.count()));
        p.max_concurrency = j.value("max_concurrency", p.max_concurrency);
        p.retry = j.value("retry", p.retry);
        p.seed = j.value("seed", p.seed);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("bad policy value: ") + e.what());
    }
    p.validate();
    return p;
}

nlohmann::json to_json(const ProbePolicy& p)
{
    return {{"timeout_ms", p.timeout.count()},     {"delay_min_ms", p.delay_min.count()},
            {"delay_max_ms", p.delay_max.count()}, {"max_concurrency", p.max_concurrency},
            {"retry", p.retry},                    {"seed", p.seed}};
}

std::string_view to_string(ProbeStep s)
{
    switch (s) {
    case ProbeStep::BASELINE: return "baseline";
    case ProbeStep::HTTP: return "http";
    case ProbeStep::VERSION_WALK: return "version_walk";
    case ProbeStep::SSLV2: return "sslv2";
    case ProbeStep::TLS13: return "tls13";
    case ProbeStep::ENUMERATION: return "enumeration";
    case ProbeStep::PREFERENCE: return "preference";
    case ProbeStep::EXTENSIONS: return "extensions";
    case ProbeStep::HEARTBLEED: return "heartbleed";
    case ProbeStep::COMPRESSION: return "compression";
    case ProbeStep::SESSION_ID: return "session_id";
    case ProbeStep::TICKET: return "ticket";
    }
    return "?";
}

std::string_view to_string(ProbeStatus s)
{
    switch (s) {
    case ProbeStatus::COMPLETE: return "complete";
    case ProbeStatus::PARTIAL: return "partial";
    case ProbeStatus::SKIPPED: return "skipped";
    case ProbeStatus::UNGRADEABLE: return "ungradeable";
    }
    return "?";
}

ProbeStatus parse_probe_status(std::string_view s)
{
    for (auto v : {ProbeStatus::COMPLETE, ProbeStatus::PARTIAL, ProbeStatus::SKIPPED, ProbeStatus::UNGRADEABLE})
        if (to_string(v) == s)
            return v;
    throw ParseError("unknown probe status '" + std::string(s) + "'");
}

nlohmann::json to_json(const ProbeTrace& t)
{
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& e : t.entries)
        entries.push_back({{"step", to_string(e.step)},
                           {"attempt", e.attempt},
                           {"elapsed_ms", e.elapsed_ms},
                           {"offer", e.offer},
                           {"outcome", e.outcome},
                           {"annotation", e.annotation}});
    nlohmann::json failed = nlohmann::json::array();
    for (auto s : t.failed_steps)
        failed.push_back(to_string(s));
    return {{"handshake_count", t.handshake_count}, {"wall_ms", t.wall_ms}, {"retries", t.retries},
            {"partial", t.partial()},               {"failed_steps", failed}, {"entries", entries}};
}

Prober::Prober(Target target, ProbePolicy policy, const CipherDb& db)
    : target_(std::move(target)), policy_(policy), db_(db), started_(net::Clock::now())
{
    policy_.validate();
    std::seed_seq seq{policy_.seed, static_cast<std::uint64_t>(std::hash<std::string>{}(target_.host)),
                      static_cast<std::uint64_t>(target_.port)};
    rng_.seed(seq);
}

ProbeTrace Prober::take_trace()
{
    trace_.wall_ms = ms_since(started_);
    return std::move(trace_);
}

void Prober::pace()
{
    if (trace_.handshake_count == 0 || policy_.delay_max.count() == 0)
        return;
    std::uniform_int_distribution<long> d(policy_.delay_min.count(), policy_.delay_max.count());
    std::this_thread::sleep_for(net::Millis(d(rng_)));
}

void Prober::observe(const HandshakeOutcome& o)
{
    if (!o.server_key_exchange ||
        o.server_key_exchange->group_kind != ServerKeyExchangeInfo::GroupKind::FFDHE)
        return;
    const Bytes& p = o.server_key_exchange->dh_prime_bytes;
    if (!dh_prime_ || bit_length(p) < bit_length(*dh_prime_))
        dh_prime_ = p;
}

HandshakeOutcome Prober::with_retry(ProbeStep step, const nlohmann::json& offer_json,
                                    const std::function<HandshakeOutcome()>& once)
{
    HandshakeOutcome out;
    for (int attempt = 1; attempt <= policy_.retry + 1; ++attempt) {
        pace();
        auto t0 = net::Clock::now();
        out = once();
        ++trace_.handshake_count;
        observe(out);
        trace_.entries.push_back({step, offer_json, to_json(out), ms_since(t0), attempt, out.error});
        if (!transport_failure(out.status))
            return out;
        if (attempt <= policy_.retry)
            trace_.retries.push_back(std::string(to_string(step)) + ": " + std::string(to_string(out.status)) +
                                     ", retrying");
    }
    return out;
}

HandshakeOutcome Prober::run(ProbeStep step, const HandshakeOffer& offer)
{
    return with_retry(step, to_json(offer), [&] { return handshake(target_, offer, policy_.timeout, db_); });
}

HandshakeOutcome Prober::run_resume(ProbeStep step, const SessionArtifacts& a, ResumeMethod m,
                                    const HandshakeOffer& base)
{
    auto j = to_json(base);
    j["resume_method"] = m == ResumeMethod::TICKET ? "ticket" : "session_id";
    return with_retry(step, j, [&] { return resume(target_, a, m, base, policy_.timeout, db_); });
}

HandshakeOffer Prober::base_offer(ProtocolVersion max_version) const
{
    HandshakeOffer o;
    o.max_version = max_version;
    o.extensions = max_version == ProtocolVersion::SSLv3 ? ExtensionSet{} : minimal_extensions;
    o.sni_name = target_.sni;
    return o;
}

BaselineResult Prober::baseline_probe()
{
    BaselineResult r;
    HandshakeOffer offer = base_offer(ProtocolVersion::TLS1_2);
    offer.suites = browser_union(db_);
    r.outcome = run(ProbeStep::BASELINE, offer);
    if (!r.outcome.negotiated()) {
        r.reason = "baseline handshake failed: " + std::string(to_string(r.outcome.status));
        if (transport_failure(r.outcome.status))
            trace_.failed_steps.insert(ProbeStep::BASELINE);
        return r;
    }
    r.cert_sig_alg = r.outcome.certificate_sig_alg;
    auto get = with_retry(ProbeStep::HTTP, {{"request", "GET /"}},
                          [&] { return http_get_over_tls(target_, policy_.timeout, db_); });
    if (!get.http) {
        r.reason = "GET / failed: " + (get.http_error ? *get.http_error : get.error);
        if (transport_failure(get.status))
            trace_.failed_steps.insert(ProbeStep::HTTP);
        return r;
    }
    r.http = get.http;
    r.eligible = r.cert_sig_alg.has_value() && *r.cert_sig_alg != CertSigAlg::OTHER;
    if (!r.eligible)
        r.reason = "certificate key type is neither RSA nor ECDSA";
    return r;
}

VersionSet Prober::version_walk(const BaselineResult& baseline)
{
    if (!baseline.eligible || !baseline.outcome.selected_version)
        throw PreconditionError("version walk requires an eligible baseline");
    VersionSet found = {*baseline.outcome.selected_version};
    ProtocolVersion last = *baseline.outcome.selected_version;
    const auto suites = engine_offer(db_, *baseline.cert_sig_alg);
    while (last > ProtocolVersion::SSLv3) {
        auto next = static_cast<ProtocolVersion>(static_cast<int>(last) - 1);
        HandshakeOffer offer = base_offer(next);
        offer.suites = suites;
        auto out = run(ProbeStep::VERSION_WALK, offer);
        if (!out.negotiated() || !out.selected_version || *out.selected_version >= last) {
            if (transport_failure(out.status))
                trace_.failed_steps.insert(ProbeStep::VERSION_WALK);
            break;
        }
        last = *out.selected_version;
        found.insert(last);
    }

    auto special = [&](ProbeStep step, auto fn) {
        SpecialProbeOutcome o;
        for (int attempt = 1; attempt <= policy_.retry + 1; ++attempt) {
            pace();
            auto t0 = net::Clock::now();
            o = fn();
            ++trace_.handshake_count;
            trace_.entries.push_back({step, {{"probe", to_string(step)}}, special_json(o), ms_since(t0), attempt,
                                      o.annotation});
            if (!transport_failure(o.status))
                break;
            if (attempt <= policy_.retry)
                trace_.retries.push_back(std::string(to_string(step)) + ": retrying");
        }
        if (transport_failure(o.status))
            trace_.failed_steps.insert(step);
        return o.supported;
    };
    if (special(ProbeStep::SSLV2, [&] { return sslv2_probe(target_, policy_.timeout); }))
        found.insert(ProtocolVersion::SSLv2);
    if (special(ProbeStep::TLS13, [&] { return tls13_probe(target_, policy_.timeout); }))
        found.insert(ProtocolVersion::TLS1_3);
    return found;
}

std::vector<SuiteId> Prober::enumerate_ciphers(CertSigAlg cert, ProtocolVersion max_version)
{
    std::vector<SuiteId> selected;
    HandshakeOffer offer = base_offer(max_version);
    offer.suites = engine_offer(db_, cert);
    while (!offer.suites.empty()) {
        auto out = run(ProbeStep::ENUMERATION, offer);
        if (!out.negotiated() || !out.selected_suite) {
            if (transport_failure(out.status))
                trace_.failed_steps.insert(ProbeStep::ENUMERATION);
            break;
        }
        auto it = std::find(offer.suites.begin(), offer.suites.end(), *out.selected_suite);
        if (it == offer.suites.end())
            break; // rejected by the engine already; defensive
        selected.push_back(*it);
        offer.suites.erase(it);
    }
    return selected;
}

bool Prober::detect_server_preference(const SuiteSet& supported, ProtocolVersion max_version)
{
    HandshakeOffer offer = base_offer(max_version);
    offer.suites = preference_order(db_, supported);
    if (offer.suites.empty())
        return false;
    auto forward = run(ProbeStep::PREFERENCE, offer);
    std::reverse(offer.suites.begin(), offer.suites.end());
    auto backward = run(ProbeStep::PREFERENCE, offer);
    if (transport_failure(forward.status) || transport_failure(backward.status))
        trace_.failed_steps.insert(ProbeStep::PREFERENCE);
    return supported.size() > 1 && forward.selected_suite && backward.selected_suite &&
           *forward.selected_suite == *backward.selected_suite;
}

ExtensionSet Prober::probe_extensions(CertSigAlg cert, ProtocolVersion max_version, bool& heartbleed_vulnerable)
{
    heartbleed_vulnerable = false;
    HandshakeOffer offer = base_offer(max_version);
    offer.suites = engine_offer(db_, cert);
    for (auto e : all_extensions)
        if (e != Extension::supported_versions)
            offer.extensions.insert(e);
    auto out = run(ProbeStep::EXTENSIONS, offer);
    if (!out.negotiated()) {
        if (transport_failure(out.status))
            trace_.failed_steps.insert(ProbeStep::EXTENSIONS);
        return {};
    }
    if (out.acknowledged_extensions.count(Extension::heartbeat)) {
        HeartbleedOutcome hb;
        for (int attempt = 1; attempt <= policy_.retry + 1; ++attempt) {
            pace();
            auto t0 = net::Clock::now();
            hb = heartbleed_probe(target_, offer, out, policy_.timeout, db_);
            ++trace_.handshake_count;
            auto j = to_json(hb.handshake);
            j["heartbeat_acknowledged"] = hb.result.heartbeat_acknowledged;
            j["vulnerable"] = hb.result.vulnerable;
            j["evidence_len"] = hb.result.evidence_len;
            trace_.entries.push_back({ProbeStep::HEARTBLEED, to_json(offer), j, ms_since(t0), attempt,
                                      hb.annotation});
            if (!transport_failure(hb.handshake.status))
                break;
        }
        if (transport_failure(hb.handshake.status))
            trace_.failed_steps.insert(ProbeStep::HEARTBLEED);
        heartbleed_vulnerable = hb.result.vulnerable;
    }
    return out.acknowledged_extensions;
}

bool Prober::probe_compression(CertSigAlg cert, ProtocolVersion max_version)
{
    HandshakeOffer offer = base_offer(max_version);
    offer.suites = engine_offer(db_, cert);
    offer.compression = {Compression::DEFLATE, Compression::LZS, Compression::NULL_METHOD};
    auto out = run(ProbeStep::COMPRESSION, offer);
    if (transport_failure(out.status))
        trace_.failed_steps.insert(ProbeStep::COMPRESSION);
    return out.negotiated() && out.selected_compression && *out.selected_compression != 0;
}

ResumptionResult Prober::probe_resumption()
{
    ResumptionResult r;
    HandshakeOffer offer = modern_completion_offer(db_, target_.sni);
    offer.extensions.erase(Extension::session_ticket);

    auto full = run(ProbeStep::SESSION_ID, offer);
    if (full.completed && full.session_artifacts) {
        SessionArtifacts a = *full.session_artifacts;
        if (a.session_id.empty())
            a.session_id = tls::random_bytes(32);
        auto again = run_resume(ProbeStep::SESSION_ID, a, ResumeMethod::SESSION_ID, offer);
        r.session_id_resumption = again.resumed;
        if (transport_failure(again.status))
            trace_.failed_steps.insert(ProbeStep::SESSION_ID);
    } else if (transport_failure(full.status)) {
        trace_.failed_steps.insert(ProbeStep::SESSION_ID);
    }

    offer.extensions.insert(Extension::session_ticket);
    auto issue = run(ProbeStep::TICKET, offer);
    if (issue.completed && issue.session_artifacts && !issue.session_artifacts->ticket.empty()) {
        auto again = run_resume(ProbeStep::TICKET, *issue.session_artifacts, ResumeMethod::TICKET, offer);
        r.session_tickets = again.resumed;
        if (r.session_tickets)
            r.ticket_lifetime_hint_s = issue.session_artifacts->ticket_lifetime_hint_s;
        if (transport_failure(again.status))
            trace_.failed_steps.insert(ProbeStep::TICKET);
    } else if (transport_failure(issue.status)) {
        trace_.failed_steps.insert(ProbeStep::TICKET);
    }
    return r;
}

SiteProbe probe_site(const Target& target, const ProbePolicy& policy, const CipherDb& db)
{
    SiteProbe site;
    Prober p(target, policy, db);
    site.baseline = p.baseline_probe();
    if (!site.baseline.eligible) {
        site.status = ProbeStatus::SKIPPED;
        site.trace = p.take_trace();
        return site;
    }
    CertSigAlg cert = *site.baseline.cert_sig_alg;
    ProtocolVersion top = *site.baseline.outcome.selected_version;
    Configuration& c = site.configuration;
    c.cert_sig_alg = cert;
    c.versions = p.version_walk(site.baseline);

    auto order = p.enumerate_ciphers(cert, top);
    c.supported_suites = SuiteSet(order.begin(), order.end());
    if (!order.empty())
        c.preferred_suite = order.front();
    recompute_flags(c, db);
    c.server_preference = p.detect_server_preference(c.supported_suites, top);
    c.extensions = p.probe_extensions(cert, top, c.heartbleed_vulnerable);
    c.tls_compression = p.probe_compression(cert, top);
    auto res = p.probe_resumption();
    c.session_id_resumption = res.session_id_resumption;
    c.session_tickets = res.session_tickets;
    c.ticket_lifetime_hint_s = res.ticket_lifetime_hint_s;
    if (const auto& prime = p.smallest_dh_prime()) {
        c.dh_prime_bits = bit_length(*prime);
        c.dh_group_common = DhPrimeList::bundled().is_common(*prime);
    }

    site.trace = p.take_trace();
    bool lost_grading_input = std::any_of(site.trace.failed_steps.begin(), site.trace.failed_steps.end(),
                                          [](ProbeStep s) { return grading_steps.count(s) != 0; });
    if (lost_grading_input || c.supported_suites.empty())
        site.status = ProbeStatus::UNGRADEABLE;
    else
        site.status = site.trace.partial() ? ProbeStatus::PARTIAL : ProbeStatus::COMPLETE;
    spdlog::debug("probed {}:{} in {} handshakes ({})", target.host, target.port, site.trace.handshake_count,
                  to_string(site.status));
    return site;
}

} // namespace tlsaudit
