// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tlsaudit Authors

#pragma once

#include "tlsaudit/configuration.hpp"
#include "tlsaudit/handshake.hpp"

#include "json.hpp"

#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace tlsaudit {

struct ProbePolicy {
    net::Millis timeout{5000};
    // Pause before each handshake after the first, drawn uniformly.
    net::Millis delay_min{0};
    net::Millis delay_max{2000};
    std::size_t max_concurrency = 8;
    // Extra attempts after a TCP failure or timeout.
    int retry = 1;
    std::uint64_t seed = 1;

    void validate() const;
};

// Unknown keys are rejected. Accepts timeout_ms, delay_min_ms, delay_max_ms,
// max_concurrency, retry, seed.
ProbePolicy probe_policy_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ProbePolicy& p);

// Probe steps, in execution order.
enum class ProbeStep : std::uint8_t {
    BASELINE, HTTP, VERSION_WALK, SSLV2, TLS13, ENUMERATION, PREFERENCE, EXTENSIONS, HEARTBLEED,
    COMPRESSION, SESSION_ID, TICKET
};
std::string_view to_string(ProbeStep s);

struct TraceEntry {
    ProbeStep step = ProbeStep::BASELINE;
    nlohmann::json offer;
    nlohmann::json outcome;
    double elapsed_ms = 0;
    int attempt = 1;
    std::string annotation;
};

struct ProbeTrace {
    std::vector<TraceEntry> entries;
    std::size_t handshake_count = 0;
    double wall_ms = 0;
    std::vector<std::string> retries;
    // Steps aborted by transport failures after the retry budget.
    std::set<ProbeStep> failed_steps;

    bool partial() const { return !failed_steps.empty(); }
};

nlohmann::json to_json(const ProbeTrace& t);

struct BaselineResult {
    bool eligible = false;
    std::optional<CertSigAlg> cert_sig_alg;
    HandshakeOutcome outcome;
    std::optional<HttpResult> http;
    std::string reason;
};

struct ResumptionResult {
    bool session_id_resumption = false;
    bool session_tickets = false;
    std::optional<long> ticket_lifetime_hint_s;
};

enum class ProbeStatus : std::uint8_t { COMPLETE, PARTIAL, SKIPPED, UNGRADEABLE };
std::string_view to_string(ProbeStatus s);
ProbeStatus parse_probe_status(std::string_view s);

struct SiteProbe {
    ProbeStatus status = ProbeStatus::SKIPPED;
    BaselineResult baseline;
    Configuration configuration;
    ProbeTrace trace;
};

// Runs the individual measurements against one target. Each call appends to
// the trace. Handshakes are strictly sequential.
class Prober {
public:
    Prober(Target target, ProbePolicy policy, const CipherDb& db);

    BaselineResult baseline_probe();
    // Requires an eligible baseline.
    VersionSet version_walk(const BaselineResult& baseline);
    // Suites selected by the server, in elimination order.
    std::vector<SuiteId> enumerate_ciphers(CertSigAlg cert, ProtocolVersion max_version);
    bool detect_server_preference(const SuiteSet& supported, ProtocolVersion max_version);
    // Acknowledged extensions; heartbleed_vulnerable is set when a heartbeat
    // ack led to a positive probe.
    ExtensionSet probe_extensions(CertSigAlg cert, ProtocolVersion max_version, bool& heartbleed_vulnerable);
    bool probe_compression(CertSigAlg cert, ProtocolVersion max_version);
    ResumptionResult probe_resumption();

    const ProbeTrace& trace() const { return trace_; }
    ProbeTrace take_trace();
    // Smallest DHE prime seen in any ServerKeyExchange so far.
    const std::optional<Bytes>& smallest_dh_prime() const { return dh_prime_; }

private:
    HandshakeOutcome run(ProbeStep step, const HandshakeOffer& offer);
    HandshakeOutcome run_resume(ProbeStep step, const SessionArtifacts& a, ResumeMethod m,
                                const HandshakeOffer& base);
    HandshakeOutcome with_retry(ProbeStep step, const nlohmann::json& offer_json,
                                const std::function<HandshakeOutcome()>& once);
    void pace();
    void observe(const HandshakeOutcome& o);
    HandshakeOffer base_offer(ProtocolVersion max_version) const;

    Target target_;
    ProbePolicy policy_;
    const CipherDb& db_;
    ProbeTrace trace_;
    std::mt19937_64 rng_;
    std::optional<Bytes> dh_prime_;
    net::Clock::time_point started_;
};

// Full measurement for one site.
SiteProbe probe_site(const Target& target, const ProbePolicy& policy, const CipherDb& db);

} // namespace tlsaudit
