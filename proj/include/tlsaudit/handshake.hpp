// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tlsaudit Authors

#pragma once

#include "tlsaudit/cipher_registry.hpp"
#include "tlsaudit/net.hpp"
#include "tlsaudit/version.hpp"
#include "tlsaudit/wire.hpp"

#include "json.hpp"

#include <optional>
#include <string>
#include <vector>

namespace tlsaudit {

using wire::Bytes;

enum class HandshakeStatus : std::uint8_t { NEGOTIATED, TLS_ALERT, TCP_FAILURE, TIMEOUT, PROTOCOL_ERROR };
std::string_view to_string(HandshakeStatus s);
HandshakeStatus parse_handshake_status(std::string_view s);

enum class Compression : std::uint8_t { NULL_METHOD = 0, DEFLATE = 1, LZS = 64 };
std::string_view to_string(Compression c);
Compression parse_compression(std::string_view s);

enum class ResumeMethod : std::uint8_t { SESSION_ID, TICKET };

// State needed to resume a completed session.
struct SessionArtifacts {
    ProtocolVersion version = ProtocolVersion::TLS1_2;
    SuiteId suite = 0;
    Bytes session_id;
    Bytes ticket;
    std::optional<long> ticket_lifetime_hint_s;
    Bytes master_secret;
};

struct HandshakeOffer {
    ProtocolVersion max_version = ProtocolVersion::TLS1_2;
    ProtocolVersion min_version = ProtocolVersion::SSLv3;
    std::vector<SuiteId> suites;
    // Auditable extensions to send. SSLv3-maximum offers send none.
    ExtensionSet extensions;
    std::vector<Compression> compression = {Compression::NULL_METHOD};
    std::string sni_name;
    std::optional<SessionArtifacts> resumption;
    // Drive the handshake through Finished.
    bool complete = false;
    // Issue GET / after completing.
    bool http_get = false;

    // Throws PreconditionError.
    void validate() const;
};

struct ServerKeyExchangeInfo {
    enum class GroupKind : std::uint8_t { FFDHE, ECDHE };
    GroupKind group_kind = GroupKind::ECDHE;
    int dh_prime_bits = 0;
    Bytes dh_prime_bytes;
    std::optional<std::uint16_t> named_curve;
};

struct HttpResult {
    int status_code = 0;
    std::optional<std::string> server_header;
    std::string body_hash;
};

struct HandshakeOutcome {
    HandshakeStatus status = HandshakeStatus::PROTOCOL_ERROR;
    std::optional<ProtocolVersion> selected_version;
    std::optional<SuiteId> selected_suite;
    std::optional<std::uint8_t> selected_compression;
    ExtensionSet acknowledged_extensions;
    std::optional<CertSigAlg> certificate_sig_alg;
    std::optional<ServerKeyExchangeInfo> server_key_exchange;
    std::optional<SessionArtifacts> session_artifacts;
    bool resumed = false;
    bool completed = false;
    std::optional<std::uint8_t> alert;
    std::optional<HttpResult> http;
    std::optional<std::string> http_error;
    // Human-readable failure detail.
    std::string error;
    // First received bytes, hex, on protocol errors.
    std::string raw_hex;

    bool negotiated() const { return status == HandshakeStatus::NEGOTIATED; }
};

struct HeartbleedResult {
    bool heartbeat_acknowledged = false;
    bool vulnerable = false;
    std::size_t evidence_len = 0;
};

struct HeartbleedOutcome {
    HeartbleedResult result;
    HandshakeOutcome handshake;
    std::string annotation;
};

// Result of the SSLv2 and TLS 1.3 probes. supported=false with a non-empty
// annotation means absence of proof.
struct SpecialProbeOutcome {
    bool supported = false;
    HandshakeStatus status = HandshakeStatus::PROTOCOL_ERROR;
    std::string annotation;
};

struct Target {
    std::string host;
    std::uint16_t port = 443;
    std::string sni;
};

// One TCP connection, one ClientHello.
HandshakeOutcome handshake(const Target& target, const HandshakeOffer& offer, net::Millis timeout,
                           const CipherDb& db);

SpecialProbeOutcome sslv2_probe(const Target& target, net::Millis timeout);
SpecialProbeOutcome tls13_probe(const Target& target, net::Millis timeout);

// Requires prior.acknowledged_extensions to contain heartbeat (else throws
// PreconditionError). The offer gains the heartbeat extension.
HeartbleedOutcome heartbleed_probe(const Target& target, HandshakeOffer offer,
                                   const HandshakeOutcome& prior, net::Millis timeout,
                                   const CipherDb& db);

// Attempts an abbreviated handshake with the given artifacts. Garbage or
// rejected artifacts fall back to a full handshake with resumed=false.
HandshakeOutcome resume(const Target& target, const SessionArtifacts& artifacts, ResumeMethod method,
                        HandshakeOffer base, net::Millis timeout, const CipherDb& db);

// Completion-capable offer (every suite the engine can finish, in offer order).
HandshakeOffer modern_completion_offer(const CipherDb& db, const std::string& sni);

// GET / over a fresh completed connection.
HandshakeOutcome http_get_over_tls(const Target& target, net::Millis timeout, const CipherDb& db);

// SSLv2 cipher specs sent by the v2 probe.
const std::vector<std::uint32_t>& sslv2_probe_specs();

nlohmann::json to_json(const HandshakeOffer& o);
nlohmann::json to_json(const HandshakeOutcome& o);

} // namespace tlsaudit
