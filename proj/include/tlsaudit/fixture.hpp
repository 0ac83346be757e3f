// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tlsaudit Authors

#pragma once

#include "tlsaudit/configuration.hpp"
#include "tlsaudit/dh_groups.hpp"
#include "tlsaudit/recommendation.hpp"

#include "json.hpp"

#include <atomic>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace tlsaudit {

enum class HeartbeatMode : std::uint8_t { OFF, PATCHED, VULNERABLE };
std::string_view to_string(HeartbeatMode m);
HeartbeatMode parse_heartbeat_mode(std::string_view s);

// Prescribed behaviour of one local test endpoint.
struct FixtureSpec {
    std::string name;
    // May contain SSLv2 (emulated hello) and TLS1.3 (ServerHello-only).
    VersionSet versions;
    // Server preference order.
    std::vector<SuiteId> suites;
    bool server_preference = false;
    bool session_id_cache = false;
    // Ticket lifetime hint; nullopt disables tickets.
    std::optional<long> tickets;
    bool compression = false;
    // Bundled prime name or hex bytes; required when a DHE suite is listed.
    std::optional<std::string> ffdhe_prime;
    HeartbeatMode heartbeat = HeartbeatMode::OFF;
    std::optional<std::string> server_header;
    CertSigAlg cert_kind = CertSigAlg::RSA;
    bool sslv2_emulation = false;
    // Extensions acknowledged when offered. session_ticket and heartbeat
    // follow tickets and heartbeat instead.
    ExtensionSet extensions = {Extension::renegotiation_info};
    // false: the endpoint answers GET / with a non-HTTP banner.
    bool http = true;
    std::string notes;
    nlohmann::json meta = nlohmann::json::object();
};

// Throws ValidationError naming the first problem.
void validate(const FixtureSpec& spec, const CipherDb& db);
FixtureSpec fixture_spec_from_json(const nlohmann::json& j, const CipherDb& db);
nlohmann::json to_json(const FixtureSpec& spec);
FixtureSpec load_fixture_spec(const std::filesystem::path& path, const CipherDb& db);
// Every *.json in dir, sorted by file name.
std::vector<FixtureSpec> load_fixture_corpus(const std::filesystem::path& dir, const CipherDb& db);

// DH prime bytes selected by the spec (empty when none).
Bytes fixture_prime(const FixtureSpec& spec);

// Highest SSLv3..TLS1.2 version of the spec.
std::optional<ProtocolVersion> highest_legacy_version(const FixtureSpec& spec);

// Whether the scanner's baseline (browser-union handshake plus GET) passes.
bool expected_eligible(const FixtureSpec& spec, const CipherDb& db);

// The Configuration probe_site is expected to recover.
Configuration projection(const FixtureSpec& spec, const CipherDb& db);

// Seeded random specs, all eligible.
std::vector<FixtureSpec> random_specs(std::uint64_t seed, std::size_t count, const CipherDb& db);

// Bundled distribution defaults (FixtureSpec files whose meta carries
// "profile" and optionally "expected_grade"), projected to Configurations.
std::vector<DefaultConfig> load_defaults(const std::filesystem::path& dir, const CipherDb& db);

struct CaptureEntry {
    std::size_t connection = 0;
    bool sslv2_hello = false;
    std::optional<std::uint16_t> client_version;
    std::vector<SuiteId> suites;
    std::vector<std::uint8_t> compression;
    std::vector<std::uint16_t> extensions;
    std::string result;
};
nlohmann::json to_json(const CaptureEntry& e);

class FixtureServer {
public:
    // Listens on 127.0.0.1 with an ephemeral port. When capture_path is set
    // every connection is also appended there as a JSON line.
    static std::unique_ptr<FixtureServer> spawn(const FixtureSpec& spec, const CipherDb& db,
                                                std::optional<std::filesystem::path> capture_path = std::nullopt);
    ~FixtureServer();
    FixtureServer(const FixtureServer&) = delete;
    FixtureServer& operator=(const FixtureServer&) = delete;

    std::string host() const { return "127.0.0.1"; }
    std::uint16_t port() const;
    const FixtureSpec& spec() const;
    // Idempotent.
    void stop();
    std::size_t connection_count() const;
    std::vector<CaptureEntry> capture() const;

    struct Impl;

private:
    explicit FixtureServer(std::unique_ptr<Impl> impl);
    std::unique_ptr<Impl> impl_;
};

} // namespace tlsaudit
