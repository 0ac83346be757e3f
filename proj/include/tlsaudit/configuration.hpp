// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tlsaudit Authors

#pragma once

#include "tlsaudit/cipher_registry.hpp"
#include "tlsaudit/version.hpp"

#include "json.hpp"

#include <optional>
#include <set>

namespace tlsaudit {

enum class Component : std::uint8_t {
    DES, TRIPLE_DES, RC4, IDEA, SEED, CAMELLIA, ARIA, CHACHA, AES, AES_GCM,
    AEAD, CBC, MD5, SHA1, SHA256, SHA384, NULL_COMPONENT, EXPORT
};
using ComponentSet = std::set<Component>;

enum class KexFlag : std::uint8_t { RSA, DHE, ECDHE };
using KexSet = std::set<KexFlag>;

std::string_view to_string(Component c);
Component parse_component(std::string_view s);
std::string_view to_string(KexFlag k);
KexFlag parse_kex_flag(std::string_view s);

inline constexpr Component all_components[] = {
    Component::DES, Component::TRIPLE_DES, Component::RC4, Component::IDEA, Component::SEED,
    Component::CAMELLIA, Component::ARIA, Component::CHACHA, Component::AES, Component::AES_GCM,
    Component::AEAD, Component::CBC, Component::MD5, Component::SHA1, Component::SHA256,
    Component::SHA384, Component::NULL_COMPONENT, Component::EXPORT,
};

// Component flags contributed by one suite.
ComponentSet components_of(const CipherSuiteInfo& s);

// The user-configurable TLS posture of one server.
struct Configuration {
    VersionSet versions;
    SuiteSet supported_suites;
    // Derived from supported_suites; see recompute_flags().
    ComponentSet component_flags;
    KexSet kex_flags;
    std::optional<int> dh_prime_bits;
    std::optional<bool> dh_group_common;
    bool server_preference = false;
    std::optional<SuiteId> preferred_suite;
    bool session_id_resumption = false;
    bool session_tickets = false;
    std::optional<long> ticket_lifetime_hint_s;
    bool tls_compression = false;
    ExtensionSet extensions;
    bool heartbleed_vulnerable = false;
    CertSigAlg cert_sig_alg = CertSigAlg::RSA;

    bool has(Component c) const { return component_flags.count(c) != 0; }
    bool has(KexFlag k) const { return kex_flags.count(k) != 0; }
    bool has(ProtocolVersion v) const { return versions.count(v) != 0; }

    bool operator==(const Configuration&) const = default;
};

// Recomputes component_flags and kex_flags from supported_suites.
void recompute_flags(Configuration& c, const CipherDb& db);

// Throws ValidationError listing the first broken invariant.
void validate(const Configuration& c, const CipherDb& db);

nlohmann::json to_json(const Configuration& c);
// Flags in the JSON are ignored and recomputed from the suites; the result is
// validated against db.
Configuration configuration_from_json(const nlohmann::json& j, const CipherDb& db);

} // namespace tlsaudit
