// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tlsaudit Authors

#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>

namespace tlsaudit {

// Ordered oldest to newest so relational operators mean "older than".
enum class ProtocolVersion : std::uint8_t { SSLv2, SSLv3, TLS1_0, TLS1_1, TLS1_2, TLS1_3 };

using VersionSet = std::set<ProtocolVersion>;

std::string_view to_string(ProtocolVersion v);
// Accepts "TLS1.2" style names. Throws ParseError otherwise.
ProtocolVersion parse_version(std::string_view s);
std::optional<ProtocolVersion> try_parse_version(std::string_view s);

// Record-layer code (0x0303 for TLS 1.2). SSLv2 maps to 0x0002.
std::uint16_t wire_code(ProtocolVersion v);
std::optional<ProtocolVersion> from_wire_code(std::uint16_t code);

inline constexpr ProtocolVersion all_versions[] = {
    ProtocolVersion::SSLv2, ProtocolVersion::SSLv3, ProtocolVersion::TLS1_0,
    ProtocolVersion::TLS1_1, ProtocolVersion::TLS1_2, ProtocolVersion::TLS1_3,
};

// The ClientHello extensions the scanner knows how to offer.
enum class Extension : std::uint8_t {
    server_name,
    heartbeat,
    session_ticket,
    alpn,
    status_request,
    renegotiation_info,
    extended_master_secret,
    signed_certificate_timestamp,
    supported_versions,
};

using ExtensionSet = std::set<Extension>;

std::string_view to_string(Extension e);
Extension parse_extension(std::string_view s);
std::uint16_t wire_code(Extension e);
std::optional<Extension> extension_from_wire(std::uint16_t code);

inline constexpr Extension all_extensions[] = {
    Extension::server_name, Extension::heartbeat, Extension::session_ticket,
    Extension::alpn, Extension::status_request, Extension::renegotiation_info,
    Extension::extended_master_secret, Extension::signed_certificate_timestamp,
    Extension::supported_versions,
};

enum class CertSigAlg : std::uint8_t { RSA, ECDSA, OTHER };

std::string_view to_string(CertSigAlg a);
CertSigAlg parse_cert_sig_alg(std::string_view s);

std::string format_suite_id(std::uint16_t id);
// "0xC02F" or "C02F", case-insensitive. Throws ParseError.
std::uint16_t parse_suite_id(std::string_view s);

} // namespace tlsaudit
