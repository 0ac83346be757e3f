// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tlsaudit Authors

#include "tlsaudit/version.hpp"

#include "tlsaudit/error.hpp"

#include <array>
#include <charconv>
#include <fmt/format.h>

namespace tlsaudit {

namespace {

constexpr std::array<std::string_view, 6> version_names = {
    "SSLv2", "SSLv3", "TLS1.0", "TLS1.1", "TLS1.2", "TLS1.3"};

constexpr std::array<std::string_view, 9> extension_names = {
    "server_name",        "heartbeat",
    "session_ticket",     "alpn",
    "status_request",     "renegotiation_info",
    "extended_master_secret", "signed_certificate_timestamp",
    "supported_versions",
};

constexpr std::array<std::uint16_t, 9> extension_codes = {0, 15, 35, 16, 5, 0xff01, 23, 18, 43};

} // namespace

std::string_view to_string(ProtocolVersion v)
{
    return version_names[static_cast<std::size_t>(v)];
}

std::optional<ProtocolVersion> try_parse_version(std::string_view s)
{
    for (std::size_t i = 0; i < version_names.size(); ++i)
        if (version_names[i] == s)
            return static_cast<ProtocolVersion>(i);
    return std::nullopt;
}

ProtocolVersion parse_version(std::string_view s)
{
    if (auto v = try_parse_version(s))
        return *v;
    throw ParseError(fmt::format("unknown protocol version '{}'", s));
}

std::uint16_t wire_code(ProtocolVersion v)
{
    switch (v) {
    case ProtocolVersion::SSLv2: return 0x0002;
    case ProtocolVersion::SSLv3: return 0x0300;
    case ProtocolVersion::TLS1_0: return 0x0301;
    case ProtocolVersion::TLS1_1: return 0x0302;
    case ProtocolVersion::TLS1_2: return 0x0303;
    case ProtocolVersion::TLS1_3: return 0x0304;
    }
    return 0;
}

std::optional<ProtocolVersion> from_wire_code(std::uint16_t code)
{
    for (auto v : all_versions)
        if (wire_code(v) == code)
            return v;
    return std::nullopt;
}

std::string_view to_string(Extension e)
{
    return extension_names[static_cast<std::size_t>(e)];
}

Extension parse_extension(std::string_view s)
{
    for (std::size_t i = 0; i < extension_names.size(); ++i)
        if (extension_names[i] == s)
            return static_cast<Extension>(i);
    throw ParseError(fmt::format("unknown extension '{}'", s));
}

std::uint16_t wire_code(Extension e)
{
    return extension_codes[static_cast<std::size_t>(e)];
}

std::optional<Extension> extension_from_wire(std::uint16_t code)
{
    for (std::size_t i = 0; i < extension_codes.size(); ++i)
        if (extension_codes[i] == code)
            return static_cast<Extension>(i);
    return std::nullopt;
}

std::string_view to_string(CertSigAlg a)
{
    switch (a) {
    case CertSigAlg::RSA: return "RSA";
    case CertSigAlg::ECDSA: return "ECDSA";
    case CertSigAlg::OTHER: return "OTHER";
    }
    return "OTHER";
}

CertSigAlg parse_cert_sig_alg(std::string_view s)
{
    if (s == "RSA")
        return CertSigAlg::RSA;
    if (s == "ECDSA")
        return CertSigAlg::ECDSA;
    if (s == "OTHER")
        return CertSigAlg::OTHER;
    throw ParseError(fmt::format("unknown certificate algorithm '{}'", s));
}

std::string format_suite_id(std::uint16_t id)
{
    return fmt::format("0x{:04X}", id);
}

std::uint16_t parse_suite_id(std::string_view s)
{
    std::string_view digits = s;
    if (digits.size() > 2 && digits[0] == '0' && (digits[1] == 'x' || digits[1] == 'X'))
        digits.remove_prefix(2);
    unsigned value = 0;
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value, 16);
    if (digits.empty() || ec != std::errc() || ptr != digits.data() + digits.size() || value > 0xFFFF)
        throw ParseError(fmt::format("bad suite id '{}'", s));
    return static_cast<std::uint16_t>(value);
}

} // namespace tlsaudit
