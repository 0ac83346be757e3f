// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tlsaudit Authors

#pragma once

#include "tlsaudit/error.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace tlsaudit::wire {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

class WireError : public Error {
public:
    using Error::Error;
};

namespace content {
inline constexpr std::uint8_t change_cipher_spec = 20;
inline constexpr std::uint8_t alert = 21;
inline constexpr std::uint8_t handshake = 22;
inline constexpr std::uint8_t application_data = 23;
inline constexpr std::uint8_t heartbeat = 24;
} // namespace content

namespace hs {
inline constexpr std::uint8_t client_hello = 1;
inline constexpr std::uint8_t server_hello = 2;
inline constexpr std::uint8_t new_session_ticket = 4;
inline constexpr std::uint8_t certificate = 11;
inline constexpr std::uint8_t server_key_exchange = 12;
inline constexpr std::uint8_t certificate_request = 13;
inline constexpr std::uint8_t server_hello_done = 14;
inline constexpr std::uint8_t client_key_exchange = 16;
inline constexpr std::uint8_t finished = 20;
} // namespace hs

namespace alert_desc {
inline constexpr std::uint8_t close_notify = 0;
inline constexpr std::uint8_t unexpected_message = 10;
inline constexpr std::uint8_t bad_record_mac = 20;
inline constexpr std::uint8_t handshake_failure = 40;
inline constexpr std::uint8_t illegal_parameter = 47;
inline constexpr std::uint8_t decode_error = 50;
inline constexpr std::uint8_t decrypt_error = 51;
inline constexpr std::uint8_t protocol_version = 70;
inline constexpr std::uint8_t internal_error = 80;
} // namespace alert_desc

namespace ext {
inline constexpr std::uint16_t server_name = 0;
inline constexpr std::uint16_t status_request = 5;
inline constexpr std::uint16_t supported_groups = 10;
inline constexpr std::uint16_t ec_point_formats = 11;
inline constexpr std::uint16_t signature_algorithms = 13;
inline constexpr std::uint16_t heartbeat = 15;
inline constexpr std::uint16_t alpn = 16;
inline constexpr std::uint16_t signed_certificate_timestamp = 18;
inline constexpr std::uint16_t extended_master_secret = 23;
inline constexpr std::uint16_t session_ticket = 35;
inline constexpr std::uint16_t supported_versions = 43;
inline constexpr std::uint16_t psk_key_exchange_modes = 45;
inline constexpr std::uint16_t key_share = 51;
inline constexpr std::uint16_t renegotiation_info = 0xff01;
} // namespace ext

namespace group {
inline constexpr std::uint16_t secp256r1 = 23;
inline constexpr std::uint16_t secp384r1 = 24;
inline constexpr std::uint16_t x25519 = 29;
} // namespace group

class Writer {
public:
    void u8(std::uint8_t v) { buf_.push_back(v); }
    void u16(std::uint16_t v);
    void u24(std::uint32_t v);
    void u32(std::uint32_t v);
    void bytes(ByteView b) { buf_.insert(buf_.end(), b.begin(), b.end()); }
    // Length-prefixed vectors: open with a prefix width, fill, close.
    std::size_t open(int prefix_bytes);
    void close(std::size_t mark);
    void vec8(ByteView b);
    void vec16(ByteView b);
    void vec24(ByteView b);
    const Bytes& data() const { return buf_; }
    Bytes take() { return std::move(buf_); }

private:
    Bytes buf_;
    std::vector<int> widths_;
};

class Reader {
public:
    explicit Reader(ByteView data) : data_(data) {}
    std::uint8_t u8();
    std::uint16_t u16();
    std::uint32_t u24();
    std::uint32_t u32();
    ByteView bytes(std::size_t n);
    ByteView vec8() { return bytes(u8()); }
    ByteView vec16() { return bytes(u16()); }
    ByteView vec24() { return bytes(u24()); }
    std::size_t remaining() const { return data_.size() - pos_; }
    bool empty() const { return remaining() == 0; }
    ByteView rest() { return bytes(remaining()); }

private:
    ByteView data_;
    std::size_t pos_ = 0;
};

struct ExtensionBlock {
    std::uint16_t type = 0;
    Bytes data;
    bool operator==(const ExtensionBlock&) const = default;
};

using Extensions = std::vector<ExtensionBlock>;
const ExtensionBlock* find_extension(const Extensions& exts, std::uint16_t type);

struct ClientHello {
    std::uint16_t version = 0x0303;
    Bytes random = Bytes(32);
    Bytes session_id;
    std::vector<std::uint16_t> suites;
    Bytes compression = {0};
    Extensions extensions;
    bool operator==(const ClientHello&) const = default;
};

struct ServerHello {
    std::uint16_t version = 0x0303;
    Bytes random = Bytes(32);
    Bytes session_id;
    std::uint16_t suite = 0;
    std::uint8_t compression = 0;
    Extensions extensions;
    bool operator==(const ServerHello&) const = default;
};

// Handshake bodies (without the 4-byte handshake header).
Bytes encode(const ClientHello& m);
Bytes encode(const ServerHello& m);
ClientHello decode_client_hello(ByteView body);
ServerHello decode_server_hello(ByteView body);

// 4-byte header plus body.
Bytes handshake_message(std::uint8_t type, ByteView body);
// 5-byte record header plus fragment.
Bytes record(std::uint8_t type, std::uint16_t version, ByteView fragment);

// SSLv2 CLIENT-HELLO (2-byte header form) with 3-byte cipher specs.
struct Sslv2ClientHello {
    std::uint16_t version = 0x0002;
    std::vector<std::uint32_t> cipher_specs;
    Bytes session_id;
    Bytes challenge = Bytes(16);
};

struct Sslv2ServerHello {
    bool session_id_hit = false;
    std::uint8_t certificate_type = 1;
    std::uint16_t version = 0x0002;
    Bytes certificate;
    std::vector<std::uint32_t> cipher_specs;
    Bytes connection_id;
};

Bytes encode(const Sslv2ClientHello& m);
Bytes encode(const Sslv2ServerHello& m);
// Parses a v2 message body (after the 2-byte record header).
Sslv2ClientHello decode_sslv2_client_hello(ByteView body);
Sslv2ServerHello decode_sslv2_server_hello(ByteView body);

std::string hex(ByteView b);

} // namespace tlsaudit::wire
