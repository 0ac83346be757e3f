// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tlsaudit Authors

#pragma once

#include "tlsaudit/net.hpp"
#include "tlsaudit/tls_crypto.hpp"
#include "tlsaudit/wire.hpp"

#include <memory>

namespace tlsaudit::detail {

using wire::Bytes;
using wire::ByteView;

class AlertReceived : public Error {
public:
    AlertReceived(std::uint8_t level, std::uint8_t desc)
        : Error("alert " + std::to_string(desc)), level(level), desc(desc) {}
    std::uint8_t level;
    std::uint8_t desc;
};

struct TlsEvent {
    enum Kind { HANDSHAKE, CHANGE_CIPHER_SPEC, ALERT, HEARTBEAT, APPLICATION_DATA } kind = HANDSHAKE;
    std::uint8_t hs_type = 0;
    // Handshake body, or the full record payload for other kinds.
    Bytes body;
    // Handshake header + body as it appears in the transcript.
    Bytes raw;
};

class RecordLayer {
public:
    RecordLayer(net::Socket& sock, net::Millis timeout) : sock_(sock), timeout_(timeout) {}

    std::uint16_t record_version = 0x0301;

    void set_read_cipher(std::unique_ptr<tls::RecordCipher> c) { read_cipher_ = std::move(c); }
    void set_write_cipher(std::unique_ptr<tls::RecordCipher> c) { write_cipher_ = std::move(c); }
    bool read_encrypted() const { return static_cast<bool>(read_cipher_); }

    void send(std::uint8_t type, ByteView payload);
    // Appends the encoded message to transcript when given.
    void send_handshake(std::uint8_t type, ByteView body, Bytes* transcript = nullptr);
    void send_alert(std::uint8_t desc, bool fatal = true);
    void send_raw(ByteView bytes);

    struct Record {
        std::uint8_t type = 0;
        std::uint16_t version = 0;
        Bytes fragment;
    };
    Record read_record();
    // Next message; handshake records are reassembled and split into
    // messages. Alerts raise AlertReceived.
    TlsEvent next();

    // Feeds bytes already consumed from the socket back in front of the stream.
    void unread(ByteView bytes) { pending_.insert(pending_.begin(), bytes.begin(), bytes.end()); }
    void read_bytes(std::uint8_t* buf, std::size_t n);
    net::Socket& socket() { return sock_; }
    net::Millis timeout() const { return timeout_; }
    // First bytes received, kept for protocol-error traces.
    const Bytes& received_prefix() const { return received_prefix_; }

private:
    net::Socket& sock_;
    net::Millis timeout_;
    std::unique_ptr<tls::RecordCipher> read_cipher_;
    std::unique_ptr<tls::RecordCipher> write_cipher_;
    Bytes hs_buffer_;
    Bytes pending_;
    Bytes received_prefix_;
};

} // namespace tlsaudit::detail
