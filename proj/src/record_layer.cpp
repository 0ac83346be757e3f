// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tlsaudit Authors

#include "record_layer.hpp"

#include <algorithm>
#include <cstring>

namespace tlsaudit::detail {

namespace {
constexpr std::size_t max_fragment = 16384;
constexpr std::size_t max_ciphertext = max_fragment + 2048;
constexpr std::size_t prefix_cap = 256;
} // namespace

void RecordLayer::send(std::uint8_t type, ByteView payload)
{
    std::size_t off = 0;
    do {
        std::size_t n = std::min(max_fragment, payload.size() - off);
        ByteView chunk = payload.subspan(off, n);
        Bytes frag = write_cipher_ ? write_cipher_->seal(type, chunk) : Bytes(chunk.begin(), chunk.end());
        send_raw(wire::record(type, record_version, frag));
        off += n;
    } while (off < payload.size());
}

void RecordLayer::send_handshake(std::uint8_t type, ByteView body, Bytes* transcript)
{
    Bytes msg = wire::handshake_message(type, body);
    if (transcript)
        transcript->insert(transcript->end(), msg.begin(), msg.end());
    send(wire::content::handshake, msg);
}

void RecordLayer::send_alert(std::uint8_t desc, bool fatal)
{
    std::uint8_t body[2] = {static_cast<std::uint8_t>(fatal ? 2 : 1), desc};
    send(wire::content::alert, body);
}

void RecordLayer::send_raw(ByteView bytes) { sock_.write_all(bytes, net::deadline_after(timeout_)); }

void RecordLayer::read_bytes(std::uint8_t* buf, std::size_t n)
{
    std::size_t from_pending = std::min(n, pending_.size());
    std::memcpy(buf, pending_.data(), from_pending);
    pending_.erase(pending_.begin(), pending_.begin() + static_cast<std::ptrdiff_t>(from_pending));
    if (from_pending < n)
        sock_.read_exact(buf + from_pending, n - from_pending, net::deadline_after(timeout_));
    std::size_t keep = std::min(n, prefix_cap - std::min(prefix_cap, received_prefix_.size()));
    received_prefix_.insert(received_prefix_.end(), buf, buf + keep);
}

RecordLayer::Record RecordLayer::read_record()
{
    std::uint8_t header[5];
    read_bytes(header, 5);
    Record r;
    r.type = header[0];
    r.version = static_cast<std::uint16_t>(header[1] << 8 | header[2]);
    std::size_t len = static_cast<std::size_t>(header[3] << 8 | header[4]);
    if (r.type < 20 || r.type > 24)
        throw wire::WireError("unknown record content type " + std::to_string(r.type));
    if ((header[1] != 3 && !(header[1] == 0 && header[2] == 2)) || len > max_ciphertext)
        throw wire::WireError("malformed record header");
    r.fragment.resize(len);
    if (len)
        read_bytes(r.fragment.data(), len);
    if (read_cipher_)
        r.fragment = read_cipher_->open(r.type, r.fragment);
    return r;
}

TlsEvent RecordLayer::next()
{
    for (;;) {
        if (hs_buffer_.size() >= 4) {
            std::size_t len = static_cast<std::size_t>(hs_buffer_[1]) << 16 |
                              static_cast<std::size_t>(hs_buffer_[2]) << 8 | hs_buffer_[3];
            if (hs_buffer_.size() >= 4 + len) {
                TlsEvent ev;
                ev.kind = TlsEvent::HANDSHAKE;
                ev.hs_type = hs_buffer_[0];
                ev.raw.assign(hs_buffer_.begin(), hs_buffer_.begin() + static_cast<std::ptrdiff_t>(4 + len));
                ev.body.assign(ev.raw.begin() + 4, ev.raw.end());
                hs_buffer_.erase(hs_buffer_.begin(), hs_buffer_.begin() + static_cast<std::ptrdiff_t>(4 + len));
                return ev;
            }
        }
        Record r = read_record();
        if (r.type == wire::content::handshake) {
            hs_buffer_.insert(hs_buffer_.end(), r.fragment.begin(), r.fragment.end());
            continue;
        }
        if (!hs_buffer_.empty())
            throw wire::WireError("record interleaved with a partial handshake message");
        if (r.type == wire::content::alert) {
            if (r.fragment.size() != 2)
                throw wire::WireError("malformed alert");
            throw AlertReceived(r.fragment[0], r.fragment[1]);
        }
        TlsEvent ev;
        ev.body = std::move(r.fragment);
        switch (r.type) {
        case wire::content::change_cipher_spec: ev.kind = TlsEvent::CHANGE_CIPHER_SPEC; break;
        case wire::content::heartbeat: ev.kind = TlsEvent::HEARTBEAT; break;
        default: ev.kind = TlsEvent::APPLICATION_DATA; break;
        }
        return ev;
    }
}

} // namespace tlsaudit::detail
