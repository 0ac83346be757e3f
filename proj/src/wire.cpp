// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tlsaudit Authors

#include "tlsaudit/wire.hpp"

#include <fmt/format.h>

namespace tlsaudit::wire {

void Writer::u16(std::uint16_t v)
{
    u8(static_cast<std::uint8_t>(v >> 8));
    u8(static_cast<std::uint8_t>(v));
}

void Writer::u24(std::uint32_t v)
{
    u8(static_cast<std::uint8_t>(v >> 16));
    u16(static_cast<std::uint16_t>(v));
}

void Writer::u32(std::uint32_t v)
{
    u16(static_cast<std::uint16_t>(v >> 16));
    u16(static_cast<std::uint16_t>(v));
}

std::size_t Writer::open(int prefix_bytes)
{
    std::size_t mark = buf_.size();
    buf_.insert(buf_.end(), static_cast<std::size_t>(prefix_bytes), 0);
    widths_.push_back(prefix_bytes);
    return mark;
}

void Writer::close(std::size_t mark)
{
    int width = widths_.back();
    widths_.pop_back();
    std::size_t len = buf_.size() - mark - static_cast<std::size_t>(width);
    if (len >= (std::size_t{1} << (8 * width)))
        throw WireError("vector too long for its length prefix");
    for (int i = 0; i < width; ++i)
        buf_[mark + static_cast<std::size_t>(i)] =
            static_cast<std::uint8_t>(len >> (8 * (width - 1 - i)));
}

void Writer::vec8(ByteView b)
{
    auto m = open(1);
    bytes(b);
    close(m);
}

void Writer::vec16(ByteView b)
{
    auto m = open(2);
    bytes(b);
    close(m);
}

void Writer::vec24(ByteView b)
{
    auto m = open(3);
    bytes(b);
    close(m);
}

std::uint8_t Reader::u8()
{
    if (remaining() < 1)
        throw WireError("truncated message");
    return data_[pos_++];
}

std::uint16_t Reader::u16()
{
    std::uint16_t hi = u8();
    return static_cast<std::uint16_t>(hi << 8 | u8());
}

std::uint32_t Reader::u24()
{
    std::uint32_t hi = u8();
    return hi << 16 | u16();
}

std::uint32_t Reader::u32()
{
    std::uint32_t hi = u16();
    return hi << 16 | u16();
}

ByteView Reader::bytes(std::size_t n)
{
    if (remaining() < n)
        throw WireError("truncated message");
    ByteView out = data_.subspan(pos_, n);
    pos_ += n;
    return out;
}

const ExtensionBlock* find_extension(const Extensions& exts, std::uint16_t type)
{
    for (const auto& e : exts)
        if (e.type == type)
            return &e;
    return nullptr;
}

namespace {

void write_extensions(Writer& w, const Extensions& exts)
{
    auto m = w.open(2);
    for (const auto& e : exts) {
        w.u16(e.type);
        w.vec16(e.data);
    }
    w.close(m);
}

Extensions read_extensions(Reader& r)
{
    Extensions out;
    if (r.empty())
        return out;
    Reader block(r.vec16());
    while (!block.empty()) {
        ExtensionBlock e;
        e.type = block.u16();
        auto d = block.vec16();
        e.data.assign(d.begin(), d.end());
        out.push_back(std::move(e));
    }
    return out;
}

} // namespace

Bytes encode(const ClientHello& m)
{
    Writer w;
    w.u16(m.version);
    w.bytes(m.random);
    w.vec8(m.session_id);
    auto s = w.open(2);
    for (auto id : m.suites)
        w.u16(id);
    w.close(s);
    w.vec8(m.compression);
    if (!m.extensions.empty())
        write_extensions(w, m.extensions);
    return w.take();
}

Bytes encode(const ServerHello& m)
{
    Writer w;
    w.u16(m.version);
    w.bytes(m.random);
    w.vec8(m.session_id);
    w.u16(m.suite);
    w.u8(m.compression);
    if (!m.extensions.empty())
        write_extensions(w, m.extensions);
    return w.take();
}

ClientHello decode_client_hello(ByteView body)
{
    Reader r(body);
    ClientHello m;
    m.version = r.u16();
    auto rnd = r.bytes(32);
    m.random.assign(rnd.begin(), rnd.end());
    auto sid = r.vec8();
    m.session_id.assign(sid.begin(), sid.end());
    Reader suites(r.vec16());
    if (suites.remaining() % 2)
        throw WireError("odd cipher suite list length");
    while (!suites.empty())
        m.suites.push_back(suites.u16());
    auto comp = r.vec8();
    m.compression.assign(comp.begin(), comp.end());
    m.extensions = read_extensions(r);
    return m;
}

ServerHello decode_server_hello(ByteView body)
{
    Reader r(body);
    ServerHello m;
    m.version = r.u16();
    auto rnd = r.bytes(32);
    m.random.assign(rnd.begin(), rnd.end());
    auto sid = r.vec8();
    m.session_id.assign(sid.begin(), sid.end());
    m.suite = r.u16();
    m.compression = r.u8();
    m.extensions = read_extensions(r);
    if (!r.empty())
        throw WireError("trailing bytes after ServerHello");
    return m;
}

Bytes handshake_message(std::uint8_t type, ByteView body)
{
    Writer w;
    w.u8(type);
    w.vec24(body);
    return w.take();
}

Bytes record(std::uint8_t type, std::uint16_t version, ByteView fragment)
{
    Writer w;
    w.u8(type);
    w.u16(version);
    w.vec16(fragment);
    return w.take();
}

Bytes encode(const Sslv2ClientHello& m)
{
    Writer body;
    body.u8(1);
    body.u16(m.version);
    body.u16(static_cast<std::uint16_t>(m.cipher_specs.size() * 3));
    body.u16(static_cast<std::uint16_t>(m.session_id.size()));
    body.u16(static_cast<std::uint16_t>(m.challenge.size()));
    for (auto spec : m.cipher_specs) {
        body.u8(static_cast<std::uint8_t>(spec >> 16));
        body.u16(static_cast<std::uint16_t>(spec));
    }
    body.bytes(m.session_id);
    body.bytes(m.challenge);
    Writer w;
    w.u16(static_cast<std::uint16_t>(0x8000 | body.data().size()));
    w.bytes(body.data());
    return w.take();
}

Bytes encode(const Sslv2ServerHello& m)
{
    Writer body;
    body.u8(4);
    body.u8(m.session_id_hit ? 1 : 0);
    body.u8(m.certificate_type);
    body.u16(m.version);
    body.u16(static_cast<std::uint16_t>(m.certificate.size()));
    body.u16(static_cast<std::uint16_t>(m.cipher_specs.size() * 3));
    body.u16(static_cast<std::uint16_t>(m.connection_id.size()));
    body.bytes(m.certificate);
    for (auto spec : m.cipher_specs) {
        body.u8(static_cast<std::uint8_t>(spec >> 16));
        body.u16(static_cast<std::uint16_t>(spec));
    }
    body.bytes(m.connection_id);
    if (body.data().size() > 0x7fff)
        throw WireError("SSLv2 message too long");
    Writer w;
    w.u16(static_cast<std::uint16_t>(0x8000 | body.data().size()));
    w.bytes(body.data());
    return w.take();
}

Sslv2ClientHello decode_sslv2_client_hello(ByteView body)
{
    Reader r(body);
    if (r.u8() != 1)
        throw WireError("not an SSLv2 CLIENT-HELLO");
    Sslv2ClientHello m;
    m.version = r.u16();
    std::uint16_t specs_len = r.u16();
    std::uint16_t sid_len = r.u16();
    std::uint16_t chal_len = r.u16();
    if (specs_len % 3)
        throw WireError("SSLv2 cipher spec length not a multiple of 3");
    Reader specs(r.bytes(specs_len));
    while (!specs.empty())
        m.cipher_specs.push_back(specs.u24());
    auto sid = r.bytes(sid_len);
    m.session_id.assign(sid.begin(), sid.end());
    auto chal = r.bytes(chal_len);
    m.challenge.assign(chal.begin(), chal.end());
    return m;
}

Sslv2ServerHello decode_sslv2_server_hello(ByteView body)
{
    Reader r(body);
    if (r.u8() != 4)
        throw WireError("not an SSLv2 SERVER-HELLO");
    Sslv2ServerHello m;
    m.session_id_hit = r.u8() != 0;
    m.certificate_type = r.u8();
    m.version = r.u16();
    std::uint16_t cert_len = r.u16();
    std::uint16_t specs_len = r.u16();
    std::uint16_t conn_len = r.u16();
    if (specs_len % 3)
        throw WireError("SSLv2 cipher spec length not a multiple of 3");
    auto cert = r.bytes(cert_len);
    m.certificate.assign(cert.begin(), cert.end());
    Reader specs(r.bytes(specs_len));
    while (!specs.empty())
        m.cipher_specs.push_back(specs.u24());
    auto conn = r.bytes(conn_len);
    m.connection_id.assign(conn.begin(), conn.end());
    return m;
}

std::string hex(ByteView b)
{
    std::string out;
    out.reserve(b.size() * 2);
    for (auto c : b)
        out += fmt::format("{:02x}", c);
    return out;
}

} // namespace tlsaudit::wire
