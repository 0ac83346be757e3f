// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tlsaudit Authors

#include "tlsaudit/fixture.hpp"

#include "record_layer.hpp"
#include "tlsaudit/net.hpp"
#include "tlsaudit/tls_crypto.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <fstream>
#include <map>

namespace tlsaudit {

using detail::AlertReceived;
using detail::RecordLayer;
using detail::TlsEvent;
using wire::ByteView;

namespace {

constexpr net::Millis server_timeout{5000};
const std::string fixture_body = "<html><body>tlsaudit fixture</body></html>\n";

struct Credentials {
    tls::PKey key;
    Bytes certificate;
};

// One RSA-2048 and one P-256 identity per process.
const Credentials& credentials(CertSigAlg kind)
{
    static const Credentials rsa = [] {
        Credentials c;
        c.key = tls::PKey::generate_rsa(2048);
        c.certificate = tls::self_signed_certificate(c.key, "tlsaudit-fixture-rsa");
        return c;
    }();
    static const Credentials ec = [] {
        Credentials c;
        c.key = tls::PKey::generate_ec_p256();
        c.certificate = tls::self_signed_certificate(c.key, "tlsaudit-fixture-ecdsa");
        return c;
    }();
    return kind == CertSigAlg::ECDSA ? ec : rsa;
}

struct ServerSession {
    ProtocolVersion version = ProtocolVersion::TLS1_2;
    SuiteId suite = 0;
    Bytes master_secret;
};

std::vector<std::uint16_t> read_u16_list(ByteView data, int prefix)
{
    wire::Reader r(data);
    wire::Reader list(prefix == 1 ? r.vec8() : r.vec16());
    std::vector<std::uint16_t> out;
    while (list.remaining() >= 2)
        out.push_back(list.u16());
    return out;
}

class AbortHandshake : public Error {
public:
    explicit AbortHandshake(std::string result) : Error(result) {}
};

} // namespace

struct FixtureServer::Impl {
    FixtureSpec spec;
    const CipherDb& db;
    net::Listener listener;
    std::thread thread;
    std::atomic<bool> stopping{false};
    std::optional<std::filesystem::path> capture_path;
    mutable std::mutex mu;
    std::vector<CaptureEntry> log;
    std::size_t connections = 0;
    Bytes prime;
    std::map<Bytes, ServerSession> session_cache;
    std::map<Bytes, ServerSession> ticket_store;

    Impl(const FixtureSpec& s, const CipherDb& d) : spec(s), db(d) {}

    void loop();
    void serve(net::Socket& sock, CaptureEntry& cap);
    void serve_sslv2(RecordLayer& rl, ByteView body, CaptureEntry& cap);
    void serve_tls13(RecordLayer& rl, const wire::ClientHello& ch, CaptureEntry& cap);
    void handle_heartbeat(RecordLayer& rl, const Bytes& body);
    void serve_http(RecordLayer& rl);
    void record(CaptureEntry cap);
};

void FixtureServer::Impl::record(CaptureEntry cap)
{
    std::lock_guard lock(mu);
    if (capture_path) {
        std::ofstream out(*capture_path, std::ios::app);
        out << to_json(cap).dump() << '\n';
    }
    log.push_back(std::move(cap));
}

void FixtureServer::Impl::loop()
{
    while (!stopping.load()) {
        auto sock = listener.accept(net::Millis(50));
        if (!sock)
            continue;
        CaptureEntry cap;
        {
            std::lock_guard lock(mu);
            cap.connection = ++connections;
        }
        try {
            serve(*sock, cap);
        } catch (const AbortHandshake& e) {
            cap.result = e.what();
        } catch (const AlertReceived& e) {
            cap.result = "client alert " + std::to_string(e.desc);
        } catch (const net::ClosedError&) {
            if (cap.result.empty())
                cap.result = "client closed";
        } catch (const std::exception& e) {
            cap.result = std::string("error: ") + e.what();
        }
        record(std::move(cap));
    }
}

void FixtureServer::Impl::serve_sslv2(RecordLayer& rl, ByteView body, CaptureEntry& cap)
{
    cap.sslv2_hello = true;
    auto hello = wire::decode_sslv2_client_hello(body);
    cap.client_version = hello.version;
    if (!spec.sslv2_emulation || hello.version != 0x0002)
        throw AbortHandshake("sslv2 hello refused");
    const auto& cred = credentials(spec.cert_kind);
    wire::Sslv2ServerHello sh;
    sh.certificate = cred.certificate;
    for (auto c : hello.cipher_specs)
        if (c >= 0x010080 && c <= 0x0700C0 && (c & 0xffff) != 0)
            sh.cipher_specs.push_back(c);
    if (sh.cipher_specs.empty())
        throw AbortHandshake("sslv2 no shared cipher");
    sh.connection_id = tls::random_bytes(16);
    rl.send_raw(wire::encode(sh));
    cap.result = "sslv2 server-hello";
}

void FixtureServer::Impl::serve_tls13(RecordLayer& rl, const wire::ClientHello& ch, CaptureEntry& cap)
{
    SuiteId suite = 0;
    for (auto id : ch.suites)
        if (id >= 0x1301 && id <= 0x1303) {
            suite = id;
            break;
        }
    wire::ServerHello sh;
    sh.version = 0x0303;
    sh.random = tls::random_bytes(32);
    sh.session_id = ch.session_id;
    sh.suite = suite;
    sh.extensions.push_back({wire::ext::supported_versions, {0x03, 0x04}});
    auto share = tls::EcdhKey::generate(wire::group::x25519);
    wire::Writer ks;
    ks.u16(wire::group::x25519);
    ks.vec16(share.public_bytes());
    sh.extensions.push_back({wire::ext::key_share, ks.take()});
    rl.record_version = 0x0303;
    rl.send_handshake(wire::hs::server_hello, wire::encode(sh));
    cap.result = "tls1.3 server-hello";
}

void FixtureServer::Impl::handle_heartbeat(RecordLayer& rl, const Bytes& body)
{
    wire::Reader r(body);
    if (r.remaining() < 3 || r.u8() != 1)
        return;
    std::size_t claimed = r.u16();
    ByteView rest = r.rest();
    wire::Writer resp;
    resp.u8(2);
    if (spec.heartbeat == HeartbeatMode::VULNERABLE) {
        // Echo the claimed length, reading past the real payload into
        // stand-in process memory.
        std::size_t n = std::min<std::size_t>(claimed, 16384 - 3 - 16);
        resp.u16(static_cast<std::uint16_t>(n));
        Bytes payload(rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(std::min(n, rest.size())));
        while (payload.size() < n)
            payload.push_back(static_cast<std::uint8_t>(0x5a ^ (payload.size() & 0xff)));
        resp.bytes(payload);
    } else {
        if (3 + claimed + 16 > body.size())
            return;
        resp.u16(static_cast<std::uint16_t>(claimed));
        resp.bytes(rest.first(claimed));
    }
    resp.bytes(tls::random_bytes(16));
    rl.send(wire::content::heartbeat, resp.data());
}

void FixtureServer::Impl::serve_http(RecordLayer& rl)
{
    std::string request;
    while (request.find("\r\n\r\n") == std::string::npos && request.size() < 16384) {
        TlsEvent ev = rl.next();
        if (ev.kind == TlsEvent::APPLICATION_DATA)
            request.append(ev.body.begin(), ev.body.end());
    }
    std::string response;
    if (spec.http) {
        response = "HTTP/1.1 200 OK\r\n";
        if (spec.server_header)
            response += "Server: " + *spec.server_header + "\r\n";
        response += "Content-Type: text/html\r\nContent-Length: " + std::to_string(fixture_body.size()) +
                    "\r\nConnection: close\r\n\r\n" + fixture_body;
    } else {
        response = "220 tlsaudit fixture service ready\r\n";
    }
    rl.send(wire::content::application_data,
            ByteView(reinterpret_cast<const std::uint8_t*>(response.data()), response.size()));
    rl.send_alert(wire::alert_desc::close_notify, false);
}

void FixtureServer::Impl::serve(net::Socket& sock, CaptureEntry& cap)
{
    RecordLayer rl(sock, server_timeout);
    std::uint8_t first[2];
    rl.read_bytes(first, 2);
    if (first[0] & 0x80) {
        std::size_t len = static_cast<std::size_t>((first[0] & 0x7f) << 8 | first[1]);
        Bytes body(len);
        rl.read_bytes(body.data(), len);
        serve_sslv2(rl, body, cap);
        return;
    }
    rl.unread(ByteView(first, 2));

    TlsEvent ev = rl.next();
    if (ev.kind != TlsEvent::HANDSHAKE || ev.hs_type != wire::hs::client_hello) {
        rl.send_alert(wire::alert_desc::unexpected_message);
        throw AbortHandshake("expected ClientHello");
    }
    Bytes transcript = ev.raw;
    wire::ClientHello ch = wire::decode_client_hello(ev.body);
    cap.client_version = ch.version;
    cap.suites = ch.suites;
    cap.compression = ch.compression;
    for (const auto& e : ch.extensions)
        cap.extensions.push_back(e.type);
    auto refuse = [&](std::uint8_t desc, const std::string& why) {
        rl.send_alert(desc);
        throw AbortHandshake("alert " + std::to_string(desc) + ": " + why);
    };

    if (spec.versions.count(ProtocolVersion::TLS1_3)) {
        if (const auto* sv = wire::find_extension(ch.extensions, wire::ext::supported_versions)) {
            auto versions = read_u16_list(sv->data, 1);
            bool wants13 = std::find(versions.begin(), versions.end(), 0x0304) != versions.end();
            bool has13_suite = std::any_of(ch.suites.begin(), ch.suites.end(),
                                           [](SuiteId id) { return id >= 0x1301 && id <= 0x1303; });
            if (wants13 && has13_suite) {
                serve_tls13(rl, ch, cap);
                return;
            }
        }
    }

    std::optional<ProtocolVersion> version;
    for (auto v : spec.versions)
        if (v >= ProtocolVersion::SSLv3 && v <= ProtocolVersion::TLS1_2 && wire_code(v) <= ch.version)
            version = v;
    if (!version)
        refuse(wire::alert_desc::protocol_version, "no common version");
    rl.record_version = wire_code(*version);

    std::uint8_t compression = 0;
    bool null_offered = std::find(ch.compression.begin(), ch.compression.end(), 0) != ch.compression.end();
    bool chose = false;
    if (spec.compression) {
        for (auto m : ch.compression)
            if (m == 1 || m == 64) {
                compression = m;
                chose = true;
                break;
            }
    }
    if (!chose && !null_offered)
        refuse(wire::alert_desc::decode_error, "null compression not offered");

    std::optional<std::uint16_t> curve = wire::group::secp256r1;
    if (const auto* sg = wire::find_extension(ch.extensions, wire::ext::supported_groups)) {
        auto groups = read_u16_list(sg->data, 2);
        auto has = [&](std::uint16_t g) { return std::find(groups.begin(), groups.end(), g) != groups.end(); };
        curve = has(wire::group::x25519) ? std::optional<std::uint16_t>(wire::group::x25519)
                : has(wire::group::secp256r1) ? std::optional<std::uint16_t>(wire::group::secp256r1)
                                             : std::nullopt;
    }

    auto offered = [&](SuiteId id) { return std::find(ch.suites.begin(), ch.suites.end(), id) != ch.suites.end(); };
    auto serviceable = [&](SuiteId id) {
        const auto& s = db.at(id);
        return s.usable_at(*version) && (s.kex != Kex::ECDHE || curve);
    };

    // Resumption.
    std::optional<ServerSession> resumed;
    Bytes session_id;
    const auto* ticket_ext = wire::find_extension(ch.extensions, wire::ext::session_ticket);
    if (spec.tickets && ticket_ext && !ticket_ext->data.empty()) {
        auto it = ticket_store.find(ticket_ext->data);
        if (it != ticket_store.end() && it->second.version == *version && offered(it->second.suite) &&
            compression == 0) {
            resumed = it->second;
            session_id = ch.session_id;
        }
    }
    if (!resumed && spec.session_id_cache && !ch.session_id.empty()) {
        auto it = session_cache.find(ch.session_id);
        if (it != session_cache.end() && it->second.version == *version && offered(it->second.suite) &&
            compression == 0) {
            resumed = it->second;
            session_id = ch.session_id;
        }
    }

    SuiteId suite = 0;
    if (resumed) {
        suite = resumed->suite;
    } else {
        std::optional<SuiteId> pick;
        if (spec.server_preference) {
            for (auto id : spec.suites)
                if (offered(id) && serviceable(id)) {
                    pick = id;
                    break;
                }
        } else {
            for (auto id : ch.suites)
                if (std::find(spec.suites.begin(), spec.suites.end(), id) != spec.suites.end() && serviceable(id)) {
                    pick = id;
                    break;
                }
        }
        if (!pick)
            refuse(wire::alert_desc::handshake_failure, "no shared cipher suite");
        suite = *pick;
        if (spec.session_id_cache)
            session_id = tls::random_bytes(32);
    }
    const CipherSuiteInfo& info = db.at(suite);

    wire::ServerHello sh;
    sh.version = wire_code(*version);
    sh.random = tls::random_bytes(32);
    sh.session_id = session_id;
    sh.suite = suite;
    sh.compression = compression;
    bool heartbeat_acked = false;
    bool ems = false;
    bool ticket_requested = false;
    for (const auto& e : ch.extensions) {
        auto known = extension_from_wire(e.type);
        if (e.type == wire::ext::ec_point_formats && info.kex == Kex::ECDHE) {
            sh.extensions.push_back({e.type, {1, 0}});
            continue;
        }
        if (!known)
            continue;
        switch (*known) {
        case Extension::heartbeat:
            if (spec.heartbeat != HeartbeatMode::OFF) {
                sh.extensions.push_back({e.type, {1}});
                heartbeat_acked = true;
            }
            break;
        case Extension::session_ticket:
            if (spec.tickets) {
                ticket_requested = true;
                if (!resumed)
                    sh.extensions.push_back({e.type, {}});
            }
            break;
        case Extension::alpn:
            if (spec.extensions.count(Extension::alpn)) {
                wire::Writer w;
                auto list = w.open(2);
                std::string proto = "http/1.1";
                w.vec8(ByteView(reinterpret_cast<const std::uint8_t*>(proto.data()), proto.size()));
                w.close(list);
                sh.extensions.push_back({e.type, w.take()});
            }
            break;
        case Extension::renegotiation_info:
            if (spec.extensions.count(*known))
                sh.extensions.push_back({e.type, {0}});
            break;
        case Extension::signed_certificate_timestamp:
            if (spec.extensions.count(*known))
                sh.extensions.push_back({e.type, {0, 0}});
            break;
        case Extension::extended_master_secret:
            if (spec.extensions.count(*known)) {
                sh.extensions.push_back({e.type, {}});
                ems = true;
            }
            break;
        case Extension::server_name:
        case Extension::status_request:
            if (spec.extensions.count(*known))
                sh.extensions.push_back({e.type, {}});
            break;
        case Extension::supported_versions: break;
        }
    }
    rl.send_handshake(wire::hs::server_hello, wire::encode(sh), &transcript);
    cap.result = "negotiated " + format_suite_id(suite);

    auto params = tls::completion_params(info);
    if (resumed) {
        auto keys = tls::derive_keys(*version, *params, resumed->master_secret, ch.random, sh.random);
        Bytes ccs = {1};
        rl.send(wire::content::change_cipher_spec, ccs);
        rl.set_write_cipher(std::make_unique<tls::RecordCipher>(*version, *params, keys.server_key,
                                                                keys.server_iv, keys.server_mac));
        Bytes verify = tls::finished_verify_data(*version, *params, resumed->master_secret, false, transcript);
        rl.send_handshake(wire::hs::finished, verify, &transcript);
        TlsEvent e = rl.next();
        if (e.kind != TlsEvent::CHANGE_CIPHER_SPEC)
            refuse(wire::alert_desc::unexpected_message, "expected ChangeCipherSpec");
        rl.set_read_cipher(std::make_unique<tls::RecordCipher>(*version, *params, keys.client_key,
                                                               keys.client_iv, keys.client_mac));
        e = rl.next();
        if (e.kind != TlsEvent::HANDSHAKE || e.hs_type != wire::hs::finished ||
            e.body != tls::finished_verify_data(*version, *params, resumed->master_secret, true, transcript))
            refuse(wire::alert_desc::decrypt_error, "client Finished does not verify");
        cap.result = "resumed " + format_suite_id(suite);
        serve_http(rl);
        return;
    }

    const auto& cred = credentials(spec.cert_kind);
    {
        wire::Writer w;
        auto list = w.open(3);
        w.vec24(cred.certificate);
        w.close(list);
        rl.send_handshake(wire::hs::certificate, w.data(), &transcript);
    }
    std::optional<tls::DhKey> dh;
    std::optional<tls::EcdhKey> ecdh;
    if (info.kex == Kex::DHE || info.kex == Kex::ECDHE) {
        wire::Writer params_w;
        if (info.kex == Kex::DHE) {
            Bytes g = {2};
            dh = tls::DhKey::generate(prime, g);
            params_w.vec16(prime);
            params_w.vec16(g);
            params_w.vec16(dh->public_bytes());
        } else {
            ecdh = tls::EcdhKey::generate(*curve);
            params_w.u8(3);
            params_w.u16(*curve);
            params_w.vec8(ecdh->public_bytes());
        }
        Bytes signed_data = ch.random;
        signed_data.insert(signed_data.end(), sh.random.begin(), sh.random.end());
        signed_data.insert(signed_data.end(), params_w.data().begin(), params_w.data().end());
        Bytes body = params_w.take();
        Bytes sig = tls::sign_server_params(cred.key, *version, signed_data);
        body.insert(body.end(), sig.begin(), sig.end());
        rl.send_handshake(wire::hs::server_key_exchange, body, &transcript);
    }
    rl.send_handshake(wire::hs::server_hello_done, {}, &transcript);

    for (;;) {
        ev = rl.next();
        if (ev.kind == TlsEvent::HEARTBEAT) {
            if (!heartbeat_acked)
                refuse(wire::alert_desc::unexpected_message, "heartbeat not negotiated");
            handle_heartbeat(rl, ev.body);
            continue;
        }
        if (ev.kind == TlsEvent::HANDSHAKE && ev.hs_type == wire::hs::certificate) {
            transcript.insert(transcript.end(), ev.raw.begin(), ev.raw.end());
            continue;
        }
        if (ev.kind == TlsEvent::HANDSHAKE && ev.hs_type == wire::hs::client_key_exchange)
            break;
        refuse(wire::alert_desc::unexpected_message, "expected ClientKeyExchange");
    }
    if (!params || *version < ProtocolVersion::TLS1_0 || compression != 0)
        refuse(wire::alert_desc::handshake_failure, "suite outside the completion set");
    transcript.insert(transcript.end(), ev.raw.begin(), ev.raw.end());
    Bytes pre_master;
    wire::Reader cke(ev.body);
    if (info.kex == Kex::RSA) {
        auto enc = cke.vec16();
        auto dec = tls::rsa_decrypt(cred.key, enc);
        pre_master = dec && dec->size() == 48 ? *dec : tls::random_bytes(48);
    } else if (info.kex == Kex::DHE) {
        pre_master = dh->derive(cke.vec16());
    } else {
        pre_master = ecdh->derive(cke.vec8());
    }
    Bytes master = ems ? tls::extended_master_secret(*version, *params, pre_master, transcript)
                       : tls::master_secret(*version, *params, pre_master, ch.random, sh.random);
    auto keys = tls::derive_keys(*version, *params, master, ch.random, sh.random);

    ev = rl.next();
    if (ev.kind != TlsEvent::CHANGE_CIPHER_SPEC)
        refuse(wire::alert_desc::unexpected_message, "expected ChangeCipherSpec");
    rl.set_read_cipher(std::make_unique<tls::RecordCipher>(*version, *params, keys.client_key, keys.client_iv,
                                                           keys.client_mac));
    ev = rl.next();
    if (ev.kind != TlsEvent::HANDSHAKE || ev.hs_type != wire::hs::finished ||
        ev.body != tls::finished_verify_data(*version, *params, master, true, transcript))
        refuse(wire::alert_desc::decrypt_error, "client Finished does not verify");
    transcript.insert(transcript.end(), ev.raw.begin(), ev.raw.end());

    ServerSession session{*version, suite, master};
    if (ticket_requested) {
        Bytes ticket = tls::random_bytes(32);
        ticket_store[ticket] = session;
        wire::Writer nst;
        nst.u32(static_cast<std::uint32_t>(*spec.tickets));
        nst.vec16(ticket);
        rl.send_handshake(wire::hs::new_session_ticket, nst.data(), &transcript);
    }
    if (spec.session_id_cache)
        session_cache[session_id] = session;
    Bytes ccs = {1};
    rl.send(wire::content::change_cipher_spec, ccs);
    rl.set_write_cipher(std::make_unique<tls::RecordCipher>(*version, *params, keys.server_key, keys.server_iv,
                                                            keys.server_mac));
    Bytes verify = tls::finished_verify_data(*version, *params, master, false, transcript);
    rl.send_handshake(wire::hs::finished, verify, &transcript);
    cap.result = "completed " + format_suite_id(suite);
    serve_http(rl);
}

FixtureServer::FixtureServer(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}

FixtureServer::~FixtureServer() { stop(); }

std::unique_ptr<FixtureServer> FixtureServer::spawn(const FixtureSpec& spec, const CipherDb& db,
                                                    std::optional<std::filesystem::path> capture_path)
{
    validate(spec, db);
    auto impl = std::make_unique<Impl>(spec, db);
    impl->prime = fixture_prime(spec);
    impl->capture_path = std::move(capture_path);
    credentials(spec.cert_kind);
    impl->listener = net::Listener::bind_loopback();
    Impl* raw = impl.get();
    impl->thread = std::thread([raw] { raw->loop(); });
    spdlog::debug("fixture '{}' listening on 127.0.0.1:{}", spec.name, impl->listener.port());
    return std::unique_ptr<FixtureServer>(new FixtureServer(std::move(impl)));
}

std::uint16_t FixtureServer::port() const { return impl_->listener.port(); }

const FixtureSpec& FixtureServer::spec() const { return impl_->spec; }

void FixtureServer::stop()
{
    if (!impl_)
        return;
    impl_->stopping.store(true);
    if (impl_->thread.joinable())
        impl_->thread.join();
    impl_->listener.close();
}

std::size_t FixtureServer::connection_count() const
{
    std::lock_guard lock(impl_->mu);
    return impl_->connections;
}

std::vector<CaptureEntry> FixtureServer::capture() const
{
    std::lock_guard lock(impl_->mu);
    return impl_->log;
}

} // namespace tlsaudit
