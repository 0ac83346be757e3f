// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tlsaudit Authors

#include "tlsaudit/handshake.hpp"

#include "record_layer.hpp"
#include "tlsaudit/dh_groups.hpp"
#include "tlsaudit/tls_crypto.hpp"
#include "util.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>

namespace tlsaudit {

using detail::AlertReceived;
using detail::RecordLayer;
using detail::TlsEvent;
using wire::ByteView;

std::string_view to_string(HandshakeStatus s)
{
    switch (s) {
    case HandshakeStatus::NEGOTIATED: return "NEGOTIATED";
    case HandshakeStatus::TLS_ALERT: return "TLS_ALERT";
    case HandshakeStatus::TCP_FAILURE: return "TCP_FAILURE";
    case HandshakeStatus::TIMEOUT: return "TIMEOUT";
    case HandshakeStatus::PROTOCOL_ERROR: return "PROTOCOL_ERROR";
    }
    return "?";
}

HandshakeStatus parse_handshake_status(std::string_view s)
{
    for (auto v : {HandshakeStatus::NEGOTIATED, HandshakeStatus::TLS_ALERT, HandshakeStatus::TCP_FAILURE,
                   HandshakeStatus::TIMEOUT, HandshakeStatus::PROTOCOL_ERROR})
        if (to_string(v) == s)
            return v;
    throw ParseError("unknown handshake status '" + std::string(s) + "'");
}

std::string_view to_string(Compression c)
{
    switch (c) {
    case Compression::NULL_METHOD: return "null";
    case Compression::DEFLATE: return "deflate";
    case Compression::LZS: return "lzs";
    }
    return "?";
}

Compression parse_compression(std::string_view s)
{
    for (auto v : {Compression::NULL_METHOD, Compression::DEFLATE, Compression::LZS})
        if (to_string(v) == s)
            return v;
    throw ParseError("unknown compression method '" + std::string(s) + "'");
}

void HandshakeOffer::validate() const
{
    if (suites.empty())
        throw PreconditionError("offer has no cipher suites");
    if (min_version > max_version)
        throw PreconditionError("offer min_version above max_version");
    if (max_version == ProtocolVersion::SSLv2 || max_version == ProtocolVersion::TLS1_3)
        throw PreconditionError("SSLv2 and TLS 1.3 use the dedicated probes");
    if (compression.empty())
        throw PreconditionError("offer has no compression methods");
    auto null_pos = std::find(compression.begin(), compression.end(), Compression::NULL_METHOD);
    if (null_pos != compression.end() && null_pos + 1 != compression.end())
        throw PreconditionError("null compression must be offered last");
    if (http_get && !complete)
        throw PreconditionError("http_get requires a completed handshake");
}

namespace {

const std::vector<std::uint16_t> offered_groups = {wire::group::x25519, wire::group::secp256r1};

Bytes u16_list_ext(const std::vector<std::uint16_t>& items, int prefix = 2)
{
    wire::Writer w;
    auto m = w.open(prefix);
    for (auto i : items)
        w.u16(i);
    w.close(m);
    return w.take();
}

Bytes encode_extension_data(Extension e, const HandshakeOffer& offer, const Bytes& ticket)
{
    wire::Writer w;
    switch (e) {
    case Extension::server_name: {
        auto list = w.open(2);
        w.u8(0);
        w.vec16(ByteView(reinterpret_cast<const std::uint8_t*>(offer.sni_name.data()), offer.sni_name.size()));
        w.close(list);
        break;
    }
    case Extension::heartbeat: w.u8(1); break;
    case Extension::session_ticket: w.bytes(ticket); break;
    case Extension::alpn: {
        auto list = w.open(2);
        for (std::string proto : {"h2", "http/1.1"})
            w.vec8(ByteView(reinterpret_cast<const std::uint8_t*>(proto.data()), proto.size()));
        w.close(list);
        break;
    }
    case Extension::status_request:
        w.u8(1);
        w.u16(0);
        w.u16(0);
        break;
    case Extension::renegotiation_info: w.u8(0); break;
    case Extension::extended_master_secret:
    case Extension::signed_certificate_timestamp: break;
    case Extension::supported_versions: {
        auto list = w.open(1);
        for (int v = static_cast<int>(offer.max_version); v >= static_cast<int>(offer.min_version); --v)
            if (v >= static_cast<int>(ProtocolVersion::TLS1_0))
                w.u16(wire_code(static_cast<ProtocolVersion>(v)));
        w.close(list);
        break;
    }
    }
    return w.take();
}

wire::ClientHello build_client_hello(const HandshakeOffer& offer, const Bytes& session_id, const Bytes& ticket)
{
    wire::ClientHello ch;
    ch.version = wire_code(offer.max_version);
    ch.random = tls::random_bytes(32);
    ch.session_id = session_id;
    ch.suites = offer.suites;
    ch.compression.clear();
    for (auto c : offer.compression)
        ch.compression.push_back(static_cast<std::uint8_t>(c));
    if (offer.max_version == ProtocolVersion::SSLv3)
        return ch;
    for (auto e : all_extensions) {
        if (!offer.extensions.count(e))
            continue;
        if (e == Extension::server_name && offer.sni_name.empty())
            continue;
        ch.extensions.push_back({wire_code(e), encode_extension_data(e, offer, ticket)});
    }
    ch.extensions.push_back({wire::ext::supported_groups, u16_list_ext(offered_groups)});
    ch.extensions.push_back({wire::ext::ec_point_formats, {1, 0}});
    if (offer.max_version >= ProtocolVersion::TLS1_2)
        ch.extensions.push_back(
            {wire::ext::signature_algorithms, u16_list_ext({0x0401, 0x0501, 0x0601, 0x0403, 0x0503, 0x0201, 0x0203})});
    return ch;
}

HandshakeStatus status_of_net_error(const net::NetError& e)
{
    if (dynamic_cast<const net::TimeoutError*>(&e))
        return HandshakeStatus::TIMEOUT;
    if (dynamic_cast<const net::ConnectError*>(&e))
        return HandshakeStatus::TCP_FAILURE;
    return HandshakeStatus::PROTOCOL_ERROR;
}

// Client side of one connection.
class ClientRun {
public:
    ClientRun(const HandshakeOffer& offer, const CipherDb& db, RecordLayer& rl, HandshakeOutcome& out)
        : offer_(offer), db_(db), rl_(rl), out_(out)
    {
    }

    // ClientHello through ServerHelloDone (or the start of an abbreviated
    // handshake). Throws on failure; out_ carries what was seen.
    void hello(std::optional<ResumeMethod> method = std::nullopt);
    void complete();
    void http_get();

    bool abbreviated() const { return abbreviated_; }

private:
    void read_full_server_flight(TlsEvent first);
    void parse_server_key_exchange(const Bytes& body);
    void finish_abbreviated(TlsEvent first);
    void read_server_finished(Bytes& transcript_before_finished);

    const HandshakeOffer& offer_;
    const CipherDb& db_;
    RecordLayer& rl_;
    HandshakeOutcome& out_;
    wire::ClientHello ch_;
    wire::ServerHello sh_;
    Bytes transcript_;
    ProtocolVersion version_ = ProtocolVersion::TLS1_2;
    tls::PKey server_key_;
    Bytes dh_p_, dh_g_, dh_ys_, ec_point_;
    std::uint16_t ec_group_ = 0;
    bool cert_requested_ = false;
    bool abbreviated_ = false;
    std::optional<TlsEvent> held_;
    std::optional<tls::SuiteParams> params_;
    Bytes master_;
    Bytes ticket_;
    std::optional<long> ticket_hint_;
};

void ClientRun::hello(std::optional<ResumeMethod> method)
{
    Bytes session_id;
    Bytes ticket;
    if (method && offer_.resumption) {
        if (*method == ResumeMethod::SESSION_ID) {
            session_id = offer_.resumption->session_id;
        } else {
            ticket = offer_.resumption->ticket;
            session_id = tls::random_bytes(32);
        }
    }
    ch_ = build_client_hello(offer_, session_id, ticket);
    rl_.record_version = offer_.max_version == ProtocolVersion::SSLv3 ? 0x0300 : 0x0301;
    Bytes body = wire::encode(ch_);
    rl_.send_handshake(wire::hs::client_hello, body, &transcript_);

    TlsEvent ev = rl_.next();
    if (ev.kind != TlsEvent::HANDSHAKE || ev.hs_type != wire::hs::server_hello)
        throw wire::WireError("expected ServerHello");
    transcript_.insert(transcript_.end(), ev.raw.begin(), ev.raw.end());
    sh_ = wire::decode_server_hello(ev.body);

    auto version = from_wire_code(sh_.version);
    if (!version || *version < offer_.min_version || *version > offer_.max_version)
        throw wire::WireError("server selected a version outside the offer");
    if (std::find(ch_.suites.begin(), ch_.suites.end(), sh_.suite) == ch_.suites.end())
        throw wire::WireError("server selected a suite that was not offered");
    if (std::find(ch_.compression.begin(), ch_.compression.end(), sh_.compression) == ch_.compression.end())
        throw wire::WireError("server selected a compression method that was not offered");
    version_ = *version;
    out_.status = HandshakeStatus::NEGOTIATED;
    out_.selected_version = version_;
    out_.selected_suite = sh_.suite;
    out_.selected_compression = sh_.compression;
    for (const auto& e : sh_.extensions)
        if (auto known = extension_from_wire(e.type))
            out_.acknowledged_extensions.insert(*known);
    rl_.record_version = sh_.version;

    TlsEvent next = rl_.next();
    bool resume_signal = next.kind == TlsEvent::CHANGE_CIPHER_SPEC ||
                         (next.kind == TlsEvent::HANDSHAKE && next.hs_type == wire::hs::new_session_ticket);
    if (method && offer_.resumption && resume_signal && !session_id.empty() && sh_.session_id == session_id) {
        abbreviated_ = true;
        held_ = std::move(next);
        return;
    }
    read_full_server_flight(std::move(next));
}

void ClientRun::read_full_server_flight(TlsEvent ev)
{
    const CipherSuiteInfo* info = db_.find(sh_.suite);
    bool anonymous = info && info->auth == Auth::ANON;
    if (!anonymous) {
        if (ev.kind != TlsEvent::HANDSHAKE || ev.hs_type != wire::hs::certificate)
            throw wire::WireError("expected Certificate");
        transcript_.insert(transcript_.end(), ev.raw.begin(), ev.raw.end());
        wire::Reader r(ev.body);
        wire::Reader list(r.vec24());
        out_.certificate_sig_alg = CertSigAlg::OTHER;
        if (!list.empty()) {
            auto leaf = list.vec24();
            out_.certificate_sig_alg = tls::certificate_key_kind(leaf);
            if (*out_.certificate_sig_alg != CertSigAlg::OTHER)
                server_key_ = tls::PKey::from_certificate(leaf);
        }
        ev = rl_.next();
    }
    if (ev.kind == TlsEvent::HANDSHAKE && ev.hs_type == wire::hs::server_key_exchange) {
        transcript_.insert(transcript_.end(), ev.raw.begin(), ev.raw.end());
        parse_server_key_exchange(ev.body);
        ev = rl_.next();
    }
    if (ev.kind == TlsEvent::HANDSHAKE && ev.hs_type == wire::hs::certificate_request) {
        transcript_.insert(transcript_.end(), ev.raw.begin(), ev.raw.end());
        cert_requested_ = true;
        ev = rl_.next();
    }
    if (ev.kind != TlsEvent::HANDSHAKE || ev.hs_type != wire::hs::server_hello_done)
        throw wire::WireError("expected ServerHelloDone");
    transcript_.insert(transcript_.end(), ev.raw.begin(), ev.raw.end());
}

void ClientRun::parse_server_key_exchange(const Bytes& body)
{
    const CipherSuiteInfo* info = db_.find(sh_.suite);
    if (!info)
        return;
    wire::Reader r(body);
    if (info->kex == Kex::DHE) {
        auto p = r.vec16();
        auto g = r.vec16();
        auto ys = r.vec16();
        dh_p_ = strip_leading_zeros(Bytes(p.begin(), p.end()));
        dh_g_.assign(g.begin(), g.end());
        dh_ys_.assign(ys.begin(), ys.end());
        ServerKeyExchangeInfo ske;
        ske.group_kind = ServerKeyExchangeInfo::GroupKind::FFDHE;
        ske.dh_prime_bytes = dh_p_;
        ske.dh_prime_bits = bit_length(dh_p_);
        out_.server_key_exchange = ske;
    } else if (info->kex == Kex::ECDHE) {
        if (r.u8() != 3)
            throw wire::WireError("only named curves are supported");
        ec_group_ = r.u16();
        auto point = r.vec8();
        ec_point_.assign(point.begin(), point.end());
        ServerKeyExchangeInfo ske;
        ske.group_kind = ServerKeyExchangeInfo::GroupKind::ECDHE;
        ske.named_curve = ec_group_;
        out_.server_key_exchange = ske;
    }
}

void ClientRun::read_server_finished(Bytes& transcript)
{
    TlsEvent ev = rl_.next();
    if (ev.kind != TlsEvent::HANDSHAKE || ev.hs_type != wire::hs::finished)
        throw wire::WireError("expected Finished");
    Bytes expect = tls::finished_verify_data(version_, *params_, master_, false, transcript);
    if (ev.body != expect)
        throw tls::CryptoError("server Finished does not verify");
    transcript.insert(transcript.end(), ev.raw.begin(), ev.raw.end());
}

void ClientRun::complete()
{
    const CipherSuiteInfo* info = db_.find(sh_.suite);
    if (version_ < ProtocolVersion::TLS1_0 || !info || sh_.compression != 0)
        throw PreconditionError("negotiated parameters are outside the completion set");
    params_ = tls::completion_params(*info);
    if (!params_)
        throw PreconditionError("suite " + format_suite_id(sh_.suite) + " is outside the completion set");
    if (abbreviated_) {
        finish_abbreviated(std::move(*held_));
        return;
    }

    if (cert_requested_) {
        Bytes empty_list = {0, 0, 0};
        rl_.send_handshake(wire::hs::certificate, empty_list, &transcript_);
    }
    Bytes pre_master;
    wire::Writer cke;
    switch (params_->kex) {
    case Kex::RSA: {
        if (!server_key_ || server_key_.kind() != CertSigAlg::RSA)
            throw wire::WireError("RSA key exchange without an RSA certificate");
        pre_master = tls::random_bytes(48);
        pre_master[0] = static_cast<std::uint8_t>(ch_.version >> 8);
        pre_master[1] = static_cast<std::uint8_t>(ch_.version);
        cke.vec16(tls::rsa_encrypt(server_key_, pre_master));
        break;
    }
    case Kex::DHE: {
        if (dh_p_.empty())
            throw wire::WireError("missing DHE ServerKeyExchange");
        auto key = tls::DhKey::generate(dh_p_, dh_g_);
        cke.vec16(key.public_bytes());
        pre_master = key.derive(dh_ys_);
        break;
    }
    case Kex::ECDHE: {
        if (ec_point_.empty())
            throw wire::WireError("missing ECDHE ServerKeyExchange");
        auto key = tls::EcdhKey::generate(ec_group_);
        cke.vec8(key.public_bytes());
        pre_master = key.derive(ec_point_);
        break;
    }
    default: throw PreconditionError("unsupported key exchange");
    }
    rl_.send_handshake(wire::hs::client_key_exchange, cke.data(), &transcript_);
    if (out_.acknowledged_extensions.count(Extension::extended_master_secret))
        master_ = tls::extended_master_secret(version_, *params_, pre_master, transcript_);
    else
        master_ = tls::master_secret(version_, *params_, pre_master, ch_.random, sh_.random);
    auto keys = tls::derive_keys(version_, *params_, master_, ch_.random, sh_.random);

    Bytes ccs = {1};
    rl_.send(wire::content::change_cipher_spec, ccs);
    rl_.set_write_cipher(std::make_unique<tls::RecordCipher>(version_, *params_, keys.client_key,
                                                             keys.client_iv, keys.client_mac));
    Bytes verify = tls::finished_verify_data(version_, *params_, master_, true, transcript_);
    rl_.send_handshake(wire::hs::finished, verify, &transcript_);

    TlsEvent ev = rl_.next();
    if (ev.kind == TlsEvent::HANDSHAKE && ev.hs_type == wire::hs::new_session_ticket) {
        transcript_.insert(transcript_.end(), ev.raw.begin(), ev.raw.end());
        wire::Reader r(ev.body);
        ticket_hint_ = static_cast<long>(r.u32());
        auto t = r.vec16();
        ticket_.assign(t.begin(), t.end());
        ev = rl_.next();
    }
    if (ev.kind != TlsEvent::CHANGE_CIPHER_SPEC)
        throw wire::WireError("expected ChangeCipherSpec");
    rl_.set_read_cipher(std::make_unique<tls::RecordCipher>(version_, *params_, keys.server_key,
                                                            keys.server_iv, keys.server_mac));
    read_server_finished(transcript_);
    out_.completed = true;
    SessionArtifacts art;
    art.version = version_;
    art.suite = sh_.suite;
    art.session_id = sh_.session_id;
    art.ticket = ticket_;
    if (!ticket_.empty())
        art.ticket_lifetime_hint_s = ticket_hint_;
    art.master_secret = master_;
    out_.session_artifacts = art;
}

void ClientRun::finish_abbreviated(TlsEvent ev)
{
    const SessionArtifacts& prior = *offer_.resumption;
    if (prior.suite != sh_.suite || prior.version != version_)
        throw wire::WireError("resumed session changed suite or version");
    master_ = prior.master_secret;
    auto keys = tls::derive_keys(version_, *params_, master_, ch_.random, sh_.random);
    if (ev.kind == TlsEvent::HANDSHAKE && ev.hs_type == wire::hs::new_session_ticket) {
        transcript_.insert(transcript_.end(), ev.raw.begin(), ev.raw.end());
        wire::Reader r(ev.body);
        ticket_hint_ = static_cast<long>(r.u32());
        auto t = r.vec16();
        ticket_.assign(t.begin(), t.end());
        ev = rl_.next();
    }
    if (ev.kind != TlsEvent::CHANGE_CIPHER_SPEC)
        throw wire::WireError("expected ChangeCipherSpec");
    rl_.set_read_cipher(std::make_unique<tls::RecordCipher>(version_, *params_, keys.server_key,
                                                            keys.server_iv, keys.server_mac));
    read_server_finished(transcript_);
    Bytes ccs = {1};
    rl_.send(wire::content::change_cipher_spec, ccs);
    rl_.set_write_cipher(std::make_unique<tls::RecordCipher>(version_, *params_, keys.client_key,
                                                             keys.client_iv, keys.client_mac));
    Bytes verify = tls::finished_verify_data(version_, *params_, master_, true, transcript_);
    rl_.send_handshake(wire::hs::finished, verify, &transcript_);
    out_.completed = true;
    out_.resumed = true;
    SessionArtifacts art = prior;
    art.session_id = sh_.session_id;
    if (!ticket_.empty()) {
        art.ticket = ticket_;
        art.ticket_lifetime_hint_s = ticket_hint_;
    }
    out_.session_artifacts = art;
}

void ClientRun::http_get()
{
    std::string host = offer_.sni_name.empty() ? "localhost" : offer_.sni_name;
    std::string request = "GET / HTTP/1.1\r\nHost: " + host +
                          "\r\nUser-Agent: tlsaudit\r\nAccept: */*\r\nConnection: close\r\n\r\n";
    rl_.send(wire::content::application_data,
             ByteView(reinterpret_cast<const std::uint8_t*>(request.data()), request.size()));
    std::string response;
    std::optional<std::size_t> body_start;
    std::optional<std::size_t> content_length;
    try {
        for (;;) {
            TlsEvent ev = rl_.next();
            if (ev.kind != TlsEvent::APPLICATION_DATA)
                continue;
            response.append(ev.body.begin(), ev.body.end());
            if (!body_start) {
                auto end = response.find("\r\n\r\n");
                if (end != std::string::npos) {
                    body_start = end + 4;
                    for (const auto& line : detail::split(response.substr(0, end), '\n')) {
                        auto colon = line.find(':');
                        if (colon != std::string::npos &&
                            detail::lower(detail::trim(line.substr(0, colon))) == "content-length") {
                            try {
                                content_length = std::stoul(detail::trim(line.substr(colon + 1)));
                            } catch (const std::exception&) {
                            }
                        }
                    }
                }
            }
            if (body_start && content_length && response.size() >= *body_start + *content_length)
                break;
            if (response.size() > (1u << 20))
                break;
        }
    } catch (const AlertReceived&) {
    } catch (const net::ClosedError&) {
    }
    if (response.rfind("HTTP/1.", 0) != 0 || response.size() < 12 || !body_start) {
        out_.http_error = "response is not HTTP";
        return;
    }
    HttpResult res;
    try {
        res.status_code = std::stoi(response.substr(9, 3));
    } catch (const std::exception&) {
        out_.http_error = "malformed HTTP status line";
        return;
    }
    auto lines = detail::split(response.substr(0, *body_start - 4), '\n');
    for (std::size_t i = 1; i < lines.size(); ++i) {
        std::string line = lines[i];
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        auto colon = line.find(':');
        if (colon == std::string::npos)
            continue;
        if (detail::lower(detail::trim(line.substr(0, colon))) == "server") {
            res.server_header = detail::trim(line.substr(colon + 1));
            break;
        }
    }
    std::string body = response.substr(*body_start);
    if (content_length && body.size() > *content_length)
        body.resize(*content_length);
    res.body_hash = wire::hex(tls::digest("SHA256", ByteView(reinterpret_cast<const std::uint8_t*>(body.data()), body.size())));
    out_.http = res;
}

// Runs fn against a fresh connection and maps failures onto the outcome.
template <class Fn>
HandshakeOutcome run_connection(const Target& target, net::Millis timeout, Fn&& fn)
{
    HandshakeOutcome out;
    net::Socket sock;
    try {
        sock = net::Socket::connect(target.host, target.port, timeout);
    } catch (const net::NetError& e) {
        out.status = status_of_net_error(e);
        if (out.status == HandshakeStatus::PROTOCOL_ERROR)
            out.status = HandshakeStatus::TCP_FAILURE;
        out.error = e.what();
        return out;
    }
    RecordLayer rl(sock, timeout);
    auto fail = [&](HandshakeStatus status, const std::string& what) {
        if (!out.negotiated())
            out.status = status;
        out.error = what;
    };
    try {
        fn(rl, out);
    } catch (const AlertReceived& e) {
        if (!out.negotiated())
            out.alert = e.desc;
        fail(HandshakeStatus::TLS_ALERT, std::string("received alert ") + std::to_string(e.desc));
    } catch (const net::ClosedError& e) {
        fail(HandshakeStatus::PROTOCOL_ERROR, "connection closed by server");
    } catch (const net::NetError& e) {
        fail(status_of_net_error(e), e.what());
    } catch (const PreconditionError& e) {
        out.error = e.what();
    } catch (const Error& e) {
        fail(HandshakeStatus::PROTOCOL_ERROR, e.what());
        out.raw_hex = wire::hex(rl.received_prefix());
    }
    return out;
}

} // namespace

HandshakeOutcome handshake(const Target& target, const HandshakeOffer& offer, net::Millis timeout,
                           const CipherDb& db)
{
    offer.validate();
    return run_connection(target, timeout, [&](RecordLayer& rl, HandshakeOutcome& out) {
        ClientRun run(offer, db, rl, out);
        run.hello();
        if (offer.complete) {
            run.complete();
            if (offer.http_get)
                run.http_get();
        }
    });
}

HandshakeOutcome resume(const Target& target, const SessionArtifacts& artifacts, ResumeMethod method,
                        HandshakeOffer base, net::Millis timeout, const CipherDb& db)
{
    base.resumption = artifacts;
    base.complete = true;
    base.max_version = artifacts.version;
    if (method == ResumeMethod::TICKET)
        base.extensions.insert(Extension::session_ticket);
    base.validate();
    return run_connection(target, timeout, [&](RecordLayer& rl, HandshakeOutcome& out) {
        ClientRun run(base, db, rl, out);
        run.hello(method);
        run.complete();
    });
}

HeartbleedOutcome heartbleed_probe(const Target& target, HandshakeOffer offer, const HandshakeOutcome& prior,
                                   net::Millis timeout, const CipherDb& db)
{
    if (!prior.acknowledged_extensions.count(Extension::heartbeat))
        throw PreconditionError("heartbleed probe requires an acknowledged heartbeat extension");
    offer.extensions.insert(Extension::heartbeat);
    offer.complete = false;
    offer.http_get = false;
    offer.validate();
    HeartbleedOutcome res;
    res.handshake = run_connection(target, timeout, [&](RecordLayer& rl, HandshakeOutcome& out) {
        ClientRun run(offer, db, rl, out);
        run.hello();
        if (!out.acknowledged_extensions.count(Extension::heartbeat)) {
            res.annotation = "heartbeat not acknowledged on this connection";
            return;
        }
        res.result.heartbeat_acknowledged = true;
        // Over-stated request first, then a well-formed one; a patched peer
        // drops the first and answers only the second.
        wire::Writer bad;
        bad.u8(1);
        bad.u16(0x4000);
        bad.u8('A');
        bad.bytes(Bytes(16, 0));
        wire::Writer good;
        good.u8(1);
        good.u16(1);
        good.u8('B');
        good.bytes(Bytes(16, 0));
        rl.send(wire::content::heartbeat, bad.data());
        rl.send(wire::content::heartbeat, good.data());
        for (;;) {
            TlsEvent ev = rl.next();
            if (ev.kind != TlsEvent::HEARTBEAT)
                continue;
            wire::Reader r(ev.body);
            if (r.u8() != 2)
                continue;
            std::size_t claimed = r.u16();
            std::size_t received = std::min(claimed, r.remaining());
            if (claimed > 1) {
                res.result.vulnerable = true;
                res.result.evidence_len = received > 1 ? received - 1 : 0;
            }
            // Leaked bytes are measured, never kept.
            ev.body.assign(ev.body.size(), 0);
            return;
        }
    });
    if (res.result.heartbeat_acknowledged && !res.result.vulnerable && !res.handshake.error.empty())
        res.annotation = "no heartbeat response: " + res.handshake.error;
    if (res.result.vulnerable && res.result.evidence_len == 0)
        res.result.vulnerable = false;
    return res;
}

HandshakeOffer modern_completion_offer(const CipherDb& db, const std::string& sni)
{
    HandshakeOffer offer;
    offer.max_version = ProtocolVersion::TLS1_2;
    offer.min_version = ProtocolVersion::TLS1_0;
    offer.suites = preference_order(db, tls::completion_suites(db));
    offer.extensions = {Extension::server_name, Extension::renegotiation_info};
    offer.sni_name = sni;
    offer.complete = true;
    return offer;
}

HandshakeOutcome http_get_over_tls(const Target& target, net::Millis timeout, const CipherDb& db)
{
    HandshakeOffer offer = modern_completion_offer(db, target.sni);
    offer.http_get = true;
    return handshake(target, offer, timeout, db);
}

const std::vector<std::uint32_t>& sslv2_probe_specs()
{
    static const std::vector<std::uint32_t> specs = {0x010080, 0x020080, 0x030080, 0x040080,
                                                     0x050080, 0x060040, 0x0700C0};
    return specs;
}

SpecialProbeOutcome sslv2_probe(const Target& target, net::Millis timeout)
{
    SpecialProbeOutcome res;
    net::Socket sock;
    try {
        sock = net::Socket::connect(target.host, target.port, timeout);
    } catch (const net::NetError& e) {
        res.status = status_of_net_error(e);
        if (res.status == HandshakeStatus::PROTOCOL_ERROR)
            res.status = HandshakeStatus::TCP_FAILURE;
        res.annotation = e.what();
        return res;
    }
    try {
        wire::Sslv2ClientHello hello;
        hello.cipher_specs = sslv2_probe_specs();
        hello.challenge = tls::random_bytes(16);
        sock.write_all(wire::encode(hello), net::deadline_after(timeout));
        std::uint8_t header[2];
        sock.read_exact(header, 2, net::deadline_after(timeout));
        if (!(header[0] & 0x80)) {
            res.status = header[0] == wire::content::alert ? HandshakeStatus::TLS_ALERT
                                                           : HandshakeStatus::PROTOCOL_ERROR;
            res.annotation = "server answered with a TLS record";
            return res;
        }
        std::size_t len = static_cast<std::size_t>((header[0] & 0x7f) << 8 | header[1]);
        Bytes body(len);
        sock.read_exact(body.data(), len, net::deadline_after(timeout));
        auto sh = wire::decode_sslv2_server_hello(body);
        res.status = HandshakeStatus::NEGOTIATED;
        res.supported = sh.version == 0x0002 && !sh.cipher_specs.empty();
        if (!res.supported)
            res.annotation = "SSLv2 SERVER-HELLO without usable cipher specs";
    } catch (const net::ClosedError&) {
        res.status = HandshakeStatus::PROTOCOL_ERROR;
        res.annotation = "connection closed by server";
    } catch (const net::NetError& e) {
        res.status = status_of_net_error(e);
        res.annotation = e.what();
    } catch (const Error& e) {
        res.status = HandshakeStatus::PROTOCOL_ERROR;
        res.annotation = e.what();
    }
    return res;
}

SpecialProbeOutcome tls13_probe(const Target& target, net::Millis timeout)
{
    SpecialProbeOutcome res;
    auto out = run_connection(target, timeout, [&](RecordLayer& rl, HandshakeOutcome& o) {
        wire::ClientHello ch;
        ch.version = 0x0303;
        ch.random = tls::random_bytes(32);
        ch.session_id = tls::random_bytes(32);
        ch.suites = {0x1301, 0x1302, 0x1303};
        if (!target.sni.empty()) {
            wire::Writer sni;
            auto list = sni.open(2);
            sni.u8(0);
            sni.vec16(ByteView(reinterpret_cast<const std::uint8_t*>(target.sni.data()), target.sni.size()));
            sni.close(list);
            ch.extensions.push_back({wire::ext::server_name, sni.take()});
        }
        ch.extensions.push_back({wire::ext::supported_groups, u16_list_ext(offered_groups)});
        ch.extensions.push_back({wire::ext::signature_algorithms,
                                 u16_list_ext({0x0403, 0x0503, 0x0804, 0x0805, 0x0806, 0x0401, 0x0501})});
        ch.extensions.push_back({wire::ext::supported_versions, u16_list_ext({0x0304}, 1)});
        ch.extensions.push_back({wire::ext::psk_key_exchange_modes, {1, 1}});
        auto share = tls::EcdhKey::generate(wire::group::x25519);
        wire::Writer ks;
        auto list = ks.open(2);
        ks.u16(wire::group::x25519);
        ks.vec16(share.public_bytes());
        ks.close(list);
        ch.extensions.push_back({wire::ext::key_share, ks.take()});
        rl.send_handshake(wire::hs::client_hello, wire::encode(ch));
        TlsEvent ev = rl.next();
        if (ev.kind != TlsEvent::HANDSHAKE || ev.hs_type != wire::hs::server_hello)
            throw wire::WireError("expected ServerHello");
        auto sh = wire::decode_server_hello(ev.body);
        o.status = HandshakeStatus::NEGOTIATED;
        o.selected_suite = sh.suite;
        // HelloRetryRequest carries the same supported_versions selection.
        if (const auto* sv = wire::find_extension(sh.extensions, wire::ext::supported_versions)) {
            wire::Reader r(sv->data);
            if (r.u16() == 0x0304)
                o.selected_version = ProtocolVersion::TLS1_3;
        }
    });
    res.status = out.status;
    res.supported = out.negotiated() && out.selected_version == ProtocolVersion::TLS1_3;
    res.annotation = out.error;
    return res;
}

nlohmann::json to_json(const HandshakeOffer& o)
{
    nlohmann::json j;
    j["max_version"] = to_string(o.max_version);
    j["min_version"] = to_string(o.min_version);
    auto& suites = j["suites"] = nlohmann::json::array();
    for (auto id : o.suites)
        suites.push_back(format_suite_id(id));
    auto& exts = j["extensions"] = nlohmann::json::array();
    for (auto e : o.extensions)
        exts.push_back(to_string(e));
    auto& comp = j["compression_methods"] = nlohmann::json::array();
    for (auto c : o.compression)
        comp.push_back(to_string(c));
    j["sni_name"] = o.sni_name;
    j["resumption"] = o.resumption ? nlohmann::json{{"session_id", !o.resumption->session_id.empty()},
                                                    {"ticket", !o.resumption->ticket.empty()}}
                                   : nlohmann::json(nullptr);
    j["complete"] = o.complete;
    j["http_get"] = o.http_get;
    return j;
}

nlohmann::json to_json(const HandshakeOutcome& o)
{
    nlohmann::json j;
    j["status"] = to_string(o.status);
    j["selected_version"] = o.selected_version ? nlohmann::json(to_string(*o.selected_version)) : nlohmann::json(nullptr);
    j["selected_suite"] = o.selected_suite ? nlohmann::json(format_suite_id(*o.selected_suite)) : nlohmann::json(nullptr);
    j["selected_compression"] = o.selected_compression ? nlohmann::json(*o.selected_compression) : nlohmann::json(nullptr);
    auto& exts = j["acknowledged_extensions"] = nlohmann::json::array();
    for (auto e : o.acknowledged_extensions)
        exts.push_back(to_string(e));
    j["certificate_sig_alg"] = o.certificate_sig_alg ? nlohmann::json(to_string(*o.certificate_sig_alg)) : nlohmann::json(nullptr);
    if (o.server_key_exchange) {
        const auto& s = *o.server_key_exchange;
        nlohmann::json ske;
        ske["group_kind"] = s.group_kind == ServerKeyExchangeInfo::GroupKind::FFDHE ? "FFDHE" : "ECDHE";
        if (s.group_kind == ServerKeyExchangeInfo::GroupKind::FFDHE) {
            ske["dh_prime_bits"] = s.dh_prime_bits;
            ske["dh_prime_bytes"] = wire::hex(s.dh_prime_bytes);
        }
        ske["named_curve"] = s.named_curve ? nlohmann::json(*s.named_curve) : nlohmann::json(nullptr);
        j["server_key_exchange"] = ske;
    } else {
        j["server_key_exchange"] = nullptr;
    }
    if (o.session_artifacts) {
        const auto& a = *o.session_artifacts;
        j["session_artifacts"] = {{"session_id", wire::hex(a.session_id)},
                                  {"ticket_len", a.ticket.size()},
                                  {"ticket_lifetime_hint_s", a.ticket_lifetime_hint_s
                                                                 ? nlohmann::json(*a.ticket_lifetime_hint_s)
                                                                 : nlohmann::json(nullptr)}};
    } else {
        j["session_artifacts"] = nullptr;
    }
    j["resumed"] = o.resumed;
    j["completed"] = o.completed;
    j["alert"] = o.alert ? nlohmann::json(*o.alert) : nlohmann::json(nullptr);
    if (o.http)
        j["http"] = {{"status_code", o.http->status_code},
                     {"server_header", o.http->server_header ? nlohmann::json(*o.http->server_header)
                                                             : nlohmann::json(nullptr)},
                     {"body_hash", o.http->body_hash}};
    if (o.http_error)
        j["http_error"] = *o.http_error;
    if (!o.error.empty())
        j["error"] = o.error;
    if (!o.raw_hex.empty())
        j["raw"] = o.raw_hex;
    return j;
}

} // namespace tlsaudit
