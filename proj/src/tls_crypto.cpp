// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tlsaudit Authors

#include "tlsaudit/tls_crypto.hpp"

#include <openssl/bn.h>
#include <openssl/core_names.h>
#include <openssl/err.h>
#include <openssl/evp.h>
#include <openssl/kdf.h>
#include <openssl/params.h>
#include <openssl/rand.h>
#include <openssl/x509.h>

#include <cstring>
#include <random>

namespace tlsaudit::tls {

namespace {

[[noreturn]] void fail(const char* what)
{
    unsigned long code = ERR_get_error();
    char buf[256] = "";
    if (code)
        ERR_error_string_n(code, buf, sizeof buf);
    ERR_clear_error();
    throw CryptoError(std::string(what) + (code ? std::string(": ") + buf : ""));
}

struct CipherCtxFree {
    void operator()(EVP_CIPHER_CTX* c) const { EVP_CIPHER_CTX_free(c); }
};
struct PkeyCtxFree {
    void operator()(EVP_PKEY_CTX* c) const { EVP_PKEY_CTX_free(c); }
};
struct MdCtxFree {
    void operator()(EVP_MD_CTX* c) const { EVP_MD_CTX_free(c); }
};
struct BnFree {
    void operator()(BIGNUM* b) const { BN_free(b); }
};
struct BnCtxFree {
    void operator()(BN_CTX* b) const { BN_CTX_free(b); }
};
struct X509Free {
    void operator()(X509* x) const { X509_free(x); }
};

using CipherCtx = std::unique_ptr<EVP_CIPHER_CTX, CipherCtxFree>;
using PkeyCtx = std::unique_ptr<EVP_PKEY_CTX, PkeyCtxFree>;
using MdCtx = std::unique_ptr<EVP_MD_CTX, MdCtxFree>;
using Bn = std::unique_ptr<BIGNUM, BnFree>;

std::shared_ptr<EVP_PKEY> own(EVP_PKEY* k)
{
    if (!k)
        fail("key operation failed");
    return {k, EVP_PKEY_free};
}

Bn bn_from(ByteView b)
{
    Bn out(BN_bin2bn(b.data(), static_cast<int>(b.size()), nullptr));
    if (!out)
        fail("BN_bin2bn");
    return out;
}

Bytes bn_bytes(const BIGNUM* b)
{
    Bytes out(static_cast<std::size_t>(BN_num_bytes(b)));
    BN_bn2bin(b, out.data());
    return out;
}

const char* prf_digest(PrfHash h) { return h == PrfHash::SHA384 ? "SHA384" : "SHA256"; }

const char* mac_digest(Mac m)
{
    switch (m) {
    case Mac::SHA1: return "SHA1";
    case Mac::SHA256: return "SHA256";
    case Mac::SHA384: return "SHA384";
    default: return nullptr;
    }
}

const EVP_CIPHER* evp_cipher(BulkCipher c)
{
    switch (c) {
    case BulkCipher::AES_128_GCM: return EVP_aes_128_gcm();
    case BulkCipher::AES_256_GCM: return EVP_aes_256_gcm();
    case BulkCipher::CHACHA20_POLY1305: return EVP_chacha20_poly1305();
    case BulkCipher::AES_128_CBC: return EVP_aes_128_cbc();
    case BulkCipher::AES_256_CBC: return EVP_aes_256_cbc();
    }
    return nullptr;
}

void put_u64(Bytes& out, std::uint64_t v)
{
    for (int i = 7; i >= 0; --i)
        out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

} // namespace

std::size_t SuiteParams::fixed_iv_len(ProtocolVersion v) const
{
    switch (cipher) {
    case BulkCipher::AES_128_GCM:
    case BulkCipher::AES_256_GCM: return 4;
    case BulkCipher::CHACHA20_POLY1305: return 12;
    default: return v == ProtocolVersion::TLS1_0 ? 16 : 0;
    }
}

std::optional<SuiteParams> completion_params(const CipherSuiteInfo& s)
{
    if (s.is_export || s.unsupported_by_engine)
        return std::nullopt;
    if (s.kex != Kex::RSA && s.kex != Kex::DHE && s.kex != Kex::ECDHE)
        return std::nullopt;
    if (s.auth != Auth::RSA && s.auth != Auth::ECDSA)
        return std::nullopt;
    SuiteParams p;
    p.id = s.id;
    p.kex = s.kex;
    p.auth = s.auth;
    p.mac = s.mac;
    bool aes128 = s.name.find("AES_128") != std::string::npos;
    bool aes256 = s.name.find("AES_256") != std::string::npos;
    if (s.cipher_family == CipherFamily::AES && s.cipher_mode == CipherMode::GCM) {
        if (!aes128 && !aes256)
            return std::nullopt;
        p.cipher = aes128 ? BulkCipher::AES_128_GCM : BulkCipher::AES_256_GCM;
    } else if (s.cipher_family == CipherFamily::CHACHA && s.cipher_mode == CipherMode::POLY1305) {
        p.cipher = BulkCipher::CHACHA20_POLY1305;
    } else if (s.cipher_family == CipherFamily::AES && s.cipher_mode == CipherMode::CBC &&
               mac_digest(s.mac)) {
        if (!aes128 && !aes256)
            return std::nullopt;
        p.cipher = aes128 ? BulkCipher::AES_128_CBC : BulkCipher::AES_256_CBC;
        p.mac_key_len = s.mac == Mac::SHA1 ? 20 : s.mac == Mac::SHA256 ? 32 : 48;
    } else {
        return std::nullopt;
    }
    p.key_len = (p.cipher == BulkCipher::AES_128_GCM || p.cipher == BulkCipher::AES_128_CBC) ? 16 : 32;
    bool sha384 = s.name.size() >= 7 && s.name.compare(s.name.size() - 7, 7, "_SHA384") == 0;
    p.prf = sha384 ? PrfHash::SHA384 : PrfHash::SHA256;
    return p;
}

SuiteSet completion_suites(const CipherDb& db)
{
    SuiteSet out;
    for (const auto& [id, s] : db.suites)
        if (completion_params(s))
            out.insert(id);
    return out;
}

Bytes random_bytes(std::size_t n)
{
    Bytes out(n);
    if (n && RAND_bytes(out.data(), static_cast<int>(n)) != 1)
        fail("RAND_bytes");
    return out;
}

Bytes digest(std::string_view name, ByteView data)
{
    std::string n(name);
    unsigned char out[EVP_MAX_MD_SIZE];
    size_t len = 0;
    if (!EVP_Q_digest(nullptr, n.c_str(), nullptr, data.data(), data.size(), out, &len))
        fail("digest");
    return Bytes(out, out + len);
}

Bytes prf(ProtocolVersion v, PrfHash h, ByteView secret, std::string_view label, ByteView seed,
          std::size_t n)
{
    EVP_KDF* kdf = EVP_KDF_fetch(nullptr, "TLS1-PRF", nullptr);
    if (!kdf)
        fail("TLS1-PRF unavailable");
    EVP_KDF_CTX* ctx = EVP_KDF_CTX_new(kdf);
    EVP_KDF_free(kdf);
    if (!ctx)
        fail("EVP_KDF_CTX_new");
    std::string md = v >= ProtocolVersion::TLS1_2 ? prf_digest(h) : "MD5-SHA1";
    Bytes full_seed(label.begin(), label.end());
    full_seed.insert(full_seed.end(), seed.begin(), seed.end());
    OSSL_PARAM params[] = {
        OSSL_PARAM_construct_utf8_string(OSSL_KDF_PARAM_DIGEST, md.data(), 0),
        OSSL_PARAM_construct_octet_string(OSSL_KDF_PARAM_SECRET,
                                          const_cast<std::uint8_t*>(secret.data()), secret.size()),
        OSSL_PARAM_construct_octet_string(OSSL_KDF_PARAM_SEED, full_seed.data(), full_seed.size()),
        OSSL_PARAM_construct_end(),
    };
    Bytes out(n);
    int ok = EVP_KDF_derive(ctx, out.data(), n, params);
    EVP_KDF_CTX_free(ctx);
    if (ok != 1)
        fail("TLS PRF");
    return out;
}

Bytes master_secret(ProtocolVersion v, const SuiteParams& p, ByteView pre_master,
                    ByteView client_random, ByteView server_random)
{
    Bytes seed(client_random.begin(), client_random.end());
    seed.insert(seed.end(), server_random.begin(), server_random.end());
    return prf(v, p.prf, pre_master, "master secret", seed, 48);
}

Bytes extended_master_secret(ProtocolVersion v, const SuiteParams& p, ByteView pre_master,
                             ByteView transcript)
{
    return prf(v, p.prf, pre_master, "extended master secret", transcript_hash(v, p, transcript), 48);
}

Bytes transcript_hash(ProtocolVersion v, const SuiteParams& p, ByteView transcript)
{
    if (v >= ProtocolVersion::TLS1_2)
        return digest(prf_digest(p.prf), transcript);
    Bytes out = digest("MD5", transcript);
    Bytes sha = digest("SHA1", transcript);
    out.insert(out.end(), sha.begin(), sha.end());
    return out;
}

Bytes finished_verify_data(ProtocolVersion v, const SuiteParams& p, ByteView master, bool client,
                           ByteView transcript)
{
    return prf(v, p.prf, master, client ? "client finished" : "server finished",
               transcript_hash(v, p, transcript), 12);
}

KeyBlock derive_keys(ProtocolVersion v, const SuiteParams& p, ByteView master,
                     ByteView client_random, ByteView server_random)
{
    std::size_t iv = p.fixed_iv_len(v);
    std::size_t total = 2 * (p.mac_key_len + p.key_len + iv);
    Bytes seed(server_random.begin(), server_random.end());
    seed.insert(seed.end(), client_random.begin(), client_random.end());
    Bytes block = prf(v, p.prf, master, "key expansion", seed, total);
    KeyBlock kb;
    auto it = block.begin();
    auto take = [&](std::size_t n) {
        Bytes out(it, it + static_cast<std::ptrdiff_t>(n));
        it += static_cast<std::ptrdiff_t>(n);
        return out;
    };
    kb.client_mac = take(p.mac_key_len);
    kb.server_mac = take(p.mac_key_len);
    kb.client_key = take(p.key_len);
    kb.server_key = take(p.key_len);
    kb.client_iv = take(iv);
    kb.server_iv = take(iv);
    return kb;
}

RecordCipher::RecordCipher(ProtocolVersion v, const SuiteParams& p, Bytes key, Bytes iv, Bytes mac_key)
    : version_(v), params_(p), key_(std::move(key)), iv_(std::move(iv)), mac_key_(std::move(mac_key))
{
}

Bytes RecordCipher::aad(std::uint8_t type, std::size_t len) const
{
    Bytes out;
    put_u64(out, seq_);
    out.push_back(type);
    std::uint16_t ver = wire_code(version_);
    out.push_back(static_cast<std::uint8_t>(ver >> 8));
    out.push_back(static_cast<std::uint8_t>(ver));
    out.push_back(static_cast<std::uint8_t>(len >> 8));
    out.push_back(static_cast<std::uint8_t>(len));
    return out;
}

Bytes RecordCipher::mac(std::uint8_t type, ByteView data) const
{
    Bytes input = aad(type, data.size());
    input.insert(input.end(), data.begin(), data.end());
    unsigned char out[EVP_MAX_MD_SIZE];
    size_t len = 0;
    if (!EVP_Q_mac(nullptr, "HMAC", nullptr, mac_digest(params_.mac), nullptr, mac_key_.data(),
                   mac_key_.size(), input.data(), input.size(), out, sizeof out, &len))
        fail("HMAC");
    return Bytes(out, out + len);
}

Bytes RecordCipher::seal(std::uint8_t type, ByteView plaintext)
{
    CipherCtx ctx(EVP_CIPHER_CTX_new());
    const EVP_CIPHER* cipher = evp_cipher(params_.cipher);
    Bytes out;
    int len = 0;
    if (params_.aead()) {
        Bytes nonce;
        Bytes explicit_nonce;
        if (params_.cipher == BulkCipher::CHACHA20_POLY1305) {
            nonce = iv_;
            Bytes seq;
            put_u64(seq, seq_);
            for (std::size_t i = 0; i < 8; ++i)
                nonce[4 + i] ^= seq[i];
        } else {
            put_u64(explicit_nonce, seq_);
            nonce = iv_;
            nonce.insert(nonce.end(), explicit_nonce.begin(), explicit_nonce.end());
        }
        Bytes ad = aad(type, plaintext.size());
        if (!EVP_EncryptInit_ex(ctx.get(), cipher, nullptr, nullptr, nullptr) ||
            !EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_AEAD_SET_IVLEN, static_cast<int>(nonce.size()), nullptr) ||
            !EVP_EncryptInit_ex(ctx.get(), nullptr, nullptr, key_.data(), nonce.data()) ||
            !EVP_EncryptUpdate(ctx.get(), nullptr, &len, ad.data(), static_cast<int>(ad.size())))
            fail("AEAD seal init");
        out = explicit_nonce;
        std::size_t off = out.size();
        out.resize(off + plaintext.size() + 16);
        if (!EVP_EncryptUpdate(ctx.get(), out.data() + off, &len, plaintext.data(),
                               static_cast<int>(plaintext.size())) ||
            !EVP_EncryptFinal_ex(ctx.get(), out.data() + off + len, &len) ||
            !EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_AEAD_GET_TAG, 16,
                                 out.data() + off + plaintext.size()))
            fail("AEAD seal");
    } else {
        Bytes body(plaintext.begin(), plaintext.end());
        Bytes m = mac(type, plaintext);
        body.insert(body.end(), m.begin(), m.end());
        std::size_t pad = 16 - (body.size() + 1) % 16;
        if (pad == 16)
            pad = 0;
        body.insert(body.end(), pad + 1, static_cast<std::uint8_t>(pad));
        Bytes iv;
        if (version_ == ProtocolVersion::TLS1_0) {
            iv = iv_;
        } else {
            iv = random_bytes(16);
            out = iv;
        }
        std::size_t off = out.size();
        out.resize(off + body.size());
        if (!EVP_EncryptInit_ex(ctx.get(), cipher, nullptr, key_.data(), iv.data()) ||
            !EVP_CIPHER_CTX_set_padding(ctx.get(), 0) ||
            !EVP_EncryptUpdate(ctx.get(), out.data() + off, &len, body.data(), static_cast<int>(body.size())))
            fail("CBC seal");
        if (version_ == ProtocolVersion::TLS1_0)
            iv_.assign(out.end() - 16, out.end());
    }
    ++seq_;
    return out;
}

Bytes RecordCipher::open(std::uint8_t type, ByteView fragment)
{
    CipherCtx ctx(EVP_CIPHER_CTX_new());
    const EVP_CIPHER* cipher = evp_cipher(params_.cipher);
    int len = 0;
    Bytes out;
    if (params_.aead()) {
        Bytes nonce = iv_;
        ByteView body = fragment;
        if (params_.cipher == BulkCipher::CHACHA20_POLY1305) {
            Bytes seq;
            put_u64(seq, seq_);
            for (std::size_t i = 0; i < 8; ++i)
                nonce[4 + i] ^= seq[i];
        } else {
            if (fragment.size() < 8)
                throw CryptoError("short AEAD record");
            nonce.insert(nonce.end(), fragment.begin(), fragment.begin() + 8);
            body = fragment.subspan(8);
        }
        if (body.size() < 16)
            throw CryptoError("short AEAD record");
        std::size_t plain_len = body.size() - 16;
        Bytes ad = aad(type, plain_len);
        Bytes tag(body.end() - 16, body.end());
        out.resize(plain_len);
        if (!EVP_DecryptInit_ex(ctx.get(), cipher, nullptr, nullptr, nullptr) ||
            !EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_AEAD_SET_IVLEN, static_cast<int>(nonce.size()), nullptr) ||
            !EVP_DecryptInit_ex(ctx.get(), nullptr, nullptr, key_.data(), nonce.data()) ||
            !EVP_DecryptUpdate(ctx.get(), nullptr, &len, ad.data(), static_cast<int>(ad.size())) ||
            !EVP_DecryptUpdate(ctx.get(), out.data(), &len, body.data(), static_cast<int>(plain_len)) ||
            !EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_AEAD_SET_TAG, 16, tag.data()))
            fail("AEAD open init");
        if (EVP_DecryptFinal_ex(ctx.get(), out.data() + len, &len) != 1) {
            ERR_clear_error();
            throw CryptoError("bad record MAC");
        }
    } else {
        ByteView body = fragment;
        Bytes iv;
        if (version_ == ProtocolVersion::TLS1_0) {
            iv = iv_;
        } else {
            if (fragment.size() < 16)
                throw CryptoError("short CBC record");
            iv.assign(fragment.begin(), fragment.begin() + 16);
            body = fragment.subspan(16);
        }
        if (body.empty() || body.size() % 16)
            throw CryptoError("CBC record not block aligned");
        Bytes plain(body.size());
        if (!EVP_DecryptInit_ex(ctx.get(), cipher, nullptr, key_.data(), iv.data()) ||
            !EVP_CIPHER_CTX_set_padding(ctx.get(), 0) ||
            !EVP_DecryptUpdate(ctx.get(), plain.data(), &len, body.data(), static_cast<int>(body.size())))
            fail("CBC open");
        if (version_ == ProtocolVersion::TLS1_0)
            iv_.assign(body.end() - 16, body.end());
        std::size_t pad = plain.back();
        if (pad + 1 + params_.mac_key_len > plain.size())
            throw CryptoError("bad CBC padding");
        for (std::size_t i = plain.size() - pad - 1; i < plain.size(); ++i)
            if (plain[i] != pad)
                throw CryptoError("bad CBC padding");
        std::size_t content_len = plain.size() - pad - 1 - params_.mac_key_len;
        out.assign(plain.begin(), plain.begin() + static_cast<std::ptrdiff_t>(content_len));
        Bytes expect = mac(type, out);
        if (!std::equal(expect.begin(), expect.end(),
                        plain.begin() + static_cast<std::ptrdiff_t>(content_len)))
            throw CryptoError("bad record MAC");
    }
    ++seq_;
    return out;
}

PKey PKey::generate_rsa(int bits)
{
    PKey k;
    k.key_ = own(EVP_PKEY_Q_keygen(nullptr, nullptr, "RSA", static_cast<size_t>(bits)));
    return k;
}

PKey PKey::generate_ec_p256()
{
    PKey k;
    k.key_ = own(EVP_PKEY_Q_keygen(nullptr, nullptr, "EC", "P-256"));
    return k;
}

PKey PKey::from_certificate(ByteView der)
{
    const unsigned char* p = der.data();
    std::unique_ptr<X509, X509Free> cert(d2i_X509(nullptr, &p, static_cast<long>(der.size())));
    if (!cert)
        fail("certificate parse");
    EVP_PKEY* pub = X509_get_pubkey(cert.get());
    PKey k;
    k.key_ = own(pub);
    return k;
}

CertSigAlg PKey::kind() const
{
    if (!key_)
        return CertSigAlg::OTHER;
    switch (EVP_PKEY_get_base_id(key_.get())) {
    case EVP_PKEY_RSA: return CertSigAlg::RSA;
    case EVP_PKEY_EC: return CertSigAlg::ECDSA;
    default: return CertSigAlg::OTHER;
    }
}

Bytes self_signed_certificate(const PKey& key, const std::string& common_name)
{
    std::unique_ptr<X509, X509Free> cert(X509_new());
    if (!cert)
        fail("X509_new");
    X509_set_version(cert.get(), 2);
    Bytes serial = random_bytes(8);
    serial[0] &= 0x7f;
    Bn sn = bn_from(serial);
    BN_to_ASN1_INTEGER(sn.get(), X509_get_serialNumber(cert.get()));
    X509_gmtime_adj(X509_getm_notBefore(cert.get()), -86400);
    X509_gmtime_adj(X509_getm_notAfter(cert.get()), 365L * 86400);
    X509_NAME* name = X509_get_subject_name(cert.get());
    X509_NAME_add_entry_by_txt(name, "CN", MBSTRING_UTF8,
                               reinterpret_cast<const unsigned char*>(common_name.c_str()), -1, -1, 0);
    X509_set_issuer_name(cert.get(), name);
    X509_set_pubkey(cert.get(), key.get());
    if (!X509_sign(cert.get(), key.get(), EVP_sha256()))
        fail("X509_sign");
    int len = i2d_X509(cert.get(), nullptr);
    Bytes out(static_cast<std::size_t>(len));
    unsigned char* p = out.data();
    i2d_X509(cert.get(), &p);
    return out;
}

CertSigAlg certificate_key_kind(ByteView der)
{
    try {
        return PKey::from_certificate(der).kind();
    } catch (const CryptoError&) {
        return CertSigAlg::OTHER;
    }
}

Bytes sign_server_params(const PKey& key, ProtocolVersion v, ByteView signed_data)
{
    bool rsa = key.kind() == CertSigAlg::RSA;
    const EVP_MD* md = nullptr;
    if (v >= ProtocolVersion::TLS1_2)
        md = EVP_sha256();
    else
        md = rsa ? EVP_md5_sha1() : EVP_sha1();
    MdCtx ctx(EVP_MD_CTX_new());
    size_t len = 0;
    if (!EVP_DigestSignInit(ctx.get(), nullptr, md, nullptr, key.get()) ||
        !EVP_DigestSign(ctx.get(), nullptr, &len, signed_data.data(), signed_data.size()))
        fail("sign init");
    Bytes sig(len);
    if (!EVP_DigestSign(ctx.get(), sig.data(), &len, signed_data.data(), signed_data.size()))
        fail("sign");
    sig.resize(len);
    wire::Writer w;
    if (v >= ProtocolVersion::TLS1_2) {
        w.u8(4); // sha256
        w.u8(rsa ? 1 : 3);
    }
    w.vec16(sig);
    return w.take();
}

Bytes rsa_encrypt(const PKey& pub, ByteView data)
{
    PkeyCtx ctx(EVP_PKEY_CTX_new(pub.get(), nullptr));
    size_t len = 0;
    if (!ctx || EVP_PKEY_encrypt_init(ctx.get()) <= 0 ||
        EVP_PKEY_CTX_set_rsa_padding(ctx.get(), RSA_PKCS1_PADDING) <= 0 ||
        EVP_PKEY_encrypt(ctx.get(), nullptr, &len, data.data(), data.size()) <= 0)
        fail("RSA encrypt init");
    Bytes out(len);
    if (EVP_PKEY_encrypt(ctx.get(), out.data(), &len, data.data(), data.size()) <= 0)
        fail("RSA encrypt");
    out.resize(len);
    return out;
}

std::optional<Bytes> rsa_decrypt(const PKey& key, ByteView data)
{
    PkeyCtx ctx(EVP_PKEY_CTX_new(key.get(), nullptr));
    size_t len = 0;
    if (!ctx || EVP_PKEY_decrypt_init(ctx.get()) <= 0 ||
        EVP_PKEY_CTX_set_rsa_padding(ctx.get(), RSA_PKCS1_PADDING) <= 0) {
        ERR_clear_error();
        return std::nullopt;
    }
    // Distro builds with implicit rejection return a synthetic secret on bad
    // padding; callers want to see the failure. Older builds lack the knob.
    if (EVP_PKEY_CTX_ctrl_str(ctx.get(), "rsa_pkcs1_implicit_rejection", "0") <= 0)
        ERR_clear_error();
    if (EVP_PKEY_decrypt(ctx.get(), nullptr, &len, data.data(), data.size()) <= 0) {
        ERR_clear_error();
        return std::nullopt;
    }
    Bytes out(len);
    if (EVP_PKEY_decrypt(ctx.get(), out.data(), &len, data.data(), data.size()) <= 0) {
        ERR_clear_error();
        return std::nullopt;
    }
    out.resize(len);
    return out;
}

EcdhKey EcdhKey::generate(std::uint16_t group)
{
    EcdhKey k;
    k.group_ = group;
    if (group == wire::group::x25519)
        k.key_ = own(EVP_PKEY_Q_keygen(nullptr, nullptr, "X25519"));
    else if (group == wire::group::secp256r1)
        k.key_ = own(EVP_PKEY_Q_keygen(nullptr, nullptr, "EC", "P-256"));
    else
        throw CryptoError("unsupported ECDH group " + std::to_string(group));
    return k;
}

Bytes EcdhKey::public_bytes() const
{
    unsigned char* buf = nullptr;
    size_t len = EVP_PKEY_get1_encoded_public_key(key_.get(), &buf);
    if (!len)
        fail("encode ECDH public key");
    Bytes out(buf, buf + len);
    OPENSSL_free(buf);
    return out;
}

Bytes EcdhKey::derive(ByteView peer_public) const
{
    std::shared_ptr<EVP_PKEY> peer;
    if (group_ == wire::group::x25519) {
        peer = own(EVP_PKEY_new_raw_public_key(EVP_PKEY_X25519, nullptr, peer_public.data(),
                                               peer_public.size()));
    } else {
        peer = own(EVP_PKEY_new());
        if (EVP_PKEY_copy_parameters(peer.get(), key_.get()) != 1 ||
            EVP_PKEY_set1_encoded_public_key(peer.get(), peer_public.data(), peer_public.size()) != 1)
            fail("decode ECDH peer key");
    }
    PkeyCtx ctx(EVP_PKEY_CTX_new(key_.get(), nullptr));
    size_t len = 0;
    if (!ctx || EVP_PKEY_derive_init(ctx.get()) <= 0 ||
        EVP_PKEY_derive_set_peer(ctx.get(), peer.get()) <= 0 ||
        EVP_PKEY_derive(ctx.get(), nullptr, &len) <= 0)
        fail("ECDH derive init");
    Bytes out(len);
    if (EVP_PKEY_derive(ctx.get(), out.data(), &len) <= 0)
        fail("ECDH derive");
    out.resize(len);
    return out;
}

DhKey DhKey::generate(const Bytes& prime, const Bytes& generator)
{
    DhKey k;
    k.prime_ = prime;
    Bn p = bn_from(prime);
    Bn g = bn_from(generator);
    int bits = std::min(256, BN_num_bits(p.get()) - 1);
    Bn x(BN_new());
    Bn y(BN_new());
    std::unique_ptr<BN_CTX, BnCtxFree> ctx(BN_CTX_new());
    if (!x || !y || !ctx || !BN_rand(x.get(), bits, BN_RAND_TOP_ONE, BN_RAND_BOTTOM_ANY) ||
        !BN_mod_exp(y.get(), g.get(), x.get(), p.get(), ctx.get()))
        fail("DH keygen");
    k.private_ = bn_bytes(x.get());
    k.public_ = bn_bytes(y.get());
    return k;
}

Bytes DhKey::derive(ByteView peer_public) const
{
    Bn p = bn_from(prime_);
    Bn x = bn_from(private_);
    Bn y = bn_from(peer_public);
    Bn z(BN_new());
    std::unique_ptr<BN_CTX, BnCtxFree> ctx(BN_CTX_new());
    if (BN_is_zero(y.get()) || BN_is_one(y.get()) || BN_cmp(y.get(), p.get()) >= 0)
        throw CryptoError("invalid DH public value");
    if (!z || !ctx || !BN_mod_exp(z.get(), y.get(), x.get(), p.get(), ctx.get()))
        fail("DH derive");
    return bn_bytes(z.get());
}

Bytes deterministic_prime(int bits, std::uint64_t seed)
{
    if (bits < 16)
        throw CryptoError("prime too small");
    std::mt19937_64 rng(seed);
    Bytes start(static_cast<std::size_t>((bits + 7) / 8));
    for (auto& b : start)
        b = static_cast<std::uint8_t>(rng());
    int excess = static_cast<int>(start.size()) * 8 - bits;
    start[0] &= static_cast<std::uint8_t>(0xff >> excess);
    start[0] |= static_cast<std::uint8_t>(0x80 >> excess);
    start.back() |= 1;
    Bn n = bn_from(start);
    std::unique_ptr<BN_CTX, BnCtxFree> ctx(BN_CTX_new());
    for (;;) {
        int r = BN_check_prime(n.get(), ctx.get(), nullptr);
        if (r < 0)
            fail("BN_check_prime");
        if (r == 1)
            break;
        BN_add_word(n.get(), 2);
    }
    if (BN_num_bits(n.get()) != bits)
        throw CryptoError("prime search overflowed bit length");
    return bn_bytes(n.get());
}

} // namespace tlsaudit::tls
