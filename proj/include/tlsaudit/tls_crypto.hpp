// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tlsaudit Authors

#pragma once

#include "tlsaudit/cipher_registry.hpp"
#include "tlsaudit/version.hpp"
#include "tlsaudit/wire.hpp"

#include <memory>
#include <optional>
#include <string>
#include <string_view>

typedef struct evp_pkey_st EVP_PKEY;

namespace tlsaudit::tls {

using wire::Bytes;
using wire::ByteView;

class CryptoError : public Error {
public:
    using Error::Error;
};

enum class BulkCipher : std::uint8_t { AES_128_GCM, AES_256_GCM, CHACHA20_POLY1305, AES_128_CBC, AES_256_CBC };
enum class PrfHash : std::uint8_t { SHA256, SHA384 };

// Record-protection and key-exchange parameters of a suite the engine can
// drive to a finished handshake.
struct SuiteParams {
    SuiteId id = 0;
    Kex kex = Kex::RSA;
    Auth auth = Auth::RSA;
    BulkCipher cipher = BulkCipher::AES_128_GCM;
    Mac mac = Mac::AEAD;
    PrfHash prf = PrfHash::SHA256;
    std::size_t key_len = 16;
    std::size_t mac_key_len = 0;
    bool aead() const { return mac == Mac::AEAD; }
    // Implicit IV bytes taken from the key block at this version.
    std::size_t fixed_iv_len(ProtocolVersion v) const;
};

// nullopt when the suite is outside the completion set.
std::optional<SuiteParams> completion_params(const CipherSuiteInfo& s);
SuiteSet completion_suites(const CipherDb& db);

Bytes random_bytes(std::size_t n);
Bytes digest(std::string_view name, ByteView data);

// TLS PRF for 1.0-1.2 (MD5/SHA-1 split below 1.2).
Bytes prf(ProtocolVersion v, PrfHash h, ByteView secret, std::string_view label, ByteView seed,
          std::size_t n);
Bytes master_secret(ProtocolVersion v, const SuiteParams& p, ByteView pre_master,
                    ByteView client_random, ByteView server_random);
Bytes extended_master_secret(ProtocolVersion v, const SuiteParams& p, ByteView pre_master,
                             ByteView transcript);
Bytes transcript_hash(ProtocolVersion v, const SuiteParams& p, ByteView transcript);
Bytes finished_verify_data(ProtocolVersion v, const SuiteParams& p, ByteView master, bool client,
                           ByteView transcript);

struct KeyBlock {
    Bytes client_mac, server_mac, client_key, server_key, client_iv, server_iv;
};
KeyBlock derive_keys(ProtocolVersion v, const SuiteParams& p, ByteView master,
                     ByteView client_random, ByteView server_random);

// One direction of record protection.
class RecordCipher {
public:
    RecordCipher(ProtocolVersion v, const SuiteParams& p, Bytes key, Bytes iv, Bytes mac_key);
    Bytes seal(std::uint8_t type, ByteView plaintext);
    // Throws CryptoError on authentication or padding failure.
    Bytes open(std::uint8_t type, ByteView fragment);

private:
    Bytes aad(std::uint8_t type, std::size_t len) const;
    Bytes mac(std::uint8_t type, ByteView data) const;

    ProtocolVersion version_;
    SuiteParams params_;
    Bytes key_, iv_, mac_key_;
    std::uint64_t seq_ = 0;
};

class PKey {
public:
    PKey() = default;
    static PKey generate_rsa(int bits);
    static PKey generate_ec_p256();
    // Public key of a DER certificate.
    static PKey from_certificate(ByteView der);
    CertSigAlg kind() const;
    EVP_PKEY* get() const { return key_.get(); }
    explicit operator bool() const { return static_cast<bool>(key_); }

private:
    std::shared_ptr<EVP_PKEY> key_;
};

Bytes self_signed_certificate(const PKey& key, const std::string& common_name);
// Key type of the leaf certificate; OTHER on unparseable input.
CertSigAlg certificate_key_kind(ByteView der);

// Signature over client_random + server_random + params, encoded as the
// ServerKeyExchange "signed_params" field for the version.
Bytes sign_server_params(const PKey& key, ProtocolVersion v, ByteView signed_data);

Bytes rsa_encrypt(const PKey& pub, ByteView data);
// nullopt on padding failure.
std::optional<Bytes> rsa_decrypt(const PKey& key, ByteView data);

// Ephemeral ECDH over x25519 or secp256r1.
class EcdhKey {
public:
    static EcdhKey generate(std::uint16_t group);
    std::uint16_t group() const { return group_; }
    Bytes public_bytes() const;
    Bytes derive(ByteView peer_public) const;

private:
    std::uint16_t group_ = 0;
    std::shared_ptr<EVP_PKEY> key_;
};

// Finite-field DH on a caller-supplied group.
class DhKey {
public:
    static DhKey generate(const Bytes& prime, const Bytes& generator);
    Bytes public_bytes() const { return public_; }
    // Shared secret with leading zeros stripped.
    Bytes derive(ByteView peer_public) const;

private:
    Bytes prime_, private_, public_;
};

// Smallest probable prime >= a seed-derived odd start with the top bit set.
Bytes deterministic_prime(int bits, std::uint64_t seed);

} // namespace tlsaudit::tls
