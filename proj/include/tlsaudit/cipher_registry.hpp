// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tlsaudit Authors

#pragma once

#include "tlsaudit/version.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace tlsaudit {

using SuiteId = std::uint16_t;
using SuiteSet = std::set<SuiteId>;

enum class Kex : std::uint8_t { RSA, DHE, ECDHE, OTHER };
enum class Auth : std::uint8_t { RSA, ECDSA, DSS, ANON, OTHER };
enum class CipherFamily : std::uint8_t {
    AES, CAMELLIA, ARIA, SEED, IDEA, CHACHA, RC4, DES, TRIPLE_DES, NULL_CIPHER, OTHER
};
enum class CipherMode : std::uint8_t { GCM, CCM, CBC, STREAM, POLY1305, NONE };
enum class Mac : std::uint8_t { MD5, SHA1, SHA256, SHA384, AEAD, NONE };

std::string_view to_string(Kex);
std::string_view to_string(Auth);
std::string_view to_string(CipherFamily);
std::string_view to_string(CipherMode);
std::string_view to_string(Mac);

struct CipherSuiteInfo {
    SuiteId id = 0;
    std::string name;
    Kex kex = Kex::OTHER;
    Auth auth = Auth::OTHER;
    CipherFamily cipher_family = CipherFamily::OTHER;
    CipherMode cipher_mode = CipherMode::NONE;
    Mac mac = Mac::NONE;
    bool is_aead = false;
    bool is_export = false;
    ProtocolVersion min_version = ProtocolVersion::SSLv3;
    ProtocolVersion max_version = ProtocolVersion::TLS1_2;
    bool unsupported_by_engine = false;

    bool usable_at(ProtocolVersion v) const { return min_version <= v && v <= max_version; }
    bool operator==(const CipherSuiteInfo&) const = default;
};

class CipherDb {
public:
    std::map<SuiteId, CipherSuiteInfo> suites;
    std::string source_version;

    const CipherSuiteInfo* find(SuiteId id) const;
    // Throws ValidationError naming the code point when absent.
    const CipherSuiteInfo& at(SuiteId id) const;
    bool contains(SuiteId id) const { return suites.count(id) != 0; }
    bool empty() const { return suites.empty(); }
};

// Parses the registry CSV. Malformed rows raise ParseError carrying the
// 1-based line number; duplicate ids raise ValidationError.
CipherDb parse_registry(std::istream& in, std::string source_version = "");
CipherDb load_registry(const std::filesystem::path& path);

// One CSV row in the registry file format (no trailing newline).
std::string registry_row(const CipherSuiteInfo& s);
inline constexpr const char* registry_header =
    "id,name,kex,auth,cipher_family,cipher_mode,mac,is_aead,is_export,"
    "min_version,max_version,unsupported_by_engine";

// Deduplicated TLS 1.2 suite union of Chrome 65, Safari 13.0.1, Firefox 66 and
// Edge 18, in the order listed in data/browser_union.txt.
std::vector<SuiteId> browser_union(const CipherDb& db);
const std::vector<SuiteId>& browser_union_ids();

// Conjunction of field constraints. Unset fields match anything.
struct SuiteFilter {
    std::optional<Kex> kex;
    std::optional<Auth> auth;
    std::optional<CipherFamily> cipher_family;
    std::optional<CipherMode> cipher_mode;
    std::optional<Mac> mac;
    std::optional<bool> is_aead;
    std::optional<bool> is_export;
    std::optional<bool> unsupported_by_engine;
    // Matches suites usable at this version.
    std::optional<ProtocolVersion> usable_at;
    // Set when two filters constrain the same field differently.
    bool contradiction = false;

    bool matches(const CipherSuiteInfo& s) const;
};

SuiteFilter operator&(const SuiteFilter& a, const SuiteFilter& b);

SuiteSet suites_matching(const CipherDb& db, const SuiteFilter& filter);

// Whether a leaf certificate of this kind can authenticate the suite.
bool cert_compatible(const CipherSuiteInfo& s, CertSigAlg cert);

// Stable sort into the scanner's offer order: browser-union members first in
// union order, then AEAD before CBC/stream, ECDHE before DHE before RSA,
// stronger families and MACs first, EXPORT last, id as tiebreak.
std::vector<SuiteId> preference_order(const CipherDb& db, const SuiteSet& ids);

// Every engine-supported, cert-compatible suite, in preference order.
std::vector<SuiteId> engine_offer(const CipherDb& db, CertSigAlg cert);

enum class StrengthClass : std::uint8_t { HIGH, MEDIUM, LOW };
using StrengthMap = std::map<SuiteId, StrengthClass>;
StrengthMap load_strength_classes(const std::filesystem::path& path);

// Bundled data directory; the TLSAUDIT_DATA_DIR environment variable
// overrides the build-time location.
std::filesystem::path default_data_dir();

// Registry loaded once from default_data_dir().
const CipherDb& bundled_registry();

} // namespace tlsaudit
