// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tlsaudit Authors

#include "tlsaudit/cipher_registry.hpp"

#include "tlsaudit/error.hpp"
#include "util.hpp"

#include <algorithm>
#include <cstdlib>
#include <array>
#include <fmt/format.h>
#include <fstream>
#include <tuple>

namespace tlsaudit {

namespace {

constexpr std::array<std::string_view, 4> kex_names = {"RSA", "DHE", "ECDHE", "OTHER"};
constexpr std::array<std::string_view, 5> auth_names = {"RSA", "ECDSA", "DSS", "ANON", "OTHER"};
constexpr std::array<std::string_view, 11> family_names = {
    "AES", "CAMELLIA", "ARIA", "SEED", "IDEA", "CHACHA", "RC4", "DES", "TRIPLE_DES", "NULL", "OTHER"};
constexpr std::array<std::string_view, 6> mode_names = {"GCM", "CCM", "CBC", "STREAM", "POLY1305", "NONE"};
constexpr std::array<std::string_view, 6> mac_names = {"MD5", "SHA1", "SHA256", "SHA384", "AEAD", "NONE"};

template <typename E, std::size_t N>
E parse_enum(const std::array<std::string_view, N>& names, std::string_view s, const char* what,
             std::size_t line)
{
    for (std::size_t i = 0; i < N; ++i)
        if (names[i] == s)
            return static_cast<E>(i);
    throw ParseError(fmt::format("line {}: bad {} '{}'", line, what, s), line);
}

bool parse_bool(std::string_view s, const char* what, std::size_t line)
{
    if (s == "true")
        return true;
    if (s == "false")
        return false;
    throw ParseError(fmt::format("line {}: bad {} '{}'", line, what, s), line);
}

// Same content as data/browser_union.txt; a unit test keeps them in sync.
const std::vector<SuiteId> union_ids = {
    0xC02B, 0xC02F, 0xC02C, 0xC030, 0xCCA9, 0xCCA8, 0xC024, 0xC023, 0xC028,
    0xC027, 0xC00A, 0xC009, 0xC014, 0xC013, 0x0033, 0x0039, 0x009C, 0x009D,
    0x003D, 0x003C, 0x002F, 0x0035, 0xC008, 0xC012, 0x000A,
};

int kex_rank(Kex k)
{
    switch (k) {
    case Kex::ECDHE: return 0;
    case Kex::DHE: return 1;
    case Kex::RSA: return 2;
    case Kex::OTHER: return 3;
    }
    return 3;
}

int family_rank(CipherFamily f)
{
    switch (f) {
    case CipherFamily::AES: return 0;
    case CipherFamily::CHACHA: return 1;
    case CipherFamily::CAMELLIA: return 2;
    case CipherFamily::ARIA: return 3;
    case CipherFamily::SEED: return 4;
    case CipherFamily::IDEA: return 5;
    case CipherFamily::TRIPLE_DES: return 6;
    case CipherFamily::RC4: return 7;
    case CipherFamily::DES: return 8;
    case CipherFamily::OTHER: return 9;
    case CipherFamily::NULL_CIPHER: return 10;
    }
    return 9;
}

int mac_rank(Mac m)
{
    switch (m) {
    case Mac::AEAD: return 0;
    case Mac::SHA384: return 1;
    case Mac::SHA256: return 2;
    case Mac::SHA1: return 3;
    case Mac::MD5: return 4;
    case Mac::NONE: return 5;
    }
    return 5;
}

} // namespace

std::string_view to_string(Kex v) { return kex_names[static_cast<std::size_t>(v)]; }
std::string_view to_string(Auth v) { return auth_names[static_cast<std::size_t>(v)]; }
std::string_view to_string(CipherFamily v) { return family_names[static_cast<std::size_t>(v)]; }
std::string_view to_string(CipherMode v) { return mode_names[static_cast<std::size_t>(v)]; }
std::string_view to_string(Mac v) { return mac_names[static_cast<std::size_t>(v)]; }

const CipherSuiteInfo* CipherDb::find(SuiteId id) const
{
    auto it = suites.find(id);
    return it == suites.end() ? nullptr : &it->second;
}

const CipherSuiteInfo& CipherDb::at(SuiteId id) const
{
    if (auto* s = find(id))
        return *s;
    throw ValidationError(fmt::format("cipher suite {} not in registry", format_suite_id(id)));
}

CipherDb parse_registry(std::istream& in, std::string source_version)
{
    CipherDb db;
    db.source_version = std::move(source_version);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        if (lineno == 1 && line.starts_with("id,"))
            continue;
        auto f = detail::split(line, ',');
        if (f.size() != 12)
            throw ParseError(fmt::format("line {}: expected 12 fields, got {}", lineno, f.size()), lineno);
        CipherSuiteInfo s;
        try {
            s.id = parse_suite_id(f[0]);
        } catch (const ParseError&) {
            throw ParseError(fmt::format("line {}: bad id '{}'", lineno, f[0]), lineno);
        }
        s.name = f[1];
        s.kex = parse_enum<Kex>(kex_names, f[2], "kex", lineno);
        s.auth = parse_enum<Auth>(auth_names, f[3], "auth", lineno);
        s.cipher_family = parse_enum<CipherFamily>(family_names, f[4], "cipher_family", lineno);
        s.cipher_mode = parse_enum<CipherMode>(mode_names, f[5], "cipher_mode", lineno);
        s.mac = parse_enum<Mac>(mac_names, f[6], "mac", lineno);
        s.is_aead = parse_bool(f[7], "is_aead", lineno);
        s.is_export = parse_bool(f[8], "is_export", lineno);
        auto vmin = try_parse_version(f[9]);
        auto vmax = try_parse_version(f[10]);
        if (!vmin || !vmax || *vmin > *vmax)
            throw ParseError(fmt::format("line {}: bad version range", lineno), lineno);
        s.min_version = *vmin;
        s.max_version = *vmax;
        s.unsupported_by_engine = parse_bool(f[11], "unsupported_by_engine", lineno);

        bool aead_mode = s.cipher_mode == CipherMode::GCM || s.cipher_mode == CipherMode::CCM ||
                         s.cipher_mode == CipherMode::POLY1305;
        if (s.is_aead != aead_mode)
            throw ValidationError(fmt::format("line {}: is_aead disagrees with cipher_mode", lineno));
        if (s.is_export && s.name.find("EXPORT") == std::string::npos)
            throw ValidationError(fmt::format("line {}: is_export without EXPORT in name", lineno));
        if (!db.suites.emplace(s.id, std::move(s)).second)
            throw ValidationError(fmt::format("line {}: duplicate suite id {}", lineno, f[0]));
    }
    return db;
}

CipherDb load_registry(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error(fmt::format("cannot open registry {}", path.string()));
    return parse_registry(in, path.filename().string());
}

std::string registry_row(const CipherSuiteInfo& s)
{
    return fmt::format("{},{},{},{},{},{},{},{},{},{},{},{}", format_suite_id(s.id), s.name,
                       to_string(s.kex), to_string(s.auth), to_string(s.cipher_family),
                       to_string(s.cipher_mode), to_string(s.mac), s.is_aead, s.is_export,
                       to_string(s.min_version), to_string(s.max_version), s.unsupported_by_engine);
}

const std::vector<SuiteId>& browser_union_ids() { return union_ids; }

std::vector<SuiteId> browser_union(const CipherDb& db)
{
    for (SuiteId id : union_ids)
        if (!db.contains(id))
            throw ValidationError(
                fmt::format("browser union member {} missing from registry", format_suite_id(id)));
    return union_ids;
}

bool SuiteFilter::matches(const CipherSuiteInfo& s) const
{
    if (contradiction)
        return false;
    return (!kex || s.kex == *kex) && (!auth || s.auth == *auth) &&
           (!cipher_family || s.cipher_family == *cipher_family) &&
           (!cipher_mode || s.cipher_mode == *cipher_mode) && (!mac || s.mac == *mac) &&
           (!is_aead || s.is_aead == *is_aead) && (!is_export || s.is_export == *is_export) &&
           (!unsupported_by_engine || s.unsupported_by_engine == *unsupported_by_engine) &&
           (!usable_at || s.usable_at(*usable_at));
}

namespace {

template <typename T>
void merge_field(std::optional<T>& out, const std::optional<T>& a, const std::optional<T>& b,
                 bool& contradiction)
{
    if (a && b && *a != *b)
        contradiction = true;
    out = a ? a : b;
}

} // namespace

SuiteFilter operator&(const SuiteFilter& a, const SuiteFilter& b)
{
    SuiteFilter r;
    r.contradiction = a.contradiction || b.contradiction;
    merge_field(r.kex, a.kex, b.kex, r.contradiction);
    merge_field(r.auth, a.auth, b.auth, r.contradiction);
    merge_field(r.cipher_family, a.cipher_family, b.cipher_family, r.contradiction);
    merge_field(r.cipher_mode, a.cipher_mode, b.cipher_mode, r.contradiction);
    merge_field(r.mac, a.mac, b.mac, r.contradiction);
    merge_field(r.is_aead, a.is_aead, b.is_aead, r.contradiction);
    merge_field(r.is_export, a.is_export, b.is_export, r.contradiction);
    merge_field(r.unsupported_by_engine, a.unsupported_by_engine, b.unsupported_by_engine,
                r.contradiction);
    merge_field(r.usable_at, a.usable_at, b.usable_at, r.contradiction);
    return r;
}

SuiteSet suites_matching(const CipherDb& db, const SuiteFilter& filter)
{
    SuiteSet out;
    for (const auto& [id, s] : db.suites)
        if (filter.matches(s))
            out.insert(id);
    return out;
}

bool cert_compatible(const CipherSuiteInfo& s, CertSigAlg cert)
{
    switch (cert) {
    case CertSigAlg::RSA: return s.auth == Auth::RSA;
    case CertSigAlg::ECDSA: return s.auth == Auth::ECDSA;
    case CertSigAlg::OTHER: return false;
    }
    return false;
}

std::vector<SuiteId> preference_order(const CipherDb& db, const SuiteSet& ids)
{
    auto key = [&](SuiteId id) {
        auto pos = std::find(union_ids.begin(), union_ids.end(), id);
        int union_rank = pos == union_ids.end() ? 1000 : static_cast<int>(pos - union_ids.begin());
        const CipherSuiteInfo* s = db.find(id);
        if (!s)
            return std::make_tuple(union_rank, 2, 1, 9, 99, 9, 9, id);
        return std::make_tuple(union_rank, s->is_export ? 1 : 0,
                               s->cipher_family == CipherFamily::NULL_CIPHER ? 1 : 0,
                               s->is_aead ? 0 : 1, kex_rank(s->kex), family_rank(s->cipher_family),
                               mac_rank(s->mac), id);
    };
    std::vector<SuiteId> out(ids.begin(), ids.end());
    std::stable_sort(out.begin(), out.end(), [&](SuiteId a, SuiteId b) { return key(a) < key(b); });
    return out;
}

std::vector<SuiteId> engine_offer(const CipherDb& db, CertSigAlg cert)
{
    SuiteSet ids;
    for (const auto& [id, s] : db.suites)
        if (!s.unsupported_by_engine && cert_compatible(s, cert))
            ids.insert(id);
    return preference_order(db, ids);
}

StrengthMap load_strength_classes(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error(fmt::format("cannot open strength classes {}", path.string()));
    StrengthMap out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line.starts_with("id,"))
            continue;
        auto f = detail::split(line, ',');
        if (f.size() != 2)
            throw ParseError(fmt::format("line {}: expected id,class", lineno), lineno);
        StrengthClass c;
        if (f[1] == "HIGH")
            c = StrengthClass::HIGH;
        else if (f[1] == "MEDIUM")
            c = StrengthClass::MEDIUM;
        else if (f[1] == "LOW")
            c = StrengthClass::LOW;
        else
            throw ParseError(fmt::format("line {}: bad class '{}'", lineno, f[1]), lineno);
        out[parse_suite_id(f[0])] = c;
    }
    return out;
}

std::filesystem::path default_data_dir()
{
    if (const char* env = std::getenv("TLSAUDIT_DATA_DIR"); env && *env)
        return env;
    return TLSAUDIT_DATA_DIR;
}

const CipherDb& bundled_registry()
{
    static const CipherDb db = load_registry(default_data_dir() / "cipher_suites.csv");
    return db;
}

} // namespace tlsaudit
