// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tlsaudit Authors

#include "tlsaudit/cipher_string.hpp"

#include "tlsaudit/error.hpp"

#include "json.hpp"

#include <algorithm>
#include <fmt/format.h>
#include <fstream>
#include <functional>
#include <spdlog/spdlog.h>

namespace tlsaudit {

namespace {

// Key exchange/authentication part of an IANA name: "ECDHE_RSA" for
// TLS_ECDHE_RSA_WITH_AES_128_GCM_SHA256.
std::string_view kx_part(const CipherSuiteInfo& s)
{
    std::string_view n = s.name;
    auto with = n.find("_WITH_");
    if (!n.starts_with("TLS_") || with == std::string_view::npos)
        return {};
    return n.substr(4, with - 4);
}

bool kx_is(const CipherSuiteInfo& s, std::initializer_list<std::string_view> names)
{
    auto kx = kx_part(s);
    for (auto n : names)
        if (kx == n || (kx.starts_with(n) && kx.substr(n.size()).starts_with("_EXPORT")))
            return true;
    return false;
}

bool has_bits(const CipherSuiteInfo& s, std::string_view bits)
{
    return s.name.find(fmt::format("_{}_", bits)) != std::string::npos;
}

bool is_psk(const CipherSuiteInfo& s) { return kx_part(s).find("PSK") != std::string_view::npos; }

bool is_k_dhe(const CipherSuiteInfo& s) { return kx_is(s, {"DHE_RSA", "DHE_DSS", "DH_anon"}); }
bool is_k_ecdhe(const CipherSuiteInfo& s) { return kx_is(s, {"ECDHE_RSA", "ECDHE_ECDSA", "ECDH_anon"}); }
bool is_static_dh(const CipherSuiteInfo& s) { return kx_is(s, {"DH_RSA", "DH_DSS"}); }
bool is_static_ecdh(const CipherSuiteInfo& s) { return kx_is(s, {"ECDH_RSA", "ECDH_ECDSA"}); }
bool is_anon(const CipherSuiteInfo& s) { return s.auth == Auth::ANON; }

// Suites libssl 1.1 and later leave out of DEFAULT even when compiled in.
bool not_default(const CipherSuiteInfo& s)
{
    switch (s.cipher_family) {
    case CipherFamily::CAMELLIA:
    case CipherFamily::ARIA:
    case CipherFamily::SEED:
    case CipherFamily::IDEA:
    case CipherFamily::RC4:
    case CipherFamily::DES:
    case CipherFamily::TRIPLE_DES: return true;
    default: break;
    }
    return is_anon(s) || s.auth == Auth::DSS || s.cipher_mode == CipherMode::CCM || s.is_export;
}

bool strength_is(const StrengthMap& m, SuiteId id, StrengthClass c)
{
    auto it = m.find(id);
    return it != m.end() && it->second == c;
}

using Pred = std::function<bool(const CipherSuiteInfo&, const StrengthMap&)>;

const std::map<std::string, Pred, std::less<>>& keyword_table()
{
    using S = const CipherSuiteInfo&;
    using M = const StrengthMap&;
    static const std::map<std::string, Pred, std::less<>> table = [] {
        std::map<std::string, Pred, std::less<>> t;
        auto fam = [](CipherFamily f) { return [f](S s, M) { return s.cipher_family == f; }; };
        auto fam_bits = [](CipherFamily f, std::string_view bits) {
            return [f, bits](S s, M) { return s.cipher_family == f && has_bits(s, bits); };
        };
        auto mac = [](Mac m) { return [m](S s, M) { return s.mac == m; }; };
        auto minv = [](ProtocolVersion v) { return [v](S s, M) { return s.min_version == v; }; };

        t["ALL"] = [](S s, M) { return s.cipher_family != CipherFamily::NULL_CIPHER; };
        t["COMPLEMENTOFALL"] = [](S s, M) { return s.cipher_family == CipherFamily::NULL_CIPHER; };
        t["DEFAULT"] = [](S s, M) { return s.cipher_family != CipherFamily::NULL_CIPHER && !not_default(s); };
        t["COMPLEMENTOFDEFAULT"] = [](S s, M) { return s.cipher_family != CipherFamily::NULL_CIPHER && not_default(s); };
        t["HIGH"] = [](S s, M m) { return strength_is(m, s.id, StrengthClass::HIGH); };
        t["MEDIUM"] = [](S s, M m) { return strength_is(m, s.id, StrengthClass::MEDIUM); };
        t["LOW"] = [](S s, M m) { return strength_is(m, s.id, StrengthClass::LOW); };
        t["EXPORT"] = t["EXP"] = [](S s, M) { return s.is_export; };
        t["eNULL"] = t["NULL"] = fam(CipherFamily::NULL_CIPHER);
        t["aNULL"] = [](S s, M) { return is_anon(s); };

        t["kRSA"] = t["RSA"] = [](S s, M) { return s.kex == Kex::RSA; };
        t["aRSA"] = [](S s, M) { return s.auth == Auth::RSA || kx_is(s, {"RSA_PSK"}); };
        t["aECDSA"] = t["ECDSA"] = [](S s, M) { return s.auth == Auth::ECDSA; };
        t["aDSS"] = t["DSS"] = [](S s, M) { return s.auth == Auth::DSS; };
        t["kDHE"] = t["kEDH"] = [](S s, M) { return is_k_dhe(s); };
        t["DHE"] = t["EDH"] = [](S s, M) { return is_k_dhe(s) && !is_anon(s); };
        t["ADH"] = [](S s, M) { return is_k_dhe(s) && is_anon(s); };
        t["DH"] = [](S s, M) { return is_k_dhe(s) || is_static_dh(s); };
        t["kDH"] = t["aDH"] = [](S s, M) { return is_static_dh(s); };
        t["kECDHE"] = t["kEECDH"] = [](S s, M) { return is_k_ecdhe(s); };
        t["ECDHE"] = t["EECDH"] = [](S s, M) { return is_k_ecdhe(s) && !is_anon(s); };
        t["AECDH"] = [](S s, M) { return is_k_ecdhe(s) && is_anon(s); };
        t["ECDH"] = [](S s, M) { return is_k_ecdhe(s) || is_static_ecdh(s); };
        t["kECDH"] = t["aECDH"] = [](S s, M) { return is_static_ecdh(s); };
        t["PSK"] = [](S s, M) { return is_psk(s); };
        t["kPSK"] = [](S s, M) { return kx_is(s, {"PSK"}); };
        t["kDHEPSK"] = [](S s, M) { return kx_is(s, {"DHE_PSK"}); };
        t["kECDHEPSK"] = [](S s, M) { return kx_is(s, {"ECDHE_PSK"}); };
        t["kRSAPSK"] = [](S s, M) { return kx_is(s, {"RSA_PSK"}); };
        t["aPSK"] = [](S s, M) { return kx_is(s, {"PSK", "DHE_PSK", "ECDHE_PSK"}); };
        t["SRP"] = t["kSRP"] = [](S s, M) { return kx_part(s).starts_with("SRP"); };
        t["aSRP"] = [](S s, M) { return kx_is(s, {"SRP_SHA"}); };
        t["KRB5"] = t["kKRB5"] = [](S s, M) { return kx_part(s).starts_with("KRB5"); };

        t["AES"] = fam(CipherFamily::AES);
        t["AES128"] = fam_bits(CipherFamily::AES, "128");
        t["AES256"] = fam_bits(CipherFamily::AES, "256");
        t["AESGCM"] = [](S s, M) { return s.cipher_family == CipherFamily::AES && s.cipher_mode == CipherMode::GCM; };
        t["AESCCM"] = [](S s, M) { return s.cipher_family == CipherFamily::AES && s.cipher_mode == CipherMode::CCM; };
        t["AESCCM8"] = [](S s, M) {
            return s.cipher_family == CipherFamily::AES && s.cipher_mode == CipherMode::CCM &&
                   s.name.find("CCM_8") != std::string::npos;
        };
        t["CAMELLIA"] = fam(CipherFamily::CAMELLIA);
        t["CAMELLIA128"] = fam_bits(CipherFamily::CAMELLIA, "128");
        t["CAMELLIA256"] = fam_bits(CipherFamily::CAMELLIA, "256");
        t["ARIA"] = fam(CipherFamily::ARIA);
        t["ARIA128"] = fam_bits(CipherFamily::ARIA, "128");
        t["ARIA256"] = fam_bits(CipherFamily::ARIA, "256");
        t["ARIAGCM"] = [](S s, M) { return s.cipher_family == CipherFamily::ARIA && s.cipher_mode == CipherMode::GCM; };
        t["CHACHA20"] = fam(CipherFamily::CHACHA);
        t["3DES"] = fam(CipherFamily::TRIPLE_DES);
        t["DES"] = fam(CipherFamily::DES);
        t["RC4"] = fam(CipherFamily::RC4);
        t["RC2"] = [](S s, M) { return s.name.find("_RC2_") != std::string::npos; };
        t["IDEA"] = fam(CipherFamily::IDEA);
        t["SEED"] = fam(CipherFamily::SEED);

        t["MD5"] = mac(Mac::MD5);
        t["SHA1"] = t["SHA"] = mac(Mac::SHA1);
        t["SHA256"] = mac(Mac::SHA256);
        t["SHA384"] = mac(Mac::SHA384);

        t["SSLv2"] = [](S, M) { return false; };
        t["SSLv3"] = minv(ProtocolVersion::SSLv3);
        t["TLSv1"] = t["TLSv1.0"] = minv(ProtocolVersion::TLS1_0);
        t["TLSv1.2"] = minv(ProtocolVersion::TLS1_2);
        return t;
    }();
    return table;
}

bool is_sep(char c) { return c == ':' || c == ',' || c == ' '; }

} // namespace

bool is_known_keyword(std::string_view kw) { return keyword_table().count(kw) != 0; }

std::vector<std::string> known_keywords()
{
    std::vector<std::string> out;
    for (const auto& [k, _] : keyword_table())
        out.push_back(k);
    return out;
}

bool keyword_matches(std::string_view kw, const CipherSuiteInfo& s, const StrengthMap& strength)
{
    auto it = keyword_table().find(kw);
    if (it == keyword_table().end())
        throw ParseError(fmt::format("unknown cipher keyword '{}'", kw));
    return it->second(s, strength);
}

CipherExpr parse_cipher_string(std::string_view text)
{
    CipherExpr expr;
    std::size_t i = 0;
    while (i < text.size()) {
        if (is_sep(text[i])) {
            ++i;
            continue;
        }
        std::size_t start = i;
        while (i < text.size() && !is_sep(text[i]))
            ++i;
        std::string_view tok = text.substr(start, i - start);
        CipherTerm term;
        std::size_t body = 0;
        switch (tok[0]) {
        case '!': term.modifier = TermModifier::EXCLUDE; body = 1; break;
        case '-': term.modifier = TermModifier::REMOVE; body = 1; break;
        case '+': term.modifier = TermModifier::PROMOTE; body = 1; break;
        default: break;
        }
        std::string_view rest = tok.substr(body);
        if (rest.starts_with("@")) {
            if (term.modifier != TermModifier::NONE)
                throw ParseError(fmt::format("modifier on directive at offset {}", start), start);
            spdlog::warn("cipher string directive '{}' ignored", rest);
            term.directive = true;
            term.keywords.emplace_back(rest);
            expr.terms.push_back(std::move(term));
            continue;
        }
        std::size_t kw_start = start + body;
        for (;;) {
            auto plus = rest.find('+');
            std::string_view kw = rest.substr(0, plus);
            if (kw.empty())
                throw ParseError(fmt::format("empty keyword at offset {}", kw_start), kw_start);
            if (!is_known_keyword(kw))
                throw ParseError(fmt::format("unknown cipher keyword '{}' at offset {}", kw, kw_start),
                                 kw_start);
            term.keywords.emplace_back(kw);
            if (plus == std::string_view::npos)
                break;
            rest.remove_prefix(plus + 1);
            kw_start += plus + 1;
        }
        expr.terms.push_back(std::move(term));
    }
    if (expr.terms.empty())
        throw ParseError("empty cipher string", 0);
    return expr;
}

std::string to_string(const CipherExpr& e)
{
    std::string out;
    for (const auto& t : e.terms) {
        if (!out.empty())
            out += ':';
        switch (t.modifier) {
        case TermModifier::EXCLUDE: out += '!'; break;
        case TermModifier::REMOVE: out += '-'; break;
        case TermModifier::PROMOTE: out += '+'; break;
        case TermModifier::NONE: break;
        }
        for (std::size_t k = 0; k < t.keywords.size(); ++k) {
            if (k)
                out += '+';
            out += t.keywords[k];
        }
    }
    return out;
}

LibraryProfile load_profile(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error(fmt::format("cannot open profile {}", path.string()));
    LibraryProfile p;
    try {
        auto j = nlohmann::json::parse(in);
        p.name = j.at("name").get<std::string>();
        for (const auto& v : j.at("versions"))
            p.versions.insert(parse_version(v.get<std::string>()));
        for (const auto& s : j.at("suites"))
            p.suites.insert(parse_suite_id(s.get<std::string>()));
        p.notes = j.value("notes", "");
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(fmt::format("{}: {}", path.string(), e.what()));
    }
    return p;
}

std::map<std::string, LibraryProfile> load_profiles(const std::filesystem::path& dir)
{
    std::map<std::string, LibraryProfile> out;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.path().extension() != ".json")
            continue;
        auto p = load_profile(entry.path());
        out[p.name] = std::move(p);
    }
    return out;
}

LibraryProfile union_profile(const std::map<std::string, LibraryProfile>& profiles)
{
    LibraryProfile u;
    u.name = "union";
    for (const auto& [_, p] : profiles) {
        u.versions.insert(p.versions.begin(), p.versions.end());
        u.suites.insert(p.suites.begin(), p.suites.end());
    }
    return u;
}

const StrengthMap& bundled_strength_classes()
{
    static const StrengthMap m = load_strength_classes(default_data_dir() / "strength_classes.csv");
    return m;
}

std::vector<SuiteId> expand(const CipherExpr& e, const CipherDb& db, const SuiteSet& profile,
                            const StrengthMap& strength)
{
    SuiteSet universe_ids;
    for (const auto& [id, s] : db.suites)
        if (s.min_version <= ProtocolVersion::TLS1_2)
            universe_ids.insert(id);
    const std::vector<SuiteId> universe = preference_order(db, universe_ids);

    std::vector<SuiteId> list;
    SuiteSet banned;
    for (const auto& term : e.terms) {
        if (term.directive)
            continue;
        std::vector<SuiteId> matched;
        for (SuiteId id : universe) {
            const auto& s = db.at(id);
            bool all = std::all_of(term.keywords.begin(), term.keywords.end(),
                                   [&](const std::string& kw) { return keyword_matches(kw, s, strength); });
            if (all)
                matched.push_back(id);
        }
        auto in_list = [&](SuiteId id) { return std::find(list.begin(), list.end(), id) != list.end(); };
        SuiteSet mset(matched.begin(), matched.end());
        switch (term.modifier) {
        case TermModifier::NONE:
            for (SuiteId id : matched)
                if (!banned.count(id) && !in_list(id))
                    list.push_back(id);
            break;
        case TermModifier::PROMOTE: {
            std::vector<SuiteId> keep, moved;
            for (SuiteId id : list)
                (mset.count(id) ? moved : keep).push_back(id);
            keep.insert(keep.end(), moved.begin(), moved.end());
            list = std::move(keep);
            break;
        }
        case TermModifier::REMOVE:
            std::erase_if(list, [&](SuiteId id) { return mset.count(id) != 0; });
            break;
        case TermModifier::EXCLUDE:
            std::erase_if(list, [&](SuiteId id) { return mset.count(id) != 0; });
            banned.insert(mset.begin(), mset.end());
            break;
        }
    }
    std::erase_if(list, [&](SuiteId id) { return !profile.count(id); });
    return list;
}

std::vector<SuiteId> expand(const CipherExpr& e, const CipherDb& db, const SuiteSet& profile)
{
    return expand(e, db, profile, bundled_strength_classes());
}

} // namespace tlsaudit
