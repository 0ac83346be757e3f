// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tlsaudit Authors

#include "tlsaudit/configuration.hpp"

#include "tlsaudit/error.hpp"

#include <array>
#include <fmt/format.h>

namespace tlsaudit {

namespace {

constexpr std::array<std::string_view, 18> component_names = {
    "DES", "TRIPLE_DES", "RC4", "IDEA", "SEED", "CAMELLIA", "ARIA", "CHACHA", "AES",
    "AES_GCM", "AEAD", "CBC", "MD5", "SHA1", "SHA256", "SHA384", "NULL", "EXPORT"};
constexpr std::array<std::string_view, 3> kex_flag_names = {"RSA", "DHE", "ECDHE"};

} // namespace

std::string_view to_string(Component c) { return component_names[static_cast<std::size_t>(c)]; }
std::string_view to_string(KexFlag k) { return kex_flag_names[static_cast<std::size_t>(k)]; }

Component parse_component(std::string_view s)
{
    for (std::size_t i = 0; i < component_names.size(); ++i)
        if (component_names[i] == s)
            return static_cast<Component>(i);
    throw ParseError(fmt::format("unknown component '{}'", s));
}

KexFlag parse_kex_flag(std::string_view s)
{
    for (std::size_t i = 0; i < kex_flag_names.size(); ++i)
        if (kex_flag_names[i] == s)
            return static_cast<KexFlag>(i);
    throw ParseError(fmt::format("unknown key exchange '{}'", s));
}

ComponentSet components_of(const CipherSuiteInfo& s)
{
    ComponentSet out;
    switch (s.cipher_family) {
    case CipherFamily::AES: out.insert(Component::AES); break;
    case CipherFamily::CAMELLIA: out.insert(Component::CAMELLIA); break;
    case CipherFamily::ARIA: out.insert(Component::ARIA); break;
    case CipherFamily::SEED: out.insert(Component::SEED); break;
    case CipherFamily::IDEA: out.insert(Component::IDEA); break;
    case CipherFamily::CHACHA: out.insert(Component::CHACHA); break;
    case CipherFamily::RC4: out.insert(Component::RC4); break;
    case CipherFamily::DES: out.insert(Component::DES); break;
    case CipherFamily::TRIPLE_DES: out.insert(Component::TRIPLE_DES); break;
    case CipherFamily::NULL_CIPHER: out.insert(Component::NULL_COMPONENT); break;
    case CipherFamily::OTHER: break;
    }
    if (s.cipher_family == CipherFamily::AES && s.cipher_mode == CipherMode::GCM)
        out.insert(Component::AES_GCM);
    if (s.is_aead)
        out.insert(Component::AEAD);
    if (s.cipher_mode == CipherMode::CBC)
        out.insert(Component::CBC);
    switch (s.mac) {
    case Mac::MD5: out.insert(Component::MD5); break;
    case Mac::SHA1: out.insert(Component::SHA1); break;
    case Mac::SHA256: out.insert(Component::SHA256); break;
    case Mac::SHA384: out.insert(Component::SHA384); break;
    case Mac::AEAD:
    case Mac::NONE: break;
    }
    if (s.is_export)
        out.insert(Component::EXPORT);
    return out;
}

void recompute_flags(Configuration& c, const CipherDb& db)
{
    c.component_flags.clear();
    c.kex_flags.clear();
    for (SuiteId id : c.supported_suites) {
        const auto& s = db.at(id);
        auto comps = components_of(s);
        c.component_flags.insert(comps.begin(), comps.end());
        switch (s.kex) {
        case Kex::RSA: c.kex_flags.insert(KexFlag::RSA); break;
        case Kex::DHE: c.kex_flags.insert(KexFlag::DHE); break;
        case Kex::ECDHE: c.kex_flags.insert(KexFlag::ECDHE); break;
        case Kex::OTHER: break;
        }
    }
}

void validate(const Configuration& c, const CipherDb& db)
{
    Configuration copy = c;
    recompute_flags(copy, db);
    if (copy.component_flags != c.component_flags || copy.kex_flags != c.kex_flags)
        throw ValidationError("component flags do not match supported suites");
    if (c.preferred_suite && !c.supported_suites.count(*c.preferred_suite))
        throw ValidationError("preferred_suite not among supported suites");
    if (c.ticket_lifetime_hint_s && !c.session_tickets)
        throw ValidationError("ticket hint present without session tickets");
    if (c.dh_group_common && !c.dh_prime_bits)
        throw ValidationError("dh_group_common present without dh_prime_bits");
}

nlohmann::json to_json(const Configuration& c)
{
    using nlohmann::json;
    json j;
    json versions = json::array();
    for (auto v : c.versions)
        versions.push_back(to_string(v));
    j["versions"] = versions;
    json suites = json::array();
    for (auto id : c.supported_suites)
        suites.push_back(format_suite_id(id));
    j["supported_suites"] = suites;
    json comps = json::array();
    for (auto f : c.component_flags)
        comps.push_back(to_string(f));
    j["component_flags"] = comps;
    json kex = json::array();
    for (auto k : c.kex_flags)
        kex.push_back(to_string(k));
    j["kex_flags"] = kex;
    j["dh_prime_bits"] = c.dh_prime_bits ? json(*c.dh_prime_bits) : json(nullptr);
    j["dh_group_common"] = c.dh_group_common ? json(*c.dh_group_common) : json(nullptr);
    j["server_preference"] = c.server_preference;
    j["preferred_suite"] = c.preferred_suite ? json(format_suite_id(*c.preferred_suite)) : json(nullptr);
    j["session_id_resumption"] = c.session_id_resumption;
    j["session_tickets"] = c.session_tickets;
    j["ticket_lifetime_hint_s"] =
        c.ticket_lifetime_hint_s ? json(*c.ticket_lifetime_hint_s) : json(nullptr);
    j["tls_compression"] = c.tls_compression;
    json exts = json::array();
    for (auto e : c.extensions)
        exts.push_back(to_string(e));
    j["extensions"] = exts;
    j["heartbleed_vulnerable"] = c.heartbleed_vulnerable;
    j["cert_sig_alg"] = to_string(c.cert_sig_alg);
    return j;
}

namespace {

template <typename T>
std::optional<T> opt(const nlohmann::json& j, const char* key)
{
    auto it = j.find(key);
    if (it == j.end() || it->is_null())
        return std::nullopt;
    return it->get<T>();
}

} // namespace

Configuration configuration_from_json(const nlohmann::json& j, const CipherDb& db)
{
    if (!j.is_object())
        throw ParseError("configuration must be a JSON object");
    Configuration c;
    try {
        for (const auto& v : j.at("versions"))
            c.versions.insert(parse_version(v.get<std::string>()));
        for (const auto& s : j.at("supported_suites"))
            c.supported_suites.insert(parse_suite_id(s.get<std::string>()));
        c.dh_prime_bits = opt<int>(j, "dh_prime_bits");
        c.dh_group_common = opt<bool>(j, "dh_group_common");
        c.server_preference = j.value("server_preference", false);
        if (auto p = opt<std::string>(j, "preferred_suite"))
            c.preferred_suite = parse_suite_id(*p);
        c.session_id_resumption = j.value("session_id_resumption", false);
        c.session_tickets = j.value("session_tickets", false);
        c.ticket_lifetime_hint_s = opt<long>(j, "ticket_lifetime_hint_s");
        c.tls_compression = j.value("tls_compression", false);
        if (j.contains("extensions"))
            for (const auto& e : j.at("extensions"))
                c.extensions.insert(parse_extension(e.get<std::string>()));
        c.heartbleed_vulnerable = j.value("heartbleed_vulnerable", false);
        c.cert_sig_alg = parse_cert_sig_alg(j.value("cert_sig_alg", std::string("RSA")));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(fmt::format("bad configuration: {}", e.what()));
    }
    for (SuiteId id : c.supported_suites)
        db.at(id);
    recompute_flags(c, db);
    validate(c, db);
    return c;
}

} // namespace tlsaudit
