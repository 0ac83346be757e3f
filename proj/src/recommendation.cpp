// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tlsaudit Authors

#include "tlsaudit/recommendation.hpp"

#include "tlsaudit/error.hpp"
#include "util.hpp"

#include <algorithm>
#include <fmt/format.h>
#include <fstream>

namespace tlsaudit {

namespace {

std::optional<ProtocolVersion> directive_version(std::string_view tok)
{
    std::string t = detail::lower(tok);
    if (t == "sslv2")
        return ProtocolVersion::SSLv2;
    if (t == "sslv3")
        return ProtocolVersion::SSLv3;
    if (t == "tlsv1" || t == "tlsv1.0")
        return ProtocolVersion::TLS1_0;
    if (t == "tlsv1.1")
        return ProtocolVersion::TLS1_1;
    if (t == "tlsv1.2")
        return ProtocolVersion::TLS1_2;
    if (t == "tlsv1.3")
        return ProtocolVersion::TLS1_3;
    return try_parse_version(tok);
}

} // namespace

VersionSet parse_protocol_directive(std::string_view text)
{
    VersionSet out;
    std::size_t offset = 0;
    for (const auto& raw : detail::split(text, ' ')) {
        std::size_t here = offset;
        offset += raw.size() + 1;
        if (raw.empty())
            continue;
        char mod = raw[0] == '+' || raw[0] == '-' ? raw[0] : 0;
        std::string_view tok = std::string_view(raw).substr(mod ? 1 : 0);
        VersionSet these;
        if (detail::lower(tok) == "all") {
            these.insert(std::begin(all_versions), std::end(all_versions));
        } else if (auto v = directive_version(tok)) {
            these.insert(*v);
        } else {
            throw ParseError(fmt::format("unknown protocol '{}' at offset {}", tok, here), here);
        }
        for (auto v : these) {
            if (mod == '-')
                out.erase(v);
            else
                out.insert(v);
        }
    }
    return out;
}

Recommendation recommendation_from_json(const nlohmann::json& j)
{
    if (!j.is_object())
        throw ParseError("recommendation must be a JSON object");
    Recommendation r;
    try {
        if (auto it = j.find("cipher_expr"); it != j.end() && !it->is_null())
            r.cipher_expr = parse_cipher_string(it->get<std::string>());
        if (auto it = j.find("protocols"); it != j.end() && !it->is_null()) {
            if (it->is_string()) {
                r.protocols = parse_protocol_directive(it->get<std::string>());
            } else {
                VersionSet vs;
                for (const auto& v : *it) {
                    auto name = v.get<std::string>();
                    auto pv = directive_version(name);
                    if (!pv)
                        throw ParseError(fmt::format("unknown protocol '{}'", name));
                    vs.insert(*pv);
                }
                r.protocols = vs;
            }
        }
        if (auto it = j.find("server_preference"); it != j.end() && !it->is_null())
            r.server_preference = it->get<bool>();
        if (auto it = j.find("session_tickets"); it != j.end() && !it->is_null())
            r.session_tickets = it->get<bool>();
        if (auto it = j.find("dh_params_bits"); it != j.end() && !it->is_null())
            r.dh_params_bits = it->get<int>();
        if (auto it = j.find("source"); it != j.end() && it->is_object()) {
            r.source.url = it->value("url", "");
            r.source.language = it->value("language", "");
            r.source.publication_date = it->value("publication_date", "");
            r.source.kind = it->value("kind", "");
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(fmt::format("bad recommendation: {}", e.what()));
    }
    if (!r.has_directive())
        throw ValidationError("recommendation has no directive");
    return r;
}

nlohmann::json to_json(const Recommendation& r)
{
    nlohmann::json j = nlohmann::json::object();
    if (r.cipher_expr)
        j["cipher_expr"] = to_string(*r.cipher_expr);
    if (r.protocols) {
        auto arr = nlohmann::json::array();
        for (auto v : *r.protocols)
            arr.push_back(to_string(v));
        j["protocols"] = arr;
    }
    if (r.server_preference)
        j["server_preference"] = *r.server_preference;
    if (r.session_tickets)
        j["session_tickets"] = *r.session_tickets;
    if (r.dh_params_bits)
        j["dh_params_bits"] = *r.dh_params_bits;
    j["source"] = {{"url", r.source.url},
                   {"language", r.source.language},
                   {"publication_date", r.source.publication_date},
                   {"kind", r.source.kind}};
    return j;
}

std::vector<Recommendation> load_recommendations(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error(fmt::format("cannot open {}", path.string()));
    std::vector<Recommendation> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::trim(line).empty())
            continue;
        try {
            out.push_back(recommendation_from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(fmt::format("line {}: {}", lineno, e.what()), lineno);
        } catch (const ParseError& e) {
            throw ParseError(fmt::format("line {}: {}", lineno, e.what()), lineno);
        }
    }
    return out;
}

bool consistent(const Configuration& config, const Recommendation& rec, const CipherDb& db,
                const SuiteSet& profile_union)
{
    if (rec.cipher_expr) {
        auto expanded = expand(*rec.cipher_expr, db, profile_union);
        SuiteSet allowed(expanded.begin(), expanded.end());
        bool overlap = std::any_of(config.supported_suites.begin(), config.supported_suites.end(),
                                   [&](SuiteId id) { return allowed.count(id) != 0; });
        bool subset = std::all_of(config.supported_suites.begin(), config.supported_suites.end(),
                                  [&](SuiteId id) { return allowed.count(id) != 0; });
        if (!overlap || !subset)
            return false;
    }
    if (rec.protocols &&
        !std::includes(rec.protocols->begin(), rec.protocols->end(), config.versions.begin(),
                       config.versions.end()))
        return false;
    if (rec.server_preference && *rec.server_preference != config.server_preference)
        return false;
    if (rec.session_tickets && *rec.session_tickets != config.session_tickets)
        return false;
    if (rec.dh_params_bits && config.has(KexFlag::DHE) && config.dh_prime_bits != rec.dh_params_bits)
        return false;
    return true;
}

Configuration apply_to_default(const Recommendation& rec, const Configuration& def,
                               const CipherDb& db, const LibraryProfile& profile)
{
    if (!rec.has_directive())
        throw ValidationError("recommendation has no directive");
    Configuration c = def;
    std::vector<SuiteId> server_order;
    if (rec.cipher_expr) {
        c.supported_suites.clear();
        for (SuiteId id : expand(*rec.cipher_expr, db, profile.suites)) {
            const auto& s = db.at(id);
            if (!s.unsupported_by_engine && cert_compatible(s, c.cert_sig_alg)) {
                c.supported_suites.insert(id);
                server_order.push_back(id);
            }
        }
    }
    if (rec.protocols) {
        c.versions.clear();
        for (auto v : *rec.protocols)
            if (profile.versions.count(v))
                c.versions.insert(v);
    } else {
        std::erase_if(c.versions, [&](ProtocolVersion v) { return !profile.versions.count(v); });
    }
    if (rec.server_preference)
        c.server_preference = *rec.server_preference;
    if (rec.session_tickets) {
        c.session_tickets = *rec.session_tickets;
        if (!c.session_tickets)
            c.ticket_lifetime_hint_s.reset();
        else if (!c.ticket_lifetime_hint_s)
            c.ticket_lifetime_hint_s = 300;
    }
    if (rec.dh_params_bits) {
        c.dh_prime_bits = *rec.dh_params_bits;
        c.dh_group_common = false;
    }
    recompute_flags(c, db);
    if (!c.has(KexFlag::DHE)) {
        c.dh_prime_bits.reset();
        c.dh_group_common.reset();
    }
    bool still_valid = c.preferred_suite && c.supported_suites.count(*c.preferred_suite);
    bool recompute = rec.cipher_expr || rec.server_preference || !still_valid;
    // Without a cipher directive the server's own order is unchanged.
    if (!rec.cipher_expr && still_valid && def.server_preference && c.server_preference)
        recompute = false;
    if (recompute) {
        if (server_order.empty())
            server_order = preference_order(db, c.supported_suites);
        c.preferred_suite.reset();
        if (!c.supported_suites.empty()) {
            if (c.server_preference)
                c.preferred_suite = server_order.front();
            else
                c.preferred_suite = preference_order(db, c.supported_suites).front();
        }
    }
    return c;
}

RecommendationGrades grade_recommendation(const Recommendation& rec,
                                          const std::vector<DefaultConfig>& defaults,
                                          const CipherDb& db,
                                          const std::map<std::string, LibraryProfile>& profiles)
{
    RecommendationGrades out;
    for (const auto& d : defaults) {
        auto it = profiles.find(d.profile);
        if (it == profiles.end())
            throw ValidationError(fmt::format("default {} names unknown profile {}", d.name, d.profile));
        auto applied = apply_to_default(rec, d.config, db, it->second);
        auto report = grade(applied, db);
        out.worst = std::min(out.worst, report.overall);
        out.best = std::max(out.best, report.overall);
        out.per_default.emplace_back(d.name, report);
    }
    return out;
}

} // namespace tlsaudit
