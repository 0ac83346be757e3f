// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tlsaudit Authors

#include "tlsaudit/grader.hpp"

#include "tlsaudit/dh_groups.hpp"
#include "tlsaudit/error.hpp"

#include <algorithm>
#include <fmt/format.h>

namespace tlsaudit {

namespace {

constexpr std::array<std::string_view, 7> category_names = {
    "protocol", "key_exchange", "ciphers_mac", "preferred", "compression", "ticket_lifetime",
    "vulnerabilities"};

bool any_of(const Configuration& c, const ComponentSet& set)
{
    return std::any_of(set.begin(), set.end(), [&](Component x) { return c.has(x); });
}

} // namespace

std::string_view to_string(Grade g)
{
    switch (g) {
    case Grade::A: return "A";
    case Grade::B: return "B";
    case Grade::C: return "C";
    case Grade::F: return "F";
    }
    return "F";
}

Grade parse_grade(std::string_view s)
{
    if (s == "A")
        return Grade::A;
    if (s == "B")
        return Grade::B;
    if (s == "C")
        return Grade::C;
    if (s == "F")
        return Grade::F;
    throw ParseError(fmt::format("unknown grade '{}'", s));
}

std::string_view to_string(Category c) { return category_names[static_cast<std::size_t>(c)]; }

Category parse_category(std::string_view s)
{
    for (std::size_t i = 0; i < category_names.size(); ++i)
        if (category_names[i] == s)
            return static_cast<Category>(i);
    throw ParseError(fmt::format("unknown category '{}'", s));
}

VulnFlags derive_vulnerabilities(const Configuration& c, const CipherDb& db)
{
    VulnFlags v;
    v.crime = c.tls_compression;
    v.poodle = c.has(ProtocolVersion::SSLv3) && c.has(Component::CBC);
    for (SuiteId id : c.supported_suites) {
        const auto& s = db.at(id);
        if (s.is_export && s.kex == Kex::RSA)
            v.freak = true;
    }
    v.heartbleed = c.heartbleed_vulnerable;
    return v;
}

Grade grade_protocol(const Configuration& c)
{
    if (c.has(ProtocolVersion::SSLv2))
        return Grade::F;
    if (!c.has(ProtocolVersion::TLS1_2) && !c.has(ProtocolVersion::TLS1_3))
        return Grade::C;
    if (c.has(ProtocolVersion::SSLv3))
        return Grade::C;
    return Grade::A;
}

Grade grade_key_exchange(const Configuration& c, const GradingPolicy& p)
{
    if (!c.has(KexFlag::DHE))
        return Grade::A;
    if (!c.dh_prime_bits)
        return Grade::B;
    int bits = *c.dh_prime_bits;
    if (bits < p.dhe_f_below)
        return Grade::F;
    if (bits < p.dhe_c_below)
        return Grade::C;
    if (bits < p.dhe_common_c_below)
        return c.dh_group_common.value_or(false) ? Grade::C : Grade::B;
    return Grade::B;
}

Grade grade_ciphers_mac(const Configuration& c, const GradingPolicy& p)
{
    if (any_of(c, p.ciphers_not_c))
        return Grade::F;
    if (any_of(c, p.ciphers_not_b) || (p.penalize_3des && c.has(Component::TRIPLE_DES)))
        return Grade::C;
    if (c.has(Component::AEAD) && !any_of(c, p.ciphers_not_a))
        return Grade::A;
    return Grade::B;
}

Grade grade_preferred(const Configuration& c, const CipherDb& db)
{
    if (!c.server_preference || !c.preferred_suite)
        return Grade::B;
    const auto& s = db.at(*c.preferred_suite);
    if (s.is_aead && (s.kex == Kex::ECDHE || s.kex == Kex::DHE))
        return Grade::A;
    return Grade::B;
}

Grade grade_compression(const Configuration& c)
{
    return c.tls_compression ? Grade::C : Grade::A;
}

Grade grade_ticket_lifetime(const Configuration& c, const GradingPolicy& p)
{
    if (!c.session_tickets || !c.ticket_lifetime_hint_s)
        return Grade::A;
    long hint = *c.ticket_lifetime_hint_s;
    if (hint < p.ticket_a_below_s)
        return Grade::A;
    if (hint <= p.ticket_b_max_s)
        return Grade::B;
    return Grade::C;
}

Grade grade_vulnerabilities(const VulnFlags& v)
{
    if (v.heartbleed)
        return Grade::F;
    if (v.crime || v.poodle || v.freak)
        return Grade::C;
    return Grade::A;
}

GradeReport grade(const Configuration& c, const CipherDb& db, const GradingPolicy& p)
{
    GradeReport r;
    r.per_category[Category::PROTOCOL] = grade_protocol(c);
    r.per_category[Category::KEY_EXCHANGE] = grade_key_exchange(c, p);
    r.per_category[Category::CIPHERS_MAC] = grade_ciphers_mac(c, p);
    r.per_category[Category::PREFERRED] = grade_preferred(c, db);
    r.per_category[Category::COMPRESSION] = grade_compression(c);
    r.per_category[Category::TICKET_LIFETIME] = grade_ticket_lifetime(c, p);
    r.per_category[Category::VULNERABILITIES] = grade_vulnerabilities(derive_vulnerabilities(c, db));
    r.overall = Grade::A;
    for (auto& [cat, g] : r.per_category) {
        r.overall = std::min(r.overall, g);
        if (g != Grade::A)
            r.downgrade_reasons[g].insert(cat);
    }
    return r;
}

DowngradeTable downgrade_table(const std::vector<GradeReport>& reports)
{
    DowngradeTable t;
    for (Grade g : {Grade::B, Grade::C, Grade::F})
        for (Category c : all_categories)
            t[g][c] = 0.0;
    if (reports.empty())
        return t;
    std::map<Grade, std::map<Category, std::size_t>> counts;
    for (const auto& r : reports) {
        if (r.overall == Grade::A)
            continue;
        for (const auto& [cat, g] : r.per_category)
            if (g == r.overall)
                ++counts[g][cat];
    }
    double n = static_cast<double>(reports.size());
    for (auto& [g, row] : counts)
        for (auto& [cat, k] : row)
            t[g][cat] = static_cast<double>(k) / n;
    return t;
}

nlohmann::json to_json(const GradeReport& r)
{
    nlohmann::json j;
    j["overall"] = to_string(r.overall);
    nlohmann::json cats = nlohmann::json::object();
    for (auto c : all_categories) {
        auto it = r.per_category.find(c);
        if (it != r.per_category.end())
            cats[std::string(to_string(c))] = to_string(it->second);
    }
    j["categories"] = cats;
    nlohmann::json reasons = nlohmann::json::object();
    for (const auto& [g, set] : r.downgrade_reasons) {
        nlohmann::json arr = nlohmann::json::array();
        for (auto c : set)
            arr.push_back(to_string(c));
        reasons[std::string(to_string(g))] = arr;
    }
    j["reasons"] = reasons;
    return j;
}

GradeReport grade_report_from_json(const nlohmann::json& j)
{
    GradeReport r;
    try {
        r.overall = parse_grade(j.at("overall").get<std::string>());
        for (const auto& [k, v] : j.at("categories").items())
            r.per_category[parse_category(k)] = parse_grade(v.get<std::string>());
        if (j.contains("reasons"))
            for (const auto& [k, v] : j.at("reasons").items())
                for (const auto& c : v)
                    r.downgrade_reasons[parse_grade(k)].insert(parse_category(c.get<std::string>()));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(fmt::format("bad grade report: {}", e.what()));
    }
    return r;
}

} // namespace tlsaudit
