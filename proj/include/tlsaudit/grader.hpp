// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tlsaudit Authors

#pragma once

#include "tlsaudit/configuration.hpp"

#include "json.hpp"

#include <array>
#include <map>
#include <vector>

namespace tlsaudit {

// Declared worst to best so that std::min picks the worse grade.
enum class Grade : std::uint8_t { F, C, B, A };

std::string_view to_string(Grade g);
Grade parse_grade(std::string_view s);

enum class Category : std::uint8_t {
    PROTOCOL, KEY_EXCHANGE, CIPHERS_MAC, PREFERRED, COMPRESSION, TICKET_LIFETIME, VULNERABILITIES
};

inline constexpr std::array<Category, 7> all_categories = {
    Category::PROTOCOL, Category::KEY_EXCHANGE, Category::CIPHERS_MAC, Category::PREFERRED,
    Category::COMPRESSION, Category::TICKET_LIFETIME, Category::VULNERABILITIES,
};

// JSON key: "protocol", "key_exchange", "ciphers_mac", ...
std::string_view to_string(Category c);
Category parse_category(std::string_view s);

struct VulnFlags {
    bool crime = false;
    bool poodle = false;
    bool freak = false;
    bool heartbleed = false;
    bool operator==(const VulnFlags&) const = default;
};

struct GradeReport {
    std::map<Category, Grade> per_category;
    Grade overall = Grade::A;
    // For each grade below A, the categories sitting at that grade.
    std::map<Grade, std::set<Category>> downgrade_reasons;
    bool operator==(const GradeReport&) const = default;
};

// Thresholds and forbidden sets. Defaults are the published rubric.
struct GradingPolicy {
    // DHE prime sizes: below f_below -> F, below c_below -> C,
    // below b_common_below -> C when the group is common, else B.
    int dhe_f_below = 768;
    int dhe_c_below = 1024;
    int dhe_common_c_below = 2048;

    ComponentSet ciphers_not_a = {Component::CAMELLIA, Component::ARIA, Component::IDEA,
                                  Component::SEED, Component::RC4, Component::DES,
                                  Component::MD5, Component::NULL_COMPONENT, Component::EXPORT};
    ComponentSet ciphers_not_b = {Component::RC4, Component::DES, Component::MD5,
                                  Component::NULL_COMPONENT, Component::EXPORT};
    ComponentSet ciphers_not_c = {Component::DES, Component::NULL_COMPONENT, Component::EXPORT};
    // Off for fidelity with the rubric; when set, 3DES caps ciphers_mac at C.
    bool penalize_3des = false;

    long ticket_a_below_s = 86400;
    long ticket_b_max_s = 604800;
};

VulnFlags derive_vulnerabilities(const Configuration& c, const CipherDb& db);

Grade grade_protocol(const Configuration& c);
Grade grade_key_exchange(const Configuration& c, const GradingPolicy& p = {});
Grade grade_ciphers_mac(const Configuration& c, const GradingPolicy& p = {});
Grade grade_preferred(const Configuration& c, const CipherDb& db);
Grade grade_compression(const Configuration& c);
Grade grade_ticket_lifetime(const Configuration& c, const GradingPolicy& p = {});
Grade grade_vulnerabilities(const VulnFlags& v);

GradeReport grade(const Configuration& c, const CipherDb& db, const GradingPolicy& p = {});

// Table of downgrade reasons: for grade g in {B, C, F} and each category, the
// fraction of all reports whose category sits at g while overall is g.
using DowngradeTable = std::map<Grade, std::map<Category, double>>;
DowngradeTable downgrade_table(const std::vector<GradeReport>& reports);

nlohmann::json to_json(const GradeReport& r);
GradeReport grade_report_from_json(const nlohmann::json& j);

} // namespace tlsaudit
