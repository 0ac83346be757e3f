// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tlsaudit Authors

#pragma once

#include "tlsaudit/configuration.hpp"
#include "tlsaudit/grader.hpp"
#include "tlsaudit/pipeline.hpp"

#include "json.hpp"

#include <map>
#include <ostream>
#include <string>
#include <vector>

namespace tlsaudit {

// Hex digest over the measured configuration fields: versions, suites,
// session id resumption, tickets and hint, compression, server preference,
// preferred suite, DH size and commonality, heartbleed. Insensitive to
// set iteration order and JSON key order.
using ConfigKey = std::string;
ConfigKey config_key(const Configuration& c);
// The canonical text hashed by config_key.
std::string config_key_material(const Configuration& c);

struct GradeDistribution {
    std::map<Grade, std::size_t> counts;
    std::map<Grade, double> proportions;
    std::size_t graded = 0;
    std::size_t excluded = 0;
    std::size_t ungradeable = 0;
};

// Proportions are over graded records; all four grades are always present.
GradeDistribution grade_distribution(const std::vector<ScanRecord>& records);

enum class GroupKey : std::uint8_t { ASN, CONFIG };

struct CdfPoint {
    std::size_t k = 0;
    Grade grade = Grade::A;
    double fraction = 0;
    bool operator==(const CdfPoint&) const = default;
};

struct GroupRank {
    std::string key;
    std::size_t sites = 0;
};

// Groups of graded records ranked by descending site count, ties by key.
// Records without the group key (no ASN) are left out.
std::vector<GroupRank> rank_groups(const std::vector<ScanRecord>& records, GroupKey by);

// For each grade with at least one site, the fraction of that grade's sites
// inside the top-k groups, k = 1..groups.
std::vector<CdfPoint> cdf_by_group_rank(const std::vector<ScanRecord>& records, GroupKey by);

// downgrade_table over the graded records.
DowngradeTable record_downgrades(const std::vector<ScanRecord>& records);

struct ConfigCount {
    ConfigKey key;
    std::size_t sites = 0;
    Grade grade = Grade::A;
    bool operator==(const ConfigCount&) const = default;
};

struct AsDominance {
    long asn = 0;
    std::string name;
    std::size_t sites = 0;
    // At most five, by descending sites then key.
    std::vector<ConfigCount> top;
};

struct Dominance {
    std::vector<ConfigCount> configs;
    // By descending site count, ties by AS number.
    std::vector<AsDominance> per_as;
};

Dominance dominance(const std::vector<ScanRecord>& records, std::size_t top_n = 5);

void write_distribution_csv(std::ostream& out, const GradeDistribution& d);
void write_cdf_csv(std::ostream& out, const std::vector<CdfPoint>& points);
void write_downgrades_csv(std::ostream& out, const DowngradeTable& t);
void write_dominance_csv(std::ostream& out, const Dominance& d);
// One row per record: domain,rank,eligibility,grade,server,os,tld,asn,config_key
void write_tidy_csv(std::ostream& out, const std::vector<ScanRecord>& records);

nlohmann::json to_json(const GradeDistribution& d);
GradeDistribution grade_distribution_from_json(const nlohmann::json& j);
nlohmann::json to_json(const std::vector<CdfPoint>& points);
std::vector<CdfPoint> cdf_from_json(const nlohmann::json& j);
nlohmann::json to_json(const DowngradeTable& t);
nlohmann::json to_json(const Dominance& d);
Dominance dominance_from_json(const nlohmann::json& j);

} // namespace tlsaudit
