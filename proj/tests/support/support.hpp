// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tlsaudit Authors

#pragma once

#include "tlsaudit/configuration.hpp"
#include "tlsaudit/fixture.hpp"
#include "tlsaudit/grader.hpp"
#include "tlsaudit/pipeline.hpp"
#include "tlsaudit/report.hpp"

#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace tlsaudit::testing {

std::filesystem::path data_dir();

// One row of data/top_as_configurations.csv.
struct TopAsRow {
    std::string as_name;
    long sites = 0;
    double pct_as = 0;
    Grade grade = Grade::A;
    std::map<std::string, bool> flags;
    std::optional<int> dh_bits;

    bool flag(const std::string& k) const { return flags.at(k); }
};

std::vector<TopAsRow> load_top_as_rows();

// Fixture spec whose projection has exactly the row's columns. Fields the
// table does not list take secure values: RSA certificate, no compression,
// no heartbeat, ticket hint 300 s, RFC 3526 group 14 for DHE.
FixtureSpec spec_from_row(const TopAsRow& row, std::size_t index, const CipherDb& db);

// Ten rows covering A, B and C (the table has no F row).
std::vector<std::size_t> corpus_row_indices();

// Bundled defaults + ten top-AS rows + `random` seeded specs.
std::vector<FixtureSpec> fixture_corpus(const CipherDb& db, std::uint64_t seed, std::size_t random = 20);

// Random Configuration over the engine-visible suites, RSA or ECDSA.
Configuration random_configuration(std::mt19937_64& rng, const CipherDb& db);

// Suite ids libssl enables for `cipher_string` at security level 0, TLS 1.3
// suites dropped; nullopt when libssl rejects the string.
std::optional<SuiteSet> openssl_cipher_list(const std::string& cipher_string);

// Synthetic scan records with skewed AS and configuration popularity.
std::vector<ScanRecord> synthetic_records(std::size_t n, std::uint64_t seed, const CipherDb& db);

// Brute-force recounts, written without the report module.
std::map<Grade, std::size_t> recount_grades(const std::vector<ScanRecord>& records);
// fraction of grade-g sites in the top-k groups, for all k and grades present.
std::vector<CdfPoint> recount_cdf(const std::vector<ScanRecord>& records, GroupKey by);
std::map<Grade, std::map<Category, double>> recount_downgrades(const std::vector<ScanRecord>& records);
// (asn -> list of (key, count) top five) and overall key counts.
std::map<std::string, std::size_t> recount_config_sites(const std::vector<ScanRecord>& records);
std::map<long, std::vector<std::pair<std::string, std::size_t>>> recount_as_top(
    const std::vector<ScanRecord>& records, std::size_t top_n);

} // namespace tlsaudit::testing
