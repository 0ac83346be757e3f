// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tlsaudit Authors

#include "doctest.h"

#include "support/support.hpp"

#include "tlsaudit/report.hpp"

#include <sstream>

using namespace tlsaudit;

namespace {

ScanRecord graded(const std::string& domain, const Configuration& c, std::optional<long> asn)
{
    ScanRecord r;
    r.domain = domain;
    r.started = r.finished = "2026-01-01T00:00:00Z";
    r.eligibility = Eligibility::ELIGIBLE;
    r.configuration = c;
    r.grade_report = grade(c, bundled_registry());
    if (asn)
        r.asn = AsnInfo{*asn, "AS" + std::to_string(*asn)};
    return r;
}

Configuration config(SuiteSet suites, bool pref)
{
    Configuration c;
    c.versions = {ProtocolVersion::TLS1_2};
    c.supported_suites = std::move(suites);
    c.preferred_suite = *c.supported_suites.begin();
    c.server_preference = pref;
    recompute_flags(c, bundled_registry());
    return c;
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

} // namespace

TEST_CASE("config keys ignore JSON key order but not content")
{
    const CipherDb& db = bundled_registry();
    auto a = config({0xC02F, 0xC030}, true);
    auto j = to_json(a);
    auto reparsed = configuration_from_json(nlohmann::json::parse(j.dump()), db);
    CHECK(config_key(reparsed) == config_key(a));
    CHECK(config_key(a).size() == 32);
    auto b = a;
    b.server_preference = false;
    CHECK(config_key(b) != config_key(a));
    auto c = a;
    c.extensions.insert(Extension::alpn);
    CHECK(config_key(c) == config_key(a));
}

TEST_CASE("grade distribution over a small corpus")
{
    std::vector<ScanRecord> rs = {graded("a", config({0xC02F}, true), 1), graded("b", config({0xC02F}, false), 1),
                                  graded("c", config({0xC011}, true), 2)};
    ScanRecord ex;
    ex.domain = "d";
    ex.eligibility = Eligibility::EXCLUDED;
    ex.exclusion_reason = "dns";
    rs.push_back(ex);
    auto d = grade_distribution(rs);
    CHECK(d.graded == 3);
    CHECK(d.excluded == 1);
    CHECK(d.counts.at(Grade::A) == 1);
    CHECK(d.counts.at(Grade::B) == 1);
    CHECK(d.counts.at(Grade::C) == 1);
    CHECK(d.counts.at(Grade::F) == 0);
    CHECK(d.proportions.at(Grade::A) == doctest::Approx(1.0 / 3));
    auto again = grade_distribution_from_json(to_json(d));
    CHECK(again.counts == d.counts);

    std::ostringstream csv;
    write_distribution_csv(csv, d);
    CHECK(csv.str().rfind("grade,count,proportion\n", 0) == 0);
    CHECK(count_lines(csv.str()) == 5);
}

TEST_CASE("group ranking and CDF")
{
    std::vector<ScanRecord> rs;
    for (int i = 0; i < 3; ++i)
        rs.push_back(graded("x" + std::to_string(i), config({0xC02F}, true), 10));
    rs.push_back(graded("y", config({0xC02F}, true), 20));
    rs.push_back(graded("z", config({0xC02F}, false), 20));
    rs.push_back(graded("n", config({0xC02F}, false), std::nullopt));
    auto ranks = rank_groups(rs, GroupKey::ASN);
    REQUIRE(ranks.size() == 2);
    CHECK(ranks[0].key == "10");
    CHECK(ranks[0].sites == 3);
    auto cdf = cdf_by_group_rank(rs, GroupKey::ASN);
    std::vector<CdfPoint> want = {{1, Grade::A, 0.75}, {2, Grade::A, 1.0}, {1, Grade::B, 0.0}, {2, Grade::B, 1.0}};
    CHECK(cdf == want);
    CHECK(cdf_from_json(to_json(cdf)) == cdf);
    CHECK(rank_groups(rs, GroupKey::CONFIG).size() == 2);
}

TEST_CASE("dominance lists the top configurations per AS")
{
    std::vector<ScanRecord> rs;
    for (int i = 0; i < 7; ++i) {
        SuiteSet s = {0xC02F};
        if (i % 3 == 1)
            s.insert(0xC030);
        rs.push_back(graded("s" + std::to_string(i), config(s, i % 2 == 0), 7));
    }
    auto d = dominance(rs, 2);
    REQUIRE(d.per_as.size() == 1);
    CHECK(d.per_as[0].sites == 7);
    CHECK(d.per_as[0].top.size() == 2);
    CHECK(d.per_as[0].top[0].sites >= d.per_as[0].top[1].sites);
    std::size_t total = 0;
    for (const auto& c : d.configs)
        total += c.sites;
    CHECK(total == 7);
    auto again = dominance_from_json(to_json(d));
    CHECK(again.configs == d.configs);
    std::ostringstream csv;
    write_dominance_csv(csv, d);
    CHECK(csv.str().rfind("asn,as_name,as_sites,rank,config_key,sites,fraction,grade\n", 0) == 0);
}

TEST_CASE("synthetic corpus recounts")
{
    const CipherDb& db = bundled_registry();
    auto rs = testing::synthetic_records(400, 12, db);
    auto d = grade_distribution(rs);
    CHECK(d.counts == testing::recount_grades(rs));
    CHECK(cdf_by_group_rank(rs, GroupKey::CONFIG) == testing::recount_cdf(rs, GroupKey::CONFIG));
    CHECK(record_downgrades(rs) == testing::recount_downgrades(rs));

    std::ostringstream tidy;
    write_tidy_csv(tidy, rs);
    CHECK(count_lines(tidy.str()) == rs.size() + 1);
    std::ostringstream down;
    write_downgrades_csv(down, record_downgrades(rs));
    CHECK(count_lines(down.str()) == 1 + 3 * all_categories.size());
}

TEST_CASE("empty corpus reports")
{
    std::vector<ScanRecord> none;
    auto d = grade_distribution(none);
    CHECK(d.graded == 0);
    CHECK(d.proportions.at(Grade::A) == 0.0);
    CHECK(cdf_by_group_rank(none, GroupKey::ASN).empty());
    CHECK(dominance(none).configs.empty());
}
