// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tlsaudit Authors

// Prints one PASS/FAIL line per acceptance criterion; exit status is the
// number of failures.

#include "support/support.hpp"

#include "tlsaudit/cipher_string.hpp"
#include "tlsaudit/error.hpp"
#include "tlsaudit/probe.hpp"
#include "tlsaudit/recommendation.hpp"

#include <spdlog/spdlog.h>

#include <chrono>
#include <functional>
#include <iostream>
#include <sstream>

using namespace tlsaudit;
using namespace tlsaudit::testing;

namespace {

using Clock = std::chrono::steady_clock;

struct Result {
    bool pass = false;
    std::string detail;
};

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

Result table3_grades(const CipherDb& db)
{
    auto t0 = Clock::now();
    const Grade expected[] = {Grade::C, Grade::C, Grade::B, Grade::B, Grade::F,
                              Grade::C, Grade::C, Grade::B, Grade::B, Grade::B};
    auto defaults = load_defaults(data_dir() / "defaults", db);
    if (defaults.size() != 10)
        return {false, fmt::format("expected 10 defaults, found {}", defaults.size())};
    std::string got;
    bool ok = true;
    for (std::size_t i = 0; i < defaults.size(); ++i) {
        Grade g = grade(defaults[i].config, db).overall;
        got += std::string(to_string(g));
        ok = ok && g == expected[i];
    }
    // The shared 12.04/14.04 row is C without Heartbleed and F with it.
    Configuration cf = defaults[5].config;
    cf.heartbleed_vulnerable = true;
    Grade with_hb = grade(cf, db).overall;
    ok = ok && with_hb == Grade::F;
    double secs = seconds_since(t0);
    ok = ok && secs < 1.0;
    return {ok, fmt::format("grades {} (want CCBBFCCBBB), C/F row with heartbleed {}, {:.3f}s", got,
                            to_string(with_hb), secs)};
}

Result table4_grades(const CipherDb& db)
{
    auto t0 = Clock::now();
    auto rows = load_top_as_rows();
    std::size_t match = 0;
    std::vector<std::string> unexplained;
    std::vector<std::string> explained;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        Configuration c = projection(spec_from_row(rows[i], i, db), db);
        Grade g = grade(c, db).overall;
        if (g == rows[i].grade) {
            ++match;
            continue;
        }
        // Mismatch must come from the server-preference conflict: the same
        // row with preference on gets the printed grade.
        Configuration pref = c;
        pref.server_preference = true;
        std::string id = fmt::format("row {} {} got {} want {}", i + 1, rows[i].as_name, to_string(g),
                                     to_string(rows[i].grade));
        if (!rows[i].flag("server_pref") && grade(pref, db).overall == rows[i].grade)
            explained.push_back(id);
        else
            unexplained.push_back(id);
    }
    double secs = seconds_since(t0);
    bool ok = rows.size() == 50 && match >= 45 && unexplained.empty() && secs < 1.0;
    std::string detail = fmt::format("{}/{} rows match, {} preference-conflict mismatches, {:.3f}s", match,
                                     rows.size(), explained.size(), secs);
    for (const auto& u : unexplained)
        detail += "; unexplained " + u;
    return {ok, detail};
}

struct CorpusRun {
    std::size_t specs = 0;
    std::size_t exact = 0;
    std::vector<std::string> mismatches;
    std::vector<std::string> budget_violations;
    std::size_t budget_ok = 0;
    double seconds = 0;
};

CorpusRun run_corpus(const CipherDb& db)
{
    CorpusRun run;
    auto t0 = Clock::now();
    auto corpus = fixture_corpus(db, 2026, 20);
    run.specs = corpus.size();
    ProbePolicy policy;
    policy.delay_min = policy.delay_max = net::Millis(0);
    policy.timeout = net::Millis(5000);
    for (const auto& spec : corpus) {
        auto server = FixtureServer::spawn(spec, db);
        Target t{server->host(), server->port(), "fixture.test"};
        SiteProbe site = probe_site(t, policy, db);
        server->stop();
        bool eligible = expected_eligible(spec, db);
        Configuration want = projection(spec, db);
        bool same = site.baseline.eligible == eligible && (!eligible || site.configuration == want);
        if (same)
            ++run.exact;
        else
            run.mismatches.push_back(spec.name);

        std::size_t enum_handshakes = 0;
        for (const auto& e : site.trace.entries)
            enum_handshakes += e.step == ProbeStep::ENUMERATION ? 1 : 0;
        std::size_t n = site.trace.handshake_count;
        bool in_budget = !eligible || (n >= 14 && n <= 93 && enum_handshakes == want.supported_suites.size() + 1);
        if (in_budget)
            ++run.budget_ok;
        else
            run.budget_violations.push_back(fmt::format("{}: {} handshakes, {} enumeration for {} suites", spec.name,
                                                        n, enum_handshakes, want.supported_suites.size()));
    }
    run.seconds = seconds_since(t0);
    return run;
}

Result round_trip(const CorpusRun& run)
{
    bool ok = run.specs >= 30 && run.exact == run.specs && run.seconds < 120;
    std::string detail = fmt::format("{}/{} specs recovered exactly, {:.1f}s", run.exact, run.specs, run.seconds);
    for (const auto& m : run.mismatches)
        detail += "; mismatch " + m;
    return {ok, detail};
}

Result handshake_budget(const CorpusRun& run)
{
    bool ok = run.budget_violations.empty() && run.budget_ok == run.specs;
    std::string detail = fmt::format("{}/{} probes within [14,93] with |S|+1 enumeration handshakes",
                                     run.budget_ok, run.specs);
    for (const auto& v : run.budget_violations)
        detail += "; " + v;
    return {ok, detail};
}

// Insecure features whose removal must not lower the grade.
std::vector<Configuration> removals(const Configuration& c, const CipherDb& db, const GradingPolicy& p)
{
    std::vector<Configuration> out;
    for (auto v : {ProtocolVersion::SSLv2, ProtocolVersion::SSLv3}) {
        if (c.has(v) && c.versions.size() > 1) {
            Configuration d = c;
            d.versions.erase(v);
            out.push_back(d);
        }
    }
    for (auto id : c.supported_suites) {
        if (c.supported_suites.size() == 1 || (c.preferred_suite && *c.preferred_suite == id))
            continue;
        const auto& s = db.at(id);
        auto comps = components_of(s);
        bool insecure = s.is_export || std::any_of(comps.begin(), comps.end(), [&](Component x) {
                            return p.ciphers_not_a.count(x) != 0;
                        });
        if (!insecure)
            continue;
        Configuration d = c;
        d.supported_suites.erase(id);
        recompute_flags(d, db);
        if (!d.has(KexFlag::DHE)) {
            d.dh_prime_bits.reset();
            d.dh_group_common.reset();
        }
        out.push_back(d);
    }
    if (c.tls_compression) {
        Configuration d = c;
        d.tls_compression = false;
        out.push_back(d);
    }
    if (c.heartbleed_vulnerable) {
        Configuration d = c;
        d.heartbleed_vulnerable = false;
        out.push_back(d);
    }
    if (c.session_tickets) {
        Configuration d = c;
        d.session_tickets = false;
        d.ticket_lifetime_hint_s.reset();
        out.push_back(d);
    }
    return out;
}

Result grader_properties(const CipherDb& db)
{
    std::mt19937_64 rng(5);
    GradingPolicy policy;
    std::size_t violations = 0, checks = 0;
    std::string first;
    auto fail = [&](const std::string& what) {
        if (violations++ == 0)
            first = what;
    };
    for (int i = 0; i < 1000; ++i) {
        Configuration c = random_configuration(rng, db);
        GradeReport r = grade(c, db, policy);
        Grade worst = Grade::A;
        for (const auto& [cat, g] : r.per_category)
            worst = std::min(worst, g);
        ++checks;
        if (r.per_category.size() != all_categories.size() || r.overall != worst)
            fail(fmt::format("config {}: overall is not the minimum", i));
        Grade pref = grade_preferred(c, db);
        if (pref != Grade::A && pref != Grade::B)
            fail(fmt::format("config {}: preferred grade {}", i, to_string(pref)));
        Grade comp = grade_compression(c);
        if (comp != Grade::A && comp != Grade::C)
            fail(fmt::format("config {}: compression grade {}", i, to_string(comp)));
        for (const auto& d : removals(c, db, policy)) {
            ++checks;
            if (grade(d, db, policy).overall < r.overall)
                fail(fmt::format("config {}: removing an insecure feature lowered the grade", i));
        }
    }
    return {violations == 0,
            fmt::format("1000 configurations, {} checks, {} violations{}", checks, violations,
                        first.empty() ? "" : " (first: " + first + ")")};
}

const std::vector<std::string>& cipher_string_corpus()
{
    static const std::vector<std::string> corpus = {
        "ECDHE+AESGCM:!RC4",
        "ALL:!SSLv2",
        "ALL -SSLv3",
        "HIGH:!aNULL:!MD5",
        "HIGH:MEDIUM:!aNULL:!MD5",
        "HIGH:MEDIUM:!aNULL:!MD5:!RC4",
        "EECDH+AESGCM:EDH+AESGCM",
        "EECDH+AESGCM:EDH+AESGCM:AES256+EECDH:AES256+EDH",
        "AES128+EECDH:AES128+EDH",
        "ALL:!EXPORT:!LOW:!aNULL:!eNULL:!SSLv2",
        "DEFAULT",
        "DEFAULT:!RC4:!3DES",
        "kEECDH+ECDSA+AES128:kEECDH+ECDSA:kEECDH:kEDH:HIGH:!aNULL",
        "ECDHE:DHE:!aNULL:!SHA1",
        "AESGCM:CHACHA20:!kRSA",
        "RSA:!NULL:!EXP",
        "!RC4:RC4",
        "-RC4:RC4:ALL",
        "MEDIUM:+RC4",
        "CAMELLIA:ARIA:SEED:IDEA:!kRSA",
    };
    return corpus;
}

Result cipher_string_oracle(const CipherDb& db)
{
    auto profiles = load_profiles(data_dir() / "profiles");
    const SuiteSet& pinned = profiles.at("openssl-3.0").suites;
    std::size_t match = 0;
    std::string detail;
    for (const auto& s : cipher_string_corpus()) {
        auto oracle = openssl_cipher_list(s);
        std::vector<SuiteId> ours;
        try {
            ours = expand(parse_cipher_string(s), db, pinned);
        } catch (const Error& e) {
            detail += fmt::format("; '{}' rejected: {}", s, e.what());
            continue;
        }
        SuiteSet expected;
        if (oracle)
            for (auto id : *oracle)
                if (pinned.count(id))
                    expected.insert(id);
        SuiteSet got(ours.begin(), ours.end());
        if (got == expected)
            ++match;
        else
            detail += fmt::format("; '{}' differs ({} vs oracle {})", s, got.size(), expected.size());
    }
    // Permanent exclusion: '!' bans for good, '-' does not. The pinned
    // profile has no RC4, so this runs against every known profile.
    SuiteSet every = union_profile(profiles).suites;
    auto has_rc4 = [&](const std::string& s) {
        for (auto id : expand(parse_cipher_string(s), db, every))
            if (db.at(id).cipher_family == CipherFamily::RC4)
                return true;
        return false;
    };
    bool permanence = !has_rc4("!RC4:RC4") && has_rc4("-RC4:RC4");
    bool ok = match == cipher_string_corpus().size() && permanence;
    return {ok, fmt::format("{}/{} strings match the libssl oracle, permanent exclusion {}{}", match,
                            cipher_string_corpus().size(), permanence ? "holds" : "BROKEN", detail)};
}

Result consistency_examples(const CipherDb& db)
{
    auto profiles = load_profiles(data_dir() / "profiles");
    SuiteSet all = union_profile(profiles).suites;
    Recommendation rec;
    rec.cipher_expr = parse_cipher_string("ECDHE+AESGCM:!RC4");
    auto config = [&](SuiteSet suites) {
        Configuration c;
        c.versions = {ProtocolVersion::TLS1_2};
        c.supported_suites = std::move(suites);
        c.preferred_suite = *c.supported_suites.begin();
        recompute_flags(c, db);
        return c;
    };
    bool match = consistent(config({0xC02F, 0xC030}), rec, db, all);
    bool rc4 = consistent(config({0xC02F, 0xC011}), rec, db, all);
    bool disjoint = consistent(config({0x002F, 0x0035}), rec, db, all);
    bool ok = match && !rc4 && !disjoint;
    return {ok, fmt::format("match={} rc4-violation={} disjoint={} (want true,false,false)", match, rc4, disjoint)};
}

Result report_recounts(const CipherDb& db)
{
    auto records = synthetic_records(1000, 99, db);
    std::vector<std::string> bad;

    auto dist = grade_distribution(records);
    auto counts = recount_grades(records);
    std::size_t graded = 0;
    for (const auto& [g, n] : counts)
        graded += n;
    double sum = 0;
    for (const auto& [g, n] : counts) {
        if (dist.counts.at(g) != n)
            bad.push_back("distribution count " + std::string(to_string(g)));
        if (dist.proportions.at(g) != static_cast<double>(n) / static_cast<double>(graded))
            bad.push_back("distribution proportion " + std::string(to_string(g)));
        sum += dist.proportions.at(g);
    }
    if (std::abs(sum - 1.0) > 1e-9)
        bad.push_back("proportions do not sum to 1");

    for (auto by : {GroupKey::ASN, GroupKey::CONFIG}) {
        auto cdf = cdf_by_group_rank(records, by);
        auto want = recount_cdf(records, by);
        std::string name = by == GroupKey::ASN ? "cdf-asn" : "cdf-config";
        if (cdf != want)
            bad.push_back(name + " differs from recount");
        for (std::size_t i = 1; i < cdf.size(); ++i)
            if (cdf[i].grade == cdf[i - 1].grade && cdf[i].fraction < cdf[i - 1].fraction)
                bad.push_back(name + " not monotone");
        for (std::size_t i = 0; i < cdf.size(); ++i)
            if ((i + 1 == cdf.size() || cdf[i + 1].grade != cdf[i].grade) && cdf[i].fraction != 1.0)
                bad.push_back(name + " does not end at 1.0");
    }

    if (record_downgrades(records) != recount_downgrades(records))
        bad.push_back("downgrade table differs from recount");

    auto dom = dominance(records);
    auto sites = recount_config_sites(records);
    if (dom.configs.size() != sites.size())
        bad.push_back("dominance config count");
    for (const auto& c : dom.configs)
        if (sites[c.key] != c.sites)
            bad.push_back("dominance sites for " + c.key);
    auto top = recount_as_top(records, 5);
    if (dom.per_as.size() != top.size())
        bad.push_back("dominance AS count");
    for (const auto& a : dom.per_as) {
        std::vector<std::pair<std::string, std::size_t>> got;
        for (const auto& c : a.top)
            got.emplace_back(c.key, c.sites);
        if (got != top[a.asn])
            bad.push_back("dominance top-5 for AS" + std::to_string(a.asn));
    }
    std::string detail = fmt::format("n={} graded={} groups(asn)={} configs={}", records.size(), graded,
                                     rank_groups(records, GroupKey::ASN).size(), dom.configs.size());
    for (const auto& b : bad)
        detail += "; " + b;
    return {bad.empty(), detail};
}

Result vulnerability_truth_table(const CipherDb& db)
{
    std::size_t ok_count = 0;
    std::string detail;
    for (int bits = 0; bits < 16; ++bits) {
        bool crime = bits & 1, poodle = bits & 2, freak = bits & 4, heartbleed = bits & 8;
        Configuration c;
        c.versions = {ProtocolVersion::TLS1_2};
        c.supported_suites = {0xC02F};
        if (poodle) {
            c.versions.insert(ProtocolVersion::SSLv3);
            c.supported_suites.insert(0x002F); // AES128-SHA, CBC
        } else if (bits % 4 == 0) {
            c.versions.insert(ProtocolVersion::SSLv3); // SSLv3 without CBC
        } else {
            c.supported_suites.insert(0x0035); // CBC without SSLv3
        }
        if (freak)
            c.supported_suites.insert(0x0003); // EXP-RC4-MD5, RSA export
        else if (bits % 3 == 0)
            c.supported_suites.insert(0x0017); // EXP-ADH-RC4-MD5, export without RSA kex
        if (c.supported_suites.count(0x0017)) {
            c.dh_prime_bits = 512;
            c.dh_group_common = false;
        }
        c.tls_compression = crime;
        c.heartbleed_vulnerable = heartbleed;
        // Advertising heartbeat alone must not imply Heartbleed.
        c.extensions = {Extension::heartbeat};
        c.preferred_suite = 0xC02F;
        recompute_flags(c, db);
        VulnFlags v = derive_vulnerabilities(c, db);
        VulnFlags want{crime, poodle, freak, heartbleed};
        if (v == want)
            ++ok_count;
        else
            detail += fmt::format("; case {} wrong", bits);
    }
    return {ok_count == 16, fmt::format("{}/16 truth-table rows{}", ok_count, detail)};
}

} // namespace

int main()
{
    spdlog::set_level(spdlog::level::warn);
    const CipherDb& db = bundled_registry();
    int failures = 0;
    auto report = [&](int n, const char* title, const std::function<Result()>& fn) {
        Result r;
        try {
            r = fn();
        } catch (const std::exception& e) {
            r = {false, std::string("exception: ") + e.what()};
        }
        failures += r.pass ? 0 : 1;
        std::cout << (r.pass ? "PASS" : "FAIL") << " criterion " << n << " " << title << ": " << r.detail
                  << std::endl;
    };
    report(1, "default configuration grades", [&] { return table3_grades(db); });
    report(2, "top-AS configuration grades", [&] { return table4_grades(db); });
    CorpusRun run;
    report(3, "probe round trip", [&] {
        run = run_corpus(db);
        return round_trip(run);
    });
    report(4, "handshake budget", [&] { return handshake_budget(run); });
    report(5, "grader properties", [&] { return grader_properties(db); });
    report(6, "cipher string oracle", [&] { return cipher_string_oracle(db); });
    report(7, "recommendation consistency", [&] { return consistency_examples(db); });
    report(8, "report recounts", [&] { return report_recounts(db); });
    report(9, "vulnerability derivation", [&] { return vulnerability_truth_table(db); });
    return failures;
}
