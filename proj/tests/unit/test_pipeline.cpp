// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tlsaudit Authors

#include "doctest.h"

#include "support/support.hpp"

#include "tlsaudit/error.hpp"
#include "tlsaudit/pipeline.hpp"

#include <fmt/format.h>
#include <unistd.h>

#include <fstream>
#include <random>
#include <sstream>

using namespace tlsaudit;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir()
    {
        static int n = 0;
        path = fs::temp_directory_path() / ("tlsaudit-pipeline-" + std::to_string(::getpid()) + "-" + std::to_string(n++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::vector<std::string> read_lines(const fs::path& p)
{
    std::ifstream in(p);
    std::vector<std::string> out;
    for (std::string line; std::getline(in, line);)
        if (!line.empty())
            out.push_back(line);
    return out;
}

ScanOptions fast_options(const fs::path& out)
{
    ScanOptions o;
    o.policy.delay_min = o.policy.delay_max = net::Millis(0);
    o.policy.timeout = net::Millis(3000);
    o.policy.max_concurrency = 2;
    o.out = out;
    return o;
}

} // namespace

TEST_CASE("target lists")
{
    std::istringstream in("rank,domain\n1,example.com\n# comment\n2,example.org\nbad\n3,example.com\n4,\n5,local:8443\n");
    std::vector<std::size_t> skipped;
    auto t = parse_targets(in, &skipped);
    REQUIRE(t.size() == 3);
    CHECK(t[0].rank == 1);
    CHECK(t[1].domain == "example.org");
    CHECK(t[2].domain == "local:8443");
    CHECK(skipped == std::vector<std::size_t>{5, 6, 7});
}

TEST_CASE("server header parsing")
{
    auto a = parse_server_header("Apache/2.4.29 (Ubuntu)");
    CHECK(a.name == "apache");
    CHECK(a.version == "2.4.29");
    CHECK(a.os_hint == "ubuntu");
    CHECK(a.recognized);
    auto n = parse_server_header("nginx");
    CHECK(n.name == "nginx");
    CHECK_FALSE(n.version.has_value());
    CHECK(parse_server_header("cloudflare-nginx").name == "cloudflare");
    CHECK(parse_server_header("Microsoft-IIS/10.0").name == "microsoft-iis");
    auto odd = parse_server_header("MyServer/1.0");
    CHECK(odd.name == "myserver");
    CHECK_FALSE(odd.recognized);
    CHECK_FALSE(parse_server_header("").name.has_value());
}

TEST_CASE("ASN lookup is longest-prefix")
{
    std::istringstream in("prefix,asn,as_name\n10.0.0.0/8,64500,\"Big, Inc\"\n10.1.0.0/16,AS64501,Mid\n"
                          "10.1.2.0/24,64502,Small\n2001:db8::/32,64503,Six\n");
    auto t = parse_asn_table(in);
    CHECK(t.size() == 4);
    CHECK(t.lookup("10.1.2.3")->number == 64502);
    CHECK(t.lookup("10.1.3.3")->number == 64501);
    CHECK(t.lookup("10.200.0.1")->name == "Big, Inc");
    CHECK_FALSE(t.lookup("11.0.0.1").has_value());
    CHECK(t.lookup("2001:db8::1")->number == 64503);
    CHECK_FALSE(t.lookup("not-an-ip").has_value());
    std::istringstream bad("10.0.0.0/33,1,x\n");
    CHECK_THROWS_AS(parse_asn_table(bad), ParseError);
}

TEST_CASE("prefix table agrees with a brute-force scan")
{
    std::mt19937_64 rng(8);
    std::vector<std::pair<std::uint32_t, int>> prefixes;
    PrefixTable<int> table;
    auto dotted = [](std::uint32_t a) {
        return fmt::format("{}.{}.{}.{}", a >> 24, (a >> 16) & 255, (a >> 8) & 255, a & 255);
    };
    auto mask = [](int len) { return len == 0 ? 0u : ~0u << (32 - len); };
    for (int i = 0; i < 300; ++i) {
        int len = std::uniform_int_distribution<int>(8, 28)(rng);
        auto base = static_cast<std::uint32_t>(rng()) & 0x0FFFFFFFu & mask(len);
        table.insert(fmt::format("{}/{}", dotted(base), len), i);
        std::erase_if(prefixes, [&](auto& p) { return p.first == base && p.second == len; });
        prefixes.push_back({base, len});
        (void)i;
    }
    std::map<std::pair<std::uint32_t, int>, int> value;
    {
        // Replay insertion order to know the surviving value per prefix.
        std::mt19937_64 again(8);
        for (int i = 0; i < 300; ++i) {
            int len = std::uniform_int_distribution<int>(8, 28)(again);
            auto base = static_cast<std::uint32_t>(again()) & 0x0FFFFFFFu & mask(len);
            value[{base, len}] = i;
        }
    }
    for (int i = 0; i < 2000; ++i) {
        std::uint32_t a;
        if (i % 2 == 0) {
            auto& p = prefixes[static_cast<std::size_t>(rng() % prefixes.size())];
            a = p.first | (static_cast<std::uint32_t>(rng()) & ~mask(p.second));
        } else {
            a = static_cast<std::uint32_t>(rng()) & 0x0FFFFFFFu;
        }
        std::optional<int> want;
        int best = -1;
        for (const auto& [base, len] : prefixes)
            if ((a & mask(len)) == base && len > best) {
                best = len;
                want = value[{base, len}];
            }
        CHECK(table.lookup(dotted(a)) == want);
    }
}

TEST_CASE("scan records validate and round trip")
{
    const CipherDb& db = bundled_registry();
    for (const auto& r : testing::synthetic_records(50, 4, db)) {
        CHECK_NOTHROW(r.validate());
        auto j = to_json(r);
        CHECK(j.at("schema") == scan_record_schema);
        auto again = scan_record_from_json(j, db);
        CHECK(to_json(again) == j);
    }
    ScanRecord bad;
    bad.domain = "x.test";
    bad.eligibility = Eligibility::ELIGIBLE;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("ethics gate refuses remote targets before any traffic")
{
    const CipherDb& db = bundled_registry();
    TempDir dir;
    std::vector<ScanTarget> targets = {{1, "127.0.0.1:1"}, {2, "example.com"}};
    CHECK(non_loopback_targets(targets) == std::vector<std::string>{"example.com"});
    auto opts = fast_options(dir.path / "out.jsonl");
    CHECK_THROWS_AS(run_scan(targets, opts, db), EthicsRefusal);
    opts.ethics_acknowledged = true;
    CHECK_THROWS_AS(run_scan(targets, opts, db), EthicsRefusal);
    CHECK_FALSE(fs::exists(opts.out));
    opts.host_overrides["x.test"] = "192.0.2.1:443";
    opts.contact_url = "https://example.org/optout";
    CHECK_THROWS_AS(run_scan(targets, opts, db), PreconditionError);
}

TEST_CASE("scan of local fixtures with checkpoint resume")
{
    const CipherDb& db = bundled_registry();
    TempDir dir;
    auto defaults = load_fixture_corpus(testing::data_dir() / "defaults", db);
    std::vector<std::unique_ptr<FixtureServer>> servers;
    std::vector<ScanTarget> targets;
    auto opts = fast_options(dir.path / "out.jsonl");
    opts.trace_dir = dir.path;
    std::istringstream asn_csv("127.0.0.0/8,64512,Loopback Net\n");
    auto asn = parse_asn_table(asn_csv);
    opts.asn_table = &asn;
    for (std::size_t i = 0; i < 5; ++i) {
        servers.push_back(FixtureServer::spawn(defaults[i], db));
        targets.push_back({static_cast<long>(i + 1), defaults[i].name});
        opts.host_overrides[defaults[i].name] = fmt::format("127.0.0.1:{}", servers.back()->port());
    }
    // Resolving a reserved name needs the ethics flags even though it fails.
    targets.push_back({6, "no-such-host.invalid"});
    opts.ethics_acknowledged = true;
    opts.contact_url = "https://example.org/optout";
    auto first = run_scan({targets.begin(), targets.begin() + 3}, opts, db);
    CHECK(first.written == 3);
    auto summary = run_scan(targets, opts, db);
    CHECK(summary.resumed_skipped == 3);
    CHECK(summary.written == 3);
    auto records = load_scan_records(opts.out, db);
    REQUIRE(records.size() == 6);
    CHECK(load_checkpoint(dir.path / "out.jsonl.checkpoint").size() == 6);
    std::map<std::string, ScanRecord> by_domain;
    for (const auto& r : records)
        by_domain[r.domain] = r;
    for (std::size_t i = 0; i < 5; ++i) {
        const auto& r = by_domain.at(defaults[i].name);
        CAPTURE(r.domain);
        CHECK(r.eligibility == Eligibility::ELIGIBLE);
        REQUIRE(r.configuration.has_value());
        CHECK(*r.configuration == projection(defaults[i], db));
        CHECK(r.grade_report->overall == parse_grade(defaults[i].meta.at("expected_grade").get<std::string>()));
        CHECK(r.asn->number == 64512);
        CHECK(fs::exists(r.trace_ref));
        CHECK(r.server_software.has_value());
    }
    const auto& dns = by_domain.at("no-such-host.invalid");
    CHECK(dns.eligibility == Eligibility::EXCLUDED);
    CHECK(dns.exclusion_reason == "dns");
    auto again = run_scan(targets, opts, db);
    CHECK(again.written == 0);
    CHECK(read_lines(opts.out).size() == 6);
}

TEST_CASE("unwritable sink is a runtime error")
{
    const CipherDb& db = bundled_registry();
    TempDir dir;
    auto opts = fast_options(dir.path / "missing" / "out.jsonl");
    opts.checkpoint = dir.path / "cp";
    CHECK_THROWS_AS(run_scan({{1, "127.0.0.1:1"}}, opts, db), Error);
}
