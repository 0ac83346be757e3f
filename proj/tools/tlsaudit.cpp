// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tlsaudit Authors

// tlsaudit command line: scan, grade, check-rec, report, fixtures.

#include "tlsaudit/cipher_registry.hpp"
#include "tlsaudit/error.hpp"
#include "tlsaudit/fixture.hpp"
#include "tlsaudit/grader.hpp"
#include "tlsaudit/pipeline.hpp"
#include "tlsaudit/recommendation.hpp"
#include "tlsaudit/report.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <fstream>
#include <iostream>

namespace {

using namespace tlsaudit;

enum Exit { OK = 0, INPUT = 1, REFUSED = 2, RUNTIME = 3 };

// Output file or stdout when the path is empty or "-".
class Sink {
public:
    explicit Sink(const std::string& path)
    {
        if (!path.empty() && path != "-") {
            file_.open(path, std::ios::trunc);
            if (!file_)
                throw ParseError("cannot open output " + path);
        }
    }
    std::ostream& out() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

private:
    std::ofstream file_;
};

struct Common {
    std::string defaults_dir;
    std::string profiles_dir;
    std::uint64_t seed = 1;
    bool verbose = false;
};

int cmd_scan(const Common& common, const std::string& targets_path, const std::string& out_path,
             const std::string& policy_path, const std::string& asn_path, const std::string& geo_path,
             const std::string& trace_dir, const std::string& checkpoint, bool ethics, const std::string& contact,
             const std::string& fixtures_dir)
{
    const auto& db = bundled_registry();
    ScanOptions opts;
    if (targets_path.empty() && fixtures_dir.empty())
        throw ParseError("scan needs --targets, --fixtures-dir or both");
    if (!policy_path.empty()) {
        std::ifstream in(policy_path);
        if (!in)
            throw ParseError("cannot open policy " + policy_path);
        try {
            opts.policy = probe_policy_from_json(nlohmann::json::parse(in));
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(std::string("policy: ") + e.what());
        }
    }
    opts.policy.seed = common.seed;
    std::vector<ScanTarget> targets;
    if (!targets_path.empty()) {
        std::vector<std::size_t> skipped;
        targets = load_targets(targets_path, &skipped);
        if (!skipped.empty())
            throw ParseError(fmt::format("{}: {} malformed or duplicate row(s), first at line {}", targets_path,
                                         skipped.size(), skipped.front()));
    }
    // Local endpoints answer for their spec names; without --targets every
    // spec in the directory is scanned.
    std::vector<std::unique_ptr<FixtureServer>> servers;
    if (!fixtures_dir.empty()) {
        for (const auto& spec : load_fixture_corpus(fixtures_dir, db)) {
            servers.push_back(FixtureServer::spawn(spec, db));
            opts.host_overrides[spec.name] = fmt::format("127.0.0.1:{}", servers.back()->port());
            if (targets_path.empty())
                targets.push_back({static_cast<long>(servers.size()), spec.name});
        }
    }
    AsnTable asn;
    PrefixTable<std::string> geo;
    if (!asn_path.empty()) {
        asn = load_asn_table(asn_path);
        opts.asn_table = &asn;
    }
    if (!geo_path.empty()) {
        geo = load_geo_table(geo_path);
        opts.geo_table = &geo;
    }
    opts.out = out_path;
    if (!checkpoint.empty())
        opts.checkpoint = checkpoint;
    if (!trace_dir.empty())
        opts.trace_dir = trace_dir;
    opts.ethics_acknowledged = ethics;
    opts.contact_url = contact;
    auto summary = run_scan(targets, opts, db);
    for (auto& server : servers)
        server->stop();
    spdlog::info("{} targets, {} records written, {} already in checkpoint", summary.targets, summary.written,
                 summary.resumed_skipped);
    return summary.written + summary.resumed_skipped == summary.targets ? OK : RUNTIME;
}

int cmd_grade(const std::string& in_path, const std::string& out_path)
{
    const auto& db = bundled_registry();
    std::ifstream in(in_path);
    if (!in)
        throw ParseError("cannot open " + in_path);
    Sink sink(out_path);
    std::string line;
    std::size_t lineno = 0;
    int invalid = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        try {
            auto j = nlohmann::json::parse(line);
            const auto& cj = j.contains("configuration") ? j.at("configuration") : j;
            auto c = configuration_from_json(cj, db);
            nlohmann::json row;
            if (j.contains("name"))
                row["name"] = j["name"];
            else if (j.contains("domain"))
                row["domain"] = j["domain"];
            row["line"] = lineno;
            row["grade_report"] = to_json(grade(c, db));
            sink.out() << row.dump() << '\n';
        } catch (const std::exception& e) {
            std::cerr << in_path << ":" << lineno << ": invalid record: " << e.what() << '\n';
            ++invalid;
        }
    }
    return invalid ? INPUT : OK;
}

int cmd_check_rec(const Common& common, const std::string& recs_path, const std::string& cipher_string,
                  const std::string& configs_path, const std::string& out_path)
{
    const auto& db = bundled_registry();
    std::vector<Recommendation> recs;
    if (!cipher_string.empty()) {
        Recommendation r;
        try {
            r.cipher_expr = parse_cipher_string(cipher_string);
        } catch (const ParseError& e) {
            throw ParseError(fmt::format("cipher string offset {}: {}", e.position(), e.what()), e.position());
        }
        r.source.url = "command line";
        recs.push_back(std::move(r));
    }
    if (!recs_path.empty()) {
        auto loaded = load_recommendations(recs_path);
        recs.insert(recs.end(), loaded.begin(), loaded.end());
    }
    if (recs.empty())
        throw ParseError("check-rec needs --recs or --cipher-string");
    auto profiles = load_profiles(common.profiles_dir);
    auto defaults = load_defaults(common.defaults_dir, db);
    SuiteSet profile_union = union_profile(profiles).suites;

    std::vector<std::pair<std::string, Configuration>> configs;
    if (!configs_path.empty()) {
        std::ifstream in(configs_path);
        if (!in)
            throw ParseError("cannot open " + configs_path);
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.find_first_not_of(" \t\r") == std::string::npos)
                continue;
            try {
                auto j = nlohmann::json::parse(line);
                const auto& cj = j.contains("configuration") ? j.at("configuration") : j;
                std::string name = j.value("name", j.value("domain", "line " + std::to_string(lineno)));
                configs.emplace_back(name, configuration_from_json(cj, db));
            } catch (const std::exception& e) {
                throw ParseError(fmt::format("{}:{}: {}", configs_path, lineno, e.what()), lineno);
            }
        }
    }

    Sink sink(out_path);
    for (const auto& rec : recs) {
        nlohmann::json row;
        row["recommendation"] = to_json(rec);
        auto g = grade_recommendation(rec, defaults, db, profiles);
        nlohmann::json per = nlohmann::json::object();
        for (const auto& [name, report] : g.per_default)
            per[name] = to_string(report.overall);
        row["grades"] = per;
        row["worst"] = to_string(g.worst);
        row["best"] = to_string(g.best);
        if (!configs.empty()) {
            nlohmann::json cons = nlohmann::json::object();
            for (const auto& [name, c] : configs)
                cons[name] = consistent(c, rec, db, profile_union);
            row["consistent"] = cons;
        }
        sink.out() << row.dump() << '\n';
    }
    return OK;
}

int cmd_report(const std::string& records_path, const std::string& which, const std::string& format,
               const std::string& out_path)
{
    static const std::set<std::string> known = {"dist", "cdf-asn", "cdf-config", "downgrades", "dominance", "tidy"};
    if (!known.count(which))
        throw ParseError("unknown report '" + which + "'");
    if (format != "csv" && format != "json")
        throw ParseError("unknown format '" + format + "'");
    if (which == "tidy" && format != "csv")
        throw ParseError("the tidy report is CSV only");
    const auto& db = bundled_registry();
    auto records = load_scan_records(records_path, db);
    Sink sink(out_path);
    auto& out = sink.out();
    bool csv = format == "csv";
    if (which == "dist") {
        auto d = grade_distribution(records);
        csv ? write_distribution_csv(out, d) : void(out << to_json(d).dump(2) << '\n');
    } else if (which == "cdf-asn" || which == "cdf-config") {
        auto pts = cdf_by_group_rank(records, which == "cdf-asn" ? GroupKey::ASN : GroupKey::CONFIG);
        csv ? write_cdf_csv(out, pts) : void(out << to_json(pts).dump(2) << '\n');
    } else if (which == "downgrades") {
        auto t = record_downgrades(records);
        csv ? write_downgrades_csv(out, t) : void(out << to_json(t).dump(2) << '\n');
    } else if (which == "dominance") {
        auto d = dominance(records);
        csv ? write_dominance_csv(out, d) : void(out << to_json(d).dump(2) << '\n');
    } else {
        write_tidy_csv(out, records);
    }
    return OK;
}

int cmd_fixtures(const Common& common, const std::string& action, const std::string& dir, std::size_t count,
                 const std::string& out_path)
{
    const auto& db = bundled_registry();
    std::vector<FixtureSpec> specs;
    if (action == "random")
        specs = random_specs(common.seed, count, db);
    else
        specs = load_fixture_corpus(dir.empty() ? common.defaults_dir : dir, db);
    Sink sink(out_path);
    for (const auto& s : specs) {
        if (action == "list") {
            sink.out() << s.name << '\t' << (expected_eligible(s, db) ? "eligible" : "ineligible") << '\n';
        } else if (action == "project") {
            nlohmann::json row = {{"name", s.name}, {"configuration", to_json(projection(s, db))}};
            if (s.meta.contains("expected_grade"))
                row["expected_grade"] = s.meta["expected_grade"];
            sink.out() << row.dump() << '\n';
        } else {
            sink.out() << to_json(s).dump() << '\n';
        }
    }
    return OK;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"tlsaudit: TLS configuration measurement and grading"};
    app.require_subcommand(1);
    Common common;
    common.defaults_dir = (default_data_dir() / "defaults").string();
    common.profiles_dir = (default_data_dir() / "profiles").string();
    app.add_flag("-v,--verbose", common.verbose, "Debug logging");
    app.add_option("--seed", common.seed, "Seed for pacing and random fixtures");
    app.add_option("--defaults-dir", common.defaults_dir, "Directory of default fixture specs");
    app.add_option("--profiles-dir", common.profiles_dir, "Directory of library profiles");

    std::string targets, out, policy, asn, geo, trace_dir, checkpoint, contact, fixtures_scan_dir;
    bool ethics = false;
    auto* scan = app.add_subcommand("scan", "Probe a target list and write ScanRecord JSON lines");
    scan->add_option("--targets", targets, "rank,domain CSV")->check(CLI::ExistingFile);
    scan->add_option("--fixtures-dir", fixtures_scan_dir, "Serve these fixture specs on loopback, by name")
        ->check(CLI::ExistingDirectory);
    scan->add_option("--out", out, "Output JSONL (appended)")->required();
    scan->add_option("--policy", policy, "Probe policy JSON")->check(CLI::ExistingFile);
    scan->add_option("--asn-table", asn, "prefix,asn,as_name CSV")->check(CLI::ExistingFile);
    scan->add_option("--geo-table", geo, "prefix,country CSV")->check(CLI::ExistingFile);
    scan->add_option("--trace-dir", trace_dir, "Write per-site probe traces here");
    scan->add_option("--checkpoint", checkpoint, "Completed-domain list (default <out>.checkpoint)");
    scan->add_flag("--i-understand-scanning-ethics", ethics, "Allow probing non-loopback hosts");
    scan->add_option("--contact-url", contact, "Opt-out contact, required for non-loopback hosts");

    std::string in;
    auto* grade_cmd = app.add_subcommand("grade", "Grade configuration JSON lines offline");
    grade_cmd->add_option("--in", in, "Configurations or scan records, one per line")
        ->required()
        ->check(CLI::ExistingFile);
    grade_cmd->add_option("--out", out, "Output JSONL (default stdout)");

    std::string recs, cipher_string, configs;
    auto* check = app.add_subcommand("check-rec", "Grade recommendations and check consistency");
    check->add_option("--recs", recs, "Recommendation JSON lines")->check(CLI::ExistingFile);
    check->add_option("--cipher-string", cipher_string, "A single cipher string to evaluate");
    check->add_option("--configs", configs, "Configurations to test for consistency")->check(CLI::ExistingFile);
    check->add_option("--out", out, "Output JSONL (default stdout)");

    std::string records, which, format = "csv";
    auto* report = app.add_subcommand("report", "Aggregate scan records");
    report->add_option("--records", records, "ScanRecord JSONL")->required()->check(CLI::ExistingFile);
    report->add_option("--which", which, "dist, cdf-asn, cdf-config, downgrades, dominance or tidy")->required();
    report->add_option("--format", format, "csv or json");
    report->add_option("--out", out, "Output file (default stdout)");

    std::string action = "list", dir;
    std::size_t count = 20;
    auto* fixtures = app.add_subcommand("fixtures", "Inspect fixture specs (no network)");
    fixtures->add_option("action", action, "list, project, dump or random")
        ->check(CLI::IsMember({"list", "project", "dump", "random"}));
    fixtures->add_option("--dir", dir, "Spec directory (default: --defaults-dir)");
    fixtures->add_option("--count", count, "Number of random specs");
    fixtures->add_option("--out", out, "Output file (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return INPUT;
    }

    auto logger = spdlog::stderr_color_mt("tlsaudit");
    spdlog::set_default_logger(logger);
    spdlog::set_level(common.verbose ? spdlog::level::debug : spdlog::level::info);

    try {
        if (*scan)
            return cmd_scan(common, targets, out, policy, asn, geo, trace_dir, checkpoint, ethics, contact,
                            fixtures_scan_dir);
        if (*grade_cmd)
            return cmd_grade(in, out);
        if (*check)
            return cmd_check_rec(common, recs, cipher_string, configs, out);
        if (*report)
            return cmd_report(records, which, format, out);
        if (*fixtures)
            return cmd_fixtures(common, action, dir, count, out);
    } catch (const EthicsRefusal& e) {
        spdlog::error("refused: {}", e.what());
        return REFUSED;
    } catch (const ParseError& e) {
        spdlog::error("{}", e.what());
        return INPUT;
    } catch (const ValidationError& e) {
        spdlog::error("{}", e.what());
        return INPUT;
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return RUNTIME;
    }
    return INPUT;
}
