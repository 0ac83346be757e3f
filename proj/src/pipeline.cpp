// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tlsaudit Authors

#include "tlsaudit/pipeline.hpp"

#include "tlsaudit/error.hpp"
#include "tlsaudit/net.hpp"
#include "util.hpp"

#include <arpa/inet.h>
#include <spdlog/spdlog.h>

#include <atomic>
#include <chrono>
#include <ctime>
#include <fstream>
#include <mutex>
#include <thread>

namespace tlsaudit {

namespace {

std::string utc_now()
{
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
    return fmt::format("{}.{:03}Z", buf, ms);
}

std::string strip_quotes(std::string s)
{
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"')
        s = s.substr(1, s.size() - 2);
    return s;
}

// Trace file name for a domain: anything outside [A-Za-z0-9.-] becomes '_'.
std::string trace_file_name(const std::string& domain)
{
    std::string out = domain;
    for (auto& ch : out)
        if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '.' && ch != '-')
            ch = '_';
    return out + ".json";
}

void write_checkpoint(const std::filesystem::path& path, const std::set<std::string>& done)
{
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        for (const auto& d : done)
            out << d << '\n';
        out.flush();
        if (!out)
            throw Error("cannot write checkpoint " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

} // namespace

std::vector<ScanTarget> parse_targets(std::istream& in, std::vector<std::size_t>* skipped)
{
    std::vector<ScanTarget> out;
    std::set<std::string> seen;
    std::string line;
    std::size_t lineno = 0;
    auto skip = [&](const std::string& why) {
        spdlog::warn("targets line {}: {}", lineno, why);
        if (skipped)
            skipped->push_back(lineno);
    };
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = detail::trim(line);
        if (t.empty() || t.front() == '#')
            continue;
        if (lineno == 1 && detail::lower(t).rfind("rank", 0) == 0)
            continue;
        auto f = detail::split(t, ',');
        if (f.size() != 2) {
            skip("expected rank,domain");
            continue;
        }
        ScanTarget target;
        std::string rank = detail::trim(f[0]);
        if (!rank.empty()) {
            try {
                std::size_t used = 0;
                long r = std::stol(rank, &used);
                if (used != rank.size() || r < 1)
                    throw std::invalid_argument(rank);
                target.rank = r;
            } catch (const std::exception&) {
                skip("bad rank '" + rank + "'");
                continue;
            }
        }
        target.domain = detail::lower(detail::trim(f[1]));
        if (target.domain.empty() || target.domain.find_first_of(" \t/") != std::string::npos) {
            skip("bad domain '" + target.domain + "'");
            continue;
        }
        if (!seen.insert(target.domain).second) {
            skip("duplicate domain " + target.domain);
            continue;
        }
        out.push_back(std::move(target));
    }
    return out;
}

std::vector<ScanTarget> load_targets(const std::filesystem::path& path, std::vector<std::size_t>* skipped)
{
    std::ifstream in(path);
    if (!in)
        throw ParseError("cannot open targets file " + path.string());
    return parse_targets(in, skipped);
}

ServerHeaderInfo parse_server_header(std::string_view value)
{
    static const std::map<std::string, std::string, std::less<>> aliases = {
        {"apache", "apache"},
        {"nginx", "nginx"},
        {"microsoft-iis", "microsoft-iis"},
        {"litespeed", "litespeed"},
        {"openresty", "openresty"},
        {"cloudflare", "cloudflare"},
        {"cloudflare-nginx", "cloudflare"},
        {"cpanel", "cpanel"},
        {"cpsrvd", "cpanel"},
        {"bigip", "bigip"},
        {"big-ip", "bigip"},
        {"cloudfront", "cloudfront"},
        {"amazoncloudfront", "cloudfront"},
        {"varnish", "varnish"},
        {"ats", "ats"},
        {"awselb", "awselb"},
        {"squarespace", "squarespace"},
        {"akamai", "akamai"},
        {"akamaighost", "akamai"},
        {"akamainetstorage", "akamai"},
        {"ghs", "ghs"},
        {"caddy", "caddy"},
    };
    ServerHeaderInfo info;
    std::string v = detail::trim(value);
    if (v.empty())
        return info;

    if (auto open = v.find('('); open != std::string::npos) {
        auto close = v.find(')', open);
        std::string inner = v.substr(open + 1, close == std::string::npos ? std::string::npos : close - open - 1);
        inner = detail::trim(detail::split(inner, ';').front());
        if (!inner.empty())
            info.os_hint = detail::lower(inner);
    }

    std::string lowered = detail::lower(v);
    std::string product;
    if (lowered.rfind("apache traffic server", 0) == 0) {
        product = "ats";
        auto slash = v.find('/');
        if (slash != std::string::npos)
            info.version = detail::split(v.substr(slash + 1), ' ').front();
    } else {
        std::string token = detail::split(v, ' ').front();
        auto slash = token.find('/');
        product = detail::lower(token.substr(0, slash));
        if (slash != std::string::npos && slash + 1 < token.size())
            info.version = token.substr(slash + 1);
    }
    if (product.empty())
        return info;
    auto it = aliases.find(product);
    if (it == aliases.end() && product.rfind("akamai", 0) == 0)
        it = aliases.find("akamai");
    if (it != aliases.end()) {
        info.name = it->second;
        info.recognized = true;
    } else {
        info.name = product;
    }
    return info;
}

std::optional<std::string> address_bytes(const std::string& address)
{
    std::string a = address;
    if (a.size() > 2 && a.front() == '[' && a.back() == ']')
        a = a.substr(1, a.size() - 2);
    unsigned char buf[16];
    if (inet_pton(AF_INET, a.c_str(), buf) == 1)
        return std::string(reinterpret_cast<char*>(buf), 4);
    if (inet_pton(AF_INET6, a.c_str(), buf) == 1)
        return std::string(reinterpret_cast<char*>(buf), 16);
    return std::nullopt;
}

std::string mask_bytes(std::string bytes, int len)
{
    for (std::size_t i = 0; i < bytes.size(); ++i) {
        int keep = std::clamp(len - static_cast<int>(i) * 8, 0, 8);
        auto mask = static_cast<unsigned char>(keep == 0 ? 0 : 0xff << (8 - keep));
        bytes[i] = static_cast<char>(static_cast<unsigned char>(bytes[i]) & mask);
    }
    return bytes;
}

std::pair<std::string, int> parse_prefix(const std::string& prefix)
{
    auto slash = prefix.find('/');
    std::string addr = detail::trim(prefix.substr(0, slash));
    auto bytes = address_bytes(addr);
    if (!bytes)
        throw ParseError("bad prefix address '" + prefix + "'");
    int max = static_cast<int>(bytes->size()) * 8;
    int len = max;
    if (slash != std::string::npos) {
        std::string l = detail::trim(prefix.substr(slash + 1));
        try {
            std::size_t used = 0;
            len = std::stoi(l, &used);
            if (used != l.size())
                throw std::invalid_argument(l);
        } catch (const std::exception&) {
            throw ParseError("bad prefix length in '" + prefix + "'");
        }
    }
    if (len < 0 || len > max)
        throw ParseError("prefix length out of range in '" + prefix + "'");
    return {*bytes, len};
}

AsnTable parse_asn_table(std::istream& in)
{
    AsnTable table;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = detail::trim(line);
        if (t.empty() || t.front() == '#')
            continue;
        if (lineno == 1 && detail::lower(t).rfind("prefix", 0) == 0)
            continue;
        auto c1 = t.find(',');
        auto c2 = c1 == std::string::npos ? c1 : t.find(',', c1 + 1);
        if (c2 == std::string::npos)
            throw ParseError(fmt::format("asn table line {}: expected prefix,asn,as_name", lineno), lineno);
        AsnInfo info;
        std::string num = detail::trim(t.substr(c1 + 1, c2 - c1 - 1));
        if (detail::lower(num).rfind("as", 0) == 0)
            num = num.substr(2);
        try {
            std::size_t used = 0;
            info.number = std::stol(num, &used);
            if (used != num.size() || info.number < 0)
                throw std::invalid_argument(num);
        } catch (const std::exception&) {
            throw ParseError(fmt::format("asn table line {}: bad AS number '{}'", lineno, num), lineno);
        }
        info.name = strip_quotes(detail::trim(t.substr(c2 + 1)));
        try {
            table.insert(t.substr(0, c1), std::move(info));
        } catch (const ParseError& e) {
            throw ParseError(fmt::format("asn table line {}: {}", lineno, e.what()), lineno);
        }
    }
    return table;
}

AsnTable load_asn_table(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ParseError("cannot open ASN table " + path.string());
    return parse_asn_table(in);
}

PrefixTable<std::string> load_geo_table(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ParseError("cannot open geo table " + path.string());
    PrefixTable<std::string> table;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = detail::trim(line);
        if (t.empty() || t.front() == '#' || (lineno == 1 && detail::lower(t).rfind("prefix", 0) == 0))
            continue;
        auto f = detail::split(t, ',');
        if (f.size() != 2)
            throw ParseError(fmt::format("geo table line {}: expected prefix,country", lineno), lineno);
        table.insert(f[0], detail::trim(f[1]));
    }
    return table;
}

std::string_view to_string(Eligibility e)
{
    switch (e) {
    case Eligibility::ELIGIBLE: return "eligible";
    case Eligibility::PARTIAL: return "partial";
    case Eligibility::UNGRADEABLE: return "ungradeable";
    case Eligibility::EXCLUDED: return "excluded";
    }
    return "?";
}

Eligibility parse_eligibility(std::string_view s)
{
    for (auto e : {Eligibility::ELIGIBLE, Eligibility::PARTIAL, Eligibility::UNGRADEABLE, Eligibility::EXCLUDED})
        if (to_string(e) == s)
            return e;
    throw ParseError("unknown eligibility '" + std::string(s) + "'");
}

void ScanRecord::validate() const
{
    if (domain.empty())
        throw ValidationError("scan record without domain");
    if (grade_report && !configuration)
        throw ValidationError(domain + ": grade_report without configuration");
    switch (eligibility) {
    case Eligibility::ELIGIBLE:
    case Eligibility::PARTIAL:
        if (!configuration || !grade_report)
            throw ValidationError(domain + ": graded record needs a configuration and a grade report");
        break;
    case Eligibility::UNGRADEABLE:
        if (grade_report)
            throw ValidationError(domain + ": ungradeable record carries a grade report");
        break;
    case Eligibility::EXCLUDED:
        if (configuration)
            throw ValidationError(domain + ": excluded record carries a configuration");
        if (!exclusion_reason)
            throw ValidationError(domain + ": excluded record without a reason");
        break;
    }
}

nlohmann::json to_json(const ScanRecord& r)
{
    using nlohmann::json;
    json j;
    j["schema"] = scan_record_schema;
    j["domain"] = r.domain;
    j["rank"] = r.rank ? json(*r.rank) : json(nullptr);
    j["address"] = r.address ? json(*r.address) : json(nullptr);
    j["timestamps"] = {{"started", r.started}, {"finished", r.finished}};
    j["eligibility"] = to_string(r.eligibility);
    j["exclusion_reason"] = r.exclusion_reason ? json(*r.exclusion_reason) : json(nullptr);
    if (r.server_software) {
        j["server_software"] = {{"name", r.server_software->name ? json(*r.server_software->name) : json(nullptr)},
                                {"version",
                                 r.server_software->version ? json(*r.server_software->version) : json(nullptr)}};
    } else {
        j["server_software"] = nullptr;
    }
    j["os_hint"] = r.os_hint ? json(*r.os_hint) : json(nullptr);
    j["asn"] = r.asn ? json{{"number", r.asn->number}, {"name", r.asn->name}} : json(nullptr);
    j["country"] = r.country ? json(*r.country) : json(nullptr);
    j["configuration"] = r.configuration ? to_json(*r.configuration) : json(nullptr);
    j["grade_report"] = r.grade_report ? to_json(*r.grade_report) : json(nullptr);
    j["handshake_count"] = r.handshake_count;
    j["trace_ref"] = r.trace_ref;
    return j;
}

ScanRecord scan_record_from_json(const nlohmann::json& j, const CipherDb& db)
{
    ScanRecord r;
    try {
        if (j.value("schema", scan_record_schema) != scan_record_schema)
            throw ValidationError("unsupported scan record schema");
        r.domain = j.at("domain").get<std::string>();
        auto opt_str = [&](const char* key) -> std::optional<std::string> {
            if (!j.contains(key) || j.at(key).is_null())
                return std::nullopt;
            return j.at(key).get<std::string>();
        };
        if (j.contains("rank") && !j.at("rank").is_null())
            r.rank = j.at("rank").get<long>();
        r.address = opt_str("address");
        if (j.contains("timestamps")) {
            r.started = j.at("timestamps").value("started", "");
            r.finished = j.at("timestamps").value("finished", "");
        }
        r.eligibility = parse_eligibility(j.at("eligibility").get<std::string>());
        r.exclusion_reason = opt_str("exclusion_reason");
        if (j.contains("server_software") && !j.at("server_software").is_null()) {
            const auto& s = j.at("server_software");
            ServerHeaderInfo info;
            if (s.contains("name") && !s.at("name").is_null())
                info.name = s.at("name").get<std::string>();
            if (s.contains("version") && !s.at("version").is_null())
                info.version = s.at("version").get<std::string>();
            r.server_software = info;
        }
        r.os_hint = opt_str("os_hint");
        if (j.contains("asn") && !j.at("asn").is_null())
            r.asn = AsnInfo{j.at("asn").at("number").get<long>(), j.at("asn").value("name", "")};
        r.country = opt_str("country");
        if (j.contains("configuration") && !j.at("configuration").is_null())
            r.configuration = configuration_from_json(j.at("configuration"), db);
        if (j.contains("grade_report") && !j.at("grade_report").is_null())
            r.grade_report = grade_report_from_json(j.at("grade_report"));
        r.handshake_count = j.value("handshake_count", std::size_t{0});
        r.trace_ref = j.value("trace_ref", "");
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed scan record: ") + e.what());
    }
    r.validate();
    return r;
}

std::vector<ScanRecord> load_scan_records(const std::filesystem::path& path, const CipherDb& db)
{
    std::ifstream in(path);
    if (!in)
        throw ParseError("cannot open records file " + path.string());
    std::vector<ScanRecord> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::trim(line).empty())
            continue;
        try {
            out.push_back(scan_record_from_json(nlohmann::json::parse(line), db));
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(fmt::format("{} line {}: {}", path.string(), lineno, e.what()), lineno);
        } catch (const Error& e) {
            throw ParseError(fmt::format("{} line {}: {}", path.string(), lineno, e.what()), lineno);
        }
    }
    return out;
}

std::vector<std::string> non_loopback_targets(const std::vector<ScanTarget>& targets)
{
    std::vector<std::string> out;
    for (const auto& t : targets) {
        std::string host;
        try {
            host = net::parse_host_port(t.domain).host;
        } catch (const Error&) {
            continue; // reported as excluded without any traffic
        }
        if (!net::is_loopback_literal(host) && host != "localhost")
            out.push_back(t.domain);
    }
    return out;
}

ScanRecord scan_one(const ScanTarget& target, const ScanOptions& opts, const CipherDb& db)
{
    ScanRecord r;
    r.domain = target.domain;
    r.rank = target.rank;
    r.started = utc_now();
    auto finish = [&](Eligibility e, std::optional<std::string> reason) {
        r.eligibility = e;
        r.exclusion_reason = std::move(reason);
        r.finished = utc_now();
        return r;
    };

    auto override_it = opts.host_overrides.find(target.domain);
    bool overridden = override_it != opts.host_overrides.end();
    net::HostPort hp;
    try {
        hp = net::parse_host_port(overridden ? override_it->second : target.domain);
    } catch (const Error&) {
        return finish(Eligibility::EXCLUDED, "target");
    }
    auto address = net::resolve(hp.host);
    if (!address)
        return finish(Eligibility::EXCLUDED, "dns");
    r.address = *address;
    if (opts.asn_table)
        r.asn = opts.asn_table->lookup(*address);
    if (opts.geo_table)
        r.country = opts.geo_table->lookup(*address);

    std::string sni = overridden ? net::parse_host_port(target.domain).host : hp.host;
    Target t{*address, hp.port, address_bytes(sni) ? std::string() : sni};
    SiteProbe site = probe_site(t, opts.policy, db);
    r.handshake_count = site.trace.handshake_count;
    if (opts.trace_dir) {
        auto path = *opts.trace_dir / trace_file_name(target.domain);
        std::ofstream out(path, std::ios::trunc);
        out << to_json(site.trace).dump() << '\n';
        if (out)
            r.trace_ref = path.string();
        else
            spdlog::warn("cannot write trace {}", path.string());
    }
    if (site.baseline.http && site.baseline.http->server_header) {
        auto info = parse_server_header(*site.baseline.http->server_header);
        if (info.name)
            r.server_software = info;
        r.os_hint = info.os_hint;
    }

    switch (site.status) {
    case ProbeStatus::SKIPPED: {
        bool tls_failed = !site.baseline.outcome.negotiated();
        return finish(Eligibility::EXCLUDED, tls_failed ? "baseline" : "http");
    }
    case ProbeStatus::UNGRADEABLE:
        r.configuration = site.configuration;
        return finish(Eligibility::UNGRADEABLE, std::nullopt);
    case ProbeStatus::PARTIAL:
    case ProbeStatus::COMPLETE:
        r.configuration = site.configuration;
        r.grade_report = grade(site.configuration, db, opts.grading);
        return finish(site.status == ProbeStatus::PARTIAL ? Eligibility::PARTIAL : Eligibility::ELIGIBLE,
                      std::nullopt);
    }
    return finish(Eligibility::EXCLUDED, "internal");
}

std::set<std::string> load_checkpoint(const std::filesystem::path& path)
{
    std::set<std::string> done;
    std::ifstream in(path);
    std::string line;
    while (std::getline(in, line)) {
        auto d = detail::trim(line);
        if (!d.empty())
            done.insert(d);
    }
    return done;
}

ScanSummary run_scan(const std::vector<ScanTarget>& targets, const ScanOptions& opts, const CipherDb& db)
{
    opts.policy.validate();
    for (const auto& [domain, endpoint] : opts.host_overrides) {
        auto host = net::parse_host_port(endpoint).host;
        if (!net::is_loopback_literal(host) && host != "localhost")
            throw PreconditionError(fmt::format("host override for '{}' is not loopback: {}", domain, endpoint));
    }
    auto remote = non_loopback_targets(targets);
    std::erase_if(remote, [&](const std::string& d) { return opts.host_overrides.count(d) != 0; });
    if (!remote.empty() && !opts.ethics_acknowledged)
        throw EthicsRefusal(fmt::format("{} non-loopback target(s), first '{}'; scanning third-party hosts "
                                        "requires --i-understand-scanning-ethics",
                                        remote.size(), remote.front()));
    if (!remote.empty() && opts.contact_url.empty())
        throw EthicsRefusal("scanning third-party hosts requires a contact URL (--contact-url)");

    auto checkpoint = opts.checkpoint.value_or(std::filesystem::path(opts.out.string() + ".checkpoint"));
    std::set<std::string> done = load_checkpoint(checkpoint);
    ScanSummary summary;
    summary.targets = targets.size();
    std::vector<const ScanTarget*> pending;
    for (const auto& t : targets) {
        if (done.count(t.domain))
            ++summary.resumed_skipped;
        else
            pending.push_back(&t);
    }
    if (opts.trace_dir)
        std::filesystem::create_directories(*opts.trace_dir);
    std::ofstream out(opts.out, std::ios::app);
    if (!out)
        throw Error("cannot open output " + opts.out.string());
    if (!remote.empty())
        spdlog::info("scanning {} target(s); contact {}", pending.size(), opts.contact_url);

    std::mutex mu;
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::string failure;
    auto worker = [&] {
        for (;;) {
            if (failed.load())
                return;
            std::size_t i = next.fetch_add(1);
            if (i >= pending.size())
                return;
            ScanRecord rec;
            try {
                rec = scan_one(*pending[i], opts, db);
            } catch (const std::exception& e) {
                spdlog::error("{}: probe failed: {}", pending[i]->domain, e.what());
                rec = ScanRecord{};
                rec.domain = pending[i]->domain;
                rec.rank = pending[i]->rank;
                rec.started = rec.finished = utc_now();
                rec.exclusion_reason = "internal";
            }
            std::lock_guard lock(mu);
            if (failed.load())
                return;
            out << to_json(rec).dump() << '\n';
            out.flush();
            if (!out) {
                failed.store(true);
                failure = "write to " + opts.out.string() + " failed";
                return;
            }
            done.insert(rec.domain);
            try {
                write_checkpoint(checkpoint, done);
            } catch (const std::exception& e) {
                failed.store(true);
                failure = e.what();
                return;
            }
            ++summary.written;
            ++summary.by_eligibility[rec.eligibility];
        }
    };
    std::size_t n = std::min(opts.policy.max_concurrency, pending.size());
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < n; ++i)
        pool.emplace_back(worker);
    for (auto& th : pool)
        th.join();
    if (failed.load())
        throw Error(failure);
    return summary;
}

} // namespace tlsaudit
