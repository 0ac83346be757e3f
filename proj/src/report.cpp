// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tlsaudit Authors

#include "tlsaudit/report.hpp"

#include "tlsaudit/dh_groups.hpp"
#include "tlsaudit/error.hpp"
#include "tlsaudit/tls_crypto.hpp"

#include <fmt/format.h>

#include <algorithm>

namespace tlsaudit {

namespace {

constexpr Grade grade_order[] = {Grade::A, Grade::B, Grade::C, Grade::F};

std::string csv_field(const std::string& s)
{
    if (s.find_first_of(",\"\n") == std::string::npos)
        return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"')
            out += '"';
        out += ch;
    }
    return out + "\"";
}

// Fixed precision keeps CSV output byte-stable across platforms.
std::string fraction_text(double v) { return fmt::format("{:.9f}", v); }

bool graded(const ScanRecord& r) { return r.grade_report.has_value() && r.configuration.has_value(); }

std::optional<std::string> group_of(const ScanRecord& r, GroupKey by)
{
    if (by == GroupKey::ASN)
        return r.asn ? std::optional<std::string>(std::to_string(r.asn->number)) : std::nullopt;
    return config_key(*r.configuration);
}

} // namespace

std::string config_key_material(const Configuration& c)
{
    std::string s = "versions=";
    for (auto v : c.versions)
        s += std::string(to_string(v)) + ",";
    s += ";suites=";
    for (auto id : c.supported_suites)
        s += format_suite_id(id) + ",";
    auto opt = [](const auto& o, auto f) { return o ? f(*o) : std::string("-"); };
    s += ";session_id=" + std::to_string(c.session_id_resumption);
    s += ";tickets=" + std::to_string(c.session_tickets);
    s += ";hint=" + opt(c.ticket_lifetime_hint_s, [](long v) { return std::to_string(v); });
    s += ";compression=" + std::to_string(c.tls_compression);
    s += ";server_preference=" + std::to_string(c.server_preference);
    s += ";preferred=" + opt(c.preferred_suite, [](SuiteId v) { return format_suite_id(v); });
    s += ";dh_bits=" + opt(c.dh_prime_bits, [](int v) { return std::to_string(v); });
    s += ";dh_common=" + opt(c.dh_group_common, [](bool v) { return std::to_string(v); });
    s += ";heartbleed=" + std::to_string(c.heartbleed_vulnerable);
    return s;
}

ConfigKey config_key(const Configuration& c)
{
    auto m = config_key_material(c);
    Bytes d = tls::digest("SHA256", Bytes(m.begin(), m.end()));
    d.resize(16);
    return to_hex(d);
}

GradeDistribution grade_distribution(const std::vector<ScanRecord>& records)
{
    GradeDistribution d;
    for (auto g : grade_order) {
        d.counts[g] = 0;
        d.proportions[g] = 0.0;
    }
    for (const auto& r : records) {
        if (graded(r)) {
            ++d.counts[r.grade_report->overall];
            ++d.graded;
        } else if (r.eligibility == Eligibility::EXCLUDED) {
            ++d.excluded;
        } else {
            ++d.ungradeable;
        }
    }
    if (d.graded > 0)
        for (auto g : grade_order)
            d.proportions[g] = static_cast<double>(d.counts[g]) / static_cast<double>(d.graded);
    return d;
}

std::vector<GroupRank> rank_groups(const std::vector<ScanRecord>& records, GroupKey by)
{
    std::map<std::string, std::size_t> sites;
    for (const auto& r : records)
        if (graded(r))
            if (auto g = group_of(r, by))
                ++sites[*g];
    std::vector<GroupRank> out;
    for (const auto& [k, n] : sites)
        out.push_back({k, n});
    std::stable_sort(out.begin(), out.end(), [](const GroupRank& a, const GroupRank& b) { return a.sites > b.sites; });
    return out;
}

std::vector<CdfPoint> cdf_by_group_rank(const std::vector<ScanRecord>& records, GroupKey by)
{
    auto ranks = rank_groups(records, by);
    std::map<std::string, std::size_t> position;
    for (std::size_t i = 0; i < ranks.size(); ++i)
        position[ranks[i].key] = i;
    // per grade, site count at each group rank
    std::map<Grade, std::vector<std::size_t>> at_rank;
    std::map<Grade, std::size_t> totals;
    for (const auto& r : records) {
        if (!graded(r))
            continue;
        auto g = group_of(r, by);
        if (!g)
            continue;
        Grade grade = r.grade_report->overall;
        auto& v = at_rank[grade];
        v.resize(ranks.size(), 0);
        ++v[position.at(*g)];
        ++totals[grade];
    }
    std::vector<CdfPoint> out;
    for (auto grade : grade_order) {
        if (!totals[grade])
            continue;
        std::size_t cumulative = 0;
        for (std::size_t k = 0; k < ranks.size(); ++k) {
            cumulative += at_rank[grade][k];
            double f = static_cast<double>(cumulative) / static_cast<double>(totals[grade]);
            out.push_back({k + 1, grade, f});
        }
    }
    return out;
}

DowngradeTable record_downgrades(const std::vector<ScanRecord>& records)
{
    std::vector<GradeReport> reports;
    for (const auto& r : records)
        if (graded(r))
            reports.push_back(*r.grade_report);
    return downgrade_table(reports);
}

Dominance dominance(const std::vector<ScanRecord>& records, std::size_t top_n)
{
    auto by_count = [](const ConfigCount& a, const ConfigCount& b) {
        return a.sites != b.sites ? a.sites > b.sites : a.key < b.key;
    };
    std::map<ConfigKey, ConfigCount> all;
    std::map<long, AsDominance> as_info;
    std::map<long, std::map<ConfigKey, ConfigCount>> as_configs;
    for (const auto& r : records) {
        if (!graded(r))
            continue;
        ConfigKey k = config_key(*r.configuration);
        auto& c = all[k];
        c.key = k;
        c.grade = r.grade_report->overall;
        ++c.sites;
        if (r.asn) {
            auto& a = as_info[r.asn->number];
            a.asn = r.asn->number;
            if (a.name.empty())
                a.name = r.asn->name;
            ++a.sites;
            auto& ac = as_configs[r.asn->number][k];
            ac.key = k;
            ac.grade = r.grade_report->overall;
            ++ac.sites;
        }
    }
    Dominance d;
    for (auto& [k, c] : all)
        d.configs.push_back(c);
    std::sort(d.configs.begin(), d.configs.end(), by_count);
    for (auto& [asn, a] : as_info) {
        for (auto& [k, c] : as_configs[asn])
            a.top.push_back(c);
        std::sort(a.top.begin(), a.top.end(), by_count);
        if (a.top.size() > top_n)
            a.top.resize(top_n);
        d.per_as.push_back(a);
    }
    std::stable_sort(d.per_as.begin(), d.per_as.end(),
                     [](const AsDominance& x, const AsDominance& y) { return x.sites > y.sites; });
    return d;
}

void write_distribution_csv(std::ostream& out, const GradeDistribution& d)
{
    out << "grade,count,proportion\n";
    for (auto g : grade_order)
        out << to_string(g) << ',' << d.counts.at(g) << ',' << fraction_text(d.proportions.at(g)) << '\n';
}

void write_cdf_csv(std::ostream& out, const std::vector<CdfPoint>& points)
{
    out << "k,grade,fraction\n";
    for (const auto& p : points)
        out << p.k << ',' << to_string(p.grade) << ',' << fraction_text(p.fraction) << '\n';
}

void write_downgrades_csv(std::ostream& out, const DowngradeTable& t)
{
    out << "grade,category,fraction\n";
    for (auto g : {Grade::B, Grade::C, Grade::F}) {
        auto row = t.find(g);
        for (auto c : all_categories) {
            double v = 0;
            if (row != t.end())
                if (auto it = row->second.find(c); it != row->second.end())
                    v = it->second;
            out << to_string(g) << ',' << to_string(c) << ',' << fraction_text(v) << '\n';
        }
    }
}

void write_dominance_csv(std::ostream& out, const Dominance& d)
{
    out << "asn,as_name,as_sites,rank,config_key,sites,fraction,grade\n";
    for (const auto& a : d.per_as)
        for (std::size_t i = 0; i < a.top.size(); ++i)
            out << a.asn << ',' << csv_field(a.name) << ',' << a.sites << ',' << i + 1 << ',' << a.top[i].key << ','
                << a.top[i].sites << ','
                << fraction_text(static_cast<double>(a.top[i].sites) / static_cast<double>(a.sites)) << ','
                << to_string(a.top[i].grade) << '\n';
}

void write_tidy_csv(std::ostream& out, const std::vector<ScanRecord>& records)
{
    out << "domain,rank,eligibility,grade,server,os,tld,asn,config_key\n";
    for (const auto& r : records) {
        std::string host = r.domain.substr(0, r.domain.find(':'));
        auto dot = host.rfind('.');
        std::string tld = dot == std::string::npos ? "" : host.substr(dot + 1);
        out << csv_field(r.domain) << ',' << (r.rank ? std::to_string(*r.rank) : "") << ','
            << to_string(r.eligibility) << ',' << (r.grade_report ? to_string(r.grade_report->overall) : "") << ','
            << csv_field(r.server_software && r.server_software->name ? *r.server_software->name : "") << ','
            << csv_field(r.os_hint.value_or("")) << ',' << csv_field(tld) << ','
            << (r.asn ? std::to_string(r.asn->number) : "") << ','
            << (r.configuration ? config_key(*r.configuration) : "") << '\n';
    }
}

nlohmann::json to_json(const GradeDistribution& d)
{
    nlohmann::json grades = nlohmann::json::object();
    for (auto g : grade_order)
        grades[std::string(to_string(g))] = {{"count", d.counts.at(g)}, {"proportion", d.proportions.at(g)}};
    return {{"graded", d.graded}, {"excluded", d.excluded}, {"ungradeable", d.ungradeable}, {"grades", grades}};
}

GradeDistribution grade_distribution_from_json(const nlohmann::json& j)
{
    GradeDistribution d;
    try {
        d.graded = j.at("graded").get<std::size_t>();
        d.excluded = j.at("excluded").get<std::size_t>();
        d.ungradeable = j.at("ungradeable").get<std::size_t>();
        for (auto g : grade_order) {
            const auto& e = j.at("grades").at(std::string(to_string(g)));
            d.counts[g] = e.at("count").get<std::size_t>();
            d.proportions[g] = e.at("proportion").get<double>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed distribution: ") + e.what());
    }
    return d;
}

nlohmann::json to_json(const std::vector<CdfPoint>& points)
{
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& p : points)
        arr.push_back({{"k", p.k}, {"grade", to_string(p.grade)}, {"fraction", p.fraction}});
    return arr;
}

std::vector<CdfPoint> cdf_from_json(const nlohmann::json& j)
{
    std::vector<CdfPoint> out;
    try {
        for (const auto& e : j)
            out.push_back({e.at("k").get<std::size_t>(), parse_grade(e.at("grade").get<std::string>()),
                           e.at("fraction").get<double>()});
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed cdf: ") + e.what());
    }
    return out;
}

nlohmann::json to_json(const DowngradeTable& t)
{
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [g, row] : t) {
        nlohmann::json r = nlohmann::json::object();
        for (const auto& [c, v] : row)
            r[std::string(to_string(c))] = v;
        j[std::string(to_string(g))] = r;
    }
    return j;
}

nlohmann::json to_json(const Dominance& d)
{
    auto cc = [](const ConfigCount& c) {
        return nlohmann::json{{"config_key", c.key}, {"sites", c.sites}, {"grade", to_string(c.grade)}};
    };
    nlohmann::json configs = nlohmann::json::array();
    for (const auto& c : d.configs)
        configs.push_back(cc(c));
    nlohmann::json per_as = nlohmann::json::array();
    for (const auto& a : d.per_as) {
        nlohmann::json top = nlohmann::json::array();
        for (const auto& c : a.top)
            top.push_back(cc(c));
        per_as.push_back({{"asn", a.asn}, {"as_name", a.name}, {"sites", a.sites}, {"top", top}});
    }
    return {{"configs", configs}, {"per_as", per_as}};
}

Dominance dominance_from_json(const nlohmann::json& j)
{
    auto cc = [](const nlohmann::json& e) {
        return ConfigCount{e.at("config_key").get<std::string>(), e.at("sites").get<std::size_t>(),
                           parse_grade(e.at("grade").get<std::string>())};
    };
    Dominance d;
    try {
        for (const auto& e : j.at("configs"))
            d.configs.push_back(cc(e));
        for (const auto& e : j.at("per_as")) {
            AsDominance a;
            a.asn = e.at("asn").get<long>();
            a.name = e.at("as_name").get<std::string>();
            a.sites = e.at("sites").get<std::size_t>();
            for (const auto& t : e.at("top"))
                a.top.push_back(cc(t));
            d.per_as.push_back(std::move(a));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed dominance: ") + e.what());
    }
    return d;
}

} // namespace tlsaudit
