// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tlsaudit Authors

#pragma once

#include "tlsaudit/configuration.hpp"
#include "tlsaudit/grader.hpp"
#include "tlsaudit/probe.hpp"

#include "json.hpp"

#include <filesystem>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace tlsaudit {

// One row of the targets file. The domain column may carry ":port".
struct ScanTarget {
    std::optional<long> rank;
    std::string domain;
};

// `rank,domain` CSV. An optional header line starting with "rank" is skipped;
// malformed rows and duplicate domains are skipped with a warning naming the
// line. `skipped`, when given, receives those line numbers.
std::vector<ScanTarget> parse_targets(std::istream& in, std::vector<std::size_t>* skipped = nullptr);
std::vector<ScanTarget> load_targets(const std::filesystem::path& path, std::vector<std::size_t>* skipped = nullptr);

struct ServerHeaderInfo {
    // Canonical product name (e.g. "nginx", "microsoft-iis") when the product
    // is recognized, else the lowercased product token.
    std::optional<std::string> name;
    std::optional<std::string> version;
    std::optional<std::string> os_hint;
    bool recognized = false;
};

ServerHeaderInfo parse_server_header(std::string_view value);

struct AsnInfo {
    long number = 0;
    std::string name;
    bool operator==(const AsnInfo&) const = default;
};

// Longest-prefix table over IPv4 and IPv6 prefixes.
template <class T>
class PrefixTable {
public:
    // Throws ParseError on a malformed prefix.
    void insert(const std::string& prefix, T value);
    std::optional<T> lookup(const std::string& address) const;
    std::size_t size() const { return count_; }

private:
    // Per family and prefix length, masked address bytes -> value.
    std::map<int, std::map<std::string, T>, std::greater<>> v4_, v6_;
    std::size_t count_ = 0;
};

// Parses "a.b.c.d/len" or "v6::/len" into (address bytes, length). Throws
// ParseError.
std::pair<std::string, int> parse_prefix(const std::string& prefix);
// Numeric address into raw bytes (4 or 16); nullopt if not an IP literal.
std::optional<std::string> address_bytes(const std::string& address);
std::string mask_bytes(std::string bytes, int len);

template <class T>
void PrefixTable<T>::insert(const std::string& prefix, T value)
{
    auto [bytes, len] = parse_prefix(prefix);
    auto& table = bytes.size() == 4 ? v4_ : v6_;
    auto [it, fresh] = table[len].insert_or_assign(mask_bytes(bytes, len), std::move(value));
    (void)it;
    if (fresh)
        ++count_;
}

template <class T>
std::optional<T> PrefixTable<T>::lookup(const std::string& address) const
{
    auto bytes = address_bytes(address);
    if (!bytes)
        return std::nullopt;
    const auto& table = bytes->size() == 4 ? v4_ : v6_;
    for (const auto& [len, entries] : table) {
        auto it = entries.find(mask_bytes(*bytes, len));
        if (it != entries.end())
            return it->second;
    }
    return std::nullopt;
}

using AsnTable = PrefixTable<AsnInfo>;

// `prefix,asn,as_name` CSV; header optional. Throws ParseError with the line.
AsnTable parse_asn_table(std::istream& in);
AsnTable load_asn_table(const std::filesystem::path& path);

// `prefix,country` CSV.
PrefixTable<std::string> load_geo_table(const std::filesystem::path& path);

enum class Eligibility : std::uint8_t { ELIGIBLE, PARTIAL, UNGRADEABLE, EXCLUDED };
std::string_view to_string(Eligibility e);
Eligibility parse_eligibility(std::string_view s);

inline constexpr int scan_record_schema = 1;

struct ScanRecord {
    std::string domain;
    std::optional<long> rank;
    std::optional<std::string> address;
    std::string started;
    std::string finished;
    Eligibility eligibility = Eligibility::EXCLUDED;
    // "dns", "baseline", "http", "ethics" ... for EXCLUDED records.
    std::optional<std::string> exclusion_reason;
    std::optional<ServerHeaderInfo> server_software;
    std::optional<std::string> os_hint;
    std::optional<AsnInfo> asn;
    std::optional<std::string> country;
    std::optional<Configuration> configuration;
    std::optional<GradeReport> grade_report;
    std::size_t handshake_count = 0;
    std::string trace_ref;

    // Throws ValidationError.
    void validate() const;
};

nlohmann::json to_json(const ScanRecord& r);
ScanRecord scan_record_from_json(const nlohmann::json& j, const CipherDb& db);
// One record per non-empty line. Throws ParseError naming the line.
std::vector<ScanRecord> load_scan_records(const std::filesystem::path& path, const CipherDb& db);

struct ScanOptions {
    ProbePolicy policy;
    GradingPolicy grading;
    std::filesystem::path out;
    // Defaults to <out>.checkpoint.
    std::optional<std::filesystem::path> checkpoint;
    // Per-site trace JSON files; none written when unset.
    std::optional<std::filesystem::path> trace_dir;
    const AsnTable* asn_table = nullptr;
    const PrefixTable<std::string>* geo_table = nullptr;
    // Required before any non-loopback target is contacted.
    bool ethics_acknowledged = false;
    std::string contact_url;
    // Target domain -> loopback "host:port" to connect to instead of
    // resolving it. Used to scan local fixture endpoints by name.
    std::map<std::string, std::string> host_overrides;
};

struct ScanSummary {
    std::size_t targets = 0;
    std::size_t written = 0;
    std::size_t resumed_skipped = 0;
    std::map<Eligibility, std::size_t> by_eligibility;
};

// Raised before any packet is sent when the ethics gate refuses the run.
class EthicsRefusal : public Error {
public:
    using Error::Error;
};

// Targets that would need the ethics acknowledgement.
std::vector<std::string> non_loopback_targets(const std::vector<ScanTarget>& targets);

// Probes one target and assembles its record.
ScanRecord scan_one(const ScanTarget& target, const ScanOptions& opts, const CipherDb& db);

// Probes every target not already in the checkpoint with a bounded worker
// pool; records are appended to opts.out as they complete. Throws
// EthicsRefusal, or Error when the sink fails (the checkpoint then lists
// only written records).
ScanSummary run_scan(const std::vector<ScanTarget>& targets, const ScanOptions& opts, const CipherDb& db);

std::set<std::string> load_checkpoint(const std::filesystem::path& path);

} // namespace tlsaudit
