// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tlsaudit Authors

#pragma once

#include "tlsaudit/cipher_string.hpp"
#include "tlsaudit/configuration.hpp"
#include "tlsaudit/grader.hpp"

#include "json.hpp"

#include <optional>
#include <string>
#include <vector>

namespace tlsaudit {

struct RecommendationSource {
    std::string url;
    std::string language;
    std::string publication_date;
    // commercial, blog or forum
    std::string kind;
};

struct Recommendation {
    std::optional<CipherExpr> cipher_expr;
    // Allowed protocol versions before library intersection.
    std::optional<VersionSet> protocols;
    std::optional<bool> server_preference;
    std::optional<bool> session_tickets;
    std::optional<int> dh_params_bits;
    RecommendationSource source;

    bool has_directive() const
    {
        return cipher_expr || protocols || server_preference || session_tickets || dh_params_bits;
    }
};

// Apache SSLProtocol / nginx ssl_protocols text, e.g. "all -SSLv2 -SSLv3" or
// "TLSv1.2 TLSv1.3". "all" means SSLv2 through TLS 1.3.
VersionSet parse_protocol_directive(std::string_view text);

// One JSON object. "protocols" may be a list of version names or a directive
// string. Throws ParseError (cipher string offsets included) or
// ValidationError when no directive is present.
Recommendation recommendation_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Recommendation& r);
// JSON lines; blank lines skipped. ParseError carries the line number.
std::vector<Recommendation> load_recommendations(const std::filesystem::path& path);

// Consistency of an observed configuration with a recommendation, using the
// union of all library profiles as the upper bound on what the cipher string
// can mean.
bool consistent(const Configuration& config, const Recommendation& rec, const CipherDb& db,
                const SuiteSet& profile_union);

// A bundled distribution default and the library it shipped with.
struct DefaultConfig {
    std::string name;
    std::string profile;
    Configuration config;
    std::optional<Grade> expected_grade;
};

Configuration apply_to_default(const Recommendation& rec, const Configuration& def,
                               const CipherDb& db, const LibraryProfile& profile);

struct RecommendationGrades {
    std::vector<std::pair<std::string, GradeReport>> per_default;
    Grade worst = Grade::A;
    Grade best = Grade::F;
};

RecommendationGrades grade_recommendation(const Recommendation& rec,
                                          const std::vector<DefaultConfig>& defaults,
                                          const CipherDb& db,
                                          const std::map<std::string, LibraryProfile>& profiles);

} // namespace tlsaudit
