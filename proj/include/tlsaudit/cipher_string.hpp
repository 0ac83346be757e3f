// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tlsaudit Authors

#pragma once

#include "tlsaudit/cipher_registry.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace tlsaudit {

enum class TermModifier : std::uint8_t { NONE, EXCLUDE, REMOVE, PROMOTE };

struct CipherTerm {
    TermModifier modifier = TermModifier::NONE;
    // Conjunction: a suite matches when every keyword matches.
    std::vector<std::string> keywords;
    // Ordering directives such as @STRENGTH or @SECLEVEL=2; kept for
    // printing, ignored by expansion.
    bool directive = false;
    bool operator==(const CipherTerm&) const = default;
};

struct CipherExpr {
    std::vector<CipherTerm> terms;
    bool operator==(const CipherExpr&) const = default;
};

// Grammar: expr := term (sep term)*, sep := ':' | ',' | ' ',
// term := ['!'|'-'|'+'] keyword ('+' keyword)*.
// Unknown keywords raise ParseError with the byte offset of the token.
CipherExpr parse_cipher_string(std::string_view text);
std::string to_string(const CipherExpr& e);

bool is_known_keyword(std::string_view kw);
std::vector<std::string> known_keywords();

struct LibraryProfile {
    std::string name;
    VersionSet versions;
    SuiteSet suites;
    std::string notes;
};

LibraryProfile load_profile(const std::filesystem::path& path);
// Every *.json in dir, keyed by profile name.
std::map<std::string, LibraryProfile> load_profiles(const std::filesystem::path& dir);
LibraryProfile union_profile(const std::map<std::string, LibraryProfile>& profiles);

// Evaluates one keyword against a suite; throws ParseError for unknown keywords.
bool keyword_matches(std::string_view kw, const CipherSuiteInfo& s, const StrengthMap& strength);

// Toolkit semantics: plain terms append matching suites not yet listed, '!'
// removes and bans for good, '-' removes, '+' moves listed matches to the end.
// Result is filtered to the profile, order preserved. TLS 1.3 suites never match.
std::vector<SuiteId> expand(const CipherExpr& e, const CipherDb& db, const SuiteSet& profile,
                            const StrengthMap& strength);
std::vector<SuiteId> expand(const CipherExpr& e, const CipherDb& db, const SuiteSet& profile);

// Strength classes from the bundled data directory, loaded once.
const StrengthMap& bundled_strength_classes();

} // namespace tlsaudit
