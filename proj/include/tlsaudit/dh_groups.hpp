// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tlsaudit Authors

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace tlsaudit {

using Bytes = std::vector<std::uint8_t>;

struct DhPrime {
    std::string name;
    int bits = 0;
    Bytes prime; // big-endian, no leading zeros
};

// Well-known primes from data/dh_common_primes.txt (Oakley/MODP and RFC 7919).
class DhPrimeList {
public:
    static DhPrimeList load(const std::filesystem::path& path);
    // Bundled list, loaded once from the default data directory.
    static const DhPrimeList& bundled();

    bool is_common(const Bytes& prime) const;
    const DhPrime* by_name(const std::string& name) const;
    const std::vector<DhPrime>& primes() const { return primes_; }

private:
    std::vector<DhPrime> primes_;
};

// Bit length of a big-endian unsigned integer.
int bit_length(const Bytes& big_endian);
Bytes strip_leading_zeros(Bytes b);
Bytes from_hex(const std::string& hex);
std::string to_hex(const Bytes& b);

} // namespace tlsaudit
