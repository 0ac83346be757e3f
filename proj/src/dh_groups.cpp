// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tlsaudit Authors

#include "tlsaudit/dh_groups.hpp"

#include "tlsaudit/cipher_registry.hpp"
#include "tlsaudit/error.hpp"

#include <fmt/format.h>
#include <fstream>
#include <sstream>

namespace tlsaudit {

int bit_length(const Bytes& b)
{
    std::size_t i = 0;
    while (i < b.size() && b[i] == 0)
        ++i;
    if (i == b.size())
        return 0;
    int bits = static_cast<int>((b.size() - i - 1) * 8);
    for (unsigned v = b[i]; v; v >>= 1)
        ++bits;
    return bits;
}

Bytes strip_leading_zeros(Bytes b)
{
    std::size_t i = 0;
    while (i < b.size() && b[i] == 0)
        ++i;
    b.erase(b.begin(), b.begin() + static_cast<std::ptrdiff_t>(i));
    return b;
}

Bytes from_hex(const std::string& hex)
{
    std::string h = hex.size() % 2 ? "0" + hex : hex;
    Bytes out;
    out.reserve(h.size() / 2);
    for (std::size_t i = 0; i < h.size(); i += 2) {
        unsigned v = 0;
        if (std::sscanf(h.c_str() + i, "%2x", &v) != 1)
            throw ParseError(fmt::format("bad hex at offset {}", i), i);
        out.push_back(static_cast<std::uint8_t>(v));
    }
    return out;
}

std::string to_hex(const Bytes& b)
{
    std::string out;
    out.reserve(b.size() * 2);
    for (auto c : b)
        out += fmt::format("{:02X}", c);
    return out;
}

DhPrimeList DhPrimeList::load(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error(fmt::format("cannot open DH prime list {}", path.string()));
    DhPrimeList list;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#')
            continue;
        std::istringstream ls(line);
        DhPrime p;
        std::string hex;
        if (!(ls >> p.name >> p.bits >> hex))
            throw ParseError(fmt::format("line {}: expected name bits hex", lineno), lineno);
        p.prime = strip_leading_zeros(from_hex(hex));
        if (bit_length(p.prime) != p.bits)
            throw ValidationError(fmt::format("line {}: bit length mismatch for {}", lineno, p.name));
        list.primes_.push_back(std::move(p));
    }
    return list;
}

const DhPrimeList& DhPrimeList::bundled()
{
    static const DhPrimeList list = load(default_data_dir() / "dh_common_primes.txt");
    return list;
}

bool DhPrimeList::is_common(const Bytes& prime) const
{
    Bytes p = strip_leading_zeros(prime);
    for (const auto& known : primes_)
        if (known.prime == p)
            return true;
    return false;
}

const DhPrime* DhPrimeList::by_name(const std::string& name) const
{
    for (const auto& p : primes_)
        if (p.name == name)
            return &p;
    return nullptr;
}

} // namespace tlsaudit
