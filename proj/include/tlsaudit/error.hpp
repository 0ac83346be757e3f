// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tlsaudit Authors

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tlsaudit {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Input that does not follow its file or grammar format.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t position = 0)
        : Error(what), position_(position) {}
    // Line number for files, byte offset for cipher strings.
    std::size_t position() const { return position_; }

private:
    std::size_t position_;
};

// Well-formed input that breaks an invariant (duplicate id, unknown suite...).
class ValidationError : public Error {
public:
    using Error::Error;
};

// Operation called outside its contract.
class PreconditionError : public Error {
public:
    using Error::Error;
};

} // namespace tlsaudit
