// Copyright 2026 The drivekit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace dgk {

inline constexpr int kVersionMajor = 0;
inline constexpr int kVersionMinor = 1;

/// Base error type for all contract violations and I/O failures.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what_arg) : std::runtime_error(what_arg) {}
};

/// Bad or inconsistent configuration (CLI maps this to its own exit code).
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what_arg, std::string field = "")
        : Error(what_arg), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// Corrupt or truncated file. Carries the byte offset of the failure.
class IoError : public Error {
public:
    IoError(const std::string& what_arg, std::uint64_t offset)
        : Error(what_arg + " (offset " + std::to_string(offset) + ")"), offset_(offset) {}
    std::uint64_t offset() const noexcept { return offset_; }

private:
    std::uint64_t offset_;
};

#define DGK_REQUIRE(cond, msg)          \
    do {                                \
        if (!(cond)) {                  \
            throw ::dgk::Error{(msg)};  \
        }                               \
    } while (0)

}  // namespace dgk
