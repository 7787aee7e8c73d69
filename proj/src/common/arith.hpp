#pragma once

#include <cstdint>

#include "common/error.hpp"

// Checked signed 64-bit arithmetic. Every failure is a runtime error.
namespace retro::arith {

inline std::int64_t add(std::int64_t a, std::int64_t b)
{
    std::int64_t r;
    if (__builtin_add_overflow(a, b, &r)) {
        throw Error(ErrorKind::runtime, "overflow", "integer overflow in addition");
    }
    return r;
}

inline std::int64_t sub(std::int64_t a, std::int64_t b)
{
    std::int64_t r;
    if (__builtin_sub_overflow(a, b, &r)) {
        throw Error(ErrorKind::runtime, "overflow", "integer overflow in subtraction");
    }
    return r;
}

inline std::int64_t mul(std::int64_t a, std::int64_t b)
{
    std::int64_t r;
    if (__builtin_mul_overflow(a, b, &r)) {
        throw Error(ErrorKind::runtime, "overflow", "integer overflow in multiplication");
    }
    return r;
}

inline std::int64_t div(std::int64_t a, std::int64_t b)
{
    if (b == 0) {
        throw Error(ErrorKind::runtime, "division-by-zero", "division by zero");
    }
    if (a == INT64_MIN && b == -1) {
        throw Error(ErrorKind::runtime, "overflow", "integer overflow in division");
    }
    return a / b;
}

inline std::int64_t mod(std::int64_t a, std::int64_t b)
{
    if (b == 0) {
        throw Error(ErrorKind::runtime, "division-by-zero", "modulo by zero");
    }
    if (b == -1) {
        return 0;
    }
    return a % b;
}

} // namespace retro::arith
