#pragma once

#include <cmath>
#include <limits>

namespace exttilt {

/// A real number stored as (sign, log|value|).  All moment-generating-scale
/// arithmetic in this library runs on these: exponents reach thousands of
/// nats, so raw doubles are never materialized except for ratios.
struct SignedLog {
    double log_abs = -std::numeric_limits<double>::infinity();
    int sign = 0; // -1, 0, +1

    static SignedLog zero() { return {}; }

    static SignedLog from_log(double log_abs, int sign = 1) {
        if (sign == 0 || log_abs == -std::numeric_limits<double>::infinity()) return {};
        return {log_abs, sign < 0 ? -1 : 1};
    }

    static SignedLog from_value(double v) {
        if (v == 0.0 || std::isnan(v)) return {};
        return {std::log(std::abs(v)), v < 0 ? -1 : 1};
    }

    bool is_zero() const { return sign == 0; }

    double value() const { return sign == 0 ? 0.0 : sign * std::exp(log_abs); }

    SignedLog negated() const { return {log_abs, -sign}; }

    friend SignedLog operator*(const SignedLog& a, const SignedLog& b) {
        if (a.sign == 0 || b.sign == 0) return {};
        return {a.log_abs + b.log_abs, a.sign * b.sign};
    }

    friend SignedLog operator/(const SignedLog& a, const SignedLog& b) {
        if (a.sign == 0) return {};
        return {a.log_abs - b.log_abs, a.sign * b.sign};
    }

    friend SignedLog operator+(const SignedLog& a, const SignedLog& b) {
        if (a.sign == 0) return b;
        if (b.sign == 0) return a;
        if (a.sign == b.sign) {
            const double hi = std::max(a.log_abs, b.log_abs);
            const double lo = std::min(a.log_abs, b.log_abs);
            return {hi + std::log1p(std::exp(lo - hi)), a.sign};
        }
        // opposite signs: magnitude difference
        if (a.log_abs == b.log_abs) return {};
        const bool a_wins = a.log_abs > b.log_abs;
        const double hi = a_wins ? a.log_abs : b.log_abs;
        const double lo = a_wins ? b.log_abs : a.log_abs;
        return {hi + std::log1p(-std::exp(lo - hi)), a_wins ? a.sign : b.sign};
    }

    SignedLog& operator+=(const SignedLog& o) { return *this = *this + o; }
    SignedLog& operator*=(const SignedLog& o) { return *this = *this * o; }
};

} // namespace exttilt
