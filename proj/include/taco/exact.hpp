#pragma once

#include <gmpxx.h>

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace taco {

/// Arbitrary-precision rational quantity of the traded asset.
///
/// Values are always kept in lowest terms with a positive denominator, so
/// equality and hashing act on the canonical representation. Every entry of
/// the offer and pay matrices, and the trading unit itself, is an
/// ExactAmount; this is what makes state recurrence detection exact.
class ExactAmount {
public:
    ExactAmount() = default;

    ExactAmount(long numerator) : value_(numerator) {}  // NOLINT(implicit)

    ExactAmount(long numerator, long denominator) {
        if (denominator == 0) {
            throw std::invalid_argument("ExactAmount: zero denominator");
        }
        value_ = mpq_class(numerator, 1) / mpq_class(denominator, 1);
        value_.canonicalize();
    }

    explicit ExactAmount(mpq_class value) : value_(std::move(value)) { value_.canonicalize(); }

    /// Parses "p/q", "p", or a finite decimal such as "0.9" (read exactly as 9/10).
    static ExactAmount parse(std::string_view text) {
        std::string s(text);
        auto first = s.find_first_not_of(" \t");
        auto last = s.find_last_not_of(" \t");
        if (first == std::string::npos) {
            throw std::invalid_argument("ExactAmount: empty string");
        }
        s = s.substr(first, last - first + 1);

        auto dot = s.find('.');
        if (dot != std::string::npos) {
            if (s.find('/') != std::string::npos || s.find_first_of("eE") != std::string::npos) {
                throw std::invalid_argument("ExactAmount: cannot parse '" + s + "'");
            }
            std::string digits = s.substr(0, dot) + s.substr(dot + 1);
            std::size_t scale = s.size() - dot - 1;
            if (digits.empty() || digits == "-" || digits == "+") {
                throw std::invalid_argument("ExactAmount: cannot parse '" + s + "'");
            }
            if (digits.front() == '+') {
                digits.erase(0, 1);
            }
            mpz_class num;
            if (num.set_str(digits, 10) != 0) {
                throw std::invalid_argument("ExactAmount: cannot parse '" + s + "'");
            }
            mpz_class den;
            mpz_ui_pow_ui(den.get_mpz_t(), 10, scale);
            return ExactAmount(mpq_class(num, den));
        }

        if (!s.empty() && s.front() == '+') {
            s.erase(0, 1);
        }
        mpq_class q;
        if (q.set_str(s, 10) != 0) {
            throw std::invalid_argument("ExactAmount: cannot parse '" + std::string(text) + "'");
        }
        if (q.get_den() == 0) {
            throw std::invalid_argument("ExactAmount: zero denominator");
        }
        return ExactAmount(std::move(q));
    }

    [[nodiscard]] double to_double() const { return value_.get_d(); }
    [[nodiscard]] std::string str() const { return value_.get_str(); }
    [[nodiscard]] std::string numerator_str() const { return value_.get_num().get_str(); }
    [[nodiscard]] std::string denominator_str() const { return value_.get_den().get_str(); }
    [[nodiscard]] int sign() const { return sgn(value_); }
    [[nodiscard]] const mpq_class& raw() const { return value_; }

    ExactAmount& operator+=(const ExactAmount& rhs) {
        value_ += rhs.value_;
        return *this;
    }
    ExactAmount& operator-=(const ExactAmount& rhs) {
        value_ -= rhs.value_;
        return *this;
    }
    ExactAmount& operator*=(const ExactAmount& rhs) {
        value_ *= rhs.value_;
        return *this;
    }

    friend ExactAmount operator+(ExactAmount lhs, const ExactAmount& rhs) { return lhs += rhs; }
    friend ExactAmount operator-(ExactAmount lhs, const ExactAmount& rhs) { return lhs -= rhs; }
    friend ExactAmount operator*(ExactAmount lhs, const ExactAmount& rhs) { return lhs *= rhs; }
    friend ExactAmount operator-(const ExactAmount& v) { return ExactAmount(mpq_class(-v.value_)); }

    friend bool operator==(const ExactAmount& a, const ExactAmount& b) { return a.value_ == b.value_; }
    friend std::strong_ordering operator<=>(const ExactAmount& a, const ExactAmount& b) {
        int c = cmp(a.value_, b.value_);
        if (c < 0) return std::strong_ordering::less;
        if (c > 0) return std::strong_ordering::greater;
        return std::strong_ordering::equal;
    }

    friend std::ostream& operator<<(std::ostream& os, const ExactAmount& v) { return os << v.str(); }

    /// Hash over the canonical limbs of numerator and denominator.
    [[nodiscard]] std::size_t hash() const {
        std::uint64_t h = 0x9e3779b97f4a7c15ULL;
        auto mix_in = [&h](std::uint64_t x) {
            h ^= x + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
        };
        auto mix_mpz = [&](mpz_srcptr z) {
            mix_in(static_cast<std::uint64_t>(mpz_sgn(z) + 1));
            std::size_t limbs = mpz_size(z);
            for (std::size_t k = 0; k < limbs; ++k) {
                mix_in(static_cast<std::uint64_t>(mpz_getlimbn(z, static_cast<mp_size_t>(k))));
            }
        };
        mix_mpz(mpq_numref(value_.get_mpq_t()));
        mix_mpz(mpq_denref(value_.get_mpq_t()));
        return static_cast<std::size_t>(h);
    }

private:
    mpq_class value_{0};
};

}  // namespace taco

template <>
struct std::hash<taco::ExactAmount> {
    std::size_t operator()(const taco::ExactAmount& v) const noexcept { return v.hash(); }
};
