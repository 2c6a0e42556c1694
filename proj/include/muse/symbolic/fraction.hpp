#pragma once

#include <compare>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>

namespace muse {

/// Exact rational number kept in lowest terms with a positive denominator.
/// Musical time (onsets, durations) is measured in whole notes.
class Fraction {
public:
    constexpr Fraction() = default;
    constexpr Fraction(std::int64_t num) : num_(num), den_(1) {}  // NOLINT: implicit from integer is intended
    constexpr Fraction(std::int64_t num, std::int64_t den) : num_(num), den_(den) {
        if (den_ == 0) throw std::domain_error("Fraction with zero denominator");
        normalize();
    }

    constexpr std::int64_t num() const { return num_; }
    constexpr std::int64_t den() const { return den_; }

    double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }
    std::string str() const { return std::to_string(num_) + "/" + std::to_string(den_); }

    constexpr Fraction operator-() const { return Fraction(-num_, den_); }

    friend constexpr Fraction operator+(Fraction a, Fraction b) {
        const std::int64_t g = std::gcd(a.den_, b.den_);
        return Fraction(a.num_ * (b.den_ / g) + b.num_ * (a.den_ / g), a.den_ / g * b.den_);
    }
    friend constexpr Fraction operator-(Fraction a, Fraction b) { return a + (-b); }
    friend constexpr Fraction operator*(Fraction a, Fraction b) {
        const std::int64_t g1 = std::gcd(a.num_, b.den_);
        const std::int64_t g2 = std::gcd(b.num_, a.den_);
        const std::int64_t d1 = g1 == 0 ? 1 : g1;
        const std::int64_t d2 = g2 == 0 ? 1 : g2;
        return Fraction((a.num_ / d1) * (b.num_ / d2), (a.den_ / d2) * (b.den_ / d1));
    }
    friend constexpr Fraction operator/(Fraction a, Fraction b) {
        if (b.num_ == 0) throw std::domain_error("Fraction division by zero");
        return a * Fraction(b.den_, b.num_);
    }

    Fraction& operator+=(Fraction o) { return *this = *this + o; }
    Fraction& operator-=(Fraction o) { return *this = *this - o; }
    Fraction& operator*=(Fraction o) { return *this = *this * o; }
    Fraction& operator/=(Fraction o) { return *this = *this / o; }

    friend constexpr bool operator==(Fraction a, Fraction b) { return a.num_ == b.num_ && a.den_ == b.den_; }
    friend constexpr std::strong_ordering operator<=>(Fraction a, Fraction b) {
        // 128-bit to avoid overflow of the cross products.
        const __int128 lhs = static_cast<__int128>(a.num_) * b.den_;
        const __int128 rhs = static_cast<__int128>(b.num_) * a.den_;
        if (lhs < rhs) return std::strong_ordering::less;
        if (lhs > rhs) return std::strong_ordering::greater;
        return std::strong_ordering::equal;
    }

private:
    constexpr void normalize() {
        if (den_ < 0) {
            den_ = -den_;
            num_ = -num_;
        }
        const std::int64_t g = std::gcd(num_, den_);
        if (g > 1) {
            num_ /= g;
            den_ /= g;
        }
    }

    std::int64_t num_ = 0;
    std::int64_t den_ = 1;
};

}  // namespace muse
