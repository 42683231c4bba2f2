#pragma once

#include <charconv>
#include <cstdint>
#include <numeric>
#include <string>
#include <string_view>

#include "apmine/errors.hpp"

namespace apmine {

// Exact fraction on 64-bit terms. Support and confidence thresholds are kept
// rational end to end so values like 1/410400 survive without float rounding.
// Comparisons cross-multiply in 128 bits.
class Rational {
  public:
    constexpr Rational() = default;

    Rational(std::int64_t num, std::int64_t den) : num_(num), den_(den) {
        if (den_ == 0) throw NumericError("rational with zero denominator");
        if (den_ < 0) {
            num_ = -num_;
            den_ = -den_;
        }
        const std::int64_t g = std::gcd(num_ < 0 ? -num_ : num_, den_);
        if (g > 1) {
            num_ /= g;
            den_ /= g;
        }
    }

    std::int64_t num() const { return num_; }
    std::int64_t den() const { return den_; }

    double value() const { return static_cast<double>(num_) / static_cast<double>(den_); }

    std::string str() const {
        return std::to_string(num_) + "/" + std::to_string(den_);
    }

    // Accepts "N/D", a plain integer, or a short decimal like "0.25".
    static Rational parse(std::string_view text) {
        const auto slash = text.find('/');
        if (slash != std::string_view::npos) {
            return Rational(parse_int(text.substr(0, slash)), parse_int(text.substr(slash + 1)));
        }
        const auto dot = text.find('.');
        if (dot == std::string_view::npos) return Rational(parse_int(text), 1);
        const std::string_view whole = text.substr(0, dot);
        const std::string_view frac = text.substr(dot + 1);
        if (frac.size() > 15) throw ParseError("decimal too long for exact rational: " + std::string(text));
        std::int64_t den = 1;
        for (std::size_t i = 0; i < frac.size(); ++i) den *= 10;
        const bool neg = !whole.empty() && whole.front() == '-';
        const std::int64_t w = whole.empty() || whole == "-" ? 0 : parse_int(whole);
        const std::int64_t f = frac.empty() ? 0 : parse_int(frac);
        const std::int64_t mag = (w < 0 ? -w : w) * den + f;
        return Rational(neg ? -mag : mag, den);
    }

    friend bool operator==(const Rational& a, const Rational& b) {
        return a.num_ == b.num_ && a.den_ == b.den_;
    }
    friend bool operator!=(const Rational& a, const Rational& b) { return !(a == b); }
    friend bool operator<(const Rational& a, const Rational& b) {
        return static_cast<__int128>(a.num_) * b.den_ < static_cast<__int128>(b.num_) * a.den_;
    }
    friend bool operator>(const Rational& a, const Rational& b) { return b < a; }
    friend bool operator<=(const Rational& a, const Rational& b) { return !(b < a); }
    friend bool operator>=(const Rational& a, const Rational& b) { return !(a < b); }

  private:
    static std::int64_t parse_int(std::string_view s) {
        std::int64_t v = 0;
        const auto* first = s.data();
        const auto* last = s.data() + s.size();
        const auto res = std::from_chars(first, last, v);
        if (res.ec != std::errc{} || res.ptr != last)
            throw ParseError("not an integer: '" + std::string(s) + "'");
        return v;
    }

    std::int64_t num_ = 0;
    std::int64_t den_ = 1;
};

// Smallest absolute count c such that c/total >= threshold.
inline std::int64_t min_count_for(const Rational& threshold, std::int64_t total) {
    if (total <= 0) return 1;
    if (threshold.num() <= 0) return 1;
    const __int128 prod = static_cast<__int128>(threshold.num()) * total;
    const __int128 c = (prod + threshold.den() - 1) / threshold.den();
    return c < 1 ? 1 : static_cast<std::int64_t>(c);
}

// count/total >= threshold, exactly.
inline bool meets_threshold(std::int64_t count, std::int64_t total, const Rational& threshold) {
    return static_cast<__int128>(count) * threshold.den() >=
           static_cast<__int128>(threshold.num()) * total;
}

} // namespace apmine
