#include "scpl/decimal.hpp"

#include <functional>

namespace scpl {

Decimal::Int Decimal::pow10(unsigned n) {
    Int r = 1;
    for (unsigned i = 0; i < n; ++i) r *= 10;
    return r;
}

void Decimal::normalize() {
    if (mant_.is_zero()) {
        scale_ = 0;
        return;
    }
    while (scale_ > 0 && mant_ % 10 == 0) {
        mant_ /= 10;
        --scale_;
    }
}

std::optional<Decimal> Decimal::parse(std::string_view text) {
    bool neg = false;
    std::size_t i = 0;
    if (i < text.size() && text[i] == '-') {
        neg = true;
        ++i;
    }
    std::string digits;
    unsigned scale = 0;
    bool seen_digit = false, seen_point = false;
    for (; i < text.size(); ++i) {
        char c = text[i];
        if (c >= '0' && c <= '9') {
            digits.push_back(c);
            seen_digit = true;
            if (seen_point) ++scale;
        } else if (c == '.' && !seen_point && seen_digit) {
            seen_point = true;
        } else {
            return std::nullopt;
        }
    }
    if (!seen_digit || (seen_point && scale == 0)) return std::nullopt;
    Int m(digits);
    if (neg) m = -m;
    return Decimal(std::move(m), scale);
}

std::string Decimal::str() const {
    std::string s = (mant_ < 0 ? Int(-mant_) : mant_).str();
    if (scale_ > 0) {
        if (s.size() <= scale_) s.insert(0, scale_ - s.size() + 1, '0');
        s.insert(s.size() - scale_, ".");
    }
    if (mant_ < 0) s.insert(0, "-");
    return s;
}

Decimal operator+(const Decimal& a, const Decimal& b) {
    unsigned s = std::max(a.scale_, b.scale_);
    return Decimal(a.mant_ * Decimal::pow10(s - a.scale_) + b.mant_ * Decimal::pow10(s - b.scale_), s);
}

Decimal operator-(const Decimal& a, const Decimal& b) { return a + (-b); }

Decimal operator*(const Decimal& a, const Decimal& b) {
    return Decimal(a.mant_ * b.mant_, a.scale_ + b.scale_);
}

Decimal Decimal::operator-() const { return Decimal(Int(-mant_), scale_); }

std::strong_ordering operator<=>(const Decimal& a, const Decimal& b) {
    unsigned s = std::max(a.scale_, b.scale_);
    Decimal::Int x = a.mant_ * Decimal::pow10(s - a.scale_);
    Decimal::Int y = b.mant_ * Decimal::pow10(s - b.scale_);
    if (x < y) return std::strong_ordering::less;
    if (x > y) return std::strong_ordering::greater;
    return std::strong_ordering::equal;
}

std::size_t Decimal::hash() const { return std::hash<std::string>{}(str()); }

}  // namespace scpl
