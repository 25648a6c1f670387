#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <compare>
#include <optional>
#include <string>
#include <string_view>

namespace scpl {

/// Exact decimal: mantissa / 10^scale, kept normalized (no trailing zero
/// digits in the mantissa when scale > 0).
class Decimal {
public:
    using Int = boost::multiprecision::cpp_int;

    Decimal() = default;
    Decimal(long long v) : mant_(v) {}  // NOLINT implicit on purpose

    /// Accepts `-?[0-9]+(\.[0-9]+)?`.
    static std::optional<Decimal> parse(std::string_view text);

    std::string str() const;
    bool is_zero() const { return mant_.is_zero(); }
    int sign() const { return mant_.sign(); }
    bool is_integer() const { return scale_ == 0; }

    friend Decimal operator+(const Decimal& a, const Decimal& b);
    friend Decimal operator-(const Decimal& a, const Decimal& b);
    friend Decimal operator*(const Decimal& a, const Decimal& b);
    Decimal operator-() const;

    friend bool operator==(const Decimal& a, const Decimal& b) {
        return a.scale_ == b.scale_ && a.mant_ == b.mant_;
    }
    friend std::strong_ordering operator<=>(const Decimal& a, const Decimal& b);

    std::size_t hash() const;

private:
    Decimal(Int m, unsigned s) : mant_(std::move(m)), scale_(s) { normalize(); }
    void normalize();
    static Int pow10(unsigned n);

    Int mant_ = 0;
    unsigned scale_ = 0;
};

}  // namespace scpl
