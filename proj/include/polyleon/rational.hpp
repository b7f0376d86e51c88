#pragma once

#include <compare>
#include <cstdint>
#include <memory>
#include <ostream>
#include <string>
#include <string_view>

#include <gmpxx.h>

namespace polyleon {

/// Exact rational number in lowest terms with a positive denominator.
///
/// Values that fit in 64-bit numerator/denominator are stored inline; anything
/// larger is promoted to a shared, immutable GMP rational. Arithmetic results
/// are demoted back to the inline form whenever they fit, so the
/// representation of a value is canonical.
class Rational {
public:
    Rational() = default;
    Rational(std::int64_t value) : num_(value) {}  // NOLINT: implicit on purpose
    Rational(std::int64_t num, std::int64_t den);
    explicit Rational(const mpq_class& value);

    /// Parses "a", "a/b", or a decimal such as "-1.25e-3" (converted exactly).
    static Rational parse(std::string_view text);

    bool is_zero() const { return !big_ && num_ == 0; }
    int sign() const;
    bool is_integer() const;

    Rational operator-() const;
    Rational abs() const { return sign() < 0 ? -*this : *this; }
    Rational reciprocal() const;

    friend Rational operator+(const Rational& a, const Rational& b);
    friend Rational operator-(const Rational& a, const Rational& b);
    friend Rational operator*(const Rational& a, const Rational& b);
    friend Rational operator/(const Rational& a, const Rational& b);

    Rational& operator+=(const Rational& o) { return *this = *this + o; }
    Rational& operator-=(const Rational& o) { return *this = *this - o; }
    Rational& operator*=(const Rational& o) { return *this = *this * o; }
    Rational& operator/=(const Rational& o) { return *this = *this / o; }

    friend bool operator==(const Rational& a, const Rational& b);
    friend std::strong_ordering operator<=>(const Rational& a, const Rational& b);

    /// Integer power, exponent >= 0.
    Rational pow(unsigned exponent) const;

    /// "num/den", or "num" when den == 1.
    std::string to_string() const;
    double to_double() const;
    mpq_class to_mpq() const;

    /// Bit length of |numerator| and of denominator, each at least 1.
    std::size_t numerator_bits() const;
    std::size_t denominator_bits() const;
    std::size_t bit_size() const { return numerator_bits() + denominator_bits(); }

    /// Numerator/denominator as GMP integers.
    mpz_class numerator() const;
    mpz_class denominator() const;

    bool is_small() const { return !big_; }

private:
    static Rational from_mpq(mpq_class value);

    std::int64_t num_ = 0;
    std::int64_t den_ = 1;
    std::shared_ptr<const mpq_class> big_;
};

inline std::ostream& operator<<(std::ostream& os, const Rational& r) { return os << r.to_string(); }

Rational rational_from_double(double value);

}  // namespace polyleon
