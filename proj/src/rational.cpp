#include "polyleon/rational.hpp"

#include <bit>
#include <cmath>
#include <limits>
#include <numeric>

#include "polyleon/error.hpp"

namespace polyleon {

namespace {

constexpr std::int64_t kMin = std::numeric_limits<std::int64_t>::min();

std::uint64_t uabs(std::int64_t v) {
    return v < 0 ? std::uint64_t(0) - std::uint64_t(v) : std::uint64_t(v);
}

std::uint64_t ugcd(std::uint64_t a, std::uint64_t b) {
    if (a == 0) return b;
    if (b == 0) return a;
    int shift = std::countr_zero(a | b);
    a >>= std::countr_zero(a);
    do {
        b >>= std::countr_zero(b);
        if (a > b) std::swap(a, b);
        b -= a;
    } while (b != 0);
    return a << shift;
}

static_assert(sizeof(long) == sizeof(std::int64_t), "LP64 required");

mpz_class mpz_from_i64(std::int64_t v) { return mpz_class(static_cast<long>(v)); }

bool mpz_to_i64(const mpz_class& z, std::int64_t& out) {
    if (!z.fits_slong_p()) return false;
    out = z.get_si();
    return true;
}

std::size_t mpz_bits(const mpz_class& z) {
    if (z == 0) return 1;
    return mpz_sizeinbase(z.get_mpz_t(), 2);
}

std::size_t u64_bits(std::uint64_t v) { return v == 0 ? 1 : std::size_t(64 - std::countl_zero(v)); }

}  // namespace

Rational::Rational(std::int64_t num, std::int64_t den) {
    if (den == 0) throw Error(ErrorCode::ZeroDenominator, "rational with zero denominator");
    if (num == kMin || den == kMin) {
        *this = from_mpq(mpq_class(mpz_from_i64(num), mpz_from_i64(den)));
        return;
    }
    if (den < 0) {
        num = -num;
        den = -den;
    }
    std::uint64_t g = ugcd(uabs(num), std::uint64_t(den));
    num_ = num / std::int64_t(g);
    den_ = den / std::int64_t(g);
}

Rational::Rational(const mpq_class& value) { *this = from_mpq(value); }

Rational Rational::from_mpq(mpq_class value) {
    value.canonicalize();
    Rational r;
    std::int64_t n = 0, d = 0;
    if (mpz_to_i64(value.get_num(), n) && mpz_to_i64(value.get_den(), d) && n != kMin) {
        r.num_ = n;
        r.den_ = d;
        return r;
    }
    r.num_ = 0;
    r.den_ = 1;
    r.big_ = std::make_shared<const mpq_class>(std::move(value));
    return r;
}

mpq_class Rational::to_mpq() const {
    if (big_) return *big_;
    return mpq_class(mpz_from_i64(num_), mpz_from_i64(den_));
}

mpz_class Rational::numerator() const { return big_ ? mpz_class(big_->get_num()) : mpz_from_i64(num_); }
mpz_class Rational::denominator() const { return big_ ? mpz_class(big_->get_den()) : mpz_from_i64(den_); }

Rational Rational::parse(std::string_view text) {
    std::string s(text);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
    std::size_t start = 0;
    while (start < s.size() && std::isspace(static_cast<unsigned char>(s[start]))) ++start;
    s = s.substr(start);
    if (s.empty()) throw Error(ErrorCode::Parse, "empty rational literal");

    auto bad = [&] { return Error(ErrorCode::Parse, "malformed rational literal '" + s + "'"); };
    auto check_int = [&](std::string_view t, bool allow_sign) {
        std::size_t i = 0;
        if (allow_sign && i < t.size() && (t[i] == '-' || t[i] == '+')) ++i;
        if (i == t.size()) throw bad();
        for (; i < t.size(); ++i)
            if (!std::isdigit(static_cast<unsigned char>(t[i]))) throw bad();
    };

    if (auto slash = s.find('/'); slash != std::string::npos) {
        std::string n = s.substr(0, slash), d = s.substr(slash + 1);
        check_int(n, true);
        check_int(d, true);
        if (n[0] == '+') n.erase(0, 1);
        if (d[0] == '+') d.erase(0, 1);
        mpz_class den(d, 10);
        if (den == 0) throw Error(ErrorCode::ZeroDenominator, "zero denominator in '" + s + "'");
        return from_mpq(mpq_class(mpz_class(n, 10), den));
    }

    // Decimal with optional exponent.
    std::string mant = s;
    long exp10 = 0;
    if (auto e = s.find_first_of("eE"); e != std::string::npos) {
        std::string es = s.substr(e + 1);
        check_int(es, true);
        exp10 = std::stol(es);
        mant = s.substr(0, e);
    }
    bool neg = false;
    if (!mant.empty() && (mant[0] == '-' || mant[0] == '+')) {
        neg = mant[0] == '-';
        mant.erase(0, 1);
    }
    std::string digits;
    long frac = 0;
    bool seen_dot = false;
    for (char c : mant) {
        if (c == '.') {
            if (seen_dot) throw bad();
            seen_dot = true;
        } else if (std::isdigit(static_cast<unsigned char>(c))) {
            digits.push_back(c);
            if (seen_dot) ++frac;
        } else {
            throw bad();
        }
    }
    if (digits.empty()) throw bad();
    mpz_class n(digits, 10);
    if (neg) n = -n;
    long shift = exp10 - frac;
    mpz_class p10;
    mpz_ui_pow_ui(p10.get_mpz_t(), 10, static_cast<unsigned long>(shift < 0 ? -shift : shift));
    if (shift >= 0) return from_mpq(mpq_class(n * p10));
    return from_mpq(mpq_class(n, p10));
}

int Rational::sign() const {
    if (big_) return sgn(*big_);
    return (num_ > 0) - (num_ < 0);
}

bool Rational::is_integer() const { return big_ ? big_->get_den() == 1 : den_ == 1; }

Rational Rational::operator-() const {
    if (big_ || num_ == kMin) return from_mpq(-to_mpq());
    Rational r = *this;
    r.num_ = -num_;
    return r;
}

Rational Rational::reciprocal() const {
    if (is_zero()) throw Error(ErrorCode::ZeroDenominator, "reciprocal of zero");
    if (big_) return from_mpq(1 / *big_);
    return Rational(den_, num_);
}

Rational operator+(const Rational& a, const Rational& b) {
    if (!a.big_ && !b.big_) {
        if (a.den_ == 1 && b.den_ == 1) {
            std::int64_t s;
            if (!__builtin_add_overflow(a.num_, b.num_, &s) && s != kMin) {
                Rational r;
                r.num_ = s;
                return r;
            }
        } else {
            // Knuth 4.5.1: keep intermediates small via gcd of denominators.
            std::uint64_t g = ugcd(std::uint64_t(a.den_), std::uint64_t(b.den_));
            std::int64_t bd = b.den_ / std::int64_t(g);
            std::int64_t ad = a.den_ / std::int64_t(g);
            std::int64_t t1, t2, t;
            if (!__builtin_mul_overflow(a.num_, bd, &t1) && !__builtin_mul_overflow(b.num_, ad, &t2) &&
                !__builtin_add_overflow(t1, t2, &t) && t != kMin) {
                std::uint64_t g2 = ugcd(uabs(t), g);
                std::int64_t den;
                if (!__builtin_mul_overflow(ad, b.den_ / std::int64_t(g2), &den)) {
                    Rational r;
                    r.num_ = t / std::int64_t(g2);
                    r.den_ = den;
                    if (r.num_ == 0) r.den_ = 1;
                    return r;
                }
            }
        }
    }
    return Rational::from_mpq(a.to_mpq() + b.to_mpq());
}

Rational operator-(const Rational& a, const Rational& b) { return a + (-b); }

Rational operator*(const Rational& a, const Rational& b) {
    if (!a.big_ && !b.big_) {
        if (a.num_ == 0 || b.num_ == 0) return Rational();
        std::uint64_t g1 = ugcd(uabs(a.num_), std::uint64_t(b.den_));
        std::uint64_t g2 = ugcd(uabs(b.num_), std::uint64_t(a.den_));
        std::int64_t n, d;
        if (!__builtin_mul_overflow(a.num_ / std::int64_t(g1), b.num_ / std::int64_t(g2), &n) &&
            !__builtin_mul_overflow(a.den_ / std::int64_t(g2), b.den_ / std::int64_t(g1), &d) && n != kMin) {
            Rational r;
            r.num_ = n;
            r.den_ = d;
            return r;
        }
    }
    return Rational::from_mpq(a.to_mpq() * b.to_mpq());
}

Rational operator/(const Rational& a, const Rational& b) { return a * b.reciprocal(); }

bool operator==(const Rational& a, const Rational& b) {
    if (!a.big_ && !b.big_) return a.num_ == b.num_ && a.den_ == b.den_;
    if (a.big_ && b.big_) return *a.big_ == *b.big_;
    return false;  // canonical: a big value never fits inline
}

std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
    if (!a.big_ && !b.big_) {
        if (a.den_ == b.den_) return a.num_ <=> b.num_;
        __int128 l = static_cast<__int128>(a.num_) * b.den_;
        __int128 r = static_cast<__int128>(b.num_) * a.den_;
        return l < r ? std::strong_ordering::less
                     : (l > r ? std::strong_ordering::greater : std::strong_ordering::equal);
    }
    int c = cmp(a.to_mpq(), b.to_mpq());
    return c < 0 ? std::strong_ordering::less
                 : (c > 0 ? std::strong_ordering::greater : std::strong_ordering::equal);
}

Rational Rational::pow(unsigned exponent) const {
    Rational result(1);
    Rational base = *this;
    while (exponent) {
        if (exponent & 1u) result *= base;
        exponent >>= 1u;
        if (exponent) base *= base;
    }
    return result;
}

std::string Rational::to_string() const {
    if (big_) {
        if (big_->get_den() == 1) return big_->get_num().get_str();
        return big_->get_num().get_str() + "/" + big_->get_den().get_str();
    }
    if (den_ == 1) return std::to_string(num_);
    return std::to_string(num_) + "/" + std::to_string(den_);
}

double Rational::to_double() const {
    if (big_) return big_->get_d();
    return static_cast<double>(num_) / static_cast<double>(den_);
}

std::size_t Rational::numerator_bits() const {
    return big_ ? mpz_bits(big_->get_num()) : u64_bits(uabs(num_));
}

std::size_t Rational::denominator_bits() const {
    return big_ ? mpz_bits(big_->get_den()) : u64_bits(std::uint64_t(den_));
}

Rational rational_from_double(double value) {
    if (!std::isfinite(value)) throw Error(ErrorCode::InvalidInput, "non-finite value");
    return Rational(mpq_class(value));
}

std::string_view error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::Parse: return "PARSE_ERROR";
        case ErrorCode::BoundOrder: return "BOUND_ORDER_VIOLATED";
        case ErrorCode::NegativeBound: return "NEGATIVE_BOUND";
        case ErrorCode::ZeroDenominator: return "ZERO_DENOMINATOR";
        case ErrorCode::MissingVariable: return "MISSING_VARIABLE";
        case ErrorCode::InvalidInput: return "INVALID_INPUT";
        case ErrorCode::AlreadyHomogenized: return "ALREADY_HOMOGENIZED";
        case ErrorCode::NotHomogenized: return "NOT_HOMOGENIZED";
        case ErrorCode::EmptySide: return "EMPTY_SIDE";
        case ErrorCode::UnboundedDemand: return "UNBOUNDED_DEMAND";
        case ErrorCode::ZeroNumeraire: return "ZERO_NUMERAIRE";
        case ErrorCode::InvalidCertificate: return "INVALID_CERTIFICATE";
        case ErrorCode::ResidualNonzero: return "RESIDUAL_NONZERO";
        case ErrorCode::BoundViolated: return "BOUND_VIOLATED";
        case ErrorCode::CapacityExceeded: return "CAPACITY_EXCEEDED";
        case ErrorCode::CapExceeded: return "CAP_EXCEEDED";
        case ErrorCode::NotConverged: return "NOT_CONVERGED";
    }
    return "UNKNOWN";
}

}  // namespace polyleon
