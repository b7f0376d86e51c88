#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "polyleon/rational.hpp"

namespace polyleon {

/// 1-based variable index; z_1 ... z_n.
using VarIndex = std::uint32_t;

struct Monomial {
    Rational coefficient;
    /// Sorted by variable, no zero exponents.
    std::vector<std::pair<VarIndex, unsigned>> exponents;

    unsigned degree() const;
    unsigned exponent_of(VarIndex v) const;
    bool operator==(const Monomial&) const = default;
};

/// Sum of monomials in canonical form: exponent maps unique, coefficients
/// nonzero, ordered by descending total degree then descending exponent
/// vector (graded lexicographic).
class Polynomial {
public:
    Polynomial() = default;
    static Polynomial from_terms(std::vector<Monomial> terms);
    static Polynomial constant(const Rational& c);
    static Polynomial variable(VarIndex v, const Rational& coefficient = Rational(1));

    const std::vector<Monomial>& terms() const { return terms_; }
    std::size_t size() const { return terms_.size(); }
    bool empty() const { return terms_.empty(); }
    unsigned degree() const;
    VarIndex max_variable() const;

    /// Exact value; throws MissingVariable if a variable exceeds the assignment.
    Rational evaluate(std::span<const Rational> values) const;

    Polynomial operator+(const Polynomial& other) const;
    Polynomial operator-(const Polynomial& other) const;
    Polynomial operator*(const Polynomial& other) const;
    Polynomial scaled(const Rational& factor) const;

    bool operator==(const Polynomial&) const = default;

private:
    std::vector<Monomial> terms_;
};

struct Bound {
    Rational lower;
    Rational upper;
    bool operator==(const Bound&) const = default;
};

/// f_i(z) = 0 for all i, L_j <= z_j <= U_j for all j.
struct PolynomialSystem {
    std::size_t n_vars = 0;
    std::vector<Polynomial> polys;
    std::vector<Bound> bounds;

    /// Throws on violated invariants (bound order, negative bounds, m == 0,
    /// variables out of range).
    void validate() const;
    bool operator==(const PolynomialSystem&) const = default;
};

struct BoundViolation {
    VarIndex var;
    bool upper;  // false: below L_j
    Rational amount;
};

struct ResidualReport {
    std::vector<Rational> residuals;
    std::vector<BoundViolation> violations;

    bool is_solution() const;
};

ResidualReport residual(const PolynomialSystem& system, std::span<const Rational> z);

struct SizeReport {
    std::size_t var_count = 0;
    std::size_t relation_or_poly_count = 0;
    std::size_t total_bit_size = 0;
    unsigned max_degree = 0;
    std::size_t monomial_count_max = 0;
    Rational u_max;
};

/// size(alpha, d) = size(alpha) + sum_j bits(d_j) over all n exponents.
std::size_t monomial_size(const Monomial& m, std::size_t n_vars);
SizeReport system_size(const PolynomialSystem& system);

}  // namespace polyleon
