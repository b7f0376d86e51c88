#pragma once

#include <array>
#include <span>
#include <vector>

#include "polyleon/poly.hpp"

namespace polyleon {

/// Three-player game with n_s strategies each. Payoff tensors are flattened
/// s1-major: index(s1, s2, s3) = (s1 * ns + s2) * ns + s3.
struct Game3 {
    std::size_t ns = 0;
    std::array<std::vector<Rational>, 3> payoff;

    std::size_t index(std::size_t s1, std::size_t s2, std::size_t s3) const { return (s1 * ns + s2) * ns + s3; }
    void validate() const;
    bool operator==(const Game3&) const = default;
};

/// Per-player affine map onto [0, 1]; constant tensors become all zeros.
Game3 normalize_payoffs(const Game3& game);

/// Variable layout of the equilibrium system: z (player-major), then the
/// slack betas, then the three deltas. All ids are 1-based.
struct NashLayout {
    std::size_t ns;
    VarIndex z(std::size_t p, std::size_t s) const { return VarIndex(p * ns + s + 1); }
    VarIndex beta(std::size_t p, std::size_t s) const { return VarIndex(3 * ns + p * ns + s + 1); }
    VarIndex delta(std::size_t p) const { return VarIndex(6 * ns + p + 1); }
    std::size_t var_count() const { return 6 * ns + 3; }
};

/// Expected payoff of player p for pure strategy s against the others'
/// mixed strategies, as a polynomial in the z variables.
Polynomial expected_payoff(const Game3& game, std::size_t p, std::size_t s);

/// Simplex sums, payoff slacks pi + beta = delta, and z * beta = 0; every
/// variable bounded in [0, 1].
PolynomialSystem encode_ne(const Game3& game);

/// Same system with z bounded by 1/2.
PolynomialSystem encode_decision_ne(const Game3& game);

/// Expected payoff with numeric profile z[p][s].
double payoff_value(const Game3& game, std::size_t p, std::size_t s, std::span<const double> profile);

/// Best-response check within eps; profile is player-major, 3 * ns entries.
bool verify_ne(const Game3& game, std::span<const double> profile, double eps);

/// Exact variant for rational profiles.
bool verify_ne_exact(const Game3& game, std::span<const Rational> profile);

/// Full variable assignment (z, beta, delta) of the encoded system for a
/// rational equilibrium profile.
std::vector<Rational> ne_assignment(const Game3& game, std::span<const Rational> profile);

}  // namespace polyleon
