#include "polyleon/nash.hpp"

#include <algorithm>
#include <cmath>

#include "polyleon/error.hpp"

namespace polyleon {

namespace {

// Player p's strategy sits at position p of (s1, s2, s3).
std::size_t cell(const Game3& g, std::size_t p, std::size_t own, std::size_t o1, std::size_t o2) {
    switch (p) {
        case 0: return g.index(own, o1, o2);
        case 1: return g.index(o1, own, o2);
        default: return g.index(o1, o2, own);
    }
}

// The two opponents of p in increasing order.
std::pair<std::size_t, std::size_t> others(std::size_t p) {
    if (p == 0) return {1, 2};
    if (p == 1) return {0, 2};
    return {0, 1};
}

template <class T, class Z>
T payoff_generic(const Game3& g, std::size_t p, std::size_t s, Z zval) {
    auto [q, r] = others(p);
    T total{};
    for (std::size_t a = 0; a < g.ns; ++a)
        for (std::size_t b = 0; b < g.ns; ++b) total = total + zval(g.payoff[p][cell(g, p, s, a, b)], q, a, r, b);
    return total;
}

PolynomialSystem encode(const Game3& game, const Rational& z_upper) {
    game.validate();
    NashLayout L{game.ns};
    PolynomialSystem F;
    F.n_vars = L.var_count();
    for (std::size_t p = 0; p < 3; ++p) {
        std::vector<Monomial> terms;
        for (std::size_t s = 0; s < game.ns; ++s) terms.push_back({Rational(1), {{L.z(p, s), 1}}});
        terms.push_back({Rational(-1), {}});
        F.polys.push_back(Polynomial::from_terms(std::move(terms)));
    }
    for (std::size_t p = 0; p < 3; ++p)
        for (std::size_t s = 0; s < game.ns; ++s)
            F.polys.push_back(expected_payoff(game, p, s) + Polynomial::variable(L.beta(p, s)) -
                              Polynomial::variable(L.delta(p)));
    for (std::size_t p = 0; p < 3; ++p)
        for (std::size_t s = 0; s < game.ns; ++s)
            F.polys.push_back(Polynomial::variable(L.z(p, s)) * Polynomial::variable(L.beta(p, s)));
    F.bounds.assign(F.n_vars, Bound{Rational(0), Rational(1)});
    for (std::size_t p = 0; p < 3; ++p)
        for (std::size_t s = 0; s < game.ns; ++s) F.bounds[L.z(p, s) - 1].upper = z_upper;
    return F;
}

}  // namespace

void Game3::validate() const {
    if (ns == 0) throw Error(ErrorCode::InvalidInput, "game needs at least one strategy per player");
    for (auto& t : payoff)
        if (t.size() != ns * ns * ns)
            throw Error(ErrorCode::InvalidInput, "payoff tensor must have ns^3 = " + std::to_string(ns * ns * ns) +
                                                     " entries");
}

Game3 normalize_payoffs(const Game3& game) {
    game.validate();
    Game3 out = game;
    for (auto& t : out.payoff) {
        auto [lo, hi] = std::minmax_element(t.begin(), t.end());
        Rational min = *lo, range = *hi - *lo;
        for (auto& x : t) x = range.is_zero() ? Rational() : (x - min) / range;
    }
    return out;
}

Polynomial expected_payoff(const Game3& game, std::size_t p, std::size_t s) {
    NashLayout L{game.ns};
    std::vector<Monomial> terms;
    auto [q, r] = others(p);
    for (std::size_t a = 0; a < game.ns; ++a)
        for (std::size_t b = 0; b < game.ns; ++b) {
            const Rational& c = game.payoff[p][cell(game, p, s, a, b)];
            if (c.is_zero()) continue;
            std::vector<std::pair<VarIndex, unsigned>> e{{L.z(q, a), 1}, {L.z(r, b), 1}};
            std::sort(e.begin(), e.end());
            terms.push_back({c, std::move(e)});
        }
    return Polynomial::from_terms(std::move(terms));
}

PolynomialSystem encode_ne(const Game3& game) { return encode(game, Rational(1)); }
PolynomialSystem encode_decision_ne(const Game3& game) { return encode(game, Rational(1, 2)); }

double payoff_value(const Game3& game, std::size_t p, std::size_t s, std::span<const double> z) {
    return payoff_generic<double>(game, p, s, [&](const Rational& c, std::size_t q, std::size_t a, std::size_t r,
                                                  std::size_t b) {
        return c.to_double() * z[q * game.ns + a] * z[r * game.ns + b];
    });
}

bool verify_ne(const Game3& game, std::span<const double> z, double eps) {
    game.validate();
    if (z.size() != 3 * game.ns) throw Error(ErrorCode::InvalidInput, "profile must have 3 * ns entries");
    for (std::size_t p = 0; p < 3; ++p) {
        double sum = 0;
        for (std::size_t s = 0; s < game.ns; ++s) {
            if (z[p * game.ns + s] < -eps) return false;
            sum += z[p * game.ns + s];
        }
        if (std::abs(sum - 1) > eps) return false;
        std::vector<double> pi(game.ns);
        for (std::size_t s = 0; s < game.ns; ++s) pi[s] = payoff_value(game, p, s, z);
        double delta = *std::max_element(pi.begin(), pi.end());
        for (std::size_t s = 0; s < game.ns; ++s)
            if (z[p * game.ns + s] > eps && std::abs(pi[s] - delta) > eps) return false;
    }
    return true;
}

static std::vector<Rational> exact_payoffs(const Game3& game, std::size_t p, std::span<const Rational> z) {
    std::vector<Rational> pi(game.ns);
    for (std::size_t s = 0; s < game.ns; ++s)
        pi[s] = payoff_generic<Rational>(game, p, s,
                                         [&](const Rational& c, std::size_t q, std::size_t a, std::size_t r,
                                             std::size_t b) { return c * z[q * game.ns + a] * z[r * game.ns + b]; });
    return pi;
}

bool verify_ne_exact(const Game3& game, std::span<const Rational> z) {
    game.validate();
    if (z.size() != 3 * game.ns) throw Error(ErrorCode::InvalidInput, "profile must have 3 * ns entries");
    for (std::size_t p = 0; p < 3; ++p) {
        Rational sum;
        for (std::size_t s = 0; s < game.ns; ++s) {
            if (z[p * game.ns + s].sign() < 0) return false;
            sum += z[p * game.ns + s];
        }
        if (sum != Rational(1)) return false;
        auto pi = exact_payoffs(game, p, z);
        Rational delta = *std::max_element(pi.begin(), pi.end());
        for (std::size_t s = 0; s < game.ns; ++s)
            if (z[p * game.ns + s].sign() > 0 && pi[s] != delta) return false;
    }
    return true;
}

std::vector<Rational> ne_assignment(const Game3& game, std::span<const Rational> z) {
    if (!verify_ne_exact(game, z)) throw Error(ErrorCode::InvalidInput, "profile is not an exact equilibrium");
    NashLayout L{game.ns};
    std::vector<Rational> out(L.var_count());
    for (std::size_t p = 0; p < 3; ++p) {
        auto pi = exact_payoffs(game, p, z);
        Rational delta = *std::max_element(pi.begin(), pi.end());
        out[L.delta(p) - 1] = delta;
        for (std::size_t s = 0; s < game.ns; ++s) {
            out[L.z(p, s) - 1] = z[p * game.ns + s];
            out[L.beta(p, s) - 1] = delta - pi[s];
        }
    }
    return out;
}

}  // namespace polyleon
