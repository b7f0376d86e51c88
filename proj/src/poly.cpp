#include "polyleon/poly.hpp"

#include <algorithm>
#include <bit>
#include <map>

#include "polyleon/error.hpp"

namespace polyleon {

namespace {

using ExponentMap = std::vector<std::pair<VarIndex, unsigned>>;

// Graded lexicographic, larger first.
bool canonical_before(const ExponentMap& a, const ExponentMap& b) {
    unsigned da = 0, db = 0;
    for (auto& [v, e] : a) da += e;
    for (auto& [v, e] : b) db += e;
    if (da != db) return da > db;
    // Compare dense exponent vectors (d_1, d_2, ...) descending.
    std::size_t i = 0;
    for (; i < a.size() && i < b.size(); ++i) {
        if (a[i].first != b[i].first) return a[i].first < b[i].first;
        if (a[i].second != b[i].second) return a[i].second > b[i].second;
    }
    return i < a.size() && i == b.size();
}

std::size_t bits(unsigned v) { return v == 0 ? 1 : std::size_t(32 - std::countl_zero(v)); }

}  // namespace

unsigned Monomial::degree() const {
    unsigned d = 0;
    for (auto& [v, e] : exponents) d += e;
    return d;
}

unsigned Monomial::exponent_of(VarIndex v) const {
    for (auto& [var, e] : exponents)
        if (var == v) return e;
    return 0;
}

Polynomial Polynomial::from_terms(std::vector<Monomial> terms) {
    auto less = [](const ExponentMap& a, const ExponentMap& b) { return canonical_before(a, b); };
    std::map<ExponentMap, Rational, decltype(less)> merged(less);
    for (auto& t : terms) {
        ExponentMap key;
        for (auto& [v, e] : t.exponents) {
            if (v == 0) throw Error(ErrorCode::InvalidInput, "variable index 0 (indices are 1-based)");
            if (e != 0) key.emplace_back(v, e);
        }
        std::sort(key.begin(), key.end());
        ExponentMap dedup;
        for (auto& [v, e] : key) {
            if (!dedup.empty() && dedup.back().first == v)
                dedup.back().second += e;
            else
                dedup.emplace_back(v, e);
        }
        auto [it, inserted] = merged.try_emplace(std::move(dedup), t.coefficient);
        if (!inserted) it->second += t.coefficient;
    }
    Polynomial p;
    for (auto& [key, c] : merged)
        if (!c.is_zero()) p.terms_.push_back(Monomial{c, key});
    return p;
}

Polynomial Polynomial::constant(const Rational& c) { return from_terms({Monomial{c, {}}}); }

Polynomial Polynomial::variable(VarIndex v, const Rational& coefficient) {
    return from_terms({Monomial{coefficient, {{v, 1u}}}});
}

unsigned Polynomial::degree() const {
    unsigned d = 0;
    for (auto& t : terms_) d = std::max(d, t.degree());
    return d;
}

VarIndex Polynomial::max_variable() const {
    VarIndex m = 0;
    for (auto& t : terms_)
        for (auto& [v, e] : t.exponents) m = std::max(m, v);
    return m;
}

Rational Polynomial::evaluate(std::span<const Rational> values) const {
    Rational sum;
    for (auto& t : terms_) {
        Rational term = t.coefficient;
        for (auto& [v, e] : t.exponents) {
            if (v == 0 || v > values.size())
                throw Error(ErrorCode::MissingVariable, "assignment does not cover z_" + std::to_string(v));
            term *= values[v - 1].pow(e);
        }
        sum += term;
    }
    return sum;
}

Polynomial Polynomial::operator+(const Polynomial& other) const {
    std::vector<Monomial> all = terms_;
    all.insert(all.end(), other.terms_.begin(), other.terms_.end());
    return from_terms(std::move(all));
}

Polynomial Polynomial::operator-(const Polynomial& other) const { return *this + other.scaled(Rational(-1)); }

Polynomial Polynomial::operator*(const Polynomial& other) const {
    std::vector<Monomial> all;
    all.reserve(terms_.size() * other.terms_.size());
    for (auto& a : terms_)
        for (auto& b : other.terms_) {
            Monomial m{a.coefficient * b.coefficient, a.exponents};
            m.exponents.insert(m.exponents.end(), b.exponents.begin(), b.exponents.end());
            all.push_back(std::move(m));
        }
    return from_terms(std::move(all));
}

Polynomial Polynomial::scaled(const Rational& factor) const {
    if (factor.is_zero()) return {};
    Polynomial p = *this;
    for (auto& t : p.terms_) t.coefficient *= factor;
    return p;
}

void PolynomialSystem::validate() const {
    if (polys.empty()) throw Error(ErrorCode::InvalidInput, "system needs at least one polynomial");
    if (bounds.size() != n_vars)
        throw Error(ErrorCode::InvalidInput, "expected " + std::to_string(n_vars) + " bounds, got " +
                                                 std::to_string(bounds.size()));
    for (std::size_t j = 0; j < bounds.size(); ++j) {
        if (bounds[j].lower.sign() < 0 || bounds[j].upper.sign() < 0)
            throw Error(ErrorCode::NegativeBound, "negative bound on z_" + std::to_string(j + 1));
        if (bounds[j].lower > bounds[j].upper)
            throw Error(ErrorCode::BoundOrder, "bound order violated on z_" + std::to_string(j + 1));
    }
    for (std::size_t i = 0; i < polys.size(); ++i)
        if (polys[i].max_variable() > n_vars)
            throw Error(ErrorCode::InvalidInput, "polynomial " + std::to_string(i + 1) + " uses z_" +
                                                     std::to_string(polys[i].max_variable()) + " > n");
}

bool ResidualReport::is_solution() const {
    return violations.empty() &&
           std::all_of(residuals.begin(), residuals.end(), [](const Rational& r) { return r.is_zero(); });
}

ResidualReport residual(const PolynomialSystem& system, std::span<const Rational> z) {
    if (z.size() < system.n_vars)
        throw Error(ErrorCode::MissingVariable, "assignment covers " + std::to_string(z.size()) + " of " +
                                                    std::to_string(system.n_vars) + " variables");
    ResidualReport report;
    for (auto& f : system.polys) report.residuals.push_back(f.evaluate(z));
    for (std::size_t j = 0; j < system.n_vars; ++j) {
        const auto& b = system.bounds[j];
        if (z[j] < b.lower) report.violations.push_back({VarIndex(j + 1), false, b.lower - z[j]});
        if (z[j] > b.upper) report.violations.push_back({VarIndex(j + 1), true, z[j] - b.upper});
    }
    return report;
}

std::size_t monomial_size(const Monomial& m, std::size_t n_vars) {
    std::size_t s = m.coefficient.bit_size();
    for (std::size_t j = 1; j <= n_vars; ++j) s += bits(m.exponent_of(VarIndex(j)));
    return s;
}

SizeReport system_size(const PolynomialSystem& system) {
    SizeReport r;
    r.var_count = system.n_vars;
    r.relation_or_poly_count = system.polys.size();
    std::size_t total = system.polys.size() + system.n_vars;
    for (auto& b : system.bounds) {
        total += b.lower.bit_size() + b.upper.bit_size();
        r.u_max = std::max(r.u_max, b.upper);
    }
    for (auto& f : system.polys) {
        unsigned d = f.degree();
        r.max_degree = std::max(r.max_degree, d);
        r.monomial_count_max = std::max(r.monomial_count_max, f.size());
        total += d;
        for (auto& t : f.terms()) {
            total += monomial_size(t, system.n_vars);
            r.u_max = std::max(r.u_max, t.coefficient.abs());
        }
    }
    r.total_bit_size = total;
    return r;
}

}  // namespace polyleon
