#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "polyleon/poly.hpp"

namespace polyleon {

/// Variable id inside a relation system. Ids 1..n are the original z_j,
/// followed by auxiliaries, then slacks; the numeraire (after
/// homogenization) is N + 1.
using VarId = std::uint32_t;

enum class RelationKind { EQ, LIN, QD };

struct LinTerm {
    Rational coef;  // >= 0
    VarId var;
    bool operator==(const LinTerm&) const = default;
};

/// One side of a two-sided linear relation. `constant` is only present before
/// homogenization; afterwards constants are D * p_s terms.
struct LinSide {
    std::vector<LinTerm> terms;
    std::optional<Rational> constant;

    bool empty() const { return terms.empty() && !constant; }
    bool operator==(const LinSide&) const = default;
};

/// EQ: p_a = p_b. LIN: sum(left) = sum(right). QD: p_a * p_s = p_b * p_c
/// (p_s = 1 before homogenization).
struct Relation {
    RelationKind kind = RelationKind::EQ;
    VarId a = 0, b = 0, c = 0;
    LinSide left, right;

    static Relation eq(VarId a, VarId b);
    static Relation lin(LinSide left, LinSide right);
    static Relation qd(VarId a, VarId b, VarId c);

    bool operator==(const Relation&) const = default;
};

std::string_view kind_name(RelationKind kind);

struct RelationSystem {
    std::size_t N = 0;
    std::size_t original_n = 0;
    std::optional<VarId> numeraire;
    std::optional<Rational> H;
    std::vector<Relation> relations;
    /// Human-readable variable names, index id - 1 (z1, m1.2, e1, sl1, ...).
    std::vector<std::string> labels;

    bool homogenized() const { return numeraire.has_value(); }
    /// Number of entries an assignment must cover (N, or N + 1 with p_s).
    std::size_t assignment_size() const { return N + (numeraire ? 1 : 0); }
    void validate() const;
    bool operator==(const RelationSystem&) const = default;
};

/// R(F): basic relations over nonnegative variables plus bound slacks.
RelationSystem decompose(const PolynomialSystem& system);

/// H = M_max * U_max^d + 1.
Rational compute_H(const PolynomialSystem& system);

/// R'(F): LIN constants become D * p_s terms; QD divides by p_s.
RelationSystem homogenize(const RelationSystem& relations, const Rational& H);

/// decompose + homogenize with H = compute_H(system).
RelationSystem reduce(const PolynomialSystem& system);

struct RelationEval {
    std::vector<Rational> residuals;
    std::vector<VarId> negative_vars;

    bool satisfied() const;
};

/// Per-relation residual: EQ p_a - p_b, LIN left - right, QD p_a p_s - p_b p_c.
RelationEval eval_relations(const RelationSystem& relations, std::span<const Rational> values);

/// Extends an assignment of z_1..z_n to every variable by forward evaluation
/// (numeraire set to 1). Throws BoundViolated when a slack would be negative
/// and ResidualNonzero when a non-defining relation fails.
std::vector<Rational> extend_assignment(const RelationSystem& relations, std::span<const Rational> z);

/// # variables + # relations + size of LIN coefficients.
SizeReport relation_size(const RelationSystem& relations);

}  // namespace polyleon
