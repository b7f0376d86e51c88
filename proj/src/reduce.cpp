#include "polyleon/reduce.hpp"

#include <algorithm>
#include <map>

#include "polyleon/error.hpp"

namespace polyleon {

namespace {

LinSide normalized(LinSide side) {
    std::map<VarId, Rational> merged;
    std::vector<VarId> order;
    for (auto& t : side.terms) {
        if (t.coef.sign() < 0) throw Error(ErrorCode::InvalidInput, "negative LIN coefficient");
        auto [it, inserted] = merged.try_emplace(t.var, t.coef);
        if (inserted)
            order.push_back(t.var);
        else
            it->second += t.coef;
    }
    LinSide out;
    out.constant = side.constant;
    for (VarId v : order) out.terms.push_back({merged[v], v});
    return out;
}

Rational side_value(const LinSide& side, std::span<const Rational> values) {
    Rational sum = side.constant.value_or(Rational());
    for (auto& t : side.terms) sum += t.coef * values[t.var - 1];
    return sum;
}

}  // namespace

Relation Relation::eq(VarId a, VarId b) {
    Relation r;
    r.kind = RelationKind::EQ;
    r.a = a;
    r.b = b;
    return r;
}

Relation Relation::lin(LinSide left, LinSide right) {
    if (left.empty() || right.empty()) throw Error(ErrorCode::EmptySide, "LIN relation needs two nonempty sides");
    Relation r;
    r.kind = RelationKind::LIN;
    r.left = normalized(std::move(left));
    r.right = normalized(std::move(right));
    return r;
}

Relation Relation::qd(VarId a, VarId b, VarId c) {
    Relation r;
    r.kind = RelationKind::QD;
    r.a = a;
    r.b = b;
    r.c = c;
    return r;
}

std::string_view kind_name(RelationKind kind) {
    switch (kind) {
        case RelationKind::EQ: return "EQ";
        case RelationKind::LIN: return "LIN";
        case RelationKind::QD: return "QD";
    }
    return "?";
}

void RelationSystem::validate() const {
    const std::size_t limit = assignment_size();
    auto check = [&](VarId v) {
        if (v == 0 || v > limit)
            throw Error(ErrorCode::InvalidInput, "relation references unknown variable " + std::to_string(v));
    };
    if (original_n > N) throw Error(ErrorCode::InvalidInput, "original_n exceeds N");
    if (numeraire && *numeraire != N + 1) throw Error(ErrorCode::InvalidInput, "numeraire id must be N + 1");
    for (auto& r : relations) {
        switch (r.kind) {
            case RelationKind::EQ:
                check(r.a);
                check(r.b);
                break;
            case RelationKind::QD:
                check(r.a);
                check(r.b);
                check(r.c);
                break;
            case RelationKind::LIN:
                if (r.left.empty() || r.right.empty()) throw Error(ErrorCode::EmptySide, "LIN with empty side");
                for (auto* side : {&r.left, &r.right})
                    for (auto& t : side->terms) {
                        check(t.var);
                        if (t.coef.sign() < 0) throw Error(ErrorCode::InvalidInput, "negative LIN coefficient");
                    }
                if (numeraire && (r.left.constant || r.right.constant))
                    throw Error(ErrorCode::InvalidInput, "constant term in homogenized LIN");
                break;
        }
    }
}

RelationSystem decompose(const PolynomialSystem& system) {
    system.validate();
    RelationSystem out;
    const std::size_t n = system.n_vars;
    out.original_n = n;
    for (std::size_t j = 1; j <= n; ++j) out.labels.push_back("z" + std::to_string(j));

    auto fresh = [&](std::string label) {
        out.labels.push_back(std::move(label));
        return VarId(out.labels.size());
    };

    for (std::size_t i = 0; i < system.polys.size(); ++i) {
        const Polynomial& f = system.polys[i];
        const auto& terms = f.terms();
        const std::string tag = std::to_string(i + 1);

        // z_a - z_b: emit the equality directly.
        if (terms.size() == 2 && terms[0].degree() == 1 && terms[1].degree() == 1 &&
            terms[0].exponents[0].second == 1 && terms[1].exponents[0].second == 1 &&
            ((terms[0].coefficient == Rational(1) && terms[1].coefficient == Rational(-1)) ||
             (terms[0].coefficient == Rational(-1) && terms[1].coefficient == Rational(1)))) {
            out.relations.push_back(Relation::eq(terms[0].exponents[0].first, terms[1].exponents[0].first));
            continue;
        }

        LinSide positive, negative;
        for (std::size_t k = 0; k < terms.size(); ++k) {
            const Monomial& m = terms[k];
            LinSide& side = m.coefficient.sign() > 0 ? positive : negative;
            Rational coef = m.coefficient.abs();
            if (m.degree() == 0) {
                side.constant = side.constant.value_or(Rational()) + coef;
                continue;
            }
            std::vector<VarId> factors;
            for (auto& [v, e] : m.exponents)
                for (unsigned t = 0; t < e; ++t) factors.push_back(v);
            VarId current = factors[0];
            for (std::size_t t = 1; t < factors.size(); ++t) {
                VarId product = fresh("m" + tag + "." + std::to_string(k + 1) + "." + std::to_string(t));
                out.relations.push_back(Relation::qd(product, current, factors[t]));
                current = product;
            }
            side.terms.push_back({coef, current});
        }
        if (positive.empty()) positive.constant = Rational();
        if (negative.empty()) negative.constant = Rational();

        VarId e = fresh("e" + tag);
        out.relations.push_back(Relation::lin(LinSide{{{Rational(1), e}}, std::nullopt}, positive));
        VarId g = fresh("f" + tag);
        out.relations.push_back(Relation::lin(LinSide{{{Rational(1), g}}, std::nullopt}, negative));
        out.relations.push_back(Relation::eq(e, g));
    }

    std::vector<std::pair<VarId, VarId>> slacks;
    for (std::size_t j = 1; j <= n; ++j) {
        VarId lo = fresh("sl" + std::to_string(j));
        VarId up = fresh("su" + std::to_string(j));
        slacks.emplace_back(lo, up);
    }
    for (std::size_t j = 1; j <= n; ++j) {
        const Bound& b = system.bounds[j - 1];
        auto [lo, up] = slacks[j - 1];
        const VarId z = VarId(j);
        // z_j = s^l_j + L_j
        LinSide lower_rhs{{{Rational(1), lo}}, std::nullopt};
        if (!b.lower.is_zero()) lower_rhs.constant = b.lower;
        out.relations.push_back(Relation::lin(LinSide{{{Rational(1), z}}, std::nullopt}, lower_rhs));
        // z_j + s^u_j = U_j
        out.relations.push_back(
            Relation::lin(LinSide{{{Rational(1), z}, {Rational(1), up}}, std::nullopt}, LinSide{{}, b.upper}));
    }
    out.N = out.labels.size();
    return out;
}

Rational compute_H(const PolynomialSystem& system) {
    SizeReport s = system_size(system);
    return Rational(std::int64_t(s.monomial_count_max)) * s.u_max.pow(s.max_degree) + Rational(1);
}

RelationSystem homogenize(const RelationSystem& relations, const Rational& H) {
    if (relations.homogenized()) throw Error(ErrorCode::AlreadyHomogenized, "relation system already homogenized");
    RelationSystem out = relations;
    const VarId s = VarId(relations.N + 1);
    out.numeraire = s;
    out.H = H;
    for (auto& r : out.relations) {
        if (r.kind != RelationKind::LIN) continue;
        for (auto* side : {&r.left, &r.right}) {
            if (!side->constant) continue;
            Rational d = *side->constant;
            side->constant.reset();
            if (!d.is_zero() || side->terms.empty()) side->terms.push_back({d, s});
        }
        r.left = normalized(r.left);
        r.right = normalized(r.right);
    }
    return out;
}

RelationSystem reduce(const PolynomialSystem& system) { return homogenize(decompose(system), compute_H(system)); }

bool RelationEval::satisfied() const {
    return negative_vars.empty() &&
           std::all_of(residuals.begin(), residuals.end(), [](const Rational& r) { return r.is_zero(); });
}

RelationEval eval_relations(const RelationSystem& relations, std::span<const Rational> values) {
    if (values.size() < relations.assignment_size())
        throw Error(ErrorCode::MissingVariable, "assignment covers " + std::to_string(values.size()) + " of " +
                                                    std::to_string(relations.assignment_size()) + " variables");
    RelationEval out;
    const Rational ps = relations.numeraire ? values[*relations.numeraire - 1] : Rational(1);
    for (auto& r : relations.relations) {
        switch (r.kind) {
            case RelationKind::EQ: out.residuals.push_back(values[r.a - 1] - values[r.b - 1]); break;
            case RelationKind::LIN:
                out.residuals.push_back(side_value(r.left, values) - side_value(r.right, values));
                break;
            case RelationKind::QD:
                out.residuals.push_back(values[r.a - 1] * ps - values[r.b - 1] * values[r.c - 1]);
                break;
        }
    }
    for (std::size_t k = 0; k < relations.assignment_size(); ++k)
        if (values[k].sign() < 0) out.negative_vars.push_back(VarId(k + 1));
    return out;
}

std::vector<Rational> extend_assignment(const RelationSystem& relations, std::span<const Rational> z) {
    const std::size_t n = relations.original_n;
    if (z.size() < n)
        throw Error(ErrorCode::MissingVariable, "assignment covers " + std::to_string(z.size()) + " of " +
                                                    std::to_string(n) + " original variables");
    const std::size_t size = relations.assignment_size();
    std::vector<std::optional<Rational>> vals(size);
    for (std::size_t j = 0; j < n; ++j) vals[j] = z[j];
    if (relations.numeraire) vals[*relations.numeraire - 1] = Rational(1);

    auto label = [&](VarId v) {
        return v <= relations.labels.size() ? relations.labels[v - 1] : "v" + std::to_string(v);
    };
    auto known = [&](VarId v) { return vals[v - 1].has_value(); };
    auto assign = [&](VarId v, Rational value) {
        if (value.sign() < 0)
            throw Error(ErrorCode::BoundViolated,
                        "variable " + label(v) + " would be negative (" + value.to_string() + ")");
        vals[v - 1] = std::move(value);
    };

    std::vector<bool> done(relations.relations.size(), false);
    bool progress = true;
    while (progress) {
        progress = false;
        for (std::size_t k = 0; k < relations.relations.size(); ++k) {
            if (done[k]) continue;
            const Relation& r = relations.relations[k];
            switch (r.kind) {
                case RelationKind::EQ:
                    if (known(r.a) && known(r.b)) {
                        done[k] = true;
                    } else if (known(r.a) != known(r.b)) {
                        if (known(r.a))
                            assign(r.b, *vals[r.a - 1]);
                        else
                            assign(r.a, *vals[r.b - 1]);
                        done[k] = progress = true;
                    }
                    break;
                case RelationKind::QD:
                    if (known(r.a) && known(r.b) && known(r.c)) {
                        done[k] = true;
                    } else if (!known(r.a) && known(r.b) && known(r.c)) {
                        Rational ps = relations.numeraire ? *vals[*relations.numeraire - 1] : Rational(1);
                        assign(r.a, *vals[r.b - 1] * *vals[r.c - 1] / ps);
                        done[k] = progress = true;
                    }
                    break;
                case RelationKind::LIN: {
                    std::map<VarId, Rational> unknown;
                    Rational rest = r.left.constant.value_or(Rational()) - r.right.constant.value_or(Rational());
                    for (auto& t : r.left.terms) {
                        if (known(t.var))
                            rest += t.coef * *vals[t.var - 1];
                        else
                            unknown[t.var] += t.coef;
                    }
                    for (auto& t : r.right.terms) {
                        if (known(t.var))
                            rest -= t.coef * *vals[t.var - 1];
                        else
                            unknown[t.var] -= t.coef;
                    }
                    if (unknown.empty()) {
                        done[k] = true;
                    } else if (unknown.size() == 1 && !unknown.begin()->second.is_zero()) {
                        assign(unknown.begin()->first, -rest / unknown.begin()->second);
                        done[k] = progress = true;
                    }
                    break;
                }
            }
        }
    }

    std::vector<Rational> out(size);
    for (std::size_t k = 0; k < size; ++k) {
        if (!vals[k]) throw Error(ErrorCode::InvalidInput, "variable " + label(VarId(k + 1)) + " is not determined");
        out[k] = *vals[k];
    }
    RelationEval eval = eval_relations(relations, out);
    for (std::size_t k = 0; k < eval.residuals.size(); ++k)
        if (!eval.residuals[k].is_zero())
            throw Error(ErrorCode::ResidualNonzero, "relation " + std::to_string(k + 1) + " (" +
                                                        std::string(kind_name(relations.relations[k].kind)) +
                                                        ") has residual " + eval.residuals[k].to_string());
    return out;
}

SizeReport relation_size(const RelationSystem& relations) {
    SizeReport s;
    s.var_count = relations.assignment_size();
    s.relation_or_poly_count = relations.relations.size();
    std::size_t total = s.var_count + s.relation_or_poly_count;
    for (auto& r : relations.relations) {
        if (r.kind != RelationKind::LIN) continue;
        for (auto* side : {&r.left, &r.right}) {
            for (auto& t : side->terms) {
                total += t.coef.bit_size();
                s.u_max = std::max(s.u_max, t.coef);
            }
            if (side->constant) {
                total += side->constant->bit_size();
                s.u_max = std::max(s.u_max, *side->constant);
            }
        }
    }
    if (relations.H) s.u_max = std::max(s.u_max, *relations.H);
    s.total_bit_size = total;
    bool has_qd = std::any_of(relations.relations.begin(), relations.relations.end(),
                              [](const Relation& r) { return r.kind == RelationKind::QD; });
    s.max_degree = has_qd ? 2 : (relations.relations.empty() ? 0 : 1);
    return s;
}

}  // namespace polyleon
