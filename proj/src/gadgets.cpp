#include "polyleon/gadgets.hpp"

#include <cmath>
#include <map>
#include <set>

#include "polyleon/error.hpp"

namespace polyleon {

namespace {

Polynomial price(GoodId g) { return Polynomial::variable(VarIndex(g + 1)); }

Polynomial side_poly(const GoodSide& side) {
    Polynomial p;
    for (auto& t : side) p = p + price(t.good).scaled(t.coef);
    return p;
}

GoodSide scaled(GoodSide side, const Rational& k) {
    for (auto& t : side) t.coef *= k;
    return side;
}

std::vector<Entry> entries(const GoodSide& side) {
    std::vector<Entry> out;
    for (auto& t : side) out.push_back({t.good, t.coef});
    return out;
}

void check_side(const GoodSide& side) {
    if (side.empty()) throw Error(ErrorCode::EmptySide, "linear gadget needs two nonempty sides");
    for (auto& t : side)
        if (t.coef.sign() < 0) throw Error(ErrorCode::InvalidInput, "negative coefficient in linear gadget");
}

bool unit_term(const GoodSide& side) { return side.size() == 1 && side[0].coef == Rational(1); }

// Part-2 side condition: EQ when both sides are a single unit price.
GadgetRecord link(MarketBuilder& mb, const std::string& name, GoodSide left, GoodSide right, GoodId s) {
    if (unit_term(left) && unit_term(right)) return build_eq(mb, name, left[0].good, right[0].good, s);
    return build_lin(mb, name, std::move(left), std::move(right), s);
}

void collect_agents(const GadgetRecord& r, std::vector<std::size_t>& out) {
    out.insert(out.end(), r.agents.begin(), r.agents.end());
    for (auto& c : r.children) collect_agents(c, out);
}

void flatten_into(const GadgetRecord& r, std::vector<const GadgetRecord*>& out) {
    out.push_back(&r);
    for (auto& c : r.children) flatten_into(c, out);
}

void audit_record(const GadgetRecord& r, const MarketInstance& market, const Certificate& cert, AuditReport& report) {
    if (r.closed) {
        ++report.records_checked;
        std::vector<std::size_t> agents;
        collect_agents(r, agents);
        std::map<GoodId, Rational> net;
        for (std::size_t i : agents) {
            for (auto& e : market.agents[i].leontief) net[e.good] += cert.betas[i] * e.amount;
            for (auto& e : market.agents[i].endowment) net[e.good] -= e.amount;
        }
        for (auto& [g, amount] : net)
            if (!amount.is_zero()) report.imbalances.push_back({r.name, g, amount});
    }
    for (auto& c : r.children) audit_record(c, market, cert, report);
}

struct QdFrame {
    MarketBuilder& mb;
    GoodId a, b, c, s;
    Rational H;
};

// Conv(q): one unit of `in` becomes p_in / q units of `out`.
GadgetRecord converter(QdFrame& f, const std::string& name, GoodId in, const Polynomial& in_price, GoodId out,
                       const GoodSide& q) {
    GadgetRecord r;
    r.name = name;
    r.kind = GadgetKind::Conv;
    r.closed = false;
    GoodId g3 = f.mb.add_good(name + "/g3");
    r.goods = {g3};
    r.exclusive = {g3};
    r.agents.push_back(f.mb.add_agent({{out, f.H}}, {{in, 1}, {g3, 1}}, name + "/A1"));
    r.agents.push_back(f.mb.add_agent({{g3, 1}}, {{out, 1}}, name + "/A2"));
    r.formulas.push_back({g3, {side_poly(q).scaled(f.H) - in_price, 0}});
    r.children.push_back(link(f.mb, name + "/p2", {{1, out}}, q, f.s));
    r.children.push_back(link(f.mb, name + "/p3", {{1, g3}, {1, in}}, scaled(q, f.H), f.s));
    return r;
}

// Device internals g4, g5 shared by Comb and Spl: g4 = total * l, g5 = total * (H - l)
// with l = p_c / p_s and total the price carried through the device.
void device_internals(QdFrame& f, GadgetRecord& r, const GoodSide& total, GoodId& g4, GoodId& g5) {
    g4 = f.mb.add_good(r.name + "/g4");
    g5 = f.mb.add_good(r.name + "/g5");
    r.goods = {g4, g5};
    r.exclusive = {g4, g5};
    Polynomial t = side_poly(total);
    r.formulas.push_back({g4, {t * price(f.c), 1}});
    r.formulas.push_back({g5, {t * (price(f.s).scaled(f.H) - price(f.c)), 1}});
}

}  // namespace

std::string_view gadget_kind_name(GadgetKind kind) {
    switch (kind) {
        case GadgetKind::Numeraire: return "NUMERAIRE";
        case GadgetKind::EQ: return "EQ";
        case GadgetKind::LIN: return "LIN";
        case GadgetKind::QD: return "QD";
        case GadgetKind::Conv: return "CONV";
        case GadgetKind::Comb: return "COMB";
        case GadgetKind::Spl: return "SPL";
    }
    return "?";
}

GoodId MarketBuilder::add_good(std::string label) {
    market_.goods.push_back(std::move(label));
    return GoodId(market_.goods.size() - 1);
}

std::size_t MarketBuilder::add_agent(std::vector<Entry> endowment, std::vector<Entry> leontief, std::string label) {
    market_.agents.push_back(make_agent(std::move(endowment), std::move(leontief), std::move(label)));
    return market_.agents.size() - 1;
}

GadgetRecord build_eq(MarketBuilder& mb, const std::string& name, GoodId a, GoodId b, GoodId numeraire) {
    GadgetRecord r;
    r.name = name;
    r.kind = GadgetKind::EQ;
    r.left = {{1, a}};
    r.right = {{1, b}};
    GoodId x = mb.add_good(name + "/r");
    r.goods = {x};
    r.exclusive = {x};
    r.agents.push_back(mb.add_agent({{b, 1}, {x, 1}}, {{a, 1}, {x, 1}}, name + "/A1"));
    r.agents.push_back(mb.add_agent({{a, 1}, {x, 1}}, {{b, 1}, {x, 1}}, name + "/A2"));
    r.formulas.push_back({x, {price(numeraire), 0}});
    return r;
}

GadgetRecord build_lin(MarketBuilder& mb, const std::string& name, GoodSide left, GoodSide right, GoodId numeraire) {
    check_side(left);
    check_side(right);
    GadgetRecord r;
    r.name = name;
    r.kind = GadgetKind::LIN;
    GoodId x = mb.add_good(name + "/r");
    r.goods = {x};
    r.exclusive = {x};
    auto with_r = [&](const GoodSide& side) {
        auto e = entries(side);
        e.push_back({x, 1});
        return e;
    };
    r.agents.push_back(mb.add_agent(with_r(left), with_r(right), name + "/A1"));
    r.agents.push_back(mb.add_agent(with_r(right), with_r(left), name + "/A2"));
    r.formulas.push_back({x, {price(numeraire), 0}});
    r.left = std::move(left);
    r.right = std::move(right);
    return r;
}

GadgetRecord build_qd(MarketBuilder& mb, const std::string& name, GoodId a, GoodId b, GoodId c, GoodId s,
                      const Rational& H) {
    if (H < Rational(1)) throw Error(ErrorCode::InvalidInput, "H must be at least 1");
    QdFrame f{mb, a, b, c, s, H};
    GadgetRecord r;
    r.name = name;
    r.kind = GadgetKind::QD;
    r.left = {{1, a}};

    GoodId G[8];
    for (int k = 1; k <= 7; ++k) {
        G[k] = mb.add_good(name + "/G" + std::to_string(k));
        r.goods.push_back(G[k]);
    }
    r.exclusive = r.goods;

    const GoodSide ps{{1, s}};
    const GoodSide b_ps{{1, b}, {1, s}};
    const GoodSide b_2ps{{1, b}, {2, s}};
    const Polynomial p6 = price(a) + price(c);
    r.formulas = {
        {G[1], {price(c), 0}},      {G[2], {price(s), 0}},      {G[3], {side_poly(b_2ps), 0}},
        {G[4], {price(s), 0}},      {G[5], {side_poly(b_ps), 0}}, {G[6], {p6, 0}},
        {G[7], {side_poly(b_ps), 0}},
    };

    // A1 sells G1 (worth p_c) and takes p_c/p_s units of G4; A2 sells G6 for G5.
    r.agents.push_back(mb.add_agent({{G[1], 1}}, {{G[4], 1}}, name + "/A1"));
    r.agents.push_back(mb.add_agent({{G[6], 1}}, {{G[5], 1}}, name + "/A2"));

    r.children.push_back(link(mb, name + "/p1", {{1, G[1]}}, {{1, c}}, s));
    r.children.push_back(link(mb, name + "/p2", {{1, G[2]}}, ps, s));
    r.children.push_back(link(mb, name + "/p4", {{1, G[4]}}, ps, s));
    r.children.push_back(link(mb, name + "/p5", {{1, G[5]}}, b_ps, s));
    r.children.push_back(link(mb, name + "/p7", {{1, G[7]}}, b_ps, s));
    r.children.push_back(link(mb, name + "/p6", {{1, a}, {1, c}}, {{1, G[6]}}, s));

    r.children.push_back(converter(f, name + "/conv1", G[1], price(c), G[2], ps));
    r.children.push_back(converter(f, name + "/conv2", G[6], p6, G[7], b_ps));

    {
        GadgetRecord comb;
        comb.name = name + "/comb";
        comb.kind = GadgetKind::Comb;
        comb.closed = false;
        GoodId g4, g5;
        device_internals(f, comb, b_2ps, g4, g5);
        comb.agents.push_back(mb.add_agent({{g4, 1}}, {{G[2], 1}, {G[7], 1}}, comb.name + "/A1"));
        comb.agents.push_back(mb.add_agent({{G[3], H}}, {{g4, 1}, {g5, 1}}, comb.name + "/A2"));
        comb.agents.push_back(mb.add_agent({{g5, 1}}, {{G[3], 1}}, comb.name + "/A3"));
        comb.children.push_back(link(mb, comb.name + "/p3", {{1, G[3]}}, b_2ps, s));
        comb.children.push_back(link(mb, comb.name + "/p5", {{1, g5}, {1, g4}}, scaled(b_2ps, H), s));
        r.children.push_back(std::move(comb));
    }
    {
        GadgetRecord spl;
        spl.name = name + "/spl";
        spl.kind = GadgetKind::Spl;
        spl.closed = false;
        GoodId g4, g5;
        device_internals(f, spl, b_2ps, g4, g5);
        spl.agents.push_back(mb.add_agent({{g4, 1}}, {{G[3], 1}}, spl.name + "/A1"));
        spl.agents.push_back(mb.add_agent({{G[4], H}, {G[5], H}}, {{g4, 1}, {g5, 1}}, spl.name + "/A2"));
        spl.agents.push_back(mb.add_agent({{g5, 1}}, {{G[4], 1}, {G[5], 1}}, spl.name + "/A3"));
        spl.children.push_back(link(mb, spl.name + "/p2", {{1, G[4]}}, ps, s));
        spl.children.push_back(link(mb, spl.name + "/p3", {{1, G[5]}}, b_ps, s));
        spl.children.push_back(link(mb, spl.name + "/p5", {{1, g5}, {1, g4}}, scaled(b_2ps, H), s));
        r.children.push_back(std::move(spl));
    }
    return r;
}

Compiled compile(const RelationSystem& relations) {
    if (!relations.homogenized() || !relations.H)
        throw Error(ErrorCode::NotHomogenized, "compile expects a homogenized relation system");
    relations.validate();
    MarketBuilder mb;
    for (VarId v = 1; v <= relations.N; ++v)
        mb.add_good(v <= relations.labels.size() ? relations.labels[v - 1] : "v" + std::to_string(v));
    const GoodId s = mb.add_good("s");
    const Rational& H = *relations.H;

    Compiled out;
    out.trace.relations = relations;
    out.trace.numeraire_good = s;
    out.trace.numeraire.name = "numeraire";
    out.trace.numeraire.kind = GadgetKind::Numeraire;
    out.trace.numeraire.agents.push_back(mb.add_agent({{s, 1}}, {{s, 1}}, "numeraire/As"));

    auto good = [](VarId v) { return GadgetTrace::good_of(v); };
    auto side = [&](const LinSide& ls) {
        GoodSide gs;
        for (auto& t : ls.terms) gs.push_back({t.coef, good(t.var)});
        return gs;
    };
    for (std::size_t k = 0; k < relations.relations.size(); ++k) {
        const Relation& rel = relations.relations[k];
        const std::string name = "rel" + std::to_string(k + 1);
        GadgetRecord rec;
        switch (rel.kind) {
            case RelationKind::EQ: rec = build_eq(mb, name, good(rel.a), good(rel.b), s); break;
            case RelationKind::LIN: rec = build_lin(mb, name, side(rel.left), side(rel.right), s); break;
            case RelationKind::QD: rec = build_qd(mb, name, good(rel.a), good(rel.b), good(rel.c), s, H); break;
        }
        rec.relation = k;
        out.trace.records.push_back(std::move(rec));
    }
    out.market = mb.take();
    return out;
}

Compiled compile(const PolynomialSystem& system) {
    Compiled out = compile(reduce(system));
    out.trace.source = system;
    return out;
}

std::vector<const GadgetRecord*> flatten(const GadgetTrace& trace) {
    std::vector<const GadgetRecord*> out;
    flatten_into(trace.numeraire, out);
    for (auto& r : trace.records) flatten_into(r, out);
    return out;
}

std::vector<Rational> complete_prices(const GadgetTrace& trace, std::size_t good_count,
                                      std::span<const Rational> relation_prices) {
    const std::size_t base = trace.relations.assignment_size();
    if (relation_prices.size() != base)
        throw Error(ErrorCode::InvalidInput, "expected " + std::to_string(base) + " relation prices");
    std::vector<Rational> p(good_count);
    std::copy(relation_prices.begin(), relation_prices.end(), p.begin());
    const Rational& ps = p[trace.numeraire_good];
    for (const GadgetRecord* r : flatten(trace))
        for (auto& [g, formula] : r->formulas) {
            Rational value = formula.numerator.evaluate(p);
            if (formula.ps_power > 0) {
                if (ps.is_zero()) throw Error(ErrorCode::ZeroNumeraire, "internal price needs p_s > 0");
                value /= ps.pow(formula.ps_power);
            }
            p[g] = value;
        }
    return p;
}

Certificate lift_relation_prices(const GadgetTrace& trace, const MarketInstance& market,
                                 std::span<const Rational> relation_prices) {
    const RelationSystem& R = trace.relations;
    RelationEval eval = eval_relations(R, relation_prices);
    for (std::size_t k = 0; k < eval.residuals.size(); ++k)
        if (!eval.residuals[k].is_zero())
            throw Error(ErrorCode::ResidualNonzero,
                        "relation " + std::to_string(k + 1) + " has residual " + eval.residuals[k].to_string());
    if (!eval.negative_vars.empty())
        throw Error(ErrorCode::BoundViolated, "negative price for variable " + std::to_string(eval.negative_vars[0]));
    const Rational& ps = relation_prices[trace.numeraire_good];
    if (ps.sign() <= 0) throw Error(ErrorCode::ZeroNumeraire, "numeraire price must be positive");
    const Rational cap = *R.H * ps;
    for (std::size_t k = 0; k < R.relations.size(); ++k) {
        const Relation& rel = R.relations[k];
        if (rel.kind == RelationKind::QD && relation_prices[rel.c - 1] > cap)
            throw Error(ErrorCode::CapacityExceeded, "relation " + std::to_string(k + 1) + ": multiplicand " +
                                                         relation_prices[rel.c - 1].to_string() + " exceeds H = " +
                                                         R.H->to_string());
    }
    Certificate cert;
    cert.prices = complete_prices(trace, market.good_count(), relation_prices);
    cert.betas = demand_betas(market, cert.prices);
    return cert;
}

Certificate lift(const GadgetTrace& trace, const MarketInstance& market, std::span<const Rational> z) {
    std::vector<Rational> p = extend_assignment(trace.relations, z);
    return lift_relation_prices(trace, market, p);
}

std::vector<Rational> project(const GadgetTrace& trace, const MarketInstance& market, const Certificate& cert,
                              const VerifyOptions& options) {
    VerifyReport report = verify_equilibrium(market, cert, options);
    if (!report.ok) {
        const Violation& v = report.violations.front();
        throw Error(ErrorCode::InvalidCertificate, "certificate fails verification: " +
                                                       std::string(violation_name(v.kind)) + " at index " +
                                                       std::to_string(v.index));
    }
    if (cert.prices[trace.numeraire_good].sign() <= 0)
        throw Error(ErrorCode::InvalidCertificate, "numeraire price is zero");
    Certificate normalized = normalize(cert, trace.numeraire_good);
    const RelationSystem& R = trace.relations;
    std::vector<Rational> rp(normalized.prices.begin(), normalized.prices.begin() + R.assignment_size());
    const bool exact = options.mode == VerifyOptions::Mode::Exact;
    auto fine = [&](const Rational& x) { return exact ? x.is_zero() : x.abs() <= options.eps; };

    RelationEval eval = eval_relations(R, rp);
    for (std::size_t k = 0; k < eval.residuals.size(); ++k)
        if (!fine(eval.residuals[k]))
            throw Error(ErrorCode::InvalidCertificate, "projected prices violate relation " + std::to_string(k + 1));
    std::vector<Rational> z(rp.begin(), rp.begin() + R.original_n);
    if (trace.source) {
        ResidualReport res = residual(*trace.source, z);
        for (auto& r : res.residuals)
            if (!fine(r)) throw Error(ErrorCode::InvalidCertificate, "projection is not a solution of the system");
        for (auto& v : res.violations)
            if (!fine(v.amount)) throw Error(ErrorCode::InvalidCertificate, "projection violates a bound");
    }
    return z;
}

AuditReport audit_closed(const GadgetTrace& trace, const MarketInstance& market, const Certificate& cert) {
    if (cert.betas.size() != market.agents.size())
        throw Error(ErrorCode::InvalidInput, "certificate does not match the market");
    AuditReport report;
    audit_record(trace.numeraire, market, cert, report);
    for (auto& r : trace.records) audit_record(r, market, cert, report);
    return report;
}

std::vector<ExclusivityViolation> check_exclusivity(const GadgetTrace& trace, const MarketInstance& market) {
    std::vector<std::vector<std::size_t>> touching(market.good_count());
    for (std::size_t i = 0; i < market.agents.size(); ++i) {
        std::set<GoodId> seen;
        for (auto* v : {&market.agents[i].endowment, &market.agents[i].leontief})
            for (auto& e : *v)
                if (seen.insert(e.good).second) touching[e.good].push_back(i);
    }
    std::vector<ExclusivityViolation> out;
    for (const GadgetRecord* r : flatten(trace)) {
        if (r->exclusive.empty()) continue;
        std::vector<std::size_t> agents;
        collect_agents(*r, agents);
        std::set<std::size_t> inside(agents.begin(), agents.end());
        for (GoodId g : r->exclusive) {
            if (g >= touching.size()) {
                out.push_back({r->name, g, std::size_t(-1)});
                continue;
            }
            for (std::size_t i : touching[g])
                if (!inside.count(i)) out.push_back({r->name, g, i});
        }
    }
    return out;
}

}  // namespace polyleon

namespace polyleon {

namespace {
constexpr double kFormulaSlack = 1e-11;
}

EquilibriumProbe::EquilibriumProbe(const GadgetTrace& trace, const MarketInstance& market)
    : trace_(trace), market_(market), prepared_(market), p_(market.good_count()), err_(market.good_count()) {
    for (const GadgetRecord* r : flatten(trace))
        for (auto& [g, f] : r->formulas) {
            Formula compiled{g, {}, f.ps_power};
            for (auto& m : f.numerator.terms()) {
                Term t{m.coefficient.to_double(), {0, 0, 0}, 0};
                bool fits = true;
                for (auto& [v, e] : m.exponents)
                    for (unsigned k = 0; k < e; ++k) {
                        if (t.degree == 3) {
                            fits = false;
                            break;
                        }
                        t.vars[t.degree++] = v - 1;
                    }
                if (!fits) throw Error(ErrorCode::InvalidInput, "price formula degree above 3");
                compiled.terms.push_back(t);
            }
            formulas_.push_back(std::move(compiled));
        }
}

bool EquilibriumProbe::operator()(std::span<const Rational> relation_prices) {
    const std::size_t base = trace_.relations.assignment_size();
    if (relation_prices.size() != base)
        throw Error(ErrorCode::InvalidInput, "expected " + std::to_string(base) + " relation prices");
    for (std::size_t j = 0; j < base; ++j) {
        p_[j] = relation_prices[j].to_double();
        err_[j] = std::abs(p_[j]) * 1e-15;
    }
    const double ps = p_[trace_.numeraire_good];
    bool screen = ps > 0;
    for (auto& f : formulas_) {
        if (!screen) break;
        double value = 0, mag = 0;
        for (auto& t : f.terms) {
            double x = t.coef;
            for (unsigned k = 0; k < t.degree; ++k) x *= p_[t.vars[k]];
            value += x;
            mag += std::abs(x);
        }
        for (unsigned k = 0; k < f.ps_power; ++k) {
            value /= ps;
            mag /= ps;
        }
        p_[f.good] = value;
        err_[f.good] = mag * kFormulaSlack;
    }
    if (screen && prepared_.certainly_fails(p_, err_)) {
        ++screened_;
        return false;
    }
    ++exact_;
    Certificate cert;
    try {
        cert.prices = complete_prices(trace_, market_.good_count(), relation_prices);
        cert.betas = demand_betas(market_, cert.prices);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::UnboundedDemand || e.code() == ErrorCode::ZeroNumeraire) return false;
        throw;
    }
    VerifyOptions options;
    options.stop_at_first = true;
    return verify_equilibrium(market_, cert, options).ok;
}

}  // namespace polyleon
