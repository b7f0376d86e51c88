#include "polyleon/ncp.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unistd.h>

#include "polyleon/error.hpp"

namespace polyleon {

namespace {

using Terms = std::vector<Monomial>;

void add(Terms& t, const Rational& c, std::initializer_list<VarIndex> vars) {
    if (c.is_zero()) return;
    std::vector<std::pair<VarIndex, unsigned>> e;
    for (VarIndex v : vars) {
        auto it = std::find_if(e.begin(), e.end(), [&](auto& x) { return x.first == v; });
        if (it != e.end())
            ++it->second;
        else
            e.emplace_back(v, 1);
    }
    std::sort(e.begin(), e.end());
    t.push_back({c, std::move(e)});
}

void check_dense(const std::vector<Rational>& v, std::size_t g, const std::string& what) {
    if (v.size() != g) throw Error(ErrorCode::InvalidInput, what + " must have one entry per good");
    for (auto& x : v)
        if (x.sign() < 0) throw Error(ErrorCode::InvalidInput, what + " has a negative entry");
}

std::string smt_int(const mpz_class& z) {
    if (sgn(z) < 0) return "(- " + mpz_class(-z).get_str() + ")";
    return z.get_str();
}

std::string smt_poly(const Polynomial& p, const NCPLayout& layout) {
    mpz_class lcm = 1;
    for (auto& m : p.terms()) mpz_lcm(lcm.get_mpz_t(), lcm.get_mpz_t(), m.coefficient.denominator().get_mpz_t());
    std::vector<std::string> parts;
    for (auto& m : p.terms()) {
        mpz_class c = m.coefficient.numerator() * (lcm / m.coefficient.denominator());
        std::vector<std::string> factors;
        if (c != 1 || m.exponents.empty()) factors.push_back(smt_int(c));
        for (auto& [v, e] : m.exponents)
            for (unsigned k = 0; k < e; ++k) factors.push_back(layout.name(v));
        if (factors.size() == 1) {
            parts.push_back(factors[0]);
        } else {
            std::string s = "(*";
            for (auto& f : factors) s += " " + f;
            parts.push_back(s + ")");
        }
    }
    if (parts.empty()) return "0";
    if (parts.size() == 1) return parts[0];
    std::string s = "(+";
    for (auto& part : parts) s += " " + part;
    return s + ")";
}

}  // namespace

void PLCMarket::validate() const {
    const std::size_t g = goods.size();
    if (g == 0) throw Error(ErrorCode::InvalidInput, "PLC market needs at least one good");
    if (agents.empty()) throw Error(ErrorCode::InvalidInput, "PLC market needs at least one agent");
    for (std::size_t i = 0; i < agents.size(); ++i) {
        const PLCAgent& a = agents[i];
        const std::string tag = "agent " + std::to_string(i);
        check_dense(a.endowment, g, tag + " endowment");
        if (a.pieces.empty()) throw Error(ErrorCode::InvalidInput, tag + " has no utility piece");
        bool zero_t = false;
        for (auto& piece : a.pieces) {
            check_dense(piece.U, g, tag + " utility piece");
            if (piece.T.sign() < 0) throw Error(ErrorCode::InvalidInput, tag + " has a negative T");
            zero_t = zero_t || piece.T.is_zero();
        }
        if (!zero_t) throw Error(ErrorCode::InvalidInput, tag + " needs a utility piece with T = 0");
        if (a.shares.size() != firms.size()) throw Error(ErrorCode::InvalidInput, tag + " needs one share per firm");
    }
    for (std::size_t f = 0; f < firms.size(); ++f) {
        const PLCFirm& firm = firms[f];
        const std::string tag = "firm " + std::to_string(f);
        Rational total;
        for (auto& a : agents) {
            if (a.shares[f].sign() < 0) throw Error(ErrorCode::InvalidInput, tag + " has a negative share");
            total += a.shares[f];
        }
        if (total != Rational(1)) throw Error(ErrorCode::InvalidInput, tag + " shares do not sum to 1");
        std::set<GoodId> s(firm.produces.begin(), firm.produces.end());
        for (GoodId j : firm.produces)
            if (j >= g) throw Error(ErrorCode::InvalidInput, tag + " produces an unknown good");
        for (GoodId j : firm.consumes) {
            if (j >= g) throw Error(ErrorCode::InvalidInput, tag + " consumes an unknown good");
            if (s.count(j)) throw Error(ErrorCode::InvalidInput, tag + " produces and consumes the same good");
        }
        bool zero_t = false;
        for (auto& piece : firm.pieces) {
            check_dense(piece.D, g, tag + " piece D");
            check_dense(piece.C, g, tag + " piece C");
            if (piece.T.sign() < 0) throw Error(ErrorCode::InvalidInput, tag + " has a negative T");
            zero_t = zero_t || piece.T.is_zero();
        }
        if (!firm.pieces.empty() && !zero_t) throw Error(ErrorCode::InvalidInput, tag + " needs a piece with T = 0");
    }
}

PLCMarket plc_from_leontief(const MarketInstance& market) {
    market.validate();
    const std::size_t g = market.good_count();
    PLCMarket out;
    out.goods = market.goods;
    for (auto& a : market.agents) {
        PLCAgent agent;
        agent.endowment.assign(g, Rational());
        for (auto& e : a.endowment) agent.endowment[e.good] = e.amount;
        for (auto& e : a.leontief) {
            UtilityPiece piece{std::vector<Rational>(g), Rational()};
            piece.U[e.good] = e.amount.reciprocal();
            agent.pieces.push_back(std::move(piece));
        }
        out.agents.push_back(std::move(agent));
    }
    return out;
}

PLCFirm leontief_firm(std::size_t good_count, GoodId output, const std::vector<Entry>& inputs) {
    PLCFirm firm;
    firm.produces = {output};
    for (auto& in : inputs) {
        if (in.amount.sign() <= 0) throw Error(ErrorCode::InvalidInput, "Leontief input coefficient must be positive");
        ProductionPiece piece{std::vector<Rational>(good_count), std::vector<Rational>(good_count), Rational()};
        piece.D[output] = 1;
        piece.C[in.good] = in.amount.reciprocal();
        firm.pieces.push_back(std::move(piece));
        firm.consumes.push_back(in.good);
    }
    return firm;
}

NCPLayout::NCPLayout(const PLCMarket& m) : g_(m.good_count()) {
    const std::size_t n = m.agents.size(), F = m.firms.size();
    x_ = 1 + g_;
    xs_ = x_ + n * g_;
    xr_ = xs_ + F * g_;
    lambda_ = xr_ + F * g_;
    std::size_t next = lambda_ + n;
    for (auto& a : m.agents) {
        gamma_.push_back(next);
        next += a.pieces.size();
    }
    for (auto& f : m.firms) {
        delta_.push_back(next);
        next += f.pieces.size();
    }
    u_ = next;
    phi_ = u_ + n;
    total_ = phi_ + F - 1;
    names_.resize(total_);
    auto set = [&](VarIndex v, std::string s) { names_[v - 1] = std::move(s); };
    auto id = [](std::size_t k) { return std::to_string(k + 1); };
    for (std::size_t j = 0; j < g_; ++j) set(p(j), "p_" + id(j));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < g_; ++j) set(x(i, j), "x_" + id(i) + "_" + id(j));
        set(lambda(i), "lambda_" + id(i));
        for (std::size_t k = 0; k < m.agents[i].pieces.size(); ++k) set(gamma(i, k), "gamma_" + id(i) + "_" + id(k));
        set(u(i), "u_" + id(i));
    }
    for (std::size_t f = 0; f < F; ++f) {
        for (std::size_t j = 0; j < g_; ++j) {
            set(xs(f, j), "xs_" + id(f) + "_" + id(j));
            set(xr(f, j), "xr_" + id(f) + "_" + id(j));
        }
        for (std::size_t k = 0; k < m.firms[f].pieces.size(); ++k) set(delta(f, k), "delta_" + id(f) + "_" + id(k));
        set(phi(f), "phi_" + id(f));
    }
}

NCPInstance build_ncp(const PLCMarket& m) {
    m.validate();
    NCPInstance inst{m, NCPLayout(m), {}};
    const NCPLayout& L = inst.layout;
    const std::size_t g = m.good_count(), n = m.agents.size(), F = m.firms.size();
    auto id = [](std::size_t k) { return std::to_string(k + 1); };
    auto row = [&](std::string family, std::string label, RowKind kind, Terms t, VarIndex v = 0) {
        inst.rows.push_back({std::move(family), std::move(label), kind, Polynomial::from_terms(std::move(t)), v});
    };

    for (std::size_t f = 0; f < F; ++f) {
        const PLCFirm& firm = m.firms[f];
        std::set<GoodId> S(firm.produces.begin(), firm.produces.end()), R(firm.consumes.begin(), firm.consumes.end());
        for (std::size_t k = 0; k < firm.pieces.size(); ++k) {
            const ProductionPiece& pc = firm.pieces[k];
            Terms t;
            for (std::size_t j = 0; j < g; ++j) {
                add(t, pc.C[j], {L.xr(f, j)});
                add(t, -pc.D[j], {L.xs(f, j)});
            }
            if (!pc.T.is_zero()) t.push_back({pc.T, {}});
            row("production", "facet_" + id(f) + "_" + id(k), RowKind::Complementary, std::move(t), L.delta(f, k));
        }
        for (std::size_t j = 0; j < g; ++j) {
            if (S.count(GoodId(j))) {
                Terms t;
                for (std::size_t k = 0; k < firm.pieces.size(); ++k) add(t, firm.pieces[k].D[j], {L.delta(f, k)});
                add(t, Rational(-1), {L.p(j)});
                row("production", "output_" + id(f) + "_" + id(j), RowKind::Complementary, std::move(t), L.xs(f, j));
            } else {
                Terms t;
                add(t, Rational(1), {L.xs(f, j)});
                row("production", "no_output_" + id(f) + "_" + id(j), RowKind::Equality, std::move(t));
            }
            if (R.count(GoodId(j))) {
                Terms t;
                add(t, Rational(1), {L.p(j)});
                for (std::size_t k = 0; k < firm.pieces.size(); ++k) add(t, -firm.pieces[k].C[j], {L.delta(f, k)});
                row("production", "input_" + id(f) + "_" + id(j), RowKind::Complementary, std::move(t), L.xr(f, j));
            } else {
                Terms t;
                add(t, Rational(1), {L.xr(f, j)});
                row("production", "no_input_" + id(f) + "_" + id(j), RowKind::Equality, std::move(t));
            }
        }
    }

    // money of agent i: sum_j W_ij p_j + sum_f Theta_if phi_f
    auto money = [&](Terms& t, std::size_t i, const Rational& sign, std::optional<VarIndex> times) {
        for (std::size_t j = 0; j < g; ++j) {
            if (times)
                add(t, sign * m.agents[i].endowment[j], {*times, L.p(j)});
            else
                add(t, sign * m.agents[i].endowment[j], {L.p(j)});
        }
        for (std::size_t f = 0; f < F; ++f) {
            if (times)
                add(t, sign * m.agents[i].shares[f], {*times, L.phi(f)});
            else
                add(t, sign * m.agents[i].shares[f], {L.phi(f)});
        }
    };

    for (std::size_t i = 0; i < n; ++i) {
        const PLCAgent& a = m.agents[i];
        for (std::size_t j = 0; j < g; ++j) {
            Terms t;
            add(t, Rational(1), {L.lambda(i), L.p(j)});
            for (std::size_t k = 0; k < a.pieces.size(); ++k) add(t, -a.pieces[k].U[j], {L.gamma(i, k)});
            row("utility", "bang_per_buck_" + id(i) + "_" + id(j), RowKind::Complementary, std::move(t), L.x(i, j));
        }
        for (std::size_t k = 0; k < a.pieces.size(); ++k) {
            Terms t;
            for (std::size_t j = 0; j < g; ++j) add(t, a.pieces[k].U[j], {L.x(i, j)});
            if (!a.pieces[k].T.is_zero()) t.push_back({a.pieces[k].T, {}});
            add(t, Rational(-1), {L.u(i)});
            row("utility", "piece_" + id(i) + "_" + id(k), RowKind::Complementary, std::move(t), L.gamma(i, k));
        }
        {
            Terms t;
            money(t, i, Rational(1), std::nullopt);
            for (std::size_t j = 0; j < g; ++j) add(t, Rational(-1), {L.x(i, j), L.p(j)});
            row("budget", "budget_" + id(i), RowKind::Complementary, std::move(t), L.lambda(i));
        }
    }
    for (std::size_t j = 0; j < g; ++j) {
        Terms t;
        Rational supply;
        for (std::size_t i = 0; i < n; ++i) {
            supply += m.agents[i].endowment[j];
            add(t, Rational(-1), {L.x(i, j)});
        }
        for (std::size_t f = 0; f < F; ++f) {
            add(t, Rational(1), {L.xs(f, j)});
            add(t, Rational(-1), {L.xr(f, j)});
        }
        if (!supply.is_zero()) t.push_back({supply, {}});
        row("clearing", "clearing_" + id(j), RowKind::Complementary, std::move(t), L.p(j));
    }
    for (std::size_t i = 0; i < n; ++i) {
        const PLCAgent& a = m.agents[i];
        Terms t;
        for (std::size_t k = 0; k < a.pieces.size(); ++k) add(t, Rational(1), {L.gamma(i, k)});
        t.push_back({Rational(-1), {}});
        row("gamma_sum", "gamma_sum_" + id(i), RowKind::Equality, std::move(t));
        Terms v;
        add(v, Rational(1), {L.u(i)});
        money(v, i, Rational(-1), L.lambda(i));
        for (std::size_t k = 0; k < a.pieces.size(); ++k) add(v, -a.pieces[k].T, {L.gamma(i, k)});
        row("utility", "utility_value_" + id(i), RowKind::Equality, std::move(v));
    }
    for (std::size_t f = 0; f < F; ++f) {
        Terms t;
        add(t, Rational(1), {L.phi(f)});
        for (std::size_t k = 0; k < m.firms[f].pieces.size(); ++k) add(t, -m.firms[f].pieces[k].T, {L.delta(f, k)});
        row("production", "profit_" + id(f), RowKind::Equality, std::move(t));
    }
    Terms t;
    for (std::size_t j = 0; j < g; ++j) add(t, Rational(1), {L.p(j)});
    t.push_back({Rational(-1), {}});
    row("price_sum", "price_sum", RowKind::Equality, std::move(t));
    return inst;
}

std::vector<Rational> NCPCandidate::flatten(const NCPInstance& inst) const {
    const PLCMarket& m = inst.market;
    const NCPLayout& L = inst.layout;
    const std::size_t g = m.good_count(), n = m.agents.size(), F = m.firms.size();
    auto fail = [](const std::string& what) {
        throw Error(ErrorCode::InvalidInput, "candidate block " + what + " has the wrong dimension");
    };
    if (p.size() != g) fail("p");
    if (x.size() != n || lambda.size() != n || gamma.size() != n || u.size() != n) fail("x/lambda/gamma/u");
    if (xs.size() != F || xr.size() != F || delta.size() != F || phi.size() != F) fail("xs/xr/delta/phi");
    std::vector<Rational> v(L.var_count());
    for (std::size_t j = 0; j < g; ++j) v[L.p(j) - 1] = p[j];
    for (std::size_t i = 0; i < n; ++i) {
        if (x[i].size() != g) fail("x");
        if (gamma[i].size() != m.agents[i].pieces.size()) fail("gamma");
        for (std::size_t j = 0; j < g; ++j) v[L.x(i, j) - 1] = x[i][j];
        v[L.lambda(i) - 1] = lambda[i];
        for (std::size_t k = 0; k < gamma[i].size(); ++k) v[L.gamma(i, k) - 1] = gamma[i][k];
        v[L.u(i) - 1] = u[i];
    }
    for (std::size_t f = 0; f < F; ++f) {
        if (xs[f].size() != g || xr[f].size() != g) fail("xs/xr");
        if (delta[f].size() != m.firms[f].pieces.size()) fail("delta");
        for (std::size_t j = 0; j < g; ++j) {
            v[L.xs(f, j) - 1] = xs[f][j];
            v[L.xr(f, j) - 1] = xr[f][j];
        }
        for (std::size_t k = 0; k < delta[f].size(); ++k) v[L.delta(f, k) - 1] = delta[f][k];
        v[L.phi(f) - 1] = phi[f];
    }
    return v;
}

NCPReport check_ncp(const NCPInstance& inst, const NCPCandidate& candidate, const VerifyOptions& options) {
    const std::vector<Rational> v = candidate.flatten(inst);
    const bool exact = options.mode == VerifyOptions::Mode::Exact;
    auto nonneg = [&](const Rational& x) { return exact ? x.sign() >= 0 : x >= -options.eps; };
    auto zero = [&](const Rational& x) { return exact ? x.is_zero() : x.abs() <= options.eps; };
    NCPReport report;
    auto violate = [&](std::size_t row, std::string what, Rational mag) {
        report.violations.push_back({row, std::move(what), std::move(mag)});
        return options.stop_at_first;
    };
    for (std::size_t r = 0; r < inst.rows.size(); ++r) {
        const NCPRow& row = inst.rows[r];
        Rational value = row.g.evaluate(v);
        switch (row.kind) {
            case RowKind::Equality:
                if (!zero(value) && violate(r, row.label + " (equality)", value.abs())) return report;
                break;
            case RowKind::Inequality:
            case RowKind::Complementary:
                if (!nonneg(value) && violate(r, row.label + " (inequality)", -value)) return report;
                if (row.kind == RowKind::Complementary) {
                    Rational product = v[row.complement - 1] * value;
                    if (!zero(product) && violate(r, row.label + " (complementarity)", product.abs())) return report;
                }
                break;
        }
    }
    for (std::size_t k = 0; k < v.size(); ++k)
        if (!nonneg(v[k]) && violate(inst.rows.size() + k, inst.layout.name(VarIndex(k + 1)) + " < 0", -v[k]))
            return report;
    report.ok = report.violations.empty();
    return report;
}

NCPCandidate extend_to_ncp(const MarketInstance& market, const Certificate& cert) {
    const std::size_t g = market.good_count(), n = market.agents.size();
    if (cert.prices.size() != g || cert.betas.size() != n)
        throw Error(ErrorCode::InvalidCertificate, "certificate does not match the market");
    Rational total;
    for (auto& p : cert.prices) total += p;
    if (total.sign() <= 0) throw Error(ErrorCode::InvalidCertificate, "prices sum to zero");
    NCPCandidate c;
    for (auto& p : cert.prices) c.p.push_back(p / total);
    for (std::size_t i = 0; i < n; ++i) {
        const Agent& a = market.agents[i];
        Rational cost = a.cost(c.p);
        if (cost.sign() <= 0)
            throw Error(ErrorCode::InvalidCertificate,
                        "agent " + std::to_string(i) + " (" + a.label + ") has zero cost; no multiplier exists");
        Rational lambda = cost.reciprocal();
        std::vector<Rational> x(g);
        std::vector<Rational> gamma;
        for (auto& e : a.leontief) {
            x[e.good] = cert.betas[i] * e.amount;
            gamma.push_back(lambda * c.p[e.good] * e.amount);
        }
        c.x.push_back(std::move(x));
        c.lambda.push_back(lambda);
        c.gamma.push_back(std::move(gamma));
        c.u.push_back(cert.betas[i]);
    }
    return c;
}

Certificate project_from_ncp(const NCPCandidate& candidate) { return Certificate{candidate.p, candidate.u}; }

std::string export_etr(const NCPInstance& inst) {
    const NCPLayout& L = inst.layout;
    std::vector<std::string> order;
    std::map<std::string, std::vector<std::string>> conjuncts;
    auto push = [&](const std::string& family, std::string c) {
        if (!conjuncts.count(family)) order.push_back(family);
        conjuncts[family].push_back(std::move(c));
    };
    for (auto& row : inst.rows) {
        std::string g = smt_poly(row.g, L);
        switch (row.kind) {
            case RowKind::Equality: push(row.family, "(= " + g + " 0)"); break;
            case RowKind::Inequality: push(row.family, "(>= " + g + " 0)"); break;
            case RowKind::Complementary:
                push(row.family, "(>= " + g + " 0)");
                push(row.family, "(= (* " + L.name(row.complement) + " " + g + ") 0)");
                break;
        }
    }
    // Nonnegativity, folded into the family that owns each variable.
    const PLCMarket& m = inst.market;
    auto nonneg = [&](const std::string& family, VarIndex v) { push(family, "(>= " + L.name(v) + " 0)"); };
    for (std::size_t j = 0; j < m.good_count(); ++j) nonneg("price_sum", L.p(j));
    for (std::size_t i = 0; i < m.agents.size(); ++i) {
        for (std::size_t j = 0; j < m.good_count(); ++j) nonneg("utility", L.x(i, j));
        nonneg("utility", L.u(i));
        nonneg("budget", L.lambda(i));
        for (std::size_t k = 0; k < m.agents[i].pieces.size(); ++k) nonneg("gamma_sum", L.gamma(i, k));
    }
    for (std::size_t f = 0; f < m.firms.size(); ++f) {
        for (std::size_t j = 0; j < m.good_count(); ++j) {
            nonneg("production", L.xs(f, j));
            nonneg("production", L.xr(f, j));
        }
        for (std::size_t k = 0; k < m.firms[f].pieces.size(); ++k) nonneg("production", L.delta(f, k));
        nonneg("production", L.phi(f));
    }

    std::ostringstream out;
    out << "; AD-NCP existence sentence: " << m.good_count() << " goods, " << m.agents.size() << " agents, "
        << m.firms.size() << " firms\n";
    out << "(set-logic QF_NRA)\n";
    for (std::size_t v = 1; v <= L.var_count(); ++v) out << "(declare-const " << L.name(VarIndex(v)) << " Real)\n";
    for (auto& family : order) {
        auto& list = conjuncts[family];
        out << "; " << family << "\n";
        if (list.size() == 1) {
            out << "(assert " << list[0] << ")\n";
        } else {
            out << "(assert (and";
            for (auto& c : list) out << "\n  " << c;
            out << "))\n";
        }
    }
    out << "(check-sat)\n";
    return out.str();
}

std::optional<std::string> run_external_solver(const std::string& document) {
    const char* solver = std::getenv("POLYLEON_SMT_SOLVER");
    if (!solver || !*solver) return std::nullopt;
    char path[] = "/tmp/polyleon-etr-XXXXXX";
    int fd = mkstemp(path);
    if (fd < 0) throw Error(ErrorCode::InvalidInput, "cannot create a temporary file for the solver");
    close(fd);
    {
        std::ofstream f(path);
        f << document;
    }
    std::string command = std::string(solver) + " " + path;
    std::string line;
    if (FILE* pipe = popen(command.c_str(), "r")) {
        char buf[256];
        if (fgets(buf, sizeof buf, pipe)) line = buf;
        pclose(pipe);
    }
    std::remove(path);
    while (!line.empty() && (line.back() == '\n' || line.back() == '\r')) line.pop_back();
    return line;
}

}  // namespace polyleon
