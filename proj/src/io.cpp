#include "polyleon/io.hpp"

#include <fstream>
#include <iostream>
#include <iterator>
#include <openssl/evp.h>
#include <sstream>

#include "polyleon/error.hpp"

namespace polyleon::io {

namespace {

[[noreturn]] void fail(const std::string& message) { throw Error(ErrorCode::Parse, message); }

void expect_schema(const json& j, std::string_view expected) {
    if (!j.is_object()) fail("expected a JSON object for " + std::string(expected));
    auto it = j.find("schema");
    if (it == j.end()) return;
    if (!it->is_string() || it->get<std::string>() != expected)
        fail("schema mismatch: expected \"" + std::string(expected) + "\", found " + it->dump());
}

const json& field(const json& j, const char* key) {
    if (!j.is_object()) fail(std::string("expected an object holding \"") + key + "\"");
    auto it = j.find(key);
    if (it == j.end()) fail(std::string("missing field \"") + key + "\"");
    return *it;
}

const json& array(const json& j, const char* what) {
    if (!j.is_array()) fail(std::string(what) + " must be an array");
    return j;
}

std::size_t index_from(const json& j, const char* what) {
    if (!j.is_number_integer() || j.get<std::int64_t>() < 0) fail(std::string(what) + " must be a nonnegative integer");
    return j.get<std::size_t>();
}

std::string string_or(const json& j, const char* key, std::string fallback = {}) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return fallback;
    if (!it->is_string()) fail(std::string("field \"") + key + "\" must be a string");
    return it->get<std::string>();
}

json with_schema(std::string_view schema) {
    json j = json::object();
    j["schema"] = schema;
    return j;
}

json good_side_to_json(const GoodSide& side) {
    json a = json::array();
    for (auto& t : side) a.push_back(json::array({to_json(t.coef), t.good}));
    return a;
}

GoodSide good_side_from_json(const json& j) {
    GoodSide side;
    for (auto& t : array(j, "gadget side")) {
        if (!t.is_array() || t.size() != 2) fail("gadget side terms are [coef, good] pairs");
        side.push_back({rational_from_json(t[0]), GoodId(index_from(t[1], "good id"))});
    }
    return side;
}

json lin_side_to_json(const LinSide& side) {
    json a = json::array();
    for (auto& t : side.terms) a.push_back(json::array({to_json(t.coef), t.var}));
    return a;
}

LinSide lin_side_from_json(const json& j, const json* constant) {
    LinSide side;
    for (auto& t : array(j, "LIN side")) {
        if (!t.is_array() || t.size() != 2) fail("LIN terms are [coef, id] pairs");
        side.terms.push_back({rational_from_json(t[0]), VarId(index_from(t[1], "variable id"))});
    }
    if (constant && !constant->is_null()) side.constant = rational_from_json(*constant);
    return side;
}

std::vector<std::vector<Rational>> matrix_from_json(const json& j, const char* what) {
    std::vector<std::vector<Rational>> m;
    for (auto& row : array(j, what)) m.push_back(rationals_from_json(row));
    return m;
}

json matrix_to_json(const std::vector<std::vector<Rational>>& m) {
    json a = json::array();
    for (auto& row : m) a.push_back(to_json(row));
    return a;
}

std::vector<GoodId> ids_from_json(const json& j, const char* what) {
    std::vector<GoodId> out;
    for (auto& v : array(j, what)) out.push_back(GoodId(index_from(v, what)));
    return out;
}

}  // namespace

json parse(std::string_view text, std::string_view source) {
    try {
        return json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        std::size_t line = 1, col = 1;
        for (std::size_t k = 0; k + 1 < e.byte && k < text.size(); ++k) {
            if (text[k] == '\n')
                ++line, col = 1;
            else
                ++col;
        }
        fail(std::string(source) + ":" + std::to_string(line) + ":" + std::to_string(col) + ": invalid JSON");
    }
}

std::string read_text(const std::string& path) {
    if (path == "-") return std::string(std::istreambuf_iterator<char>(std::cin), {});
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::InvalidInput, "cannot open " + path);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

json read_json(const std::string& path) { return parse(read_text(path), path == "-" ? "<stdin>" : path); }

std::string dump(const json& doc) { return doc.dump(2) + "\n"; }

std::string schema_of(const json& doc) {
    if (!doc.is_object()) return {};
    auto it = doc.find("schema");
    return it != doc.end() && it->is_string() ? it->get<std::string>() : std::string();
}

json to_json(const Rational& r) { return r.to_string(); }

Rational rational_from_json(const json& j) {
    if (j.is_string()) return Rational::parse(j.get<std::string>());
    if (j.is_number_integer()) return Rational(j.get<std::int64_t>());
    if (j.is_number()) return Rational::parse(j.dump());
    fail("expected a rational (string or number), found " + j.dump());
}

json to_json(const std::vector<Rational>& v) {
    json a = json::array();
    for (auto& r : v) a.push_back(to_json(r));
    return a;
}

std::vector<Rational> rationals_from_json(const json& j) {
    std::vector<Rational> v;
    for (auto& x : array(j, "rational vector")) v.push_back(rational_from_json(x));
    return v;
}

json polynomial_to_json(const Polynomial& p) {
    json a = json::array();
    for (auto& m : p.terms()) {
        json e = json::object();
        for (auto [v, k] : m.exponents) e[std::to_string(v)] = k;
        a.push_back(json{{"c", to_json(m.coefficient)}, {"e", e}});
    }
    return a;
}

Polynomial polynomial_from_json(const json& j) {
    std::vector<Monomial> terms;
    for (auto& t : array(j, "polynomial")) {
        Monomial m{rational_from_json(field(t, "c")), {}};
        auto it = t.find("e");
        if (it != t.end()) {
            if (!it->is_object()) fail("monomial exponents \"e\" must be an object");
            for (auto& [key, val] : it->items()) {
                std::size_t pos = 0;
                unsigned long v = 0;
                try {
                    v = std::stoul(key, &pos);
                } catch (...) {
                    pos = 0;
                }
                if (pos != key.size() || v == 0) fail("exponent key \"" + key + "\" is not a variable id >= 1");
                std::size_t e = index_from(val, "exponent");
                if (e > 0) m.exponents.emplace_back(VarIndex(v), unsigned(e));
            }
        }
        std::sort(m.exponents.begin(), m.exponents.end());
        terms.push_back(std::move(m));
    }
    return Polynomial::from_terms(std::move(terms));
}

json to_json(const PolynomialSystem& s) {
    json j = with_schema(kSystemSchema);
    j["vars"] = s.n_vars;
    json b = json::array();
    for (auto& bound : s.bounds) b.push_back(json::array({to_json(bound.lower), to_json(bound.upper)}));
    j["bounds"] = b;
    json p = json::array();
    for (auto& poly : s.polys) p.push_back(polynomial_to_json(poly));
    j["polys"] = p;
    return j;
}

PolynomialSystem system_from_json(const json& j) {
    expect_schema(j, kSystemSchema);
    PolynomialSystem s;
    s.n_vars = index_from(field(j, "vars"), "vars");
    for (auto& b : array(field(j, "bounds"), "bounds")) {
        if (!b.is_array() || b.size() != 2) fail("bounds are [L, U] pairs");
        s.bounds.push_back({rational_from_json(b[0]), rational_from_json(b[1])});
    }
    for (auto& p : array(field(j, "polys"), "polys")) s.polys.push_back(polynomial_from_json(p));
    s.validate();
    return s;
}

json to_json(const RelationSystem& r) {
    json j = with_schema(kRelationsSchema);
    j["N"] = r.N;
    j["original_n"] = r.original_n;
    j["numeraire"] = r.numeraire ? json(*r.numeraire) : json(nullptr);
    j["H"] = r.H ? to_json(*r.H) : json(nullptr);
    j["labels"] = r.labels;
    json rel = json::array();
    for (auto& x : r.relations) {
        json e{{"kind", std::string(kind_name(x.kind))}};
        switch (x.kind) {
            case RelationKind::EQ:
                e["a"] = x.a;
                e["b"] = x.b;
                break;
            case RelationKind::QD:
                e["a"] = x.a;
                e["b"] = x.b;
                e["c"] = x.c;
                break;
            case RelationKind::LIN:
                e["left"] = lin_side_to_json(x.left);
                e["right"] = lin_side_to_json(x.right);
                if (x.left.constant) e["left_const"] = to_json(*x.left.constant);
                if (x.right.constant) e["right_const"] = to_json(*x.right.constant);
                break;
        }
        rel.push_back(std::move(e));
    }
    j["relations"] = rel;
    return j;
}

RelationSystem relations_from_json(const json& j) {
    expect_schema(j, kRelationsSchema);
    RelationSystem r;
    r.N = index_from(field(j, "N"), "N");
    r.original_n = j.contains("original_n") ? index_from(j["original_n"], "original_n") : r.N;
    if (j.contains("numeraire") && !j["numeraire"].is_null()) r.numeraire = VarId(index_from(j["numeraire"], "numeraire"));
    if (j.contains("H") && !j["H"].is_null()) r.H = rational_from_json(j["H"]);
    if (j.contains("labels"))
        for (auto& l : array(j["labels"], "labels")) r.labels.push_back(l.get<std::string>());
    for (auto& e : array(field(j, "relations"), "relations")) {
        std::string kind = field(e, "kind").get<std::string>();
        auto id = [&](const char* k) { return VarId(index_from(field(e, k), k)); };
        if (kind == "EQ") {
            r.relations.push_back(Relation::eq(id("a"), id("b")));
        } else if (kind == "QD") {
            r.relations.push_back(Relation::qd(id("a"), id("b"), id("c")));
        } else if (kind == "LIN") {
            auto lc = e.find("left_const"), rc = e.find("right_const");
            r.relations.push_back(Relation::lin(lin_side_from_json(field(e, "left"), lc != e.end() ? &*lc : nullptr),
                                                lin_side_from_json(field(e, "right"), rc != e.end() ? &*rc : nullptr)));
        } else {
            fail("unknown relation kind \"" + kind + "\"");
        }
    }
    r.validate();
    return r;
}

json to_json(const MarketInstance& m) {
    json j = with_schema(kMarketSchema);
    const std::size_t g = m.good_count();
    j["g"] = g;
    j["goods"] = m.goods;
    json agents = json::array();
    for (auto& a : m.agents) {
        std::vector<Rational> W(g), A(g);
        for (auto& e : a.endowment) W[e.good] = e.amount;
        for (auto& e : a.leontief) A[e.good] = e.amount;
        json x{{"W", to_json(W)}, {"A", to_json(A)}};
        if (!a.label.empty()) x["label"] = a.label;
        agents.push_back(std::move(x));
    }
    j["agents"] = agents;
    return j;
}

MarketInstance market_from_json(const json& j) {
    expect_schema(j, kMarketSchema);
    MarketInstance m;
    const std::size_t g = index_from(field(j, "g"), "g");
    if (j.contains("goods")) {
        for (auto& name : array(j["goods"], "goods")) m.goods.push_back(name.get<std::string>());
        if (m.goods.size() != g) fail("\"goods\" must list g names");
    } else {
        for (std::size_t k = 0; k < g; ++k) m.goods.push_back("G" + std::to_string(k + 1));
    }
    for (auto& a : array(field(j, "agents"), "agents")) {
        auto W = rationals_from_json(field(a, "W")), A = rationals_from_json(field(a, "A"));
        if (W.size() != g || A.size() != g) fail("agent vectors W and A must have g entries");
        std::vector<Entry> w, l;
        for (std::size_t k = 0; k < g; ++k) {
            if (!W[k].is_zero()) w.push_back({GoodId(k), W[k]});
            if (!A[k].is_zero()) l.push_back({GoodId(k), A[k]});
        }
        m.agents.push_back(make_agent(std::move(w), std::move(l), string_or(a, "label")));
    }
    m.validate();
    return m;
}

json to_json(const Certificate& c) {
    json j = with_schema(kCertificateSchema);
    j["p"] = to_json(c.prices);
    j["beta"] = to_json(c.betas);
    return j;
}

Certificate certificate_from_json(const json& j) {
    expect_schema(j, kCertificateSchema);
    return {rationals_from_json(field(j, "p")), rationals_from_json(field(j, "beta"))};
}

json to_json(const GadgetRecord& r) {
    json j{{"name", r.name}, {"kind", std::string(gadget_kind_name(r.kind))}};
    j["relation"] = r.relation ? json(*r.relation) : json(nullptr);
    j["closed"] = r.closed;
    if (!r.left.empty() || !r.right.empty()) {
        j["left"] = good_side_to_json(r.left);
        j["right"] = good_side_to_json(r.right);
    }
    j["agents"] = r.agents;
    j["goods"] = r.goods;
    j["exclusive"] = r.exclusive;
    json f = json::array();
    for (auto& [good, formula] : r.formulas)
        f.push_back(json{{"good", good}, {"numerator", polynomial_to_json(formula.numerator)},
                         {"ps_power", formula.ps_power}});
    j["formulas"] = f;
    json children = json::array();
    for (auto& c : r.children) children.push_back(to_json(c));
    j["children"] = children;
    return j;
}

GadgetRecord record_from_json(const json& j) {
    GadgetRecord r;
    r.name = field(j, "name").get<std::string>();
    std::string kind = field(j, "kind").get<std::string>();
    bool known = false;
    for (GadgetKind k : {GadgetKind::Numeraire, GadgetKind::EQ, GadgetKind::LIN, GadgetKind::QD, GadgetKind::Conv,
                         GadgetKind::Comb, GadgetKind::Spl})
        if (gadget_kind_name(k) == kind) r.kind = k, known = true;
    if (!known) fail("unknown gadget kind \"" + kind + "\"");
    if (j.contains("relation") && !j["relation"].is_null()) r.relation = index_from(j["relation"], "relation");
    if (j.contains("closed")) r.closed = j["closed"].get<bool>();
    if (j.contains("left")) r.left = good_side_from_json(j["left"]);
    if (j.contains("right")) r.right = good_side_from_json(j["right"]);
    for (auto& a : array(field(j, "agents"), "agents")) r.agents.push_back(index_from(a, "agent id"));
    r.goods = ids_from_json(field(j, "goods"), "goods");
    r.exclusive = ids_from_json(field(j, "exclusive"), "exclusive");
    if (j.contains("formulas"))
        for (auto& f : array(j["formulas"], "formulas"))
            r.formulas.emplace_back(GoodId(index_from(field(f, "good"), "good")),
                                    PriceFormula{polynomial_from_json(field(f, "numerator")),
                                                 unsigned(index_from(field(f, "ps_power"), "ps_power"))});
    if (j.contains("children"))
        for (auto& c : array(j["children"], "children")) r.children.push_back(record_from_json(c));
    return r;
}

json to_json(const GadgetTrace& t) {
    json j = with_schema(kTraceSchema);
    j["relations"] = to_json(t.relations);
    j["source"] = t.source ? to_json(*t.source) : json(nullptr);
    j["numeraire_good"] = t.numeraire_good;
    j["numeraire"] = to_json(t.numeraire);
    json records = json::array();
    for (auto& r : t.records) records.push_back(to_json(r));
    j["records"] = records;
    return j;
}

GadgetTrace trace_from_json(const json& j) {
    expect_schema(j, kTraceSchema);
    GadgetTrace t;
    t.relations = relations_from_json(field(j, "relations"));
    if (j.contains("source") && !j["source"].is_null()) t.source = system_from_json(j["source"]);
    t.numeraire_good = GoodId(index_from(field(j, "numeraire_good"), "numeraire_good"));
    t.numeraire = record_from_json(field(j, "numeraire"));
    for (auto& r : array(field(j, "records"), "records")) t.records.push_back(record_from_json(r));
    return t;
}

json to_json(const Game3& g) {
    json j = with_schema(kGameSchema);
    j["ns"] = g.ns;
    j["A1"] = to_json(g.payoff[0]);
    j["A2"] = to_json(g.payoff[1]);
    j["A3"] = to_json(g.payoff[2]);
    return j;
}

Game3 game_from_json(const json& j) {
    expect_schema(j, kGameSchema);
    Game3 g;
    g.ns = index_from(field(j, "ns"), "ns");
    g.payoff[0] = rationals_from_json(field(j, "A1"));
    g.payoff[1] = rationals_from_json(field(j, "A2"));
    g.payoff[2] = rationals_from_json(field(j, "A3"));
    g.validate();
    return g;
}

json to_json(const PLCMarket& m) {
    json j = with_schema(kPLCMarketSchema);
    j["goods"] = m.goods;
    json agents = json::array();
    for (auto& a : m.agents) {
        json pieces = json::array();
        for (auto& p : a.pieces) pieces.push_back(json{{"U", to_json(p.U)}, {"T", to_json(p.T)}});
        agents.push_back(json{{"W", to_json(a.endowment)}, {"pieces", pieces}, {"shares", to_json(a.shares)}});
    }
    j["agents"] = agents;
    json firms = json::array();
    for (auto& f : m.firms) {
        json pieces = json::array();
        for (auto& p : f.pieces)
            pieces.push_back(json{{"D", to_json(p.D)}, {"C", to_json(p.C)}, {"T", to_json(p.T)}});
        firms.push_back(json{{"pieces", pieces}, {"produces", f.produces}, {"consumes", f.consumes}});
    }
    j["firms"] = firms;
    return j;
}

PLCMarket plc_market_from_json(const json& j) {
    expect_schema(j, kPLCMarketSchema);
    PLCMarket m;
    for (auto& name : array(field(j, "goods"), "goods")) m.goods.push_back(name.get<std::string>());
    for (auto& a : array(field(j, "agents"), "agents")) {
        PLCAgent agent;
        agent.endowment = rationals_from_json(field(a, "W"));
        for (auto& p : array(field(a, "pieces"), "pieces"))
            agent.pieces.push_back({rationals_from_json(field(p, "U")),
                                    p.contains("T") ? rational_from_json(p["T"]) : Rational()});
        if (a.contains("shares")) agent.shares = rationals_from_json(a["shares"]);
        m.agents.push_back(std::move(agent));
    }
    if (j.contains("firms"))
        for (auto& f : array(j["firms"], "firms")) {
            PLCFirm firm;
            for (auto& p : array(field(f, "pieces"), "pieces"))
                firm.pieces.push_back({rationals_from_json(field(p, "D")), rationals_from_json(field(p, "C")),
                                       p.contains("T") ? rational_from_json(p["T"]) : Rational()});
            firm.produces = ids_from_json(field(f, "produces"), "produces");
            firm.consumes = ids_from_json(field(f, "consumes"), "consumes");
            m.firms.push_back(std::move(firm));
        }
    m.validate();
    return m;
}

json to_json(const NCPCandidate& c) {
    json j = with_schema(kCandidateSchema);
    j["p"] = to_json(c.p);
    j["x"] = matrix_to_json(c.x);
    j["xs"] = matrix_to_json(c.xs);
    j["xr"] = matrix_to_json(c.xr);
    j["lambda"] = to_json(c.lambda);
    j["gamma"] = matrix_to_json(c.gamma);
    j["delta"] = matrix_to_json(c.delta);
    j["u"] = to_json(c.u);
    j["phi"] = to_json(c.phi);
    return j;
}

NCPCandidate candidate_from_json(const json& j) {
    expect_schema(j, kCandidateSchema);
    NCPCandidate c;
    c.p = rationals_from_json(field(j, "p"));
    c.x = matrix_from_json(field(j, "x"), "x");
    c.xs = j.contains("xs") ? matrix_from_json(j["xs"], "xs") : decltype(c.xs){};
    c.xr = j.contains("xr") ? matrix_from_json(j["xr"], "xr") : decltype(c.xr){};
    c.lambda = rationals_from_json(field(j, "lambda"));
    c.gamma = matrix_from_json(field(j, "gamma"), "gamma");
    c.delta = j.contains("delta") ? matrix_from_json(j["delta"], "delta") : decltype(c.delta){};
    c.u = rationals_from_json(field(j, "u"));
    c.phi = j.contains("phi") ? rationals_from_json(j["phi"]) : std::vector<Rational>{};
    return c;
}

json assignment_to_json(std::span<const Rational> z) {
    json j = with_schema(kAssignmentSchema);
    j["z"] = to_json(std::vector<Rational>(z.begin(), z.end()));
    return j;
}

std::vector<Rational> assignment_from_json(const json& j) {
    if (j.is_array()) return rationals_from_json(j);
    expect_schema(j, kAssignmentSchema);
    return rationals_from_json(field(j, "z"));
}

json to_json(const VerifyReport& r, const MarketInstance& m) {
    json j = with_schema("polyleon/verify-report@1");
    j["ok"] = r.ok;
    json v = json::array();
    for (auto& x : r.violations) {
        json e{{"kind", std::string(violation_name(x.kind))}, {"index", x.index}, {"magnitude", to_json(x.magnitude)}};
        switch (x.kind) {
            case ViolationKind::NegativePrice:
            case ViolationKind::Clearing:
                if (x.index < m.goods.size()) e["good"] = m.goods[x.index];
                break;
            case ViolationKind::NegativeBeta:
            case ViolationKind::UnboundedDemand:
            case ViolationKind::Optimality:
            case ViolationKind::Budget:
                if (x.index < m.agents.size()) e["agent"] = m.agents[x.index].label;
                break;
            default:
                break;
        }
        v.push_back(std::move(e));
    }
    j["violations"] = v;
    j["budget_residual"] = to_json(r.budget_residual);
    j["clearing_residual"] = to_json(r.clearing_residual);
    return j;
}

std::string sha256_hex(std::string_view data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (!EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr))
        throw Error(ErrorCode::InvalidInput, "SHA-256 failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 15];
    }
    return out;
}

}  // namespace polyleon::io
