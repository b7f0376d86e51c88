#include <doctest.h>

#include <algorithm>
#include <random>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "polyleon/error.hpp"
#include "polyleon/gadgets.hpp"
#include "polyleon/io.hpp"

using namespace polyleon;

namespace {

PolynomialSystem sys(const std::string& text) { return io::system_from_json(io::parse(text)); }

const char* kIdentity =
    R"({"vars":2,"bounds":[["0","2"],["0","2"]],"polys":[[{"c":"1","e":{"1":1}},{"c":"-1","e":{"2":1}}]]})";
const char* kProduct =
    R"({"vars":3,"bounds":[["0","1"],["0","1"],["0","1"]],"polys":[[{"c":"1","e":{"1":1,"2":1}},{"c":"-1","e":{"3":1}}]]})";

std::vector<Rational> V(std::initializer_list<Rational> xs) { return xs; }

GoodId good_named(const MarketInstance& m, const std::string& label) {
    auto it = std::find(m.goods.begin(), m.goods.end(), label);
    REQUIRE(it != m.goods.end());
    return GoodId(it - m.goods.begin());
}

std::size_t agents_in(const GadgetRecord& r) {
    std::size_t n = r.agents.size();
    for (auto& c : r.children) n += agents_in(c);
    return n;
}

std::size_t own_and_device_agents(const GadgetRecord& r) {
    std::size_t n = r.agents.size();
    for (auto& c : r.children)
        if (c.kind != GadgetKind::EQ && c.kind != GadgetKind::LIN) n += own_and_device_agents(c);
    return n;
}

// a, b, s, then the gadget; numeraire agent first.
struct Standalone {
    MarketBuilder mb;
    GoodId a, b, s;
    Standalone() {
        a = mb.add_good("a");
        b = mb.add_good("b");
        s = mb.add_good("s");
        mb.add_agent({{s, 1}}, {{s, 1}}, "As");
    }
};

bool verifies(const MarketInstance& m, const std::vector<Rational>& p) {
    try {
        return verify_equilibrium(m, {p, demand_betas(m, p)}).ok;
    } catch (const Error&) {
        return false;
    }
}

// Single QD relation p_a p_s = p_b p_c over variables a=1, b=2, c=3, s=4.
Compiled single_qd(const Rational& H) {
    RelationSystem R;
    R.N = 3;
    R.original_n = 3;
    R.numeraire = 4;
    R.H = H;
    R.labels = {"a", "b", "c"};
    R.relations = {Relation::qd(1, 2, 3)};
    return compile(R);
}

}  // namespace

TEST_CASE("EQ gadget: equal prices clear") {
    Standalone t;
    GadgetRecord r = build_eq(t.mb, "eq", t.a, t.b, t.s);
    MarketInstance m = t.mb.take();
    CHECK(r.agents.size() == 2);
    CHECK(r.exclusive.size() == 1);
    CHECK(verify_equilibrium(m, {V({1, 1, 1, 1}), V({1, 1, 1})}).ok);
    CHECK(verify_equilibrium(m, {V({3, 3, 1, 1}), V({1, 1, 1})}).ok);
}

TEST_CASE("EQ gadget: unequal prices admit no equilibrium") {
    Standalone t;
    build_eq(t.mb, "eq", t.a, t.b, t.s);
    MarketInstance m = t.mb.take();
    // Any p_r, with demand betas or with hand-picked betas.
    for (int k = 0; k <= 64; ++k) {
        std::vector<Rational> p = V({2, 3, 1, Rational(k, 8)});
        CHECK_FALSE(verifies(m, p));
        for (int i = 0; i <= 8; ++i)
            for (int j = 0; j <= 8; ++j)
                CHECK_FALSE(verify_equilibrium(m, {p, V({1, Rational(i, 4), Rational(j, 4)})}).ok);
    }
}

TEST_CASE("EQ gadget: a = b holds at any price") {
    MarketBuilder mb;
    GoodId a = mb.add_good("a");
    build_eq(mb, "eq", a, a, a);
    MarketInstance m = mb.take();
    for (int k = 1; k < 6; ++k) CHECK(verifies(m, V({Rational(k, 3), 1})));
}

TEST_CASE("LIN gadget: p_a = 2 p_b + 3 p_s") {
    Standalone t;
    GadgetRecord r = build_lin(t.mb, "lin", {{1, t.a}}, {{2, t.b}, {3, t.s}}, t.s);
    MarketInstance m = t.mb.take();
    CHECK(r.agents.size() == 2);
    CHECK(verify_equilibrium(m, {V({5, 1, 1, 1}), V({1, 1, 1})}).ok);
    CHECK(verifies(m, V({5, 1, 1, 1})));
    CHECK_FALSE(verifies(m, V({4, 1, 1, 1})));
    CHECK_FALSE(verifies(m, V({6, 1, 1, 1})));
}

TEST_CASE("LIN gadget: two-sided p3 + p = H q") {
    MarketBuilder mb;
    GoodId p3 = mb.add_good("p3"), p = mb.add_good("p"), q = mb.add_good("q"), s = mb.add_good("s");
    mb.add_agent({{s, 1}}, {{s, 1}}, "As");
    CHECK_NOTHROW(build_lin(mb, "lin", {{1, p3}, {1, p}}, {{5, q}}, s));
    MarketInstance m = mb.take();
    CHECK(verifies(m, V({3, 2, 1, 1, 1})));
    CHECK_FALSE(verifies(m, V({3, 3, 1, 1, 1})));
}

TEST_CASE("LIN gadget rejects empty sides and negative coefficients") {
    Standalone t;
    CHECK_THROWS_AS(build_lin(t.mb, "lin", {}, {{1, t.b}}, t.s), Error);
    CHECK_THROWS_AS(build_lin(t.mb, "lin", {{-1, t.a}}, {{1, t.b}}, t.s), Error);
}

TEST_CASE("QD gadget: roster") {
    Compiled c = single_qd(Rational(5));
    const GadgetRecord& r = c.trace.records.at(0);
    CHECK(r.kind == GadgetKind::QD);
    CHECK(r.agents.size() == 2);
    CHECK(own_and_device_agents(r) == 12);
    CHECK(c.market.agents.size() == 1 + agents_in(r));
    for (int k = 1; k <= 7; ++k) CHECK_NOTHROW(good_named(c.market, "rel1/G" + std::to_string(k)));
    std::size_t devices = 0;
    for (auto& ch : r.children) devices += ch.kind == GadgetKind::Conv || ch.kind == GadgetKind::Comb ||
                                           ch.kind == GadgetKind::Spl;
    CHECK(devices == 4);
}

TEST_CASE("QD gadget: forced internal prices") {
    Compiled c = single_qd(Rational(5));
    Certificate cert = lift_relation_prices(c.trace, c.market, V({2, 1, 2, 1}));
    auto P = [&](int k) { return cert.prices[good_named(c.market, "rel1/G" + std::to_string(k))]; };
    CHECK(P(1) == 2);
    CHECK(P(2) == 1);
    CHECK(P(3) == 3);
    CHECK(P(4) == 1);
    CHECK(P(5) == 2);
    CHECK(P(6) == 4);
    CHECK(P(7) == 2);
    CHECK(verify_equilibrium(c.market, cert).ok);
    CHECK(oracle::is_equilibrium(c.market, oracle::to_mpq(cert.prices), oracle::to_mpq(cert.betas)));
}

TEST_CASE("QD gadget: zero multiplicand") {
    Compiled c = single_qd(Rational(5));
    Certificate cert = lift_relation_prices(c.trace, c.market, V({0, 1, 0, 1}));
    CHECK(verify_equilibrium(c.market, cert).ok);
    VerifyReport r = verify_equilibrium(c.market, cert);
    for (std::size_t j = 0; j < r.clearing_residual.size(); ++j)
        if (!r.clearing_residual[j].is_zero()) CHECK(cert.prices[j].is_zero());
}

TEST_CASE("QD gadget: wrong products and over-capacity multiplicands fail") {
    Compiled c = single_qd(Rational(3));
    EquilibriumProbe probe(c.trace, c.market);
    CHECK(probe(V({2, 1, 2, 1})));
    CHECK_FALSE(probe(V({3, 1, 2, 1})));
    CHECK_FALSE(probe(V({1, 1, 2, 1})));
    // c = 4 > H = 3: the relation holds but the converter cannot carry it.
    CHECK_FALSE(probe(V({4, 1, 4, 1})));
    try {
        lift_relation_prices(c.trace, c.market, V({4, 1, 4, 1}));
        FAIL("lifted past capacity");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::CapacityExceeded);
    }
}

TEST_CASE("compile: agent counts") {
    Compiled id = compile(sys(kIdentity));
    // numeraire + one EQ + four bound LINs, two agents each
    CHECK(id.market.agents.size() == 1 + 2 + 4 * 2);
    CHECK(id.market.agents[0].label == "numeraire/As");
    CHECK(id.trace.records.size() == 5);

    RelationSystem empty;
    empty.numeraire = 1;
    empty.H = Rational(1);
    Compiled e = compile(empty);
    CHECK(e.market.agents.size() == 1);
    CHECK(e.market.goods == std::vector<std::string>{"s"});

    Compiled p = compile(sys(kProduct));
    CHECK(p.market.goods.size() == 50);
    CHECK(p.market.agents.size() == 61);
    CHECK(check_exclusivity(p.trace, p.market).empty());
}

TEST_CASE("compile requires a homogenized system") {
    RelationSystem raw = decompose(sys(kIdentity));
    try {
        compile(raw);
        FAIL("compiled raw relations");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NotHomogenized);
    }
}

TEST_CASE("lift examples") {
    Compiled id = compile(sys(kIdentity));
    Certificate c = lift(id.trace, id.market, V({1, 1}));
    CHECK(verify_equilibrium(id.market, c).ok);
    try {
        lift(id.trace, id.market, V({3, 3}));
        FAIL("lifted outside the box");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::BoundViolated);
    }
    CHECK_THROWS_AS(lift(id.trace, id.market, V({1, 2})), Error);

    Compiled p = compile(sys(kProduct));
    Certificate pc = lift(p.trace, p.market, V({Rational(1, 2), Rational(1, 2), Rational(1, 4)}));
    CHECK(verify_equilibrium(p.market, pc).ok);
    CHECK(oracle::is_equilibrium(p.market, oracle::to_mpq(pc.prices), oracle::to_mpq(pc.betas)));
}

TEST_CASE("project examples") {
    Compiled id = compile(sys(kIdentity));
    Certificate c = lift(id.trace, id.market, V({1, 1}));
    CHECK(project(id.trace, id.market, c) == V({1, 1}));
    Certificate scaled = c;
    for (auto& x : scaled.prices) x *= 7;
    CHECK(project(id.trace, id.market, scaled) == V({1, 1}));
    Certificate bad = c;
    bad.betas[1] += Rational(1, 3);
    try {
        project(id.trace, id.market, bad);
        FAIL("projected a corrupt certificate");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::InvalidCertificate);
    }
}

TEST_CASE("audit: lifted certificates balance every closed record") {
    for (auto& f : fixtures::planted_systems()) {
        INFO(f.name);
        Compiled c = compile(f.system());
        Certificate cert = lift(c.trace, c.market, f.z());
        AuditReport a = audit_closed(c.trace, c.market, cert);
        CHECK(a.ok());
        CHECK(a.records_checked > c.trace.records.size());
        CHECK(cert.betas[0] == 1);
        CHECK(check_exclusivity(c.trace, c.market).empty());
    }
}

TEST_CASE("audit: merged EQ gadgets sharing an exclusive good") {
    RelationSystem R;
    R.N = 2;
    R.original_n = 2;
    R.numeraire = 3;
    R.H = Rational(1);
    R.relations = {Relation::eq(1, 2), Relation::eq(2, 1)};
    Compiled c = compile(R);
    Certificate cert = lift_relation_prices(c.trace, c.market, V({1, 1, 1}));
    REQUIRE(audit_closed(c.trace, c.market, cert).ok());

    GoodId r1 = c.trace.records[0].exclusive[0], r2 = c.trace.records[1].exclusive[0];
    Agent& a = c.market.agents[c.trace.records[1].agents[0]];
    for (auto& e : a.endowment)
        if (e.good == r2) e.good = r1;
    std::sort(a.endowment.begin(), a.endowment.end(), [](auto& x, auto& y) { return x.good < y.good; });
    AuditReport broken = audit_closed(c.trace, c.market, cert);
    CHECK_FALSE(broken.ok());
    CHECK(broken.imbalances[0].record == "rel2");
    CHECK_FALSE(check_exclusivity(c.trace, c.market).empty());
}

TEST_CASE("trace json round trip") {
    Compiled c = compile(sys(kProduct));
    GadgetTrace back = io::trace_from_json(io::parse(io::dump(io::to_json(c.trace))));
    CHECK(back == c.trace);
    CHECK(io::market_from_json(io::parse(io::dump(io::to_json(c.market)))) == c.market);
}

TEST_CASE("property: probe agrees with the exact check") {
    std::mt19937_64 rng(8);
    for (const char* text : {kIdentity, kProduct}) {
        Compiled c = compile(sys(text));
        EquilibriumProbe probe(c.trace, c.market);
        const std::size_t n = c.trace.relations.assignment_size();
        int hits = 0;
        for (int trial = 0; trial < 300; ++trial) {
            std::vector<Rational> rp(n);
            if (trial % 3 == 0) {
                std::vector<Rational> z;
                for (std::size_t j = 0; j < c.trace.relations.original_n; ++j) z.push_back(Rational(int(rng() % 3), 2));
                if (text == kIdentity) z[1] = z[0];
                if (text == kProduct) z[2] = z[0] * z[1];
                rp = extend_assignment(c.trace.relations, z);
            } else {
                for (auto& x : rp) x = Rational(int(rng() % 5), 2);
                rp[c.trace.numeraire_good] = 1;
            }
            bool exact = verifies(c.market, complete_prices(c.trace, c.market.good_count(), rp));
            CHECK(probe(rp) == exact);
            hits += exact;
        }
        CHECK(hits >= 100);
        CHECK(probe.screened() > 0);
    }
}
