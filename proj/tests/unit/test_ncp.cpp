#include <doctest.h>

#include <cctype>
#include <cstdlib>

#include "fixtures.hpp"
#include "smt_grammar.hpp"
#include "polyleon/error.hpp"
#include "polyleon/gadgets.hpp"
#include "polyleon/ncp.hpp"

using namespace polyleon;

namespace {

PLCMarket one_good() {
    PLCMarket m;
    m.goods = {"g"};
    m.agents.push_back({{1}, {{{1}, 0}}, {}});
    return m;
}

NCPCandidate one_good_candidate(const Rational& x) {
    NCPCandidate c;
    c.p = {1};
    c.x = {{x}};
    c.lambda = {1};
    c.gamma = {{1}};
    c.u = {1};
    return c;
}

// Agent owns one unit of a and wants b; a firm turns a into b one for one.
PLCMarket firm_market() {
    PLCMarket m;
    m.goods = {"a", "b"};
    m.agents.push_back({{1, 0}, {{{0, 1}, 0}}, {1}});
    m.firms.push_back(leontief_firm(2, 1, {{0, 1}}));
    return m;
}

}  // namespace

TEST_CASE("one agent, one good: candidate passes") {
    NCPInstance inst = build_ncp(one_good());
    NCPReport r = check_ncp(inst, one_good_candidate(1));
    CHECK(r.ok);
    CHECK(r.violations.empty());
}

TEST_CASE("one agent, one good: over-demand fails clearing") {
    NCPInstance inst = build_ncp(one_good());
    NCPReport r = check_ncp(inst, one_good_candidate(2));
    CHECK_FALSE(r.ok);
    bool clearing = false;
    for (auto& v : r.violations)
        if (v.row < inst.rows.size()) clearing = clearing || inst.rows[v.row].family == "clearing";
    CHECK(clearing);
}

TEST_CASE("one agent, one good: five asserts") {
    std::string doc = export_etr(build_ncp(one_good()));
    CHECK(smt::asserts(doc) == 5);
    CHECK(doc.find("(set-logic QF_NRA)") != std::string::npos);
    CHECK(doc.find("(check-sat)") != std::string::npos);
    CHECK(doc.find('/') == std::string::npos);
    CHECK(doc.find('.') == std::string::npos);
}

TEST_CASE("negative candidate entries are sign violations") {
    NCPInstance inst = build_ncp(one_good());
    NCPCandidate c = one_good_candidate(1);
    c.lambda = {-1};
    NCPReport r = check_ncp(inst, c);
    CHECK_FALSE(r.ok);
    bool sign = false;
    for (auto& v : r.violations) sign = sign || v.row >= inst.rows.size();
    CHECK(sign);
}

TEST_CASE("candidate dimensions are checked") {
    NCPInstance inst = build_ncp(one_good());
    NCPCandidate c = one_good_candidate(1);
    c.gamma = {{1, 1}};
    CHECK_THROWS_AS(c.flatten(inst), Error);
}

TEST_CASE("Leontief firm: hand equilibrium") {
    PLCMarket m = firm_market();
    CHECK_NOTHROW(m.validate());
    NCPInstance inst = build_ncp(m);
    NCPCandidate c;
    c.p = {Rational(1, 2), Rational(1, 2)};
    c.x = {{0, 1}};
    c.xs = {{0, 1}};
    c.xr = {{1, 0}};
    c.lambda = {2};
    c.gamma = {{1}};
    c.delta = {{Rational(1, 2)}};
    c.u = {1};
    c.phi = {0};
    NCPReport r = check_ncp(inst, c);
    CHECK(r.ok);

    // Producing without inputs breaks the facet.
    NCPCandidate bad = c;
    bad.xr = {{Rational(1, 2), 0}};
    CHECK_FALSE(check_ncp(inst, bad).ok);
}

TEST_CASE("PLC validation") {
    PLCMarket m = firm_market();
    m.agents[0].shares = {Rational(1, 2)};
    CHECK_THROWS_AS(m.validate(), Error);
    PLCMarket empty;
    empty.goods = {"g"};
    CHECK_THROWS_AS(build_ncp(empty), Error);
}

TEST_CASE("lifted equilibria extend to AD-NCP solutions") {
    for (auto& f : fixtures::planted_systems()) {
        INFO(f.name);
        Compiled c = compile(f.system());
        Certificate cert = lift(c.trace, c.market, f.z());
        NCPInstance inst = build_ncp(plc_from_leontief(c.market));
        NCPCandidate cand = extend_to_ncp(c.market, cert);
        CHECK(check_ncp(inst, cand).ok);
        Certificate back = project_from_ncp(cand);
        CHECK(verify_equilibrium(c.market, back).ok);
        CHECK(project(c.trace, c.market, back) == f.z());
    }
}

TEST_CASE("extension rejects a certificate with a zero-cost agent") {
    MarketInstance m;
    m.goods = {"a", "b"};
    m.agents.push_back(make_agent({{0, 1}}, {{0, 1}}));
    m.agents.push_back(make_agent({{1, 1}}, {{1, 1}}));
    Certificate cert{{1, 0}, {1, 0}};
    REQUIRE(verify_equilibrium(m, cert).ok);
    try {
        extend_to_ncp(m, cert);
        FAIL("extended a zero-cost agent");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::InvalidCertificate);
    }
}

TEST_CASE("export is semantics-blind") {
    // The only agent owns a good nobody wants and wants one nobody owns.
    PLCMarket m;
    m.goods = {"a", "b"};
    m.agents.push_back({{1, 0}, {{{0, 1}, 0}}, {}});
    std::string doc = export_etr(build_ncp(m));
    CHECK(smt::asserts(doc) > 0);
}

TEST_CASE("grammar checker rejects malformed documents") {
    CHECK(smt::asserts("(assert (>= x 1/2))") == -1);
    CHECK(smt::asserts("(assert (>= x 0)") == -1);
    CHECK(smt::asserts("(echo 1)") == -1);
    CHECK(smt::asserts("(assert (>= x 0.5))") == -1);
    CHECK(smt::asserts("(assert (>= x (- 3)))") == 1);
}

TEST_CASE("compiled market exports with integer coefficients") {
    Compiled c = compile(fixtures::planted_systems()[3].system());
    std::string doc = export_etr(build_ncp(plc_from_leontief(c.market)));
    CHECK(smt::asserts(doc) >= 5);
}

TEST_CASE("external solver is optional") {
    unsetenv("POLYLEON_SMT_SOLVER");
    CHECK_FALSE(run_external_solver("(check-sat)\n").has_value());
    setenv("POLYLEON_SMT_SOLVER", "echo sat", 1);
    auto out = run_external_solver("(check-sat)\n");
    REQUIRE(out);
    CHECK(out->rfind("sat", 0) == 0);
    unsetenv("POLYLEON_SMT_SOLVER");
}
