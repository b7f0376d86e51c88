// Acceptance suite: one PASS/FAIL line per criterion, exit 1 if any fails.
// Tolerances and constants are pinned below.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "polyleon/error.hpp"
#include "polyleon/gadgets.hpp"
#include "polyleon/io.hpp"
#include "polyleon/nash.hpp"
#include "polyleon/ncp.hpp"
#include "polyleon/oracle.hpp"
#include "smt_grammar.hpp"

using namespace polyleon;

namespace {

// ---- pinned constants --------------------------------------------------
constexpr int kGridDenominator = 64;              // criterion 2 step 1/64
constexpr int kGridMax = 4;                       // criterion 2 prices in [0, 4]
const Rational kQDCapacity(5);                    // H for the standalone QD gadget (> kGridMax)
const Rational kPerturbation(1, 1000);            // criterion 4 step
const Rational kVerifyEps(1, 1'000'000'000);      // criterion 4 verify tolerance
constexpr int kPerturbationSamples = 200;         // criterion 4
constexpr int kNashGames = 5;                     // criterion 6
constexpr double kNashTolerance = 1e-4;           // criterion 6
constexpr std::size_t kDecisionResolution = 128;  // criterion 6
constexpr double kSizeConstant = 16.0;            // criterion 7: size[M] <= c K L
constexpr double kMaxExponent = 2.2;              // criterion 7
constexpr int kScalings = 100;                    // criterion 9

struct Outcome {
    bool pass = true;
    std::string detail;
};

struct Lifted {
    fixtures::Planted fixture;
    Compiled compiled;
    Certificate cert;
};

std::vector<Lifted> lift_all() {
    std::vector<Lifted> out;
    for (auto& f : fixtures::planted_systems()) {
        Compiled c = compile(f.system());
        Certificate cert = lift(c.trace, c.market, f.z());
        out.push_back({f, std::move(c), std::move(cert)});
    }
    return out;
}

bool verifies(const MarketInstance& m, const Certificate& cert, const VerifyOptions& opt = VerifyOptions::exact()) {
    try {
        return verify_equilibrium(m, cert, opt).ok;
    } catch (const Error&) {
        return false;
    }
}

bool verifies_at(const MarketInstance& m, const std::vector<Rational>& prices) {
    try {
        return verify_equilibrium(m, {prices, demand_betas(m, prices)}).ok;
    } catch (const Error&) {
        return false;
    }
}

// ---- 1. round trip -------------------------------------------------------
Outcome round_trip(const std::vector<Lifted>& all) {
    Outcome o;
    int good = 0;
    bool worked = false;
    for (auto& l : all) {
        // Through the text formats as well, as the command line tool would.
        MarketInstance m = io::market_from_json(io::parse(io::dump(io::to_json(l.compiled.market))));
        GadgetTrace t = io::trace_from_json(io::parse(io::dump(io::to_json(l.compiled.trace))));
        Certificate c = io::certificate_from_json(io::parse(io::dump(io::to_json(l.cert))));
        bool ok = verify_equilibrium(m, c).ok && project(t, m, c) == l.fixture.z();
        if (!ok) {
            o.pass = false;
            o.detail += " failed:" + l.fixture.name;
        }
        good += ok;
        worked = worked || l.fixture.name == "worked_example";
    }
    if (all.size() < 10 || !worked) o.pass = false;
    o.detail = std::to_string(good) + "/" + std::to_string(all.size()) + " systems exact" + o.detail;
    return o;
}

// ---- 2. gadget enforcement -----------------------------------------------
// Residual of a homogenized relation, evaluated directly from its definition.
Rational relation_residual(const Relation& r, const std::vector<Rational>& p, VarId s) {
    auto P = [&](VarId v) { return p[v - 1]; };
    switch (r.kind) {
        case RelationKind::EQ:
            return P(r.a) - P(r.b);
        case RelationKind::QD:
            return P(r.a) * P(s) - P(r.b) * P(r.c);
        case RelationKind::LIN: {
            Rational v;
            for (auto& t : r.left.terms) v += t.coef * P(t.var);
            for (auto& t : r.right.terms) v -= t.coef * P(t.var);
            return v;
        }
    }
    return {};
}

struct GadgetCase {
    std::string name;
    Relation relation;
    std::size_t free;  // relation variables 1..free are gridded; numeraire is free + 1
};

Outcome gadget_grid() {
    const VarId s2 = 3, s3 = 4;  // numeraire ids for 2- and 3-variable cases
    std::vector<GadgetCase> cases = {
        {"EQ", Relation::eq(1, 2), 2},
        {"LIN-1", Relation::lin({{{2, 1}}, {}}, {{{3, 2}}, {}}), 2},
        {"LIN-2", Relation::lin({{{1, 1}}, {}}, {{{1, 2}, {Rational(1, 2), s2}}, {}}), 2},
        {"LIN-two-sided", Relation::lin({{{1, 1}, {1, 2}}, {}}, {{{2, 3}, {Rational(1, 4), s3}}, {}}), 3},
        {"QD", Relation::qd(1, 2, 3), 3},
    };
    Outcome o;
    const int steps = kGridMax * kGridDenominator;
    std::vector<Rational> grid;
    for (int k = 0; k <= steps; ++k) grid.emplace_back(k, kGridDenominator);

    for (auto& gc : cases) {
        RelationSystem R;
        R.N = gc.free;
        R.original_n = gc.free;
        R.numeraire = VarId(gc.free + 1);
        R.H = kQDCapacity;
        for (std::size_t v = 1; v <= gc.free; ++v) R.labels.push_back("x" + std::to_string(v));
        R.relations = {gc.relation};
        Compiled c = compile(R);
        EquilibriumProbe probe(c.trace, c.market);

        std::vector<Rational> rp(gc.free + 1, Rational(0));
        rp[gc.free] = 1;
        std::size_t points = 0, false_accept = 0, false_reject = 0, roots = 0;
        std::vector<int> idx(gc.free, 0);
        while (true) {
            for (std::size_t k = 0; k < gc.free; ++k) rp[k] = grid[idx[k]];
            bool holds = relation_residual(gc.relation, rp, VarId(gc.free + 1)).is_zero();
            bool accepted = probe(rp);
            ++points;
            roots += holds;
            false_accept += accepted && !holds;
            false_reject += holds && !accepted;
            std::size_t k = 0;
            while (k < gc.free && ++idx[k] > steps) idx[k++] = 0;
            if (k == gc.free) break;
        }
        bool ok = false_accept == 0 && false_reject == 0 && roots > 0;
        o.pass = o.pass && ok;
        std::ostringstream d;
        d << " " << gc.name << ":" << points << "pts/" << roots << "roots/FA=" << false_accept
          << "/FR=" << false_reject;
        o.detail += d.str();
    }
    return o;
}

// ---- 3. closed submarkets ------------------------------------------------
Outcome closed_submarkets(const std::vector<Lifted>& all) {
    Outcome o;
    std::size_t records = 0;
    for (auto& l : all) {
        AuditReport r = audit_closed(l.compiled.trace, l.compiled.market, l.cert);
        records += r.records_checked;
        if (!r.ok() || r.records_checked == 0) {
            o.pass = false;
            o.detail += " imbalance:" + l.fixture.name;
        }
    }
    o.detail = std::to_string(records) + " records with zero imbalance" + o.detail;
    return o;
}

// ---- 4. perturbation rejection ---------------------------------------------
Outcome perturbations(const std::vector<Lifted>& all) {
    std::mt19937_64 rng(4);
    const VerifyOptions opt = VerifyOptions::tolerance(kVerifyEps);
    int rejected = 0, price_survivors = 0, beta_survivors = 0, on_exclusive = 0;
    std::string example;
    for (int trial = 0; trial < kPerturbationSamples; ++trial) {
        const Lifted& l = all[rng() % all.size()];
        Certificate c = l.cert;
        std::size_t slots = c.prices.size() + c.betas.size();
        std::size_t k = rng() % slots;
        Rational delta = rng() % 2 ? kPerturbation : -kPerturbation;
        bool price = k < c.prices.size();
        if (price)
            c.prices[k] += delta;
        else
            c.betas[k - c.prices.size()] += delta;
        if (!verifies(l.compiled.market, c, opt)) {
            ++rejected;
        } else {
            (price ? price_survivors : beta_survivors)++;
            if (price)
                for (const GadgetRecord* r : flatten(l.compiled.trace))
                    if (std::find(r->exclusive.begin(), r->exclusive.end(), GoodId(k)) != r->exclusive.end()) {
                        ++on_exclusive;
                        break;
                    }
            if (example.empty())
                example = l.fixture.name + (price ? " price of " + l.compiled.market.goods[k]
                                                  : " beta of " + l.compiled.market.agents[k - c.prices.size()].label);
        }
    }
    Outcome o;
    o.pass = rejected == kPerturbationSamples;
    o.detail = std::to_string(rejected) + "/" + std::to_string(kPerturbationSamples) + " rejected";
    if (!o.pass)
        o.detail += " (survivors: " + std::to_string(price_survivors) + " price, " + std::to_string(beta_survivors) +
                    " beta; " + std::to_string(on_exclusive) + " on exclusive gadget goods; e.g. " + example + ")";
    return o;
}

// ---- 5. numeraire and bounds ---------------------------------------------
Outcome numeraire_and_bounds(const std::vector<Lifted>& all) {
    Outcome o;
    std::size_t checked = 0, synthetic = 0, synthetic_rejected = 0;
    for (auto& l : all) {
        const GadgetTrace& t = l.compiled.trace;
        const MarketInstance& m = l.compiled.market;
        const Rational& H = *t.relations.H;
        const Rational ps = l.cert.prices[t.numeraire_good];
        if (!(ps > Rational(0))) {
            o.pass = false;
            o.detail += " zero-numeraire:" + l.fixture.name;
            continue;
        }
        Certificate n = normalize(l.cert, t.numeraire_good);
        std::vector<Rational> rp(t.relations.assignment_size());
        for (VarId v = 1; v <= t.relations.N; ++v) {
            rp[v - 1] = n.prices[GadgetTrace::good_of(v)];
            ++checked;
            if (rp[v - 1] > H) {
                o.pass = false;
                o.detail += " over-H:" + l.fixture.name + "/" + t.relations.labels[v - 1];
            }
        }
        rp[t.relations.N] = 1;
        for (VarId v = 1; v <= t.relations.N; ++v) {
            std::vector<Rational> bad = rp;
            bad[v - 1] = H + Rational(1);
            ++synthetic;
            synthetic_rejected += !verifies_at(m, complete_prices(t, m.good_count(), bad));
        }
    }
    if (synthetic_rejected != synthetic) o.pass = false;
    o.detail = std::to_string(checked) + " relation prices <= H; " + std::to_string(synthetic_rejected) + "/" +
               std::to_string(synthetic) + " H+1 certificates rejected" + o.detail;
    return o;
}

// ---- 6. 3-Nash pipeline ----------------------------------------------------
Game3 constant_game(int ns) {
    Game3 g;
    g.ns = ns;
    for (auto& t : g.payoff) t.assign(ns * ns * ns, Rational(0));
    return g;
}

Game3 dominant_game() {
    Game3 g = constant_game(2);
    for (std::size_t s0 = 0; s0 < 2; ++s0)
        for (std::size_t s1 = 0; s1 < 2; ++s1)
            for (std::size_t s2 = 0; s2 < 2; ++s2) {
                std::size_t s[3] = {s0, s1, s2};
                for (std::size_t p = 0; p < 3; ++p) g.payoff[p][g.index(s0, s1, s2)] = s[p] == 0 ? 1 : 0;
            }
    return g;
}

Outcome nash_pipeline() {
    Outcome o;
    std::mt19937_64 rng(6);
    int games = 0, equilibria = 0, recovered = 0;
    for (int attempt = 0; attempt < 1000 && games < kNashGames; ++attempt) {
        Game3 g = oracle::random_game(rng);
        oracle::Equilibria eq = oracle::support_enumeration(g);
        if (eq.degenerate || eq.profiles.empty()) continue;
        SearchConfig cfg;
        cfg.eps = 1e-9;
        PolyGridResult r = solve_poly_grid(encode_ne(normalize_payoffs(g)), cfg);
        ++games;
        for (auto& z : eq.profiles) {
            ++equilibria;
            bool found = false;
            for (auto& pt : r.points) {
                double d = 0;
                for (int k = 0; k < 6; ++k) d = std::max(d, std::abs(pt[k] - z[k]));
                found = found || d < kNashTolerance;
            }
            recovered += found;
        }
    }
    if (games < kNashGames || recovered != equilibria) o.pass = false;
    o.detail = std::to_string(recovered) + "/" + std::to_string(equilibria) + " equilibria of " +
               std::to_string(games) + " games recovered";

    Game3 zero = constant_game(2);
    Compiled c = compile(encode_ne(zero));
    std::vector<Rational> z = ne_assignment(zero, std::vector<Rational>(6, Rational(1, 2)));
    bool lifted = verify_equilibrium(c.market, lift(c.trace, c.market, z)).ok;
    o.pass = o.pass && lifted;
    o.detail += lifted ? "; uniform profile of the zero game lifts exactly" : "; zero-game lift FAILED";

    SearchConfig cfg;
    cfg.resolution = kDecisionResolution;
    PolyGridResult none = solve_poly_grid(encode_decision_ne(dominant_game()), cfg);
    bool empty = none.points.empty();
    o.pass = o.pass && empty;
    o.detail += empty ? "; decision encoding of a pure-NE game has no solution" : "; decision encoding found points";
    return o;
}

// ---- 7. size polynomiality -------------------------------------------------
std::string random_system(std::mt19937_64& rng, int polys, int terms) {
    const int n = 1 + int(rng() % 4);
    std::ostringstream s;
    s << R"({"vars":)" << n << R"(,"bounds":[)";
    for (int j = 0; j < n; ++j) s << (j ? "," : "") << R"(["0",")" << 1 + rng() % 3 << R"("])";
    s << R"(],"polys":[)";
    for (int i = 0; i < polys; ++i) {
        s << (i ? "," : "") << "[";
        for (int t = 0; t < terms; ++t) {
            long num = long(rng() % 19) - 9;
            if (num == 0) num = 1;
            s << (t ? "," : "") << R"({"c":")" << num << "/" << 1 + rng() % 7 << R"(","e":{)";
            int degree = int(rng() % 4);
            std::vector<int> e(n, 0);
            for (int k = 0; k < degree; ++k) ++e[rng() % n];
            bool first = true;
            for (int j = 0; j < n; ++j)
                if (e[j]) {
                    s << (first ? "" : ",") << '"' << j + 1 << "\":" << e[j];
                    first = false;
                }
            s << "}}";
        }
        s << "]";
    }
    s << "]}";
    return s.str();
}

Outcome size_growth() {
    std::mt19937_64 rng(7);
    std::vector<double> x, y, sizeF;
    double worst_ratio = 0;
    for (int polys = 1; polys <= 12; ++polys)
        for (int terms : {1, 2, 4, 6}) {
            PolynomialSystem F = io::system_from_json(io::parse(random_system(rng, polys, terms)));
            RelationSystem R = reduce(F);
            double K = double(R.relations.size());
            double L = double(relation_size(R).total_bit_size);
            double M = double(market_size(compile(R).market));
            sizeF.push_back(double(system_size(F).total_bit_size));
            x.push_back(std::log(K * L));
            y.push_back(std::log(M));
            worst_ratio = std::max(worst_ratio, M / (K * L));
        }
    const double n = double(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) mx += x[i] / n, my += y[i] / n;
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < x.size(); ++i) sxy += (x[i] - mx) * (y[i] - my), sxx += (x[i] - mx) * (x[i] - mx);
    const double slope = sxy / sxx;
    const double span = *std::max_element(sizeF.begin(), sizeF.end()) / *std::min_element(sizeF.begin(), sizeF.end());
    Outcome o;
    o.pass = worst_ratio <= kSizeConstant && slope <= kMaxExponent && span >= 10;
    char buf[200];
    std::snprintf(buf, sizeof buf, "%zu systems, size[F] span %.1fx, max size[M]/(K*L) = %.3f (c = %.1f), exponent %.3f",
                  x.size(), span, worst_ratio, kSizeConstant, slope);
    o.detail = buf;
    return o;
}

// ---- 8. AD-NCP consistency -------------------------------------------------
Outcome ncp_consistency(const std::vector<Lifted>& all) {
    Outcome o;
    std::mt19937_64 rng(8);
    int extended = 0, accepted_variants = 0, documents = 0;
    for (auto& l : all) {
        const MarketInstance& m = l.compiled.market;
        NCPInstance inst = build_ncp(plc_from_leontief(m));
        NCPCandidate cand = extend_to_ncp(m, l.cert);
        bool ok = check_ncp(inst, cand).ok && verifies(m, project_from_ncp(cand));
        extended += ok;
        if (!ok) o.detail += " extension:" + l.fixture.name;
        // Converse direction: any accepted candidate must project to an equilibrium.
        for (int trial = 0; trial < 20; ++trial) {
            NCPCandidate v = cand;
            Rational scale(1 + int(rng() % 5), 1 + int(rng() % 5));
            if (trial % 2) {
                for (auto& p : v.p) p *= scale;
                for (auto& lam : v.lambda) lam /= scale;
            } else {
                v.p[rng() % v.p.size()] += Rational(1, 7);
            }
            if (check_ncp(inst, v).ok) {
                ++accepted_variants;
                if (!verifies(m, project_from_ncp(v))) {
                    o.pass = false;
                    o.detail += " converse:" + l.fixture.name;
                }
            }
        }
        std::string doc = export_etr(inst);
        bool grammar = smt::asserts(doc) > 0 && doc.find('/') == std::string::npos;
        documents += grammar;
        if (!grammar) o.detail += " smt:" + l.fixture.name;
    }
    if (extended != int(all.size()) || documents != int(all.size())) o.pass = false;
    o.detail = std::to_string(extended) + "/" + std::to_string(all.size()) + " certificates extend; " +
               std::to_string(accepted_variants) + " accepted variants project to equilibria; " +
               std::to_string(documents) + " SMT-LIB documents well formed, integer-only" + o.detail;
    return o;
}

// ---- 9. scale invariance ---------------------------------------------------
Outcome scale_invariance(const std::vector<Lifted>& all) {
    std::mt19937_64 rng(9);
    int unchanged = 0;
    for (int trial = 0; trial < kScalings; ++trial) {
        const Lifted& l = all[rng() % all.size()];
        Certificate c = l.cert;
        if (trial % 4 == 3) c.betas[rng() % c.betas.size()] += kPerturbation;  // a failing certificate too
        Rational alpha(1 + long(rng() % 1000), 1 + long(rng() % 1000));
        Certificate scaled = c;
        for (auto& p : scaled.prices) p *= alpha;
        unchanged += verifies(l.compiled.market, c) == verifies(l.compiled.market, scaled);
    }
    Outcome o;
    o.pass = unchanged == kScalings;
    o.detail = std::to_string(unchanged) + "/" + std::to_string(kScalings) + " scalings keep the verdict";
    return o;
}

}  // namespace

int main() {
    using clock = std::chrono::steady_clock;
    std::vector<Lifted> all = lift_all();
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"round-trip exactness", [&] { return round_trip(all); }},
        {"gadget enforcement", [] { return gadget_grid(); }},
        {"closed-submarket audit", [&] { return closed_submarkets(all); }},
        {"perturbation rejection", [&] { return perturbations(all); }},
        {"numeraire and bounds", [&] { return numeraire_and_bounds(all); }},
        {"3-Nash pipeline", [] { return nash_pipeline(); }},
        {"size polynomiality", [] { return size_growth(); }},
        {"AD-NCP consistency", [&] { return ncp_consistency(all); }},
        {"scale invariance", [&] { return scale_invariance(all); }},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        auto start = clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        double secs = std::chrono::duration<double>(clock::now() - start).count();
        failed += !o.pass;
        std::printf("criterion %zu %-24s %s  %s [%.1fs]\n", i + 1, criteria[i].first.c_str(), o.pass ? "PASS" : "FAIL",
                    o.detail.c_str(), secs);
        std::fflush(stdout);
    }
    return failed ? 1 : 0;
}
