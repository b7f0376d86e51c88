#include "cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <ostream>

#include "polyleon/error.hpp"
#include "polyleon/gadgets.hpp"
#include "polyleon/io.hpp"
#include "polyleon/nash.hpp"
#include "polyleon/ncp.hpp"
#include "polyleon/oracle.hpp"
#include "polyleon/reduce.hpp"

#ifndef POLYLEON_VERSION
#define POLYLEON_VERSION "dev"
#endif

namespace polyleon::cli {

namespace {

using io::json;

struct Options {
    std::string out, trace, manifest, mode = "exact", eps;
    std::size_t grid = 64;
    std::size_t max_iters = 0;
    std::uint64_t seed = 1;
    double step = 0.1;
    bool decision = false, solve = false;
    std::vector<std::string> inputs;
};

// Thrown for exit code 1 after the report has been written.
struct Failed {};
// Oracle found nothing or hit a cap.
struct Inconclusive {
    std::string message;
};

class Session {
public:
    Session(std::string command, Options& opt, std::ostream& out) : command_(std::move(command)), opt_(opt), out_(out) {}

    json input_json(std::size_t k) {
        std::string text = io::read_text(opt_.inputs.at(k));
        record_input(opt_.inputs[k], text);
        return io::parse(text, opt_.inputs[k] == "-" ? "<stdin>" : opt_.inputs[k]);
    }

    /// Writes to `path` ("" or "-" is the primary stream) and records a hash.
    void write(const std::string& path, const std::string& text) {
        if (path.empty() || path == "-") {
            out_ << text;
            out_.flush();
        } else {
            std::ofstream f(path, std::ios::binary);
            if (!f) throw Error(ErrorCode::InvalidInput, "cannot write " + path);
            f << text;
        }
        outputs_.push_back({path.empty() ? "-" : path, io::sha256_hex(text)});
    }
    void write_json(const std::string& path, const json& doc) { write(path, io::dump(doc)); }
    void primary(const json& doc) { write_json(opt_.out, doc); }

    VerifyOptions verify_options() const {
        if (opt_.mode == "exact") return VerifyOptions::exact();
        return VerifyOptions::tolerance(Rational::parse(opt_.eps.empty() ? "1e-9" : opt_.eps));
    }
    double eps_or(double fallback) const { return opt_.eps.empty() ? fallback : Rational::parse(opt_.eps).to_double(); }

    SearchConfig search_config(double default_eps) const {
        SearchConfig cfg;
        cfg.resolution = opt_.grid;
        cfg.eps = eps_or(default_eps);
        cfg.seed = opt_.seed;
        if (opt_.max_iters) cfg.max_cells = opt_.max_iters;
        return cfg;
    }

    /// Manifest next to the first file output, or at --manifest.
    void finish() {
        std::string path = opt_.manifest;
        if (path.empty())
            for (auto& o : outputs_)
                if (o.first != "-") {
                    path = o.first + ".manifest.json";
                    break;
                }
        if (path.empty()) return;
        json m = json::object();
        m["schema"] = "polyleon/manifest@1";
        m["subcommand"] = command_;
        m["tool_version"] = POLYLEON_VERSION;
        m["config"] = json{{"mode", opt_.mode}, {"eps", opt_.eps.empty() ? json(nullptr) : json(opt_.eps)},
                           {"grid", opt_.grid}, {"max_iters", opt_.max_iters}, {"seed", opt_.seed}};
        json ins = json::array(), outs = json::array();
        for (auto& [p, h] : inputs_) ins.push_back(json{{"path", p}, {"sha256", h}});
        for (auto& [p, h] : outputs_) outs.push_back(json{{"path", p}, {"sha256", h}});
        m["inputs"] = ins;
        m["outputs"] = outs;
        std::ofstream f(path, std::ios::binary);
        if (!f) throw Error(ErrorCode::InvalidInput, "cannot write " + path);
        f << io::dump(m);
    }

    const Options& opt() const { return opt_; }

private:
    void record_input(const std::string& path, const std::string& text) {
        inputs_.push_back({path, io::sha256_hex(text)});
    }

    std::string command_;
    Options& opt_;
    std::ostream& out_;
    std::vector<std::pair<std::string, std::string>> inputs_, outputs_;
};

int exit_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::ResidualNonzero:
        case ErrorCode::BoundViolated:
        case ErrorCode::CapacityExceeded:
        case ErrorCode::InvalidCertificate:
        case ErrorCode::UnboundedDemand:
        case ErrorCode::ZeroNumeraire:
            return kFailed;
        case ErrorCode::CapExceeded:
        case ErrorCode::NotConverged:
            return kInconclusive;
        default:
            return kUsage;
    }
}

void error_json(std::ostream& err, std::string_view code, const std::string& message) {
    json e = json::object();
    e["schema"] = "polyleon/error@1";
    e["error"] = code;
    e["message"] = message;
    err << e.dump() << "\n";
}

// Market either from a market file or compiled from the trace's relations.
MarketInstance market_for(const GadgetTrace& trace) { return compile(trace.relations).market; }

json system_or_relations_compile(Session& s, const json& doc, Compiled& out) {
    std::string schema = io::schema_of(doc);
    if (schema == io::kRelationsSchema || (schema.empty() && doc.contains("relations")))
        out = compile(io::relations_from_json(doc));
    else
        out = compile(io::system_from_json(doc));
    (void)s;
    return io::to_json(out.market);
}

PLCMarket plc_from_doc(const json& doc) {
    std::string schema = io::schema_of(doc);
    if (schema == io::kMarketSchema || (schema.empty() && doc.contains("g")))
        return plc_from_leontief(io::market_from_json(doc));
    return io::plc_market_from_json(doc);
}

json ncp_instance_json(const NCPInstance& inst) {
    json j = json::object();
    j["schema"] = "polyleon/ncp-instance@1";
    json vars = json::array();
    for (std::size_t v = 1; v <= inst.layout.var_count(); ++v) vars.push_back(inst.layout.name(VarIndex(v)));
    j["variables"] = vars;
    json rows = json::array();
    for (auto& r : inst.rows) {
        static const char* kinds[] = {"complementary", "inequality", "equality"};
        json row{{"family", r.family}, {"label", r.label}, {"kind", kinds[int(r.kind)]},
                 {"g", io::polynomial_to_json(r.g)}};
        row["complement"] = r.complement ? json(inst.layout.name(r.complement)) : json(nullptr);
        rows.push_back(std::move(row));
    }
    j["rows"] = rows;
    return j;
}

json points_json(const char* schema, const std::vector<std::vector<double>>& pts) {
    json j = json::object();
    j["schema"] = schema;
    j["points"] = pts;
    return j;
}

void cmd_compile(Session& s) {
    Compiled c;
    json market = system_or_relations_compile(s, s.input_json(0), c);
    s.primary(market);
    if (!s.opt().trace.empty()) s.write_json(s.opt().trace, io::to_json(c.trace));
}

void cmd_lift(Session& s) {
    GadgetTrace trace = io::trace_from_json(s.input_json(0));
    std::vector<Rational> z = io::assignment_from_json(s.input_json(1));
    MarketInstance market = market_for(trace);
    s.primary(io::to_json(lift(trace, market, z)));
}

void cmd_verify(Session& s) {
    MarketInstance market = io::market_from_json(s.input_json(0));
    Certificate cert = io::certificate_from_json(s.input_json(1));
    VerifyReport report = verify_equilibrium(market, cert, s.verify_options());
    s.primary(io::to_json(report, market));
    if (!report.ok) throw Failed{};
}

void cmd_project(Session& s) {
    GadgetTrace trace = io::trace_from_json(s.input_json(0));
    Certificate cert = io::certificate_from_json(s.input_json(1));
    MarketInstance market = market_for(trace);
    s.primary(io::assignment_to_json(project(trace, market, cert, s.verify_options())));
}

void cmd_audit(Session& s) {
    GadgetTrace trace = io::trace_from_json(s.input_json(0));
    Certificate cert = io::certificate_from_json(s.input_json(1));
    MarketInstance market = market_for(trace);
    AuditReport report = audit_closed(trace, market, cert);
    auto exclusivity = check_exclusivity(trace, market);
    json j = json::object();
    j["schema"] = "polyleon/audit-report@1";
    j["ok"] = report.ok() && exclusivity.empty();
    j["records_checked"] = report.records_checked;
    json imb = json::array();
    for (auto& i : report.imbalances)
        imb.push_back(json{{"record", i.record}, {"good", market.goods[i.good]}, {"amount", io::to_json(i.amount)}});
    j["imbalances"] = imb;
    json ex = json::array();
    for (auto& v : exclusivity)
        ex.push_back(json{{"record", v.record}, {"good", market.goods[v.good]}, {"agent", v.agent}});
    j["exclusivity_violations"] = ex;
    s.primary(j);
    if (!j["ok"].get<bool>()) throw Failed{};
}

void cmd_nash_encode(Session& s) {
    Game3 game = normalize_payoffs(io::game_from_json(s.input_json(0)));
    s.primary(io::to_json(s.opt().decision ? encode_decision_ne(game) : encode_ne(game)));
}

void cmd_nash_verify(Session& s) {
    Game3 game = io::game_from_json(s.input_json(0));
    std::vector<Rational> profile = io::assignment_from_json(s.input_json(1));
    if (profile.size() < 3 * game.ns)
        throw Error(ErrorCode::InvalidInput, "profile needs 3 * ns = " + std::to_string(3 * game.ns) + " entries");
    profile.resize(3 * game.ns);  // trailing beta/delta entries of a full assignment are ignored
    bool ok;
    if (s.opt().mode == "exact") {
        ok = verify_ne_exact(game, profile);
    } else {
        std::vector<double> d;
        for (auto& r : profile) d.push_back(r.to_double());
        ok = verify_ne(normalize_payoffs(game), d, s.eps_or(1e-9));
    }
    json j = json::object();
    j["schema"] = "polyleon/nash-report@1";
    j["ok"] = ok;
    s.primary(j);
    if (!ok) throw Failed{};
}

void cmd_ncp_build(Session& s) { s.primary(ncp_instance_json(build_ncp(plc_from_doc(s.input_json(0))))); }

void cmd_ncp_check(Session& s) {
    json mdoc = s.input_json(0);
    json cdoc = s.input_json(1);
    NCPInstance inst = build_ncp(plc_from_doc(mdoc));
    NCPCandidate cand = io::schema_of(cdoc) == io::kCertificateSchema
                            ? extend_to_ncp(io::market_from_json(mdoc), io::certificate_from_json(cdoc))
                            : io::candidate_from_json(cdoc);
    NCPReport report = check_ncp(inst, cand, s.verify_options());
    json j = json::object();
    j["schema"] = "polyleon/ncp-report@1";
    j["ok"] = report.ok;
    json v = json::array();
    for (auto& x : report.violations)
        v.push_back(json{{"row", x.row}, {"what", x.what}, {"magnitude", io::to_json(x.magnitude)}});
    j["violations"] = v;
    s.primary(j);
    if (!report.ok) throw Failed{};
}

void cmd_ncp_export(Session& s) {
    std::string doc = export_etr(build_ncp(plc_from_doc(s.input_json(0))));
    if (!s.opt().solve) {
        s.write(s.opt().out, doc);
        return;
    }
    auto answer = run_external_solver(doc);
    if (!answer) throw Error(ErrorCode::InvalidInput, "--solve needs POLYLEON_SMT_SOLVER to name a solver binary");
    if (!s.opt().out.empty() && s.opt().out != "-") s.write(s.opt().out, doc);
    json j = json::object();
    j["schema"] = "polyleon/smt-result@1";
    j["solver"] = std::getenv("POLYLEON_SMT_SOLVER");
    j["answer"] = *answer;
    s.write_json("-", j);
    if (*answer != "sat" && *answer != "unsat") throw Inconclusive{"solver answered \"" + *answer + "\""};
}

void cmd_oracle_poly(Session& s) {
    PolynomialSystem sys = io::system_from_json(s.input_json(0));
    PolyGridResult r = solve_poly_grid(sys, s.search_config(1e-6));
    json j = points_json("polyleon/oracle-points@1", r.points);
    j["cells"] = r.cells;
    s.primary(j);
    if (r.points.empty()) throw Inconclusive{"no point within eps; this does not prove infeasibility"};
}

void cmd_oracle_market(Session& s) {
    MarketInstance m = io::market_from_json(s.input_json(0));
    MarketGridResult r = solve_market_grid(m, s.search_config(1e-6));
    json j = points_json("polyleon/oracle-prices@1", r.prices);
    j["evaluated"] = r.evaluated;
    j["unbounded"] = r.unbounded;
    s.primary(j);
    if (r.prices.empty()) throw Inconclusive{"no price vector within eps"};
}

void cmd_oracle_tatonnement(Session& s) {
    MarketInstance m = io::market_from_json(s.input_json(0));
    std::vector<double> start(m.good_count(), 1.0 / double(m.good_count()));
    if (s.opt().inputs.size() > 1) {
        start.clear();
        for (auto& r : io::assignment_from_json(s.input_json(1))) start.push_back(r.to_double());
    }
    TatonnementResult r =
        tatonnement(m, start, s.opt().step, s.opt().max_iters ? s.opt().max_iters : 100000, s.search_config(1e-6));
    json j = json::object();
    j["schema"] = "polyleon/oracle-prices@1";
    j["points"] = json::array({r.prices});
    j["iterations"] = r.iterations;
    j["restarts"] = r.restarts;
    s.primary(j);
}

json size_json(const SizeReport& r) {
    return json{{"vars", r.var_count},          {"count", r.relation_or_poly_count},
                {"bits", r.total_bit_size},      {"max_degree", r.max_degree},
                {"max_monomials", r.monomial_count_max}, {"u_max", io::to_json(r.u_max)}};
}

void cmd_stats(Session& s) {
    json doc = s.input_json(0);
    std::string schema = io::schema_of(doc);
    json j = json::object();
    j["schema"] = "polyleon/stats@1";
    auto market_stats = [&](const MarketInstance& m) {
        j["market"] = json{{"goods", m.good_count()}, {"agents", m.agents.size()}, {"size", market_size(m)}};
    };
    if (schema == io::kSystemSchema || (schema.empty() && doc.contains("polys"))) {
        PolynomialSystem sys = io::system_from_json(doc);
        RelationSystem r = reduce(sys);
        Compiled c = compile(sys);
        j["system"] = size_json(system_size(sys));
        j["relations"] = size_json(relation_size(r));
        j["H"] = io::to_json(*r.H);
        market_stats(c.market);
    } else if (schema == io::kRelationsSchema) {
        RelationSystem r = io::relations_from_json(doc);
        j["relations"] = size_json(relation_size(r));
        if (r.homogenized()) market_stats(compile(r).market);
    } else if (schema == io::kMarketSchema || (schema.empty() && doc.contains("g"))) {
        market_stats(io::market_from_json(doc));
    } else if (schema == io::kTraceSchema) {
        GadgetTrace t = io::trace_from_json(doc);
        std::map<std::string, std::size_t> kinds;
        for (auto* r : flatten(t)) ++kinds[std::string(gadget_kind_name(r->kind))];
        j["records"] = kinds;
        j["relations"] = size_json(relation_size(t.relations));
    } else {
        throw Error(ErrorCode::InvalidInput, "stats does not know schema \"" + schema + "\"");
    }
    s.primary(j);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Polynomial systems to Leontief markets: compile, lift, verify, project, audit"};
    app.require_subcommand(1);
    Options opt;
    std::function<void(Session&)> action;
    std::string name;

    auto leaf = [&](CLI::App* parent, const std::string& cmd, const std::string& help, std::size_t min_inputs,
                    std::size_t max_inputs, void (*fn)(Session&)) {
        CLI::App* sub = parent->add_subcommand(cmd, help);
        sub->add_option("inputs", opt.inputs, "input files ('-' for stdin)")->expected(int(min_inputs), int(max_inputs))->required(min_inputs > 0);
        sub->add_option("-o,--out", opt.out, "primary output file (default stdout)");
        sub->add_option("--manifest", opt.manifest, "manifest path (default <out>.manifest.json)");
        sub->add_option("--mode", opt.mode, "exact or tol")->check(CLI::IsMember({"exact", "tol"}));
        sub->add_option("--eps", opt.eps, "tolerance, exact decimal or fraction");
        sub->add_option("--grid", opt.grid, "oracle grid resolution per dimension")->check(CLI::Range(2, 1 << 20));
        sub->add_option("--max-iters", opt.max_iters, "oracle cell cap or tatonnement iterations");
        sub->add_option("--seed", opt.seed, "random seed");
        std::string full = parent == &app ? cmd : parent->get_name() + " " + cmd;
        sub->callback([&, fn, full] {
            action = fn;
            name = full;
        });
        return sub;
    };

    leaf(&app, "compile", "polynomial or relation system -> market (+ --trace)", 1, 1, cmd_compile)
        ->add_option("--trace", opt.trace, "write the gadget trace here");
    leaf(&app, "lift", "trace + solution z -> certificate", 2, 2, cmd_lift);
    leaf(&app, "verify", "market + certificate -> report (exit 1 on failure)", 2, 2, cmd_verify);
    leaf(&app, "project", "trace + certificate -> z", 2, 2, cmd_project);
    leaf(&app, "audit", "trace + certificate -> closed-submarket report", 2, 2, cmd_audit);
    leaf(&app, "stats", "size report for a system, relation system, market or trace", 1, 1, cmd_stats);

    CLI::App* nash = app.add_subcommand("nash", "3-player games");
    nash->require_subcommand(1);
    leaf(nash, "encode", "game -> polynomial system", 1, 1, cmd_nash_encode)
        ->add_flag("--decision", opt.decision, "bound every z by 1/2");
    leaf(nash, "verify", "game + profile -> best-response check", 2, 2, cmd_nash_verify);

    CLI::App* ncp = app.add_subcommand("ncp", "AD-NCP for PLC markets");
    ncp->require_subcommand(1);
    leaf(ncp, "build", "market -> NCP rows", 1, 1, cmd_ncp_build);
    leaf(ncp, "check", "market + candidate (or certificate) -> report", 2, 2, cmd_ncp_check);
    leaf(ncp, "export-etr", "market -> SMT-LIB v2", 1, 1, cmd_ncp_export)
        ->add_flag("--solve", opt.solve, "run $POLYLEON_SMT_SOLVER on the document");

    CLI::App* oracle = app.add_subcommand("oracle", "brute-force reference solvers");
    oracle->require_subcommand(1);
    leaf(oracle, "poly", "grid search for solutions of a system", 1, 1, cmd_oracle_poly);
    leaf(oracle, "market", "grid search over the price simplex", 1, 1, cmd_oracle_market);
    leaf(oracle, "tatonnement", "price adjustment from a start vector", 1, 2, cmd_oracle_tatonnement)
        ->add_option("--step", opt.step, "step size")
        ->check(CLI::PositiveNumber);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError& e) {
        error_json(err, "USAGE", e.what());
        return kUsage;
    }

    Session session(name, opt, out);
    try {
        action(session);
        session.finish();
        return kOk;
    } catch (const Failed&) {
        session.finish();
        return kFailed;
    } catch (const Inconclusive& e) {
        session.finish();
        error_json(err, "INCONCLUSIVE", e.message);
        return kInconclusive;
    } catch (const Error& e) {
        error_json(err, error_code_name(e.code()), e.what());
        return exit_for(e.code());
    } catch (const io::json::exception& e) {
        error_json(err, error_code_name(ErrorCode::Parse), e.what());
        return kUsage;
    } catch (const std::exception& e) {
        error_json(err, "INTERNAL", e.what());
        return kUsage;
    }
}

}  // namespace polyleon::cli
