#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "cli.hpp"
#include "polyleon/error.hpp"
#include "polyleon/gadgets.hpp"
#include "polyleon/io.hpp"
#include "polyleon/nash.hpp"
#include "polyleon/ncp.hpp"
#include "polyleon/oracle.hpp"
#include "polyleon/reduce.hpp"

namespace py = pybind11;
using namespace polyleon;

namespace {

// Documents cross the boundary as JSON text; the Python side wraps them in
// dicts.
io::json doc(const std::string& text) { return io::parse(text); }
std::string text(const io::json& j) { return j.dump(); }

VerifyOptions options(const std::string& mode, const std::string& eps) {
    if (mode == "exact") return VerifyOptions::exact();
    if (mode == "tol") return VerifyOptions::tolerance(Rational::parse(eps));
    throw Error(ErrorCode::InvalidInput, "mode must be 'exact' or 'tol'");
}

}  // namespace

PYBIND11_MODULE(_polyleon, m) {
    m.doc() = "Exact compiler from polynomial systems to Leontief exchange markets";

    static py::exception<Error> error(m, "PolyleonError", PyExc_ValueError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::set_error(error, (std::string(error_code_name(e.code())) + ": " + e.what()).c_str());
        }
    });

    m.def("reduce", [](const std::string& system) { return text(io::to_json(reduce(io::system_from_json(doc(system))))); },
          py::arg("system"));
    m.def(
        "compile",
        [](const std::string& input) {
            io::json j = doc(input);
            Compiled c = io::schema_of(j) == io::kRelationsSchema ? compile(io::relations_from_json(j))
                                                                   : compile(io::system_from_json(j));
            return py::make_tuple(text(io::to_json(c.market)), text(io::to_json(c.trace)));
        },
        py::arg("system"), "Returns (market, trace) JSON texts.");
    m.def(
        "lift",
        [](const std::string& trace, const std::vector<std::string>& z) {
            GadgetTrace t = io::trace_from_json(doc(trace));
            std::vector<Rational> values;
            for (auto& s : z) values.push_back(Rational::parse(s));
            return text(io::to_json(lift(t, compile(t.relations).market, values)));
        },
        py::arg("trace"), py::arg("z"));
    m.def(
        "verify",
        [](const std::string& market, const std::string& cert, const std::string& mode, const std::string& eps) {
            MarketInstance mk = io::market_from_json(doc(market));
            return text(io::to_json(verify_equilibrium(mk, io::certificate_from_json(doc(cert)), options(mode, eps)), mk));
        },
        py::arg("market"), py::arg("certificate"), py::arg("mode") = "exact", py::arg("eps") = "1e-9");
    m.def(
        "project",
        [](const std::string& trace, const std::string& cert) {
            GadgetTrace t = io::trace_from_json(doc(trace));
            auto z = project(t, compile(t.relations).market, io::certificate_from_json(doc(cert)));
            std::vector<std::string> out;
            for (auto& r : z) out.push_back(r.to_string());
            return out;
        },
        py::arg("trace"), py::arg("certificate"));
    m.def(
        "audit_ok",
        [](const std::string& trace, const std::string& cert) {
            GadgetTrace t = io::trace_from_json(doc(trace));
            return audit_closed(t, compile(t.relations).market, io::certificate_from_json(doc(cert))).ok();
        },
        py::arg("trace"), py::arg("certificate"));
    m.def(
        "encode_ne",
        [](const std::string& game, bool decision) {
            Game3 g = normalize_payoffs(io::game_from_json(doc(game)));
            return text(io::to_json(decision ? encode_decision_ne(g) : encode_ne(g)));
        },
        py::arg("game"), py::arg("decision") = false);
    m.def(
        "export_etr",
        [](const std::string& market) {
            io::json j = doc(market);
            PLCMarket plc = io::schema_of(j) == io::kPLCMarketSchema ? io::plc_market_from_json(j)
                                                                      : plc_from_leontief(io::market_from_json(j));
            return export_etr(build_ncp(plc));
        },
        py::arg("market"));
    m.def(
        "solve_poly_grid",
        [](const std::string& system, std::size_t resolution, double eps) {
            SearchConfig cfg;
            cfg.resolution = resolution;
            cfg.eps = eps;
            return solve_poly_grid(io::system_from_json(doc(system)), cfg).points;
        },
        py::arg("system"), py::arg("resolution") = 64, py::arg("eps") = 1e-6);
    m.def(
        "run_cli",
        [](const std::vector<std::string>& args) {
            std::ostringstream out, err;
            int code;
            {
                py::gil_scoped_release release;
                code = cli::run(args, out, err);
            }
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"), "Runs the command line tool in-process; returns (exit_code, stdout, stderr).");
}
