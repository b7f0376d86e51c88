#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "polyleon/market.hpp"
#include "polyleon/poly.hpp"

namespace polyleon {

/// One linear piece sum_j U_j x_j + T of a PLC utility.
struct UtilityPiece {
    std::vector<Rational> U;  // dense over goods
    Rational T;
    bool operator==(const UtilityPiece&) const = default;
};

/// One facet sum_j D_j x^s_j <= sum_j C_j x^r_j + T of a PLC production set.
struct ProductionPiece {
    std::vector<Rational> D;
    std::vector<Rational> C;
    Rational T;
    bool operator==(const ProductionPiece&) const = default;
};

struct PLCAgent {
    std::vector<Rational> endowment;
    std::vector<UtilityPiece> pieces;
    std::vector<Rational> shares;  // Theta_if, one per firm
    bool operator==(const PLCAgent&) const = default;
};

struct PLCFirm {
    std::vector<ProductionPiece> pieces;
    std::vector<GoodId> produces;  // S_f
    std::vector<GoodId> consumes;  // R_f
    bool operator==(const PLCFirm&) const = default;
};

struct PLCMarket {
    std::vector<std::string> goods;
    std::vector<PLCAgent> agents;
    std::vector<PLCFirm> firms;

    std::size_t good_count() const { return goods.size(); }
    /// Share columns sum to 1, S_f and R_f disjoint, entries nonnegative,
    /// at least one agent, some zero T per utility and per firm.
    void validate() const;
    bool operator==(const PLCMarket&) const = default;
};

/// Leontief agents as PLC: one piece per desired good, U = 1/A_ij, T = 0.
PLCMarket plc_from_leontief(const MarketInstance& market);

/// Leontief production x^s_a = min_j x^r_j / D_j as one facet per input.
PLCFirm leontief_firm(std::size_t good_count, GoodId output, const std::vector<Entry>& inputs);

/// Variable layout of AD-NCP; ids are 1-based polynomial variables.
class NCPLayout {
public:
    explicit NCPLayout(const PLCMarket& market);

    VarIndex p(std::size_t j) const { return VarIndex(1 + j); }
    VarIndex x(std::size_t i, std::size_t j) const { return VarIndex(x_ + i * g_ + j); }
    VarIndex xs(std::size_t f, std::size_t j) const { return VarIndex(xs_ + f * g_ + j); }
    VarIndex xr(std::size_t f, std::size_t j) const { return VarIndex(xr_ + f * g_ + j); }
    VarIndex lambda(std::size_t i) const { return VarIndex(lambda_ + i); }
    VarIndex gamma(std::size_t i, std::size_t k) const { return VarIndex(gamma_[i] + k); }
    VarIndex delta(std::size_t f, std::size_t k) const { return VarIndex(delta_[f] + k); }
    VarIndex u(std::size_t i) const { return VarIndex(u_ + i); }
    VarIndex phi(std::size_t f) const { return VarIndex(phi_ + f); }

    std::size_t var_count() const { return total_; }
    const std::string& name(VarIndex v) const { return names_[v - 1]; }

private:
    std::size_t g_, x_, xs_, xr_, lambda_, u_, phi_, total_;
    std::vector<std::size_t> gamma_, delta_;
    std::vector<std::string> names_;
};

enum class RowKind {
    Complementary,  // g >= 0 and v * g = 0
    Inequality,     // g >= 0
    Equality,       // g = 0
};

struct NCPRow {
    std::string family;  // utility, budget, clearing, gamma_sum, price_sum, production, ...
    std::string label;
    RowKind kind = RowKind::Inequality;
    Polynomial g;
    VarIndex complement = 0;
};

struct NCPInstance {
    PLCMarket market;
    NCPLayout layout;
    std::vector<NCPRow> rows;
};

NCPInstance build_ncp(const PLCMarket& market);

/// Values of every AD-NCP variable in named blocks.
struct NCPCandidate {
    std::vector<Rational> p;
    std::vector<std::vector<Rational>> x;   // agents x goods
    std::vector<std::vector<Rational>> xs;  // firms x goods
    std::vector<std::vector<Rational>> xr;
    std::vector<Rational> lambda;
    std::vector<std::vector<Rational>> gamma;  // agents x pieces
    std::vector<std::vector<Rational>> delta;  // firms x pieces
    std::vector<Rational> u;
    std::vector<Rational> phi;

    /// Flat vector in layout order; throws InvalidInput on dimension mismatch.
    std::vector<Rational> flatten(const NCPInstance& instance) const;
    bool operator==(const NCPCandidate&) const = default;
};

struct NCPViolation {
    std::size_t row;  // index into rows, or rows.size() + var - 1 for sign
    std::string what;
    Rational magnitude;
};

struct NCPReport {
    bool ok = false;
    std::vector<NCPViolation> violations;
};

NCPReport check_ncp(const NCPInstance& instance, const NCPCandidate& candidate,
                    const VerifyOptions& options = VerifyOptions::exact());

/// Extends a verified Leontief certificate to an AD-NCP candidate of
/// plc_from_leontief(market): p scaled to sum 1, x = beta A, u = beta,
/// lambda = 1 / cost, gamma_ij = lambda p_j A_ij. Throws InvalidCertificate
/// when an agent has zero cost.
NCPCandidate extend_to_ncp(const MarketInstance& market, const Certificate& cert);

/// Leontief certificate read off a candidate: prices p, betas u.
Certificate project_from_ncp(const NCPCandidate& candidate);

/// SMT-LIB v2 sentence asserting the AD-NCP system over nonnegative reals,
/// one assert per row family, integer coefficients only.
std::string export_etr(const NCPInstance& instance);

/// Runs the solver named by POLYLEON_SMT_SOLVER on a document; empty when
/// the variable is unset. Returns the first line of solver output.
std::optional<std::string> run_external_solver(const std::string& document);

}  // namespace polyleon
