#pragma once

#include <optional>
#include <string>
#include <vector>

#include "polyleon/market.hpp"
#include "polyleon/poly.hpp"
#include "polyleon/reduce.hpp"

namespace polyleon {

/// Linear price form over market goods: sum coef * p_good.
struct GoodTerm {
    Rational coef;
    GoodId good;
    bool operator==(const GoodTerm&) const = default;
};
using GoodSide = std::vector<GoodTerm>;

/// price = numerator(p) / p_s^ps_power, where the polynomial's variable v
/// stands for the price of good v - 1.
struct PriceFormula {
    Polynomial numerator;
    unsigned ps_power = 0;
    bool operator==(const PriceFormula&) const = default;
};

enum class GadgetKind { Numeraire, EQ, LIN, QD, Conv, Comb, Spl };

std::string_view gadget_kind_name(GadgetKind kind);

struct GadgetRecord {
    std::string name;  // "rel3", "rel3/conv1", "rel3/p6", ...
    GadgetKind kind = GadgetKind::EQ;
    /// Index of the relation in R' (absent for the numeraire record).
    std::optional<std::size_t> relation;
    /// Enforced relation for EQ/LIN records: sum(left) = sum(right).
    GoodSide left, right;
    std::vector<std::size_t> agents;
    std::vector<GoodId> goods;      // goods created by this record
    std::vector<GoodId> exclusive;  // subset of goods touched only inside this subtree
    std::vector<std::pair<GoodId, PriceFormula>> formulas;
    /// Devices move goods across their boundary and are not closed on their
    /// own; every other record is a closed submarket.
    bool closed = true;
    std::vector<GadgetRecord> children;

    bool operator==(const GadgetRecord&) const = default;
};

struct GadgetTrace {
    RelationSystem relations;               // R'
    std::optional<PolynomialSystem> source;  // F, when compiled from a system
    GoodId numeraire_good = 0;
    GadgetRecord numeraire;
    std::vector<GadgetRecord> records;  // one per relation, in relation order

    /// Market good of relation variable v (1-based); the numeraire maps to N.
    static GoodId good_of(VarId v) { return GoodId(v - 1); }
    bool operator==(const GadgetTrace&) const = default;
};

struct Compiled {
    MarketInstance market;
    GadgetTrace trace;
};

/// Incremental builder; exposed so gadgets can be instantiated standalone.
class MarketBuilder {
public:
    GoodId add_good(std::string label);
    std::size_t add_agent(std::vector<Entry> endowment, std::vector<Entry> leontief, std::string label);
    MarketInstance& market() { return market_; }
    MarketInstance take() { return std::move(market_); }

private:
    MarketInstance market_;
};

/// Equality gadget p_a = p_b with a fresh exclusive good.
GadgetRecord build_eq(MarketBuilder& mb, const std::string& name, GoodId a, GoodId b, GoodId numeraire);

/// Two-sided linear gadget sum(left) = sum(right), coefficients >= 0.
GadgetRecord build_lin(MarketBuilder& mb, const std::string& name, GoodSide left, GoodSide right,
                       GoodId numeraire);

/// Product gadget p_a = p_b p_c / p_s built from two converters, a combiner,
/// a splitter and their linear side conditions.
GadgetRecord build_qd(MarketBuilder& mb, const std::string& name, GoodId a, GoodId b, GoodId c,
                      GoodId numeraire, const Rational& H);

/// R' -> market + trace.
Compiled compile(const RelationSystem& relations);
Compiled compile(const PolynomialSystem& system);

/// Prices for every market good given prices of the relation goods and the
/// numeraire (internal goods from the trace formulas).
std::vector<Rational> complete_prices(const GadgetTrace& trace, std::size_t good_count,
                                      std::span<const Rational> relation_prices);

/// Lift a solution z of F (original variables) to an exact equilibrium.
/// Throws ResidualNonzero, BoundViolated, or CapacityExceeded.
Certificate lift(const GadgetTrace& trace, const MarketInstance& market, std::span<const Rational> z);

/// Lift from a full relation assignment (numeraire included).
Certificate lift_relation_prices(const GadgetTrace& trace, const MarketInstance& market,
                                 std::span<const Rational> relation_prices);

/// Checks the certificate and returns z_j = p_j / p_s for the original
/// variables. Throws InvalidCertificate.
std::vector<Rational> project(const GadgetTrace& trace, const MarketInstance& market, const Certificate& cert,
                              const VerifyOptions& options = VerifyOptions::exact());

struct Imbalance {
    std::string record;
    GoodId good;
    Rational amount;  // consumption - endowment inside the record
};

struct AuditReport {
    std::size_t records_checked = 0;
    std::vector<Imbalance> imbalances;
    bool ok() const { return imbalances.empty(); }
};

/// Net consumption minus endowment per good inside every closed record.
AuditReport audit_closed(const GadgetTrace& trace, const MarketInstance& market, const Certificate& cert);

struct ExclusivityViolation {
    std::string record;
    GoodId good;
    std::size_t agent;
};

/// Exclusive goods that appear in some agent outside their record's subtree.
std::vector<ExclusivityViolation> check_exclusivity(const GadgetTrace& trace, const MarketInstance& market);

/// Answers, for many relation-price assignments on one compiled market:
/// does (complete_prices(rp), demand betas) pass verify_equilibrium exactly?
/// A floating screen discards assignments that provably fail; everything
/// else goes through the exact check, so answers are exact.
class EquilibriumProbe {
public:
    EquilibriumProbe(const GadgetTrace& trace, const MarketInstance& market);

    bool operator()(std::span<const Rational> relation_prices);

    std::size_t screened() const { return screened_; }
    std::size_t exact_checks() const { return exact_; }

private:
    struct Term {
        double coef;
        std::uint32_t vars[3];
        unsigned degree;
    };
    struct Formula {
        GoodId good;
        std::vector<Term> terms;
        unsigned ps_power;
    };
    const GadgetTrace& trace_;
    const MarketInstance& market_;
    PreparedMarket prepared_;
    std::vector<Formula> formulas_;
    std::vector<double> p_, err_;
    std::size_t screened_ = 0, exact_ = 0;
};

/// Every record, depth first, in trace order (numeraire first).
std::vector<const GadgetRecord*> flatten(const GadgetTrace& trace);

}  // namespace polyleon
