#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "polyleon/rational.hpp"

namespace polyleon {

/// 0-based index of a good in a market.
using GoodId = std::uint32_t;

struct Entry {
    GoodId good;
    Rational amount;
    bool operator==(const Entry&) const = default;
};

/// Leontief agent: endowment W_i and utility min_j x_j / A_ij over A_ij > 0.
/// Both vectors are sparse, sorted by good, without zero entries.
struct Agent {
    std::vector<Entry> endowment;
    std::vector<Entry> leontief;
    std::string label;

    Rational income(std::span<const Rational> prices) const;
    Rational cost(std::span<const Rational> prices) const;
    Rational endowment_of(GoodId g) const;
    Rational leontief_of(GoodId g) const;
    bool operator==(const Agent&) const = default;
};

/// Builds a sparse agent from (good, amount) pairs, merging repeats and
/// dropping zeros.
Agent make_agent(std::vector<Entry> endowment, std::vector<Entry> leontief, std::string label = {});

struct MarketInstance {
    std::vector<std::string> goods;
    std::vector<Agent> agents;

    std::size_t good_count() const { return goods.size(); }
    std::vector<Rational> total_supply() const;
    /// Throws InvalidInput unless g >= 1 and every agent owns and wants something.
    void validate() const;
    bool operator==(const MarketInstance&) const = default;
};

/// Prices plus per-agent utility levels; allocations are x_ij = beta_i A_ij.
struct Certificate {
    std::vector<Rational> prices;
    std::vector<Rational> betas;
    bool operator==(const Certificate&) const = default;
};

enum class DemandStatus { Ok, Unbounded };

struct Demand {
    DemandStatus status = DemandStatus::Ok;
    Rational beta;
    Rational income;
    Rational cost;
};

/// beta_i = income / cost. Zero income and zero cost gives beta = 0; positive
/// income at zero cost is flagged Unbounded.
Demand leontief_demand(const Agent& agent, std::span<const Rational> prices);

struct DenseDemand {
    DemandStatus status = DemandStatus::Ok;
    Rational beta;
    std::vector<Rational> bundle;
};

DenseDemand leontief_demand(std::span<const Rational> endowment, std::span<const Rational> leontief,
                            std::span<const Rational> prices);

enum class ViolationKind {
    Dimension,
    NegativePrice,
    ZeroPrices,
    NegativeBeta,
    UnboundedDemand,
    Optimality,
    Budget,
    Clearing,
};

std::string_view violation_name(ViolationKind kind);

struct Violation {
    ViolationKind kind;
    std::size_t index;  // agent or good, depending on kind
    Rational magnitude;
};

struct VerifyOptions {
    enum class Mode { Exact, Tolerance };
    Mode mode = Mode::Exact;
    Rational eps;
    /// Return after the first violation (report vectors may be incomplete).
    bool stop_at_first = false;

    static VerifyOptions exact() { return {}; }
    static VerifyOptions tolerance(Rational eps) { return {Mode::Tolerance, std::move(eps), false}; }
};

struct VerifyReport {
    bool ok = false;
    std::vector<Rational> budget_residual;    // beta_i * cost_i - income_i
    std::vector<bool> optimal;                // beta_i equals income / cost
    std::vector<Rational> clearing_residual;  // supply_j - demand_j
    std::vector<Violation> violations;
};

VerifyReport verify_equilibrium(const MarketInstance& market, const Certificate& cert,
                                const VerifyOptions& options = VerifyOptions::exact());

/// Z_j = sum_i beta_i A_ij - sum_i W_ij. Throws UnboundedDemand.
std::vector<Rational> excess_demand(const MarketInstance& market, std::span<const Rational> prices);

/// Divides all prices by p_s. Throws ZeroNumeraire.
Certificate normalize(const Certificate& cert, GoodId numeraire);

/// Betas implied by prices; throws UnboundedDemand.
std::vector<Rational> demand_betas(const MarketInstance& market, std::span<const Rational> prices);

/// Encoding size: per agent, bits of (good id, amount) pairs over W and A.
std::size_t market_size(const MarketInstance& market);

/// Floating-point screen for repeated equilibrium tests on one market.
///
/// `certainly_fails` evaluates demand at the given prices with interval
/// bounds and returns true only when the exact check of (p, demand betas)
/// is guaranteed to fail. A false return means "undecided"; callers then run
/// verify_equilibrium.
class PreparedMarket {
public:
    explicit PreparedMarket(const MarketInstance& market);

    /// `prices[j]` is within `errors[j]` (absolute) of the exact price.
    bool certainly_fails(std::span<const double> prices, std::span<const double> errors) const;

    std::size_t good_count() const { return supply_.size(); }

private:
    struct Row {
        std::uint32_t good;
        double amount;
    };
    std::vector<std::uint32_t> w_start_, a_start_;
    std::vector<Row> w_, a_;
    std::vector<double> supply_, supply_err_;
    mutable std::vector<double> lo_, hi_;  // scratch; one caller at a time
};

}  // namespace polyleon
