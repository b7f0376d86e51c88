#include "polyleon/market.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "polyleon/error.hpp"

namespace polyleon {

namespace {

std::vector<Entry> sparse(std::vector<Entry> entries) {
    std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) { return a.good < b.good; });
    std::vector<Entry> out;
    for (auto& e : entries) {
        if (e.amount.sign() < 0) throw Error(ErrorCode::InvalidInput, "negative endowment or Leontief coefficient");
        if (!out.empty() && out.back().good == e.good)
            out.back().amount += e.amount;
        else
            out.push_back(e);
    }
    std::erase_if(out, [](const Entry& e) { return e.amount.is_zero(); });
    return out;
}

Rational dot(const std::vector<Entry>& entries, std::span<const Rational> prices) {
    Rational sum;
    for (auto& e : entries) sum += e.amount * prices[e.good];
    return sum;
}

Rational lookup(const std::vector<Entry>& entries, GoodId g) {
    for (auto& e : entries)
        if (e.good == g) return e.amount;
    return Rational();
}

}  // namespace

Rational Agent::income(std::span<const Rational> prices) const { return dot(endowment, prices); }
Rational Agent::cost(std::span<const Rational> prices) const { return dot(leontief, prices); }
Rational Agent::endowment_of(GoodId g) const { return lookup(endowment, g); }
Rational Agent::leontief_of(GoodId g) const { return lookup(leontief, g); }

Agent make_agent(std::vector<Entry> endowment, std::vector<Entry> leontief, std::string label) {
    return Agent{sparse(std::move(endowment)), sparse(std::move(leontief)), std::move(label)};
}

std::vector<Rational> MarketInstance::total_supply() const {
    std::vector<Rational> supply(goods.size());
    for (auto& a : agents)
        for (auto& e : a.endowment) supply[e.good] += e.amount;
    return supply;
}

void MarketInstance::validate() const {
    if (goods.empty()) throw Error(ErrorCode::InvalidInput, "market needs at least one good");
    for (std::size_t i = 0; i < agents.size(); ++i) {
        const Agent& a = agents[i];
        if (a.endowment.empty() || a.leontief.empty())
            throw Error(ErrorCode::InvalidInput, "agent " + std::to_string(i) + " must own and want some good");
        for (auto* v : {&a.endowment, &a.leontief})
            for (auto& e : *v) {
                if (e.good >= goods.size())
                    throw Error(ErrorCode::InvalidInput, "agent " + std::to_string(i) + " references good " +
                                                             std::to_string(e.good) + " out of range");
                if (e.amount.sign() <= 0)
                    throw Error(ErrorCode::InvalidInput, "agent " + std::to_string(i) + " has a nonpositive entry");
            }
    }
}

Demand leontief_demand(const Agent& agent, std::span<const Rational> prices) {
    Demand d;
    d.income = agent.income(prices);
    d.cost = agent.cost(prices);
    if (d.cost.sign() > 0) {
        d.beta = d.income / d.cost;
    } else if (d.income.sign() > 0) {
        d.status = DemandStatus::Unbounded;
    }
    return d;
}

DenseDemand leontief_demand(std::span<const Rational> endowment, std::span<const Rational> leontief,
                            std::span<const Rational> prices) {
    if (endowment.size() != prices.size() || leontief.size() != prices.size())
        throw Error(ErrorCode::InvalidInput, "dimension mismatch in leontief_demand");
    std::vector<Entry> w, a;
    for (GoodId j = 0; j < prices.size(); ++j) {
        w.push_back({j, endowment[j]});
        a.push_back({j, leontief[j]});
    }
    Agent agent = make_agent(std::move(w), std::move(a));
    Demand d = leontief_demand(agent, prices);
    DenseDemand out{d.status, d.beta, {}};
    if (d.status == DemandStatus::Ok)
        for (auto& coef : leontief) out.bundle.push_back(d.beta * coef);
    return out;
}

std::string_view violation_name(ViolationKind kind) {
    switch (kind) {
        case ViolationKind::Dimension: return "dimension";
        case ViolationKind::NegativePrice: return "negative_price";
        case ViolationKind::ZeroPrices: return "all_prices_zero";
        case ViolationKind::NegativeBeta: return "negative_beta";
        case ViolationKind::UnboundedDemand: return "unbounded_demand";
        case ViolationKind::Optimality: return "optimality";
        case ViolationKind::Budget: return "budget";
        case ViolationKind::Clearing: return "clearing";
    }
    return "?";
}

VerifyReport verify_equilibrium(const MarketInstance& market, const Certificate& cert, const VerifyOptions& options) {
    VerifyReport report;
    const bool exact = options.mode == VerifyOptions::Mode::Exact;
    const std::size_t g = market.good_count();
    auto violate = [&](ViolationKind kind, std::size_t index, Rational magnitude) {
        report.violations.push_back({kind, index, std::move(magnitude)});
        return options.stop_at_first;
    };
    // |x| within tolerance (exactly zero in exact mode)
    auto small = [&](const Rational& x) { return exact ? x.is_zero() : x.abs() <= options.eps; };

    if (cert.prices.size() != g || cert.betas.size() != market.agents.size()) {
        violate(ViolationKind::Dimension, 0, Rational());
        return report;
    }
    const auto& p = cert.prices;
    bool any_positive = false;
    for (std::size_t j = 0; j < g; ++j) {
        if (p[j].sign() > 0) any_positive = true;
        if (exact ? p[j].sign() < 0 : p[j] < -options.eps)
            if (violate(ViolationKind::NegativePrice, j, -p[j])) return report;
    }
    if (!any_positive && violate(ViolationKind::ZeroPrices, 0, Rational())) return report;

    std::vector<Rational> demand(g);
    report.budget_residual.resize(market.agents.size());
    report.optimal.assign(market.agents.size(), false);
    for (std::size_t i = 0; i < market.agents.size(); ++i) {
        const Agent& agent = market.agents[i];
        const Rational& beta = cert.betas[i];
        if (exact ? beta.sign() < 0 : beta < -options.eps)
            if (violate(ViolationKind::NegativeBeta, i, -beta)) return report;
        Demand d = leontief_demand(agent, p);
        if (d.status == DemandStatus::Unbounded) {
            if (violate(ViolationKind::UnboundedDemand, i, d.income)) return report;
        } else {
            Rational gap = beta - d.beta;
            report.optimal[i] = small(gap);
            if (!report.optimal[i] && violate(ViolationKind::Optimality, i, gap.abs())) return report;
        }
        report.budget_residual[i] = beta * d.cost - d.income;
        if (!small(report.budget_residual[i]) &&
            violate(ViolationKind::Budget, i, report.budget_residual[i].abs()))
            return report;
        for (auto& e : agent.leontief) demand[e.good] += beta * e.amount;
    }

    std::vector<Rational> supply = market.total_supply();
    report.clearing_residual.resize(g);
    for (std::size_t j = 0; j < g; ++j) {
        Rational slack = supply[j] - demand[j];
        report.clearing_residual[j] = slack;
        bool priced = exact ? p[j].sign() > 0 : p[j] > options.eps;
        bool over = exact ? slack.sign() < 0 : slack < -options.eps;
        bool surplus_at_price = priced && !small(slack);
        if ((over || surplus_at_price) && violate(ViolationKind::Clearing, j, slack.abs())) return report;
    }
    report.ok = report.violations.empty();
    return report;
}

std::vector<Rational> demand_betas(const MarketInstance& market, std::span<const Rational> prices) {
    std::vector<Rational> betas;
    betas.reserve(market.agents.size());
    for (std::size_t i = 0; i < market.agents.size(); ++i) {
        Demand d = leontief_demand(market.agents[i], prices);
        if (d.status == DemandStatus::Unbounded)
            throw Error(ErrorCode::UnboundedDemand, "agent " + std::to_string(i) + " (" + market.agents[i].label +
                                                        ") has positive income and zero cost");
        betas.push_back(d.beta);
    }
    return betas;
}

std::vector<Rational> excess_demand(const MarketInstance& market, std::span<const Rational> prices) {
    if (prices.size() != market.good_count()) throw Error(ErrorCode::InvalidInput, "price vector dimension mismatch");
    std::vector<Rational> betas = demand_betas(market, prices);
    std::vector<Rational> z(market.good_count());
    for (std::size_t i = 0; i < market.agents.size(); ++i) {
        for (auto& e : market.agents[i].leontief) z[e.good] += betas[i] * e.amount;
        for (auto& e : market.agents[i].endowment) z[e.good] -= e.amount;
    }
    return z;
}

Certificate normalize(const Certificate& cert, GoodId numeraire) {
    if (numeraire >= cert.prices.size()) throw Error(ErrorCode::InvalidInput, "numeraire out of range");
    const Rational ps = cert.prices[numeraire];
    if (ps.sign() <= 0) throw Error(ErrorCode::ZeroNumeraire, "numeraire price is not positive");
    Certificate out = cert;
    for (auto& p : out.prices) p /= ps;
    return out;
}

std::size_t market_size(const MarketInstance& market) {
    auto id_bits = [](GoodId g) { return std::size_t(std::bit_width(std::uint64_t(g) + 1)); };
    std::size_t total = market.goods.size() + market.agents.size();
    for (auto& a : market.agents)
        for (auto* v : {&a.endowment, &a.leontief})
            for (auto& e : *v) total += id_bits(e.good) + e.amount.bit_size();
    return total;
}

}  // namespace polyleon

namespace polyleon {

namespace {
// Relative slack covering rounding of sums with fewer than kMaxTerms terms.
constexpr double kSlack = 1e-10;
constexpr std::size_t kMaxTerms = 100000;
}  // namespace

PreparedMarket::PreparedMarket(const MarketInstance& market)
    : supply_(market.good_count(), 0.0), supply_err_(market.good_count(), 0.0) {
    for (auto& agent : market.agents) {
        w_start_.push_back(std::uint32_t(w_.size()));
        a_start_.push_back(std::uint32_t(a_.size()));
        for (auto& e : agent.endowment) {
            double x = e.amount.to_double();
            w_.push_back({e.good, x});
            supply_[e.good] += x;
        }
        for (auto& e : agent.leontief) a_.push_back({e.good, e.amount.to_double()});
    }
    w_start_.push_back(std::uint32_t(w_.size()));
    a_start_.push_back(std::uint32_t(a_.size()));
    for (std::size_t j = 0; j < supply_.size(); ++j) supply_err_[j] = supply_[j] * kSlack;
    lo_.resize(supply_.size());
    hi_.resize(supply_.size());
}

bool PreparedMarket::certainly_fails(std::span<const double> p, std::span<const double> err) const {
    const std::size_t g = supply_.size();
    if (p.size() != g || err.size() != g) return false;
    if (w_.size() + a_.size() > kMaxTerms) return false;
    for (std::size_t j = 0; j < g; ++j)
        if (p[j] + err[j] < 0) return true;  // certainly negative price
    std::fill(lo_.begin(), lo_.end(), 0.0);
    std::fill(hi_.begin(), hi_.end(), 0.0);
    const std::size_t agents = w_start_.size() - 1;
    for (std::size_t i = 0; i < agents; ++i) {
        // Exact income lies in income +- (sum W err + rounding), same for cost.
        double income = 0, income_err = 0, income_mag = 0, cost = 0, cost_err = 0, cost_mag = 0;
        for (auto k = w_start_[i]; k < w_start_[i + 1]; ++k) {
            const Row& r = w_[k];
            income += r.amount * p[r.good];
            income_err += r.amount * err[r.good];
            income_mag += r.amount * (std::abs(p[r.good]) + err[r.good]);
        }
        for (auto k = a_start_[i]; k < a_start_[i + 1]; ++k) {
            const Row& r = a_[k];
            cost += r.amount * p[r.good];
            cost_err += r.amount * err[r.good];
            cost_mag += r.amount * (std::abs(p[r.good]) + err[r.good]);
        }
        income_err = income_err * (1 + kSlack) + income_mag * kSlack;
        cost_err = cost_err * (1 + kSlack) + cost_mag * kSlack;
        double cost_lo = cost - cost_err;
        if (cost_lo <= 0) return false;  // zero cost possible: leave to the exact check
        double beta_lo = std::max(0.0, (income - income_err) / (cost + cost_err)) * (1 - kSlack);
        double beta_hi = std::max(0.0, (income + income_err) / cost_lo) * (1 + kSlack);
        for (auto k = a_start_[i]; k < a_start_[i + 1]; ++k) {
            lo_[a_[k].good] += beta_lo * a_[k].amount;
            hi_[a_[k].good] += beta_hi * a_[k].amount;
        }
    }
    for (std::size_t j = 0; j < g; ++j) {
        double dlo = lo_[j] * (1 - kSlack), dhi = hi_[j] * (1 + kSlack);
        double slo = supply_[j] - supply_err_[j], shi = supply_[j] + supply_err_[j];
        if (dlo > shi) return true;                         // over-demand
        if (p[j] - err[j] > 0 && dhi < slo) return true;  // surplus of a priced good
    }
    return false;
}

}  // namespace polyleon
