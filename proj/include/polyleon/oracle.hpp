#pragma once

#include <cstdint>
#include <vector>

#include "polyleon/market.hpp"
#include "polyleon/poly.hpp"

namespace polyleon {

/// Knobs shared by the brute-force solvers. They are incomplete by design:
/// an empty result never certifies that no solution exists.
struct SearchConfig {
    /// Finest subdivision per dimension (cells of width (U - L) / resolution).
    std::size_t resolution = 64;
    /// Gauss-Newton steps per polished cell (poly); Newton steps and pattern
    /// refinement levels below the grid step (market).
    unsigned refine_depth = 30;
    double eps = 1e-6;
    std::size_t max_cells = 2'000'000;
    double max_seconds = 60.0;
    std::uint64_t seed = 1;

    /// Throws InvalidInput unless resolution >= 2 and eps > 0.
    void validate() const;
};

struct PolyGridResult {
    std::vector<std::vector<double>> points;  // lexicographically sorted
    std::size_t cells = 0;
};

/// Interval branch and bound over the box with linear contraction, Gauss-Newton
/// polish on the finest cells, and deduplication. Every returned point lies in
/// the box with max |f_i| <= eps. Throws CapExceeded.
PolyGridResult solve_poly_grid(const PolynomialSystem& system, const SearchConfig& cfg = {});

/// max_j of clipped excess demand: |Z_j| on priced goods, max(Z_j, 0) on
/// free goods. Returns +inf where demand is unbounded.
double clipped_excess_norm(const MarketInstance& market, std::span<const double> prices);

struct MarketGridResult {
    std::vector<std::vector<double>> prices;  // on the simplex, sorted
    std::size_t evaluated = 0;
    std::size_t unbounded = 0;
};

/// Simplex grid at step 1/resolution, then semismooth Newton and
/// pattern-search refinement of the best cells. Returns points with clipped norm <= eps. Throws CapExceeded.
MarketGridResult solve_market_grid(const MarketInstance& market, const SearchConfig& cfg = {});

struct TatonnementResult {
    std::vector<double> prices;
    std::size_t iterations = 0;
    std::size_t restarts = 0;
};

/// p <- max(0, p + step Z(p)), renormalized to the simplex. Unbounded demand
/// or an all-zero vector triggers a seeded restart. Throws NotConverged.
TatonnementResult tatonnement(const MarketInstance& market, std::vector<double> start, double step,
                              std::size_t iters, const SearchConfig& cfg = {});

}  // namespace polyleon
