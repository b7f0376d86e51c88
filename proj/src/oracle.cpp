#include "polyleon/oracle.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>

#include "polyleon/error.hpp"

namespace polyleon {

void SearchConfig::validate() const {
    if (resolution < 2) throw Error(ErrorCode::InvalidInput, "resolution must be at least 2");
    if (!(eps > 0)) throw Error(ErrorCode::InvalidInput, "eps must be positive");
}

namespace {

using Clock = std::chrono::steady_clock;

struct Interval {
    double lo, hi;
    bool contains_zero() const { return lo <= 0 && hi >= 0; }
    double width() const { return hi - lo; }
};

// Widen by a relative margin so round-off never discards a true solution.
Interval widen(Interval a) {
    double m = 1e-12 * (std::fabs(a.lo) + std::fabs(a.hi)) + 1e-300;
    return {a.lo - m, a.hi + m};
}

Interval mul(Interval a, Interval b) {
    double c[4] = {a.lo * b.lo, a.lo * b.hi, a.hi * b.lo, a.hi * b.hi};
    return {*std::min_element(c, c + 4), *std::max_element(c, c + 4)};
}

Interval power(Interval a, unsigned e) {
    if (e == 1) return a;
    if (e % 2 == 0 && a.contains_zero()) {
        double m = std::max(std::pow(a.lo, e), std::pow(a.hi, e));
        return {0, m};
    }
    double x = std::pow(a.lo, e), y = std::pow(a.hi, e);
    return {std::min(x, y), std::max(x, y)};
}

struct Term {
    double coef;
    std::vector<std::pair<std::uint32_t, unsigned>> vars;  // 0-based
};

using Poly = std::vector<Term>;

Interval eval(const Poly& f, const std::vector<Interval>& box, std::uint32_t skip = UINT32_MAX) {
    Interval sum{0, 0};
    for (auto& t : f) {
        Interval v{t.coef, t.coef};
        for (auto [x, e] : t.vars)
            if (x != skip) v = mul(v, power(box[x], e));
        sum = {sum.lo + v.lo, sum.hi + v.hi};
    }
    return widen(sum);
}

double eval(const Poly& f, const std::vector<double>& x) {
    double s = 0;
    for (auto& t : f) {
        double v = t.coef;
        for (auto [i, e] : t.vars) v *= std::pow(x[i], e);
        s += v;
    }
    return s;
}

double partial(const Poly& f, const std::vector<double>& x, std::uint32_t var) {
    double s = 0;
    for (auto& t : f) {
        double v = t.coef;
        bool has = false;
        for (auto [i, e] : t.vars) {
            if (i == var) {
                has = true;
                v *= e * std::pow(x[i], e - 1);
            } else {
                v *= std::pow(x[i], e);
            }
        }
        if (has) s += v;
    }
    return s;
}

// f = v * h + g with v absent from h and g.
struct Linear {
    std::uint32_t var;
    Poly h, g;
};

struct Compiled {
    std::vector<Poly> polys;
    std::vector<std::vector<Linear>> linear;
};

Compiled compile_system(const PolynomialSystem& system) {
    Compiled c;
    for (auto& p : system.polys) {
        Poly f;
        for (auto& m : p.terms()) {
            Term t{m.coefficient.to_double(), {}};
            for (auto [v, e] : m.exponents) t.vars.emplace_back(v - 1, e);
            f.push_back(std::move(t));
        }
        std::vector<Linear> lin;
        for (std::uint32_t v = 0; v < system.n_vars; ++v) {
            Linear l{v, {}, {}};
            bool ok = true, present = false;
            for (auto& t : f) {
                auto it = std::find_if(t.vars.begin(), t.vars.end(), [&](auto& x) { return x.first == v; });
                if (it == t.vars.end()) {
                    l.g.push_back(t);
                } else if (it->second == 1) {
                    present = true;
                    Term r = t;
                    r.vars.erase(r.vars.begin() + (it - t.vars.begin()));
                    l.h.push_back(std::move(r));
                } else {
                    ok = false;
                    break;
                }
            }
            if (ok && present) lin.push_back(std::move(l));
        }
        c.polys.push_back(std::move(f));
        c.linear.push_back(std::move(lin));
    }
    return c;
}

// Narrows the box under |f_i| <= eps; false when it becomes empty.
bool contract(const Compiled& c, std::vector<Interval>& box, double eps) {
    for (int pass = 0; pass < 8; ++pass) {
        bool progress = false;
        for (std::size_t i = 0; i < c.polys.size(); ++i) {
            for (auto& l : c.linear[i]) {
                Interval h = eval(l.h, box), g = eval(l.g, box);
                if (h.contains_zero()) continue;
                // v in ([-eps, eps] - g) / h
                Interval num{-eps - g.hi, eps - g.lo};
                Interval inv{1 / h.hi, 1 / h.lo};
                Interval v = widen(mul(num, inv));
                Interval& b = box[l.var];
                double lo = std::max(b.lo, v.lo), hi = std::min(b.hi, v.hi);
                if (lo > hi) return false;
                if ((lo - b.lo) + (b.hi - hi) > 0.01 * b.width()) progress = true;
                b = {lo, hi};
            }
        }
        if (!progress) break;
    }
    return true;
}

void dedupe_sorted(std::vector<std::vector<double>>& pts, double tol) {
    std::sort(pts.begin(), pts.end());
    std::vector<std::vector<double>> out;
    for (auto& p : pts) {
        bool dup = std::any_of(out.begin(), out.end(), [&](const std::vector<double>& q) {
            for (std::size_t k = 0; k < p.size(); ++k)
                if (std::fabs(p[k] - q[k]) > tol) return false;
            return true;
        });
        if (!dup) out.push_back(p);
    }
    pts = std::move(out);
}

class Deadline {
public:
    explicit Deadline(double seconds) : end_(Clock::now() + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(seconds))) {}
    bool passed() const { return Clock::now() > end_; }

private:
    Clock::time_point end_;
};

}  // namespace

PolyGridResult solve_poly_grid(const PolynomialSystem& system, const SearchConfig& cfg) {
    system.validate();
    cfg.validate();
    const std::size_t n = system.n_vars;
    const Compiled c = compile_system(system);
    std::vector<Interval> root(n);
    std::vector<double> min_width(n);
    for (std::size_t j = 0; j < n; ++j) {
        root[j] = {system.bounds[j].lower.to_double(), system.bounds[j].upper.to_double()};
        min_width[j] = root[j].width() / double(cfg.resolution);
    }

    auto residual = [&](const std::vector<double>& x) {
        double r = 0;
        for (auto& f : c.polys) r = std::max(r, std::fabs(eval(f, x)));
        return r;
    };
    auto in_bounds = [&](const std::vector<double>& x) {
        for (std::size_t j = 0; j < n; ++j)
            if (x[j] < root[j].lo || x[j] > root[j].hi) return false;
        return true;
    };
    auto polish = [&](std::vector<double> x) {
        Eigen::MatrixXd J(c.polys.size(), n);
        Eigen::VectorXd F(c.polys.size());
        for (unsigned it = 0; it < cfg.refine_depth; ++it) {
            for (std::size_t i = 0; i < c.polys.size(); ++i) {
                F(i) = eval(c.polys[i], x);
                for (std::size_t j = 0; j < n; ++j) J(i, j) = partial(c.polys[i], x, std::uint32_t(j));
            }
            if (F.lpNorm<Eigen::Infinity>() <= 1e-14) break;
            Eigen::VectorXd step = J.completeOrthogonalDecomposition().solve(-F);
            double moved = 0;
            for (std::size_t j = 0; j < n; ++j) {
                double v = std::clamp(x[j] + step(j), root[j].lo, root[j].hi);
                moved = std::max(moved, std::fabs(v - x[j]));
                x[j] = v;
            }
            if (moved <= 1e-16) break;
        }
        return x;
    };

    PolyGridResult result;
    Deadline deadline(cfg.max_seconds);
    std::vector<std::vector<Interval>> stack{root};
    while (!stack.empty()) {
        std::vector<Interval> box = std::move(stack.back());
        stack.pop_back();
        if (++result.cells > cfg.max_cells)
            throw Error(ErrorCode::CapExceeded, "solve_poly_grid exceeded " + std::to_string(cfg.max_cells) + " cells");
        if ((result.cells & 1023) == 0 && deadline.passed())
            throw Error(ErrorCode::CapExceeded, "solve_poly_grid exceeded the time cap");
        if (!contract(c, box, cfg.eps)) continue;
        bool excluded = false;
        for (auto& f : c.polys) {
            Interval v = eval(f, box);
            if (v.lo > cfg.eps || v.hi < -cfg.eps) {
                excluded = true;
                break;
            }
        }
        if (excluded) continue;

        std::size_t widest = 0;
        double ratio = 0;
        for (std::size_t j = 0; j < n; ++j) {
            double r = min_width[j] > 0 ? box[j].width() / min_width[j] : 0;
            if (r > ratio) ratio = r, widest = j;
        }
        if (ratio <= 1) {
            std::vector<double> mid(n);
            for (std::size_t j = 0; j < n; ++j) mid[j] = 0.5 * (box[j].lo + box[j].hi);
            std::vector<double> x = polish(mid);
            if (in_bounds(x) && residual(x) <= cfg.eps)
                result.points.push_back(std::move(x));
            else if (residual(mid) <= cfg.eps)
                result.points.push_back(std::move(mid));
            continue;
        }
        double m = 0.5 * (box[widest].lo + box[widest].hi);
        std::vector<Interval> upper = box;
        upper[widest].lo = m;
        box[widest].hi = m;
        stack.push_back(std::move(upper));
        stack.push_back(std::move(box));
    }
    dedupe_sorted(result.points, std::max(1e-7, 10 * cfg.eps));
    return result;
}

namespace {

// Excess demand Z(p); false where some demand is unbounded.
bool excess(const MarketInstance& market, std::span<const double> p, std::vector<double>& z) {
    z.assign(market.good_count(), 0.0);
    for (auto& a : market.agents) {
        double income = 0, cost = 0;
        for (auto& e : a.endowment) {
            double w = e.amount.to_double();
            income += w * p[e.good];
            z[e.good] -= w;
        }
        for (auto& e : a.leontief) cost += e.amount.to_double() * p[e.good];
        if (cost <= 0) {
            if (income > 0) return false;
            continue;
        }
        double beta = income / cost;
        for (auto& e : a.leontief) z[e.good] += beta * e.amount.to_double();
    }
    return true;
}

// Residual of the complementarity problem p >= 0, Z <= 0, p Z = 0 on the
// simplex: min(p_j, -Z_j) per good, then sum(p) - 1.
bool ncp_residual(const MarketInstance& market, std::span<const double> p, Eigen::VectorXd& r) {
    std::vector<double> z;
    if (!excess(market, p, z)) return false;
    const std::size_t g = p.size();
    r.resize(Eigen::Index(g + 1));
    double sum = 0;
    for (std::size_t j = 0; j < g; ++j) {
        r[Eigen::Index(j)] = std::min(p[j], -z[j]);
        sum += p[j];
    }
    r[Eigen::Index(g)] = sum - 1;
    return true;
}

// Semismooth Newton with a finite-difference Jacobian and backtracking.
void newton_refine(const MarketInstance& market, std::vector<double>& p, unsigned iters) {
    const std::size_t g = p.size();
    Eigen::VectorXd r, rh;
    if (!ncp_residual(market, p, r)) return;
    Eigen::MatrixXd J(Eigen::Index(g + 1), Eigen::Index(g));
    for (unsigned it = 0; it < iters && r.norm() > 1e-15; ++it) {
        for (std::size_t k = 0; k < g; ++k) {
            std::vector<double> q = p;
            const double h = 1e-7 * std::max(1.0, std::fabs(p[k]));
            q[k] += h;
            if (!ncp_residual(market, q, rh)) return;
            J.col(Eigen::Index(k)) = (rh - r) / h;
        }
        Eigen::VectorXd step = J.completeOrthogonalDecomposition().solve(-r);
        double t = 1;
        bool moved = false;
        for (int back = 0; back < 30 && !moved; ++back, t /= 2) {
            std::vector<double> q(g);
            for (std::size_t k = 0; k < g; ++k) q[k] = std::max(0.0, p[k] + t * step[Eigen::Index(k)]);
            if (ncp_residual(market, q, rh) && rh.norm() < r.norm()) {
                p = std::move(q);
                r = rh;
                moved = true;
            }
        }
        if (!moved) break;
    }
    // Snap round-off prices to zero so free goods are recognized as such.
    double sum = 0;
    for (double& v : p) sum += v = v < 1e-12 ? 0.0 : v;
    if (sum > 0)
        for (double& v : p) v /= sum;
}

}  // namespace

double clipped_excess_norm(const MarketInstance& market, std::span<const double> p) {
    std::vector<double> z;
    if (!excess(market, p, z)) return std::numeric_limits<double>::infinity();
    double norm = 0;
    for (std::size_t j = 0; j < z.size(); ++j) norm = std::max(norm, p[j] > 0 ? std::fabs(z[j]) : std::max(z[j], 0.0));
    return norm;
}

MarketGridResult solve_market_grid(const MarketInstance& market, const SearchConfig& cfg) {
    market.validate();
    cfg.validate();
    const std::size_t g = market.good_count(), res = cfg.resolution;
    // Number of simplex grid points: C(res + g - 1, g - 1).
    double count = 1;
    for (std::size_t k = 1; k < g; ++k) count = count * double(res + k) / double(k);
    if (count > double(cfg.max_cells))
        throw Error(ErrorCode::CapExceeded, "price grid has " + std::to_string(std::llround(count)) + " points");

    MarketGridResult result;
    std::vector<std::pair<double, std::vector<double>>> near;
    const std::size_t keep = 16;
    std::vector<std::size_t> k(g, 0);
    k[g - 1] = res;
    std::vector<double> p(g);
    Deadline deadline(cfg.max_seconds);
    // Iterate all compositions of res into g parts.
    while (true) {
        for (std::size_t j = 0; j < g; ++j) p[j] = double(k[j]) / double(res);
        ++result.evaluated;
        if ((result.evaluated & 1023) == 0 && deadline.passed())
            throw Error(ErrorCode::CapExceeded, "solve_market_grid exceeded the time cap");
        double norm = clipped_excess_norm(market, p);
        if (std::isinf(norm)) {
            ++result.unbounded;
        } else if (norm <= cfg.eps) {
            result.prices.push_back(p);
        } else {
            near.emplace_back(norm, p);
            if (near.size() > 4 * keep) {
                std::nth_element(near.begin(), near.begin() + keep, near.end());
                near.resize(keep);
            }
        }
        // next composition: move one unit from the last nonzero slot leftwards
        if (g == 1) break;
        std::size_t last = g - 1;
        while (last > 0 && k[last] == 0) --last;
        if (last == 0) break;
        std::size_t tail = k[last];
        k[last] = 0;
        k[last - 1] += 1;
        k[g - 1] = tail - 1;
    }

    std::sort(near.begin(), near.end());
    if (near.size() > keep) near.resize(keep);
    for (auto& [norm0, start] : near) {
        std::vector<double> q = start;
        double best = norm0;
        std::vector<double> polished = start;
        newton_refine(market, polished, cfg.refine_depth);
        if (double v = clipped_excess_norm(market, polished); v < best) best = v, q = std::move(polished);
        double step = 1.0 / double(res);
        for (unsigned level = 0; level <= cfg.refine_depth && best > cfg.eps; ++level) {
            bool improved = true;
            while (improved && best > cfg.eps) {
                improved = false;
                for (std::size_t a = 0; a < g && !improved; ++a)
                    for (std::size_t b = 0; b < g && !improved; ++b) {
                        if (a == b || q[b] < step) continue;
                        std::vector<double> r = q;
                        r[a] += step;
                        r[b] -= step;
                        double v = clipped_excess_norm(market, r);
                        ++result.evaluated;
                        if (v < best) best = v, q = std::move(r), improved = true;
                    }
            }
            step /= 2;
        }
        if (best <= cfg.eps) result.prices.push_back(std::move(q));
    }
    dedupe_sorted(result.prices, 1e-9);
    return result;
}

TatonnementResult tatonnement(const MarketInstance& market, std::vector<double> start, double step,
                              std::size_t iters, const SearchConfig& cfg) {
    market.validate();
    const std::size_t g = market.good_count();
    if (start.size() != g) throw Error(ErrorCode::InvalidInput, "start price vector has the wrong dimension");
    if (!(step > 0)) throw Error(ErrorCode::InvalidInput, "step must be positive");
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> jitter(0.0, 1.0 / double(g));
    TatonnementResult r;
    std::vector<double>& p = r.prices;
    p = std::move(start);
    auto normalize = [&] {
        double s = 0;
        for (double& v : p) s += v = std::max(v, 0.0);
        if (!(s > 0)) return false;
        for (double& v : p) v /= s;
        return true;
    };
    auto restart = [&] {
        ++r.restarts;
        for (double& v : p) v += jitter(rng);
        normalize();
    };
    if (!normalize()) restart();

    std::vector<double> z(g);
    for (r.iterations = 0; r.iterations < iters; ++r.iterations) {
        bool unbounded = false;
        std::fill(z.begin(), z.end(), 0.0);
        for (auto& a : market.agents) {
            double income = 0, cost = 0;
            for (auto& e : a.endowment) {
                income += e.amount.to_double() * p[e.good];
                z[e.good] -= e.amount.to_double();
            }
            for (auto& e : a.leontief) cost += e.amount.to_double() * p[e.good];
            if (cost <= 0) {
                if (income > 0) unbounded = true;
                continue;
            }
            for (auto& e : a.leontief) z[e.good] += income / cost * e.amount.to_double();
        }
        if (unbounded) {
            restart();
            continue;
        }
        double norm = 0;
        for (std::size_t j = 0; j < g; ++j) norm = std::max(norm, p[j] > 0 ? std::fabs(z[j]) : std::max(z[j], 0.0));
        if (norm <= cfg.eps) return r;
        for (std::size_t j = 0; j < g; ++j) p[j] += step * z[j];
        if (!normalize()) restart();
    }
    throw Error(ErrorCode::NotConverged, "tatonnement did not converge in " + std::to_string(iters) + " iterations");
}

}  // namespace polyleon
