#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "sumprod/error.hpp"
#include "sumprod/grid_measure.hpp"
#include "sumprod/inequalities.hpp"
#include "sumprod/numeric.hpp"
#include "sumprod/regularity.hpp"

namespace sumprod {

struct FuzzCheck {
    std::string name;
    int trials = 0;
    int violations = 0;
    double worst_slack = std::numeric_limits<double>::infinity(); ///< smallest observed slack
};

struct FuzzReport {
    std::vector<FuzzCheck> checks;

    int violations() const
    {
        int n = 0;
        for (const auto& c : checks) n += c.violations;
        return n;
    }
};

/// Random inputs: level in [1, 8], support window of at most 64 cells and
/// Dirichlet weights with concentration drawn from U(0.1, 3).
class MeasureSampler {
public:
    explicit MeasureSampler(std::uint64_t seed) : rng_(seed) {}

    std::mt19937_64& rng() noexcept { return rng_; }

    int level() { return std::uniform_int_distribution<int>(1, 8)(rng_); }

    GridMeasure measure(int level)
    {
        const std::int64_t cells = std::int64_t{1} << level;
        const std::int64_t n = std::uniform_int_distribution<std::int64_t>(1, std::min<std::int64_t>(64, cells))(rng_);
        const std::int64_t offset = std::uniform_int_distribution<std::int64_t>(0, cells - n)(rng_);
        return GridMeasure::normalised(level, offset, dirichlet(static_cast<std::size_t>(n)));
    }

    std::vector<double> dirichlet(std::size_t n)
    {
        const double alpha = std::uniform_real_distribution<double>(0.1, 3.0)(rng_);
        std::gamma_distribution<double> g(alpha, 1.0);
        std::vector<double> w(n);
        double total = 0.0;
        do {
            total = 0.0;
            for (double& x : w) total += (x = g(rng_));
        } while (!(total > 0.0));
        return w;
    }

    /// Event made of support cells kept independently with probability U(0, 1); never empty.
    CellSet1D event(const GridMeasure& m)
    {
        const double keep = std::uniform_real_distribution<double>(0.0, 1.0)(rng_);
        std::bernoulli_distribution coin(keep);
        const auto spt = support(m);
        std::vector<std::int64_t> cells;
        for (auto i : spt.indices) {
            if (coin(rng_)) cells.push_back(i);
        }
        if (cells.empty()) cells.push_back(spt.indices[std::uniform_int_distribution<std::size_t>(0, spt.indices.size() - 1)(rng_)]);
        return CellSet1D::from_indices(m.level(), std::move(cells));
    }

    /// Table with Z = (a, b), W = (a, c), X = g(a), Y = h(a, b, c) over alphabets of size <= 4.
    JointTable submodular_table()
    {
        std::uniform_int_distribution<int> size(1, 4);
        const int na = size(rng_), nb = size(rng_), nc = size(rng_);
        const auto p = dirichlet(static_cast<std::size_t>(na * nb * nc));
        double total = 0.0;
        for (double x : p) total += x;
        std::uniform_int_distribution<int> label(0, 3);
        std::vector<int> g(static_cast<std::size_t>(na));
        for (int& v : g) v = label(rng_);
        std::vector<int> h(p.size());
        for (int& v : h) v = label(rng_);
        std::vector<JointTable::Row> rows;
        std::size_t idx = 0;
        for (int a = 0; a < na; ++a) {
            for (int b = 0; b < nb; ++b) {
                for (int c = 0; c < nc; ++c, ++idx) {
                    rows.push_back({{g[static_cast<std::size_t>(a)]}, {h[idx]}, {a, b}, {a, c}, p[idx] / total});
                }
            }
        }
        return JointTable(std::move(rows));
    }

private:
    std::mt19937_64 rng_;
};

namespace detail {

inline void record(FuzzCheck& c, double slack)
{
    ++c.trials;
    c.worst_slack = std::min(c.worst_slack, slack);
    if (slack < -kInequalitySlack) ++c.violations;
}

} // namespace detail

/// Runs every check `trials` times from one seeded stream.
inline FuzzReport fuzz_inequalities(std::uint64_t seed, int trials)
{
    MeasureSampler sm(seed);
    FuzzCheck submodular{"submodularity"}, monotone{"monotonicity"}, concave_h{"concavity_shannon"},
        concave_col{"concavity_collision"}, frostman{"frostman_entropy_bound"}, restriction{"restriction"};
    for (int t = 0; t < trials; ++t) {
        {
            const auto table = sm.submodular_table();
            double slack;
            try {
                slack = check_submodular(table, Determination::infer(table));
            } catch (const InternalConsistencyError&) {
                slack = -std::numeric_limits<double>::infinity();
            }
            detail::record(submodular, slack);
        }
        {
            const int k = sm.level();
            const auto m = sm.measure(k);
            const int j = std::uniform_int_distribution<int>(0, k)(sm.rng());
            detail::record(monotone, shannon_entropy(m, j) - collision_entropy(m, j));
        }
        {
            const int k = sm.level();
            const auto a = sm.measure(k);
            const auto b = sm.measure(k);
            const double lambda = std::uniform_real_distribution<double>(0.0, 1.0)(sm.rng());
            const auto mix = mixture(a, b, lambda);
            detail::record(concave_h, shannon_entropy(mix) - lambda * shannon_entropy(a) - (1.0 - lambda) * shannon_entropy(b));
            detail::record(concave_col,
                           collision_entropy(mix) - lambda * collision_entropy(a) - (1.0 - lambda) * collision_entropy(b));
        }
        {
            const int k = sm.level();
            const auto m = sm.measure(k);
            const int j = std::uniform_int_distribution<int>(0, k)(sm.rng());
            const double s = std::uniform_real_distribution<double>(0.05, 1.0)(sm.rng());
            const double widen = std::uniform_real_distribution<double>(1.0, 2.0)(sm.rng());
            const double c = std::max(1.0, scale_frostman_constant(m, s, j) * widen);
            double margin;
            try {
                margin = frostman_entropy_bound(m, s, c, j);
            } catch (const InternalConsistencyError&) {
                margin = -std::numeric_limits<double>::infinity();
            }
            detail::record(frostman, margin);
        }
        {
            const int k = sm.level();
            const auto m = sm.measure(k);
            const auto e = sm.event(m);
            const double mass = mass_of(m, e);
            const auto cond = condition(m, e);
            detail::record(restriction, collision_entropy(m) - mass * collision_entropy(cond));
        }
    }
    return FuzzReport{{submodular, monotone, concave_h, concave_col, frostman, restriction}};
}

inline void write_fuzz_csv(std::ostream& os, const FuzzReport& r)
{
    os << "check,trials,violations,worst_slack\n";
    char buf[160];
    for (const auto& c : r.checks) {
        std::snprintf(buf, sizeof buf, "%s,%d,%d,%.9g\n", c.name.c_str(), c.trials, c.violations, c.worst_slack);
        os << buf;
    }
}

} // namespace sumprod
