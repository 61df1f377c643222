#pragma once

// Brute-force reference distributions: every tuple of occupied cells is
// enumerated and its value is binned directly in long double.

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <vector>

#include "sumprod/grid_measure.hpp"

namespace oracle {

using Law = std::map<std::int64_t, long double>;

struct Atom {
    std::int64_t index;
    long double weight;
    long double centre;
    long double left;
};

inline std::vector<Atom> atoms(const sumprod::GridMeasure& m)
{
    std::vector<Atom> out;
    const long double w = std::ldexp(1.0L, -m.level());
    for (std::int64_t i = m.first_index(); i <= m.last_index(); ++i) {
        const double p = m.weight_at(i);
        if (p > 0.0) out.push_back({i, p, (i + 0.5L) * w, i * w});
    }
    return out;
}

inline std::int64_t bin(long double x, int level)
{
    return static_cast<std::int64_t>(std::floor(std::ldexp(x, level)));
}

inline Law sum(const sumprod::GridMeasure& x, const sumprod::GridMeasure& y, int level)
{
    Law law;
    for (const auto& a : atoms(x)) {
        for (const auto& b : atoms(y)) law[bin(a.left + b.left, level)] += a.weight * b.weight;
    }
    return law;
}

inline Law product(const sumprod::GridMeasure& x, const sumprod::GridMeasure& y, int level)
{
    Law law;
    for (const auto& a : atoms(x)) {
        for (const auto& b : atoms(y)) law[bin(a.centre * b.centre, level)] += a.weight * b.weight;
    }
    return law;
}

/// (X + Y) Z with the sum carried as the cell of left(x) + left(y) at the input level.
inline Law sum_then_product(const sumprod::GridMeasure& x, const sumprod::GridMeasure& y, const sumprod::GridMeasure& z,
                            int level)
{
    const long double half = std::ldexp(0.5L, -x.level());
    Law law;
    for (const auto& a : atoms(x)) {
        for (const auto& b : atoms(y)) {
            for (const auto& c : atoms(z)) law[bin((a.left + b.left + half) * c.centre, level)] += a.weight * b.weight * c.weight;
        }
    }
    return law;
}

inline Law quotient(const sumprod::GridMeasure& x, const sumprod::GridMeasure& y, long double z, int level)
{
    Law law;
    for (const auto& a : atoms(x)) {
        for (const auto& b : atoms(y)) law[bin((b.centre - z) / a.centre, level)] += a.weight * b.weight;
    }
    return law;
}

inline long double entropy(const Law& law)
{
    long double h = 0.0L;
    for (const auto& [k, p] : law) {
        if (p > 0.0L) h -= p * std::log2(p);
    }
    return h;
}

/// H((Y - Z)/X | Z) from the joint law of (Z-cell, quotient cell).
inline long double conditional_quotient(const sumprod::GridMeasure& x, const sumprod::GridMeasure& y,
                                        const sumprod::GridMeasure& z, int level)
{
    std::map<std::pair<std::int64_t, std::int64_t>, long double> joint;
    std::map<std::int64_t, long double> marginal;
    for (const auto& c : atoms(z)) {
        for (const auto& a : atoms(x)) {
            for (const auto& b : atoms(y)) {
                const long double p = a.weight * b.weight * c.weight;
                joint[{c.index, bin((b.centre - c.centre) / a.centre, level)}] += p;
                marginal[c.index] += p;
            }
        }
    }
    long double h = 0.0L;
    for (const auto& [k, p] : joint) h -= p * std::log2(p / marginal[k.first]);
    return h;
}

inline long double total_variation(const Law& law, const sumprod::GridMeasure& m)
{
    long double tv = 0.0L;
    for (const auto& [i, p] : law) tv += std::fabs(p - static_cast<long double>(m.weight_at(i)));
    for (std::int64_t i = m.first_index(); i <= m.last_index(); ++i) {
        if (!law.contains(i)) tv += m.weight_at(i);
    }
    return tv / 2.0L;
}

/// Random measure with at most `max_cells` occupied cells inside [lo, hi) at `level`.
inline sumprod::GridMeasure random_measure(std::mt19937_64& rng, int level, double lo, double hi, int max_cells)
{
    const auto first = static_cast<std::int64_t>(std::ceil(std::ldexp(lo, level)));
    const auto last = static_cast<std::int64_t>(std::floor(std::ldexp(hi, level))) - 1;
    std::uniform_int_distribution<int> count(1, max_cells);
    std::uniform_int_distribution<std::int64_t> cell(first, last);
    std::uniform_real_distribution<double> weight(0.01, 1.0);
    const int n = count(rng);
    std::vector<double> w(static_cast<std::size_t>(last - first + 1), 0.0);
    for (int k = 0; k < n; ++k) w[static_cast<std::size_t>(cell(rng) - first)] += weight(rng);
    return sumprod::GridMeasure::normalised(level, first, std::move(w));
}

} // namespace oracle
