#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sumprod/error.hpp"
#include "sumprod/numeric.hpp"

namespace sumprod {

/// Probability measure carried by the dyadic cells [i 2^-k, (i+1) 2^-k) of
/// one level k. Weights are stored densely over the tight support window
/// [offset, offset + size), so the first and last weights are positive.
///
/// Instances are immutable once built; all operations below are pure.
class GridMeasure {
public:
    /// Validates a probability vector: non-negative entries summing to one
    /// within kMassTolerance. Leading and trailing zeros are trimmed.
    GridMeasure(int level, std::int64_t offset, std::vector<double> weights)
        : level_(level), offset_(offset), weights_(std::move(weights))
    {
        if (level_ < 0) throw InvalidArgument("grid level must be non-negative");
        KahanSum total;
        for (double w : weights_) {
            if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidMeasure("weights must be finite and non-negative");
            total.add(w);
        }
        if (std::abs(total.value() - 1.0) > kMassTolerance) {
            throw InvalidMeasure("weights sum to " + std::to_string(total.value()) + ", expected 1");
        }
        trim();
    }

    /// Builds a measure from arbitrary non-negative masses by normalising them.
    static GridMeasure normalised(int level, std::int64_t offset, std::vector<double> masses)
    {
        KahanSum total;
        for (double w : masses) {
            if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidMeasure("masses must be finite and non-negative");
            total.add(w);
        }
        const double t = total.value();
        if (!(t > 0.0)) throw ZeroMassEventError("cannot normalise a zero measure");
        for (double& w : masses) w /= t;
        return GridMeasure(level, offset, std::move(masses), Unchecked{});
    }

    static GridMeasure point_mass(int level, std::int64_t index)
    {
        return GridMeasure(level, index, std::vector<double>{1.0});
    }

    /// Point mass on the cell containing x.
    static GridMeasure atom(int level, double x) { return point_mass(level, cell_of(x, level)); }

    /// Uniform measure on the given cell indices.
    static GridMeasure uniform_on(int level, std::span<const std::int64_t> indices)
    {
        if (indices.empty()) throw InvalidArgument("uniform_on needs at least one cell");
        const auto [lo, hi] = std::minmax_element(indices.begin(), indices.end());
        std::vector<double> w(static_cast<std::size_t>(*hi - *lo + 1), 0.0);
        for (auto i : indices) w[static_cast<std::size_t>(i - *lo)] += 1.0;
        return normalised(level, *lo, std::move(w));
    }

    int level() const noexcept { return level_; }
    std::int64_t offset() const noexcept { return offset_; }
    std::int64_t first_index() const noexcept { return offset_; }
    std::int64_t last_index() const noexcept { return offset_ + static_cast<std::int64_t>(weights_.size()) - 1; }
    std::size_t window_size() const noexcept { return weights_.size(); }
    std::span<const double> weights() const noexcept { return weights_; }

    double weight_at(std::int64_t index) const noexcept
    {
        if (index < first_index() || index > last_index()) return 0.0;
        return weights_[static_cast<std::size_t>(index - offset_)];
    }

    double cell_width() const noexcept { return std::ldexp(1.0, -level_); }
    double support_left() const noexcept { return cell_left(first_index(), level_); }
    double support_right() const noexcept { return cell_left(last_index() + 1, level_); }

    std::size_t occupied_cells() const noexcept
    {
        return static_cast<std::size_t>(std::count_if(weights_.begin(), weights_.end(), [](double w) { return w > 0.0; }));
    }

    template <class Fn>
    void for_each_atom(Fn&& fn) const
    {
        for (std::size_t i = 0; i < weights_.size(); ++i) {
            if (weights_[i] > 0.0) fn(offset_ + static_cast<std::int64_t>(i), weights_[i]);
        }
    }

    friend bool operator==(const GridMeasure&, const GridMeasure&) = default;

private:
    struct Unchecked {};

    GridMeasure(int level, std::int64_t offset, std::vector<double> weights, Unchecked)
        : level_(level), offset_(offset), weights_(std::move(weights))
    {
        trim();
    }

    void trim()
    {
        auto first = std::find_if(weights_.begin(), weights_.end(), [](double w) { return w > 0.0; });
        if (first == weights_.end()) throw InvalidMeasure("measure has no positive weight");
        auto last = std::find_if(weights_.rbegin(), weights_.rend(), [](double w) { return w > 0.0; }).base();
        const auto lead = first - weights_.begin();
        if (lead > 0 || last != weights_.end()) {
            weights_ = std::vector<double>(first, last);
            offset_ += lead;
        }
    }

    int level_;
    std::int64_t offset_;
    std::vector<double> weights_;
};

/// Sorted set of occupied cell indices at one level.
struct CellSet1D {
    int level = 0;
    std::vector<std::int64_t> indices;

    static CellSet1D from_indices(int level, std::vector<std::int64_t> indices)
    {
        std::sort(indices.begin(), indices.end());
        indices.erase(std::unique(indices.begin(), indices.end()), indices.end());
        return CellSet1D{level, std::move(indices)};
    }

    bool contains(std::int64_t i) const { return std::binary_search(indices.begin(), indices.end(), i); }
    bool empty() const noexcept { return indices.empty(); }

    friend bool operator==(const CellSet1D&, const CellSet1D&) = default;
};

inline CellSet1D support(const GridMeasure& m)
{
    CellSet1D s{m.level(), {}};
    s.indices.reserve(m.occupied_cells());
    m.for_each_atom([&](std::int64_t i, double) { s.indices.push_back(i); });
    return s;
}

/// Coarse cells of a set at a lower level.
inline CellSet1D coarsen(const CellSet1D& s, int target_level)
{
    if (target_level > s.level) throw ScaleOrderError("cannot refine a cell set");
    if (target_level < 0) throw InvalidArgument("target level must be non-negative");
    const int shift = s.level - target_level;
    CellSet1D out{target_level, {}};
    for (auto i : s.indices) {
        const auto c = floor_shift(i, shift);
        if (out.indices.empty() || out.indices.back() != c) out.indices.push_back(c);
    }
    return out;
}

inline std::size_t covering_number(const CellSet1D& s) noexcept { return s.indices.size(); }

inline void require_target_level(const GridMeasure& m, int target_level)
{
    if (target_level < 0) throw InvalidArgument("target level must be non-negative");
    if (target_level > m.level()) {
        throw ScaleOrderError("target level " + std::to_string(target_level) + " is finer than measure level " +
                              std::to_string(m.level()));
    }
}

/// Each coarse cell receives the compensated sum of the fine cells it contains.
inline GridMeasure coarsen(const GridMeasure& m, int target_level)
{
    require_target_level(m, target_level);
    const int shift = m.level() - target_level;
    if (shift == 0) return m;
    const std::int64_t lo = floor_shift(m.first_index(), shift);
    const std::int64_t hi = floor_shift(m.last_index(), shift);
    std::vector<KahanSum> acc(static_cast<std::size_t>(hi - lo + 1));
    const auto w = m.weights();
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (w[i] > 0.0) acc[static_cast<std::size_t>(floor_shift(m.offset() + static_cast<std::int64_t>(i), shift) - lo)].add(w[i]);
    }
    std::vector<double> out(acc.size());
    for (std::size_t i = 0; i < acc.size(); ++i) out[i] = acc[i].value();
    return GridMeasure::normalised(target_level, lo, std::move(out));
}

/// Shannon entropy in bits of the measure seen through level-j cells.
inline double shannon_entropy(const GridMeasure& m, int target_level)
{
    const GridMeasure c = coarsen(m, target_level);
    KahanSum h;
    for (double p : c.weights()) h.add(entropy_term(p));
    return std::max(0.0, h.value());
}

inline double shannon_entropy(const GridMeasure& m) { return shannon_entropy(m, m.level()); }

/// Collision (Renyi-2) entropy -log2 sum p^2 at level j.
inline double collision_entropy(const GridMeasure& m, int target_level)
{
    const GridMeasure c = coarsen(m, target_level);
    KahanSum s;
    for (double p : c.weights()) s.add(p * p);
    return std::max(0.0, -std::log2(s.value()));
}

inline double collision_entropy(const GridMeasure& m) { return collision_entropy(m, m.level()); }

/// X conditioned on the event "X lies in one of the given cells".
inline GridMeasure condition(const GridMeasure& m, const CellSet1D& event)
{
    if (event.level != m.level()) throw ScaleOrderError("event level must equal the measure level");
    std::vector<double> w(m.window_size(), 0.0);
    bool hit = false;
    for (auto i : event.indices) {
        if (i < m.first_index() || i > m.last_index()) continue;
        const auto k = static_cast<std::size_t>(i - m.offset());
        w[k] = m.weights()[k];
        hit = hit || w[k] > 0.0;
    }
    if (!hit) throw ZeroMassEventError("conditioning event has zero mass");
    return GridMeasure::normalised(m.level(), m.offset(), std::move(w));
}

inline double mass_of(const GridMeasure& m, const CellSet1D& event)
{
    if (event.level != m.level()) throw ScaleOrderError("event level must equal the measure level");
    KahanSum s;
    for (auto i : event.indices) s.add(m.weight_at(i));
    return s.value();
}

/// Mixture lambda*a + (1-lambda)*b of two measures on the same level.
inline GridMeasure mixture(const GridMeasure& a, const GridMeasure& b, double lambda)
{
    if (a.level() != b.level()) throw ScaleOrderError("mixture needs measures on the same level");
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw InvalidArgument("mixture weight must lie in [0,1]");
    const auto lo = std::min(a.first_index(), b.first_index());
    const auto hi = std::max(a.last_index(), b.last_index());
    std::vector<double> w(static_cast<std::size_t>(hi - lo + 1), 0.0);
    for (std::int64_t i = lo; i <= hi; ++i) {
        w[static_cast<std::size_t>(i - lo)] = lambda * a.weight_at(i) + (1.0 - lambda) * b.weight_at(i);
    }
    return GridMeasure::normalised(a.level(), lo, std::move(w));
}

/// Total-variation distance (half the l1 distance) between measures on one level.
inline double total_variation(const GridMeasure& a, const GridMeasure& b)
{
    if (a.level() != b.level()) throw ScaleOrderError("total variation needs measures on the same level");
    const auto lo = std::min(a.first_index(), b.first_index());
    const auto hi = std::max(a.last_index(), b.last_index());
    KahanSum s;
    for (std::int64_t i = lo; i <= hi; ++i) s.add(std::abs(a.weight_at(i) - b.weight_at(i)));
    return 0.5 * s.value();
}

/// Debug dump: header "level,cell_index,weight", one row per occupied cell.
inline void write_csv(std::ostream& os, const GridMeasure& m)
{
    os << "level,cell_index,weight\n";
    char buf[64];
    m.for_each_atom([&](std::int64_t i, double w) {
        std::snprintf(buf, sizeof buf, "%.17g", w);
        os << m.level() << ',' << i << ',' << buf << '\n';
    });
}

} // namespace sumprod
