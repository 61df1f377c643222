#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <vector>

#include "sumprod/error.hpp"
#include "sumprod/grid2d.hpp"
#include "sumprod/grid_measure.hpp"
#include "sumprod/numeric.hpp"

namespace sumprod {

struct RegularityReport {
    double exponent = 0.0;
    double frostman_constant = 0.0;
    double lower_constant = 0.0;
    double upper_regular_constant = 0.0;
    int level = 0;
    std::vector<int> scales_tested;

    double effective_constant() const noexcept { return std::max(frostman_constant, lower_constant); }
};

struct RegularityOptions {
    std::uint64_t max_cells = std::uint64_t{1} << 26;
};

namespace detail {

inline void require_exponent(double s, double hi)
{
    if (!(s > 0.0 && s <= hi)) throw InvalidArgument("exponent must lie in (0, " + std::to_string(hi) + "]");
}

/// Compensated prefix masses over the measure window: mass of [b, e) = at(e) - at(b).
class PrefixMass {
public:
    explicit PrefixMass(const GridMeasure& m) : offset_(m.first_index()), hi_(m.window_size() + 1, 0.0)
    {
        KahanSum s;
        const auto w = m.weights();
        for (std::size_t i = 0; i < w.size(); ++i) {
            s.add(w[i]);
            hi_[i + 1] = s.value();
        }
    }

    /// Mass of cells first..last inclusive, clipped to the window.
    double range(std::int64_t first, std::int64_t last) const
    {
        const auto n = static_cast<std::int64_t>(hi_.size()) - 1;
        const auto b = std::clamp<std::int64_t>(first - offset_, 0, n);
        const auto e = std::clamp<std::int64_t>(last + 1 - offset_, 0, n);
        if (e <= b) return 0.0;
        return hi_[static_cast<std::size_t>(e)] - hi_[static_cast<std::size_t>(b)];
    }

private:
    std::int64_t offset_;
    std::vector<double> hi_;
};

} // namespace detail

/// max over radii r = 2^-j (0 <= j <= level) and centres at window cell centres
/// of mu(B(x, r)) / r^s. The ball around cell c of radius R cells meets c-R..c+R.
inline double frostman_constant(const GridMeasure& m, double s)
{
    detail::require_exponent(s, 1.0);
    const detail::PrefixMass pm(m);
    const int k = m.level();
    double best = 0.0;
    for (int j = 0; j <= k; ++j) {
        const std::int64_t radius = std::int64_t{1} << (k - j);
        const double scale = std::exp2(s * j);
        double top = 0.0;
        for (auto c = m.first_index(); c <= m.last_index(); ++c) top = std::max(top, pm.range(c - radius, c + radius));
        best = std::max(best, top * scale);
    }
    return best;
}

/// Single-scale constant max_I mu(I) / 2^{-sj} over level-j cells I.
inline double scale_frostman_constant(const GridMeasure& m, double s, int j)
{
    detail::require_exponent(s, 1.0);
    const GridMeasure c = coarsen(m, j);
    const double top = *std::max_element(c.weights().begin(), c.weights().end());
    return top * std::exp2(s * j);
}

/// max over occupied centres and dyadic radii r <= diam(spt) of r^s / mu(B(x, r)).
inline double lower_constant(const GridMeasure& m, double s)
{
    detail::require_exponent(s, 1.0);
    const detail::PrefixMass pm(m);
    const int k = m.level();
    const double diam = m.support_right() - m.support_left();
    double best = 0.0;
    for (int j = 0; j <= k; ++j) {
        const double r = std::ldexp(1.0, -j);
        if (r > diam) continue;
        const std::int64_t radius = std::int64_t{1} << (k - j);
        double low = 1.0;
        m.for_each_atom([&](std::int64_t c, double) { low = std::min(low, pm.range(c - radius, c + radius)); });
        best = std::max(best, std::pow(r, s) / low);
    }
    return best;
}

/// max over dyadic r = 2^-a <= R = 2^-b and occupied centres of
/// N_r(K inside B(x, R)) (r/R)^s, counting level-a cells of K that meet the ball.
inline double upper_regular_constant(const CellSet1D& k, double s, const RegularityOptions& opt = {})
{
    detail::require_exponent(s, 2.0);
    if (k.empty()) return 0.0;
    const int level = k.level;
    const auto lo = k.indices.front();
    const auto window = static_cast<std::uint64_t>(k.indices.back() - lo + 1);
    if (window > opt.max_cells) throw ResourceError("upper regularity scan window exceeds the cell budget");
    double best = 0.0;
    for (int a = 0; a <= level; ++a) {
        const int shift = level - a;
        const auto coarse = coarsen(k, a);
        const auto clo = coarse.indices.front();
        std::vector<std::int64_t> count(static_cast<std::size_t>(coarse.indices.back() - clo + 2), 0);
        for (auto i : coarse.indices) count[static_cast<std::size_t>(i - clo + 1)] = 1;
        for (std::size_t i = 1; i < count.size(); ++i) count[i] += count[i - 1];
        auto occupied = [&](std::int64_t first, std::int64_t last) {
            const auto n = static_cast<std::int64_t>(count.size()) - 1;
            const auto b = std::clamp<std::int64_t>(first - clo, 0, n);
            const auto e = std::clamp<std::int64_t>(last + 1 - clo, 0, n);
            return e <= b ? 0 : count[static_cast<std::size_t>(e)] - count[static_cast<std::size_t>(b)];
        };
        for (int b = 0; b <= a; ++b) {
            const std::int64_t radius = std::int64_t{1} << (level - b);
            const double factor = std::exp2(-s * (a - b));
            std::int64_t top = 0;
            for (auto c : k.indices) {
                top = std::max(top, occupied(floor_shift(c - radius, shift), floor_shift(c + radius, shift)));
            }
            best = std::max(best, static_cast<double>(top) * factor);
        }
    }
    return best;
}

/// Planar version with sup-norm balls (squares of half-side R), which contain the Euclidean ones.
inline double upper_regular_constant(const CellSet2D& k, double s, const RegularityOptions& opt = {})
{
    detail::require_exponent(s, 2.0);
    if (k.empty()) return 0.0;
    const int level = k.level;
    double best = 0.0;
    for (int a = 0; a <= level; ++a) {
        const int shift = level - a;
        const auto coarse = coarsen(k, a);
        std::int64_t x0 = INT64_MAX, x1 = INT64_MIN, y0 = INT64_MAX, y1 = INT64_MIN;
        for (const auto& c : coarse.cells) {
            x0 = std::min(x0, c.x);
            x1 = std::max(x1, c.x);
            y0 = std::min(y0, c.y);
            y1 = std::max(y1, c.y);
        }
        const auto w = static_cast<std::size_t>(x1 - x0 + 2);
        const auto h = static_cast<std::size_t>(y1 - y0 + 2);
        if (static_cast<double>(w) * static_cast<double>(h) > static_cast<double>(opt.max_cells)) {
            throw ResourceError("planar regularity scan window exceeds the cell budget");
        }
        std::vector<std::int64_t> pre(w * h, 0);
        for (const auto& c : coarse.cells) pre[static_cast<std::size_t>(c.x - x0 + 1) * h + static_cast<std::size_t>(c.y - y0 + 1)] = 1;
        for (std::size_t i = 1; i < w; ++i) {
            for (std::size_t j = 1; j < h; ++j) pre[i * h + j] += pre[(i - 1) * h + j] + pre[i * h + j - 1] - pre[(i - 1) * h + j - 1];
        }
        auto occupied = [&](std::int64_t xa, std::int64_t xb, std::int64_t ya, std::int64_t yb) {
            const auto bx = static_cast<std::size_t>(std::clamp<std::int64_t>(xa - x0, 0, static_cast<std::int64_t>(w) - 1));
            const auto ex = static_cast<std::size_t>(std::clamp<std::int64_t>(xb + 1 - x0, 0, static_cast<std::int64_t>(w) - 1));
            const auto by = static_cast<std::size_t>(std::clamp<std::int64_t>(ya - y0, 0, static_cast<std::int64_t>(h) - 1));
            const auto ey = static_cast<std::size_t>(std::clamp<std::int64_t>(yb + 1 - y0, 0, static_cast<std::int64_t>(h) - 1));
            if (ex <= bx || ey <= by) return std::int64_t{0};
            return pre[ex * h + ey] - pre[bx * h + ey] - pre[ex * h + by] + pre[bx * h + by];
        };
        for (int b = 0; b <= a; ++b) {
            const std::int64_t radius = std::int64_t{1} << (level - b);
            const double factor = std::exp2(-s * (a - b));
            std::int64_t top = 0;
            for (const auto& c : k.cells) {
                top = std::max(top, occupied(floor_shift(c.x - radius, shift), floor_shift(c.x + radius, shift),
                                             floor_shift(c.y - radius, shift), floor_shift(c.y + radius, shift)));
            }
            best = std::max(best, static_cast<double>(top) * factor);
        }
    }
    return best;
}

inline RegularityReport ahlfors_check(const GridMeasure& m, double s, const RegularityOptions& opt = {})
{
    RegularityReport r;
    r.exponent = s;
    r.level = m.level();
    r.frostman_constant = frostman_constant(m, s);
    r.lower_constant = lower_constant(m, s);
    r.upper_regular_constant = upper_regular_constant(support(m), s, opt);
    for (int j = 0; j <= m.level(); ++j) r.scales_tested.push_back(j);
    return r;
}

inline void write_regularity_csv(std::ostream& os, const std::vector<RegularityReport>& rows)
{
    os << "exponent,frostman_c,lower_c,upper_c,level\n";
    char buf[160];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%.9g,%.9g,%.9g,%.9g,%d\n", r.exponent, r.frostman_constant, r.lower_constant,
                      r.upper_regular_constant, r.level);
        os << buf;
    }
}

} // namespace sumprod
