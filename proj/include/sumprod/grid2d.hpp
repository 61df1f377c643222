#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "sumprod/error.hpp"
#include "sumprod/grid_measure.hpp"
#include "sumprod/numeric.hpp"

namespace sumprod {

struct Cell2D {
    std::int64_t x = 0;
    std::int64_t y = 0;

    friend auto operator<=>(const Cell2D&, const Cell2D&) = default;
};

/// Set of occupied dyadic squares [i1 2^-k, (i1+1) 2^-k) x [i2 2^-k, (i2+1) 2^-k).
struct CellSet2D {
    int level = 0;
    std::vector<Cell2D> cells;

    static CellSet2D from_cells(int level, std::vector<Cell2D> cells)
    {
        std::sort(cells.begin(), cells.end());
        cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
        return CellSet2D{level, std::move(cells)};
    }

    bool contains(Cell2D c) const { return std::binary_search(cells.begin(), cells.end(), c); }
    bool empty() const noexcept { return cells.empty(); }
    std::size_t size() const noexcept { return cells.size(); }

    friend bool operator==(const CellSet2D&, const CellSet2D&) = default;
};

inline CellSet2D coarsen(const CellSet2D& s, int target_level)
{
    if (target_level > s.level) throw ScaleOrderError("cannot refine a cell set");
    if (target_level < 0) throw InvalidArgument("target level must be non-negative");
    const int shift = s.level - target_level;
    std::vector<Cell2D> out;
    out.reserve(s.cells.size());
    for (const auto& c : s.cells) out.push_back({floor_shift(c.x, shift), floor_shift(c.y, shift)});
    return CellSet2D::from_cells(target_level, std::move(out));
}

inline CellSet2D product_cells(const CellSet1D& a, const CellSet1D& b)
{
    if (a.level != b.level) throw ScaleOrderError("product of cell sets on different levels");
    CellSet2D s{a.level, {}};
    s.cells.reserve(a.indices.size() * b.indices.size());
    for (auto x : a.indices) {
        for (auto y : b.indices) s.cells.push_back({x, y});
    }
    return s;
}

/// Planar probability measure on level-k squares, stored sparsely in sorted cell order.
class Grid2DMeasure {
public:
    struct Atom {
        Cell2D cell;
        double weight;
    };

    Grid2DMeasure(int level, std::vector<Atom> atoms) : level_(level), atoms_(std::move(atoms))
    {
        if (level_ < 0) throw InvalidArgument("grid level must be non-negative");
        std::sort(atoms_.begin(), atoms_.end(), [](const Atom& a, const Atom& b) { return a.cell < b.cell; });
        std::vector<Atom> merged;
        merged.reserve(atoms_.size());
        KahanSum total;
        for (const auto& a : atoms_) {
            if (!(a.weight >= 0.0) || !std::isfinite(a.weight)) throw InvalidMeasure("weights must be finite and non-negative");
            total.add(a.weight);
            if (a.weight == 0.0) continue;
            if (!merged.empty() && merged.back().cell == a.cell) {
                merged.back().weight += a.weight;
            } else {
                merged.push_back(a);
            }
        }
        if (merged.empty()) throw InvalidMeasure("measure has no positive weight");
        if (std::abs(total.value() - 1.0) > kMassTolerance) throw InvalidMeasure("planar weights must sum to 1");
        atoms_ = std::move(merged);
    }

    static Grid2DMeasure product(const GridMeasure& a, const GridMeasure& b)
    {
        if (a.level() != b.level()) throw ScaleOrderError("product measure needs equal levels");
        std::vector<Atom> atoms;
        atoms.reserve(a.occupied_cells() * b.occupied_cells());
        a.for_each_atom([&](std::int64_t x, double wx) {
            b.for_each_atom([&](std::int64_t y, double wy) { atoms.push_back({{x, y}, wx * wy}); });
        });
        return Grid2DMeasure(a.level(), std::move(atoms));
    }

    static Grid2DMeasure point_mass(int level, Cell2D c) { return Grid2DMeasure(level, {{c, 1.0}}); }

    int level() const noexcept { return level_; }
    const std::vector<Atom>& atoms() const noexcept { return atoms_; }
    std::size_t occupied_cells() const noexcept { return atoms_.size(); }

    CellSet2D support() const
    {
        CellSet2D s{level_, {}};
        s.cells.reserve(atoms_.size());
        for (const auto& a : atoms_) s.cells.push_back(a.cell);
        return s;
    }

    double mass_of(const CellSet2D& set) const
    {
        if (set.level != level_) throw ScaleOrderError("event level must equal the measure level");
        KahanSum s;
        for (const auto& a : atoms_) {
            if (set.contains(a.cell)) s.add(a.weight);
        }
        return s.value();
    }

private:
    int level_;
    std::vector<Atom> atoms_;
};

inline Grid2DMeasure coarsen(const Grid2DMeasure& m, int target_level)
{
    if (target_level > m.level()) throw ScaleOrderError("cannot refine a planar measure");
    if (target_level < 0) throw InvalidArgument("target level must be non-negative");
    const int shift = m.level() - target_level;
    std::vector<Grid2DMeasure::Atom> out;
    out.reserve(m.atoms().size());
    for (const auto& a : m.atoms()) out.push_back({{floor_shift(a.cell.x, shift), floor_shift(a.cell.y, shift)}, a.weight});
    return Grid2DMeasure(target_level, std::move(out));
}

} // namespace sumprod
