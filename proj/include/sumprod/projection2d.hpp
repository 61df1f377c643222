#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <ostream>
#include <vector>

#include "sumprod/error.hpp"
#include "sumprod/grid2d.hpp"
#include "sumprod/grid_measure.hpp"
#include "sumprod/numeric.hpp"

namespace sumprod {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

inline Point cell_centre(Cell2D c, int level) { return {cell_centre(c.x, level), cell_centre(c.y, level)}; }

/// Centre of the level-j square containing p.
inline Point snap(Point p, int level)
{
    return {cell_centre(cell_of(p.x, level), level), cell_centre(cell_of(p.y, level), level)};
}

namespace detail {

inline void require_delta_level(int cells_level, int delta_level)
{
    if (delta_level < 0) throw InvalidArgument("delta level must be non-negative");
    if (delta_level > cells_level) throw ScaleOrderError("delta level is finer than the cell set");
}

inline void require_unit(Point theta)
{
    if (std::abs(std::hypot(theta.x, theta.y) - 1.0) > 1e-9) throw InvalidArgument("direction must be a unit vector");
}

inline void require_axis_base(Point base)
{
    if (base.x != 0.0) throw InvalidArgument("base point must lie on the vertical axis");
}

/// Euclidean distance from p to the closed square of cell c.
inline double distance_to_cell(Point p, Cell2D c, int level)
{
    const double x0 = cell_left(c.x, level), x1 = cell_left(c.x + 1, level);
    const double y0 = cell_left(c.y, level), y1 = cell_left(c.y + 1, level);
    const double dx = std::max({x0 - p.x, 0.0, p.x - x1});
    const double dy = std::max({y0 - p.y, 0.0, p.y - y1});
    return std::hypot(dx, dy);
}

inline void require_separation(const CellSet2D& k, Point base)
{
    for (const auto& c : k.cells) {
        if (distance_to_cell(base, c, k.level) < 1.0) throw SeparationError("base point is closer than 1 to the cell set");
    }
}

inline std::int64_t orthogonal_fibre(Point p, Point theta, int level)
{
    return cell_of(p.x * theta.x + p.y * theta.y, level);
}

/// Uniform arc cell of the direction from base to p on the unit circle.
inline std::int64_t radial_fibre(Point base, Point p, int level)
{
    return cell_of(std::atan2(p.y - base.y, p.x - base.x), level);
}

template <class Fibre>
std::map<std::int64_t, std::int64_t> fibre_counts(const CellSet2D& coarse, Fibre&& fibre)
{
    std::map<std::int64_t, std::int64_t> counts;
    for (const auto& c : coarse.cells) ++counts[fibre(cell_centre(c, coarse.level))];
    return counts;
}

} // namespace detail

/// Number of level-j cells of K in the pi_theta fibre of x: cells whose
/// projected centre lands in the same level-j cell of the line as x does.
inline std::int64_t multiplicity(const CellSet2D& k, Point theta, Point x, int delta_level)
{
    detail::require_delta_level(k.level, delta_level);
    detail::require_unit(theta);
    const auto coarse = coarsen(k, delta_level);
    const auto target = detail::orthogonal_fibre(snap(x, delta_level), theta, delta_level);
    std::int64_t n = 0;
    for (const auto& c : coarse.cells) {
        if (detail::orthogonal_fibre(cell_centre(c, delta_level), theta, delta_level) == target) ++n;
    }
    return n;
}

/// Cells of K (at K's level) whose fibre multiplicity is at least n.
inline CellSet2D high_multiplicity_set(const CellSet2D& k, Point theta, double n, int delta_level)
{
    detail::require_delta_level(k.level, delta_level);
    detail::require_unit(theta);
    if (!(n >= 1.0)) throw InvalidArgument("multiplicity threshold must be at least 1");
    const auto coarse = coarsen(k, delta_level);
    auto fibre = [&](Point p) { return detail::orthogonal_fibre(p, theta, delta_level); };
    const auto counts = detail::fibre_counts(coarse, fibre);
    CellSet2D out{k.level, {}};
    const int shift = k.level - delta_level;
    for (const auto& c : k.cells) {
        const Cell2D cc{floor_shift(c.x, shift), floor_shift(c.y, shift)};
        if (static_cast<double>(counts.at(fibre(cell_centre(cc, delta_level)))) >= n) out.cells.push_back(c);
    }
    return out;
}

/// Number of level-j cells of K whose direction from base shares y's arc cell.
inline std::int64_t radial_multiplicity(const CellSet2D& k, Point base, Point y, int delta_level)
{
    detail::require_delta_level(k.level, delta_level);
    detail::require_axis_base(base);
    detail::require_separation(k, base);
    const auto coarse = coarsen(k, delta_level);
    const auto target = detail::radial_fibre(base, snap(y, delta_level), delta_level);
    std::int64_t n = 0;
    for (const auto& c : coarse.cells) {
        if (detail::radial_fibre(base, cell_centre(c, delta_level), delta_level) == target) ++n;
    }
    return n;
}

inline CellSet2D high_radial_multiplicity_set(const CellSet2D& k, Point base, double n, int delta_level)
{
    detail::require_delta_level(k.level, delta_level);
    detail::require_axis_base(base);
    detail::require_separation(k, base);
    if (!(n >= 1.0)) throw InvalidArgument("multiplicity threshold must be at least 1");
    const auto coarse = coarsen(k, delta_level);
    auto fibre = [&](Point p) { return detail::radial_fibre(base, p, delta_level); };
    const auto counts = detail::fibre_counts(coarse, fibre);
    CellSet2D out{k.level, {}};
    const int shift = k.level - delta_level;
    for (const auto& c : k.cells) {
        const Cell2D cc{floor_shift(c.x, shift), floor_shift(c.y, shift)};
        if (static_cast<double>(counts.at(fibre(cell_centre(cc, delta_level)))) >= n) out.cells.push_back(c);
    }
    return out;
}

/// P(x, y) = (1/x, y/x) on [1, 10] x [-10, 10].
inline Point projective_transform(Point p)
{
    if (!(p.x >= 1.0 && p.x <= 10.0 && p.y >= -10.0 && p.y <= 10.0)) {
        throw DomainError("projective transform is defined on [1,10] x [-10,10]");
    }
    return {1.0 / p.x, p.y / p.x};
}

/// sum over axis bases (0, z) of nu(z) times the mass of the cells of mu2
/// inside B(0, 10) whose radial multiplicity from the base is >= 2^{sigma j}.
inline double radial_integral(const Grid2DMeasure& mu2, const GridMeasure& nu, double sigma, int delta_level)
{
    if (!(sigma >= 0.0)) throw InvalidArgument("sigma must be non-negative");
    detail::require_delta_level(mu2.level(), delta_level);
    const Grid2DMeasure coarse = coarsen(mu2, delta_level);
    const CellSet2D spt = coarse.support();
    const double threshold = std::exp2(sigma * delta_level);
    KahanSum total;
    nu.for_each_atom([&](std::int64_t zi, double wz) {
        const Point base{0.0, cell_centre(zi, nu.level())};
        detail::require_separation(spt, base);
        auto fibre = [&](Point p) { return detail::radial_fibre(base, p, delta_level); };
        const auto counts = detail::fibre_counts(spt, fibre);
        KahanSum high;
        for (const auto& a : coarse.atoms()) {
            const Point p = cell_centre(a.cell, delta_level);
            if (std::hypot(p.x, p.y) > 10.0) continue;
            if (static_cast<double>(counts.at(fibre(p))) >= threshold) high.add(a.weight);
        }
        total.add(wz * high.value());
    });
    return std::clamp(total.value(), 0.0, 1.0);
}

struct TubeEnergy {
    double energy = 0.0;
    double collision_bits = 0.0;
    std::size_t tubes = 0;
};

/// Radial delta-tubes through base are pull-backs of arc cells; returns sum_T rho(T)^2.
inline TubeEnergy tube_energy(const Grid2DMeasure& rho, Point base, int delta_level)
{
    if (delta_level < 0) throw InvalidArgument("delta level must be non-negative");
    detail::require_axis_base(base);
    detail::require_separation(rho.support(), base);
    std::map<std::int64_t, KahanSum> tubes;
    for (const auto& a : rho.atoms()) {
        tubes[detail::radial_fibre(base, cell_centre(a.cell, rho.level()), delta_level)].add(a.weight);
    }
    KahanSum e;
    for (const auto& [t, m] : tubes) e.add(m.value() * m.value());
    TubeEnergy out;
    out.energy = e.value();
    out.collision_bits = std::max(0.0, -std::log2(out.energy));
    out.tubes = tubes.size();
    return out;
}

/// Probability of the high radial-multiplicity part and the measure conditioned on its complement.
struct LowMultiplicityPart {
    double high_mass = 0.0;
    Grid2DMeasure low;
};

inline LowMultiplicityPart low_multiplicity_part(const Grid2DMeasure& mu2, Point base, double sigma, int delta_level)
{
    const CellSet2D spt = mu2.support();
    const auto high = high_radial_multiplicity_set(spt, base, std::exp2(sigma * delta_level), delta_level);
    std::vector<Grid2DMeasure::Atom> keep;
    KahanSum high_mass, low_mass;
    for (const auto& a : mu2.atoms()) {
        if (high.contains(a.cell)) {
            high_mass.add(a.weight);
        } else {
            low_mass.add(a.weight);
            keep.push_back(a);
        }
    }
    if (keep.empty()) throw ZeroMassEventError("no low-multiplicity mass remains");
    for (auto& a : keep) a.weight /= low_mass.value();
    return {high_mass.value(), Grid2DMeasure(mu2.level(), std::move(keep))};
}

/// Compares the radial multiplicity of every level-j cell of K from base (0, t)
/// with the orthogonal multiplicity of P(K) in the direction normal to (1, t).
struct ConjugationReport {
    double max_ratio = 1.0;       ///< worst max/min ratio of the two counts
    double mean_abs_log2 = 0.0;   ///< average |log2(radial / orthogonal)|
    std::size_t cells = 0;
};

inline ConjugationReport conjugation_check(const CellSet2D& k, Point base, int delta_level)
{
    detail::require_delta_level(k.level, delta_level);
    detail::require_axis_base(base);
    detail::require_separation(k, base);
    const auto coarse = coarsen(k, delta_level);
    std::vector<Cell2D> image;
    image.reserve(k.cells.size());
    for (const auto& c : k.cells) {
        const Point q = projective_transform(cell_centre(c, k.level));
        image.push_back({cell_of(q.x, k.level), cell_of(q.y, k.level)});
    }
    const CellSet2D pk = coarsen(CellSet2D::from_cells(k.level, std::move(image)), delta_level);
    const double t = base.y;
    const Point theta{-t / std::hypot(1.0, t), 1.0 / std::hypot(1.0, t)};

    auto radial = [&](Point p) { return detail::radial_fibre(base, p, delta_level); };
    auto orth = [&](Point p) { return detail::orthogonal_fibre(p, theta, delta_level); };
    const auto radial_counts = detail::fibre_counts(coarse, radial);
    const auto orth_counts = detail::fibre_counts(pk, orth);

    ConjugationReport r;
    KahanSum logs;
    for (const auto& c : coarse.cells) {
        const Point p = cell_centre(c, delta_level);
        const Point q = snap(projective_transform(p), delta_level);
        const auto it = orth_counts.find(orth(q));
        const double mo = it == orth_counts.end() ? 1.0 : static_cast<double>(it->second);
        const double mr = static_cast<double>(radial_counts.at(radial(p)));
        r.max_ratio = std::max(r.max_ratio, std::max(mo, mr) / std::min(mo, mr));
        logs.add(std::abs(std::log2(mr / mo)));
        ++r.cells;
    }
    r.mean_abs_log2 = r.cells ? logs.value() / static_cast<double>(r.cells) : 0.0;
    return r;
}

struct ProjectionRow {
    int delta_level = 0;
    double sigma = 0.0;
    double threshold = 0.0;
    double integral_value = 0.0;
    double tube_energy = 0.0;
    double collision_bits = 0.0;
};

inline void write_projection_csv(std::ostream& os, const std::vector<ProjectionRow>& rows)
{
    os << "level,sigma,threshold,integral_value,tube_energy,collision_bits\n";
    char buf[256];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%d,%.9g,%.9g,%.9g,%.9g,%.9g\n", r.delta_level, r.sigma, r.threshold,
                      r.integral_value, r.tube_energy, r.collision_bits);
        os << buf;
    }
}

} // namespace sumprod
