#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "sumprod/arithmetic.hpp"
#include "sumprod/error.hpp"
#include "sumprod/grid2d.hpp"
#include "sumprod/ifs.hpp"
#include "sumprod/inequalities.hpp"
#include "sumprod/projection2d.hpp"
#include "sumprod/regularity.hpp"

namespace sumprod {

/// Writes to a sibling temporary and renames it over the target.
inline void write_file_atomic(const std::string& path, const std::string& content)
{
    namespace fs = std::filesystem;
    const fs::path target(path);
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw ResourceError("cannot open " + tmp.string() + " for writing");
        os << content;
        os.flush();
        if (!os) throw ResourceError("write to " + tmp.string() + " failed");
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw ResourceError("cannot move output into place at " + target.string());
    }
}

/// Planar set K = (1 + A) x A and axis measure nu = mu built from one IFS on [0, 1].
struct ProjectionSetup {
    GridMeasure axis;      ///< mu at the fine level, also the law of the base heights
    GridMeasure shifted;   ///< mu pushed by x -> x + 1
    Grid2DMeasure planar;  ///< product of shifted and axis
    double regularity_constant = 0.0;
    double s = 0.0;
};

inline ProjectionSetup projection_setup(const AffineIFS& f, int level, double budget = 1e8)
{
    if (!(f.hull_left() >= 0.0 && f.hull_right() <= 1.0)) throw DomainError("attractor must lie in [0, 1]");
    RenderOptions ro;
    ro.cylinder_budget = budget;
    GridMeasure axis = render_measure(f, level, ro);
    const double planar_cells = static_cast<double>(axis.occupied_cells()) * static_cast<double>(axis.occupied_cells());
    if (planar_cells > budget) throw ResourceError("planar measure exceeds the cell budget");
    GridMeasure shifted = pushforward_monotone(axis, MonotoneMap::affine(1.0, 1.0), level);
    Grid2DMeasure planar = Grid2DMeasure::product(shifted, axis);
    const double s = dimension(f);
    const double c = ahlfors_check(axis, s).effective_constant();
    return {std::move(axis), std::move(shifted), std::move(planar), c, s};
}

struct ConditionalEntropyRow {
    int delta_level = 0;
    double epsilon = 0.0;          ///< radial integral used as the exceptional mass
    double conditional_bits = 0.0; ///< H((Y - Z)/X | Z)
    double proof_bound = 0.0;      ///< 2(1-eps)(s-sigma) j - 2 log C - 2 - log 100
    double statement_bound = 0.0;  ///< (1-eps)(min{2s,1} - 2 sigma) j
};

struct ProjectionScan {
    std::vector<ProjectionRow> rows;
    std::vector<ConditionalEntropyRow> conditional;
    double regularity_constant = 0.0;
    double s = 0.0;
    std::vector<double> tube_bounds; ///< (2s - 2 sigma) j - log2(100 C^2) per row
};

inline constexpr double kConditionalWork = 4e9;

/// Tube energies are the maximum over axis bases; conditional entropies use
/// X ~ mu + 1, Y ~ mu, Z ~ mu at input level j + guard.
inline ProjectionScan projection_scan(const AffineIFS& f, std::vector<int> levels, double sigma, int guard = 6,
                                      bool with_conditional = true, double budget = 1e8)
{
    std::sort(levels.begin(), levels.end());
    const int top = levels.back();
    const auto setup = projection_setup(f, top, budget);
    ProjectionScan scan;
    scan.regularity_constant = setup.regularity_constant;
    scan.s = setup.s;
    const double log_c = std::log2(setup.regularity_constant);
    for (int j : levels) {
        ProjectionRow row;
        row.delta_level = j;
        row.sigma = sigma;
        row.threshold = std::exp2(sigma * j);
        row.integral_value = radial_integral(setup.planar, setup.axis, sigma, j);
        double worst = 0.0;
        setup.axis.for_each_atom([&](std::int64_t z, double) {
            worst = std::max(worst, tube_energy(setup.planar, {0.0, cell_centre(z, setup.axis.level())}, j).energy);
        });
        row.tube_energy = worst;
        row.collision_bits = std::max(0.0, -std::log2(worst));
        scan.rows.push_back(row);
        scan.tube_bounds.push_back((2.0 * setup.s - 2.0 * sigma) * j - std::log2(100.0) - 2.0 * log_c);

        const double atoms = static_cast<double>(setup.axis.occupied_cells()) * std::exp2(setup.s * (j + guard - top));
        if (with_conditional && atoms * atoms * atoms <= kConditionalWork) {
            const ConvolutionPlan plan(j + guard, j, guard);
            RenderOptions ro;
            ro.cylinder_budget = budget;
            const auto y = render_measure(f, plan.input_level, ro);
            const auto x = pushforward_monotone(y, MonotoneMap::affine(1.0, 1.0), plan.input_level);
            ConditionalEntropyRow c;
            c.delta_level = j;
            c.epsilon = row.integral_value;
            c.conditional_bits = conditional_entropy_quotient(x, y, y, plan);
            c.proof_bound = 2.0 * (1.0 - c.epsilon) * (setup.s - sigma) * j - 2.0 * log_c - 2.0 - std::log2(100.0);
            c.statement_bound = (1.0 - c.epsilon) * (std::min(2.0 * setup.s, 1.0) - 2.0 * sigma) * j;
            scan.conditional.push_back(c);
        }
    }
    return scan;
}

inline std::vector<RegularityReport> regularity_scan(const AffineIFS& f, std::vector<int> levels, double budget = 1e8)
{
    std::sort(levels.begin(), levels.end());
    RenderOptions ro;
    ro.cylinder_budget = budget;
    std::vector<RegularityReport> out;
    for (int j : levels) out.push_back(ahlfors_check(render_measure(f, j, ro), dimension(f)));
    return out;
}

} // namespace sumprod
