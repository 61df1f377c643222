#include <cmath>
#include <numeric>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "sumprod/fuzz.hpp"
#include "sumprod/grid_measure.hpp"
#include "sumprod/ifs.hpp"

using namespace sumprod;

namespace {

GridMeasure weights(int level, std::int64_t offset, std::vector<double> w) { return GridMeasure(level, offset, std::move(w)); }

GridMeasure uniform_cells(int level, std::int64_t first, int n)
{
    std::vector<std::int64_t> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), first);
    return GridMeasure::uniform_on(level, idx);
}

} // namespace

TEST(GridMeasure, RejectsBadWeights)
{
    EXPECT_THROW(weights(2, 0, {0.5, 0.4}), InvalidMeasure);
    EXPECT_THROW(weights(2, 0, {1.5, -0.5}), InvalidMeasure);
    EXPECT_THROW(weights(-1, 0, {1.0}), InvalidArgument);
    EXPECT_THROW(weights(2, 0, {0.0, 0.0}), InvalidMeasure);
}

TEST(GridMeasure, TrimsToTightWindow)
{
    const auto m = weights(3, 2, {0.0, 0.5, 0.0, 0.5, 0.0});
    EXPECT_EQ(m.first_index(), 3);
    EXPECT_EQ(m.last_index(), 5);
    EXPECT_GT(m.weights().front(), 0.0);
    EXPECT_GT(m.weights().back(), 0.0);
    EXPECT_EQ(m.occupied_cells(), 2u);
}

TEST(ShannonEntropy, Examples)
{
    EXPECT_NEAR(shannon_entropy(uniform_cells(2, 0, 4)), 2.0, 1e-12);
    for (int j = 0; j <= 6; ++j) EXPECT_EQ(shannon_entropy(GridMeasure::point_mass(6, 17), j), 0.0);
    EXPECT_NEAR(shannon_entropy(weights(4, 3, {0.5, 0.25, 0.25})), 1.5, 1e-12);
}

TEST(ShannonEntropy, RejectsRefinement)
{
    const auto m = uniform_cells(3, 0, 8);
    EXPECT_THROW(shannon_entropy(m, 4), ScaleOrderError);
    EXPECT_THROW(collision_entropy(m, 4), ScaleOrderError);
    EXPECT_THROW(coarsen(m, 4), ScaleOrderError);
}

TEST(ShannonEntropy, UpperBound)
{
    MeasureSampler sm(11);
    for (int t = 0; t < 300; ++t) {
        const auto m = sm.measure(sm.level());
        const double width = static_cast<double>(m.window_size());
        for (int j = 0; j <= m.level(); ++j) {
            const double h = shannon_entropy(m, j);
            EXPECT_GE(h, 0.0);
            EXPECT_LE(h, j + std::log2(width) + 1.0);
        }
    }
}

TEST(CollisionEntropy, Examples)
{
    EXPECT_NEAR(collision_entropy(uniform_cells(5, 3, 12)), std::log2(12.0), 1e-12);
    EXPECT_EQ(collision_entropy(GridMeasure::point_mass(3, 1)), 0.0);
    EXPECT_NEAR(collision_entropy(weights(1, 0, {0.5, 0.5})), 1.0, 1e-12);
}

TEST(Coarsen, Examples)
{
    const auto u = coarsen(uniform_cells(3, 0, 8), 1);
    EXPECT_EQ(u.level(), 1);
    EXPECT_EQ(u.first_index(), 0);
    ASSERT_EQ(u.window_size(), 2u);
    EXPECT_NEAR(u.weights()[0], 0.5, 1e-15);
    EXPECT_NEAR(u.weights()[1], 0.5, 1e-15);

    const auto p = coarsen(GridMeasure::point_mass(3, 5), 1);
    EXPECT_EQ(p, GridMeasure::point_mass(1, 1));

    const auto q = coarsen(weights(2, 0, {0.1, 0.2, 0.3, 0.4}), 1);
    ASSERT_EQ(q.window_size(), 2u);
    EXPECT_NEAR(q.weights()[0], 0.3, 1e-15);
    EXPECT_NEAR(q.weights()[1], 0.7, 1e-15);
}

TEST(Coarsen, NegativeIndicesFloor)
{
    const auto m = coarsen(weights(2, -3, {0.25, 0.25, 0.25, 0.25}), 1);
    EXPECT_EQ(m.first_index(), -2);
    EXPECT_NEAR(m.weight_at(-2), 0.25, 1e-15);
    EXPECT_NEAR(m.weight_at(-1), 0.5, 1e-15);
    EXPECT_NEAR(m.weight_at(0), 0.25, 1e-15);
}

TEST(Condition, Examples)
{
    const auto u = uniform_cells(2, 0, 4);
    const auto first_two = condition(u, CellSet1D::from_indices(2, {0, 1}));
    EXPECT_EQ(first_two.window_size(), 2u);
    EXPECT_NEAR(first_two.weight_at(0), 0.5, 1e-15);
    EXPECT_NEAR(first_two.weight_at(1), 0.5, 1e-15);

    EXPECT_EQ(condition(u, support(u)), u);

    const auto w = weights(3, 4, {0.5, 0.25, 0.25});
    const auto tail = condition(w, CellSet1D::from_indices(3, {5, 6}));
    EXPECT_NEAR(tail.weight_at(5), 0.5, 1e-15);
    EXPECT_NEAR(tail.weight_at(6), 0.5, 1e-15);
    EXPECT_EQ(tail.weight_at(4), 0.0);
}

TEST(Condition, ZeroMassEvent)
{
    const auto u = uniform_cells(2, 0, 2);
    EXPECT_THROW(condition(u, CellSet1D::from_indices(2, {3})), ZeroMassEventError);
    EXPECT_THROW(condition(u, CellSet1D::from_indices(2, {})), ZeroMassEventError);
}

TEST(CoveringNumber, Examples)
{
    EXPECT_EQ(covering_number(CellSet1D::from_indices(5, {1, 2, 3, 9, 10, 11, 30})), 7u);
    EXPECT_EQ(covering_number(CellSet1D{4, {}}), 0u);
    // Middle-half Cantor: cell count doubles with every two levels.
    const auto cantor = ap_ifs(2, {1, 4});
    for (int k = 1; k <= 9; ++k) {
        const auto m = render_measure(cantor, 2 * k);
        std::size_t naive = 0;
        std::vector<std::int64_t> cells{0};
        for (int g = 0; g < k; ++g) {
            std::vector<std::int64_t> next;
            for (auto c : cells) {
                next.push_back(4 * c);
                next.push_back(4 * c + 2);
            }
            cells = std::move(next);
        }
        naive = cells.size();
        EXPECT_EQ(covering_number(support(m)), naive);
        EXPECT_EQ(naive, std::size_t{1} << k);
        EXPECT_EQ(support(m), CellSet1D::from_indices(2 * k, cells));
    }
}

TEST(Properties, MassConservationUnderCoarsening)
{
    MeasureSampler sm(3);
    for (int t = 0; t < 1000; ++t) {
        const auto m = sm.measure(sm.level());
        for (int j = 0; j <= m.level(); ++j) {
            const auto c = coarsen(m, j);
            EXPECT_NEAR(compensated_sum(c.weights()), 1.0, kMassTolerance);
        }
    }
}

TEST(Properties, CollisionBelowShannon)
{
    MeasureSampler sm(5);
    for (int t = 0; t < 1000; ++t) {
        const auto m = sm.measure(sm.level());
        for (int j = 0; j <= m.level(); ++j) EXPECT_LE(collision_entropy(m, j), shannon_entropy(m, j) + kInequalitySlack);
    }
}

TEST(Properties, EntropyMonotoneUnderCoarsening)
{
    MeasureSampler sm(9);
    for (int t = 0; t < 1000; ++t) {
        const auto m = sm.measure(sm.level());
        for (int j = 1; j <= m.level(); ++j) EXPECT_LE(shannon_entropy(m, j - 1), shannon_entropy(m, j) + kInequalitySlack);
    }
}

TEST(Properties, ShannonConcavity)
{
    MeasureSampler sm(13);
    for (int t = 0; t < 1000; ++t) {
        const int k = sm.level();
        const auto a = sm.measure(k);
        const auto b = sm.measure(k);
        const double lambda = std::uniform_real_distribution<double>(0.0, 1.0)(sm.rng());
        const auto mix = mixture(a, b, lambda);
        EXPECT_GE(shannon_entropy(mix), lambda * shannon_entropy(a) + (1 - lambda) * shannon_entropy(b) - kInequalitySlack);
    }
}

// -log2 sum p^2 is not concave: half a point mass plus half a uniform
// measure on 64 cells has collision entropy near 1.94 bits while the
// average of the parts is 3 bits.
TEST(Properties, CollisionEntropyConcavityCounterexample)
{
    const auto point = GridMeasure::point_mass(6, 0);
    const auto flat = uniform_cells(6, 0, 64);
    const auto mix = mixture(point, flat, 0.5);
    const double expected = -std::log2(std::pow(0.5 + 0.5 / 64, 2) + 63 * std::pow(0.5 / 64, 2));
    EXPECT_NEAR(collision_entropy(mix), expected, 1e-12);
    EXPECT_LT(collision_entropy(mix), 0.5 * collision_entropy(point) + 0.5 * collision_entropy(flat) - 1.0);
    // The power sum itself is convex, which is what survives.
    const auto power = [](const GridMeasure& m) { return std::exp2(-collision_entropy(m)); };
    EXPECT_LE(power(mix), 0.5 * power(point) + 0.5 * power(flat) + 1e-15);
}

TEST(Properties, RestrictionInProofDirection)
{
    MeasureSampler sm(17);
    for (int t = 0; t < 1000; ++t) {
        const auto m = sm.measure(sm.level());
        const auto e = sm.event(m);
        const double mass = mass_of(m, e);
        EXPECT_LE(mass * collision_entropy(condition(m, e)), collision_entropy(m) + kInequalitySlack);
    }
}

TEST(TotalVariation, MixtureDistance)
{
    const auto a = uniform_cells(4, 0, 4);
    const auto b = uniform_cells(4, 4, 4);
    EXPECT_NEAR(total_variation(a, b), 1.0, 1e-15);
    EXPECT_NEAR(total_variation(a, mixture(a, b, 0.25)), 0.75, 1e-15);
    EXPECT_EQ(total_variation(a, a), 0.0);
}

TEST(WriteCsv, Columns)
{
    std::ostringstream os;
    write_csv(os, weights(3, 2, {0.5, 0.0, 0.5}));
    EXPECT_EQ(os.str(), "level,cell_index,weight\n3,2,0.5\n3,4,0.5\n");
}
