#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "sumprod/ifs.hpp"
#include "sumprod/inequalities.hpp"
#include "sumprod/regularity.hpp"

using namespace sumprod;

TEST(Rational, ParsesAndReduces)
{
    EXPECT_EQ(parse_rational("2/8"), Rational(1, 4));
    EXPECT_EQ(parse_rational("3"), Rational(3));
    EXPECT_EQ(parse_rational("1/-2"), Rational(-1, 2));
    EXPECT_EQ(Rational(6, 4).str(), "3/2");
    EXPECT_THROW(parse_rational("1/0"), InvalidArgument);
    EXPECT_THROW(parse_rational("x/2"), InvalidArgument);
    EXPECT_THROW(parse_rational("1/"), InvalidArgument);
    EXPECT_TRUE(Rational(1, 3) < Rational(1, 2));
}

TEST(ApIfs, CantorMaps)
{
    const auto f = ap_ifs(2, {1, 4});
    ASSERT_EQ(f.size(), 2u);
    const auto maps = f.maps();
    EXPECT_DOUBLE_EQ(maps[0](1.0), 0.25);
    EXPECT_DOUBLE_EQ(maps[1](0.0), 0.5);
    EXPECT_DOUBLE_EQ(maps[1](1.0), 0.75);
    EXPECT_DOUBLE_EQ(dimension(f), 0.5);
    EXPECT_DOUBLE_EQ(f.weights()[0], 0.5);
    EXPECT_GE(f.hull_left(), 0.0);
    EXPECT_LT(f.hull_right(), 1.0);
}

TEST(ApIfs, Dimensions)
{
    EXPECT_NEAR(dimension(ap_ifs(4, {1, 4})), 1.0, 1e-15);
    EXPECT_NEAR(dimension(ap_ifs(16, {1, 32})), 0.8, 1e-15);
    EXPECT_NEAR(dimension(ap_ifs(3, {1, 3})), 1.0, 1e-15);
    EXPECT_NEAR(dimension(ap_ifs(2, {1, 9})), std::log(2.0) / std::log(9.0), 1e-15);
    EXPECT_NEAR(dimension(ap_ifs(2, {1, 9})), 0.3155, 1e-4);
}

TEST(ApIfs, RejectsOverlapAndDegenerate)
{
    EXPECT_THROW(ap_ifs(2, {2, 3}), InvalidArgument);
    EXPECT_THROW(ap_ifs(4, {1, 3}), InvalidArgument);
    EXPECT_THROW(ap_ifs(1, {1, 4}), InvalidArgument);
    EXPECT_THROW(ap_ifs(2, {0, 1}), InvalidArgument);
    EXPECT_THROW(AffineIFS::uniform(Rational(1, 2), {Rational(0), Rational(1, 10), Rational(1, 2)}), InvalidArgument);
    EXPECT_NO_THROW(AffineIFS::uniform(Rational(1, 2), {Rational(0), Rational(1, 4)}));
    EXPECT_THROW(AffineIFS(Rational(1, 4), {Rational(0), Rational(1, 2)}, {0.5, 0.6}), InvalidArgument);
}

TEST(ParseIfsSpec, Forms)
{
    const auto f = parse_ifs_spec("ap:N=16,c=1/32");
    EXPECT_EQ(f.size(), 16u);
    EXPECT_EQ(f.ratio(), Rational(1, 32));
    EXPECT_THROW(parse_ifs_spec("ap:N=1,c=1/4"), InvalidArgument);
    EXPECT_THROW(parse_ifs_spec("ap:N=2,c=0.25"), InvalidArgument);
    EXPECT_THROW(parse_ifs_spec("ap:N=2"), InvalidArgument);
    EXPECT_THROW(parse_ifs_spec("cantor:N=2,c=1/4"), InvalidArgument);
    EXPECT_THROW(parse_ifs_spec("ap:N=2,c=1/4,d=3"), InvalidArgument);
    EXPECT_THROW(parse_ifs_spec("ap:N=2.5,c=1/4"), InvalidArgument);
}

TEST(RenderMeasure, OneIteration)
{
    const auto m = render_measure(ap_ifs(2, {1, 4}), 2);
    EXPECT_EQ(m.level(), 2);
    EXPECT_EQ(support(m), CellSet1D::from_indices(2, {0, 2}));
    EXPECT_DOUBLE_EQ(m.weight_at(0), 0.5);
    EXPECT_DOUBLE_EQ(m.weight_at(2), 0.5);
}

TEST(RenderMeasure, CantorCellsAreUniform)
{
    const auto f = ap_ifs(2, {1, 4});
    for (int j = 1; j <= 10; ++j) {
        const auto m = render_measure(f, 2 * j);
        EXPECT_EQ(m.occupied_cells(), std::size_t{1} << j);
        m.for_each_atom([&](std::int64_t, double w) { EXPECT_DOUBLE_EQ(w, std::ldexp(1.0, -j)); });
    }
}

TEST(RenderMeasure, CoarsestCellHoldsAllMass)
{
    for (const auto& f : {ap_ifs(2, {1, 4}), ap_ifs(5, {1, 7}), ap_ifs(16, {1, 32})}) {
        const auto c = coarsen(render_measure(f, 6), 0);
        EXPECT_EQ(c.window_size(), 1u);
        EXPECT_EQ(c.first_index(), 0);
    }
}

TEST(RenderMeasure, OccupancyNearCylinderCount)
{
    // Exact when 1/c is a power of two dividing the level.
    for (const auto& f : {ap_ifs(2, {1, 4}), ap_ifs(4, {1, 8}), ap_ifs(16, {1, 32})}) {
        const int k = 3 * static_cast<int>(std::log2(f.ratio().den));
        const int m = generations_for_level(f, k);
        EXPECT_EQ(render_measure(f, k).occupied_cells(), static_cast<std::size_t>(std::pow(f.size(), m)));
    }
    // Otherwise the last generation can overshoot the level, and only the
    // generation before it is guaranteed distinct cells.
    for (const auto& f : {ap_ifs(2, {1, 4}), ap_ifs(3, {1, 5}), ap_ifs(4, {1, 8}), ap_ifs(16, {1, 32})}) {
        for (int k : {6, 9, 12}) {
            const int m = generations_for_level(f, k);
            const double cells = static_cast<double>(render_measure(f, k).occupied_cells());
            EXPECT_LE(cells, std::pow(static_cast<double>(f.size()), m));
            EXPECT_GE(cells, std::pow(static_cast<double>(f.size()), m - 1));
        }
    }
}

TEST(RenderMeasure, Budget)
{
    RenderOptions ro;
    ro.cylinder_budget = 1000;
    EXPECT_THROW(render_measure(ap_ifs(16, {1, 32}), 14, ro), ResourceError);
    EXPECT_THROW(render_measure(ap_ifs(2, {1, 4}), 0), InvalidArgument);
}

TEST(RenderMeasure, SelfSimilarUnderCoarsening)
{
    for (const auto& f : sharpness_families({2, 4, 16})) {
        const auto fine = render_measure(f, 14);
        for (int k : {6, 8, 10, 12}) EXPECT_LE(total_variation(coarsen(fine, k), render_measure(f, k)), 0.02);
    }
}

TEST(Pushforward, Examples)
{
    const auto e = pushforward_monotone(GridMeasure::atom(10, 0.0), MonotoneMap::exp2(), 8);
    EXPECT_EQ(e, GridMeasure::atom(8, 1.0));

    const GridMeasure m(6, 3, {0.5, 0.2, 0.3});
    const auto n = pushforward_monotone(m, MonotoneMap::negate(), 6);
    EXPECT_EQ(n.first_index(), -6);
    EXPECT_DOUBLE_EQ(n.weight_at(-6), 0.3);
    EXPECT_DOUBLE_EQ(n.weight_at(-5), 0.2);
    EXPECT_DOUBLE_EQ(n.weight_at(-4), 0.5);

    EXPECT_EQ(pushforward_monotone(m, MonotoneMap::affine(1.0, 0.0), 6), m);
}

TEST(Pushforward, Domains)
{
    const auto c = render_measure(ap_ifs(2, {1, 4}), 10);
    EXPECT_THROW(pushforward_monotone(c, MonotoneMap::reciprocal(), 8), DomainError);
    EXPECT_THROW(pushforward_monotone(pushforward_monotone(c, MonotoneMap::affine(1, 1.5), 10), MonotoneMap::exp2(), 8),
                 DomainError);
    EXPECT_THROW(pushforward_monotone(c, MonotoneMap::affine(0, 1), 8), DomainError);
    EXPECT_THROW(pushforward_monotone(c, MonotoneMap::exp2(), 11), ScaleOrderError);
    const auto r = pushforward_monotone(pushforward_monotone(c, MonotoneMap::affine(1, 1), 10), MonotoneMap::reciprocal(), 8);
    EXPECT_TRUE(support_within(r, 0.5, 1.0));
}

TEST(Pushforward, ExpThenLogNearIdentity)
{
    for (const auto& f : {ap_ifs(2, {1, 4}), ap_ifs(3, {1, 7}), ap_ifs(8, {1, 16})}) {
        const int k = 14;
        const auto m = render_measure(f, k);
        const auto back = pushforward_monotone(pushforward_monotone(m, MonotoneMap::exp2(), k), MonotoneMap::log2(), k);
        const auto src = support(m);
        const auto dst = support(back);
        for (auto i : dst.indices) {
            const auto it = std::lower_bound(src.indices.begin(), src.indices.end(), i - 2);
            ASSERT_NE(it, src.indices.end());
            EXPECT_LE(*it, i + 2);
        }
    }
}

TEST(Pushforward, EntropyLossAtCoarserLevel)
{
    const auto m = render_measure(ap_ifs(2, {1, 4}), 16);
    const auto e = pushforward_monotone(m, MonotoneMap::exp2(), 16);
    for (int j = 4; j <= 14; ++j) EXPECT_LE(std::abs(shannon_entropy(e, j) - shannon_entropy(m, j)), 2.0);
}

TEST(RegularSubset, Examples)
{
    const auto a = regular_subset(ap_ifs(4, {1, 16}), 0.25);
    ASSERT_EQ(a.size(), 2u);
    EXPECT_EQ(a.translations()[0], Rational(0));
    EXPECT_EQ(a.translations()[1], Rational(2, 4));
    EXPECT_NEAR(dimension(a), 0.25, 1e-15);

    const auto b = regular_subset(ap_ifs(16, {1, 32}), 0.5);
    ASSERT_EQ(b.size(), 5u);
    EXPECT_NEAR(dimension(b), std::log(5.0) / std::log(32.0), 1e-15);
    EXPECT_NEAR(dimension(b), 0.464, 1e-3);
    EXPECT_LE(dimension(b), 0.5);
    EXPECT_GE(dimension(b), 0.5 - std::log(1.0 + 1.0 / 5) / std::log(32.0));

    const auto f = ap_ifs(2, {1, 4});
    const auto full = regular_subset(f, dimension(f) - 1e-9);
    EXPECT_EQ(full.size(), 2u);
    EXPECT_EQ(full.translations(), f.translations());
}

TEST(RegularSubset, Rejects)
{
    const auto f = ap_ifs(2, {1, 4});
    EXPECT_THROW(regular_subset(f, 0.5), InvalidArgument);
    EXPECT_THROW(regular_subset(f, 0.7), InvalidArgument);
    EXPECT_THROW(regular_subset(f, 0.0), InvalidArgument);
}

TEST(RegularSubset, DimensionWindow)
{
    for (int n : {8, 16, 32, 64}) {
        const auto f = ap_ifs(n, {1, 2 * n});
        for (double t : {0.3, 0.5, 0.7}) {
            if (t >= dimension(f)) continue;
            const auto g = regular_subset(f, t);
            const double m = static_cast<double>(g.size());
            if (g.size() == 2 && std::pow(2.0 * n, t) < 2.0) continue;
            EXPECT_LE(dimension(g), t + 1e-12);
            EXPECT_GE(dimension(g), t - std::log(1.0 + 1.0 / m) / std::log(2.0 * n));
        }
    }
}

TEST(Regularity, ApFamiliesAhlforsRegular)
{
    for (const auto& f : {ap_ifs(2, {1, 4}), ap_ifs(3, {1, 5}), ap_ifs(4, {1, 8}), ap_ifs(16, {1, 32})}) {
        const auto r = ahlfors_check(render_measure(f, 12), dimension(f));
        EXPECT_TRUE(std::isfinite(r.effective_constant()));
        EXPECT_LE(r.effective_constant(), 16.0);
    }
}

TEST(Regularity, RegularSubsetRegularAtOwnDimension)
{
    const auto g = regular_subset(ap_ifs(16, {1, 32}), 0.5);
    const auto r = ahlfors_check(render_measure(g, 15), dimension(g));
    EXPECT_LE(r.effective_constant(), 16.0);
}
