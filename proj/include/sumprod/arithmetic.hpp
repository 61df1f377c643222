#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include <fftw3.h>

#include "sumprod/error.hpp"
#include "sumprod/grid_measure.hpp"
#include "sumprod/ifs.hpp"
#include "sumprod/numeric.hpp"

namespace sumprod {

/// Fine computation level, coarse output level and the refinement gap
/// between them. Products are placed at centres of input-level cells and
/// binned at the output level, so the guard controls placement error.
struct ConvolutionPlan {
    int input_level;
    int output_level;
    int guard;

    static constexpr int kDefaultGuard = 6;
    static constexpr int kMaxInputLevel = 27;

    ConvolutionPlan(int input, int output, int guard_bits) : input_level(input), output_level(output), guard(guard_bits)
    {
        if (guard < 4) throw InvalidArgument("convolution guard must be at least 4 bits");
        if (output_level < 1) throw InvalidArgument("output level must be at least 1");
        if (output_level > input_level - guard) throw InvalidArgument("output level must be at most input level - guard");
        if (input_level > kMaxInputLevel) throw ResourceError("input level above " + std::to_string(kMaxInputLevel) + " is not supported");
    }

    static ConvolutionPlan for_output(int output, int guard_bits = kDefaultGuard)
    {
        return ConvolutionPlan(output + guard_bits, output, guard_bits);
    }
};

enum class Strategy { automatic, pairwise, dense };

struct ArithmeticOptions {
    Strategy strategy = Strategy::automatic;
    std::uint64_t max_window = std::uint64_t{1} << 28;
    std::uint64_t max_pairs = 100'000'000'000ULL;
};

namespace detail {

inline void require_level(const GridMeasure& m, int level, const char* what)
{
    if (m.level() != level) {
        throw ScaleOrderError(std::string(what) + " must be given at the plan input level " + std::to_string(level) +
                              " (got " + std::to_string(m.level()) + ")");
    }
}

inline void require_window(std::uint64_t cells, const ArithmeticOptions& opt)
{
    if (cells > opt.max_window) {
        throw ResourceError("support window of " + std::to_string(cells) + " cells exceeds the configured bound");
    }
}

struct Atoms {
    std::vector<std::int64_t> index;
    std::vector<double> weight;
};

inline Atoms atoms_of(const GridMeasure& m)
{
    Atoms a;
    a.index.reserve(m.occupied_cells());
    a.weight.reserve(m.occupied_cells());
    m.for_each_atom([&](std::int64_t i, double w) {
        a.index.push_back(i);
        a.weight.push_back(w);
    });
    return a;
}

inline GridMeasure from_accumulators(int level, std::int64_t lo, const std::vector<KahanSum>& acc)
{
    std::vector<double> out(acc.size());
    for (std::size_t i = 0; i < acc.size(); ++i) out[i] = acc[i].value();
    return GridMeasure::normalised(level, lo, std::move(out));
}

/// Linear convolution of two real sequences through real-to-complex FFTs.
inline std::vector<double> fft_convolve(std::span<const double> a, std::span<const double> b)
{
    const std::size_t out_size = a.size() + b.size() - 1;
    std::size_t n = 1;
    while (n < out_size) n <<= 1;
    const std::size_t nc = n / 2 + 1;
    auto* in = static_cast<double*>(fftw_malloc(sizeof(double) * n));
    auto* fa = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * nc));
    auto* fb = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * nc));
    if (!in || !fa || !fb) {
        fftw_free(in);
        fftw_free(fa);
        fftw_free(fb);
        throw ResourceError("FFT buffer allocation failed");
    }
    const int ni = static_cast<int>(n);
    fftw_plan fwd_a = fftw_plan_dft_r2c_1d(ni, in, fa, FFTW_ESTIMATE);
    std::fill(in, in + n, 0.0);
    std::copy(a.begin(), a.end(), in);
    fftw_execute(fwd_a);
    fftw_plan fwd_b = fftw_plan_dft_r2c_1d(ni, in, fb, FFTW_ESTIMATE);
    std::fill(in, in + n, 0.0);
    std::copy(b.begin(), b.end(), in);
    fftw_execute(fwd_b);
    for (std::size_t k = 0; k < nc; ++k) {
        const double re = fa[k][0] * fb[k][0] - fa[k][1] * fb[k][1];
        const double im = fa[k][0] * fb[k][1] + fa[k][1] * fb[k][0];
        fa[k][0] = re;
        fa[k][1] = im;
    }
    fftw_plan inv = fftw_plan_dft_c2r_1d(ni, fa, in, FFTW_ESTIMATE);
    fftw_execute(inv);
    std::vector<double> out(in, in + out_size);
    const double scale = 1.0 / static_cast<double>(n);
    for (double& x : out) x *= scale;
    fftw_destroy_plan(fwd_a);
    fftw_destroy_plan(fwd_b);
    fftw_destroy_plan(inv);
    fftw_free(in);
    fftw_free(fa);
    fftw_free(fb);
    return out;
}

inline void require_positive_domain(const GridMeasure& m, double lo, double hi, const char* what)
{
    if (!support_within(m, lo, hi)) {
        throw DomainError(std::string(what) + " support must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    }
}

} // namespace detail

/// Exact additive convolution at the common level of the inputs: the pair of
/// cells (i1, i2) contributes to cell i1 + i2 (sum of left endpoints).
inline GridMeasure sum_convolve(const GridMeasure& mx, const GridMeasure& my, const ArithmeticOptions& opt = {})
{
    if (mx.level() != my.level()) throw ScaleOrderError("sum of measures on different levels");
    const auto lo = mx.first_index() + my.first_index();
    const auto window = mx.window_size() + my.window_size() - 1;
    detail::require_window(window, opt);
    const double pairs = static_cast<double>(mx.occupied_cells()) * static_cast<double>(my.occupied_cells());

    Strategy strategy = opt.strategy;
    if (strategy == Strategy::automatic) {
        const double dense_cost = 40.0 * static_cast<double>(window) * std::log2(static_cast<double>(window) + 2.0);
        strategy = pairs <= dense_cost ? Strategy::pairwise : Strategy::dense;
    }

    if (strategy == Strategy::pairwise) {
        if (pairs > static_cast<double>(opt.max_pairs)) throw ResourceError("pairwise sum exceeds the pair budget");
        const auto ax = detail::atoms_of(mx);
        const auto ay = detail::atoms_of(my);
        std::vector<KahanSum> acc(window);
        for (std::size_t i = 0; i < ax.index.size(); ++i) {
            const auto base = ax.index[i] - mx.first_index();
            const double wx = ax.weight[i];
            for (std::size_t k = 0; k < ay.index.size(); ++k) {
                acc[static_cast<std::size_t>(base + ay.index[k] - my.first_index())].add(wx * ay.weight[k]);
            }
        }
        return detail::from_accumulators(mx.level(), lo, acc);
    }

    // Dense pass: FFT for the weights plus an FFT of the indicator vectors,
    // which recovers the exact sumset of supports (counts are integers).
    auto conv = detail::fft_convolve(mx.weights(), my.weights());
    std::vector<double> ix(mx.window_size()), iy(my.window_size());
    for (std::size_t i = 0; i < ix.size(); ++i) ix[i] = mx.weights()[i] > 0.0 ? 1.0 : 0.0;
    for (std::size_t i = 0; i < iy.size(); ++i) iy[i] = my.weights()[i] > 0.0 ? 1.0 : 0.0;
    const auto count = detail::fft_convolve(ix, iy);
    for (std::size_t i = 0; i < conv.size(); ++i) {
        conv[i] = count[i] > 0.5 ? std::max(conv[i], 0.0) : 0.0;
    }
    return GridMeasure::normalised(mx.level(), lo, std::move(conv));
}

/// Distribution of X + Y for independent X ~ mx, Y ~ my, at the output level.
inline GridMeasure sum_distribution(const GridMeasure& mx, const GridMeasure& my, const ConvolutionPlan& plan,
                                    const ArithmeticOptions& opt = {})
{
    detail::require_level(mx, plan.input_level, "sum_distribution: first input");
    detail::require_level(my, plan.input_level, "sum_distribution: second input");
    return coarsen(sum_convolve(mx, my, opt), plan.output_level);
}

/// Product binning: the cell pair (a, z) puts mass at centre(a) * centre(z),
/// binned at output_level. Both measures live on the same level L, so with
/// odd integers A = 2a+1, Z = 2z+1 the output cell is (A Z) >> (2L + 2 - j).
///
/// Two evaluation routes produce the same bins. Pairwise visits every pair;
/// the dense route fixes z and sums contiguous runs of a-cells via
/// compensated prefix sums, which costs O(#z * #output cells).
inline GridMeasure product_binned(const GridMeasure& ma, const GridMeasure& mz, int output_level,
                                  const ArithmeticOptions& opt = {})
{
    if (ma.level() != mz.level()) throw ScaleOrderError("product of measures on different levels");
    if (ma.first_index() < 0 || mz.first_index() < 0) throw DomainError("product binning needs positive supports");
    const int level = ma.level();
    if (level > ConvolutionPlan::kMaxInputLevel) throw ResourceError("product level too fine for 64-bit placement");
    require_target_level(ma, output_level);
    const int shift = 2 * level + 2 - output_level;
    using u64 = std::uint64_t;
    auto odd = [](std::int64_t i) { return static_cast<u64>(2 * i + 1); };

    const auto a0 = ma.first_index();
    const auto a1 = ma.last_index();
    const auto az = detail::atoms_of(mz);
    const u64 out_lo = (odd(a0) * odd(az.index.front())) >> shift;
    const u64 out_hi = (odd(a1) * odd(az.index.back())) >> shift;
    detail::require_window(out_hi - out_lo + 1, opt);

    double range_cost = 2.0 * static_cast<double>(ma.window_size());
    for (auto z : az.index) {
        range_cost += static_cast<double>(((odd(a1) * odd(z)) >> shift) - ((odd(a0) * odd(z)) >> shift) + 3);
    }
    const double pair_cost = static_cast<double>(ma.occupied_cells()) * static_cast<double>(az.index.size());

    Strategy strategy = opt.strategy;
    if (strategy == Strategy::automatic) strategy = pair_cost <= range_cost ? Strategy::pairwise : Strategy::dense;

    std::vector<double> out(static_cast<std::size_t>(out_hi - out_lo + 1), 0.0);
    if (strategy == Strategy::pairwise) {
        if (pair_cost > static_cast<double>(opt.max_pairs)) throw ResourceError("pairwise product exceeds the pair budget");
        const auto aa = detail::atoms_of(ma);
        std::vector<KahanSum> acc(out.size());
        for (std::size_t k = 0; k < az.index.size(); ++k) {
            const u64 zodd = odd(az.index[k]);
            const double wz = az.weight[k];
            for (std::size_t i = 0; i < aa.index.size(); ++i) {
                acc[static_cast<std::size_t>(((odd(aa.index[i]) * zodd) >> shift) - out_lo)].add(aa.weight[i] * wz);
            }
        }
        return detail::from_accumulators(output_level, static_cast<std::int64_t>(out_lo), acc);
    }

    if (range_cost > static_cast<double>(opt.max_pairs)) throw ResourceError("dense product exceeds the work budget");
    // Compensated prefix sums: mass of [b, e) = (hi[e] - hi[b]) + (lo[e] - lo[b]).
    struct Prefix {
        double hi, lo;
    };
    const auto wa = ma.weights();
    std::vector<Prefix> pre(wa.size() + 1, Prefix{0.0, 0.0});
    {
        double s = 0.0, c = 0.0;
        for (std::size_t i = 0; i < wa.size(); ++i) {
            const double t = s + wa[i];
            c += (s >= wa[i]) ? (s - t) + wa[i] : (wa[i] - t) + s;
            s = t;
            pre[i + 1] = {s, c};
        }
    }
    auto mass = [&](std::int64_t b, std::int64_t e) {
        const Prefix& pb = pre[static_cast<std::size_t>(b)];
        const Prefix& pe = pre[static_cast<std::size_t>(e)];
        return (pe.hi - pb.hi) + (pe.lo - pb.lo);
    };

    // One cursor per z-fibre. The boundary between output cells o and o+1 is
    // the first a with (2a+1) Z >= (o+1) 2^shift, i.e. ceil(n / Z) >> 1 with
    // n = (o+1) 2^shift; n - 1 is tracked as q Z + r to avoid divisions.
    struct Cursor {
        u64 o, o_last, q, r, zodd, dq, dr;
        std::int64_t begin;
        double wz;
    };
    const u64 step = u64{1} << shift;
    const std::int64_t n_a = static_cast<std::int64_t>(wa.size());
    std::vector<Cursor> cursors(az.index.size());
    for (std::size_t k = 0; k < az.index.size(); ++k) {
        Cursor& cu = cursors[k];
        cu.zodd = odd(az.index[k]);
        cu.wz = az.weight[k];
        cu.o = (odd(a0) * cu.zodd) >> shift;
        cu.o_last = (odd(a1) * cu.zodd) >> shift;
        const u64 n0 = (cu.o + 1) * step - 1;
        cu.q = n0 / cu.zodd;
        cu.r = n0 % cu.zodd;
        cu.dq = step / cu.zodd;
        cu.dr = step % cu.zodd;
        cu.begin = 0;
    }
    // Tiles over the a-axis keep the touched prefix segment cache resident
    // while every fibre advances through it.
    constexpr std::int64_t kTile = std::int64_t{1} << 14;
    for (std::int64_t tile_end = kTile;; tile_end += kTile) {
        const bool last_tile = tile_end >= n_a;
        for (Cursor& cu : cursors) {
            u64 o = cu.o, q = cu.q, r = cu.r;
            std::int64_t begin = cu.begin;
            const u64 zodd = cu.zodd, dq = cu.dq, dr = cu.dr;
            const double wz = cu.wz;
            while (o < cu.o_last) {
                const auto end = static_cast<std::int64_t>((q + 1) >> 1) - a0;
                if (end > tile_end && !last_tile) break;
                out[o - out_lo] += wz * mass(begin, end);
                begin = end;
                q += dq;
                r += dr;
                if (r >= zodd) {
                    r -= zodd;
                    ++q;
                }
                ++o;
            }
            if (last_tile) out[cu.o_last - out_lo] += wz * mass(begin, n_a);
            cu.o = o;
            cu.q = q;
            cu.r = r;
            cu.begin = begin;
        }
        if (last_tile) break;
    }
    for (double& x : out) x = std::max(x, 0.0);
    return GridMeasure::normalised(output_level, static_cast<std::int64_t>(out_lo), std::move(out));
}

/// Distribution of XY for independent factors with supports in [1/2, 8].
inline GridMeasure product_distribution(const GridMeasure& mx, const GridMeasure& my, const ConvolutionPlan& plan,
                                        const ArithmeticOptions& opt = {})
{
    detail::require_level(mx, plan.input_level, "product_distribution: first input");
    detail::require_level(my, plan.input_level, "product_distribution: second input");
    detail::require_positive_domain(mx, 0.5, 8.0, "product_distribution: first input");
    detail::require_positive_domain(my, 0.5, 8.0, "product_distribution: second input");
    return product_binned(mx, my, plan.output_level, opt);
}

/// Distribution of (X + Y) Z: the sum is kept at the input level and then
/// multiplied against Z.
inline GridMeasure sum_then_product(const GridMeasure& mx, const GridMeasure& my, const GridMeasure& mz,
                                    const ConvolutionPlan& plan, const ArithmeticOptions& opt = {})
{
    detail::require_level(mx, plan.input_level, "sum_then_product: X");
    detail::require_level(my, plan.input_level, "sum_then_product: Y");
    detail::require_level(mz, plan.input_level, "sum_then_product: Z");
    detail::require_positive_domain(mx, 1.0, 2.0, "sum_then_product: X");
    detail::require_positive_domain(my, 1.0, 2.0, "sum_then_product: Y");
    detail::require_positive_domain(mz, 1.0, 2.0, "sum_then_product: Z");
    return product_binned(sum_convolve(mx, my, opt), mz, plan.output_level, opt);
}

/// Distribution of (Y - z) / X with the mass of each cell pair placed at
/// (centre(y) - z) / centre(x).
inline GridMeasure quotient_shift(const GridMeasure& mx, const GridMeasure& my, double z, const ConvolutionPlan& plan,
                                  const ArithmeticOptions& opt = {})
{
    detail::require_level(mx, plan.input_level, "quotient_shift: X");
    detail::require_level(my, plan.input_level, "quotient_shift: Y");
    if (!support_within(mx, 0.5, 4.0)) throw DomainError("quotient_shift: X support must lie in [1/2, 4], away from 0");
    if (!(std::abs(z) <= 4.0)) throw DomainError("quotient_shift: |z| must be at most 4");
    const double pairs = static_cast<double>(mx.occupied_cells()) * static_cast<double>(my.occupied_cells());
    if (pairs > static_cast<double>(opt.max_pairs)) throw ResourceError("quotient exceeds the pair budget");
    const int j = plan.output_level;
    const auto ax = detail::atoms_of(mx);
    const auto ay = detail::atoms_of(my);
    std::vector<double> cx(ax.index.size()), cy(ay.index.size());
    for (std::size_t i = 0; i < cx.size(); ++i) cx[i] = cell_centre(ax.index[i], mx.level());
    for (std::size_t i = 0; i < cy.size(); ++i) cy[i] = cell_centre(ay.index[i], my.level()) - z;

    std::int64_t lo = INT64_MAX, hi = INT64_MIN;
    for (double x : cx) {
        // (y - z) / x is monotone in y for fixed x > 0.
        const auto a = cell_of(cy.front() / x, j);
        const auto b = cell_of(cy.back() / x, j);
        lo = std::min({lo, a, b});
        hi = std::max({hi, a, b});
    }
    detail::require_window(static_cast<std::uint64_t>(hi - lo + 1), opt);
    std::vector<KahanSum> acc(static_cast<std::size_t>(hi - lo + 1));
    for (std::size_t i = 0; i < cx.size(); ++i) {
        for (std::size_t k = 0; k < cy.size(); ++k) {
            acc[static_cast<std::size_t>(cell_of(cy[k] / cx[i], j) - lo)].add(ax.weight[i] * ay.weight[k]);
        }
    }
    return detail::from_accumulators(j, lo, acc);
}

/// H((Y - Z) / X | Z) = sum over z-cells of xi(z) H((Y - centre(z)) / X).
inline double conditional_entropy_quotient(const GridMeasure& mx, const GridMeasure& my, const GridMeasure& mz,
                                           const ConvolutionPlan& plan, const ArithmeticOptions& opt = {})
{
    detail::require_level(mz, plan.input_level, "conditional_entropy_quotient: Z");
    KahanSum h;
    mz.for_each_atom([&](std::int64_t i, double w) {
        const auto q = quotient_shift(mx, my, cell_centre(i, mz.level()), plan, opt);
        h.add(w * shannon_entropy(q, plan.output_level));
    });
    return h.value();
}

} // namespace sumprod
