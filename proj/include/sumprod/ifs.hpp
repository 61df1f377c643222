#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sumprod/error.hpp"
#include "sumprod/grid_measure.hpp"
#include "sumprod/numeric.hpp"

namespace sumprod {

struct Rational {
    std::int64_t num = 0;
    std::int64_t den = 1;

    constexpr Rational() = default;
    constexpr Rational(std::int64_t n, std::int64_t d = 1) : num(n), den(d)
    {
        if (den == 0) throw InvalidArgument("rational with zero denominator");
        if (den < 0) {
            num = -num;
            den = -den;
        }
        const auto g = std::gcd(num < 0 ? -num : num, den);
        if (g > 1) {
            num /= g;
            den /= g;
        }
    }

    constexpr double value() const noexcept { return static_cast<double>(num) / static_cast<double>(den); }

    friend constexpr bool operator==(const Rational&, const Rational&) = default;
    friend constexpr bool operator<(const Rational& a, const Rational& b)
    {
        return static_cast<__int128>(a.num) * b.den < static_cast<__int128>(b.num) * a.den;
    }
    friend constexpr bool operator<=(const Rational& a, const Rational& b) { return !(b < a); }

    std::string str() const { return std::to_string(num) + "/" + std::to_string(den); }
};

/// Parses "p/q" or a bare integer.
inline Rational parse_rational(std::string_view text)
{
    const auto slash = text.find('/');
    auto parse_int = [&](std::string_view s) {
        if (s.empty()) throw InvalidArgument("malformed rational '" + std::string(text) + "'");
        std::size_t pos = 0;
        long long v = 0;
        try {
            v = std::stoll(std::string(s), &pos);
        } catch (const std::exception&) {
            throw InvalidArgument("malformed rational '" + std::string(text) + "'");
        }
        if (pos != s.size()) throw InvalidArgument("malformed rational '" + std::string(text) + "'");
        return static_cast<std::int64_t>(v);
    };
    if (slash == std::string_view::npos) return Rational(parse_int(text));
    return Rational(parse_int(text.substr(0, slash)), parse_int(text.substr(slash + 1)));
}

struct AffineMap {
    Rational ratio;
    Rational translation;
    double operator()(double x) const noexcept { return ratio.value() * x + translation.value(); }
};

/// Homogeneous contracting IFS {x -> c x + t_i} on the line with a
/// probability vector over the maps. Translations are kept sorted; the
/// images of the convex hull of the attractor must not overlap (touching
/// endpoints are allowed).
class AffineIFS {
public:
    AffineIFS(Rational ratio, std::vector<Rational> translations, std::vector<double> weights)
        : ratio_(ratio), translations_(std::move(translations)), weights_(std::move(weights))
    {
        if (!(Rational(0) < ratio_ && ratio_ < Rational(1))) throw InvalidArgument("contraction ratio must lie in (0,1)");
        if (translations_.empty()) throw InvalidArgument("an IFS needs at least one map");
        if (weights_.size() != translations_.size()) throw InvalidArgument("one weight per map is required");
        KahanSum total;
        for (double w : weights_) {
            if (!(w > 0.0)) throw InvalidArgument("map weights must be positive");
            total.add(w);
        }
        if (std::abs(total.value() - 1.0) > kMassTolerance) throw InvalidArgument("map weights must sum to 1");

        std::vector<std::size_t> order(translations_.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(), [&](auto a, auto b) { return translations_[a] < translations_[b]; });
        std::vector<Rational> t;
        std::vector<double> w;
        for (auto i : order) {
            t.push_back(translations_[i]);
            w.push_back(weights_[i]);
        }
        translations_ = std::move(t);
        weights_ = std::move(w);

        // Image of the hull has length c * diam; consecutive translations must be that far apart.
        const double image_length = ratio_.value() * hull_diameter();
        for (std::size_t i = 1; i < translations_.size(); ++i) {
            const double gap = translations_[i].value() - translations_[i - 1].value();
            if (gap + 1e-12 < image_length) throw InvalidArgument("IFS images overlap (strong separation fails)");
        }
    }

    static AffineIFS uniform(Rational ratio, std::vector<Rational> translations)
    {
        const auto n = translations.size();
        return AffineIFS(ratio, std::move(translations), std::vector<double>(n, 1.0 / static_cast<double>(n)));
    }

    std::size_t size() const noexcept { return translations_.size(); }
    Rational ratio() const noexcept { return ratio_; }
    const std::vector<Rational>& translations() const noexcept { return translations_; }
    const std::vector<double>& weights() const noexcept { return weights_; }

    std::vector<AffineMap> maps() const
    {
        std::vector<AffineMap> out;
        for (const auto& t : translations_) out.push_back({ratio_, t});
        return out;
    }

    /// Convex hull [t_min, t_max] / (1 - c) of the attractor.
    double hull_left() const noexcept { return translations_.front().value() / (1.0 - ratio_.value()); }
    double hull_right() const noexcept { return translations_.back().value() / (1.0 - ratio_.value()); }
    double hull_diameter() const noexcept { return hull_right() - hull_left(); }

private:
    Rational ratio_;
    std::vector<Rational> translations_;
    std::vector<double> weights_;
};

/// N maps x -> c x + i/N with uniform weights.
inline AffineIFS ap_ifs(int n, Rational c)
{
    if (n < 2) throw InvalidArgument("arithmetic-progression IFS needs N >= 2");
    if (!(Rational(0) < c)) throw InvalidArgument("contraction ratio must be positive");
    if (Rational(1, n) < c) throw InvalidArgument("ratio c = " + c.str() + " exceeds 1/N; images would overlap");
    std::vector<Rational> t;
    for (int i = 0; i < n; ++i) t.emplace_back(i, n);
    return AffineIFS::uniform(c, std::move(t));
}

/// Similarity dimension log N / log(1/c).
inline double dimension(const AffineIFS& f)
{
    return std::log(static_cast<double>(f.size())) / std::log(1.0 / f.ratio().value());
}

/// Parses "ap:N=<int>,c=<p/q>".
inline AffineIFS parse_ifs_spec(std::string_view spec)
{
    const std::string s(spec);
    if (s.rfind("ap:", 0) != 0) throw InvalidArgument("unknown IFS family '" + s + "' (expected ap:N=<int>,c=<p/q>)");
    int n = -1;
    Rational c;
    bool have_c = false;
    std::string_view rest(spec.substr(3));
    while (!rest.empty()) {
        const auto comma = rest.find(',');
        const auto item = rest.substr(0, comma);
        rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
        const auto eq = item.find('=');
        if (eq == std::string_view::npos) throw InvalidArgument("malformed IFS spec '" + s + "'");
        const auto key = item.substr(0, eq);
        const auto value = item.substr(eq + 1);
        if (key == "N") {
            const Rational r = parse_rational(value);
            if (r.den != 1) throw InvalidArgument("N must be an integer in '" + s + "'");
            n = static_cast<int>(r.num);
        } else if (key == "c") {
            if (value.find('/') == std::string_view::npos) throw InvalidArgument("c must be a rational p/q in '" + s + "'");
            c = parse_rational(value);
            have_c = true;
        } else {
            throw InvalidArgument("unknown key '" + std::string(key) + "' in IFS spec '" + s + "'");
        }
    }
    if (n < 0 || !have_c) throw InvalidArgument("IFS spec '" + s + "' needs both N and c");
    return ap_ifs(n, c);
}

struct RenderOptions {
    std::uint64_t cylinder_budget = 100'000'000;
};

/// Number of IFS generations until every cylinder ratio c^m is <= 2^-k.
inline int generations_for_level(const AffineIFS& f, int level)
{
    const long double per_generation = std::log2(static_cast<long double>(f.ratio().den) / f.ratio().num);
    int m = static_cast<int>(std::ceil(static_cast<long double>(level) / per_generation - 1e-12L));
    return std::max(m, 0);
}

/// Self-similar measure binned at level k: every cylinder of generation m
/// puts its mass on the cell containing its left endpoint. Left endpoints are
/// computed in exact rational arithmetic, so dyadic endpoints bin correctly.
inline GridMeasure render_measure(const AffineIFS& f, int level, const RenderOptions& opt = {})
{
    if (level < 1) throw InvalidArgument("render level must be at least 1");
    const int m = generations_for_level(f, level);
    const long double count = std::pow(static_cast<long double>(f.size()), m);
    if (count > static_cast<long double>(opt.cylinder_budget)) {
        throw ResourceError("rendering needs " + std::to_string(static_cast<double>(count)) +
                            " cylinders, budget is " + std::to_string(opt.cylinder_budget));
    }

    const __int128 p = f.ratio().num;
    const __int128 q = f.ratio().den;
    std::int64_t dt = 1;
    for (const auto& t : f.translations()) dt = std::lcm(dt, t.den);
    std::vector<__int128> tnum;
    for (const auto& t : f.translations()) tnum.push_back(static_cast<__int128>(t.num) * (dt / t.den));

    // left(w) = [sum_l T_{w_l} p^{l-1} q^{m-l} (q-p) + T_min p^m] / (D_t q^{m-1} (q-p))
    __int128 t_max = 1;
    for (auto t : tnum) t_max = std::max(t_max, t < 0 ? -t : t);
    const long double bits = std::log2(static_cast<long double>(q)) * (m + 1) +
                             std::log2(static_cast<long double>(t_max) + 1) + std::log2(static_cast<long double>(dt)) + level + 4;
    if (bits > 125) throw ResourceError("exact cylinder arithmetic would overflow 128 bits");

    auto ipow = [](__int128 b, int e) {
        __int128 r = 1;
        for (int i = 0; i < e; ++i) r *= b;
        return r;
    };
    std::vector<__int128> coef(static_cast<std::size_t>(m));
    for (int l = 1; l <= m; ++l) coef[static_cast<std::size_t>(l - 1)] = ipow(p, l - 1) * ipow(q, m - l) * (q - p);
    const __int128 base = tnum.front() * ipow(p, m);
    const __int128 den = static_cast<__int128>(dt) * ipow(q, m - 1) * (q - p);

    auto cell_index = [&](__int128 num) -> std::int64_t {
        const __int128 scaled = num * (static_cast<__int128>(1) << level);
        __int128 d = scaled / den;
        if ((scaled % den != 0) && (scaled < 0)) --d;
        return static_cast<std::int64_t>(d);
    };

    const std::int64_t lo = cell_of(f.hull_left(), level) - 1;
    const std::int64_t hi = cell_of(f.hull_right(), level) + 1;
    const auto window = static_cast<std::uint64_t>(hi - lo + 1);
    if (window > opt.cylinder_budget) throw ResourceError("render window exceeds the cell budget");
    std::vector<KahanSum> acc(static_cast<std::size_t>(window));

    const auto& w = f.weights();
    const auto n = f.size();
    // Iterative depth-first walk over words of length m.
    std::vector<std::size_t> digit(static_cast<std::size_t>(m), 0);
    std::vector<__int128> prefix(static_cast<std::size_t>(m) + 1, 0);
    std::vector<double> mass(static_cast<std::size_t>(m) + 1, 1.0);
    int depth = 0;
    prefix[0] = base;
    {
        while (depth >= 0) {
            if (depth == m) {
                const auto idx = cell_index(prefix[static_cast<std::size_t>(m)]);
                acc[static_cast<std::size_t>(idx - lo)].add(mass[static_cast<std::size_t>(m)]);
                --depth;
                if (depth >= 0) ++digit[static_cast<std::size_t>(depth)];
                continue;
            }
            auto& d = digit[static_cast<std::size_t>(depth)];
            if (d == n) {
                d = 0;
                --depth;
                if (depth >= 0) ++digit[static_cast<std::size_t>(depth)];
                continue;
            }
            const auto k = static_cast<std::size_t>(depth);
            prefix[k + 1] = prefix[k] + tnum[d] * coef[k];
            mass[k + 1] = mass[k] * w[d];
            ++depth;
        }
    }

    std::vector<double> out(acc.size());
    for (std::size_t i = 0; i < acc.size(); ++i) out[i] = acc[i].value();
    return GridMeasure::normalised(level, lo, std::move(out));
}

/// Monotone maps used for pushforwards.
struct MonotoneMap {
    enum class Kind { exp2, log2, negate, reciprocal, affine };
    Kind kind = Kind::affine;
    double a = 1.0;
    double b = 0.0;

    static MonotoneMap exp2() { return {Kind::exp2}; }
    static MonotoneMap log2() { return {Kind::log2}; }
    static MonotoneMap negate() { return {Kind::negate}; }
    static MonotoneMap reciprocal() { return {Kind::reciprocal}; }
    static MonotoneMap affine(double a, double b) { return {Kind::affine, a, b}; }

    double operator()(double x) const
    {
        switch (kind) {
        case Kind::exp2: return std::exp2(x);
        case Kind::log2: return std::log2(x);
        case Kind::negate: return -x;
        case Kind::reciprocal: return 1.0 / x;
        case Kind::affine: return a * x + b;
        }
        return x;
    }
};

/// True when every occupied cell has its left endpoint in [lo, hi].
inline bool support_within(const GridMeasure& m, double lo, double hi)
{
    return m.support_left() >= lo && cell_left(m.last_index(), m.level()) <= hi;
}

/// Places each cell's mass at the image of its centre and bins at output_level.
inline GridMeasure pushforward_monotone(const GridMeasure& m, const MonotoneMap& map, int output_level)
{
    require_target_level(m, output_level);
    using K = MonotoneMap::Kind;
    switch (map.kind) {
    case K::exp2:
        if (!support_within(m, 0.0, 1.0)) throw DomainError("exp2 pushforward needs support in [0,1]");
        break;
    case K::log2:
        if (!support_within(m, 0.5, 4.0)) throw DomainError("log2 pushforward needs support in [1/2,4]");
        break;
    case K::reciprocal:
        if (!support_within(m, 0.5, 4.0)) throw DomainError("reciprocal pushforward needs support in [1/2,4]");
        break;
    case K::affine:
        if (map.a == 0.0) throw DomainError("affine pushforward needs a non-zero slope");
        break;
    case K::negate: break;
    }
    std::vector<std::pair<std::int64_t, double>> atoms;
    atoms.reserve(m.occupied_cells());
    m.for_each_atom([&](std::int64_t i, double w) { atoms.emplace_back(cell_of(map(cell_centre(i, m.level())), output_level), w); });
    auto [lo_it, hi_it] = std::minmax_element(atoms.begin(), atoms.end(), [](auto& x, auto& y) { return x.first < y.first; });
    const auto lo = lo_it->first;
    const auto hi = hi_it->first;
    std::vector<KahanSum> acc(static_cast<std::size_t>(hi - lo + 1));
    for (const auto& [i, w] : atoms) acc[static_cast<std::size_t>(i - lo)].add(w);
    std::vector<double> out(acc.size());
    for (std::size_t i = 0; i < acc.size(); ++i) out[i] = acc[i].value();
    return GridMeasure::normalised(output_level, lo, std::move(out));
}

/// Sub-IFS keeping M = max(2, floor((1/c)^t)) maps at evenly spaced indices
/// floor(i N / M), with uniform weights. Its dimension log M / log(1/c) is
/// at most t except when M = N = 2, where the original system is returned.
inline AffineIFS regular_subset(const AffineIFS& f, double t)
{
    const double s = dimension(f);
    if (!(t > 0.0)) throw InvalidArgument("subset exponent must be positive");
    if (!(t < s)) throw InvalidArgument("subset exponent must be below the dimension of the IFS");
    const double inv_c = 1.0 / f.ratio().value();
    const auto n = f.size();
    std::size_t keep = static_cast<std::size_t>(std::floor(std::pow(inv_c, t) * (1.0 + 1e-12)));
    keep = std::clamp<std::size_t>(keep, 2, n);
    if (keep == n) return f;
    std::vector<Rational> t_sel;
    for (std::size_t i = 0; i < keep; ++i) t_sel.push_back(f.translations()[i * n / keep]);
    return AffineIFS::uniform(f.ratio(), std::move(t_sel));
}

} // namespace sumprod
