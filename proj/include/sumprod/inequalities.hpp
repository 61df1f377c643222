#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sumprod/arithmetic.hpp"
#include "sumprod/error.hpp"
#include "sumprod/grid_measure.hpp"
#include "sumprod/ifs.hpp"
#include "sumprod/numeric.hpp"
#include "sumprod/regularity.hpp"

namespace sumprod {

using Label = std::vector<std::int64_t>;

/// Finite joint law of four discrete variables (X, Y, Z, W).
class JointTable {
public:
    struct Row {
        Label x, y, z, w;
        double p;
    };

    explicit JointTable(std::vector<Row> rows) : rows_(std::move(rows))
    {
        KahanSum total;
        for (const auto& r : rows_) {
            if (!(r.p >= 0.0) || !std::isfinite(r.p)) throw InvalidMeasure("joint probabilities must be non-negative");
            total.add(r.p);
        }
        if (std::abs(total.value() - 1.0) > kMassTolerance) throw InvalidMeasure("joint probabilities must sum to 1");
    }

    const std::vector<Row>& rows() const noexcept { return rows_; }

    /// Shannon entropy in bits of the marginal selected by key(row).
    template <class Key>
    double entropy(Key&& key) const
    {
        std::map<Label, KahanSum> law;
        for (const auto& r : rows_) {
            if (r.p > 0.0) law[key(r)].add(r.p);
        }
        KahanSum h;
        for (const auto& [label, p] : law) h.add(entropy_term(p.value()));
        return std::max(0.0, h.value());
    }

private:
    std::vector<Row> rows_;
};

inline Label concat(const Label& a, const Label& b)
{
    Label out(a);
    out.push_back(static_cast<std::int64_t>(b.size()));
    out.insert(out.end(), b.begin(), b.end());
    return out;
}

/// Witness maps: Z determines X, W determines X, (Z, W) determines Y.
struct Determination {
    std::map<Label, Label> z_to_x;
    std::map<Label, Label> w_to_x;
    std::map<std::pair<Label, Label>, Label> zw_to_y;

    /// Reads the maps off the support of a table; throws if any is not a function.
    static Determination infer(const JointTable& t)
    {
        Determination d;
        auto put = [](auto& map, const auto& key, const Label& value, const char* what) {
            auto [it, inserted] = map.emplace(key, value);
            if (!inserted && it->second != value) throw DeterminationError(std::string(what) + " is not determined");
        };
        for (const auto& r : t.rows()) {
            if (r.p <= 0.0) continue;
            put(d.z_to_x, r.z, r.x, "X from Z");
            put(d.w_to_x, r.w, r.x, "X from W");
            put(d.zw_to_y, std::make_pair(r.z, r.w), r.y, "Y from (Z, W)");
        }
        return d;
    }

    void verify(const JointTable& t) const
    {
        for (const auto& r : t.rows()) {
            if (r.p <= 0.0) continue;
            auto zx = z_to_x.find(r.z);
            if (zx == z_to_x.end() || zx->second != r.x) throw DeterminationError("witness Z -> X disagrees with the table");
            auto wx = w_to_x.find(r.w);
            if (wx == w_to_x.end() || wx->second != r.x) throw DeterminationError("witness W -> X disagrees with the table");
            auto zwy = zw_to_y.find({r.z, r.w});
            if (zwy == zw_to_y.end() || zwy->second != r.y) throw DeterminationError("witness (Z, W) -> Y disagrees with the table");
        }
    }
};

/// H(Z) + H(W) - H(X) - H(Y) under a verified determination structure.
inline double check_submodular(const JointTable& t, const Determination& d)
{
    d.verify(t);
    const double slack = t.entropy([](const JointTable::Row& r) { return r.z; }) +
                         t.entropy([](const JointTable::Row& r) { return r.w; }) -
                         t.entropy([](const JointTable::Row& r) { return r.x; }) -
                         t.entropy([](const JointTable::Row& r) { return r.y; });
    if (slack < -kInequalitySlack) throw InternalConsistencyError("submodular slack " + std::to_string(slack) + " is negative");
    return slack;
}

/// Vector-valued function of the centres of one tuple of source cells.
using Feature = std::function<std::vector<double>(std::span<const double>)>;

struct DiscretisedSubmodularInput {
    std::vector<GridMeasure> sources; ///< independent coordinates
    Feature first;                    ///< determines target at the coarse scale
    Feature second;                   ///< determines target at the coarse scale
    Feature target;
    Feature joint;                    ///< determined by (first, second) at the coarse scale
    int delta_level = 0;
    int scale_bits = 3;               ///< C = 2^scale_bits
    double max_tuples = 5e7;
};

struct DiscretisedSubmodularResult {
    double fine_bits = 0.0;    ///< H(first) + H(second) - H(target) - H(joint), all at delta
    double coarse_bits = 0.0;  ///< same with target and joint at C delta
    double penalty_bits = 0.0; ///< H(T|A) + H(T|B) + H(J|A,B) for the coarse cells T, J
    double allowance_bits = 0.0;
};

namespace detail {

inline Label cells_of(const std::vector<double>& v, int level)
{
    Label out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = cell_of(v[i], level);
    return out;
}

inline double entropy_of(const std::map<Label, KahanSum>& law)
{
    KahanSum h;
    for (const auto& [label, p] : law) h.add(entropy_term(p.value()));
    return std::max(0.0, h.value());
}

/// Each determining cell may reach coarse cells spread over at most two adjacent indices per coordinate.
inline void require_near_determination(const std::map<Label, std::pair<Label, Label>>& range, const char* what)
{
    for (const auto& [key, box] : range) {
        for (std::size_t i = 0; i < box.first.size(); ++i) {
            if (box.second[i] - box.first[i] > 1) {
                throw PreconditionError(std::string(what) + " is not determined at the coarse scale");
            }
        }
    }
}

inline void widen(std::map<Label, std::pair<Label, Label>>& range, const Label& key, const Label& value)
{
    auto [it, inserted] = range.emplace(key, std::make_pair(value, value));
    if (inserted) return;
    for (std::size_t i = 0; i < value.size(); ++i) {
        it->second.first[i] = std::min(it->second.first[i], value[i]);
        it->second.second[i] = std::max(it->second.second[i], value[i]);
    }
}

} // namespace detail

/// Discretised submodular inequality: with first = A, second = B both
/// determining the target T and (A, B) determining the joint variable J at
/// scale C delta, H_{C delta}(T) + H_{C delta}(J) <= H_delta(A) + H_delta(B).
/// Near-determination (coarse cells straddling one boundary) is paid for by
/// the conditional-entropy penalty, which the check includes in its bound.
inline DiscretisedSubmodularResult check_discretised_submodular(const DiscretisedSubmodularInput& in)
{
    if (in.sources.empty()) throw InvalidArgument("at least one source measure is required");
    if (in.scale_bits < 0) throw InvalidArgument("scale factor must be at least 1");
    const int j = in.delta_level;
    const int jc = j - in.scale_bits;
    if (jc < 0) throw InvalidArgument("coarse level must be non-negative");
    double tuples = 1.0;
    std::vector<detail::Atoms> atoms;
    for (const auto& m : in.sources) {
        atoms.push_back(detail::atoms_of(m));
        tuples *= static_cast<double>(m.occupied_cells());
    }
    if (tuples > in.max_tuples) throw ResourceError("joint enumeration exceeds the tuple budget");

    std::map<Label, KahanSum> a_law, b_law, t_fine, j_fine, t_coarse, j_coarse, at_law, bt_law, ab_law, abj_law;
    std::map<Label, std::pair<Label, Label>> a_range, b_range, ab_range;
    std::size_t d_t = 0, d_j = 0;

    const std::size_t n = atoms.size();
    std::vector<std::size_t> digit(n, 0);
    std::vector<double> centre(n);
    while (true) {
        double p = 1.0;
        for (std::size_t i = 0; i < n; ++i) {
            centre[i] = cell_centre(atoms[i].index[digit[i]], in.sources[i].level());
            p *= atoms[i].weight[digit[i]];
        }
        const auto a = detail::cells_of(in.first(centre), j);
        const auto b = detail::cells_of(in.second(centre), j);
        const auto tv = in.target(centre);
        const auto jv = in.joint(centre);
        d_t = tv.size();
        d_j = jv.size();
        const auto tc = detail::cells_of(tv, jc);
        const auto jcell = detail::cells_of(jv, jc);
        const auto ab = concat(a, b);
        a_law[a].add(p);
        b_law[b].add(p);
        t_fine[detail::cells_of(tv, j)].add(p);
        j_fine[detail::cells_of(jv, j)].add(p);
        t_coarse[tc].add(p);
        j_coarse[jcell].add(p);
        at_law[concat(a, tc)].add(p);
        bt_law[concat(b, tc)].add(p);
        ab_law[ab].add(p);
        abj_law[concat(ab, jcell)].add(p);
        detail::widen(a_range, a, tc);
        detail::widen(b_range, b, tc);
        detail::widen(ab_range, ab, jcell);

        std::size_t i = 0;
        while (i < n && ++digit[i] == atoms[i].index.size()) digit[i++] = 0;
        if (i == n) break;
    }
    detail::require_near_determination(a_range, "target from first");
    detail::require_near_determination(b_range, "target from second");
    detail::require_near_determination(ab_range, "joint from (first, second)");

    using detail::entropy_of;
    const double h_a = entropy_of(a_law);
    const double h_b = entropy_of(b_law);
    DiscretisedSubmodularResult r;
    r.fine_bits = h_a + h_b - entropy_of(t_fine) - entropy_of(j_fine);
    r.coarse_bits = h_a + h_b - entropy_of(t_coarse) - entropy_of(j_coarse);
    r.penalty_bits = std::max(0.0, entropy_of(at_law) - h_a) + std::max(0.0, entropy_of(bt_law) - h_b) +
                     std::max(0.0, entropy_of(abj_law) - entropy_of(ab_law));
    r.allowance_bits = static_cast<double>(d_t + d_j) * in.scale_bits;
    if (r.coarse_bits + r.penalty_bits < -kInequalitySlack) {
        throw InternalConsistencyError("coarse discretised submodular slack below the penalty bound");
    }
    if (r.fine_bits + r.penalty_bits + r.allowance_bits < -kInequalitySlack) {
        throw InternalConsistencyError("fine discretised submodular slack below the continuity allowance");
    }
    return r;
}

/// H(m at level j) - (s j - log2 C) under the single-scale Frostman precondition
/// max_I m(I) <= C 2^{-sj}.
inline double frostman_entropy_bound(const GridMeasure& m, double s, double c, int j)
{
    if (!(c >= 1.0)) throw InvalidArgument("Frostman constant must be at least 1");
    const double measured = scale_frostman_constant(m, s, j);
    if (measured > c * (1.0 + kMassTolerance)) {
        throw PreconditionError("measured Frostman constant " + std::to_string(measured) + " exceeds " + std::to_string(c));
    }
    const double margin = shannon_entropy(m, j) - (s * j - std::log2(c));
    if (margin < -kInequalitySlack) throw InternalConsistencyError("Frostman entropy bound violated");
    return margin;
}

inline double sum_product_exponent(double s) { return std::min(2.0 * s + 1.0, 4.0 * s); }

struct PipelineOptions {
    int guard = ConvolutionPlan::kDefaultGuard;
    double budget_cells = 1e8;
    bool compute_triple = true;
};

struct MainTheoremRow {
    std::string family;
    int n = 0;
    std::string c;
    double s = 0.0;
    double eta = 0.0;
    int delta_level = 0;
    double h_sum = 0.0;
    double h_prod = 0.0;
    double growth_bits = 0.0;
    double entropy_x = 0.0;
    double lhs_bits = 0.0;
    double rhs_target = 0.0;
    double margin_bits = 0.0;
    std::size_t cover_sum = 0;
    std::size_t cover_prod = 0;
    bool used_subset = false;
    int subset_n = 0;
    double subset_dimension = 0.0;

    /// H((X+Y)Z) + 2H(X) - H(X+Y) - 2H(XY), bounded independently of the level.
    double rendition_gap() const noexcept { return growth_bits + 2.0 * entropy_x - lhs_bits; }
};

inline std::string family_label(const AffineIFS& f)
{
    return "ap:N=" + std::to_string(f.size()) + ",c=" + f.ratio().str();
}

namespace detail {

/// Renders the family at level j + guard and pushes it by exp2 into [1, 2].
inline GridMeasure exp2_measure(const AffineIFS& f, int level, double budget)
{
    if (!(f.hull_left() >= 0.0 && f.hull_right() <= 1.0)) throw DomainError("attractor must lie in [0, 1] for the exp2 push");
    RenderOptions ro;
    ro.cylinder_budget = budget;
    return pushforward_monotone(render_measure(f, level, ro), MonotoneMap::exp2(), level);
}

inline ArithmeticOptions arithmetic_options(double budget)
{
    ArithmeticOptions ao;
    ao.max_window = static_cast<std::uint64_t>(std::max(budget, 1.0)) * 4;
    return ao;
}

} // namespace detail

/// One row of the sum-product pipeline at output level j.
inline MainTheoremRow main_theorem_row(const AffineIFS& f, double eta, int j, const PipelineOptions& opt = {})
{
    if (!(eta > 0.0 && eta < 1.0)) throw InvalidArgument("eta must lie in (0, 1)");
    const double s = dimension(f);
    if (!(s > 0.0 && s < 1.0)) throw InvalidArgument("dimension must lie in (0, 1)");
    MainTheoremRow row;
    row.family = family_label(f);
    row.n = static_cast<int>(f.size());
    row.c = f.ratio().str();
    row.s = s;
    row.eta = eta;
    row.delta_level = j;
    const AffineIFS used = s > 0.5 ? regular_subset(f, 0.5) : f;
    row.used_subset = s > 0.5;
    row.subset_n = static_cast<int>(used.size());
    row.subset_dimension = dimension(used);

    const ConvolutionPlan plan(j + opt.guard, j, opt.guard);
    const auto ao = detail::arithmetic_options(opt.budget_cells);
    const GridMeasure x = detail::exp2_measure(used, plan.input_level, opt.budget_cells);
    const GridMeasure sum_fine = sum_convolve(x, x, ao);
    const GridMeasure sum = coarsen(sum_fine, j);
    const GridMeasure prod = product_distribution(x, x, plan, ao);
    row.h_sum = shannon_entropy(sum);
    row.h_prod = shannon_entropy(prod);
    row.entropy_x = shannon_entropy(x, j);
    if (opt.compute_triple) row.growth_bits = shannon_entropy(product_binned(sum_fine, x, j, ao));
    row.lhs_bits = row.h_sum + 2.0 * row.h_prod;
    row.rhs_target = (sum_product_exponent(s) - eta) * j;
    row.margin_bits = row.lhs_bits - row.rhs_target;
    row.cover_sum = sum.occupied_cells();
    row.cover_prod = prod.occupied_cells();
    return row;
}

inline std::vector<MainTheoremRow> verify_main_inequality(const AffineIFS& f, double eta, std::vector<int> levels,
                                                          const PipelineOptions& opt = {})
{
    std::sort(levels.begin(), levels.end());
    std::vector<MainTheoremRow> rows;
    for (int j : levels) rows.push_back(main_theorem_row(f, eta, j, opt));
    return rows;
}

struct CoveringRow {
    int delta_level = 0;
    double s = 0.0;
    double eta = 0.0;
    std::size_t cover_sum = 0;
    std::size_t cover_prod = 0;
    double product_bits = 0.0; ///< log2(N(A+A) N(AA)^2)
    double product_target = 0.0;
    double sum_bits = 0.0; ///< log2(N(A+A) + N(AA))
    double sum_target = 0.0;

    double product_margin() const noexcept { return product_bits - product_target; }
    double sum_margin() const noexcept { return sum_bits - sum_target; }
};

inline CoveringRow covering_row(const MainTheoremRow& m)
{
    CoveringRow r;
    r.delta_level = m.delta_level;
    r.s = m.s;
    r.eta = m.eta;
    r.cover_sum = m.cover_sum;
    r.cover_prod = m.cover_prod;
    const double cs = static_cast<double>(m.cover_sum);
    const double cp = static_cast<double>(m.cover_prod);
    r.product_bits = std::log2(cs) + 2.0 * std::log2(cp);
    r.product_target = (sum_product_exponent(m.s) - m.eta) * m.delta_level;
    r.sum_bits = std::log2(cs + cp);
    r.sum_target = (sum_product_exponent(m.s) / 3.0 - m.eta) * m.delta_level;
    return r;
}

/// Dyadic covering counts of the supports of the sum and product laws.
inline std::vector<CoveringRow> verify_covering_corollary(const AffineIFS& f, double eta, std::vector<int> levels,
                                                          PipelineOptions opt = {})
{
    opt.compute_triple = false;
    std::vector<CoveringRow> rows;
    for (const auto& m : verify_main_inequality(f, eta, std::move(levels), opt)) rows.push_back(covering_row(m));
    return rows;
}

struct SharpnessRow {
    int n = 0;
    std::string c;
    double s = 0.0;
    int delta_level = 0;
    double h_sum = 0.0;
    double h_prod = 0.0;
    double growth_bits = 0.0;
    double entropy_x = 0.0;
    double ratio = 0.0;  ///< (H(X+Y) + 2H(XY)) / j for the exp2 image
    double target = 0.0; ///< min{2s+1, 4s}
    std::size_t cover_ap_sum = 0;    ///< N_delta(A + A) for the unpushed attractor
    double cylinder_bound = 0.0;     ///< 4 (2N-1)^m
    double generic_cylinders = 0.0;  ///< N^{2m}

    double gap() const noexcept { return ratio - target; }
    double rendition_gap() const noexcept { return growth_bits + 2.0 * entropy_x - h_sum - 2.0 * h_prod; }
};

/// Independent AP digits of two generation-m cylinders sum to (2N-1)^m
/// distinct left ends, each sum interval of length 2 c^m <= 2 delta meets at
/// most four level-j cells once left-end binning is accounted for.
inline SharpnessRow sharpness_row(const AffineIFS& f, int j, const PipelineOptions& opt = {})
{
    SharpnessRow row;
    row.n = static_cast<int>(f.size());
    row.c = f.ratio().str();
    row.s = dimension(f);
    row.delta_level = j;
    row.target = sum_product_exponent(row.s);
    const ConvolutionPlan plan(j + opt.guard, j, opt.guard);
    const auto ao = detail::arithmetic_options(opt.budget_cells);
    RenderOptions ro;
    ro.cylinder_budget = opt.budget_cells;
    const GridMeasure a = render_measure(f, plan.input_level, ro);
    const GridMeasure x = pushforward_monotone(a, MonotoneMap::exp2(), plan.input_level);
    const GridMeasure sum_fine = sum_convolve(x, x, ao);
    row.h_sum = shannon_entropy(sum_fine, j);
    row.h_prod = shannon_entropy(product_distribution(x, x, plan, ao));
    row.entropy_x = shannon_entropy(x, j);
    if (opt.compute_triple) row.growth_bits = shannon_entropy(product_binned(sum_fine, x, j, ao));
    row.ratio = (row.h_sum + 2.0 * row.h_prod) / j;
    row.cover_ap_sum = coarsen(sum_convolve(a, a, ao), j).occupied_cells();
    const int m = generations_for_level(f, j);
    row.cylinder_bound = 4.0 * std::pow(2.0 * row.n - 1.0, m);
    row.generic_cylinders = std::pow(static_cast<double>(row.n), 2.0 * m);
    if (static_cast<double>(row.cover_ap_sum) > row.cylinder_bound) {
        throw InternalConsistencyError("A+A covering count exceeds the arithmetic-progression cylinder bound");
    }
    return row;
}

inline std::vector<SharpnessRow> sharpness_experiment(const std::vector<AffineIFS>& families, std::vector<int> levels,
                                                      const PipelineOptions& opt = {})
{
    std::sort(levels.begin(), levels.end());
    std::vector<SharpnessRow> rows;
    for (const auto& f : families) {
        for (int j : levels) rows.push_back(sharpness_row(f, j, opt));
    }
    return rows;
}

/// The default sharpness family ap(N, 1/(2N)).
inline std::vector<AffineIFS> sharpness_families(const std::vector<int>& ns)
{
    std::vector<AffineIFS> out;
    for (int n : ns) out.push_back(ap_ifs(n, Rational{1, 2 * static_cast<std::int64_t>(n)}));
    return out;
}

inline void write_main_csv(std::ostream& os, const std::vector<MainTheoremRow>& rows)
{
    os << "family,N,c,s,eta,level,H_sum,H_prod,H_triple,H_x,lhs_bits,rhs_target,margin_bits,cover_sum,cover_prod\n";
    char buf[512];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "\"%s\",%d,%s,%.9g,%.9g,%d,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%zu,%zu\n",
                      r.family.c_str(), r.n, r.c.c_str(), r.s, r.eta, r.delta_level, r.h_sum, r.h_prod, r.growth_bits,
                      r.entropy_x, r.lhs_bits, r.rhs_target, r.margin_bits, r.cover_sum, r.cover_prod);
        os << buf;
    }
}

inline void write_sharpness_csv(std::ostream& os, const std::vector<SharpnessRow>& rows)
{
    os << "N,c,s,level,H_sum,H_prod,H_triple,H_x,ratio,target,gap,cover_ap_sum,cylinder_bound\n";
    char buf[384];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%d,%s,%.9g,%d,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%zu,%.9g\n", r.n, r.c.c_str(), r.s,
                      r.delta_level, r.h_sum, r.h_prod, r.growth_bits, r.entropy_x, r.ratio, r.target, r.gap(), r.cover_ap_sum, r.cylinder_bound);
        os << buf;
    }
}

} // namespace sumprod
