#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sumprod/config.hpp"
#include "sumprod/experiments.hpp"
#include "sumprod/fuzz.hpp"
#include "sumprod/inequalities.hpp"

namespace {

using namespace sumprod;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitViolation = 2;
constexpr double kRenditionSlack = 8.0;

struct Flags {
    std::string config;
    std::vector<std::string> family;
    std::string eta, levels, sigma, guard, budget_cells, seed, trials, out;
};

struct Outcome {
    std::string csv;
    std::string summary;
    int violations = 0;
};

std::string fmt(const char* f, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

bool finite_all(std::initializer_list<double> xs)
{
    for (double x : xs) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

PipelineOptions pipeline(const ExperimentConfig& cfg)
{
    PipelineOptions opt;
    opt.guard = cfg.guard;
    opt.budget_cells = cfg.budget_cells;
    return opt;
}

Outcome run_main_theorem(const ExperimentConfig& cfg)
{
    const auto f = parse_ifs_spec(require_family(cfg));
    const auto rows = verify_main_inequality(f, cfg.eta, cfg.delta_levels, pipeline(cfg));
    Outcome out;
    std::ostringstream csv;
    write_main_csv(csv, rows);
    out.csv = csv.str();
    for (const auto& r : rows) {
        const auto cov = covering_row(r);
        out.summary += fmt("level %d: lhs %.3f bits, target %.3f, margin %+.3f%s\n", r.delta_level, r.lhs_bits,
                           r.rhs_target, r.margin_bits,
                           r.used_subset ? fmt(" (regular subset of %d maps, dimension %.4f)", r.subset_n, r.subset_dimension).c_str() : "");
        out.summary += fmt("  rendition: H_triple + 2H_x - lhs = %+.3f bits (allowed %.0f)\n", r.rendition_gap(), kRenditionSlack);
        out.summary += fmt("  covering: log2(Ns Np^2) %.3f vs %.3f (margin %+.3f); log2(Ns + Np) %.3f vs %.3f (margin %+.3f)\n",
                           cov.product_bits, cov.product_target, cov.product_margin(), cov.sum_bits, cov.sum_target,
                           cov.sum_margin());
        const bool ok = finite_all({r.h_sum, r.h_prod, r.growth_bits, r.entropy_x, r.lhs_bits, r.rhs_target}) &&
                        r.lhs_bits >= 0.0 && r.rendition_gap() <= kRenditionSlack;
        if (!ok) {
            ++out.violations;
            out.summary += "  INVARIANT VIOLATION\n";
        }
    }
    return out;
}

Outcome run_sharpness(const ExperimentConfig& cfg)
{
    std::vector<AffineIFS> families;
    for (const auto& spec : cfg.families()) families.push_back(parse_ifs_spec(spec));
    if (families.empty()) families = sharpness_families({4, 16, 64});
    const auto rows = sharpness_experiment(families, cfg.delta_levels, pipeline(cfg));
    Outcome out;
    std::ostringstream csv;
    write_sharpness_csv(csv, rows);
    out.csv = csv.str();
    for (const auto& r : rows) {
        out.summary += fmt("N=%d c=%s level %d: ratio %.4f, min{2s+1,4s} %.4f, gap %+.4f; N(A+A) %zu <= %.0f (generic %.3g)\n", r.n,
                           r.c.c_str(), r.delta_level, r.ratio, r.target, r.gap(), r.cover_ap_sum, r.cylinder_bound,
                           r.generic_cylinders);
        const bool ok = finite_all({r.h_sum, r.h_prod, r.growth_bits, r.entropy_x, r.ratio}) &&
                        r.rendition_gap() <= kRenditionSlack;
        if (!ok) {
            ++out.violations;
            out.summary += "  INVARIANT VIOLATION\n";
        }
    }
    return out;
}

Outcome run_fuzz(const ExperimentConfig& cfg)
{
    const auto report = fuzz_inequalities(cfg.seed, cfg.trials);
    Outcome out;
    std::ostringstream csv;
    write_fuzz_csv(csv, report);
    out.csv = csv.str();
    for (const auto& c : report.checks) {
        out.summary += fmt("%-24s %d trials, %d violations, worst slack %.3g\n", c.name.c_str(), c.trials, c.violations, c.worst_slack);
    }
    out.violations = report.violations();
    return out;
}

Outcome run_projection(const ExperimentConfig& cfg)
{
    const auto f = parse_ifs_spec(require_family(cfg));
    const auto scan = projection_scan(f, cfg.delta_levels, cfg.sigma, cfg.guard, true, cfg.budget_cells);
    Outcome out;
    std::ostringstream csv;
    write_projection_csv(csv, scan.rows);
    out.csv = csv.str();
    out.summary += fmt("regularity constant C = %.4f at s = %.4f\n", scan.regularity_constant, scan.s);
    for (std::size_t i = 0; i < scan.rows.size(); ++i) {
        const auto& r = scan.rows[i];
        out.summary += fmt("level %d: radial integral %.4f (threshold %.3f), tube collision %.3f bits vs %.3f\n", r.delta_level,
                           r.integral_value, r.threshold, r.collision_bits, scan.tube_bounds[i]);
        if (!(r.integral_value >= 0.0 && r.integral_value <= 1.0) || !finite_all({r.tube_energy, r.collision_bits})) {
            ++out.violations;
            out.summary += "  INVARIANT VIOLATION\n";
        }
    }
    for (const auto& c : scan.conditional) {
        out.summary += fmt("level %d: H((Y-Z)/X | Z) %.3f bits; proof form %.3f, statement form %.3f (eps %.4f)\n", c.delta_level,
                           c.conditional_bits, c.proof_bound, c.statement_bound, c.epsilon);
    }
    return out;
}

Outcome run_regularity(const ExperimentConfig& cfg)
{
    const auto f = parse_ifs_spec(require_family(cfg));
    const auto reports = regularity_scan(f, cfg.delta_levels, cfg.budget_cells);
    Outcome out;
    std::ostringstream csv;
    write_regularity_csv(csv, reports);
    out.csv = csv.str();
    for (const auto& r : reports) {
        out.summary += fmt("level %d, s = %.4f: Frostman %.4f, lower %.4f, upper regular %.4f\n", r.level, r.exponent,
                           r.frostman_constant, r.lower_constant, r.upper_regular_constant);
        if (!finite_all({r.frostman_constant, r.lower_constant, r.upper_regular_constant})) {
            ++out.violations;
            out.summary += "  INVARIANT VIOLATION\n";
        }
    }
    return out;
}

ExperimentConfig build_config(const Flags& flags)
{
    ExperimentConfig cfg;
    if (!flags.config.empty()) {
        std::ifstream in(flags.config);
        if (!in) throw ConfigError("cannot read config file " + flags.config);
        std::stringstream text;
        text << in.rdbuf();
        cfg = parse_config_entries(text.str());
    }
    const std::pair<const char*, const std::string*> overrides[] = {
        {"eta", &flags.eta},         {"levels", &flags.levels}, {"sigma", &flags.sigma},
        {"guard", &flags.guard},     {"budget_cells", &flags.budget_cells},
        {"seed", &flags.seed},       {"trials", &flags.trials}, {"out", &flags.out},
    };
    for (const auto& [key, value] : overrides) {
        if (!value->empty()) apply_setting(cfg, key, *value);
    }
    if (!flags.family.empty()) {
        cfg.family = flags.family.front();
        cfg.extra_families.assign(flags.family.begin() + 1, flags.family.end());
    }
    validate(cfg);
    return cfg;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Discretised sum-product entropy experiments on self-similar measures"};
    app.require_subcommand(1);
    Flags flags;
    const std::map<std::string, std::string> commands = {
        {"main-theorem", "sum and product entropies against (min{2s+1,4s} - eta) j, with covering counts"},
        {"sharpness", "arithmetic-progression families pushed by exp2"},
        {"fuzz-inequalities", "seeded fuzz of submodularity, monotonicity, concavity, Frostman and restriction"},
        {"projection-scan", "radial integral and tube energy across levels"},
        {"regularity", "Frostman, lower and upper-regular constants"},
    };
    for (const auto& [name, help] : commands) {
        auto* sc = app.add_subcommand(name, help);
        sc->add_option("--config", flags.config, "key=value configuration file");
        sc->add_option("--family", flags.family, "IFS spec ap:N=<int>,c=<p/q> (repeatable for sharpness)");
        sc->add_option("--eta", flags.eta, "slack exponent in (0,1)");
        sc->add_option("--levels", flags.levels, "comma-separated delta levels in [4,24]");
        sc->add_option("--sigma", flags.sigma, "multiplicity exponent for projection scans");
        sc->add_option("--guard", flags.guard, "extra refinement bits (>= 4)");
        sc->add_option("--budget-cells", flags.budget_cells, "cylinder and cell budget");
        sc->add_option("--seed", flags.seed, "fuzz seed");
        sc->add_option("--trials", flags.trials, "fuzz trials per check");
        sc->add_option("--out", flags.out, "CSV output path (stdout when omitted)");
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitUsage;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        const ExperimentConfig cfg = build_config(flags);
        Outcome out;
        if (command == "main-theorem") out = run_main_theorem(cfg);
        else if (command == "sharpness") out = run_sharpness(cfg);
        else if (command == "fuzz-inequalities") out = run_fuzz(cfg);
        else if (command == "projection-scan") out = run_projection(cfg);
        else out = run_regularity(cfg);

        if (cfg.output_path.empty()) {
            std::cout << out.csv;
            std::cerr << out.summary;
        } else {
            write_file_atomic(cfg.output_path, out.csv);
            std::cout << out.summary;
        }
        return out.violations == 0 ? kExitOk : kExitViolation;
    } catch (const InternalConsistencyError& e) {
        std::cerr << "invariant violation: " << e.what() << '\n';
        return kExitViolation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    }
}
