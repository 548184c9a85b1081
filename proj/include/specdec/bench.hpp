#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "specdec/context_model.hpp"
#include "specdec/diffusion.hpp"
#include "specdec/engine.hpp"
#include "specdec/errors.hpp"
#include "specdec/rng.hpp"
#include "specdec/textio.hpp"

namespace specdec {

/// Abstract cost units standing in for hardware walltime: the target's
/// parallel pass is the unit, drafter evaluations cost a fraction of it.
/// verify_pos_cost is the (tiny) per-drafted-position surcharge of scoring a
/// longer block in the verify pass; 0 treats verification as free of block
/// length entirely.
struct CostModel {
    double target_call_cost = 1.0;
    double ar_step_cost = 0.06;
    double diff_step_cost = 0.06;
    double verify_pos_cost = 0.0;

    void validate() const {
        if (!(target_call_cost > 0.0)) throw ConfigError("target_call_cost must be > 0");
        if (!(ar_step_cost > 0.0) || !(ar_step_cost < target_call_cost)) {
            throw ConfigError("ar_step_cost must be in (0, target_call_cost)");
        }
        if (!(diff_step_cost > 0.0) || !(diff_step_cost < target_call_cost)) {
            throw ConfigError("diff_step_cost must be in (0, target_call_cost)");
        }
        if (verify_pos_cost < 0.0) throw ConfigError("verify_pos_cost must be >= 0");
    }

    double step_cost(DrafterKind kind) const {
        return kind == DrafterKind::ar ? ar_step_cost : diff_step_cost;
    }

    /// Simulated cost of a finished run. Works for vanilla stats too (no
    /// drafter steps, no drafts).
    double run_cost(const RunStats& stats, DrafterKind kind) const {
        return static_cast<double>(stats.target_calls) * target_call_cost +
               static_cast<double>(stats.drafter_steps) * step_cost(kind) +
               static_cast<double>(stats.gamma) * static_cast<double>(stats.drafts) *
                   verify_pos_cost;
    }
};

struct AlphaEstimate {
    double alpha_hat = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    int64_t positions = 0;
};

/// Normal-approximation 95% binomial interval.
inline AlphaEstimate binomial_ci(int64_t successes, int64_t n) {
    AlphaEstimate e;
    e.positions = n;
    if (n <= 0) return e;
    const double p = static_cast<double>(successes) / static_cast<double>(n);
    const double half = 1.96 * std::sqrt(std::max(0.0, p * (1.0 - p) / static_cast<double>(n)));
    e.alpha_hat = p;
    e.ci_low = std::max(0.0, p - half);
    e.ci_high = std::min(1.0, p + half);
    return e;
}

struct BenchRow {
    std::string scenario;
    std::string target;
    std::string drafter;
    int gamma = 0;
    int T = 0;
    double alpha_hat = 0.0;
    double accepted_per_draft = 0.0;
    int64_t target_calls = 0;
    int64_t drafter_steps = 0;
    double sim_speedup = 1.0;
    double wall_speedup = 1.0;
    uint64_t seed = 0;
    int trials = 0;
};

/// Side-channel statistics for trend assertions; kept out of the CSV so the
/// column schema stays fixed.
struct CellDiag {
    AlphaEstimate alpha;
    double speedup_se = 0.0;
};

struct BenchReport {
    static constexpr const char* kCsvHeader =
        "scenario,target,drafter,gamma,T,alpha_hat,accepted_per_draft,target_calls,"
        "drafter_steps,sim_speedup,wall_speedup,seed,trials";

    std::vector<BenchRow> rows;
    std::vector<CellDiag> diags;
    int best_speedup = -1;   // row index of the fastest speculative cell
    int best_accepted = -1;  // row index of the highest accepted-per-draft cell

    static void write_csv_row(std::ostream& out, const BenchRow& r) {
        out << r.scenario << "," << r.target << "," << r.drafter << "," << r.gamma << "," << r.T
            << "," << textio::fmt_double(r.alpha_hat) << ","
            << textio::fmt_double(r.accepted_per_draft) << "," << r.target_calls << ","
            << r.drafter_steps << "," << textio::fmt_double(r.sim_speedup) << ","
            << textio::fmt_double(r.wall_speedup) << "," << r.seed << "," << r.trials << "\n";
    }

    void to_csv(std::ostream& out) const {
        out << kCsvHeader << "\n";
        for (const auto& r : rows) write_csv_row(out, r);
    }

    /// Human-oriented table. Includes the alpha*gamma product column next to
    /// the counter-based accepted-per-draft so the two framings can be
    /// compared; the counters are the ground truth.
    void write_summary(std::ostream& out) const {
        out << "scenario         drafter                gamma    T   alpha    acc/draft  "
               "alpha*gamma  sim_speedup  wall_speedup\n";
        char buf[256];
        for (size_t i = 0; i < rows.size(); ++i) {
            const auto& r = rows[i];
            std::snprintf(buf, sizeof(buf),
                          "%-16s %-22s %5d %4d   %6.4f   %8.3f   %10.3f   %10.3f   %11.3f%s%s\n",
                          r.scenario.c_str(), r.drafter.c_str(), r.gamma, r.T, r.alpha_hat,
                          r.accepted_per_draft, r.alpha_hat * static_cast<double>(r.gamma),
                          r.sim_speedup, r.wall_speedup,
                          static_cast<int>(i) == best_speedup ? "  <- best speedup" : "",
                          static_cast<int>(i) == best_accepted ? "  <- most accepted" : "");
            out << buf;
        }
    }
};

/// Everything a benchmark cell needs: trained models, prompt pool, budget.
struct Scenario {
    std::string name;
    std::string target_name;
    const ContextModel* target = nullptr;
    const ArDrafter* classic = nullptr;
    const Denoiser* denoiser = nullptr;
    std::vector<std::vector<TokenId>> prompts;
    int max_tokens = 1024;
    double temperature = 1.0;
    uint64_t seed = 1;
    int trials = 8;
    double schedule_floor = 1e-3;
};

/// Cut deterministic prompt windows out of a corpus.
inline std::vector<std::vector<TokenId>> make_prompts(std::span<const TokenId> corpus, int count,
                                                      int length, uint64_t seed) {
    if (static_cast<int>(corpus.size()) < length) {
        throw CorpusTooShort("corpus shorter than requested prompt length");
    }
    SeededRng rng = SeededRng(seed).derive(stream::kPrompts);
    std::vector<std::vector<TokenId>> out;
    out.reserve(static_cast<size_t>(count));
    for (int i = 0; i < count; ++i) {
        size_t start = rng.uniform_index(corpus.size() - static_cast<size_t>(length) + 1);
        out.emplace_back(corpus.begin() + static_cast<std::ptrdiff_t>(start),
                         corpus.begin() + static_cast<std::ptrdiff_t>(start) + length);
    }
    return out;
}

namespace detail {

inline uint64_t cell_stream_id(DrafterKind kind, int gamma, int T) {
    uint64_t k = kind == DrafterKind::ar ? 1 : (kind == DrafterKind::diffusion_multistep ? 2 : 3);
    return stream::kSweepCellBase + k * 1000000ull + static_cast<uint64_t>(gamma) * 1000ull +
           static_cast<uint64_t>(T);
}

}  // namespace detail

/// Run one benchmark cell: `trials` generations with the given drafter
/// settings, each paired with a vanilla run of the same token budget for the
/// wall-clock reference. Per-trial seeds derive from (scenario seed, cell,
/// trial), so any subset of cells can run in any order, or in parallel, and
/// reproduce identical rows.
inline BenchRow bench_cell(const Scenario& sc, DrafterKind kind, int gamma, int T,
                           const CostModel& cost, CellDiag* diag = nullptr) {
    cost.validate();
    if (sc.target == nullptr) throw MissingModel("scenario has no target model");
    if (sc.prompts.empty()) throw ConfigError("scenario has no prompts");
    std::unique_ptr<DiffusionDrafter> owned;
    const Drafter* drafter = nullptr;
    if (kind == DrafterKind::ar) {
        if (sc.classic == nullptr) throw MissingModel("scenario has no classic drafter");
        drafter = sc.classic;
    } else {
        if (sc.denoiser == nullptr) throw MissingModel("scenario has no denoiser");
        owned = std::make_unique<DiffusionDrafter>(*sc.denoiser, T,
                                                   kind == DrafterKind::diffusion_factorized
                                                       ? DiffusionMode::factorized
                                                       : DiffusionMode::multistep,
                                                   sc.schedule_floor);
        drafter = owned.get();
    }
    SeededRng cell_rng = SeededRng(sc.seed).derive(detail::cell_stream_id(kind, gamma, T));

    RunStats total;
    total.gamma = gamma;
    double method_cost = 0.0;
    double vanilla_cost = 0.0;
    int64_t method_wall = 0;
    int64_t vanilla_wall = 0;
    std::vector<double> trial_costs;
    trial_costs.reserve(static_cast<size_t>(sc.trials));
    for (int trial = 0; trial < sc.trials; ++trial) {
        SeededRng trial_rng = cell_rng.derive(stream::kTrialBase + static_cast<uint64_t>(trial));
        const auto& prompt = sc.prompts[static_cast<size_t>(trial) % sc.prompts.size()];
        SpecConfig cfg;
        cfg.gamma = gamma;
        cfg.T = std::max(1, T);
        cfg.temperature = sc.temperature;
        cfg.drafter_kind = kind;
        cfg.seed = trial_rng.seed();
        cfg.max_tokens = sc.max_tokens;
        auto [seq, stats] = generate(*sc.target, *drafter, prompt, cfg);
        const double c = cost.run_cost(stats, kind);
        method_cost += c;
        trial_costs.push_back(c);
        method_wall += stats.wall_ns;
        total.target_calls += stats.target_calls;
        total.drafter_steps += stats.drafter_steps;
        total.drafts += stats.drafts;
        total.accepted_total += stats.accepted_total;
        total.emitted_tokens += stats.emitted_tokens;

        SeededRng vrng = trial_rng.derive(stream::kVanilla);
        auto [vseq, vstats] = vanilla_generate(*sc.target, prompt, sc.max_tokens, sc.temperature,
                                               vrng);
        vanilla_cost += cost.run_cost(vstats, kind);
        vanilla_wall += vstats.wall_ns;
    }

    BenchRow row;
    row.scenario = sc.name;
    row.target = sc.target_name;
    row.drafter = drafter->name();
    row.gamma = gamma;
    row.T = kind == DrafterKind::ar ? 0 : std::max(1, T);
    row.alpha_hat = total.alpha_hat();
    row.accepted_per_draft = total.accepted_per_draft();
    row.target_calls = total.target_calls;
    row.drafter_steps = total.drafter_steps;
    row.sim_speedup = vanilla_cost / method_cost;
    row.wall_speedup = method_wall > 0
                           ? static_cast<double>(vanilla_wall) / static_cast<double>(method_wall)
                           : 1.0;
    row.seed = sc.seed;
    row.trials = sc.trials;
    if (diag != nullptr) {
        diag->alpha = binomial_ci(total.accepted_total,
                                  static_cast<int64_t>(gamma) * total.drafts);
        // Delta-method standard error of the aggregate cost ratio from the
        // per-trial cost spread.
        const double n = static_cast<double>(trial_costs.size());
        double mean = method_cost / n;
        double var = 0.0;
        for (double c : trial_costs) var += (c - mean) * (c - mean);
        var = trial_costs.size() > 1 ? var / (n - 1.0) : 0.0;
        diag->speedup_se = row.sim_speedup * std::sqrt(var / n) / mean;
    }
    return row;
}

inline BenchRow vanilla_row(const Scenario& sc) {
    BenchRow row;
    row.scenario = sc.name;
    row.target = sc.target_name;
    row.drafter = "vanilla";
    row.seed = sc.seed;
    row.trials = sc.trials;
    row.sim_speedup = 1.0;
    row.wall_speedup = 1.0;
    row.target_calls = static_cast<int64_t>(sc.trials) * sc.max_tokens;
    return row;
}

/// Empirical acceptance rate over single draft-verify rounds.
inline AlphaEstimate measure_alpha(const ContextModel& target, const Drafter& drafter,
                                   std::span<const std::vector<TokenId>> prompts, int trials,
                                   const SpecConfig& cfg) {
    if (trials < 1) throw ConfigError("trials must be >= 1");
    if (prompts.empty()) throw ConfigError("need at least one prompt");
    int64_t accepted = 0;
    RunStats stats;
    stats.gamma = cfg.gamma;
    for (int i = 0; i < trials; ++i) {
        SeededRng trial_rng = SeededRng(cfg.seed).derive(stream::kTrialBase +
                                                         static_cast<uint64_t>(i));
        SeededRng draft_rng = trial_rng.derive(cfg.drafter_kind == DrafterKind::ar
                                                   ? stream::kArDraft
                                                   : stream::kDiffusionDraft);
        SeededRng verify_rng = trial_rng.derive(stream::kVerify);
        const auto& prompt = prompts[static_cast<size_t>(i) % prompts.size()];
        StepOutcome out = spec_step(target, drafter, prompt, cfg, draft_rng, verify_rng, stats);
        accepted += out.accepted;
    }
    return binomial_ci(accepted, static_cast<int64_t>(cfg.gamma) * static_cast<int64_t>(trials));
}

namespace detail {

inline void flag_best(BenchReport& report) {
    for (size_t i = 0; i < report.rows.size(); ++i) {
        const auto& r = report.rows[i];
        if (r.drafter == "vanilla") continue;
        if (report.best_speedup < 0 ||
            r.sim_speedup > report.rows[static_cast<size_t>(report.best_speedup)].sim_speedup) {
            report.best_speedup = static_cast<int>(i);
        }
        if (report.best_accepted < 0 ||
            r.accepted_per_draft >
                report.rows[static_cast<size_t>(report.best_accepted)].accepted_per_draft) {
            report.best_accepted = static_cast<int>(i);
        }
    }
}

}  // namespace detail

/// Vanilla baseline plus one classic and one diffusion configuration over
/// identical prompts, seeds, and token budget.
inline BenchReport run_benchmark(const Scenario& sc, const CostModel& cost, int classic_gamma,
                                 int diff_gamma, int diff_T) {
    BenchReport report;
    report.rows.push_back(vanilla_row(sc));
    report.diags.emplace_back();
    CellDiag d1;
    report.rows.push_back(bench_cell(sc, DrafterKind::ar, classic_gamma, 0, cost, &d1));
    report.diags.push_back(d1);
    CellDiag d2;
    report.rows.push_back(
        bench_cell(sc, DrafterKind::diffusion_multistep, diff_gamma, diff_T, cost, &d2));
    report.diags.push_back(d2);
    detail::flag_best(report);
    return report;
}

/// Full factorial (gamma, T) grid for the diffusion drafter, with optional
/// classic rows (one per gamma) for side-by-side ratios. Cells are
/// independent and seeded by position, so the grid can be computed in any
/// order or split across threads.
inline BenchReport sweep(std::span<const int> gammas, std::span<const int> Ts, const Scenario& sc,
                         const CostModel& cost, bool include_classic = true) {
    if (gammas.empty() || Ts.empty()) throw ConfigError("sweep ranges must be non-empty");
    BenchReport report;
    for (int gamma : gammas) {
        if (include_classic) {
            CellDiag d;
            report.rows.push_back(bench_cell(sc, DrafterKind::ar, gamma, 0, cost, &d));
            report.diags.push_back(d);
        }
        for (int T : Ts) {
            CellDiag d;
            report.rows.push_back(
                bench_cell(sc, DrafterKind::diffusion_multistep, gamma, T, cost, &d));
            report.diags.push_back(d);
        }
    }
    detail::flag_best(report);
    return report;
}

/// The small-budget variant: identical pipeline, generation capped at 100
/// tokens, which shifts the optimal gamma down.
inline BenchReport short_sequence_scenario(Scenario sc, std::span<const int> gammas,
                                           std::span<const int> Ts, const CostModel& cost,
                                           bool include_classic = true) {
    sc.max_tokens = std::min(sc.max_tokens, 100);
    return sweep(gammas, Ts, sc, cost, include_classic);
}

struct PlotPoint {
    double x = 0.0;
    double y = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
};

/// Plain-text plot data: comment header then one "x y ci_low ci_high" line
/// per point.
inline void write_plot(std::ostream& out, const std::string& title,
                       std::span<const PlotPoint> pts) {
    out << "# " << title << "\n";
    out << "x y ci_low ci_high\n";
    for (const auto& p : pts) {
        out << textio::fmt_double(p.x) << " " << textio::fmt_double(p.y) << " "
            << textio::fmt_double(p.ci_low) << " " << textio::fmt_double(p.ci_high) << "\n";
    }
}

}  // namespace specdec
