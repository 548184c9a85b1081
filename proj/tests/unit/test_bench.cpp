#include <gtest/gtest.h>

#include <sstream>
#include <string>
#include <vector>

#include "specdec/bench.hpp"
#include "specdec/errors.hpp"
#include "specdec/textio.hpp"
#include "specdec/vocab.hpp"

using namespace specdec;

namespace {

// Target and classic drafter trained identically, so every draft is accepted
// and the accounting becomes exact arithmetic.
struct PerfectScenario {
    Tokenized tk;
    ContextModel target;
    ArDrafter classic;
    Denoiser denoiser;
    Scenario sc;

    explicit PerfectScenario(int max_tokens = 60)
        : tk(tokenize_bytes("abcabcabcabcabcabcabcabcabcabc")),
          target(ContextModel::train(tk.tokens, tk.vocab, 1, 0.05)),
          classic(ContextModel::train(tk.tokens, tk.vocab, 1, 0.05)) {
        DenoiserConfig cfg;
        cfg.window = 2;
        cfg.pos_buckets = 4;
        cfg.noise_buckets = 2;
        denoiser = Denoiser(tk.vocab, cfg, AbsorbingSchedule(4));
        sc.name = "unit";
        sc.target_name = "ngram-1";
        sc.target = &target;
        sc.classic = &classic;
        sc.denoiser = &denoiser;
        sc.prompts = make_prompts(tk.tokens, 4, 3, 1);
        sc.max_tokens = max_tokens;
        sc.trials = 3;
        sc.seed = 1;
    }
};

// The wall_speedup column is measured from real clocks, so byte comparisons
// must drop it (column index 10).
std::string strip_wall_column(const std::string& csv) {
    std::string out;
    for (const auto& line : textio::split(csv, '\n')) {
        if (line.empty()) continue;
        auto fields = textio::split(line, ',');
        std::string joined;
        for (size_t i = 0; i < fields.size(); ++i) {
            if (i == 10) continue;
            if (!joined.empty()) joined += ',';
            joined += fields[i];
        }
        out += joined;
        out += '\n';
    }
    return out;
}

}  // namespace

TEST(CostModel, RunCostArithmetic) {
    CostModel cost;
    cost.target_call_cost = 1.0;
    cost.ar_step_cost = 0.06;
    cost.diff_step_cost = 0.08;
    cost.verify_pos_cost = 0.01;
    RunStats stats;
    stats.target_calls = 3;
    stats.drafter_steps = 10;
    stats.gamma = 5;
    stats.drafts = 2;
    EXPECT_NEAR(cost.run_cost(stats, DrafterKind::ar), 3.0 + 0.6 + 0.1, 1e-15);
    EXPECT_NEAR(cost.run_cost(stats, DrafterKind::diffusion_multistep), 3.0 + 0.8 + 0.1, 1e-15);
}

TEST(CostModel, ValidatesRanges) {
    CostModel c;
    EXPECT_NO_THROW(c.validate());
    c.ar_step_cost = 1.5;
    EXPECT_THROW(c.validate(), ConfigError);
    c = {};
    c.diff_step_cost = 0.0;
    EXPECT_THROW(c.validate(), ConfigError);
    c = {};
    c.verify_pos_cost = -0.1;
    EXPECT_THROW(c.validate(), ConfigError);
    c = {};
    c.target_call_cost = 0.0;
    EXPECT_THROW(c.validate(), ConfigError);
}

TEST(BinomialCi, BoundsAndDegenerateCases) {
    AlphaEstimate e = binomial_ci(50, 100);
    EXPECT_NEAR(e.alpha_hat, 0.5, 1e-15);
    EXPECT_LT(e.ci_low, 0.5);
    EXPECT_GT(e.ci_high, 0.5);
    EXPECT_EQ(binomial_ci(0, 0).alpha_hat, 0.0);
    AlphaEstimate full = binomial_ci(100, 100);
    EXPECT_EQ(full.alpha_hat, 1.0);
    EXPECT_EQ(full.ci_high, 1.0);
}

TEST(BenchCell, PerfectDrafterSpeedupIsExactArithmetic) {
    // gamma=5, all accepted: every round emits 6 tokens, 60 tokens = 10 rounds.
    // Cost: 10 target calls + 50 drafter steps * 0.06 = 13 vs vanilla 60.
    PerfectScenario p(60);
    CostModel cost;  // defaults: 1.0 / 0.06 / 0.06 / 0
    CellDiag diag;
    BenchRow row = bench_cell(p.sc, DrafterKind::ar, 5, 0, cost, &diag);
    EXPECT_EQ(row.alpha_hat, 1.0);
    EXPECT_EQ(row.accepted_per_draft, 5.0);
    EXPECT_NEAR(row.sim_speedup, 60.0 / 13.0, 1e-12);
    EXPECT_EQ(row.target_calls, 3 * 10);
    EXPECT_EQ(row.drafter_steps, 3 * 50);
    EXPECT_EQ(row.T, 0);
    EXPECT_EQ(row.drafter, "classic");
    EXPECT_EQ(diag.alpha.alpha_hat, 1.0);
    EXPECT_EQ(diag.speedup_se, 0.0);  // identical trials, zero spread
}

TEST(BenchCell, DiffusionStepsScaleWithTNotGamma) {
    PerfectScenario p(48);
    CostModel cost;
    BenchRow narrow = bench_cell(p.sc, DrafterKind::diffusion_multistep, 4, 6, cost);
    BenchRow wide = bench_cell(p.sc, DrafterKind::diffusion_multistep, 12, 6, cost);
    // T denoiser passes per draft, regardless of how many tokens are drafted.
    EXPECT_EQ(narrow.drafter_steps, 6 * narrow.target_calls);
    EXPECT_EQ(wide.drafter_steps, 6 * wide.target_calls);
    EXPECT_EQ(narrow.drafter, "diffusion");
    EXPECT_EQ(narrow.T, 6);
}

TEST(BenchCell, SpeedupInvariantUnderCostRescaling) {
    PerfectScenario p(48);
    CostModel base;
    base.verify_pos_cost = 0.004;
    CostModel doubled = base;
    doubled.target_call_cost *= 2.0;
    doubled.ar_step_cost *= 2.0;
    doubled.diff_step_cost *= 2.0;
    doubled.verify_pos_cost *= 2.0;
    BenchRow a = bench_cell(p.sc, DrafterKind::diffusion_multistep, 6, 2, base);
    BenchRow b = bench_cell(p.sc, DrafterKind::diffusion_multistep, 6, 2, doubled);
    EXPECT_NEAR(a.sim_speedup, b.sim_speedup, 1e-12);
}

TEST(BenchCell, MissingModelsThrow) {
    PerfectScenario p;
    CostModel cost;
    Scenario no_target = p.sc;
    no_target.target = nullptr;
    EXPECT_THROW(bench_cell(no_target, DrafterKind::ar, 2, 0, cost), MissingModel);
    Scenario no_classic = p.sc;
    no_classic.classic = nullptr;
    EXPECT_THROW(bench_cell(no_classic, DrafterKind::ar, 2, 0, cost), MissingModel);
    Scenario no_denoiser = p.sc;
    no_denoiser.denoiser = nullptr;
    EXPECT_THROW(bench_cell(no_denoiser, DrafterKind::diffusion_multistep, 2, 2, cost),
                 MissingModel);
}

TEST(Sweep, GridShapeAndDeterminism) {
    PerfectScenario p(36);
    CostModel cost;
    std::vector<int> gammas{2, 4};
    std::vector<int> Ts{1, 2, 4};
    BenchReport r1 = sweep(gammas, Ts, p.sc, cost);
    EXPECT_EQ(r1.rows.size(), 2u * (1u + 3u));  // classic row + one per T, per gamma
    EXPECT_EQ(r1.diags.size(), r1.rows.size());

    BenchReport r2 = sweep(gammas, Ts, p.sc, cost);
    std::ostringstream c1, c2;
    r1.to_csv(c1);
    r2.to_csv(c2);
    EXPECT_EQ(strip_wall_column(c1.str()), strip_wall_column(c2.str()));
}

TEST(Sweep, CellsAreIndependentOfGridPosition) {
    PerfectScenario p(36);
    CostModel cost;
    std::vector<int> gammas{2, 4};
    std::vector<int> Ts{1, 2};
    BenchReport grid = sweep(gammas, Ts, p.sc, cost);
    // The (gamma=4, T=2) cell recomputed alone must match its grid row.
    BenchRow alone = bench_cell(p.sc, DrafterKind::diffusion_multistep, 4, 2, cost);
    const BenchRow& in_grid = grid.rows.back();
    EXPECT_EQ(in_grid.gamma, 4);
    EXPECT_EQ(in_grid.T, 2);
    EXPECT_EQ(alone.alpha_hat, in_grid.alpha_hat);
    EXPECT_EQ(alone.sim_speedup, in_grid.sim_speedup);
    EXPECT_EQ(alone.target_calls, in_grid.target_calls);
}

TEST(Sweep, ShortSequenceVariantCapsTheBudget) {
    PerfectScenario p(400);
    CostModel cost;
    std::vector<int> gammas{3};
    std::vector<int> Ts{2};
    BenchReport shorter = short_sequence_scenario(p.sc, gammas, Ts, cost);
    Scenario capped = p.sc;
    capped.max_tokens = 100;
    BenchReport expect = sweep(gammas, Ts, capped, cost);
    std::ostringstream a, b;
    shorter.to_csv(a);
    expect.to_csv(b);
    EXPECT_EQ(strip_wall_column(a.str()), strip_wall_column(b.str()));
}

TEST(RunBenchmark, ThreeRowsWithVanillaBaseline) {
    PerfectScenario p(48);
    CostModel cost;
    BenchReport r = run_benchmark(p.sc, cost, 3, 6, 2);
    ASSERT_EQ(r.rows.size(), 3u);
    EXPECT_EQ(r.rows[0].drafter, "vanilla");
    EXPECT_EQ(r.rows[0].sim_speedup, 1.0);
    EXPECT_EQ(r.rows[1].drafter, "classic");
    EXPECT_EQ(r.rows[1].gamma, 3);
    EXPECT_EQ(r.rows[2].drafter, "diffusion");
    EXPECT_EQ(r.rows[2].gamma, 6);
    EXPECT_GE(r.best_speedup, 1);  // never the vanilla row
}

TEST(MakePrompts, DeterministicWindows) {
    Tokenized tk = tokenize_bytes("abcdefghabcdefgh");
    auto p1 = make_prompts(tk.tokens, 5, 4, 9);
    auto p2 = make_prompts(tk.tokens, 5, 4, 9);
    EXPECT_EQ(p1, p2);
    ASSERT_EQ(p1.size(), 5u);
    for (const auto& p : p1) EXPECT_EQ(p.size(), 4u);
    EXPECT_THROW(make_prompts(tk.tokens, 1, 100, 9), CorpusTooShort);
}

TEST(MeasureAlpha, PerfectDrafterSaturates) {
    PerfectScenario p;
    SpecConfig cfg;
    cfg.gamma = 5;
    cfg.drafter_kind = DrafterKind::ar;
    cfg.seed = 2;
    AlphaEstimate e = measure_alpha(p.target, p.classic, p.sc.prompts, 200, cfg);
    EXPECT_EQ(e.alpha_hat, 1.0);
    EXPECT_EQ(e.positions, 1000);
}

TEST(BenchReport, CsvHeaderIsStable) {
    EXPECT_STREQ(BenchReport::kCsvHeader,
                 "scenario,target,drafter,gamma,T,alpha_hat,accepted_per_draft,target_calls,"
                 "drafter_steps,sim_speedup,wall_speedup,seed,trials");
}

TEST(BenchReport, CsvRowFormat) {
    BenchRow r;
    r.scenario = "s";
    r.target = "t";
    r.drafter = "d";
    r.gamma = 4;
    r.T = 2;
    r.alpha_hat = 0.5;
    r.accepted_per_draft = 2.0;
    r.target_calls = 7;
    r.drafter_steps = 14;
    r.sim_speedup = 3.5;
    r.wall_speedup = 1.25;
    r.seed = 9;
    r.trials = 3;
    std::ostringstream os;
    BenchReport::write_csv_row(os, r);
    EXPECT_EQ(os.str(), "s,t,d,4,2,0.5,2,7,14,3.5,1.25,9,3\n");
}

TEST(WritePlot, HeaderAndPointLines) {
    std::vector<PlotPoint> pts{{1.0, 2.0, 1.5, 2.5}};
    std::ostringstream os;
    write_plot(os, "demo", pts);
    EXPECT_EQ(os.str(), "# demo\nx y ci_low ci_high\n1 2 1.5 2.5\n");
}
