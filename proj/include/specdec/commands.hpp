#pragma once

#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "specdec/bench.hpp"
#include "specdec/config.hpp"
#include "specdec/context_model.hpp"
#include "specdec/diffusion.hpp"
#include "specdec/engine.hpp"
#include "specdec/errors.hpp"
#include "specdec/oracle.hpp"
#include "specdec/stream_stats.hpp"
#include "specdec/synthetic.hpp"
#include "specdec/textio.hpp"
#include "specdec/vocab.hpp"

namespace specdec {

// --------------------------------------------------------------- model set

struct TrainedModels {
    ContextModel target;
    ArDrafter classic;
    Denoiser denoiser;
    bool has_target = false;
    bool has_classic = false;
    bool has_denoiser = false;
};

struct ModelNeeds {
    bool target = false;
    bool classic = false;
    bool denoiser = false;
};

inline Tokenized read_and_tokenize(const RunConfig& cfg) {
    const std::string text = textio::read_file(cfg.corpus_path);
    return cfg.byte_mode ? tokenize_bytes(text) : tokenize_whitespace(text);
}

inline TrainedModels train_models(const RunConfig& cfg, std::ostream& log) {
    Tokenized tk = read_and_tokenize(cfg);
    TrainedModels m;

    m.target = ContextModel::train(tk.tokens, tk.vocab, cfg.target_order, cfg.target_lambda,
                                   cfg.byte_mode);
    m.has_target = true;
    log << "target model: order " << cfg.target_order << ", vocab " << tk.vocab.size()
        << ", corpus " << tk.tokens.size() << " tokens\n";

    m.classic = ArDrafter(ContextModel::train(tk.tokens, tk.vocab, cfg.classic_order,
                                              cfg.classic_lambda, cfg.byte_mode));
    m.has_classic = true;
    log << "classic drafter: order " << cfg.classic_order << "\n";

    SeededRng train_rng = SeededRng(cfg.seed).derive(stream::kTrain);
    AbsorbingSchedule schedule(cfg.train_steps, cfg.schedule_floor);
    DenoiserConfig dc;
    dc.window = cfg.feature_window;
    dc.pos_buckets = cfg.pos_buckets;
    dc.noise_buckets = cfg.noise_buckets;
    m.denoiser = train_denoiser(tk.tokens, tk.vocab, schedule, cfg.epochs, cfg.learning_rate,
                                train_rng, dc, cfg.window_len);
    m.denoiser.set_byte_mode(cfg.byte_mode);
    m.has_denoiser = true;
    const auto& losses = m.denoiser.epoch_losses();
    if (!losses.empty()) {
        char buf[128];
        std::snprintf(buf, sizeof(buf), "denoiser: %d epochs, loss %.4f -> %.4f\n", cfg.epochs,
                      losses.front(), losses.back());
        log << buf;
    } else {
        log << "denoiser: 0 epochs (untrained parameters)\n";
    }
    return m;
}

namespace detail {

inline void require_checkpoint(const std::string& path) {
    if (!std::filesystem::exists(std::filesystem::path(path))) {
        throw MissingCheckpoint("missing checkpoint '" + path +
                                "'; run the train command first");
    }
}

}  // namespace detail

inline TrainedModels load_models(const RunConfig& cfg, ModelNeeds needs) {
    TrainedModels m;
    if (needs.target) {
        detail::require_checkpoint(cfg.target_checkpoint());
        m.target = ContextModel::load_file(cfg.target_checkpoint());
        m.has_target = true;
    }
    if (needs.classic) {
        detail::require_checkpoint(cfg.classic_checkpoint());
        m.classic = ArDrafter(ContextModel::load_file(cfg.classic_checkpoint()));
        m.has_classic = true;
    }
    if (needs.denoiser) {
        detail::require_checkpoint(cfg.denoiser_checkpoint());
        m.denoiser = Denoiser::load_file(cfg.denoiser_checkpoint());
        m.has_denoiser = true;
    }
    if (m.has_target && m.has_classic &&
        m.target.vocab().symbols != m.classic.inner().vocab().symbols) {
        throw ConfigError("target and classic checkpoints disagree on vocabulary");
    }
    if (m.has_target && m.has_denoiser &&
        m.target.vocab().symbols != m.denoiser.vocab().symbols) {
        throw ConfigError("target and denoiser checkpoints disagree on vocabulary");
    }
    return m;
}

inline void write_effective_config(const RunConfig& cfg) {
    std::filesystem::create_directories(std::filesystem::path(cfg.out_dir));
    std::ostringstream os;
    cfg.echo(os);
    textio::write_file(cfg.out_dir + "/effective-config.txt", os.str());
}

/// Maps thrown errors to process exit codes: 2 for configuration and missing
/// prerequisite problems, 1 for everything else that goes wrong at runtime.
template <typename Fn>
inline int run_guarded(Fn&& fn, std::ostream& err = std::cerr) {
    try {
        return fn();
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const MissingCheckpoint& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const MissingModel& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const CorpusTooShort& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return 1;
    }
}

// ------------------------------------------------------------------- train

inline int cmd_train(const RunConfig& cfg, std::ostream& out) {
    write_effective_config(cfg);
    TrainedModels m = train_models(cfg, out);
    m.target.save_file(cfg.target_checkpoint());
    m.classic.inner().save_file(cfg.classic_checkpoint());
    m.denoiser.save_file(cfg.denoiser_checkpoint());
    out << "wrote " << cfg.target_checkpoint() << "\n";
    out << "wrote " << cfg.classic_checkpoint() << "\n";
    out << "wrote " << cfg.denoiser_checkpoint() << "\n";
    return 0;
}

// ---------------------------------------------------------------- generate

struct GenerateOptions {
    std::string method = "specdiff";  // vanilla | spec | specdiff
    std::string prompt;
};

inline int cmd_generate(const RunConfig& cfg, const GenerateOptions& opt, std::ostream& out) {
    ModelNeeds needs;
    needs.target = true;
    if (opt.method == "vanilla") {
        // target only
    } else if (opt.method == "spec") {
        needs.classic = true;
    } else if (opt.method == "specdiff") {
        needs.denoiser = true;
    } else {
        throw ConfigError("unknown method '" + opt.method +
                          "': expected vanilla, spec, or specdiff");
    }
    TrainedModels m = load_models(cfg, needs);
    const bool byte_mode = m.target.byte_mode();
    std::vector<TokenId> prompt_ids = encode_with_vocab(m.target.vocab(), opt.prompt, byte_mode);
    if (prompt_ids.empty()) throw ConfigError("prompt is empty after encoding");

    cfg.cost.validate();
    std::vector<TokenId> seq;
    RunStats stats;
    DrafterKind kind = DrafterKind::ar;
    if (opt.method == "vanilla") {
        SeededRng rng = SeededRng(cfg.seed).derive(stream::kVanilla);
        std::tie(seq, stats) =
            vanilla_generate(m.target, prompt_ids, cfg.max_tokens, cfg.temperature, rng);
    } else {
        SpecConfig scfg;
        scfg.gamma = cfg.gamma;
        scfg.temperature = cfg.temperature;
        scfg.seed = cfg.seed;
        scfg.max_tokens = cfg.max_tokens;
        if (opt.method == "spec") {
            scfg.drafter_kind = DrafterKind::ar;
            scfg.T = 1;  // unused by the sequential drafter
            std::tie(seq, stats) = generate(m.target, m.classic, prompt_ids, scfg);
        } else {
            DrafterKind configured = parse_drafter_kind(cfg.drafter_kind);
            scfg.drafter_kind = configured == DrafterKind::diffusion_factorized
                                    ? DrafterKind::diffusion_factorized
                                    : DrafterKind::diffusion_multistep;
            scfg.T = cfg.steps;
            DiffusionDrafter drafter(m.denoiser, cfg.steps,
                                     scfg.drafter_kind == DrafterKind::diffusion_factorized
                                         ? DiffusionMode::factorized
                                         : DiffusionMode::multistep,
                                     cfg.schedule_floor);
            std::tie(seq, stats) = generate(m.target, drafter, prompt_ids, scfg);
        }
        kind = scfg.drafter_kind;
    }

    out << detokenize(m.target.vocab(), seq, byte_mode) << "\n";

    double sim_speedup = 1.0;
    if (opt.method != "vanilla") {
        const double vanilla_cost =
            static_cast<double>(stats.emitted_tokens) * cfg.cost.target_call_cost;
        const double cost = cfg.cost.run_cost(stats, kind);
        sim_speedup = cost > 0.0 ? vanilla_cost / cost : 1.0;
    }
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "stats: tokens=%lld drafts=%lld alpha=%.4f accepted_per_draft=%.3f "
                  "drafter_steps=%lld sim_speedup=%.3f\n",
                  static_cast<long long>(stats.emitted_tokens),
                  static_cast<long long>(stats.drafts), stats.alpha_hat(),
                  stats.accepted_per_draft(), static_cast<long long>(stats.drafter_steps),
                  sim_speedup);
    out << buf;
    return 0;
}

// ------------------------------------------------------------------- bench

inline Scenario make_scenario(const RunConfig& cfg, const TrainedModels& m,
                              std::span<const TokenId> corpus) {
    Scenario sc;
    sc.name = cfg.name;
    sc.target_name = "ngram-" + std::to_string(m.has_target ? m.target.order() : 0);
    sc.target = m.has_target ? &m.target : nullptr;
    sc.classic = m.has_classic ? &m.classic : nullptr;
    sc.denoiser = m.has_denoiser ? &m.denoiser : nullptr;
    sc.prompts = make_prompts(corpus, cfg.prompt_count, cfg.prompt_len, cfg.seed);
    sc.max_tokens = cfg.max_tokens;
    sc.temperature = cfg.temperature;
    sc.seed = cfg.seed;
    sc.trials = cfg.trials;
    sc.schedule_floor = cfg.schedule_floor;
    return sc;
}

inline std::vector<TokenId> reencode_corpus(const RunConfig& cfg, const ContextModel& target) {
    const std::string text = textio::read_file(cfg.corpus_path);
    return encode_with_vocab(target.vocab(), text, target.byte_mode());
}

inline int cmd_bench(const RunConfig& cfg, std::ostream& out) {
    write_effective_config(cfg);
    cfg.cost.validate();
    TrainedModels m = load_models(cfg, ModelNeeds{true, true, true});
    std::vector<TokenId> corpus = reencode_corpus(cfg, m.target);
    Scenario sc = make_scenario(cfg, m, corpus);

    BenchReport report = run_benchmark(sc, cfg.cost, cfg.classic_gamma, cfg.gamma, cfg.steps);

    std::ostringstream csv;
    report.to_csv(csv);
    textio::write_file(cfg.out_dir + "/bench.csv", csv.str());

    std::ostringstream sum;
    report.write_summary(sum);
    textio::write_file(cfg.out_dir + "/bench-summary.txt", sum.str());
    out << sum.str();
    out << "wrote " << cfg.out_dir << "/bench.csv\n";
    return 0;
}

// ------------------------------------------------------------------- sweep

/// Runs the full (gamma, T) grid, optionally across threads. Cells are
/// seeded by grid position, so every execution order produces identical
/// rows; completed rows are flushed to the CSV as a contiguous prefix so an
/// interrupted sweep still leaves a usable file.
inline int cmd_sweep(const RunConfig& cfg, int jobs, std::ostream& out) {
    write_effective_config(cfg);
    cfg.cost.validate();
    if (cfg.sweep_gammas.empty() || cfg.sweep_steps.empty()) {
        throw ConfigError("sweep ranges must be non-empty");
    }
    TrainedModels m = load_models(cfg, ModelNeeds{true, true, true});
    std::vector<TokenId> corpus = reencode_corpus(cfg, m.target);
    Scenario sc = make_scenario(cfg, m, corpus);

    struct Cell {
        DrafterKind kind;
        int gamma;
        int T;
    };
    std::vector<Cell> cells;
    for (int gamma : cfg.sweep_gammas) {
        cells.push_back({DrafterKind::ar, gamma, 0});
        for (int T : cfg.sweep_steps) {
            cells.push_back({DrafterKind::diffusion_multistep, gamma, T});
        }
    }

    const std::string csv_path = cfg.out_dir + "/sweep.csv";
    std::ofstream csv(csv_path);
    if (!csv) throw ConfigError("cannot write '" + csv_path + "'");
    csv << BenchReport::kCsvHeader << "\n" << std::flush;

    std::vector<BenchRow> rows(cells.size());
    std::vector<CellDiag> diags(cells.size());
    std::vector<char> done(cells.size(), 0);
    std::atomic<size_t> next{0};
    std::atomic<bool> bail{false};
    std::mutex mu;
    size_t flushed = 0;
    std::exception_ptr first_error;

    auto worker = [&]() {
        for (;;) {
            if (bail.load()) return;
            const size_t i = next.fetch_add(1);
            if (i >= cells.size()) return;
            try {
                CellDiag d;
                BenchRow row = bench_cell(sc, cells[i].kind, cells[i].gamma, cells[i].T,
                                          cfg.cost, &d);
                std::lock_guard<std::mutex> lock(mu);
                rows[i] = std::move(row);
                diags[i] = d;
                done[i] = 1;
                while (flushed < cells.size() && done[flushed]) {
                    BenchReport::write_csv_row(csv, rows[flushed]);
                    ++flushed;
                }
                csv << std::flush;
            } catch (...) {
                std::lock_guard<std::mutex> lock(mu);
                if (!first_error) first_error = std::current_exception();
                bail.store(true);
                return;
            }
        }
    };

    const int n_threads = std::max(1, std::min<int>(jobs, static_cast<int>(cells.size())));
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<size_t>(n_threads));
        for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (first_error) std::rethrow_exception(first_error);

    BenchReport report;
    report.rows = std::move(rows);
    report.diags = std::move(diags);
    detail::flag_best(report);

    std::ostringstream sum;
    report.write_summary(sum);
    textio::write_file(cfg.out_dir + "/sweep-summary.txt", sum.str());
    out << sum.str();

    // Gamma slice closest to the configured gamma for the per-T plots.
    int gslice = cfg.sweep_gammas.front();
    for (int g : cfg.sweep_gammas) {
        if (std::abs(g - cfg.gamma) < std::abs(gslice - cfg.gamma)) gslice = g;
    }
    // Best reverse-step count across all diffusion cells for the gamma plot.
    int best_T = cfg.sweep_steps.front();
    double best_speed = -1.0;
    for (const auto& row : report.rows) {
        if (row.drafter == "classic" || row.drafter == "vanilla") continue;
        if (row.sim_speedup > best_speed) {
            best_speed = row.sim_speedup;
            best_T = row.T;
        }
    }

    std::vector<PlotPoint> alpha_pts, speed_t_pts, speed_g_pts;
    for (size_t i = 0; i < report.rows.size(); ++i) {
        const BenchRow& row = report.rows[i];
        if (row.drafter == "classic" || row.drafter == "vanilla") continue;
        const CellDiag& d = report.diags[i];
        if (row.gamma == gslice) {
            alpha_pts.push_back({static_cast<double>(row.T), row.alpha_hat, d.alpha.ci_low,
                                 d.alpha.ci_high});
            speed_t_pts.push_back({static_cast<double>(row.T), row.sim_speedup,
                                   row.sim_speedup - 1.96 * d.speedup_se,
                                   row.sim_speedup + 1.96 * d.speedup_se});
        }
        if (row.T == best_T) {
            speed_g_pts.push_back({static_cast<double>(row.gamma), row.sim_speedup,
                                   row.sim_speedup - 1.96 * d.speedup_se,
                                   row.sim_speedup + 1.96 * d.speedup_se});
        }
    }
    auto by_x = [](const PlotPoint& a, const PlotPoint& b) { return a.x < b.x; };
    std::sort(alpha_pts.begin(), alpha_pts.end(), by_x);
    std::sort(speed_t_pts.begin(), speed_t_pts.end(), by_x);
    std::sort(speed_g_pts.begin(), speed_g_pts.end(), by_x);

    {
        std::ostringstream os;
        write_plot(os, "acceptance rate vs reverse steps (gamma=" + std::to_string(gslice) + ")",
                   alpha_pts);
        textio::write_file(cfg.out_dir + "/plot_alpha_vs_steps.txt", os.str());
    }
    {
        std::ostringstream os;
        write_plot(os, "simulated speedup vs reverse steps (gamma=" + std::to_string(gslice) + ")",
                   speed_t_pts);
        textio::write_file(cfg.out_dir + "/plot_speedup_vs_steps.txt", os.str());
    }
    {
        std::ostringstream os;
        write_plot(os, "simulated speedup vs draft length (T=" + std::to_string(best_T) + ")",
                   speed_g_pts);
        textio::write_file(cfg.out_dir + "/plot_speedup_vs_gamma.txt", os.str());
    }
    out << "wrote " << csv_path << " and " << cfg.out_dir << "/plot_*.txt\n";
    return 0;
}

// ------------------------------------------------------------------ verify

struct VerifyOptions {
    bool quick = false;
    /// Fault injection: scales every acceptance ratio by 0.7 so the
    /// statistical suites must notice a biased verifier.
    bool break_acceptance = false;
};

namespace verify_suite {

struct Outcome {
    bool pass = false;
    std::string name;
    std::string margin;
};

inline Outcome law_equality(int instances) {
    double worst_diff = 0.0;
    double worst_mass = 0.0;
    for (int i = 0; i < instances; ++i) {
        TinyInstance inst = make_tiny_instance(1000 + static_cast<uint64_t>(i));
        ProposalProvider provider = [&inst](std::span<const TokenId> prefix, int gamma) {
            return factorized_proposals(inst.denoiser, prefix, gamma, inst.temperature);
        };
        const int total = inst.gamma + 2;
        Law spec = spec_process_law(inst.target, provider, inst.prefix, inst.gamma, total,
                                    inst.temperature);
        Law chain = target_chain_law(inst.target, inst.prefix, total, inst.temperature);
        worst_diff = std::max(worst_diff, law_max_abs_diff(spec, chain));
        worst_mass = std::max(worst_mass, std::abs(law_total_mass(spec) - 1.0));
    }
    Outcome o;
    o.name = "emitted block law matches the target chain";
    o.pass = worst_diff < 1e-10 && worst_mass < 1e-9;
    char buf[128];
    std::snprintf(buf, sizeof(buf), "max diff %.3g, mass err %.3g, %d instances", worst_diff,
                  worst_mass, instances);
    o.margin = buf;
    return o;
}

inline Outcome step_frequencies(int samples, double ratio_scale) {
    TinyInstance inst = make_tiny_instance(7);
    std::vector<Categorical> proposals =
        factorized_proposals(inst.denoiser, inst.prefix, inst.gamma, inst.temperature);
    Law expected = exact_step_oracle(inst.target, proposals, inst.prefix, inst.temperature);

    DiffusionDrafter drafter(inst.denoiser, 1, DiffusionMode::factorized);
    SpecConfig scfg;
    scfg.gamma = inst.gamma;
    scfg.T = 1;
    scfg.temperature = inst.temperature;
    scfg.drafter_kind = DrafterKind::diffusion_factorized;
    scfg.acceptance_ratio_scale = ratio_scale;

    std::map<std::vector<TokenId>, int64_t> counts;
    SeededRng root(991);
    for (int i = 0; i < samples; ++i) {
        SeededRng it = root.derive(static_cast<uint64_t>(i));
        SeededRng draft_rng = it.derive(stream::kDiffusionDraft);
        SeededRng verify_rng = it.derive(stream::kVerify);
        RunStats stats;
        stats.gamma = scfg.gamma;
        StepOutcome outc =
            spec_step(inst.target, drafter, inst.prefix, scfg, draft_rng, verify_rng, stats);
        counts[outc.emitted] += 1;
    }
    Law empirical;
    for (const auto& [k, c] : counts) {
        empirical[k] = static_cast<double>(c) / static_cast<double>(samples);
    }
    const double tv = law_tv(empirical, expected);
    Outcome o;
    o.name = "one-step block frequencies match the exact law";
    o.pass = tv < 0.02;
    char buf[96];
    std::snprintf(buf, sizeof(buf), "tv %.4f %s 0.02, n=%d", tv, o.pass ? "<" : ">=", samples);
    o.margin = buf;
    return o;
}

inline Outcome term_identities() {
    const double k1 = k_normalizer(1.0);
    const double z1 = score_entropy_term(0.37, 0.37);
    const double z2 = score_entropy_term(2.5, 2.5);
    Outcome o;
    o.name = "score-entropy term identities";
    o.pass = std::abs(k1 + 1.0) < 1e-15 && std::abs(z1) < 1e-12 && std::abs(z2) < 1e-12;
    char buf[96];
    std::snprintf(buf, sizeof(buf), "K(1)+1 = %.3g, term(s,s) = %.3g", std::abs(k1 + 1.0),
                  std::max(std::abs(z1), std::abs(z2)));
    o.margin = buf;
    return o;
}

inline Outcome gradient_check(int instances, int coords_per_instance) {
    double worst = 0.0;
    for (int k = 0; k < instances; ++k) {
        TinyInstance inst = make_tiny_instance(500 + static_cast<uint64_t>(k));
        Denoiser d = inst.denoiser;
        const Vocab& vocab = d.vocab();
        AbsorbingSchedule schedule(4);
        SeededRng rng(77 + static_cast<uint64_t>(k));

        // A corrupted window with at least one masked position.
        std::vector<TokenId> clean;
        for (int i = 0; i < 12; ++i) {
            clean.push_back(static_cast<TokenId>(rng.uniform_index(
                static_cast<size_t>(vocab.size() - 2))));
        }
        const int t = 2;
        std::vector<TokenId> corrupted;
        for (int attempt = 0; attempt < 64; ++attempt) {
            corrupted = forward_corrupt(clean, t, schedule, rng, vocab.mask_id);
            bool any = false;
            for (TokenId x : corrupted) any = any || x == vocab.mask_id;
            if (any) break;
        }

        std::vector<double> grad = d.loss_gradient(clean, corrupted, t, schedule, 0);
        const double h = 1e-5;
        for (int c = 0; c < coords_per_instance; ++c) {
            const size_t idx = rng.uniform_index(grad.size());
            const double saved = d.params()[idx];
            d.params()[idx] = saved + h;
            const double up = d.loss(clean, corrupted, t, schedule, 0);
            d.params()[idx] = saved - h;
            const double down = d.loss(clean, corrupted, t, schedule, 0);
            d.params()[idx] = saved;
            const double fd = (up - down) / (2.0 * h);
            const double rel = std::abs(grad[idx] - fd) /
                               std::max({std::abs(grad[idx]), std::abs(fd), 1e-12});
            worst = std::max(worst, rel);
        }
    }
    Outcome o;
    o.name = "score-entropy gradient matches finite differences";
    o.pass = worst < 1e-4;
    char buf[96];
    std::snprintf(buf, sizeof(buf), "max rel err %.3g, %d coords", worst,
                  instances * coords_per_instance);
    o.margin = buf;
    return o;
}

inline Outcome stream_conditionals(const ContextModel& target, const Denoiser& denoiser,
                                   const RunConfig& cfg, std::span<const TokenId> corpus,
                                   int budget, double ratio_scale) {
    std::vector<std::vector<TokenId>> prompts =
        make_prompts(corpus, cfg.prompt_count, cfg.prompt_len, cfg.seed);
    DiffusionDrafter drafter(denoiser, 4, DiffusionMode::multistep, cfg.schedule_floor);

    std::vector<TokenId> spec_stream, vanilla_stream;
    spec_stream.reserve(static_cast<size_t>(budget));
    vanilla_stream.reserve(static_cast<size_t>(budget));
    const int chunk = 2048;
    SeededRng base(cfg.seed);
    uint64_t chunk_idx = 0;
    while (static_cast<int>(spec_stream.size()) < budget) {
        const auto& prompt = prompts[chunk_idx % prompts.size()];
        SpecConfig scfg;
        scfg.gamma = 16;
        scfg.T = 4;
        scfg.temperature = cfg.temperature;
        scfg.drafter_kind = DrafterKind::diffusion_multistep;
        scfg.max_tokens = chunk;
        scfg.acceptance_ratio_scale = ratio_scale;
        scfg.seed = base.derive(10 + chunk_idx).seed();
        auto [seq, stats] = generate(target, drafter, prompt, scfg);
        spec_stream.insert(spec_stream.end(),
                           seq.begin() + static_cast<std::ptrdiff_t>(prompt.size()), seq.end());
        ++chunk_idx;
    }
    chunk_idx = 0;
    while (static_cast<int>(vanilla_stream.size()) < budget) {
        const auto& prompt = prompts[chunk_idx % prompts.size()];
        SeededRng rng = base.derive(stream::kVanilla).derive(chunk_idx);
        auto [seq, stats] = vanilla_generate(target, prompt, chunk, cfg.temperature, rng);
        vanilla_stream.insert(vanilla_stream.end(),
                              seq.begin() + static_cast<std::ptrdiff_t>(prompt.size()),
                              seq.end());
        ++chunk_idx;
    }

    StreamTvReport rep = compare_streams(spec_stream, vanilla_stream, 2,
                                         target.vocab().size(), 20);
    Outcome o;
    o.name = "draft-verified stream matches vanilla conditionals";
    o.pass = !rep.contexts.empty() && rep.max_tv < 0.02;
    char buf[128];
    std::snprintf(buf, sizeof(buf), "max tv %.4f %s 0.02 over %zu contexts, %d tokens/side",
                  rep.max_tv, o.pass ? "<" : ">=", rep.contexts.size(), budget);
    o.margin = buf;
    return o;
}

}  // namespace verify_suite

inline int cmd_verify(const RunConfig& cfg, const VerifyOptions& opt, std::ostream& out) {
    const double ratio_scale = opt.break_acceptance ? 0.7 : 1.0;
    if (opt.break_acceptance) {
        out << "fault injection on: acceptance ratios scaled by 0.7\n";
    }

    std::vector<verify_suite::Outcome> results;
    results.push_back(verify_suite::law_equality(50));
    results.push_back(verify_suite::step_frequencies(opt.quick ? 20000 : 50000, ratio_scale));
    results.push_back(verify_suite::term_identities());

    if (!opt.quick) {
        results.push_back(verify_suite::gradient_check(2, 5));
        TrainedModels m = load_models(cfg, ModelNeeds{true, false, true});
        std::vector<TokenId> corpus = reencode_corpus(cfg, m.target);
        results.push_back(verify_suite::stream_conditionals(m.target, m.denoiser, cfg, corpus,
                                                            100000, ratio_scale));
    }

    int failures = 0;
    for (const auto& r : results) {
        out << (r.pass ? "[PASS] " : "[FAIL] ") << r.name << " (" << r.margin << ")\n";
        if (!r.pass) ++failures;
    }
    out << (failures == 0 ? "all checks passed\n"
                          : std::to_string(failures) + " check(s) failed\n");
    return failures == 0 ? 0 : 1;
}

}  // namespace specdec
