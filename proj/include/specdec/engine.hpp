#pragma once

#include <chrono>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "specdec/categorical.hpp"
#include "specdec/context_model.hpp"
#include "specdec/draft.hpp"
#include "specdec/errors.hpp"
#include "specdec/rng.hpp"
#include "specdec/vocab.hpp"

namespace specdec {

enum class DrafterKind { ar, diffusion_multistep, diffusion_factorized };

inline const char* drafter_kind_name(DrafterKind k) {
    switch (k) {
        case DrafterKind::ar: return "ar";
        case DrafterKind::diffusion_multistep: return "diffusion-multistep";
        case DrafterKind::diffusion_factorized: return "diffusion-factorized";
    }
    return "?";
}

inline DrafterKind parse_drafter_kind(const std::string& s) {
    if (s == "ar") return DrafterKind::ar;
    if (s == "diffusion-multistep") return DrafterKind::diffusion_multistep;
    if (s == "diffusion-factorized") return DrafterKind::diffusion_factorized;
    throw ConfigError("unknown drafter kind '" + s + "'");
}

struct SpecConfig {
    int gamma = 5;
    int T = 8;
    double temperature = 1.0;
    DrafterKind drafter_kind = DrafterKind::ar;
    uint64_t seed = 1;
    int max_tokens = 64;
    // Fault-injection hook for the verification suite: scales every
    // acceptance ratio. Anything other than 1.0 deliberately breaks the
    // output distribution so the distribution checks can prove they would
    // catch a buggy engine.
    double acceptance_ratio_scale = 1.0;

    void validate() const {
        if (gamma < 1) throw ConfigError("gamma must be >= 1");
        if (T < 1) throw ConfigError("T must be >= 1");
        if (!(temperature > 0.0)) throw NonPositiveTemperature("temperature must be > 0");
        if (max_tokens < 1) throw ConfigError("max_tokens must be >= 1");
        if (!(acceptance_ratio_scale > 0.0)) {
            throw ConfigError("acceptance_ratio_scale must be > 0");
        }
    }
};

/// Result of one draft-verify round: `accepted` leading draft tokens were
/// kept and `emitted` carries them plus one extra token (a correction drawn
/// from the residual on rejection, a bonus from the next target distribution
/// when everything was accepted). Ratios are kept for diagnostics, one per
/// scanned position.
struct StepOutcome {
    int accepted = 0;
    std::vector<TokenId> emitted;
    std::vector<double> per_token_ratios;
};

struct RunStats {
    int64_t target_calls = 0;
    int64_t drafter_steps = 0;
    int64_t drafts = 0;
    int64_t accepted_total = 0;
    int64_t emitted_tokens = 0;
    int gamma = 0;
    int64_t wall_ns = 0;
    double sim_cost = 0.0;

    double alpha_hat() const {
        if (drafts == 0 || gamma == 0) return 0.0;
        return static_cast<double>(accepted_total) /
               (static_cast<double>(gamma) * static_cast<double>(drafts));
    }

    double accepted_per_draft() const {
        if (drafts == 0) return 0.0;
        return static_cast<double>(accepted_total) / static_cast<double>(drafts);
    }
};

namespace detail {

/// Core accept/reject scan, parameterized over how target distributions are
/// obtained so tests can count which indices get read. Exactly gamma + 1
/// uniforms are consumed no matter where rejection lands: gamma acceptance
/// coins (drawn up front) plus one draw for the correction or bonus token.
/// Target distributions are only requested up to the stopping position.
template <typename TargetDistAt>
StepOutcome verify_with(const DraftProposal& draft, TargetDistAt&& target_dist_at, SeededRng& rng,
                        double ratio_scale = 1.0) {
    const int gamma = static_cast<int>(draft.tokens.size());
    std::vector<double> coins(static_cast<size_t>(gamma) + 1);
    for (double& c : coins) c = rng.uniform();

    StepOutcome out;
    for (int j = 0; j < gamma; ++j) {
        const TokenId x = draft.tokens[static_cast<size_t>(j)];
        const Categorical& p = target_dist_at(j);
        const Categorical& q = draft.proposals[static_cast<size_t>(j)];
        const double qx = q[x];
        if (qx <= 0.0) {
            throw ZeroProposalMass("draft token has zero proposal probability at position " +
                                   std::to_string(j));
        }
        const double ratio = ratio_scale * p[x] / qx;
        out.per_token_ratios.push_back(ratio);
        const bool accept = ratio >= 1.0 || coins[static_cast<size_t>(j)] < ratio;
        if (!accept) {
            out.accepted = j;
            out.emitted.assign(draft.tokens.begin(), draft.tokens.begin() + j);
            out.emitted.push_back(sample(residual_distribution(p, q), coins[static_cast<size_t>(gamma)]));
            return out;
        }
        out.emitted.push_back(x);
    }
    out.accepted = gamma;
    out.emitted.push_back(sample(target_dist_at(gamma), coins[static_cast<size_t>(gamma)]));
    return out;
}

}  // namespace detail

/// Accept/reject a drafted block against the target's gamma+1 teacher-forced
/// distributions. Position j is accepted iff u < min(1, p_j(x)/q_j(x)); the
/// first rejection discards everything after it and draws the correction
/// from norm(max(0, p_j - q_j)); full acceptance earns a bonus token from
/// the gamma+1'th distribution.
inline StepOutcome verify(const DraftProposal& draft, std::span<const Categorical> target_dists,
                          SeededRng& rng, double ratio_scale = 1.0) {
    if (target_dists.size() != draft.tokens.size() + 1) {
        throw ConfigError("verify needs gamma+1 target distributions");
    }
    return detail::verify_with(
        draft, [&](int j) -> const Categorical& { return target_dists[static_cast<size_t>(j)]; },
        rng, ratio_scale);
}

/// One full draft -> parallel score -> verify round. Temperature is applied
/// to the target side here; drafters temper their own proposals. Counts one
/// target call and the drafter's reported step cost into `stats`.
inline StepOutcome spec_step(const ContextModel& target, const Drafter& drafter,
                             std::span<const TokenId> prefix, const SpecConfig& cfg,
                             SeededRng& draft_rng, SeededRng& verify_rng, RunStats& stats) {
    cfg.validate();
    DraftProposal draft = drafter.draft(prefix, cfg.gamma, cfg.temperature, draft_rng);
    std::vector<Categorical> target_dists = target.parallel_score(prefix, draft.tokens);
    if (cfg.temperature != 1.0) {
        for (auto& d : target_dists) d = temperature_scale(d, cfg.temperature);
    }
    StepOutcome out = verify(draft, target_dists, verify_rng, cfg.acceptance_ratio_scale);
    stats.target_calls += 1;
    stats.drafter_steps += draft.drafter_steps;
    stats.drafts += 1;
    return out;
}

/// Speculative generation of cfg.max_tokens tokens after the prompt. A final
/// step that overshoots is trimmed and only kept tokens are counted, so
/// emitted_tokens == max_tokens on return. Fully deterministic for a fixed
/// (models, prompt, cfg) tuple: drafting and verification consume separate
/// derived streams.
inline std::pair<std::vector<TokenId>, RunStats> generate(const ContextModel& target,
                                                          const Drafter& drafter,
                                                          std::span<const TokenId> prompt,
                                                          const SpecConfig& cfg) {
    cfg.validate();
    if (prompt.empty()) throw ConfigError("prompt must be non-empty");
    const auto t0 = std::chrono::steady_clock::now();
    SeededRng root(cfg.seed);
    SeededRng draft_rng = root.derive(cfg.drafter_kind == DrafterKind::ar
                                          ? stream::kArDraft
                                          : stream::kDiffusionDraft);
    SeededRng verify_rng = root.derive(stream::kVerify);
    RunStats stats;
    stats.gamma = cfg.gamma;
    std::vector<TokenId> seq(prompt.begin(), prompt.end());
    const size_t limit = prompt.size() + static_cast<size_t>(cfg.max_tokens);
    while (seq.size() < limit) {
        StepOutcome step = spec_step(target, drafter, seq, cfg, draft_rng, verify_rng, stats);
        const size_t room = limit - seq.size();
        const size_t kept = std::min(room, step.emitted.size());
        const size_t kept_accepted = std::min(kept, static_cast<size_t>(step.accepted));
        seq.insert(seq.end(), step.emitted.begin(),
                   step.emitted.begin() + static_cast<std::ptrdiff_t>(kept));
        stats.accepted_total += static_cast<int64_t>(kept_accepted);
        stats.emitted_tokens += static_cast<int64_t>(kept);
    }
    stats.wall_ns =
        std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - t0)
            .count();
    return {std::move(seq), std::move(stats)};
}

/// Token-at-a-time baseline: one target call per emitted token.
inline std::pair<std::vector<TokenId>, RunStats> vanilla_generate(const ContextModel& target,
                                                                  std::span<const TokenId> prompt,
                                                                  int max_tokens,
                                                                  double temperature,
                                                                  SeededRng& rng) {
    if (prompt.empty()) throw ConfigError("prompt must be non-empty");
    if (max_tokens < 1) throw ConfigError("max_tokens must be >= 1");
    const auto t0 = std::chrono::steady_clock::now();
    RunStats stats;
    std::vector<TokenId> seq(prompt.begin(), prompt.end());
    for (int i = 0; i < max_tokens; ++i) {
        Categorical p = temperature_scale(target.next_distribution(seq), temperature);
        seq.push_back(sample(p, rng));
        stats.target_calls += 1;
        stats.emitted_tokens += 1;
    }
    stats.wall_ns =
        std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - t0)
            .count();
    return {std::move(seq), std::move(stats)};
}

}  // namespace specdec
