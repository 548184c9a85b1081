#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <span>
#include <vector>

#include "specdec/categorical.hpp"
#include "specdec/context_model.hpp"
#include "specdec/errors.hpp"
#include "specdec/vocab.hpp"

namespace specdec {

/// Exact distribution over token sequences, outcome -> probability.
using Law = std::map<std::vector<TokenId>, double>;

/// Per-step factorized proposal distributions for a given prefix; lets the
/// process law re-query the drafter as the sequence grows.
using ProposalProvider =
    std::function<std::vector<Categorical>(std::span<const TokenId> prefix, int gamma)>;

namespace detail {

inline void check_instance(const ContextModel& target, int gamma) {
    if (target.vocab().size() > 8) {
        throw InstanceTooLarge("exact enumeration limited to 6 regular tokens, vocab has " +
                               std::to_string(target.vocab().size() - 2));
    }
    if (gamma > 3) {
        throw InstanceTooLarge("exact enumeration limited to gamma <= 3, got " +
                               std::to_string(gamma));
    }
}

inline void step_law_recurse(const ContextModel& target, std::span<const Categorical> proposals,
                             double temperature, std::vector<TokenId>& seq, size_t prefix_len,
                             int depth, double mass, Law& law) {
    const int gamma = static_cast<int>(proposals.size());
    const Categorical p = temperature_scale(target.next_distribution(seq), temperature);
    std::vector<TokenId> block(seq.begin() + static_cast<std::ptrdiff_t>(prefix_len), seq.end());
    if (depth == gamma) {
        for (TokenId c = 0; c < p.size(); ++c) {
            if (p[c] <= 0.0) continue;
            block.push_back(c);
            law[block] += mass * p[c];
            block.pop_back();
        }
        return;
    }
    const Categorical& q = proposals[static_cast<size_t>(depth)];
    const double reject_mass = std::max(0.0, 1.0 - overlap(p, q));
    if (reject_mass > 0.0) {
        const Categorical residual = residual_distribution(p, q);
        for (TokenId c = 0; c < residual.size(); ++c) {
            if (residual[c] <= 0.0) continue;
            block.push_back(c);
            law[block] += mass * reject_mass * residual[c];
            block.pop_back();
        }
    }
    for (TokenId x = 0; x < q.size(); ++x) {
        const double accept = std::min(p[x], q[x]);
        if (accept <= 0.0) continue;
        seq.push_back(x);
        step_law_recurse(target, proposals, temperature, seq, prefix_len, depth + 1, mass * accept,
                         law);
        seq.pop_back();
    }
}

}  // namespace detail

/// Closed-form law of the block emitted by ONE draft-verify round with
/// conditionally independent proposals: per position, a draft token x is
/// accepted with mass min(p(x), q(x)); the complement routes through the
/// residual and ends the block; surviving all gamma positions appends a
/// bonus token from the target's next conditional. Target conditionals are
/// evaluated along each accepted path, exactly as parallel_score would.
inline Law exact_step_oracle(const ContextModel& target, std::span<const Categorical> proposals,
                             std::span<const TokenId> prefix, double temperature = 1.0) {
    detail::check_instance(target, static_cast<int>(proposals.size()));
    Law law;
    std::vector<TokenId> seq(prefix.begin(), prefix.end());
    detail::step_law_recurse(target, proposals, temperature, seq, prefix.size(), 0, 1.0, law);
    return law;
}

/// Law of exactly `total_tokens` tokens from the composed speculative
/// process: rounds of exact_step_oracle chained on the growing sequence,
/// with a final round truncated to the token budget. This is the quantity
/// the losslessness guarantee speaks about, and it must match
/// target_chain_law outcome for outcome.
inline Law spec_process_law(const ContextModel& target, const ProposalProvider& provider,
                            std::span<const TokenId> prefix, int gamma, int total_tokens,
                            double temperature = 1.0) {
    detail::check_instance(target, gamma);
    Law law;
    // The process is Markov in the emitted-so-far sequence, so partial
    // sequences reached along different step decompositions share one entry.
    Law pending;
    pending[{}] = 1.0;
    std::vector<TokenId> seq;
    while (!pending.empty()) {
        auto node = pending.extract(pending.begin());
        const std::vector<TokenId>& emitted = node.key();
        const double mass = node.mapped();
        seq.assign(prefix.begin(), prefix.end());
        seq.insert(seq.end(), emitted.begin(), emitted.end());
        Law step = exact_step_oracle(target, provider(seq, gamma), seq, temperature);
        const size_t remaining = static_cast<size_t>(total_tokens) - emitted.size();
        for (const auto& [block, bp] : step) {
            if (bp <= 0.0) continue;
            std::vector<TokenId> child = emitted;
            child.insert(child.end(), block.begin(),
                         block.begin() +
                             static_cast<std::ptrdiff_t>(std::min(block.size(), remaining)));
            if (child.size() == static_cast<size_t>(total_tokens)) {
                law[child] += mass * bp;
            } else {
                pending[child] += mass * bp;
            }
        }
    }
    return law;
}

/// Law of `total_tokens` tokens sampled directly from the target chain.
inline Law target_chain_law(const ContextModel& target, std::span<const TokenId> prefix,
                            int total_tokens, double temperature = 1.0) {
    detail::check_instance(target, 0);
    Law law;
    std::vector<TokenId> seq(prefix.begin(), prefix.end());
    std::function<void(int, double)> rec = [&](int depth, double mass) {
        if (depth == total_tokens) {
            law[std::vector<TokenId>(seq.begin() + static_cast<std::ptrdiff_t>(prefix.size()),
                                     seq.end())] += mass;
            return;
        }
        Categorical p = temperature_scale(target.next_distribution(seq), temperature);
        for (TokenId x = 0; x < p.size(); ++x) {
            if (p[x] <= 0.0) continue;
            seq.push_back(x);
            rec(depth + 1, mass * p[x]);
            seq.pop_back();
        }
    };
    rec(0, 1.0);
    return law;
}

inline double law_total_mass(const Law& a) {
    double s = 0.0;
    for (const auto& [k, v] : a) s += v;
    return s;
}

/// Largest per-outcome probability gap between two laws.
inline double law_max_abs_diff(const Law& a, const Law& b) {
    double m = 0.0;
    for (const auto& [k, v] : a) {
        auto it = b.find(k);
        m = std::max(m, std::abs(v - (it == b.end() ? 0.0 : it->second)));
    }
    for (const auto& [k, v] : b) {
        if (a.find(k) == a.end()) m = std::max(m, std::abs(v));
    }
    return m;
}

/// Total variation distance between two laws.
inline double law_tv(const Law& a, const Law& b) {
    double s = 0.0;
    for (const auto& [k, v] : a) {
        auto it = b.find(k);
        s += std::abs(v - (it == b.end() ? 0.0 : it->second));
    }
    for (const auto& [k, v] : b) {
        if (a.find(k) == a.end()) s += std::abs(v);
    }
    return 0.5 * s;
}

}  // namespace specdec
