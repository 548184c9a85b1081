#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "specdec/diffusion.hpp"
#include "specdec/oracle.hpp"
#include "specdec/synthetic.hpp"
#include "specdec/vocab.hpp"

using namespace specdec;

namespace {

ProposalProvider factorized_provider(const TinyInstance& inst) {
    return [&inst](std::span<const TokenId> prefix, int gamma) {
        return factorized_proposals(inst.denoiser, prefix, gamma, inst.temperature);
    };
}

}  // namespace

TEST(StepOracle, LawIsAProbabilityDistribution) {
    for (uint64_t seed : {1ull, 2ull, 3ull, 4ull, 5ull}) {
        TinyInstance inst = make_tiny_instance(seed);
        Law law = exact_step_oracle(
            inst.target, factorized_proposals(inst.denoiser, inst.prefix, inst.gamma,
                                              inst.temperature),
            inst.prefix, inst.temperature);
        EXPECT_NEAR(law_total_mass(law), 1.0, 1e-12);
        for (const auto& [block, mass] : law) {
            EXPECT_GT(mass, 0.0);
            // A block is either cut short by a rejection or has the bonus token.
            EXPECT_LE(block.size(), static_cast<size_t>(inst.gamma) + 1);
            EXPECT_GE(block.size(), 1u);
        }
    }
}

TEST(StepOracle, FirstEmittedTokenMarginalEqualsTarget) {
    // Losslessness at position 0, provable by summing the block law.
    for (uint64_t seed : {11ull, 12ull, 13ull, 14ull}) {
        TinyInstance inst = make_tiny_instance(seed);
        Categorical p = temperature_scale(inst.target.next_distribution(inst.prefix),
                                          inst.temperature);
        Law law = exact_step_oracle(
            inst.target, factorized_proposals(inst.denoiser, inst.prefix, inst.gamma,
                                              inst.temperature),
            inst.prefix, inst.temperature);
        std::vector<double> marginal(static_cast<size_t>(p.size()), 0.0);
        for (const auto& [block, mass] : law) {
            marginal[static_cast<size_t>(block[0])] += mass;
        }
        for (int y = 0; y < p.size(); ++y) {
            EXPECT_NEAR(marginal[static_cast<size_t>(y)], p[y], 1e-12);
        }
    }
}

TEST(StepOracle, ProposalsEqualToTargetGiveFullBlocks) {
    TinyInstance inst = make_tiny_instance(21);
    inst.gamma = 1;
    inst.temperature = 1.0;
    std::vector<Categorical> proposals{inst.target.next_distribution(inst.prefix)};
    Law law = exact_step_oracle(inst.target, proposals, inst.prefix);
    Law chain = target_chain_law(inst.target, inst.prefix, 2);
    // Zero rejection mass: every outcome is draft + bonus, i.e. two chain tokens.
    EXPECT_LT(law_max_abs_diff(law, chain), 1e-12);
    for (const auto& [block, mass] : law) EXPECT_EQ(block.size(), 2u);
}

TEST(ProcessLaw, MatchesTargetChainOnRandomInstances) {
    for (uint64_t seed : {31ull, 32ull, 33ull}) {
        TinyInstance inst = make_tiny_instance(seed);
        const int total = inst.gamma + 2;
        Law spec = spec_process_law(inst.target, factorized_provider(inst), inst.prefix,
                                    inst.gamma, total, inst.temperature);
        Law chain = target_chain_law(inst.target, inst.prefix, total, inst.temperature);
        EXPECT_NEAR(law_total_mass(spec), 1.0, 1e-10);
        EXPECT_LT(law_max_abs_diff(spec, chain), 1e-10);
    }
}

TEST(ProcessLaw, TruncationPreservesTheLawAtOddBudgets) {
    // total_tokens not a multiple of gamma+1 exercises the mid-block cut.
    TinyInstance inst = make_tiny_instance(40);
    inst.gamma = 2;
    const int total = 3;
    Law spec = spec_process_law(inst.target, factorized_provider(inst), inst.prefix, inst.gamma,
                                total, inst.temperature);
    Law chain = target_chain_law(inst.target, inst.prefix, total, inst.temperature);
    EXPECT_LT(law_max_abs_diff(spec, chain), 1e-10);
    for (const auto& [block, mass] : spec) EXPECT_EQ(block.size(), 3u);
}

TEST(ChainLaw, MatchesDirectEnumeration) {
    Tokenized tk = tokenize_bytes("aab");
    ContextModel m = ContextModel::train(tk.tokens, tk.vocab, 0, 1.0);
    // Order 0: single conditional, counts a:2 b:1, lambda 1 over 3 slots:
    // p(a)=3/6, p(b)=2/6, p(bos)=1/6.
    std::vector<TokenId> prefix{0};
    Law law = target_chain_law(m, prefix, 2);
    EXPECT_NEAR(law_total_mass(law), 1.0, 1e-12);
    EXPECT_NEAR((law[{0, 0}]), 0.25, 1e-12);
    EXPECT_NEAR((law[{0, 1}]), (3.0 / 6.0) * (2.0 / 6.0), 1e-12);
    EXPECT_NEAR((law[{1, 1}]), (2.0 / 6.0) * (2.0 / 6.0), 1e-12);
}

TEST(LawHelpers, DistanceFunctions) {
    Law a, b;
    a[{0}] = 0.6;
    a[{1}] = 0.4;
    b[{0}] = 0.5;
    b[{2}] = 0.5;
    EXPECT_NEAR(law_max_abs_diff(a, b), 0.5, 1e-15);
    EXPECT_NEAR(law_tv(a, b), 0.5 * (0.1 + 0.4 + 0.5), 1e-15);
    EXPECT_EQ(law_tv(a, a), 0.0);
}

TEST(Oracle, RefusesOversizedInstances) {
    Tokenized tk = tokenize_bytes("abcdefghij");  // 10 regular symbols
    ContextModel big = ContextModel::train(tk.tokens, tk.vocab, 0, 0.5);
    std::vector<TokenId> prefix{0};
    EXPECT_THROW(target_chain_law(big, prefix, 1), InstanceTooLarge);

    TinyInstance inst = make_tiny_instance(50);
    EXPECT_THROW(spec_process_law(inst.target, factorized_provider(inst), inst.prefix, 4, 5),
                 InstanceTooLarge);
}
