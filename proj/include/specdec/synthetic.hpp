#pragma once

#include <string>
#include <vector>

#include "specdec/context_model.hpp"
#include "specdec/diffusion.hpp"
#include "specdec/rng.hpp"
#include "specdec/vocab.hpp"

namespace specdec {

/// Small randomized problem for exact-enumeration checks: a tiny trained
/// target, an untrained denoiser with random parameters (any valid proposal
/// distribution is fair game for losslessness), a short prefix, and a draft
/// length small enough to enumerate.
struct TinyInstance {
    ContextModel target;
    Denoiser denoiser;
    std::vector<TokenId> prefix;
    int gamma = 1;
    double temperature = 1.0;
};

inline TinyInstance make_tiny_instance(uint64_t seed) {
    SeededRng rng(seed);
    const int alphabet = 2 + static_cast<int>(rng.uniform_index(3));  // 2..4 regular symbols
    std::vector<std::string> symbols;
    for (int i = 0; i < alphabet; ++i) {
        symbols.emplace_back(1, static_cast<char>('a' + i));
    }
    Vocab vocab = detail::finish_vocab(std::move(symbols));

    const int corpus_len = 24 + static_cast<int>(rng.uniform_index(25));
    std::vector<TokenId> corpus(static_cast<size_t>(corpus_len));
    for (auto& t : corpus) t = static_cast<TokenId>(rng.uniform_index(static_cast<uint64_t>(alphabet)));

    const int order = static_cast<int>(rng.uniform_index(3));  // 0..2
    const double lambda = 0.05 + rng.uniform();

    TinyInstance inst;
    inst.target = ContextModel::train(corpus, vocab, order, lambda);

    DenoiserConfig cfg;
    cfg.window = 2;
    cfg.pos_buckets = 4;
    cfg.noise_buckets = 2;
    inst.denoiser = Denoiser(vocab, cfg, AbsorbingSchedule(4));
    for (auto& p : inst.denoiser.params()) p = 2.0 * rng.uniform() - 1.0;

    const int prefix_len = 1 + static_cast<int>(rng.uniform_index(3));
    for (int i = 0; i < prefix_len; ++i) {
        inst.prefix.push_back(static_cast<TokenId>(rng.uniform_index(static_cast<uint64_t>(alphabet))));
    }
    inst.gamma = 1 + static_cast<int>(rng.uniform_index(2));
    inst.temperature = rng.uniform() < 0.5 ? 1.0 : 1.3;
    return inst;
}

}  // namespace specdec
