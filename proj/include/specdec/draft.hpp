#pragma once

#include <span>
#include <string>
#include <vector>

#include "specdec/categorical.hpp"
#include "specdec/rng.hpp"
#include "specdec/vocab.hpp"

namespace specdec {

/// A block of gamma drafted tokens plus, for each position, the proposal
/// distribution the drafter claims it sampled from. The verifier only ever
/// sees these distributions, so a drafter is free to build them any way it
/// likes as long as tokens[i] ~ proposals[i] conditioned on its own history.
/// drafter_steps is the abstract sequential depth of producing the block
/// (gamma for a token-by-token drafter, the step count for a diffusion one).
struct DraftProposal {
    std::vector<TokenId> tokens;
    std::vector<Categorical> proposals;
    int drafter_steps = 0;
};

class Drafter {
public:
    virtual ~Drafter() = default;

    /// Propose `gamma` tokens continuing `prefix`. Must never emit MASK.
    virtual DraftProposal draft(std::span<const TokenId> prefix, int gamma,
                                double temperature, SeededRng& rng) const = 0;

    virtual std::string name() const = 0;
};

}  // namespace specdec
