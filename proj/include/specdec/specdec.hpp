#pragma once

// Umbrella header: speculative decoding with a discrete-diffusion drafter.

#include "specdec/bench.hpp"
#include "specdec/categorical.hpp"
#include "specdec/commands.hpp"
#include "specdec/config.hpp"
#include "specdec/context_model.hpp"
#include "specdec/diffusion.hpp"
#include "specdec/draft.hpp"
#include "specdec/engine.hpp"
#include "specdec/errors.hpp"
#include "specdec/oracle.hpp"
#include "specdec/rng.hpp"
#include "specdec/stream_stats.hpp"
#include "specdec/synthetic.hpp"
#include "specdec/textio.hpp"
#include "specdec/vocab.hpp"
