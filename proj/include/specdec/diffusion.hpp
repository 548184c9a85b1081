#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "specdec/categorical.hpp"
#include "specdec/draft.hpp"
#include "specdec/errors.hpp"
#include "specdec/rng.hpp"
#include "specdec/textio.hpp"
#include "specdec/vocab.hpp"

namespace specdec {

/// Masking schedule over T reverse steps. survival[t] is the probability a
/// position is still unmasked at noise level t: 1 at t=0, 0 at t=T, strictly
/// decreasing between (log-linear down to `floor` just before the end).
class AbsorbingSchedule {
public:
    AbsorbingSchedule() : AbsorbingSchedule(1) {}

    explicit AbsorbingSchedule(int T, double floor = 1e-3) : T_(T), floor_(floor) {
        if (T < 1) throw ConfigError("schedule needs T >= 1");
        if (!(floor > 0.0) || !(floor < 1.0)) throw ConfigError("schedule floor must be in (0,1)");
        survival_.resize(static_cast<size_t>(T) + 1);
        survival_[0] = 1.0;
        for (int t = 1; t < T; ++t) {
            survival_[static_cast<size_t>(t)] =
                std::pow(floor, static_cast<double>(t) / static_cast<double>(T));
        }
        survival_[static_cast<size_t>(T)] = 0.0;
    }

    int T() const { return T_; }
    double floor() const { return floor_; }
    double survival(int t) const { return survival_[static_cast<size_t>(t)]; }
    double noise(int t) const { return 1.0 - survival(t); }

    /// Chance a still-masked position is revealed when stepping t -> t-1.
    double reveal_probability(int t) const {
        double denom = 1.0 - survival(t);
        return (survival(t - 1) - survival(t)) / denom;
    }

private:
    int T_ = 1;
    double floor_ = 1e-3;
    std::vector<double> survival_;
};

/// Partially generated sequence mid reverse process. Positions below
/// prefix_len are clamped. revealed_from[i] records the distribution a draft
/// position was sampled from, filled in as reveals happen.
struct DiffusionState {
    std::vector<TokenId> tokens;
    int step = 0;
    int prefix_len = 0;
    std::vector<std::optional<Categorical>> revealed_from;
};

/// Replace each position of `clean` independently by MASK with probability
/// 1 - survival[t].
inline std::vector<TokenId> forward_corrupt(std::span<const TokenId> clean, int t,
                                            const AbsorbingSchedule& schedule, SeededRng& rng,
                                            TokenId mask_id) {
    if (t < 0 || t > schedule.T()) throw ConfigError("corruption step out of range");
    const double keep = schedule.survival(t);
    std::vector<TokenId> out(clean.begin(), clean.end());
    for (auto& tok : out) {
        if (rng.uniform() >= keep) tok = mask_id;
    }
    return out;
}

/// Normalizing term of the score-entropy objective. K(0) = 0 by continuity.
inline double k_normalizer(double a) {
    if (a == 0.0) return 0.0;
    return a * (std::log(a) - 1.0);
}

/// One summand of the score-entropy objective: s - r log s + K(r).
/// Zero exactly at s = r, strictly positive elsewhere, convex in s.
inline double score_entropy_term(double s, double r) {
    if (s <= 0.0) throw NonPositiveScore("score must be > 0, got " + std::to_string(s));
    double t = s + k_normalizer(r);
    if (r > 0.0) t -= r * std::log(s);
    return t;
}

struct DenoiserConfig {
    int window = 4;        // how far to scan for the nearest unmasked neighbor
    int pos_buckets = 8;   // offset-into-block buckets (last one open-ended)
    int noise_buckets = 4; // masked-fraction buckets
};

/// Trainable reverse model. Scores are log-linear over four feature tables:
/// noise-level bucket, nearest unmasked left/right neighbor (token identity x
/// distance, or "none in window"), and offset into the generated block.
/// s(y) = exp(z(y)), z additive over the four rows; the emitted distribution
/// is the normalized score vector with MASK mass fixed at zero.
class Denoiser {
public:
    Denoiser() = default;

    Denoiser(Vocab vocab, DenoiserConfig cfg, AbsorbingSchedule train_schedule)
        : vocab_(std::move(vocab)), cfg_(cfg), train_schedule_(train_schedule) {
        const int V = vocab_.size();
        rows_neighbor_ = V * cfg_.window + 1;
        n_rows_ = cfg_.noise_buckets + 2 * rows_neighbor_ + cfg_.pos_buckets;
        params_.assign(static_cast<size_t>(n_rows_) * static_cast<size_t>(V), 0.0);
    }

    const Vocab& vocab() const { return vocab_; }
    const DenoiserConfig& config() const { return cfg_; }
    const AbsorbingSchedule& train_schedule() const { return train_schedule_; }
    std::vector<double>& params() { return params_; }
    const std::vector<double>& params() const { return params_; }
    const std::vector<double>& epoch_losses() const { return epoch_losses_; }

    /// Unnormalized scores exp(z) for every token (MASK slot left at 0).
    std::vector<double> scores(std::span<const TokenId> tokens, int i, int block_start,
                               double noise) const {
        const int V = vocab_.size();
        int rows[4];
        feature_rows(tokens, i, block_start, noise, rows);
        std::vector<double> s(static_cast<size_t>(V), 0.0);
        for (TokenId y = 0; y < V; ++y) {
            if (y == vocab_.mask_id) continue;
            double z = 0.0;
            for (int f = 0; f < 4; ++f) {
                z += params_[static_cast<size_t>(rows[f]) * static_cast<size_t>(V) +
                             static_cast<size_t>(y)];
            }
            // Keep exp() away from under/overflow; training can push logits
            // of never-observed tokens arbitrarily far down.
            s[static_cast<size_t>(y)] = std::exp(std::clamp(z, -40.0, 40.0));
        }
        return s;
    }

    /// Distribution for one masked position given the current sequence.
    Categorical position_distribution(std::span<const TokenId> tokens, int i, int block_start,
                                      double noise) const {
        return normalize(scores(tokens, i, block_start, noise));
    }

    /// Score-entropy objective over the masked positions of `corrupted`
    /// against `clean`, at noise level t of `schedule`. The transition weight
    /// is 1 for every MASK -> token pair and 0 otherwise, so only masked
    /// positions and non-MASK targets contribute. The reference ratio is
    /// survival/(1-survival) on the clean token and 0 elsewhere.
    double loss(std::span<const TokenId> clean, std::span<const TokenId> corrupted, int t,
                const AbsorbingSchedule& schedule, int block_start = 0) const {
        const double surv = schedule.survival(t);
        const int V = vocab_.size();
        double total = 0.0;
        for (int i = block_start; i < static_cast<int>(corrupted.size()); ++i) {
            if (corrupted[static_cast<size_t>(i)] != vocab_.mask_id) continue;
            if (surv >= 1.0) throw ConfigError("masked position at zero noise");
            const double ratio = surv / (1.0 - surv);
            std::vector<double> s = scores(corrupted, i, block_start, schedule.noise(t));
            for (TokenId y = 0; y < V; ++y) {
                if (y == vocab_.mask_id) continue;
                double r = (y == clean[static_cast<size_t>(i)]) ? ratio : 0.0;
                total += score_entropy_term(s[static_cast<size_t>(y)], r);
            }
        }
        return total;
    }

    /// Analytic gradient of loss() with respect to params(). Per masked
    /// position and token y, d/dz_y = s_y - r_y, accumulated into each of the
    /// four contributing feature rows.
    std::vector<double> loss_gradient(std::span<const TokenId> clean,
                                      std::span<const TokenId> corrupted, int t,
                                      const AbsorbingSchedule& schedule,
                                      int block_start = 0) const {
        const double surv = schedule.survival(t);
        const int V = vocab_.size();
        std::vector<double> grad(params_.size(), 0.0);
        for (int i = block_start; i < static_cast<int>(corrupted.size()); ++i) {
            if (corrupted[static_cast<size_t>(i)] != vocab_.mask_id) continue;
            if (surv >= 1.0) throw ConfigError("masked position at zero noise");
            const double ratio = surv / (1.0 - surv);
            int rows[4];
            feature_rows(corrupted, i, block_start, schedule.noise(t), rows);
            std::vector<double> s = scores(corrupted, i, block_start, schedule.noise(t));
            for (TokenId y = 0; y < V; ++y) {
                if (y == vocab_.mask_id) continue;
                double r = (y == clean[static_cast<size_t>(i)]) ? ratio : 0.0;
                double g = s[static_cast<size_t>(y)] - r;
                for (int f = 0; f < 4; ++f) {
                    grad[static_cast<size_t>(rows[f]) * static_cast<size_t>(V) +
                         static_cast<size_t>(y)] += g;
                }
            }
        }
        return grad;
    }

    void record_epoch_loss(double v) { epoch_losses_.push_back(v); }

    void save(std::ostream& out) const {
        out << "specdec-denoiser 1\n";
        out << "mode " << (byte_mode_ ? "byte" : "whitespace") << "\n";
        out << "window " << cfg_.window << "\n";
        out << "pos-buckets " << cfg_.pos_buckets << "\n";
        out << "noise-buckets " << cfg_.noise_buckets << "\n";
        out << "train-steps " << train_schedule_.T() << "\n";
        out << "schedule-floor " << textio::fmt_double(train_schedule_.floor()) << "\n";
        out << "vocab " << vocab_.size() << "\n";
        for (const auto& s : vocab_.symbols) out << textio::percent_encode(s) << "\n";
        out << "rows " << n_rows_ << "\n";
        const int V = vocab_.size();
        for (int rrow = 0; rrow < n_rows_; ++rrow) {
            for (int y = 0; y < V; ++y) {
                out << (y ? " " : "")
                    << textio::fmt_double(
                           params_[static_cast<size_t>(rrow) * static_cast<size_t>(V) +
                                   static_cast<size_t>(y)]);
            }
            out << "\n";
        }
        out << "end\n";
    }

    static Denoiser load(std::istream& in) {
        std::string magic = textio::require_line(in, "header");
        if (magic != "specdec-denoiser 1") {
            throw MissingCheckpoint("not a denoiser checkpoint (got '" + magic + "')");
        }
        std::string mode = textio::require_field(in, "mode");
        bool byte_mode;
        if (mode == "byte") byte_mode = true;
        else if (mode == "whitespace") byte_mode = false;
        else throw ConfigError("unknown vocab mode '" + mode + "'");
        DenoiserConfig cfg;
        cfg.window = static_cast<int>(textio::parse_int(textio::require_field(in, "window"), "window"));
        cfg.pos_buckets = static_cast<int>(textio::parse_int(textio::require_field(in, "pos-buckets"), "pos-buckets"));
        cfg.noise_buckets = static_cast<int>(textio::parse_int(textio::require_field(in, "noise-buckets"), "noise-buckets"));
        int train_T = static_cast<int>(textio::parse_int(textio::require_field(in, "train-steps"), "train-steps"));
        double floor = textio::parse_double(textio::require_field(in, "schedule-floor"), "schedule-floor");
        int vocab_n = static_cast<int>(textio::parse_int(textio::require_field(in, "vocab"), "vocab"));
        Vocab vocab;
        for (int i = 0; i < vocab_n; ++i) {
            vocab.symbols.push_back(textio::percent_decode(textio::require_line(in, "vocab symbol")));
        }
        for (TokenId id = 0; id < vocab.size(); ++id) {
            if (vocab.symbols[static_cast<size_t>(id)] == kMaskSymbol) vocab.mask_id = id;
            if (vocab.symbols[static_cast<size_t>(id)] == kBosSymbol) vocab.bos_id = id;
        }
        if (vocab.mask_id < 0 || vocab.bos_id < 0) {
            throw ConfigError("checkpoint vocab lacks reserved symbols");
        }
        Denoiser d(std::move(vocab), cfg, AbsorbingSchedule(train_T, floor));
        d.byte_mode_ = byte_mode;
        int rows = static_cast<int>(textio::parse_int(textio::require_field(in, "rows"), "rows"));
        if (rows != d.n_rows_) throw ConfigError("feature table shape mismatch");
        const int V = d.vocab_.size();
        for (int rrow = 0; rrow < rows; ++rrow) {
            auto fields = textio::split(textio::require_line(in, "parameter row"), ' ');
            if (static_cast<int>(fields.size()) != V) throw ConfigError("parameter row width mismatch");
            for (int y = 0; y < V; ++y) {
                d.params_[static_cast<size_t>(rrow) * static_cast<size_t>(V) + static_cast<size_t>(y)] =
                    textio::parse_double(fields[static_cast<size_t>(y)], "parameter");
            }
        }
        if (textio::require_line(in, "end marker") != "end") throw ConfigError("missing end marker");
        return d;
    }

    void save_file(const std::string& path) const {
        std::ostringstream ss;
        save(ss);
        textio::write_file(path, ss.str());
    }

    static Denoiser load_file(const std::string& path) {
        std::istringstream ss(textio::read_file(path));
        return load(ss);
    }

    bool byte_mode() const { return byte_mode_; }
    void set_byte_mode(bool b) { byte_mode_ = b; }

    bool operator==(const Denoiser& other) const {
        return vocab_.symbols == other.vocab_.symbols && cfg_.window == other.cfg_.window &&
               cfg_.pos_buckets == other.cfg_.pos_buckets &&
               cfg_.noise_buckets == other.cfg_.noise_buckets &&
               train_schedule_.T() == other.train_schedule_.T() &&
               train_schedule_.floor() == other.train_schedule_.floor() &&
               byte_mode_ == other.byte_mode_ && params_ == other.params_;
    }

private:
    /// The four feature row indices for position i: noise bucket, left
    /// neighbor, right neighbor, offset into the block.
    void feature_rows(std::span<const TokenId> tokens, int i, int block_start, double noise,
                      int rows[4]) const {
        const int W = cfg_.window;
        int nb = std::min(cfg_.noise_buckets - 1,
                          static_cast<int>(noise * static_cast<double>(cfg_.noise_buckets)));
        nb = std::max(0, nb);
        rows[0] = nb;

        int left = rows_neighbor_ - 1;  // "none in window"
        for (int d = 1; d <= W && i - d >= 0; ++d) {
            TokenId t = tokens[static_cast<size_t>(i - d)];
            if (t != vocab_.mask_id) {
                left = static_cast<int>(t) * W + (d - 1);
                break;
            }
        }
        rows[1] = cfg_.noise_buckets + left;

        int right = rows_neighbor_ - 1;
        for (int d = 1; d <= W && i + d < static_cast<int>(tokens.size()); ++d) {
            TokenId t = tokens[static_cast<size_t>(i + d)];
            if (t != vocab_.mask_id) {
                right = static_cast<int>(t) * W + (d - 1);
                break;
            }
        }
        rows[2] = cfg_.noise_buckets + rows_neighbor_ + right;

        int pb = std::min(cfg_.pos_buckets - 1, i - block_start);
        rows[3] = cfg_.noise_buckets + 2 * rows_neighbor_ + pb;
    }

    Vocab vocab_;
    DenoiserConfig cfg_;
    AbsorbingSchedule train_schedule_{1};
    bool byte_mode_ = true;
    int rows_neighbor_ = 0;
    int n_rows_ = 0;
    std::vector<double> params_;
    std::vector<double> epoch_losses_;
};

inline double score_entropy_loss(const Denoiser& denoiser, std::span<const TokenId> clean,
                                 std::span<const TokenId> corrupted, int t,
                                 const AbsorbingSchedule& schedule, int block_start = 0) {
    return denoiser.loss(clean, corrupted, t, schedule, block_start);
}

/// Plain SGD on the score-entropy objective over random corpus windows. Each
/// window gets a random clamp length (kept clean, mimicking the prefix at
/// draft time), a random noise level, and one gradient step. Deterministic
/// for a fixed rng stream.
inline Denoiser train_denoiser(std::span<const TokenId> corpus, const Vocab& vocab,
                               const AbsorbingSchedule& schedule, int epochs,
                               double learning_rate, SeededRng& rng,
                               DenoiserConfig cfg = {}, int window_len = 64) {
    if (corpus.empty()) throw CorpusTooShort("cannot train denoiser on empty corpus");
    if (epochs < 0) throw ConfigError("epochs must be >= 0");
    if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be > 0");
    Denoiser d(vocab, cfg, schedule);
    const int len = static_cast<int>(corpus.size());
    const int L = std::min(window_len, len);
    const int windows_per_epoch = std::max(1, len / std::max(1, L / 4));
    for (int epoch = 0; epoch < epochs; ++epoch) {
        double epoch_loss = 0.0;
        int masked_terms = 0;
        for (int w = 0; w < windows_per_epoch; ++w) {
            int start = static_cast<int>(rng.uniform_index(static_cast<uint64_t>(len - L + 1)));
            std::span<const TokenId> clean = corpus.subspan(static_cast<size_t>(start),
                                                            static_cast<size_t>(L));
            int clamp = static_cast<int>(rng.uniform_index(static_cast<uint64_t>(L / 2 + 1)));
            int t = 1 + static_cast<int>(rng.uniform_index(static_cast<uint64_t>(schedule.T())));
            const double keep = schedule.survival(t);
            std::vector<TokenId> corrupted(clean.begin(), clean.end());
            int masked = 0;
            for (int i = clamp; i < L; ++i) {
                if (rng.uniform() >= keep) {
                    corrupted[static_cast<size_t>(i)] = vocab.mask_id;
                    ++masked;
                }
            }
            if (masked == 0) continue;
            epoch_loss += d.loss(clean, corrupted, t, schedule, clamp);
            masked_terms += masked;
            std::vector<double> grad = d.loss_gradient(clean, corrupted, t, schedule, clamp);
            auto& p = d.params();
            for (size_t k = 0; k < p.size(); ++k) {
                p[k] -= learning_rate * grad[k];
            }
        }
        double mean_loss = masked_terms > 0 ? epoch_loss / static_cast<double>(masked_terms) : 0.0;
        if (!std::isfinite(mean_loss) || mean_loss > 1e9) {
            throw DivergedTraining("loss diverged at epoch " + std::to_string(epoch) +
                                   "; lower the learning rate");
        }
        d.record_epoch_loss(mean_loss);
    }
    return d;
}

/// One reverse step t -> t-1. Reveal decisions and the revealed tokens'
/// distributions are all computed against the state as it was entering the
/// step, so positions revealed together are conditionally independent.
/// Remaining masks are force-revealed when t-1 hits 0.
inline DiffusionState reverse_step(const Denoiser& denoiser, const DiffusionState& state,
                                   const AbsorbingSchedule& schedule, SeededRng& rng,
                                   double temperature = 1.0) {
    if (state.step < 1) throw ConfigError("reverse step requires step >= 1");
    const int t = state.step;
    const double reveal_p = schedule.reveal_probability(t);
    const bool final_step = (t - 1 == 0);
    DiffusionState next = state;
    next.step = t - 1;
    const auto& old_tokens = state.tokens;
    for (int i = state.prefix_len; i < static_cast<int>(old_tokens.size()); ++i) {
        if (old_tokens[static_cast<size_t>(i)] != denoiser.vocab().mask_id) continue;
        bool reveal = final_step || rng.uniform() < reveal_p;
        if (!reveal) continue;
        Categorical q = temperature_scale(
            denoiser.position_distribution(old_tokens, i, state.prefix_len, schedule.noise(t)),
            temperature);
        TokenId tok = sample(q, rng);
        next.tokens[static_cast<size_t>(i)] = tok;
        next.revealed_from[static_cast<size_t>(i)] = std::move(q);
    }
    return next;
}

/// Draft gamma tokens by running the full T-step reverse process from an
/// all-MASK block behind the clamped prefix. drafter_steps counts denoiser
/// passes, which is T no matter how large gamma is.
inline DraftProposal diffusion_draft(const Denoiser& denoiser, std::span<const TokenId> prefix,
                                     int gamma, const AbsorbingSchedule& schedule,
                                     double temperature, SeededRng& rng) {
    if (gamma < 1) throw ConfigError("gamma must be >= 1");
    DiffusionState state;
    state.tokens.assign(prefix.begin(), prefix.end());
    state.tokens.resize(prefix.size() + static_cast<size_t>(gamma), denoiser.vocab().mask_id);
    state.prefix_len = static_cast<int>(prefix.size());
    state.step = schedule.T();
    state.revealed_from.resize(state.tokens.size());
    while (state.step > 0) {
        state = reverse_step(denoiser, state, schedule, rng, temperature);
    }
    DraftProposal out;
    out.drafter_steps = schedule.T();
    out.tokens.reserve(static_cast<size_t>(gamma));
    out.proposals.reserve(static_cast<size_t>(gamma));
    for (size_t i = prefix.size(); i < state.tokens.size(); ++i) {
        if (state.tokens[i] == denoiser.vocab().mask_id || !state.revealed_from[i]) {
            throw MaskInDraft("reverse process left a masked position");
        }
        out.tokens.push_back(state.tokens[i]);
        out.proposals.push_back(std::move(*state.revealed_from[i]));
    }
    return out;
}

/// Per-position distributions of the one-step (factorized) drafter: every
/// position conditioned on the prefix and an otherwise all-MASK block. A
/// T=1 schedule makes diffusion_draft sample from exactly these.
inline std::vector<Categorical> factorized_proposals(const Denoiser& denoiser,
                                                     std::span<const TokenId> prefix, int gamma,
                                                     double temperature = 1.0) {
    std::vector<TokenId> tokens(prefix.begin(), prefix.end());
    tokens.resize(prefix.size() + static_cast<size_t>(gamma), denoiser.vocab().mask_id);
    std::vector<Categorical> out;
    out.reserve(static_cast<size_t>(gamma));
    for (int j = 0; j < gamma; ++j) {
        out.push_back(temperature_scale(
            denoiser.position_distribution(tokens, static_cast<int>(prefix.size()) + j,
                                           static_cast<int>(prefix.size()), 1.0),
            temperature));
    }
    return out;
}

enum class DiffusionMode { multistep, factorized };

/// Drafter adapter: multistep runs T reverse steps, factorized is the same
/// process pinned to a single step (all positions independent given prefix).
class DiffusionDrafter : public Drafter {
public:
    DiffusionDrafter(Denoiser denoiser, int T, DiffusionMode mode = DiffusionMode::multistep,
                     double schedule_floor = 1e-3)
        : denoiser_(std::move(denoiser)),
          mode_(mode),
          schedule_(mode == DiffusionMode::factorized ? 1 : T, schedule_floor) {}

    const Denoiser& denoiser() const { return denoiser_; }
    const AbsorbingSchedule& schedule() const { return schedule_; }
    DiffusionMode mode() const { return mode_; }

    DraftProposal draft(std::span<const TokenId> prefix, int gamma, double temperature,
                        SeededRng& rng) const override {
        return diffusion_draft(denoiser_, prefix, gamma, schedule_, temperature, rng);
    }

    std::string name() const override {
        return mode_ == DiffusionMode::factorized ? "diffusion-factorized" : "diffusion";
    }

private:
    Denoiser denoiser_;
    DiffusionMode mode_;
    AbsorbingSchedule schedule_;
};

}  // namespace specdec
