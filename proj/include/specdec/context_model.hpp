#pragma once

#include <algorithm>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "specdec/categorical.hpp"
#include "specdec/draft.hpp"
#include "specdec/errors.hpp"
#include "specdec/textio.hpp"
#include "specdec/vocab.hpp"

namespace specdec {

namespace detail {

struct ContextHash {
    size_t operator()(const std::vector<TokenId>& ctx) const {
        uint64_t h = 0xcbf29ce484222325ull;
        for (TokenId t : ctx) {
            h ^= static_cast<uint64_t>(static_cast<uint32_t>(t));
            h *= 0x100000001b3ull;
        }
        return static_cast<size_t>(h);
    }
};

}  // namespace detail

/// Fixed-order add-lambda model: P(y | last k tokens) =
/// (count + lambda) / (total + lambda * (|V| - 1)), smoothing spread over
/// every token except MASK, which always has probability zero. Contexts
/// shorter than k are padded on the left with BOS.
class ContextModel {
public:
    ContextModel() = default;

    static ContextModel train(std::span<const TokenId> corpus, Vocab vocab, int order,
                              double lambda, bool byte_mode = true) {
        if (order < 0) throw ConfigError("order must be >= 0");
        if (!(lambda > 0.0)) throw ConfigError("smoothing lambda must be > 0");
        if (static_cast<int>(corpus.size()) <= order) {
            throw CorpusTooShort("corpus has " + std::to_string(corpus.size()) +
                                 " tokens, need more than order " + std::to_string(order));
        }
        ContextModel m;
        m.order_ = order;
        m.lambda_ = lambda;
        m.vocab_ = std::move(vocab);
        m.byte_mode_ = byte_mode;
        std::vector<TokenId> ctx(static_cast<size_t>(order), m.vocab_.bos_id);
        for (size_t i = 0; i < corpus.size(); ++i) {
            TokenId y = corpus[i];
            if (!m.vocab_.valid_token(y) || y == m.vocab_.mask_id) {
                throw ConfigError("corpus token out of range at position " + std::to_string(i));
            }
            auto& row = m.counts_[ctx];
            if (row.counts.empty()) row.counts.resize(static_cast<size_t>(m.vocab_.size()), 0);
            row.counts[static_cast<size_t>(y)] += 1;
            row.total += 1;
            if (order > 0) {
                ctx.erase(ctx.begin());
                ctx.push_back(y);
            }
        }
        return m;
    }

    const Vocab& vocab() const { return vocab_; }
    int order() const { return order_; }
    double lambda() const { return lambda_; }
    bool byte_mode() const { return byte_mode_; }

    Categorical next_distribution(std::span<const TokenId> prefix) const {
        thread_local std::vector<TokenId> ctx;
        make_context(prefix, ctx);
        return conditional(ctx);
    }

    /// Teacher-forced scoring of a drafted block: gamma+1 distributions,
    /// element j conditioned on prefix + draft[0..j). The whole block counts
    /// as one model call in benchmark accounting.
    std::vector<Categorical> parallel_score(std::span<const TokenId> prefix,
                                            std::span<const TokenId> draft) const {
        for (TokenId t : draft) {
            if (t == vocab_.mask_id) throw MaskInDraft("draft contains MASK");
        }
        std::vector<Categorical> out;
        out.reserve(draft.size() + 1);
        std::vector<TokenId> ctx;
        make_context(prefix, ctx);
        out.push_back(conditional(ctx));
        for (TokenId t : draft) {
            if (order_ > 0) {
                ctx.erase(ctx.begin());
                ctx.push_back(t);
            }
            out.push_back(conditional(ctx));
        }
        return out;
    }

    void save(std::ostream& out) const {
        out << "specdec-context-model 1\n";
        out << "mode " << (byte_mode_ ? "byte" : "whitespace") << "\n";
        out << "order " << order_ << "\n";
        out << "lambda " << textio::fmt_double(lambda_) << "\n";
        out << "vocab " << vocab_.size() << "\n";
        for (const auto& s : vocab_.symbols) {
            out << textio::percent_encode(s) << "\n";
        }
        std::vector<const std::vector<TokenId>*> keys;
        keys.reserve(counts_.size());
        for (const auto& [ctx, row] : counts_) keys.push_back(&ctx);
        std::sort(keys.begin(), keys.end(),
                  [](const auto* a, const auto* b) { return *a < *b; });
        out << "contexts " << keys.size() << "\n";
        for (const auto* ctx : keys) {
            if (ctx->empty()) {
                out << "-";
            } else {
                for (size_t i = 0; i < ctx->size(); ++i) {
                    out << (i ? "," : "") << (*ctx)[i];
                }
            }
            const auto& row = counts_.at(*ctx);
            for (TokenId y = 0; y < vocab_.size(); ++y) {
                int64_t c = row.counts[static_cast<size_t>(y)];
                if (c > 0) out << " " << y << ":" << c;
            }
            out << "\n";
        }
        out << "end\n";
    }

    static ContextModel load(std::istream& in) {
        std::string magic = textio::require_line(in, "header");
        if (magic != "specdec-context-model 1") {
            throw MissingCheckpoint("not a context-model checkpoint (got '" + magic + "')");
        }
        ContextModel m;
        std::string mode = textio::require_field(in, "mode");
        if (mode == "byte") m.byte_mode_ = true;
        else if (mode == "whitespace") m.byte_mode_ = false;
        else throw ConfigError("unknown vocab mode '" + mode + "'");
        m.order_ = static_cast<int>(textio::parse_int(textio::require_field(in, "order"), "order"));
        m.lambda_ = textio::parse_double(textio::require_field(in, "lambda"), "lambda");
        int vocab_n = static_cast<int>(textio::parse_int(textio::require_field(in, "vocab"), "vocab"));
        if (vocab_n < 2) throw ConfigError("vocab too small");
        m.vocab_.symbols.clear();
        for (int i = 0; i < vocab_n; ++i) {
            m.vocab_.symbols.push_back(textio::percent_decode(textio::require_line(in, "vocab symbol")));
        }
        for (TokenId id = 0; id < m.vocab_.size(); ++id) {
            if (m.vocab_.symbols[static_cast<size_t>(id)] == kMaskSymbol) m.vocab_.mask_id = id;
            if (m.vocab_.symbols[static_cast<size_t>(id)] == kBosSymbol) m.vocab_.bos_id = id;
        }
        if (m.vocab_.mask_id < 0 || m.vocab_.bos_id < 0) {
            throw ConfigError("checkpoint vocab lacks reserved symbols");
        }
        int n_ctx = static_cast<int>(textio::parse_int(textio::require_field(in, "contexts"), "contexts"));
        for (int i = 0; i < n_ctx; ++i) {
            std::string line = textio::require_line(in, "context record");
            auto fields = textio::split(line, ' ');
            if (fields.empty()) throw ConfigError("empty context record");
            std::vector<TokenId> ctx;
            if (fields[0] != "-") {
                for (const auto& part : textio::split(fields[0], ',')) {
                    ctx.push_back(static_cast<TokenId>(textio::parse_int(part, "context token")));
                }
            }
            if (static_cast<int>(ctx.size()) != m.order_) {
                throw ConfigError("context length mismatch in record " + std::to_string(i));
            }
            Row row;
            row.counts.assign(static_cast<size_t>(m.vocab_.size()), 0);
            for (size_t f = 1; f < fields.size(); ++f) {
                auto pair = textio::split(fields[f], ':');
                if (pair.size() != 2) throw ConfigError("bad count entry '" + fields[f] + "'");
                auto y = static_cast<TokenId>(textio::parse_int(pair[0], "count token"));
                auto c = textio::parse_int(pair[1], "count value");
                if (!m.vocab_.valid_token(y) || c <= 0) throw ConfigError("bad count entry '" + fields[f] + "'");
                row.counts[static_cast<size_t>(y)] = c;
                row.total += c;
            }
            m.counts_.emplace(std::move(ctx), std::move(row));
        }
        if (textio::require_line(in, "end marker") != "end") {
            throw ConfigError("missing end marker");
        }
        return m;
    }

    void save_file(const std::string& path) const {
        std::ostringstream ss;
        save(ss);
        textio::write_file(path, ss.str());
    }

    static ContextModel load_file(const std::string& path) {
        std::istringstream ss(textio::read_file(path));
        return load(ss);
    }

    bool operator==(const ContextModel& other) const {
        return order_ == other.order_ && lambda_ == other.lambda_ &&
               byte_mode_ == other.byte_mode_ && vocab_.symbols == other.vocab_.symbols &&
               counts_to_map() == other.counts_to_map();
    }

private:
    struct Row {
        std::vector<int64_t> counts;
        int64_t total = 0;
    };

    void make_context(std::span<const TokenId> prefix, std::vector<TokenId>& ctx) const {
        ctx.clear();
        const size_t k = static_cast<size_t>(order_);
        for (size_t i = prefix.size(); i < k; ++i) ctx.push_back(vocab_.bos_id);
        size_t start = prefix.size() > k ? prefix.size() - k : 0;
        for (size_t i = start; i < prefix.size(); ++i) ctx.push_back(prefix[i]);
    }

    Categorical conditional(const std::vector<TokenId>& ctx) const {
        const int v = vocab_.size();
        std::vector<double> p(static_cast<size_t>(v), 0.0);
        auto it = counts_.find(ctx);
        const double denom_smooth = lambda_ * static_cast<double>(v - 1);
        if (it == counts_.end()) {
            double u = 1.0 / static_cast<double>(v - 1);
            for (TokenId y = 0; y < v; ++y) {
                if (y != vocab_.mask_id) p[static_cast<size_t>(y)] = u;
            }
            return Categorical(std::move(p));
        }
        const Row& row = it->second;
        const double denom = static_cast<double>(row.total) + denom_smooth;
        for (TokenId y = 0; y < v; ++y) {
            if (y == vocab_.mask_id) continue;
            p[static_cast<size_t>(y)] =
                (static_cast<double>(row.counts[static_cast<size_t>(y)]) + lambda_) / denom;
        }
        return Categorical(std::move(p));
    }

    std::map<std::vector<TokenId>, std::vector<int64_t>> counts_to_map() const {
        std::map<std::vector<TokenId>, std::vector<int64_t>> out;
        for (const auto& [ctx, row] : counts_) out.emplace(ctx, row.counts);
        return out;
    }

    int order_ = 0;
    double lambda_ = 1.0;
    bool byte_mode_ = true;
    Vocab vocab_;
    std::unordered_map<std::vector<TokenId>, Row, detail::ContextHash> counts_;
};

inline ContextModel train_context_model(std::span<const TokenId> corpus, Vocab vocab, int order,
                                        double lambda, bool byte_mode = true) {
    return ContextModel::train(corpus, std::move(vocab), order, lambda, byte_mode);
}

inline Categorical next_distribution(const ContextModel& model, std::span<const TokenId> prefix) {
    return model.next_distribution(prefix);
}

inline std::vector<Categorical> parallel_score(const ContextModel& model,
                                               std::span<const TokenId> prefix,
                                               std::span<const TokenId> draft) {
    return model.parallel_score(prefix, draft);
}

/// Classic drafter: a weaker ContextModel sampled token by token. Costs one
/// drafter step per drafted token.
class ArDrafter : public Drafter {
public:
    ArDrafter() = default;
    explicit ArDrafter(ContextModel inner) : inner_(std::move(inner)) {}

    const ContextModel& inner() const { return inner_; }

    DraftProposal draft(std::span<const TokenId> prefix, int gamma, double temperature,
                        SeededRng& rng) const override {
        if (gamma < 1) throw ConfigError("gamma must be >= 1");
        DraftProposal out;
        out.tokens.reserve(static_cast<size_t>(gamma));
        out.proposals.reserve(static_cast<size_t>(gamma));
        std::vector<TokenId> seq(prefix.begin(), prefix.end());
        for (int j = 0; j < gamma; ++j) {
            Categorical q = temperature_scale(inner_.next_distribution(seq), temperature);
            TokenId t = sample(q, rng);
            out.tokens.push_back(t);
            out.proposals.push_back(std::move(q));
            seq.push_back(t);
        }
        out.drafter_steps = gamma;
        return out;
    }

    std::string name() const override { return "classic"; }

private:
    ContextModel inner_;
};

inline DraftProposal ar_draft(const ArDrafter& drafter, std::span<const TokenId> prefix, int gamma,
                              double temperature, SeededRng& rng) {
    return drafter.draft(prefix, gamma, temperature, rng);
}

}  // namespace specdec
