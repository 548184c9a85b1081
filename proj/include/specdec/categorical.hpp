#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "specdec/errors.hpp"
#include "specdec/rng.hpp"
#include "specdec/vocab.hpp"

namespace specdec {

constexpr double kProbTolerance = 1e-9;

/// Probability vector over the vocab. Construction validates: finite,
/// non-negative entries summing to 1 within kProbTolerance.
class Categorical {
public:
    Categorical() = default;

    explicit Categorical(std::vector<double> probs) : p_(std::move(probs)) {
        double sum = 0.0;
        for (double v : p_) {
            if (!std::isfinite(v) || v < 0.0) {
                throw InvalidDistribution("negative or non-finite probability");
            }
            sum += v;
        }
        if (std::abs(sum - 1.0) > kProbTolerance) {
            throw InvalidDistribution("probabilities sum to " + std::to_string(sum));
        }
    }

    int size() const { return static_cast<int>(p_.size()); }
    double operator[](TokenId id) const { return p_[static_cast<size_t>(id)]; }
    const std::vector<double>& probs() const { return p_; }
    std::span<const double> span() const { return p_; }

private:
    std::vector<double> p_;
};

/// Scale non-negative weights to sum 1. All-zero input is an error.
inline Categorical normalize(std::span<const double> weights) {
    double sum = 0.0;
    for (double w : weights) {
        if (!std::isfinite(w) || w < 0.0) {
            throw InvalidDistribution("negative or non-finite weight");
        }
        sum += w;
    }
    if (sum <= 0.0) {
        throw AllZeroWeights("normalize: weights sum to zero");
    }
    std::vector<double> p(weights.begin(), weights.end());
    for (double& v : p) v /= sum;
    return Categorical(std::move(p));
}

/// Sharpen (t < 1) or flatten (t > 1) a distribution: p_i^(1/t) renormalized.
/// Computed in log space so tiny temperatures stay stable. t == 1 returns the
/// input bit-for-bit. Zero entries stay zero.
inline Categorical temperature_scale(const Categorical& dist, double t) {
    if (!(t > 0.0)) {
        throw NonPositiveTemperature("temperature must be > 0, got " + std::to_string(t));
    }
    if (t == 1.0) {
        return dist;
    }
    const auto& p = dist.probs();
    std::vector<double> logp(p.size(), -std::numeric_limits<double>::infinity());
    double max_log = -std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < p.size(); ++i) {
        if (p[i] > 0.0) {
            logp[i] = std::log(p[i]) / t;
            max_log = std::max(max_log, logp[i]);
        }
    }
    std::vector<double> w(p.size(), 0.0);
    double sum = 0.0;
    for (size_t i = 0; i < p.size(); ++i) {
        if (p[i] > 0.0) {
            w[i] = std::exp(logp[i] - max_log);
            sum += w[i];
        }
    }
    for (double& v : w) v /= sum;
    return Categorical(std::move(w));
}

/// Map one uniform draw to a token by walking the CDF. The returned token
/// always has positive probability, even if u lands beyond accumulated mass
/// due to rounding (falls back to the last positive-prob entry).
inline TokenId sample(const Categorical& dist, double u) {
    const auto& p = dist.probs();
    double acc = 0.0;
    TokenId last_positive = -1;
    for (size_t i = 0; i < p.size(); ++i) {
        if (p[i] > 0.0) {
            acc += p[i];
            last_positive = static_cast<TokenId>(i);
            if (u < acc) {
                return last_positive;
            }
        }
    }
    if (last_positive < 0) {
        throw InvalidDistribution("sample: no positive-probability token");
    }
    return last_positive;
}

inline TokenId sample(const Categorical& dist, SeededRng& rng) {
    return sample(dist, rng.uniform());
}

/// Correction distribution used after a rejection: norm(max(0, p - q)).
/// When p and q coincide the positive part is empty; falling back to p keeps
/// the overall process lossless (any draw works since rejection then has
/// probability zero, and p avoids introducing new support).
inline Categorical residual_distribution(const Categorical& p, const Categorical& q) {
    const auto& pp = p.probs();
    const auto& qq = q.probs();
    if (pp.size() != qq.size()) {
        throw InvalidDistribution("residual: size mismatch");
    }
    std::vector<double> w(pp.size(), 0.0);
    double sum = 0.0;
    for (size_t i = 0; i < pp.size(); ++i) {
        w[i] = std::max(0.0, pp[i] - qq[i]);
        sum += w[i];
    }
    if (sum <= 0.0) {
        return p;
    }
    for (double& v : w) v /= sum;
    return Categorical(std::move(w));
}

/// Shared mass sum_i min(p_i, q_i); equals the per-token acceptance
/// probability of the draft-then-verify rule, and 1 - total variation.
inline double overlap(const Categorical& p, const Categorical& q) {
    const auto& pp = p.probs();
    const auto& qq = q.probs();
    if (pp.size() != qq.size()) {
        throw InvalidDistribution("overlap: size mismatch");
    }
    double s = 0.0;
    for (size_t i = 0; i < pp.size(); ++i) {
        s += std::min(pp[i], qq[i]);
    }
    return s;
}

}  // namespace specdec
