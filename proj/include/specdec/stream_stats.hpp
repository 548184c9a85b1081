#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "specdec/errors.hpp"
#include "specdec/vocab.hpp"

namespace specdec {

/// Empirical next-token counts keyed by the preceding `order` tokens.
struct ContextCounts {
    std::map<std::vector<TokenId>, std::vector<int64_t>> table;
    int vocab_size = 0;

    static ContextCounts from_stream(std::span<const TokenId> stream, int order, int vocab_size) {
        ContextCounts cc;
        cc.vocab_size = vocab_size;
        if (static_cast<int>(stream.size()) <= order) return cc;
        for (size_t i = static_cast<size_t>(order); i < stream.size(); ++i) {
            std::vector<TokenId> ctx(stream.begin() + static_cast<std::ptrdiff_t>(i) - order,
                                     stream.begin() + static_cast<std::ptrdiff_t>(i));
            auto& row = cc.table[ctx];
            if (row.empty()) row.resize(static_cast<size_t>(vocab_size), 0);
            row[static_cast<size_t>(stream[i])] += 1;
        }
        return cc;
    }
};

struct ContextComparison {
    std::vector<TokenId> context;
    int64_t count_a = 0;
    int64_t count_b = 0;
    double tv = 0.0;
};

struct StreamTvReport {
    std::vector<ContextComparison> contexts;  // most frequent first
    double max_tv = 0.0;
    ContextComparison worst;
};

/// Compare the per-context next-token conditionals of two token streams on
/// the `top_k` contexts, ranked by combined occurrence count. TV between the
/// two empirical conditional distributions, largest reported as `worst`.
inline StreamTvReport compare_streams(std::span<const TokenId> a, std::span<const TokenId> b,
                                      int order, int vocab_size, int top_k) {
    ContextCounts ca = ContextCounts::from_stream(a, order, vocab_size);
    ContextCounts cb = ContextCounts::from_stream(b, order, vocab_size);

    std::vector<std::pair<int64_t, const std::vector<TokenId>*>> ranked;
    for (const auto& [ctx, row_a] : ca.table) {
        auto it = cb.table.find(ctx);
        if (it == cb.table.end()) continue;
        int64_t na = 0, nb = 0;
        for (int64_t c : row_a) na += c;
        for (int64_t c : it->second) nb += c;
        ranked.emplace_back(na + nb, &ctx);
    }
    std::sort(ranked.begin(), ranked.end(), [](const auto& x, const auto& y) {
        if (x.first != y.first) return x.first > y.first;
        return *x.second < *y.second;
    });

    StreamTvReport report;
    const size_t keep = std::min(ranked.size(), static_cast<size_t>(top_k));
    for (size_t k = 0; k < keep; ++k) {
        const auto& ctx = *ranked[k].second;
        const auto& row_a = ca.table.at(ctx);
        const auto& row_b = cb.table.at(ctx);
        int64_t na = 0, nb = 0;
        for (int64_t c : row_a) na += c;
        for (int64_t c : row_b) nb += c;
        double tv = 0.0;
        for (int y = 0; y < vocab_size; ++y) {
            double pa = static_cast<double>(row_a[static_cast<size_t>(y)]) / static_cast<double>(na);
            double pb = static_cast<double>(row_b[static_cast<size_t>(y)]) / static_cast<double>(nb);
            tv += std::abs(pa - pb);
        }
        tv *= 0.5;
        ContextComparison cmp{ctx, na, nb, tv};
        report.contexts.push_back(cmp);
        if (tv > report.max_tv || report.contexts.size() == 1) {
            report.max_tv = tv;
            report.worst = cmp;
        }
    }
    return report;
}

/// Pairwise empirical mutual information (in nats) between two columns of
/// draft samples; near zero when a drafter's positions are independent.
inline double pairwise_mutual_information(std::span<const TokenId> xs, std::span<const TokenId> ys,
                                          int vocab_size) {
    if (xs.size() != ys.size() || xs.empty()) {
        throw ConfigError("mutual information needs two equal nonempty columns");
    }
    const size_t V = static_cast<size_t>(vocab_size);
    std::vector<double> px(V, 0.0), py(V, 0.0), pxy(V * V, 0.0);
    const double n = static_cast<double>(xs.size());
    for (size_t i = 0; i < xs.size(); ++i) {
        px[static_cast<size_t>(xs[i])] += 1.0;
        py[static_cast<size_t>(ys[i])] += 1.0;
        pxy[static_cast<size_t>(xs[i]) * V + static_cast<size_t>(ys[i])] += 1.0;
    }
    double mi = 0.0;
    for (size_t x = 0; x < V; ++x) {
        for (size_t y = 0; y < V; ++y) {
            double j = pxy[x * V + y] / n;
            if (j <= 0.0) continue;
            mi += j * std::log(j * n * n / (px[x] * py[y]));
        }
    }
    return mi;
}

}  // namespace specdec
