#pragma once

#include <cstdint>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "specdec/bench.hpp"
#include "specdec/errors.hpp"
#include "specdec/textio.hpp"

namespace specdec {

/// Flat sectioned key=value run configuration. Every field has a default, so
/// an empty file is a valid config; unknown keys are rejected loudly. Flags
/// on the command line override file values, and the merged result can be
/// echoed back out in canonical form.
struct RunConfig {
    // top level
    std::string name = "run";
    std::string corpus_path = "fixtures/corpus_long.txt";
    bool byte_mode = true;  // vocab_mode = byte | whitespace
    std::string out_dir = "out";

    // [target]
    int target_order = 4;
    double target_lambda = 0.05;

    // [classic]  (the AR drafter: weaker context model)
    int classic_order = 1;
    double classic_lambda = 0.5;

    // [denoiser]  (diffusion drafter training)
    int epochs = 30;
    double learning_rate = 0.02;
    int train_steps = 64;        // noise schedule resolution while training
    double schedule_floor = 1e-3;
    int feature_window = 4;
    int pos_buckets = 8;
    int noise_buckets = 4;
    int window_len = 64;         // training window length

    // [spec]
    std::string drafter_kind = "diffusion-multistep";
    int gamma = 40;
    int steps = 8;               // reverse steps T at generation time
    double temperature = 1.0;
    int max_tokens = 1024;
    uint64_t seed = 1;

    // [bench]
    int trials = 8;
    int prompt_count = 8;
    int prompt_len = 8;
    int classic_gamma = 5;  // draft length for the AR drafter in comparisons
    CostModel cost;
    std::vector<int> sweep_gammas = {5, 10, 20, 30, 40, 50};
    std::vector<int> sweep_steps = {1, 2, 4, 8, 16, 32};

    static RunConfig parse(std::string_view text);
    static RunConfig load_file(const std::string& path) {
        return parse(textio::read_file(path));
    }

    void echo(std::ostream& out) const;

    std::string target_checkpoint() const { return out_dir + "/target.ckpt"; }
    std::string classic_checkpoint() const { return out_dir + "/classic.ckpt"; }
    std::string denoiser_checkpoint() const { return out_dir + "/denoiser.ckpt"; }
};

namespace detail {

inline std::vector<int> parse_int_list(std::string_view s, const char* what) {
    std::vector<int> out;
    for (const auto& part : textio::split(s, ',')) {
        auto trimmed = textio::trim(part);
        if (trimmed.empty()) continue;
        out.push_back(static_cast<int>(textio::parse_int(trimmed, what)));
    }
    if (out.empty()) throw ConfigError(std::string(what) + ": empty list");
    return out;
}

inline bool parse_vocab_mode(std::string_view v) {
    if (v == "byte") return true;
    if (v == "whitespace") return false;
    throw ConfigError("vocab_mode must be 'byte' or 'whitespace', got '" + std::string(v) + "'");
}

}  // namespace detail

inline RunConfig RunConfig::parse(std::string_view text) {
    RunConfig cfg;
    std::string section;
    std::istringstream in{std::string(text)};
    std::string raw;
    int lineno = 0;
    while (textio::read_line(in, raw)) {
        ++lineno;
        std::string_view line = textio::trim(raw);
        if (line.empty() || line.front() == '#') continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw ConfigError("bad section header at line " + std::to_string(lineno));
            }
            section = std::string(line.substr(1, line.size() - 2));
            if (section != "target" && section != "classic" && section != "denoiser" &&
                section != "spec" && section != "bench") {
                throw ConfigError("unknown section [" + section + "]");
            }
            continue;
        }
        size_t eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError("expected key = value at line " + std::to_string(lineno));
        }
        std::string key(textio::trim(line.substr(0, eq)));
        std::string value(textio::trim(line.substr(eq + 1)));
        auto full = section.empty() ? key : section + "." + key;

        if (full == "name") cfg.name = value;
        else if (full == "corpus") cfg.corpus_path = value;
        else if (full == "vocab_mode") cfg.byte_mode = detail::parse_vocab_mode(value);
        else if (full == "out_dir") cfg.out_dir = value;
        else if (full == "target.order") cfg.target_order = static_cast<int>(textio::parse_int(value, full.c_str()));
        else if (full == "target.lambda") cfg.target_lambda = textio::parse_double(value, full.c_str());
        else if (full == "classic.order") cfg.classic_order = static_cast<int>(textio::parse_int(value, full.c_str()));
        else if (full == "classic.lambda") cfg.classic_lambda = textio::parse_double(value, full.c_str());
        else if (full == "denoiser.epochs") cfg.epochs = static_cast<int>(textio::parse_int(value, full.c_str()));
        else if (full == "denoiser.learning_rate") cfg.learning_rate = textio::parse_double(value, full.c_str());
        else if (full == "denoiser.train_steps") cfg.train_steps = static_cast<int>(textio::parse_int(value, full.c_str()));
        else if (full == "denoiser.schedule_floor") cfg.schedule_floor = textio::parse_double(value, full.c_str());
        else if (full == "denoiser.feature_window") cfg.feature_window = static_cast<int>(textio::parse_int(value, full.c_str()));
        else if (full == "denoiser.pos_buckets") cfg.pos_buckets = static_cast<int>(textio::parse_int(value, full.c_str()));
        else if (full == "denoiser.noise_buckets") cfg.noise_buckets = static_cast<int>(textio::parse_int(value, full.c_str()));
        else if (full == "denoiser.window_len") cfg.window_len = static_cast<int>(textio::parse_int(value, full.c_str()));
        else if (full == "spec.drafter_kind") cfg.drafter_kind = value;
        else if (full == "spec.gamma") cfg.gamma = static_cast<int>(textio::parse_int(value, full.c_str()));
        else if (full == "spec.steps") cfg.steps = static_cast<int>(textio::parse_int(value, full.c_str()));
        else if (full == "spec.temperature") cfg.temperature = textio::parse_double(value, full.c_str());
        else if (full == "spec.max_tokens") cfg.max_tokens = static_cast<int>(textio::parse_int(value, full.c_str()));
        else if (full == "spec.seed") cfg.seed = static_cast<uint64_t>(textio::parse_int(value, full.c_str()));
        else if (full == "bench.trials") cfg.trials = static_cast<int>(textio::parse_int(value, full.c_str()));
        else if (full == "bench.prompt_count") cfg.prompt_count = static_cast<int>(textio::parse_int(value, full.c_str()));
        else if (full == "bench.prompt_len") cfg.prompt_len = static_cast<int>(textio::parse_int(value, full.c_str()));
        else if (full == "bench.classic_gamma") cfg.classic_gamma = static_cast<int>(textio::parse_int(value, full.c_str()));
        else if (full == "bench.target_call_cost") cfg.cost.target_call_cost = textio::parse_double(value, full.c_str());
        else if (full == "bench.ar_step_cost") cfg.cost.ar_step_cost = textio::parse_double(value, full.c_str());
        else if (full == "bench.diff_step_cost") cfg.cost.diff_step_cost = textio::parse_double(value, full.c_str());
        else if (full == "bench.verify_pos_cost") cfg.cost.verify_pos_cost = textio::parse_double(value, full.c_str());
        else if (full == "bench.sweep_gammas") cfg.sweep_gammas = detail::parse_int_list(value, full.c_str());
        else if (full == "bench.sweep_steps") cfg.sweep_steps = detail::parse_int_list(value, full.c_str());
        else throw ConfigError("unknown config key '" + full + "'");
    }
    return cfg;
}

inline void RunConfig::echo(std::ostream& out) const {
    auto fd = [](double v) { return textio::fmt_double(v); };
    out << "name = " << name << "\n";
    out << "corpus = " << corpus_path << "\n";
    out << "vocab_mode = " << (byte_mode ? "byte" : "whitespace") << "\n";
    out << "out_dir = " << out_dir << "\n\n";
    out << "[target]\n";
    out << "order = " << target_order << "\n";
    out << "lambda = " << fd(target_lambda) << "\n\n";
    out << "[classic]\n";
    out << "order = " << classic_order << "\n";
    out << "lambda = " << fd(classic_lambda) << "\n\n";
    out << "[denoiser]\n";
    out << "epochs = " << epochs << "\n";
    out << "learning_rate = " << fd(learning_rate) << "\n";
    out << "train_steps = " << train_steps << "\n";
    out << "schedule_floor = " << fd(schedule_floor) << "\n";
    out << "feature_window = " << feature_window << "\n";
    out << "pos_buckets = " << pos_buckets << "\n";
    out << "noise_buckets = " << noise_buckets << "\n";
    out << "window_len = " << window_len << "\n\n";
    out << "[spec]\n";
    out << "drafter_kind = " << drafter_kind << "\n";
    out << "gamma = " << gamma << "\n";
    out << "steps = " << steps << "\n";
    out << "temperature = " << fd(temperature) << "\n";
    out << "max_tokens = " << max_tokens << "\n";
    out << "seed = " << seed << "\n\n";
    out << "[bench]\n";
    out << "trials = " << trials << "\n";
    out << "prompt_count = " << prompt_count << "\n";
    out << "prompt_len = " << prompt_len << "\n";
    out << "classic_gamma = " << classic_gamma << "\n";
    out << "target_call_cost = " << fd(cost.target_call_cost) << "\n";
    out << "ar_step_cost = " << fd(cost.ar_step_cost) << "\n";
    out << "diff_step_cost = " << fd(cost.diff_step_cost) << "\n";
    out << "verify_pos_cost = " << fd(cost.verify_pos_cost) << "\n";
    out << "sweep_gammas = ";
    for (size_t i = 0; i < sweep_gammas.size(); ++i) out << (i ? "," : "") << sweep_gammas[i];
    out << "\n";
    out << "sweep_steps = ";
    for (size_t i = 0; i < sweep_steps.size(); ++i) out << (i ? "," : "") << sweep_steps[i];
    out << "\n";
}

}  // namespace specdec
