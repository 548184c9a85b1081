#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

// Drives the installed binary end to end through a shell, the way a user
// would run it.

namespace fs = std::filesystem;

namespace {

struct CliResult {
    int code = -1;
    std::string output;
};

CliResult run_cli(const std::string& args) {
    const std::string cmd = std::string(SPECDEC_CLI_PATH) + " " + args + " 2>&1";
    CliResult r;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (pipe == nullptr) return r;
    char buf[4096];
    size_t n;
    while ((n = fread(buf, 1, sizeof(buf), pipe)) > 0) r.output.append(buf, n);
    const int status = pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// CSV comparison that ignores the wall-clock column (index 10).
std::string strip_wall_column(const std::string& csv) {
    std::string out;
    std::istringstream in(csv);
    std::string line;
    while (std::getline(in, line)) {
        std::string joined;
        size_t field = 0, start = 0;
        for (size_t i = 0; i <= line.size(); ++i) {
            if (i == line.size() || line[i] == ',') {
                if (field != 10) {
                    if (!joined.empty()) joined += ',';
                    joined += line.substr(start, i - start);
                }
                ++field;
                start = i + 1;
            }
        }
        out += joined;
        out += '\n';
    }
    return out;
}

// One trained workspace shared by the whole suite; training runs once.
struct Workspace {
    fs::path root;
    fs::path config;
    fs::path out;
    CliResult train;

    Workspace() {
        char tmpl[] = "/tmp/specdec_cli_XXXXXX";
        root = fs::path(mkdtemp(tmpl));
        out = root / "out";
        config = root / "run.conf";
        std::ofstream c(config);
        c << "name = cli\n"
          << "corpus = " << SPECDEC_FIXTURE_DIR << "/corpus_short.txt\n"
          << "vocab_mode = byte\n"
          << "out_dir = " << out.string() << "\n"
          << "[target]\norder = 2\nlambda = 0.00001\n"
          << "[classic]\norder = 1\nlambda = 0.01\n"
          << "[denoiser]\nepochs = 15\nlearning_rate = 0.05\ntrain_steps = 16\n"
          << "schedule_floor = 0.001\nfeature_window = 4\npos_buckets = 4\n"
          << "noise_buckets = 2\nwindow_len = 32\n"
          << "[spec]\ndrafter_kind = diffusion-multistep\ngamma = 4\nsteps = 2\n"
          << "temperature = 1.0\nmax_tokens = 48\nseed = 1\n"
          << "[bench]\ntrials = 2\nprompt_count = 2\nprompt_len = 4\nclassic_gamma = 2\n"
          << "sweep_gammas = 2,4\nsweep_steps = 1,2\n";
        c.close();
        train = run_cli("train --config " + config.string());
    }
};

const Workspace& ws() {
    static Workspace w;
    return w;
}

int count_lines(const std::string& s) {
    int n = 0;
    for (char ch : s) n += ch == '\n';
    return n;
}

}  // namespace

TEST(Cli, TrainWritesCheckpointsAndEffectiveConfig) {
    ASSERT_EQ(ws().train.code, 0) << ws().train.output;
    EXPECT_NE(ws().train.output.find("wrote"), std::string::npos);
    EXPECT_TRUE(fs::exists(ws().out / "target.ckpt"));
    EXPECT_TRUE(fs::exists(ws().out / "classic.ckpt"));
    EXPECT_TRUE(fs::exists(ws().out / "denoiser.ckpt"));
    EXPECT_TRUE(fs::exists(ws().out / "effective-config.txt"));
}

TEST(Cli, GeneratePrintsSequenceAndStats) {
    ASSERT_EQ(ws().train.code, 0) << ws().train.output;
    CliResult r = run_cli("generate --config " + ws().config.string() +
                          " --method specdiff --prompt \"df lm\"");
    ASSERT_EQ(r.code, 0) << r.output;
    EXPECT_NE(r.output.find("stats: tokens="), std::string::npos) << r.output;
    EXPECT_NE(r.output.find("sim_speedup="), std::string::npos);
}

TEST(Cli, GenerateSupportsEveryMethod) {
    ASSERT_EQ(ws().train.code, 0) << ws().train.output;
    for (const char* method : {"vanilla", "spec", "specdiff"}) {
        CliResult r = run_cli("generate --config " + ws().config.string() + " --method " +
                              method + " --prompt \"gh\" --max-tokens 16");
        EXPECT_EQ(r.code, 0) << method << ": " << r.output;
    }
    CliResult bad = run_cli("generate --config " + ws().config.string() +
                            " --method warp --prompt \"gh\"");
    EXPECT_EQ(bad.code, 2);
    EXPECT_NE(bad.output.find("error"), std::string::npos);
}

TEST(Cli, GenerateRerunsAreByteIdentical) {
    ASSERT_EQ(ws().train.code, 0) << ws().train.output;
    const std::string cmd = "generate --config " + ws().config.string() +
                            " --prompt \"qr\" --max-tokens 32";
    CliResult a = run_cli(cmd);
    CliResult b = run_cli(cmd);
    ASSERT_EQ(a.code, 0) << a.output;
    EXPECT_EQ(a.output, b.output);

    CliResult other = run_cli(cmd + " --seed 5");
    ASSERT_EQ(other.code, 0) << other.output;
    EXPECT_NE(other.output, a.output);
}

TEST(Cli, MissingCheckpointsExitCode2) {
    fs::path cfg2 = ws().root / "fresh.conf";
    std::ofstream c(cfg2);
    c << "corpus = " << SPECDEC_FIXTURE_DIR << "/corpus_short.txt\n"
      << "out_dir = " << (ws().root / "never_trained").string() << "\n";
    c.close();
    CliResult r = run_cli("generate --config " + cfg2.string() + " --prompt \"gh\"");
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.output.find("error"), std::string::npos) << r.output;
}

TEST(Cli, UsageErrorsExitCode2) {
    EXPECT_EQ(run_cli("").code, 2);                    // subcommand required
    EXPECT_EQ(run_cli("trane").code, 2);               // unknown subcommand
    EXPECT_EQ(run_cli("train --bogus").code, 2);       // unknown flag
    EXPECT_EQ(run_cli("generate --config x").code, 2); // --prompt required
    EXPECT_EQ(run_cli("--help").code, 0);
}

TEST(Cli, BadConfigFileExitCode2) {
    fs::path bad = ws().root / "bad.conf";
    std::ofstream c(bad);
    c << "gibberish line\n";
    c.close();
    CliResult r = run_cli("train --config " + bad.string());
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.output.find("error"), std::string::npos);
    EXPECT_EQ(run_cli("train --config /no/such/file.conf").code, 2);
}

TEST(Cli, BenchWritesCsvWithStableHeader) {
    ASSERT_EQ(ws().train.code, 0) << ws().train.output;
    CliResult r = run_cli("bench --config " + ws().config.string());
    ASSERT_EQ(r.code, 0) << r.output;
    const std::string csv = slurp(ws().out / "bench.csv");
    ASSERT_FALSE(csv.empty());
    EXPECT_EQ(csv.substr(0, csv.find('\n')),
              "scenario,target,drafter,gamma,T,alpha_hat,accepted_per_draft,target_calls,"
              "drafter_steps,sim_speedup,wall_speedup,seed,trials");
    EXPECT_EQ(count_lines(csv), 1 + 3);  // header + vanilla + classic + diffusion
    EXPECT_TRUE(fs::exists(ws().out / "bench-summary.txt"));

    CliResult again = run_cli("bench --config " + ws().config.string());
    ASSERT_EQ(again.code, 0) << again.output;
    EXPECT_EQ(strip_wall_column(csv), strip_wall_column(slurp(ws().out / "bench.csv")));
}

TEST(Cli, SweepGridIsDeterministicAcrossJobCounts) {
    ASSERT_EQ(ws().train.code, 0) << ws().train.output;
    CliResult serial = run_cli("sweep --config " + ws().config.string() + " --jobs 1");
    ASSERT_EQ(serial.code, 0) << serial.output;
    const std::string csv1 = slurp(ws().out / "sweep.csv");
    // header + per gamma (classic + one row per T): 2 * (1 + 2) = 6
    EXPECT_EQ(count_lines(csv1), 1 + 6);
    EXPECT_TRUE(fs::exists(ws().out / "sweep-summary.txt"));
    EXPECT_TRUE(fs::exists(ws().out / "plot_alpha_vs_steps.txt"));
    EXPECT_TRUE(fs::exists(ws().out / "plot_speedup_vs_steps.txt"));
    EXPECT_TRUE(fs::exists(ws().out / "plot_speedup_vs_gamma.txt"));

    CliResult parallel = run_cli("sweep --config " + ws().config.string() + " --jobs 3");
    ASSERT_EQ(parallel.code, 0) << parallel.output;
    EXPECT_EQ(strip_wall_column(csv1), strip_wall_column(slurp(ws().out / "sweep.csv")));
}

TEST(Cli, OutFlagOverridesConfig) {
    ASSERT_EQ(ws().train.code, 0) << ws().train.output;
    fs::path alt = ws().root / "alt_out";
    CliResult r = run_cli("train --config " + ws().config.string() + " --out " + alt.string());
    ASSERT_EQ(r.code, 0) << r.output;
    EXPECT_TRUE(fs::exists(alt / "target.ckpt"));
}

TEST(Cli, VerifyQuickPasses) {
    CliResult r = run_cli("verify --quick");
    EXPECT_EQ(r.code, 0) << r.output;
    EXPECT_NE(r.output.find("[PASS]"), std::string::npos);
    EXPECT_EQ(r.output.find("[FAIL]"), std::string::npos) << r.output;
}

TEST(Cli, VerifyDetectsInjectedAcceptanceBias) {
    CliResult r = run_cli("verify --quick --break-acceptance");
    EXPECT_EQ(r.code, 1) << r.output;
    EXPECT_NE(r.output.find("[FAIL]"), std::string::npos) << r.output;
}
