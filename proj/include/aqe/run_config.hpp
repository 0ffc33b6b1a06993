#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "aqe/agent.hpp"

namespace aqe {

/// Flat key=value run configuration. Every key can come from a config file
/// ("key = value" lines, '#' comments) or a --key value flag, with flags
/// winning. Unknown keys are rejected by name. Defaults are the reference
/// hyperparameters (N=10, h=2, G=5, lr=3e-4, gamma=0.99, batch 256,
/// buffer 1e6, 2x256 hidden layers, K = round(0.8*N*h)).
struct RunConfig {
    std::string env_spec = "pendulum";
    std::string run_name = "run";
    std::string output_dir = ".";
    std::uint64_t seed = 0;
    int N = 10;
    int h = 2;
    int K = -1; // -1: derive round(0.8 * N * h) at validation time
    std::string aggregator = "keepk"; // keepk | mean | median | remove_min_max
    int G = 5;
    double gamma = 0.99;
    double polyak_retain = 0.995;
    double lr = 3e-4;
    int batch_size = 256;
    std::uint64_t buffer_size = 1000000;
    std::string hidden_critic = "256,256";
    std::string hidden_policy = "256,256";
    std::string alpha_mode = "auto"; // auto | fixed
    double fixed_alpha = 0.2;
    double target_entropy = std::numeric_limits<double>::quiet_NaN();
    long start_steps = 1000;
    long total_env_steps = 30000;
    long eval_every = 1000;
    int eval_episodes = 10;
    /// Stop once an evaluation mean reaches this return; NaN disables.
    double stop_at_return = std::numeric_limits<double>::quiet_NaN();
    bool record_wallclock = true;
    bool parallel_critics = false;
};

/// Parses a config file (empty path: defaults only) and applies flag
/// overrides, then validates ranges. Throws ParseError naming the key on
/// unknown keys, type mismatches and out-of-range values.
RunConfig parse_config(const std::string& path,
                       const std::vector<std::pair<std::string, std::string>>&
                           flag_overrides = {});

/// Parses config text directly (same format as the file contents).
RunConfig parse_config_text(const std::string& text,
                            const std::vector<std::pair<std::string,
                                                        std::string>>&
                                flag_overrides = {});

/// Canonical "key = value" rendering of every key; parsing the echo
/// reproduces the config exactly.
std::string echo_config(const RunConfig& config);

/// Resolved K (turns the -1 sentinel into round(0.8 * N * h)).
int resolved_keep_k(const RunConfig& config);

std::vector<int> parse_hidden_sizes(const std::string& text,
                                    const std::string& key_name);

AgentConfig to_agent_config(const RunConfig& config);

/// Seed fallback: the AQE_SEED environment variable when the key is absent.
extern const char* const kSeedEnvVar;

} // namespace aqe
