#pragma once

#include <filesystem>
#include <string>

#include "aqe/metrics.hpp"
#include "aqe/run_config.hpp"

namespace aqe {

struct TrainRunResult {
    std::filesystem::path metrics_path;
    std::filesystem::path checkpoint_path;
    std::filesystem::path config_echo_path;
    long env_steps = 0;
    double final_eval_return = 0.0;
    /// First env_steps value whose evaluation mean reached stop_at_return;
    /// -1 when the threshold was never reached or not set.
    long reached_stop_at = -1;
};

/// Full training run: builds the environment and agent from the config,
/// writes the resolved config echo, appends one metric record per
/// evaluation (plus the initial one) to <output_dir>/<run_name>.metrics.jsonl
/// and keeps <output_dir>/<run_name>.ckpt current at every evaluation and at
/// the end. With `resume_from` set, continues an earlier run exactly where
/// its checkpoint left off. On numeric divergence the last checkpoint is
/// left in place and the error is rethrown with the step attached.
TrainRunResult run_training(const RunConfig& config,
                            const std::string& resume_from = "");

} // namespace aqe
