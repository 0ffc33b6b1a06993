#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace aqe {

/// One evaluation-time record of a training run. Serialized as one JSON
/// object per line; optional fields are omitted when absent.
struct MetricRecord {
    long env_steps = 0;
    double eval_return_mean = 0.0;
    double eval_return_std = 0.0;
    double critic_loss_mean = 0.0;
    double actor_objective = 0.0;
    double alpha = 0.0;
    std::optional<double> bias_mean;
    std::optional<double> bias_std;
    std::optional<double> wallclock_s;

    bool operator==(const MetricRecord&) const = default;
};

std::string metric_to_json_line(const MetricRecord& record);
MetricRecord metric_from_json_line(const std::string& line);

/// Appends one record (never rewrites earlier lines).
void append_metric(const std::filesystem::path& path,
                   const MetricRecord& record);

/// Reads a whole metrics file; a malformed line raises ParseError carrying
/// the 1-based line number.
std::vector<MetricRecord> read_metrics(const std::filesystem::path& path);

} // namespace aqe
