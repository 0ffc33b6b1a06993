#include "aqe/metrics.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "aqe/errors.hpp"

namespace aqe {

namespace {
using Json = nlohmann::ordered_json;
}

std::string metric_to_json_line(const MetricRecord& r) {
    Json j;
    j["env_steps"] = r.env_steps;
    j["eval_return_mean"] = r.eval_return_mean;
    j["eval_return_std"] = r.eval_return_std;
    j["critic_loss_mean"] = r.critic_loss_mean;
    j["actor_objective"] = r.actor_objective;
    j["alpha"] = r.alpha;
    if (r.bias_mean) j["bias_mean"] = *r.bias_mean;
    if (r.bias_std) j["bias_std"] = *r.bias_std;
    if (r.wallclock_s) j["wallclock_s"] = *r.wallclock_s;
    return j.dump();
}

MetricRecord metric_from_json_line(const std::string& line) {
    Json j;
    try {
        j = Json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("metrics: invalid JSON: ") + e.what());
    }
    MetricRecord r;
    try {
        r.env_steps = j.at("env_steps").get<long>();
        r.eval_return_mean = j.at("eval_return_mean").get<double>();
        r.eval_return_std = j.at("eval_return_std").get<double>();
        r.critic_loss_mean = j.at("critic_loss_mean").get<double>();
        r.actor_objective = j.at("actor_objective").get<double>();
        r.alpha = j.at("alpha").get<double>();
        if (j.contains("bias_mean")) r.bias_mean = j["bias_mean"].get<double>();
        if (j.contains("bias_std")) r.bias_std = j["bias_std"].get<double>();
        if (j.contains("wallclock_s"))
            r.wallclock_s = j["wallclock_s"].get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("metrics: missing or mistyped field: ") +
                         e.what());
    }
    return r;
}

void append_metric(const std::filesystem::path& path,
                   const MetricRecord& record) {
    std::ofstream out(path, std::ios::app);
    if (!out) throw IoError("cannot open metrics file: " + path.string());
    out << metric_to_json_line(record) << "\n";
    out.flush();
    if (!out) throw IoError("failed writing metrics: " + path.string());
}

std::vector<MetricRecord> read_metrics(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open metrics file: " + path.string());
    std::vector<MetricRecord> records;
    std::string line;
    int line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.empty()) continue;
        try {
            records.push_back(metric_from_json_line(line));
        } catch (const ParseError& e) {
            throw ParseError(path.string() + ":" + std::to_string(line_number) +
                             ": " + e.what());
        }
    }
    return records;
}

} // namespace aqe
