#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace aqe {

/// Renders `field` against env_steps for each metrics file as an SVG line
/// chart. Files whose names differ only by a seed suffix (_s0, _seed12, ...)
/// form one group; groups with several runs get a mean polyline with a
/// +/- one-std shaded band, single runs a plain polyline. Rejects unknown
/// fields (listing the valid ones), empty files and non-monotone env_steps;
/// nothing is written unless every input is valid.
void plot_metrics(const std::vector<std::filesystem::path>& metrics_paths,
                  const std::string& field,
                  const std::filesystem::path& out_svg);

/// Field names plot_metrics accepts.
std::vector<std::string> plottable_fields();

} // namespace aqe
