#pragma once

#include <string>
#include <vector>

namespace aqe {

/// Command-line entry point. Subcommands: train, eval, bias, tabular,
/// theorem1, gradcheck, plot. Returns 0 on success, 1 on a runtime failure
/// or failed check, 2 on usage errors (with usage text printed).
int cli_main(const std::vector<std::string>& args);
int cli_main(int argc, char** argv);

} // namespace aqe
