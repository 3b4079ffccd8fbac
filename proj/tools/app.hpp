#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace evomarket::app {

enum ExitCode : int { ok = 0, usage = 2, format = 3, fit_failure = 4, numeric = 5 };

struct RunConfig {
    std::string command;                    ///< simulate, fit, synth, dist or replicate
    std::optional<std::string> config_path; ///< INI file
    std::optional<std::uint64_t> seed;      ///< flag overrides [run] seed
    std::optional<std::string> out_dir;
    bool plot = false;
    std::optional<std::string> product;     ///< product preset name
    std::vector<std::pair<std::string, std::string>> overrides; ///< section.key = value
};

/// Runs one command; diagnostics go to `err`, summaries to `out`. Returns the process exit code.
int run(const RunConfig& cfg, std::ostream& out, std::ostream& err);

} // namespace evomarket::app
