#pragma once

#include <string>
#include <vector>

#include "config.hpp"

namespace rhogap::app {

const std::vector<std::string>& command_names();

// Runs one command and writes its artifacts plus manifest.json into
// cfg.output_dir. Errors propagate as exceptions.
void run_command(const std::string& command, const AppConfig& cfg);

}  // namespace rhogap::app
