#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "fpc/cli/config.hpp"
#include "fpc/core/error.hpp"

namespace fpc::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitInput = 2,
  kExitCheckpoint = 3,
  kExitEstimation = 4,
  kExitDivergence = 5,
};

int exit_code(ErrorCode code);

// Key tables, defaults included. Also the order of config.resolved.
std::vector<KeySpec> detect_keys();
std::vector<KeySpec> match_keys();
std::vector<KeySpec> train_keys();
std::vector<KeySpec> eval_keys();
std::vector<KeySpec> inspect_keys();

// Each command writes config.resolved next to its other outputs.
void cmd_detect(const RunConfig& cfg, std::ostream& out);
void cmd_match(const RunConfig& cfg, std::ostream& out);
void cmd_train(const RunConfig& cfg, std::ostream& out);
void cmd_eval(const RunConfig& cfg, std::ostream& out);
void cmd_inspect(const RunConfig& cfg, std::ostream& out);

/// Arguments after the program name: "<command> [--config file] [--key value ...]".
/// Flags override the config file, which overrides the defaults. Returns
/// the process exit code; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fpc::cli
