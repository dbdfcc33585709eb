#include <functional>
#include <map>
#include <ostream>

#include "CLI11.hpp"
#include "fpc/cli/commands.hpp"
#include "fpc/core/io.hpp"

namespace fpc::cli {
namespace {

struct Command {
  const char* name;
  const char* help;
  std::vector<KeySpec> (*keys)();
  void (*fn)(const RunConfig&, std::ostream&);
};

const Command kCommands[] = {
    {"detect", "Run a checkpoint on one image; write keypoints and the raw heatmap",
     detect_keys, cmd_detect},
    {"match", "Match two keypoint files by position and fit a homography", match_keys,
     cmd_match},
    {"train", "Train the detector (stage 1, stage 2 or both)", train_keys, cmd_train},
    {"eval", "Run the repeatability, homography or pose suite", eval_keys, cmd_eval},
    {"inspect", "Histogram of raw heatmap logits", inspect_keys, cmd_inspect},
};

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Descriptor-free keypoint detection and matching toolkit", "fpc"};
  app.require_subcommand(1);
  app.footer("Every option can also be given as 'key = value' in a --config file.");

  struct Slot {
    const Command* cmd;
    CLI::App* sub;
    std::string config_path;
    std::map<std::string, std::string> values;
    std::map<std::string, CLI::Option*> options;
  };
  std::vector<Slot> slots;
  slots.reserve(std::size(kCommands));
  for (const Command& c : kCommands) {
    Slot& s = slots.emplace_back();
    s.cmd = &c;
    s.sub = app.add_subcommand(c.name, c.help);
    s.sub->add_option("--config", s.config_path, "key = value file applied before the flags");
    for (const KeySpec& k : c.keys()) {
      std::string desc = k.help;
      if (!k.value.empty()) desc += " [" + k.value + "]";
      s.options[k.name] = s.sub->add_option(flag_name(k.name), s.values[k.name], desc);
    }
  }

  // CLI11 consumes the arguments back to front
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "fpc: " << e.what() << "\n";
    return e.get_exit_code() == 0 ? kExitOk : kExitInput;
  }

  for (const Slot& s : slots) {
    if (!s.sub->parsed()) continue;
    try {
      RunConfig cfg(s.cmd->keys());
      if (!s.config_path.empty()) cfg.merge_text(read_file(s.config_path), s.config_path);
      for (const auto& [key, opt] : s.options) {
        if (opt->count() > 0) cfg.set(key, s.values.at(key));
      }
      s.cmd->fn(cfg, out);
      return kExitOk;
    } catch (const Error& e) {
      err << "fpc " << s.cmd->name << ": " << error_code_name(e.code()) << ": " << e.what()
          << "\n";
      return exit_code(e.code());
    } catch (const std::exception& e) {
      err << "fpc " << s.cmd->name << ": " << e.what() << "\n";
      return kExitInput;
    }
  }
  return kExitInput;
}

}  // namespace fpc::cli
