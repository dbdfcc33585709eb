#include "fpc/detector/checkpoint.hpp"

#include <filesystem>
#include <set>
#include <sstream>

#include "fpc/core/error.hpp"
#include "fpc/core/io.hpp"

namespace fpc {
namespace {

constexpr const char* kMagic = "fpc-checkpoint 1";

std::string shape_token(const Shape& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += 'x';
    out += std::to_string(s[i]);
  }
  return out;
}

[[noreturn]] void mismatch(const std::string& what) {
  throw Error(ErrorCode::kCheckpointMismatch, "checkpoint: " + what);
}

}  // namespace

void save_checkpoint(const DetectorParams& params, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const DetectorConfig& c = params.config;
  std::ostringstream man;
  man << kMagic << "\n";
  man << "widths " << c.widths[0] << ' ' << c.widths[1] << ' ' << c.widths[2] << ' '
      << c.widths[3] << "\n";
  man << "fpn_width " << c.fpn_width << "\n";
  man << "input " << c.input_height << ' ' << c.input_width << "\n";
  for (const auto& [name, t] : params.tensors) {
    const std::string file = name + ".fpct";
    save_tensor(t.cast<float>(), (std::filesystem::path(dir) / file).string());
    man << name << ' ' << file << ' ' << shape_token(t.shape()) << "\n";
  }
  write_file((std::filesystem::path(dir) / "manifest.txt").string(), man.str());
}

DetectorParams load_checkpoint(const std::string& dir) {
  const std::filesystem::path root(dir);
  std::string text;
  try {
    text = read_file((root / "manifest.txt").string());
  } catch (const Error&) {
    mismatch("no manifest.txt in " + dir);
  }
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kMagic) mismatch("bad manifest header");

  DetectorConfig cfg;
  std::string key;
  {
    std::getline(in, line);
    std::istringstream ls(line);
    if (!(ls >> key) || key != "widths" ||
        !(ls >> cfg.widths[0] >> cfg.widths[1] >> cfg.widths[2] >> cfg.widths[3])) {
      mismatch("bad widths line");
    }
  }
  {
    std::getline(in, line);
    std::istringstream ls(line);
    if (!(ls >> key) || key != "fpn_width" || !(ls >> cfg.fpn_width)) mismatch("bad fpn line");
  }
  {
    std::getline(in, line);
    std::istringstream ls(line);
    if (!(ls >> key) || key != "input" || !(ls >> cfg.input_height >> cfg.input_width)) {
      mismatch("bad input line");
    }
  }
  try {
    cfg.validate();
  } catch (const Error& e) {
    mismatch(e.what());
  }

  const auto shapes = expected_shapes(cfg);
  DetectorParams p{cfg, {}};
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string name, file, shape;
    if (!(ls >> name >> file >> shape)) mismatch("bad manifest line '" + line + "'");
    auto it = shapes.find(name);
    if (it == shapes.end()) mismatch("unexpected tensor " + name);
    if (shape != shape_token(it->second)) {
      mismatch(name + " listed as " + shape + ", config implies " + shape_token(it->second));
    }
    Tensor t = [&] {
      try {
        return load_tensor((root / file).string());
      } catch (const Error& e) {
        mismatch(name + ": " + e.what());
      }
    }();
    if (t.shape() != it->second) mismatch(name + " file shape " + shape_to_string(t.shape()));
    if (!p.tensors.emplace(name, t.cast<double>()).second) mismatch("duplicate tensor " + name);
  }
  for (const auto& [name, shape] : shapes) {
    if (!p.tensors.count(name)) mismatch("missing tensor " + name);
  }
  return p;
}

}  // namespace fpc
