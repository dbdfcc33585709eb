#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace fpc::cli {

struct KeySpec {
  std::string name;   // config key; the flag is --name with '_' -> '-'
  std::string value;  // default, "" for none
  std::string help;
};

/// Effective settings of one command. Keys are fixed by the command's table,
/// so a value from a config file or flag can only replace a known entry.
class RunConfig {
 public:
  explicit RunConfig(std::vector<KeySpec> specs);

  const std::vector<KeySpec>& specs() const { return specs_; }
  bool has(const std::string& key) const;
  void set(const std::string& key, const std::string& value);
  // "key = value" lines, '#' comments, blank lines ignored.
  void merge_text(const std::string& text, const std::string& origin);

  const std::string& str(const std::string& key) const;
  double real(const std::string& key) const;
  std::size_t count(const std::string& key) const;
  std::uint64_t u64(const std::string& key) const;
  bool flag(const std::string& key) const;
  std::vector<double> reals(const std::string& key) const;      // comma separated
  std::vector<std::size_t> counts(const std::string& key) const;

  // Every key in table order; feeding it back through merge_text
  // reproduces this config exactly.
  std::string resolved() const;

 private:
  std::size_t index(const std::string& key) const;
  std::vector<KeySpec> specs_;
};

std::string flag_name(const std::string& key);

}  // namespace fpc::cli
