#include "fpc/cli/config.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <sstream>

#include "fpc/core/error.hpp"

namespace fpc::cli {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

Error bad_value(const std::string& key, const std::string& v, const char* what) {
  return Error(ErrorCode::kInvalidArgument, key + " = '" + v + "' is not " + what);
}

double parse_real(const std::string& key, const std::string& v) {
  const std::string t = trim(v);
  char* end = nullptr;
  errno = 0;
  const double x = std::strtod(t.c_str(), &end);
  if (t.empty() || *end != '\0' || errno == ERANGE || !std::isfinite(x)) {
    throw bad_value(key, v, "a finite number");
  }
  return x;
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  const std::string t = trim(v);
  if (t.empty() || t.find_first_not_of("0123456789") != std::string::npos) {
    throw bad_value(key, v, "a non-negative integer");
  }
  errno = 0;
  const unsigned long long x = std::strtoull(t.c_str(), nullptr, 10);
  if (errno == ERANGE) throw bad_value(key, v, "in range");
  return x;
}

std::vector<std::string> split_commas(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

}  // namespace

std::string flag_name(const std::string& key) {
  std::string f = key;
  std::replace(f.begin(), f.end(), '_', '-');
  return "--" + f;
}

RunConfig::RunConfig(std::vector<KeySpec> specs) : specs_(std::move(specs)) {}

bool RunConfig::has(const std::string& key) const {
  return std::any_of(specs_.begin(), specs_.end(),
                     [&](const KeySpec& s) { return s.name == key; });
}

std::size_t RunConfig::index(const std::string& key) const {
  for (std::size_t i = 0; i < specs_.size(); ++i) {
    if (specs_[i].name == key) return i;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown config key '" + key + "'");
}

void RunConfig::set(const std::string& key, const std::string& value) {
  if (value.find('\n') != std::string::npos) {
    throw Error(ErrorCode::kInvalidArgument, key + ": value spans lines");
  }
  specs_[index(key)].value = trim(value);
}

void RunConfig::merge_text(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kFormat,
                  origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    if (!has(key)) {
      throw Error(ErrorCode::kInvalidArgument,
                  origin + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
    set(key, line.substr(eq + 1));
  }
}

const std::string& RunConfig::str(const std::string& key) const {
  return specs_[index(key)].value;
}

double RunConfig::real(const std::string& key) const { return parse_real(key, str(key)); }

std::size_t RunConfig::count(const std::string& key) const {
  return static_cast<std::size_t>(parse_u64(key, str(key)));
}

std::uint64_t RunConfig::u64(const std::string& key) const { return parse_u64(key, str(key)); }

bool RunConfig::flag(const std::string& key) const {
  const std::string& v = str(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw bad_value(key, v, "a boolean");
}

std::vector<double> RunConfig::reals(const std::string& key) const {
  std::vector<double> out;
  for (const auto& item : split_commas(str(key))) out.push_back(parse_real(key, item));
  if (out.empty()) throw bad_value(key, str(key), "a non-empty list");
  return out;
}

std::vector<std::size_t> RunConfig::counts(const std::string& key) const {
  std::vector<std::size_t> out;
  for (const auto& item : split_commas(str(key))) {
    out.push_back(static_cast<std::size_t>(parse_u64(key, item)));
  }
  if (out.empty()) throw bad_value(key, str(key), "a non-empty list");
  return out;
}

std::string RunConfig::resolved() const {
  std::string out;
  for (const auto& s : specs_) out += s.name + " = " + s.value + "\n";
  return out;
}

}  // namespace fpc::cli
