#pragma once

// Flat experiment config. Grammar, one entry per line:
//   line    := blank | '#' comment | key '=' value [ '#' comment ]
//   key     := one of kConfigKeys
// Whitespace around keys and values is ignored. Duplicate or unknown keys
// are errors; `seed` is mandatory.

#include <algorithm>
#include <array>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>

#include "padsmooth/core.hpp"

namespace padsmooth {

class ConfigError : public Error {
 public:
  using Error::Error;
};

inline constexpr std::array<std::string_view, 16> kConfigKeys = {
    "experiment", "task", "d",     "sigma", "delta", "partition", "epsilon", "beta",
    "scheme",     "n",    "s",     "k",     "trials", "eta",      "seed",    "output"};

struct ExperimentConfig {
  std::string experiment;
  std::string task = "spheres";
  std::size_t d = 2;
  double sigma = 1.0;
  double delta = 0.0;
  std::string partition = "cube";
  double epsilon = 1.0;
  double beta = 4.0;
  std::string scheme = "exact";
  std::size_t n = 10000;
  std::size_t s = 25;
  std::size_t k = 16;
  std::size_t trials = 16;
  double eta = 0.1;
  std::uint64_t seed = 0;
  std::string output = "out";
};

namespace detail {
inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <class T>
T parse_number(const std::string& v, const std::string& where) {
  T out{};
  const char* end = v.data() + v.size();
  auto [p, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || p != end)
    throw ConfigError(where + ": invalid number '" + v + "'");
  return out;
}

template <>
inline double parse_number<double>(const std::string& v, const std::string& where) {
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || v.empty() || !std::isfinite(out))
    throw ConfigError(where + ": invalid number '" + v + "'");
  return out;
}

inline void require_one_of(const std::string& v, std::initializer_list<std::string_view> opts,
                           const std::string& where) {
  if (std::find(opts.begin(), opts.end(), v) == opts.end())
    throw ConfigError(where + ": unsupported value '" + v + "'");
}
}  // namespace detail

/// Parses and validates; `source` names the input in diagnostics.
inline ExperimentConfig parse_config(std::istream& is, const std::string& source = "config") {
  ExperimentConfig c;
  std::map<std::string, std::pair<std::string, std::size_t>> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    const std::string body = detail::trim(std::string_view(line).substr(0, hash));
    if (body.empty()) continue;
    const std::string where = source + ":" + std::to_string(lineno);
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
    const std::string key = detail::trim(std::string_view(body).substr(0, eq));
    const std::string val = detail::trim(std::string_view(body).substr(eq + 1));
    if (std::find(kConfigKeys.begin(), kConfigKeys.end(), key) == kConfigKeys.end())
      throw ConfigError(where + ": unknown key '" + key + "'");
    if (seen.count(key)) throw ConfigError(where + ": duplicate key '" + key + "'");
    if (val.empty()) throw ConfigError(where + ": empty value for '" + key + "'");
    seen[key] = {val, lineno};
  }
  auto where = [&](const std::string& key) {
    return source + ":" + std::to_string(seen.at(key).second) + ": " + key;
  };
  auto str = [&](const char* key, std::string& out) {
    if (seen.count(key)) out = seen.at(key).first;
  };
  auto num = [&](const char* key, auto& out) {
    if (seen.count(key))
      out = detail::parse_number<std::decay_t<decltype(out)>>(seen.at(key).first, where(key));
  };
  str("experiment", c.experiment);
  str("task", c.task);
  str("partition", c.partition);
  str("scheme", c.scheme);
  str("output", c.output);
  num("d", c.d);
  num("sigma", c.sigma);
  num("delta", c.delta);
  num("epsilon", c.epsilon);
  num("beta", c.beta);
  num("n", c.n);
  num("s", c.s);
  num("k", c.k);
  num("trials", c.trials);
  num("eta", c.eta);
  if (!seen.count("seed")) throw ConfigError(source + ": missing mandatory key 'seed'");
  num("seed", c.seed);
  if (!seen.count("experiment"))
    throw ConfigError(source + ": missing mandatory key 'experiment'");

  if (seen.count("task"))
    detail::require_one_of(c.task, {"spheres", "circles", "discs", "hard"}, where("task"));
  if (seen.count("partition"))
    detail::require_one_of(c.partition, {"cube", "ball"}, where("partition"));
  if (seen.count("scheme"))
    detail::require_one_of(c.scheme, {"exact", "A", "B", "gaussian"}, where("scheme"));
  auto positive = [&](const char* key, double v) {
    if (!(v > 0)) throw ConfigError((seen.count(key) ? where(key) : source + ": " + key) +
                                    " must be positive");
  };
  positive("d", static_cast<double>(c.d));
  positive("sigma", c.sigma);
  positive("epsilon", c.epsilon);
  positive("beta", c.beta);
  positive("n", static_cast<double>(c.n));
  positive("s", static_cast<double>(c.s));
  positive("k", static_cast<double>(c.k));
  positive("trials", static_cast<double>(c.trials));
  positive("eta", c.eta);
  if (c.delta < 0 || c.delta >= 0.5)
    throw ConfigError((seen.count("delta") ? where("delta") : source + ": delta") +
                      " must lie in [0, 1/2)");
  return c;
}

inline ExperimentConfig parse_config_string(const std::string& text,
                                            const std::string& source = "config") {
  std::istringstream is(text);
  return parse_config(is, source);
}

/// Keys present in a config text, without validation.
inline std::set<std::string> config_keys(const std::string& text) {
  std::set<std::string> keys;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    const std::string body = detail::trim(std::string_view(line).substr(0, line.find('#')));
    const auto eq = body.find('=');
    if (eq != std::string::npos) keys.insert(detail::trim(std::string_view(body).substr(0, eq)));
  }
  return keys;
}

inline std::string read_config_text(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError(path + ": cannot open");
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

inline ExperimentConfig load_config(const std::string& path) {
  return parse_config_string(read_config_text(path), path);
}

inline std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

/// Canonical text form; parse_config_string(to_text(c)) == c.
inline std::string to_text(const ExperimentConfig& c) {
  std::ostringstream os;
  os << "experiment = " << c.experiment << '\n'
     << "task = " << c.task << '\n'
     << "d = " << c.d << '\n'
     << "sigma = " << format_double(c.sigma) << '\n'
     << "delta = " << format_double(c.delta) << '\n'
     << "partition = " << c.partition << '\n'
     << "epsilon = " << format_double(c.epsilon) << '\n'
     << "beta = " << format_double(c.beta) << '\n'
     << "scheme = " << c.scheme << '\n'
     << "n = " << c.n << '\n'
     << "s = " << c.s << '\n'
     << "k = " << c.k << '\n'
     << "trials = " << c.trials << '\n'
     << "eta = " << format_double(c.eta) << '\n'
     << "seed = " << c.seed << '\n'
     << "output = " << c.output << '\n';
  return os.str();
}

inline bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
  return to_text(a) == to_text(b);
}

}  // namespace padsmooth
