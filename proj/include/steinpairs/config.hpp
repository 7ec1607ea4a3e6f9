#pragma once

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "steinpairs/errors.hpp"
#include "steinpairs/report.hpp"

namespace steinpairs {

enum class Suite { linearity, identities, bounds, distances, oracles };

inline const std::vector<std::pair<Suite, std::string>>& suite_names() {
  static const std::vector<std::pair<Suite, std::string>> names{{Suite::linearity, "linearity"},
                                                                {Suite::identities, "identities"},
                                                                {Suite::bounds, "bounds"},
                                                                {Suite::distances, "distances"},
                                                                {Suite::oracles, "oracles"}};
  return names;
}

inline const std::vector<std::string>& model_names() {
  static const std::vector<std::string> names{"runs", "iidsum", "perm", "mww", "spinchain"};
  return names;
}

// Everything a run needs. Unknown constants (gamma(d), c0, a) are plain
// parameters defaulting to 1.
struct ExperimentConfig {
  std::string model = "runs";
  std::set<Suite> suites{Suite::linearity, Suite::identities, Suite::bounds, Suite::distances, Suite::oracles};
  std::uint64_t seed = 1;
  std::size_t samples = 100000;
  std::string out;  // empty: standard output
  Format format = Format::text;
  bool enumerate = true;  // allow exact enumeration when the space is small
  unsigned workers = 0;

  // Model parameters; each model reads the ones it needs.
  int n = 10;
  int d = 2;
  double p = 0.5;
  std::string law = "two_point";
  double q = 0.5;
  int n_x = 3;
  int n_y = 3;
  std::string tensor_file;

  double gamma_d = 1.0;
  double c0 = 1.0;
  double a_const = 1.0;

  bool operator==(const ExperimentConfig&) const = default;
};

namespace detail {

inline std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::string suites_text(const std::set<Suite>& s) {
  std::string out;
  for (const auto& [suite, name] : suite_names())
    if (s.count(suite)) out += (out.empty() ? "" : ",") + name;
  return out;
}

inline const char* format_text(Format f) {
  switch (f) {
    case Format::text: return "text";
    case Format::csv: return "csv";
    case Format::jsonl: return "jsonl";
  }
  return "text";
}

template <class T>
T parse_integer(const std::string& v, int line, const std::string& key) {
  T out{};
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size())
    throw ConfigError(line, key, "expected an integer, got '" + v + "'");
  return out;
}

inline double parse_real(const std::string& v, int line, const std::string& key) {
  try {
    return parse_number(v);
  } catch (const InvalidArgument&) {
    throw ConfigError(line, key, "expected a number, got '" + v + "'");
  }
}

inline bool parse_bool(const std::string& v, int line, const std::string& key) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(line, key, "expected true or false, got '" + v + "'");
}

}  // namespace detail

// Sets one key; `line` is 0 for command-line values.
inline void set_config_value(ExperimentConfig& c, const std::string& key, const std::string& value, int line = 0) {
  using namespace detail;
  if (key == "model") {
    if (std::find(model_names().begin(), model_names().end(), value) == model_names().end())
      throw ConfigError(line, key, "unknown model '" + value + "'");
    c.model = value;
  } else if (key == "suites") {
    std::set<Suite> s;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      auto it = std::find_if(suite_names().begin(), suite_names().end(), [&](auto& p) { return p.second == item; });
      if (it == suite_names().end()) throw ConfigError(line, key, "unknown suite '" + item + "'");
      s.insert(it->first);
    }
    if (s.empty()) throw ConfigError(line, key, "no suite selected");
    c.suites = s;
  } else if (key == "seed") {
    c.seed = parse_integer<std::uint64_t>(value, line, key);
  } else if (key == "samples") {
    c.samples = parse_integer<std::size_t>(value, line, key);
  } else if (key == "out") {
    c.out = value;
  } else if (key == "format") {
    try {
      c.format = parse_format(value);
    } catch (const InvalidArgument& e) {
      throw ConfigError(line, key, e.what());
    }
  } else if (key == "enumerate") {
    c.enumerate = parse_bool(value, line, key);
  } else if (key == "workers") {
    c.workers = parse_integer<unsigned>(value, line, key);
  } else if (key == "n") {
    c.n = parse_integer<int>(value, line, key);
  } else if (key == "d") {
    c.d = parse_integer<int>(value, line, key);
  } else if (key == "p") {
    c.p = parse_real(value, line, key);
  } else if (key == "law") {
    c.law = value;
  } else if (key == "q") {
    c.q = parse_real(value, line, key);
  } else if (key == "n_x") {
    c.n_x = parse_integer<int>(value, line, key);
  } else if (key == "n_y") {
    c.n_y = parse_integer<int>(value, line, key);
  } else if (key == "tensor_file") {
    c.tensor_file = value;
  } else if (key == "gamma_d") {
    c.gamma_d = parse_real(value, line, key);
  } else if (key == "c0") {
    c.c0 = parse_real(value, line, key);
  } else if (key == "a_const") {
    c.a_const = parse_real(value, line, key);
  } else {
    throw ConfigError(line, key, "unknown key");
  }
}

// Range checks, reported against the offending field.
inline void validate(const ExperimentConfig& c) {
  if (c.samples < 2) throw ConfigError(0, "samples", "need at least 2 samples");
  if (c.n < 1) throw ConfigError(0, "n", "must be positive");
  if (c.d < 1) throw ConfigError(0, "d", "must be positive");
  if (!(c.p > 0.0 && c.p < 1.0)) throw ConfigError(0, "p", "must lie in (0, 1), got " + format_number(c.p));
  if (!(c.q > 0.0 && c.q < 1.0)) throw ConfigError(0, "q", "must lie in (0, 1), got " + format_number(c.q));
  if (c.law != "two_point" && c.law != "bernoulli" && c.law != "uniform")
    throw ConfigError(0, "law", "unknown law '" + c.law + "' (two_point, bernoulli, uniform)");
  if (c.n_x < 1) throw ConfigError(0, "n_x", "must be positive");
  if (c.n_y < 1) throw ConfigError(0, "n_y", "must be positive");
  if (!(c.gamma_d > 0.0)) throw ConfigError(0, "gamma_d", "must be positive");
  if (!(c.c0 > 0.0)) throw ConfigError(0, "c0", "must be positive");
  if (!(c.a_const >= 1.0)) throw ConfigError(0, "a_const", "must be at least 1");
}

// key = value lines; '#' starts a comment.
inline ExperimentConfig parse_config(std::istream& in, ExperimentConfig base = {}) {
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (auto h = raw.find('#'); h != std::string::npos) raw.erase(h);
    raw = detail::trim(raw);
    if (raw.empty()) continue;
    const auto eq = raw.find('=');
    if (eq == std::string::npos) throw ConfigError(line, raw, "expected key = value");
    const std::string key = detail::trim(raw.substr(0, eq));
    const std::string value = detail::trim(raw.substr(eq + 1));
    if (key.empty()) throw ConfigError(line, "", "empty key");
    set_config_value(base, key, value, line);
  }
  return base;
}

inline ExperimentConfig parse_config(const std::string& text, ExperimentConfig base = {}) {
  std::istringstream in(text);
  return parse_config(in, std::move(base));
}

inline ExperimentConfig load_config(const std::string& path, ExperimentConfig base = {}) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path);
  return parse_config(in, std::move(base));
}

// Canonical text; parse_config(serialize_config(c)) == c.
inline std::string serialize_config(const ExperimentConfig& c) {
  std::ostringstream os;
  os << "model = " << c.model << '\n'
     << "suites = " << detail::suites_text(c.suites) << '\n'
     << "seed = " << c.seed << '\n'
     << "samples = " << c.samples << '\n'
     << "out = " << c.out << '\n'
     << "format = " << detail::format_text(c.format) << '\n'
     << "enumerate = " << (c.enumerate ? "true" : "false") << '\n'
     << "workers = " << c.workers << '\n'
     << "n = " << c.n << '\n'
     << "d = " << c.d << '\n'
     << "p = " << format_number(c.p) << '\n'
     << "law = " << c.law << '\n'
     << "q = " << format_number(c.q) << '\n'
     << "n_x = " << c.n_x << '\n'
     << "n_y = " << c.n_y << '\n'
     << "tensor_file = " << c.tensor_file << '\n'
     << "gamma_d = " << format_number(c.gamma_d) << '\n'
     << "c0 = " << format_number(c.c0) << '\n'
     << "a_const = " << format_number(c.a_const) << '\n';
  return os.str();
}

}  // namespace steinpairs
