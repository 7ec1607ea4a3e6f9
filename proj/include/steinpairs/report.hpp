#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "steinpairs/errors.hpp"
#include "steinpairs/montecarlo.hpp"

namespace steinpairs {

enum class Verdict { pass, fail, info };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::pass: return "PASS";
    case Verdict::fail: return "FAIL";
    case Verdict::info: return "INFO";
  }
  return "?";
}

inline Verdict parse_verdict(std::string_view s) {
  if (s == "PASS") return Verdict::pass;
  if (s == "FAIL") return Verdict::fail;
  if (s == "INFO") return Verdict::info;
  throw InvalidArgument("unknown verdict '" + std::string(s) + "'");
}

// One check. `reference` names the identity or bound being tested, or
// "plumbing" for bookkeeping rows.
struct Row {
  std::string check;
  double value = 0.0;
  double std_error = 0.0;
  double reference_value = 0.0;
  double tolerance = 0.0;
  Verdict verdict = Verdict::info;
  std::string reference = "plumbing";

  bool operator==(const Row&) const = default;
};

inline const std::vector<std::string>& report_columns() {
  static const std::vector<std::string> cols{"check",     "value",   "std_error", "reference_value",
                                             "tolerance", "verdict", "reference"};
  return cols;
}

struct Report {
  std::vector<Row> rows;

  bool all_pass() const {
    for (const auto& r : rows)
      if (r.verdict == Verdict::fail) return false;
    return true;
  }

  std::size_t failures() const {
    std::size_t n = 0;
    for (const auto& r : rows) n += r.verdict == Verdict::fail;
    return n;
  }

  void append(const Report& other) { rows.insert(rows.end(), other.rows.begin(), other.rows.end()); }

  // |value - ref| <= tol * max(1, |ref|).
  Row& exact(std::string check, double value, double ref, double tol, std::string reference) {
    const double allowed = tol * std::max(1.0, std::abs(ref));
    return push({std::move(check), value, 0.0, ref, allowed,
                 std::abs(value - ref) <= allowed ? Verdict::pass : Verdict::fail, std::move(reference)});
  }

  // |estimate - ref| <= k * SE (+ a 1e-12 floor for exact estimates).
  Row& within(std::string check, const Estimate& e, double ref, double k, std::string reference) {
    const double allowed = k * e.std_error + 1e-12;
    return push({std::move(check), e.value, e.std_error, ref, allowed,
                 std::abs(e.value - ref) <= allowed ? Verdict::pass : Verdict::fail, std::move(reference)});
  }

  // value <= bound + k * se.
  Row& at_most(std::string check, double value, double se, double bound, double k, std::string reference) {
    return push({std::move(check), value, se, bound, k * se,
                 value <= bound + k * se ? Verdict::pass : Verdict::fail, std::move(reference)});
  }

  // value >= threshold.
  Row& at_least(std::string check, double value, double threshold, std::string reference) {
    return push({std::move(check), value, 0.0, threshold, 0.0, value >= threshold ? Verdict::pass : Verdict::fail,
                 std::move(reference)});
  }

  Row& info(std::string check, double value, double se = 0.0, std::string reference = "plumbing") {
    return push({std::move(check), value, se, 0.0, 0.0, Verdict::info, std::move(reference)});
  }

  Row& flag(std::string check, bool ok, std::string reference) {
    return push({std::move(check), ok ? 1.0 : 0.0, 0.0, 1.0, 0.0, ok ? Verdict::pass : Verdict::fail,
                 std::move(reference)});
  }

 private:
  Row& push(Row r) {
    rows.push_back(std::move(r));
    return rows.back();
  }
};

// Shortest round-trip text; scientific notation for 0 < |x| < 1e-4.
inline std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const bool sci = x != 0.0 && std::abs(x) < 1e-4;
  const auto res = sci ? std::to_chars(buf, buf + sizeof buf, x, std::chars_format::scientific)
                       : std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

inline double parse_number(std::string_view s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw InvalidArgument("not a number: '" + std::string(s) + "'");
  return v;
}

enum class Format { text, csv, jsonl };

inline Format parse_format(std::string_view s) {
  if (s == "text") return Format::text;
  if (s == "csv") return Format::csv;
  if (s == "jsonl") return Format::jsonl;
  throw InvalidArgument("unknown format '" + std::string(s) + "' (text, csv, jsonl)");
}

namespace detail {

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::vector<std::string> row_fields(const Row& r) {
  return {r.check,
          format_number(r.value),
          format_number(r.std_error),
          format_number(r.reference_value),
          format_number(r.tolerance),
          to_string(r.verdict),
          r.reference};
}

}  // namespace detail

inline void emit_report(const Report& report, Format format, std::ostream& os) {
  const auto& cols = report_columns();
  switch (format) {
    case Format::csv: {
      for (std::size_t c = 0; c < cols.size(); ++c) os << (c ? "," : "") << cols[c];
      os << '\n';
      for (const auto& r : report.rows) {
        const auto f = detail::row_fields(r);
        for (std::size_t c = 0; c < f.size(); ++c) os << (c ? "," : "") << detail::csv_field(f[c]);
        os << '\n';
      }
      break;
    }
    case Format::jsonl: {
      for (const auto& r : report.rows) {
        auto num = [](double x) -> nlohmann::ordered_json {
          if (std::isfinite(x)) return x;
          return format_number(x);
        };
        nlohmann::ordered_json j;
        j["check"] = r.check;
        j["value"] = num(r.value);
        j["std_error"] = num(r.std_error);
        j["reference_value"] = num(r.reference_value);
        j["tolerance"] = num(r.tolerance);
        j["verdict"] = to_string(r.verdict);
        j["reference"] = r.reference;
        os << j.dump() << '\n';
      }
      break;
    }
    case Format::text: {
      std::vector<std::size_t> width(cols.size());
      std::vector<std::vector<std::string>> cells;
      cells.push_back(cols);
      for (const auto& r : report.rows) cells.push_back(detail::row_fields(r));
      for (const auto& line : cells)
        for (std::size_t c = 0; c < line.size(); ++c) width[c] = std::max(width[c], line[c].size());
      for (const auto& line : cells) {
        for (std::size_t c = 0; c < line.size(); ++c) {
          os << line[c];
          if (c + 1 < line.size()) os << std::string(width[c] - line[c].size() + 2, ' ');
        }
        os << '\n';
      }
      break;
    }
  }
}

inline std::string report_string(const Report& report, Format format) {
  std::ostringstream os;
  emit_report(report, format, os);
  return os.str();
}

inline void write_report(const Report& report, Format format, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  emit_report(report, format, out);
  if (!out) throw IoError("write to " + path + " failed");
}

// Splits CSV text into records; quoted fields may contain commas, quotes and
// newlines.
inline std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> out;
  std::vector<std::string> rec;
  std::string field;
  bool quoted = false, any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"' && i + 1 < text.size() && text[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"') {
      quoted = any = true;
    } else if (c == ',') {
      rec.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\n') {
      rec.push_back(std::move(field));
      out.push_back(std::move(rec));
      field.clear();
      rec.clear();
      any = false;
    } else if (c != '\r') {
      field += c;
      any = true;
    }
  }
  if (quoted) throw InvalidArgument("unterminated quoted CSV field");
  if (any) {
    rec.push_back(std::move(field));
    out.push_back(std::move(rec));
  }
  return out;
}

inline Report parse_csv_report(std::string_view text) {
  const auto recs = parse_csv(text);
  if (recs.empty() || recs.front() != report_columns()) throw InvalidArgument("missing or unexpected CSV header");
  Report r;
  for (std::size_t k = 1; k < recs.size(); ++k) {
    const auto& f = recs[k];
    if (f.size() != report_columns().size())
      throw InvalidArgument("CSV record " + std::to_string(k) + " has " + std::to_string(f.size()) + " fields");
    r.rows.push_back({f[0], parse_number(f[1]), parse_number(f[2]), parse_number(f[3]), parse_number(f[4]),
                      parse_verdict(f[5]), f[6]});
  }
  return r;
}

// Columns for bound-versus-n sweeps.
struct SweepPoint {
  int n = 0;
  double bound = 0.0;
  double distance = 0.0;
  double std_error = 0.0;
};

inline void emit_sweep(const std::vector<SweepPoint>& pts, std::ostream& os) {
  os << "n,bound,distance,std_error\n";
  for (const auto& p : pts)
    os << p.n << ',' << format_number(p.bound) << ',' << format_number(p.distance) << ','
       << format_number(p.std_error) << '\n';
}

}  // namespace steinpairs
