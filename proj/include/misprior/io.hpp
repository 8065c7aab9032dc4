#pragma once

#include <cctype>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace misprior {

/// Invalid or missing configuration; `field()` names the offending key.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::runtime_error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

/// Flat `key = value` configuration in TOML syntax (no tables). Values are
/// strings, integers, floats, or booleans; `#` starts a comment.
class Config {
 public:
  static Config parse(const std::string& text) {
    Config cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const std::string body = trim(strip_comment(line));
      if (body.empty()) continue;
      const auto eq = body.find('=');
      if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno), "expected key = value");
      const std::string key = trim(body.substr(0, eq));
      std::string value = trim(body.substr(eq + 1));
      if (key.empty()) throw ConfigError("line " + std::to_string(lineno), "empty key");
      for (char c : key) {
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-')) {
          throw ConfigError(key, "invalid character in key");
        }
      }
      if (value.empty()) throw ConfigError(key, "missing value");
      Entry e;
      if (value.front() == '"') {
        if (value.size() < 2 || value.back() != '"') throw ConfigError(key, "unterminated string");
        e.text = unescape(value.substr(1, value.size() - 2));
        e.quoted = true;
      } else {
        if (value != "true" && value != "false" && !is_number(value)) {
          throw ConfigError(key, "value must be a quoted string, number, or boolean");
        }
        e.text = value;
      }
      if (cfg.values_.count(key)) throw ConfigError(key, "duplicate key");
      cfg.values_[key] = e;
    }
    return cfg;
  }

  static Config load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("config", "cannot read '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return parse(ss.str());
  }

  /// Keys in sorted order, one per line.
  std::string serialize() const {
    std::string out;
    for (const auto& [k, e] : values_) {
      out += k + " = ";
      out += e.quoted ? "\"" + escape(e.text) + "\"" : e.text;
      out += "\n";
    }
    return out;
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  void set(const std::string& key, const std::string& value) { values_[key] = Entry{value, true}; }
  void set(const std::string& key, const char* value) { set(key, std::string(value)); }
  void set(const std::string& key, long long value) { values_[key] = Entry{std::to_string(value), false}; }
  void set(const std::string& key, int value) { set(key, static_cast<long long>(value)); }
  void set(const std::string& key, double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    std::string s = buf;
    if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
    values_[key] = Entry{s, false};
  }
  void set(const std::string& key, bool value) { values_[key] = Entry{value ? "true" : "false", false}; }

  std::string get_string(const std::string& key) const {
    const auto& e = require(key);
    if (!e.quoted) throw ConfigError(key, "expected a quoted string");
    return e.text;
  }

  long long get_int(const std::string& key) const {
    const auto& e = require(key);
    if (e.quoted) throw ConfigError(key, "expected an integer");
    errno = 0;
    char* end = nullptr;
    const long long v = std::strtoll(e.text.c_str(), &end, 10);
    if (errno != 0 || end == e.text.c_str() || *end != '\0') throw ConfigError(key, "expected an integer");
    return v;
  }

  double get_double(const std::string& key) const {
    const auto& e = require(key);
    if (e.quoted || e.text == "true" || e.text == "false") throw ConfigError(key, "expected a number");
    return std::strtod(e.text.c_str(), nullptr);
  }

  bool get_bool(const std::string& key) const {
    const auto& e = require(key);
    if (e.quoted || (e.text != "true" && e.text != "false")) throw ConfigError(key, "expected true or false");
    return e.text == "true";
  }

  std::vector<std::string> keys() const {
    std::vector<std::string> k;
    for (const auto& [key, e] : values_) k.push_back(key);
    return k;
  }

  bool operator==(const Config& other) const { return serialize() == other.serialize(); }

 private:
  struct Entry {
    std::string text;
    bool quoted = false;
  };

  const Entry& require(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError(key, "missing required field");
    return it->second;
  }

  static std::string strip_comment(const std::string& line) {
    bool in_str = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) in_str = !in_str;
      if (line[i] == '#' && !in_str) return line.substr(0, i);
    }
    return line;
  }

  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  }

  static bool is_number(const std::string& s) {
    char* end = nullptr;
    std::strtod(s.c_str(), &end);
    return end != s.c_str() && *end == '\0';
  }

  static std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
      if (c == '"' || c == '\\') out += '\\';
      out += c;
    }
    return out;
  }

  static std::string unescape(const std::string& s) {
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] == '\\' && i + 1 < s.size()) ++i;
      out += s[i];
    }
    return out;
  }

  std::map<std::string, Entry> values_;
};

// ---------------------------------------------------------------------------
// CSV artifacts. Floating values carry 9 significant digits.

inline std::string fmt9(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

struct LearningCurveRow {
  std::string algorithm;
  std::string config_id;
  int episode;
  double mean_reward;
  double stderr_;
  bool envelope_flag;
};

struct FirstActionRow {
  std::string algorithm;
  int arm;
  double frequency;
};

struct BoundsRow {
  std::string instance;
  long n;
  int H;
  double eps;
  double B;
  double bound;
  double measured_gap;
  double gap_stderr;
};

struct LowerBoundRow {
  double eps;
  int H;
  int k;
  double analytic_tv;
  double empirical_tv;
  double empirical_stderr;
  double reward_gap;
  double gap_stderr;
};

inline constexpr const char* kLearningCurveHeader = "algorithm,config_id,episode,mean_reward,stderr,envelope_flag";
inline constexpr const char* kFirstActionHeader = "algorithm,arm,frequency";
inline constexpr const char* kBoundsHeader = "instance,n,H,eps,B,bound,measured_gap,gap_stderr";
inline constexpr const char* kLowerBoundHeader = "eps,H,k,analytic_tv,empirical_tv,empirical_stderr,reward_gap,gap_stderr";

inline std::string format_row(const LearningCurveRow& r) {
  return csv_field(r.algorithm) + "," + csv_field(r.config_id) + "," + std::to_string(r.episode) + "," +
         fmt9(r.mean_reward) + "," + fmt9(r.stderr_) + "," + (r.envelope_flag ? "1" : "0");
}

inline std::string format_row(const FirstActionRow& r) {
  return csv_field(r.algorithm) + "," + std::to_string(r.arm) + "," + fmt9(r.frequency);
}

inline std::string format_row(const BoundsRow& r) {
  return csv_field(r.instance) + "," + std::to_string(r.n) + "," + std::to_string(r.H) + "," + fmt9(r.eps) + "," +
         fmt9(r.B) + "," + fmt9(r.bound) + "," + fmt9(r.measured_gap) + "," + fmt9(r.gap_stderr);
}

inline std::string format_row(const LowerBoundRow& r) {
  return fmt9(r.eps) + "," + std::to_string(r.H) + "," + std::to_string(r.k) + "," + fmt9(r.analytic_tv) + "," +
         fmt9(r.empirical_tv) + "," + fmt9(r.empirical_stderr) + "," + fmt9(r.reward_gap) + "," + fmt9(r.gap_stderr);
}

template <class Row>
std::string render_csv(const char* header, const std::vector<Row>& rows) {
  std::string out = std::string(header) + "\n";
  for (const auto& r : rows) out += format_row(r) + "\n";
  return out;
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
  f << text;
  if (!f) throw std::runtime_error("write failed for '" + path + "'");
}

inline void emit_learning_curve_csv(const std::string& path, const std::vector<LearningCurveRow>& rows) {
  write_text(path, render_csv(kLearningCurveHeader, rows));
}
inline void emit_first_action_csv(const std::string& path, const std::vector<FirstActionRow>& rows) {
  write_text(path, render_csv(kFirstActionHeader, rows));
}
inline void emit_bounds_csv(const std::string& path, const std::vector<BoundsRow>& rows) {
  write_text(path, render_csv(kBoundsHeader, rows));
}
inline void emit_lowerbound_csv(const std::string& path, const std::vector<LowerBoundRow>& rows) {
  write_text(path, render_csv(kLowerBoundHeader, rows));
}

/// Splits one CSV line (RFC 4180 quoting, no embedded newlines).
inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace misprior
