// Distributed under the MIT License.
// See LICENSE.txt for details.

#include "cmcfol/io.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

#include "cmcfol/errors.hpp"
#include "cmcfol/format.hpp"
#include "json.hpp"

namespace cmcfol {

namespace {

void escape_into(std::string& out, const std::string& s) {
  out += '"';
  for (const char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x", c);
          out += buf;
        } else {
          out += c;
        }
    }
  }
  out += '"';
}

}  // namespace

JsonValue JsonValue::object() {
  JsonValue v;
  v.node_ = Object{};
  return v;
}

JsonValue JsonValue::array() {
  JsonValue v;
  v.node_ = Array{};
  return v;
}

JsonValue JsonValue::vec(const Vec3& v) {
  JsonValue a = array();
  for (int i = 0; i < 3; ++i) a.push(v[i]);
  return a;
}

JsonValue JsonValue::seq(const std::vector<double>& v) {
  JsonValue a = array();
  for (const double x : v) a.push(x);
  return a;
}

bool JsonValue::is_object() const { return std::holds_alternative<Object>(node_); }
bool JsonValue::is_array() const { return std::holds_alternative<Array>(node_); }

JsonValue& JsonValue::operator[](const std::string& key) {
  if (std::holds_alternative<std::nullptr_t>(node_)) node_ = Object{};
  if (!is_object()) throw ShapeError("report node is not an object (key '" + key + "')");
  auto& members = std::get<Object>(node_);
  for (auto& m : members)
    if (m.key == key) return m.value;
  members.push_back(Member{key, JsonValue()});
  return members.back().value;
}

JsonValue& JsonValue::push(JsonValue v) {
  if (std::holds_alternative<std::nullptr_t>(node_)) node_ = Array{};
  if (!is_array()) throw ShapeError("report node is not an array");
  std::get<Array>(node_).push_back(std::move(v));
  return *this;
}

void JsonValue::write(std::string& out, int indent, int depth) const {
  const std::string pad(static_cast<std::size_t>(indent) * (depth + 1), ' ');
  const std::string close_pad(static_cast<std::size_t>(indent) * depth, ' ');
  switch (node_.index()) {
    case 0: out += "null"; break;
    case 1: out += std::get<bool>(node_) ? "true" : "false"; break;
    case 2: out += std::to_string(std::get<std::int64_t>(node_)); break;
    case 3: {
      const double x = std::get<double>(node_);
      // JSON has no literals for non-finite values; report them as strings.
      if (std::isfinite(x))
        out += format_double(x);
      else
        escape_into(out, format_double(x));
      break;
    }
    case 4: escape_into(out, std::get<std::string>(node_)); break;
    case 5: {
      const auto& members = std::get<Object>(node_);
      if (members.empty()) {
        out += "{}";
        break;
      }
      out += "{\n";
      for (std::size_t i = 0; i < members.size(); ++i) {
        out += pad;
        escape_into(out, members[i].key);
        out += ": ";
        members[i].value.write(out, indent, depth + 1);
        out += i + 1 < members.size() ? ",\n" : "\n";
      }
      out += close_pad + "}";
      break;
    }
    case 6: {
      const auto& items = std::get<Array>(node_);
      if (items.empty()) {
        out += "[]";
        break;
      }
      out += "[\n";
      for (std::size_t i = 0; i < items.size(); ++i) {
        out += pad;
        items[i].write(out, indent, depth + 1);
        out += i + 1 < items.size() ? ",\n" : "\n";
      }
      out += close_pad + "]";
      break;
    }
  }
}

std::string JsonValue::dump(int indent) const {
  std::string out;
  write(out, indent, 0);
  out += '\n';
  return out;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  os << content;
  if (!os) throw IoError("write to '" + path + "' failed");
}

void write_json_file(const std::string& path, const JsonValue& report) {
  write_text_file(path, report.dump());
}

void write_csv_file(const std::string& path, const std::vector<std::string>& header,
                    const std::vector<std::vector<double>>& rows) {
  std::string out;
  for (std::size_t i = 0; i < header.size(); ++i) {
    out += header[i];
    out += i + 1 < header.size() ? ',' : '\n';
  }
  for (const auto& row : rows) {
    if (row.size() != header.size())
      throw ShapeError("csv row width " + std::to_string(row.size()) +
                       " does not match header width " + std::to_string(header.size()));
    for (std::size_t i = 0; i < row.size(); ++i) {
      out += format_double(row[i]);
      out += i + 1 < row.size() ? ',' : '\n';
    }
  }
  write_text_file(path, out);
}

void write_gnuplot_file(const std::string& path, const std::string& title,
                        const std::string& csv_name, const std::vector<PlotSeries>& series,
                        bool logscale) {
  std::string out;
  out += "set datafile separator ','\n";
  out += "set key autotitle columnhead\n";
  out += "set title '" + title + "'\n";
  out += "set grid\n";
  if (logscale) out += "set logscale xy\n";
  out += "plot ";
  for (std::size_t i = 0; i < series.size(); ++i) {
    out += "'" + csv_name + "' using " + std::to_string(series[i].x) + ":" +
           std::to_string(series[i].y) + " with linespoints title '" + series[i].title + "'";
    out += i + 1 < series.size() ? ", \\\n     " : "\n";
  }
  write_text_file(path, out);
}

namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& msg, const std::string& path) {
  throw ConfigError(msg, path);
}

double as_number(const json& j, const std::string& path) {
  if (!j.is_number()) bad("expected a number, got " + std::string(j.type_name()), path);
  const double x = j.get<double>();
  if (!std::isfinite(x)) bad("value must be finite", path);
  return x;
}

int as_exponent(const json& j, const std::string& path) {
  const double x = as_number(j, path);
  const double r = std::round(x);
  if (std::abs(x - r) > 1e-9 || r < 0 || r > 8)
    bad("expected a small nonnegative integer exponent", path);
  return static_cast<int>(r);
}

std::string as_string(const json& j, const std::string& path) {
  if (!j.is_string()) bad("expected a string, got " + std::string(j.type_name()), path);
  return j.get<std::string>();
}

Vec3 as_vec3(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 3) bad("expected an array of 3 numbers", path);
  Vec3 v;
  for (int i = 0; i < 3; ++i) v[i] = as_number(j[i], path + "[" + std::to_string(i) + "]");
  return v;
}

const struct KindName {
  MetricKind kind;
  const char* name;
} kind_names[] = {
    {MetricKind::Flat, "flat"},
    {MetricKind::SchwarzschildIsotropic, "schwarzschild_isotropic"},
    {MetricKind::TranslatedSchwarzschild, "translated_schwarzschild"},
    {MetricKind::PerturbedSchwarzschild, "perturbed_schwarzschild"},
    {MetricKind::CustomPerturbation, "custom_perturbation"},
};

const struct StructureName {
  TensorStructure structure;
  const char* name;
} structure_names[] = {
    {TensorStructure::ScalarTimesIdentity, "scalar_identity"},
    {TensorStructure::RankOne, "rank_one"},
    {TensorStructure::OffDiagonal, "off_diagonal"},
    {TensorStructure::RadialRankOne, "radial_rank_one"},
    {TensorStructure::HessianProfile, "hessian_profile"},
};

MetricKind parse_kind(const std::string& s, const std::string& path) {
  for (const auto& k : kind_names)
    if (s == k.name) return k.kind;
  std::string valid;
  for (const auto& k : kind_names) valid += std::string(valid.empty() ? "" : ", ") + k.name;
  bad("unknown kind '" + s + "' (valid: " + valid + ")", path);
}

TensorStructure parse_structure(const std::string& s, const std::string& path) {
  for (const auto& k : structure_names)
    if (s == k.name) return k.structure;
  std::string valid;
  for (const auto& k : structure_names) valid += std::string(valid.empty() ? "" : ", ") + k.name;
  bad("unknown structure '" + s + "' (valid: " + valid + ")", path);
}

PolyProfile parse_profile(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) bad("expected a nonempty array of [coef, a, b, c] rows", path);
  PolyProfile profile;
  profile.monos.clear();
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string row_path = path + "[" + std::to_string(i) + "]";
    const json& row = j[i];
    if (!row.is_array() || row.size() != 4) bad("expected a [coef, a, b, c] row", row_path);
    PolyProfile::Mono mono;
    mono.coef = as_number(row[0], row_path + "[0]");
    mono.a = as_exponent(row[1], row_path + "[1]");
    mono.b = as_exponent(row[2], row_path + "[2]");
    mono.c = as_exponent(row[3], row_path + "[3]");
    if (mono.a + mono.b + mono.c > 4) bad("profile degree exceeds 4", row_path);
    profile.monos.push_back(mono);
  }
  return profile;
}

PerturbationTerm parse_term(const json& j, const std::string& path) {
  if (!j.is_object()) bad("expected a perturbation table", path);
  PerturbationTerm term;
  bool have_amp = false, have_decay = false;
  for (const auto& [key, value] : j.items()) {
    const std::string kp = path + "." + key;
    if (key == "amplitude") {
      term.amplitude = as_number(value, kp);
      have_amp = true;
    } else if (key == "decay") {
      term.decay = as_number(value, kp);
      have_decay = true;
    } else if (key == "structure") {
      term.structure = parse_structure(as_string(value, kp), kp);
    } else if (key == "parity") {
      const std::string s = as_string(value, kp);
      if (s == "even")
        term.parity = TermParity::Even;
      else if (s == "odd")
        term.parity = TermParity::Odd;
      else
        bad("unknown parity '" + s + "' (valid: even, odd)", kp);
    } else if (key == "profile") {
      term.profile = parse_profile(value, kp);
    } else if (key == "direction") {
      term.direction = as_vec3(value, kp);
    } else if (key == "off") {
      if (!value.is_array() || value.size() != 2) bad("expected an array of 2 axis indices", kp);
      term.off_i = as_exponent(value[0], kp + "[0]");
      term.off_j = as_exponent(value[1], kp + "[1]");
      if (term.off_i > 2 || term.off_j > 2 || term.off_i == term.off_j)
        bad("off-diagonal axes must be distinct indices in 0..2", kp);
    } else {
      bad("unknown key '" + key + "'", kp);
    }
  }
  if (!have_amp) bad("missing required key 'amplitude'", path + ".amplitude");
  if (!have_decay) bad("missing required key 'decay'", path + ".decay");
  return term;
}

MetricConfig config_from_json(const json& doc, const std::string& source_name) {
  if (!doc.is_object()) bad("config root must be an object", "");
  MetricConfig cfg;
  cfg.name = source_name;
  bool have_kind = false;
  for (const auto& [key, value] : doc.items()) {
    if (key == "kind") {
      cfg.kind = parse_kind(as_string(value, key), key);
      have_kind = true;
    } else if (key == "mass") {
      cfg.mass = as_number(value, key);
    } else if (key == "shift") {
      cfg.shift = as_vec3(value, key);
    } else if (key == "tau") {
      cfg.tau = as_number(value, key);
    } else if (key == "tau_hat") {
      cfg.tau_hat = as_number(value, key);
    } else if (key == "name") {
      cfg.name = as_string(value, key);
    } else if (key == "perturbations") {
      if (!value.is_array()) bad("expected an array of perturbation tables", key);
      for (std::size_t i = 0; i < value.size(); ++i)
        cfg.perturbations.push_back(
            parse_term(value[i], "perturbations[" + std::to_string(i) + "]"));
    } else {
      bad("unknown key '" + key + "'", key);
    }
  }
  if (!have_kind) bad("missing required key 'kind'", "kind");
  return cfg;
}

// ---- TOML subset ----------------------------------------------------------
// Covers: full-line and trailing # comments, key = value with string, bool,
// number, and (nested) inline-array values, plus [[perturbations]] tables.

struct TomlCursor {
  const std::string& line;
  std::size_t pos = 0;
  int lineno = 0;
  const std::string& source;

  [[noreturn]] void fail(const std::string& msg, const std::string& field) const {
    bad(source + ":" + std::to_string(lineno) + ": " + msg, field);
  }
  void skip_ws() {
    while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t')) ++pos;
  }
  bool at_end() {
    skip_ws();
    return pos >= line.size() || line[pos] == '#';
  }
};

json parse_toml_value(TomlCursor& cur, const std::string& field) {
  cur.skip_ws();
  if (cur.pos >= cur.line.size()) cur.fail("missing value", field);
  const char c = cur.line[cur.pos];
  if (c == '"') {
    const std::size_t close = cur.line.find('"', cur.pos + 1);
    if (close == std::string::npos) cur.fail("unterminated string", field);
    json v = cur.line.substr(cur.pos + 1, close - cur.pos - 1);
    cur.pos = close + 1;
    return v;
  }
  if (c == '[') {
    ++cur.pos;
    json arr = json::array();
    cur.skip_ws();
    if (cur.pos < cur.line.size() && cur.line[cur.pos] == ']') {
      ++cur.pos;
      return arr;
    }
    while (true) {
      arr.push_back(parse_toml_value(cur, field));
      cur.skip_ws();
      if (cur.pos >= cur.line.size()) cur.fail("unterminated array", field);
      if (cur.line[cur.pos] == ',') {
        ++cur.pos;
        continue;
      }
      if (cur.line[cur.pos] == ']') {
        ++cur.pos;
        return arr;
      }
      cur.fail("expected ',' or ']' in array", field);
    }
  }
  if (std::isalpha(static_cast<unsigned char>(c))) {
    std::size_t end = cur.pos;
    while (end < cur.line.size() && std::isalpha(static_cast<unsigned char>(cur.line[end])))
      ++end;
    const std::string word = cur.line.substr(cur.pos, end - cur.pos);
    cur.pos = end;
    if (word == "true") return true;
    if (word == "false") return false;
    if (word == "inf") return std::numeric_limits<double>::infinity();
    if (word == "nan") return std::numeric_limits<double>::quiet_NaN();
    cur.fail("unrecognized value '" + word + "'", field);
  }
  char* end = nullptr;
  const double x = std::strtod(cur.line.c_str() + cur.pos, &end);
  if (end == cur.line.c_str() + cur.pos) cur.fail("unrecognized value", field);
  cur.pos = static_cast<std::size_t>(end - cur.line.c_str());
  return x;
}

json toml_subset_to_json(const std::string& text, const std::string& source_name) {
  json doc = json::object();
  json* scope = &doc;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    TomlCursor cur{line, 0, lineno, source_name};
    if (cur.at_end()) continue;
    if (line[cur.pos] == '[') {
      std::size_t end = line.find_last_not_of(" \t");
      std::string header = line.substr(cur.pos, end - cur.pos + 1);
      if (header == "[[perturbations]]") {
        if (!doc.contains("perturbations")) doc["perturbations"] = json::array();
        doc["perturbations"].push_back(json::object());
        scope = &doc["perturbations"].back();
        continue;
      }
      cur.fail("unsupported table header '" + header + "' ([[perturbations]] only)", "");
    }
    std::size_t key_end = cur.pos;
    while (key_end < line.size() &&
           (std::isalnum(static_cast<unsigned char>(line[key_end])) || line[key_end] == '_'))
      ++key_end;
    const std::string key = line.substr(cur.pos, key_end - cur.pos);
    if (key.empty()) cur.fail("expected a key", "");
    cur.pos = key_end;
    cur.skip_ws();
    if (cur.pos >= line.size() || line[cur.pos] != '=') cur.fail("expected '=' after key", key);
    ++cur.pos;
    json value = parse_toml_value(cur, key);
    if (!cur.at_end()) cur.fail("trailing characters after value", key);
    if (scope->contains(key)) cur.fail("duplicate key '" + key + "'", key);
    (*scope)[key] = std::move(value);
  }
  return doc;
}

std::string file_stem(const std::string& path) {
  const std::size_t slash = path.find_last_of("/\\");
  const std::size_t start = slash == std::string::npos ? 0 : slash + 1;
  const std::size_t dot = path.find_last_of('.');
  const std::size_t end = (dot == std::string::npos || dot <= start) ? path.size() : dot;
  return path.substr(start, end - start);
}

}  // namespace

MetricConfig metric_config_from_json_text(const std::string& text,
                                          const std::string& source_name) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(source_name + ": " + e.what());
  }
  return config_from_json(doc, source_name);
}

MetricConfig metric_config_from_toml_text(const std::string& text,
                                          const std::string& source_name) {
  return config_from_json(toml_subset_to_json(text, source_name), source_name);
}

MetricConfig load_metric_config(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open metric config '" + path + "'", "metric");
  std::ostringstream buf;
  buf << is.rdbuf();
  const std::string text = buf.str();
  const std::string stem = file_stem(path);
  if (path.size() >= 5 && path.compare(path.size() - 5, 5, ".json") == 0)
    return metric_config_from_json_text(text, stem);
  if (path.size() >= 5 && path.compare(path.size() - 5, 5, ".toml") == 0)
    return metric_config_from_toml_text(text, stem);
  throw ConfigError("metric config '" + path + "' must end in .json or .toml", "metric");
}

JsonValue describe(const MetricConfig& cfg) {
  JsonValue out = JsonValue::object();
  out["name"] = cfg.name;
  for (const auto& k : kind_names)
    if (k.kind == cfg.kind) out["kind"] = k.name;
  out["mass"] = cfg.mass;
  out["shift"] = JsonValue::vec(cfg.shift);
  if (cfg.tau) out["tau"] = *cfg.tau;
  if (cfg.tau_hat) out["tau_hat"] = *cfg.tau_hat;
  if (!cfg.perturbations.empty()) {
    JsonValue terms = JsonValue::array();
    for (const auto& t : cfg.perturbations) {
      JsonValue term = JsonValue::object();
      term["amplitude"] = t.amplitude;
      term["decay"] = t.decay;
      for (const auto& s : structure_names)
        if (s.structure == t.structure) term["structure"] = s.name;
      term["parity"] = t.parity == TermParity::Even ? "even" : "odd";
      JsonValue profile = JsonValue::array();
      for (const auto& m : t.profile.monos) {
        JsonValue row = JsonValue::array();
        row.push(m.coef).push(m.a).push(m.b).push(m.c);
        profile.push(std::move(row));
      }
      term["profile"] = std::move(profile);
      if (t.structure == TensorStructure::RankOne)
        term["direction"] = JsonValue::vec(t.direction);
      if (t.structure == TensorStructure::OffDiagonal) {
        JsonValue off = JsonValue::array();
        off.push(t.off_i).push(t.off_j);
        term["off"] = std::move(off);
      }
      terms.push(std::move(term));
    }
    out["perturbations"] = std::move(terms);
  }
  return out;
}

}  // namespace cmcfol
