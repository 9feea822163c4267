// Distributed under the MIT License.
// See LICENSE.txt for details.

#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "cmcfol/metric_model.hpp"

namespace cmcfol {

// Report tree with deterministic serialization: objects keep insertion order
// and every double prints as %.17g, so identical inputs give byte-identical
// files.  Write-only; configs are read through the parsers below.
class JsonValue {
 public:
  JsonValue() : node_(nullptr) {}
  JsonValue(bool b) : node_(b) {}
  JsonValue(double x) : node_(x) {}
  JsonValue(int i) : node_(static_cast<std::int64_t>(i)) {}
  JsonValue(std::int64_t i) : node_(i) {}
  JsonValue(const char* s) : node_(std::string(s)) {}
  JsonValue(std::string s) : node_(std::move(s)) {}

  static JsonValue object();
  static JsonValue array();
  static JsonValue vec(const Vec3& v);
  static JsonValue seq(const std::vector<double>& v);

  // Object access: inserts the key (preserving order) when absent.
  JsonValue& operator[](const std::string& key);
  // Array append.
  JsonValue& push(JsonValue v);

  bool is_object() const;
  bool is_array() const;

  std::string dump(int indent = 2) const;

 private:
  struct Member;
  using Object = std::vector<Member>;
  using Array = std::vector<JsonValue>;
  std::variant<std::nullptr_t, bool, std::int64_t, double, std::string, Object, Array> node_;

  void write(std::string& out, int indent, int depth) const;
};

struct JsonValue::Member {
  std::string key;
  JsonValue value;
};

// File writers.  All throw IoError when the target cannot be written.
void write_text_file(const std::string& path, const std::string& content);
void write_json_file(const std::string& path, const JsonValue& report);

// CSV with %.17g cells; header.size() must match every row (ShapeError).
void write_csv_file(const std::string& path, const std::vector<std::string>& header,
                    const std::vector<std::vector<double>>& rows);

// Minimal gnuplot script plotting columns of a CSV produced above.  Each
// series is {x column, y column, title}, 1-based per gnuplot convention.
struct PlotSeries {
  int x = 1;
  int y = 2;
  std::string title;
};
void write_gnuplot_file(const std::string& path, const std::string& title,
                        const std::string& csv_name, const std::vector<PlotSeries>& series,
                        bool logscale = false);

// Metric config parsing.  Dispatches on the file extension: ".json" uses a
// full JSON parser, ".toml" a subset reader covering top-level scalar keys,
// inline (possibly nested) arrays, and [[perturbations]] tables.  All
// validation failures throw ConfigError carrying the offending field path,
// e.g. "perturbations[2].decay".
MetricConfig load_metric_config(const std::string& path);
MetricConfig metric_config_from_json_text(const std::string& text,
                                          const std::string& source_name = "config");
MetricConfig metric_config_from_toml_text(const std::string& text,
                                          const std::string& source_name = "config");

// Config echo used by every report so outputs are self-describing.
JsonValue describe(const MetricConfig& cfg);

}  // namespace cmcfol
