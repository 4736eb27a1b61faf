#include "fedxfer/dataset.hpp"

#include <charconv>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "fedxfer/error.hpp"
#include "fedxfer/trace_io.hpp"

namespace fedxfer {
namespace {

using nlohmann::json;

ColumnRole role_from_name(const std::string& name) {
  if (name == "numeric") return ColumnRole::numeric;
  if (name == "categorical") return ColumnRole::categorical;
  if (name == "label") return ColumnRole::label;
  if (name == "drop") return ColumnRole::drop;
  fail(ErrorCode::config, "unknown column role '" + name + "'");
}

bool parse_double(const std::string& s, double& out) {
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  // tolerate surrounding spaces, as in hand-edited fixtures
  while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
  while (end > begin && (end[-1] == ' ' || end[-1] == '\t')) --end;
  if (begin == end) return false;
  const auto res = std::from_chars(begin, end, out);
  return res.ec == std::errc() && res.ptr == end;
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return s.substr(b, e - b);
}

}  // namespace

std::size_t DatasetSchema::label_column() const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i].role == ColumnRole::label) return i;
  fail(ErrorCode::config, "schema '" + name + "' has no label column");
}

bool DatasetSchema::has_label() const {
  for (const SchemaColumn& c : columns)
    if (c.role == ColumnRole::label) return true;
  return false;
}

void DatasetSchema::validate() const {
  if (columns.empty()) fail(ErrorCode::config, "schema '" + name + "' has no columns");
  std::size_t labels = 0;
  for (const SchemaColumn& c : columns) {
    if (c.role == ColumnRole::label) ++labels;
    if (c.role == ColumnRole::categorical && c.vocab.empty())
      fail(ErrorCode::config,
           "categorical column '" + c.name + "' must list its admissible values");
  }
  if (labels > 1) fail(ErrorCode::config, "schema '" + name + "' has more than one label column");
  if (labels == 1 && label_map.empty())
    fail(ErrorCode::config, "schema '" + name + "' has a label column but no label_map");
}

DatasetSchema schema_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::config, std::string("schema is not valid JSON: ") + e.what());
  }
  DatasetSchema schema;
  try {
    schema.name = j.value("name", "");
    schema.has_header = j.value("has_header", false);
    for (const json& jc : j.at("columns")) {
      SchemaColumn col;
      col.name = jc.at("name").get<std::string>();
      col.role = role_from_name(jc.at("role").get<std::string>());
      if (jc.contains("vocab"))
        for (const json& v : jc.at("vocab")) col.vocab.push_back(v.get<std::string>());
      schema.columns.push_back(std::move(col));
    }
    if (j.contains("label_map"))
      for (const auto& [key, value] : j.at("label_map").items()) {
        const int v = value.get<int>();
        if (v != 1 && v != -1)
          fail(ErrorCode::config, "label_map values must be -1 or +1, got " + std::to_string(v));
        schema.label_map[key] = static_cast<std::int8_t>(v);
      }
  } catch (const json::exception& e) {
    fail(ErrorCode::config, std::string("schema JSON malformed: ") + e.what());
  }
  schema.validate();
  return schema;
}

DatasetSchema schema_from_json_file(const std::string& path) {
  return schema_from_json_text(read_text_file(path));
}

RawTable load_csv(const std::string& path, const DatasetSchema& schema) {
  schema.validate();
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::load, "cannot open '" + path + "'");

  RawTable table;
  std::string line;
  std::size_t row_number = 0;
  bool header_pending = schema.has_header;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (header_pending) {
      header_pending = false;
      continue;
    }
    row_number += 1;
    std::vector<std::string> fields = split_line(line);
    if (fields.size() != schema.columns.size()) {
      table.rejects.push_back(
          {row_number, "expected " + std::to_string(schema.columns.size()) + " fields, got " +
                           std::to_string(fields.size())});
      continue;
    }
    bool bad = false;
    for (std::size_t c = 0; c < fields.size() && !bad; ++c) {
      if (schema.columns[c].role != ColumnRole::numeric) continue;
      double v;
      if (!parse_double(fields[c], v)) {
        table.rejects.push_back(
            {row_number, "column '" + schema.columns[c].name + "' is not numeric: '" +
                             fields[c] + "'"});
        bad = true;
      }
    }
    if (bad) continue;
    table.rows.push_back(std::move(fields));
  }

  if (row_number == 0) fail(ErrorCode::load, "'" + path + "' contains no data rows");
  return table;
}

void enforce_reject_limit(const RawTable& table, const std::string& origin) {
  const std::size_t total = table.rows.size() + table.rejects.size();
  if (total == 0 || table.rejects.size() * 100 < total) return;
  std::string rows;
  for (std::size_t i = 0; i < table.rejects.size() && i < 10; ++i) {
    if (!rows.empty()) rows += ", ";
    rows += std::to_string(table.rejects[i].row_number);
  }
  fail(ErrorCode::load, origin + ": " + std::to_string(table.rejects.size()) + " of " +
                            std::to_string(total) +
                            " rows are malformed (limit is 1%); first bad rows: " + rows);
}

EncodedDataset encode_features(const RawTable& table, const DatasetSchema& schema,
                               ColumnScaling* scaling_out) {
  schema.validate();
  const std::size_t n = table.rows.size();
  if (n == 0) fail(ErrorCode::insufficient_data, "no rows to encode");

  // output layout: schema order, numerics one column, categoricals vocab-wide
  std::vector<std::string> names;
  for (const SchemaColumn& col : schema.columns) {
    if (col.role == ColumnRole::numeric) {
      names.push_back(col.name);
    } else if (col.role == ColumnRole::categorical) {
      for (const std::string& v : col.vocab) names.push_back(col.name + "=" + v);
    }
  }
  const std::size_t d = names.size();

  EncodedDataset ds;
  ds.name = schema.name;
  ds.feature_names = names;
  ds.x = Matrix(n, d);
  const bool labeled = schema.has_label();
  if (labeled) ds.y.resize(n);

  for (std::size_t i = 0; i < n; ++i) {
    const std::vector<std::string>& row = table.rows[i];
    double* out = ds.x.row_ptr(i);
    std::size_t at = 0;
    for (std::size_t c = 0; c < schema.columns.size(); ++c) {
      const SchemaColumn& col = schema.columns[c];
      const std::string value = trim(row[c]);
      switch (col.role) {
        case ColumnRole::numeric: {
          double v;
          parse_double(value, v);  // load_csv already vetted it
          out[at++] = v;
          break;
        }
        case ColumnRole::categorical: {
          std::size_t hit = col.vocab.size();
          for (std::size_t k = 0; k < col.vocab.size(); ++k)
            if (col.vocab[k] == value) {
              hit = k;
              break;
            }
          if (hit == col.vocab.size())
            fail(ErrorCode::encode,
                 "column '" + col.name + "': value '" + value + "' is not in the vocabulary");
          for (std::size_t k = 0; k < col.vocab.size(); ++k) out[at + k] = (k == hit) ? 1.0 : 0.0;
          at += col.vocab.size();
          break;
        }
        case ColumnRole::label: {
          auto it = schema.label_map.find(value);
          if (it == schema.label_map.end()) it = schema.label_map.find("*");
          if (it == schema.label_map.end())
            fail(ErrorCode::encode,
                 "column '" + col.name + "': label value '" + value + "' has no mapping");
          ds.y[i] = it->second;
          break;
        }
        case ColumnRole::drop:
          break;
      }
    }
  }

  // min-max scale every column into [0,1]; constant columns map to 0
  ColumnScaling scaling;
  scaling.col_min.resize(d);
  scaling.col_max.resize(d);
  for (std::size_t c = 0; c < d; ++c) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      const double v = ds.x.at(i, c);
      if (v < lo) lo = v;
      if (v > hi) hi = v;
    }
    scaling.col_min[c] = lo;
    scaling.col_max[c] = hi;
    if (hi == lo) {
      for (std::size_t i = 0; i < n; ++i) ds.x.at(i, c) = 0.0;
    } else {
      const double span = hi - lo;
      for (std::size_t i = 0; i < n; ++i) ds.x.at(i, c) = (ds.x.at(i, c) - lo) / span;
    }
  }
  if (scaling_out) *scaling_out = std::move(scaling);
  return ds;
}

void write_dataset_csv(const std::string& path, const EncodedDataset& ds) {
  std::string out;
  for (std::size_t c = 0; c < ds.x.cols; ++c) {
    if (c) out += ',';
    out += "f" + std::to_string(c);
  }
  if (ds.labeled()) out += ",label";
  out += '\n';
  for (std::size_t i = 0; i < ds.x.rows; ++i) {
    const double* row = ds.x.row_ptr(i);
    for (std::size_t c = 0; c < ds.x.cols; ++c) {
      if (c) out += ',';
      out += format_double(row[c]);
    }
    if (ds.labeled()) {
      out += ',';
      out += std::to_string(int(ds.y[i]));
    }
    out += '\n';
  }
  write_text_file(path, out);
}

}  // namespace fedxfer
