#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fedxfer/matrix.hpp"

namespace fedxfer {

enum class ColumnRole { numeric, categorical, label, drop };

struct SchemaColumn {
  std::string name;
  ColumnRole role = ColumnRole::numeric;
  std::vector<std::string> vocab;  // categorical only; fixed one-hot vocabulary
};

struct DatasetSchema {
  std::string name;
  bool has_header = false;
  std::vector<SchemaColumn> columns;
  // raw label value -> -1 (normal) / +1 (attack); "*" catches everything else
  std::map<std::string, std::int8_t> label_map;

  std::size_t label_column() const;  // index, or throws if none
  bool has_label() const;
  void validate() const;
};

DatasetSchema schema_from_json_file(const std::string& path);
DatasetSchema schema_from_json_text(const std::string& text);

struct RejectedRow {
  std::size_t row_number;  // 1-based, counting data rows as they appear in the file
  std::string reason;
};

struct RawTable {
  std::vector<std::vector<std::string>> rows;
  std::vector<RejectedRow> rejects;
};

/// Parses the CSV, checking column count and numeric parseability per the
/// schema. Malformed rows land in the rejects report; a missing or empty
/// file is a load error.
RawTable load_csv(const std::string& path, const DatasetSchema& schema);

/// Fails with a load error listing the first bad row numbers when rejects
/// reach 1% of the data rows. Pipelines run this after load_csv; direct
/// loads may inspect the rejects themselves instead.
void enforce_reject_limit(const RawTable& table, const std::string& origin);

struct EncodedDataset {
  Matrix x;                               // N x d, min-max scaled into [0,1]
  std::vector<std::int8_t> y;             // empty when unlabeled
  std::vector<std::string> feature_names;
  std::string name;

  bool labeled() const { return !y.empty(); }
};

/// Column scaling parameters captured from the encoded portion so the same
/// transform can be reused.
struct ColumnScaling {
  std::vector<double> col_min;
  std::vector<double> col_max;
};

/// One-hot categoricals over the schema vocabulary, min-max scaled numerics
/// (constant columns map to 0), labels mapped through the schema's label_map.
EncodedDataset encode_features(const RawTable& table, const DatasetSchema& schema,
                               ColumnScaling* scaling_out = nullptr);

/// Writes x (+ label column when present) as CSV with shortest round-trip
/// float formatting; header row f0..f{d-1}[,label].
void write_dataset_csv(const std::string& path, const EncodedDataset& ds);

}  // namespace fedxfer
