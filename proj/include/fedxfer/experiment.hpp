#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fedxfer/autoencoder.hpp"
#include "fedxfer/dataset.hpp"
#include "fedxfer/party.hpp"
#include "fedxfer/synthetic.hpp"
#include "fedxfer/trace_io.hpp"

namespace fedxfer {

enum class Method { ftl, udl };

Method method_from_name(const std::string& name);
std::string method_name(Method method);

struct ExperimentConfig {
  std::string dataset_name;
  // exactly one source: a synthetic spec regenerated per run, or a dataset
  // loaded once and re-split per run
  std::optional<SynthSpec> synthetic;
  std::optional<EncodedDataset> data;

  std::size_t n_labeled = 0;
  std::size_t n_unlabeled = 0;
  double overlap_frac = 0.1;

  HyperParams hyper;
  AeConfig ae;
  std::uint32_t hidden_dim = 64;
  std::uint32_t latent_dim = 32;
  bool faithful_exchange = false;

  std::vector<Method> methods = {Method::ftl, Method::udl};
  std::size_t runs = 30;
  std::uint64_t base_seed = 0;
  std::size_t workers = 1;

  void validate() const;
};

struct SigEntry {
  double p_percent = 0.0;
  double confidence = 0.0;  // 1 - p/100
  double sig = 0.0;
};

struct MethodSummary {
  Method method = Method::ftl;
  std::vector<std::size_t> run_index;  // successful runs, ascending
  std::vector<double> aucs;            // one per run_index entry, in [0, 1]
  // present once at least two runs succeeded
  std::optional<double> mean_auc;
  std::optional<double> std_auc;
  std::vector<SigEntry> sig;  // p in {1, 3, 5}; empty when mean is absent
};

struct RunFailure {
  std::size_t run = 0;
  std::uint64_t seed = 0;
  std::string message;
};

struct ExperimentResult {
  std::string dataset;
  std::size_t runs = 0;
  std::uint64_t base_seed = 0;
  std::vector<MethodSummary> methods;
  std::vector<RunFailure> failures;
  std::vector<TraceRow> ftl_trace;  // all runs, ordered by run then iteration
  std::vector<TraceRow> ae_trace;   // reconstruction error in the total column
};

/// Runs the full series: per run, a fresh split seeded base+run, every
/// configured method trained and scored on B's sealed labels. Runs execute in
/// parallel up to `workers`; assembly is ordered by run index, so the report
/// does not depend on the worker count. Fails unless at least
/// ceil(runs * 25 / 30) runs succeed.
ExperimentResult run_experiment(const ExperimentConfig& config);

/// The significance table, AUC values in percent. One row per (method, p);
/// with a single run the row carries the raw AUC and no significance fields.
std::string report_csv(const ExperimentResult& result);

/// Full result with per-run AUC series, values in [0, 1].
std::string report_json(const ExperimentResult& result);

/// Rebuilds the CSV table from a parsed JSON report.
std::string report_csv_from_json(const std::string& json_text);

}  // namespace fedxfer
