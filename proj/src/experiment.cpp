#include "fedxfer/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <json.hpp>
#include <thread>

#include "fedxfer/error.hpp"
#include "fedxfer/log.hpp"
#include "fedxfer/protocol.hpp"
#include "fedxfer/rng.hpp"
#include "fedxfer/roc.hpp"
#include "fedxfer/split.hpp"
#include "fedxfer/stats.hpp"
#include "fedxfer/udl.hpp"

namespace fedxfer {

Method method_from_name(const std::string& name) {
  if (name == "FTL" || name == "ftl") return Method::ftl;
  if (name == "UDL" || name == "udl") return Method::udl;
  fail(ErrorCode::config, "unknown method '" + name + "' (try FTL or UDL)");
}

std::string method_name(Method method) { return method == Method::ftl ? "FTL" : "UDL"; }

void ExperimentConfig::validate() const {
  if (synthetic.has_value() == data.has_value())
    fail(ErrorCode::config, "exactly one dataset source: synthetic spec or loaded data");
  if (dataset_name.empty()) fail(ErrorCode::config, "dataset name must not be empty");
  if (n_labeled == 0 || n_unlabeled == 0)
    fail(ErrorCode::config, "labeled and unlabeled sample counts must be positive");
  if (methods.empty()) fail(ErrorCode::config, "need at least one method");
  if (runs == 0) fail(ErrorCode::config, "need at least one run");
  if (workers == 0) fail(ErrorCode::config, "need at least one worker");
  if (hidden_dim == 0 || latent_dim == 0)
    fail(ErrorCode::config, "extractor layer sizes must be positive");
  hyper.validate();
  ae.validate();
}

namespace {

struct RunOutcome {
  std::vector<double> aucs;  // one per configured method
  std::vector<TraceRow> ftl_rows;
  std::vector<TraceRow> ae_rows;
};

RunOutcome run_one(const ExperimentConfig& cfg, std::size_t r) {
  const std::uint64_t seed = cfg.base_seed + r;
  EncodedDataset generated;
  const EncodedDataset* ds = cfg.data ? &*cfg.data : nullptr;
  if (cfg.synthetic) {
    generated = gen_synthetic(*cfg.synthetic, seed);
    ds = &generated;
  }
  const SplitPlan plan = vertical_split(*ds, cfg.n_labeled, cfg.n_unlabeled, cfg.overlap_frac, seed);
  const SplitViews views = make_views(*ds, plan);

  RunOutcome out;
  for (const Method method : cfg.methods) {
    if (method == Method::ftl) {
      MlpModel model_a = init_model({views.a.x.cols, cfg.hidden_dim, cfg.latent_dim},
                                    Activation::tanh_act, derive_seed(seed, "model-a"));
      MlpModel model_b = init_model({views.b.x.cols, cfg.hidden_dim, cfg.latent_dim},
                                    Activation::tanh_act, derive_seed(seed, "model-b"));
      PartyA a(std::move(model_a), views.a.x, views.a.y, views.a.overlap_idx, cfg.hyper);
      PartyB b(std::move(model_b), views.b.x, views.b.overlap_idx, cfg.hyper);
      const TrainResult trained = train_ftl(a, b, cfg.faithful_exchange);
      const Predictions pred = predict_ftl(a, b, views.b.x);
      out.aucs.push_back(roc_auc(pred.scores, views.sealed.y).xi);
      const auto rows = ftl_trace_rows(static_cast<std::uint32_t>(r), trained.trace);
      out.ftl_rows.insert(out.ftl_rows.end(), rows.begin(), rows.end());
    } else {
      const UdlResult udl = run_udl(views.b.x, seed, cfg.ae);
      const double xi = roc_auc(udl.scores, views.sealed.y).xi;
      // cluster identity is arbitrary, so orient the score by whichever side
      // ranks attacks higher
      out.aucs.push_back(std::max(xi, 1.0 - xi));
      const auto rows = ae_trace_rows(static_cast<std::uint32_t>(r), udl.ae_trace);
      out.ae_rows.insert(out.ae_rows.end(), rows.begin(), rows.end());
    }
  }
  return out;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();

  std::vector<std::optional<RunOutcome>> outcomes(config.runs);
  std::vector<std::optional<RunFailure>> failures(config.runs);
  std::atomic<std::size_t> next{0};
  const std::size_t worker_count = std::min(config.workers, config.runs);

  auto worker = [&] {
    while (true) {
      const std::size_t r = next.fetch_add(1);
      if (r >= config.runs) return;
      try {
        outcomes[r] = run_one(config, r);
        log_line(LogLevel::info, "run " + std::to_string(r) + " done");
      } catch (const std::exception& e) {
        failures[r] = RunFailure{r, config.base_seed + r, e.what()};
        log_line(LogLevel::error, "run " + std::to_string(r) + " failed: " + e.what());
      }
    }
  };
  if (worker_count <= 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    threads.reserve(worker_count);
    for (std::size_t i = 0; i < worker_count; ++i) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }

  ExperimentResult result;
  result.dataset = config.dataset_name;
  result.runs = config.runs;
  result.base_seed = config.base_seed;
  std::size_t successes = 0;
  for (std::size_t r = 0; r < config.runs; ++r) {
    if (outcomes[r]) {
      ++successes;
      result.ftl_trace.insert(result.ftl_trace.end(), outcomes[r]->ftl_rows.begin(),
                              outcomes[r]->ftl_rows.end());
      result.ae_trace.insert(result.ae_trace.end(), outcomes[r]->ae_rows.begin(),
                             outcomes[r]->ae_rows.end());
    } else {
      result.failures.push_back(*failures[r]);
    }
  }

  const std::size_t required = (config.runs * 25 + 29) / 30;
  if (successes < required) {
    std::string msg = "only " + std::to_string(successes) + " of " + std::to_string(config.runs) +
                      " runs succeeded (need " + std::to_string(required) + ")";
    if (!result.failures.empty())
      msg += "; run " + std::to_string(result.failures.front().run) +
             " (seed " + std::to_string(result.failures.front().seed) +
             "): " + result.failures.front().message;
    fail(ErrorCode::harness, msg);
  }

  for (std::size_t m = 0; m < config.methods.size(); ++m) {
    MethodSummary summary;
    summary.method = config.methods[m];
    for (std::size_t r = 0; r < config.runs; ++r) {
      if (!outcomes[r]) continue;
      summary.run_index.push_back(r);
      summary.aucs.push_back(outcomes[r]->aucs[m]);
    }
    if (summary.aucs.size() >= 2) {
      const SeriesStats stats = series_stats(summary.aucs);
      summary.mean_auc = stats.mean;
      summary.std_auc = stats.stddev;
      for (const double p : {1.0, 3.0, 5.0})
        summary.sig.push_back({p, 1.0 - p / 100.0, significance(summary.aucs, p)});
    }
    result.methods.push_back(std::move(summary));
  }
  return result;
}

namespace {

std::string percent(double value) { return format_double(value * 100.0); }

}  // namespace

std::string report_csv(const ExperimentResult& result) {
  std::string csv = "dataset,method,p,Sig,mean_auc,std_auc\n";
  for (const MethodSummary& method : result.methods) {
    if (method.mean_auc) {
      for (const SigEntry& entry : method.sig) {
        csv += result.dataset + "," + method_name(method.method) + "," +
               format_double(entry.p_percent) + "," + percent(entry.sig) + "," +
               percent(*method.mean_auc) + "," + percent(*method.std_auc) + "\n";
      }
    } else {
      // a single run has no significance fit; report the raw AUC
      const std::string raw = method.aucs.empty() ? "" : percent(method.aucs.front());
      csv += result.dataset + "," + method_name(method.method) + ",,," + raw + ",\n";
    }
  }
  return csv;
}

std::string report_json(const ExperimentResult& result) {
  nlohmann::json j;
  j["dataset"] = result.dataset;
  j["runs"] = result.runs;
  j["base_seed"] = result.base_seed;
  nlohmann::json methods = nlohmann::json::array();
  for (const MethodSummary& method : result.methods) {
    nlohmann::json m;
    m["method"] = method_name(method.method);
    m["run_index"] = method.run_index;
    m["aucs"] = method.aucs;
    if (method.mean_auc) {
      m["mean_auc"] = *method.mean_auc;
      m["std_auc"] = *method.std_auc;
      nlohmann::json sig = nlohmann::json::array();
      for (const SigEntry& entry : method.sig)
        sig.push_back({{"p", entry.p_percent},
                       {"confidence", entry.confidence},
                       {"sig", entry.sig}});
      m["sig"] = sig;
    }
    methods.push_back(std::move(m));
  }
  j["methods"] = std::move(methods);
  nlohmann::json fails = nlohmann::json::array();
  for (const RunFailure& f : result.failures)
    fails.push_back({{"run", f.run}, {"seed", f.seed}, {"message", f.message}});
  j["failures"] = std::move(fails);
  return j.dump(2) + "\n";
}

std::string report_csv_from_json(const std::string& json_text) {
  try {
    const nlohmann::json j = nlohmann::json::parse(json_text);
    ExperimentResult result;
    result.dataset = j.at("dataset").get<std::string>();
    result.runs = j.at("runs").get<std::size_t>();
    result.base_seed = j.at("base_seed").get<std::uint64_t>();
    for (const auto& m : j.at("methods")) {
      MethodSummary summary;
      summary.method = method_from_name(m.at("method").get<std::string>());
      summary.run_index = m.at("run_index").get<std::vector<std::size_t>>();
      summary.aucs = m.at("aucs").get<std::vector<double>>();
      if (m.contains("mean_auc")) {
        summary.mean_auc = m.at("mean_auc").get<double>();
        summary.std_auc = m.at("std_auc").get<double>();
        for (const auto& s : m.at("sig"))
          summary.sig.push_back({s.at("p").get<double>(), s.at("confidence").get<double>(),
                                 s.at("sig").get<double>()});
      }
      result.methods.push_back(std::move(summary));
    }
    return report_csv(result);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::load, std::string("bad report: ") + e.what());
  }
}

}  // namespace fedxfer
