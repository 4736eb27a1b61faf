#include <CLI11.hpp>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <json.hpp>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "fedxfer/autoencoder.hpp"
#include "fedxfer/channel.hpp"
#include "fedxfer/dataset.hpp"
#include "fedxfer/error.hpp"
#include "fedxfer/experiment.hpp"
#include "fedxfer/log.hpp"
#include "fedxfer/mlp.hpp"
#include "fedxfer/party.hpp"
#include "fedxfer/protocol.hpp"
#include "fedxfer/rng.hpp"
#include "fedxfer/roc.hpp"
#include "fedxfer/split.hpp"
#include "fedxfer/synthetic.hpp"
#include "fedxfer/trace_io.hpp"
#include "fedxfer/udl.hpp"

namespace {

using namespace fedxfer;

struct Opts {
  // dataset source
  std::string synthetic;
  std::string data;
  std::string schema;
  std::string name;
  // split sizes
  std::string case_preset;
  std::uint64_t n_labeled = 0;
  std::uint64_t n_unlabeled = 0;
  double overlap_frac = -1.0;  // negative means unset
  // seed and output
  std::uint64_t seed = 0;
  std::string out;
  std::string config;
  // extractor hyperparameters (defaults mirror HyperParams)
  double eta = 0.001;
  double gamma = 1.0;
  double lambda = 0.001;
  std::uint64_t iters = 200;
  double tol = 1e-6;
  std::uint64_t warmup = 100;
  std::string alignment = "squared_distance";
  std::uint64_t hidden = 64;
  std::uint64_t latent = 32;
  bool faithful = false;
  // autoencoder hyperparameters
  std::uint64_t ae_epochs = 200;
  double ae_eta = 0.01;
  std::uint64_t ae_batch = 32;
  // experiment
  std::string methods = "FTL,UDL";
  std::uint64_t runs = 30;
  std::uint64_t workers = 1;
  // networking
  std::string listen = "127.0.0.1:0";
  std::string peer;
  std::uint64_t io_timeout_ms = 30000;
  std::uint64_t connect_window_ms = 10000;
  std::uint64_t accept_timeout_ms = 120000;
  // report rebuild
  std::string in;
  // synthetic overrides (gen-data)
  std::uint64_t gen_n = 0;
  std::uint64_t gen_d = 0;
  double gen_sep = -1.0;
  double gen_sigma_b = -1.0;
};

// Applies --config JSON under the precedence rule: flags beat config keys,
// config keys beat defaults. Keys are the long flag names without the dashes.
class ConfigMerge {
 public:
  ConfigMerge(CLI::App* sub, const std::string& path) : sub_(sub) {
    if (path.empty()) {
      doc_ = nlohmann::json::object();
      return;
    }
    try {
      doc_ = nlohmann::json::parse(read_text_file(path));
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::config, "bad config file '" + path + "': " + e.what());
    }
    if (!doc_.is_object()) fail(ErrorCode::config, "config file must hold a JSON object");
  }

  template <typename T>
  void key(const std::string& flag, T& var) {
    const std::string name = flag.substr(2);
    known_.insert(name);
    if (!doc_.contains(name) || sub_->count(flag) > 0) return;
    try {
      var = doc_.at(name).get<T>();
    } catch (const nlohmann::json::exception&) {
      fail(ErrorCode::config, "config key '" + name + "' has the wrong type");
    }
  }

  void finish() const {
    for (const auto& item : doc_.items())
      if (known_.find(item.key()) == known_.end())
        fail(ErrorCode::config, "unknown config key '" + item.key() + "'");
  }

 private:
  CLI::App* sub_;
  nlohmann::json doc_;
  std::set<std::string> known_;
};

void add_source_flags(CLI::App* sub, Opts& o) {
  auto* synth = sub->add_option("--synthetic", o.synthetic,
                                "synthetic preset: weak-target, clean, no-signal");
  auto* data = sub->add_option("--data", o.data, "dataset CSV path");
  auto* schema = sub->add_option("--schema", o.schema, "dataset schema JSON path");
  synth->excludes(data);
  data->needs(schema);
  schema->needs(data);
  sub->add_option("--name", o.name, "dataset label in reports");
}

void add_size_flags(CLI::App* sub, Opts& o) {
  sub->add_option("--case", o.case_preset, "experiment scale: CASE1 (9577/2000) or CASE2 (47893/10000)")
      ->check(CLI::IsMember({"CASE1", "CASE2"}));
  sub->add_option("--n-labeled", o.n_labeled, "labeled sample count for party A");
  sub->add_option("--n-unlabeled", o.n_unlabeled, "unlabeled sample count for party B");
  sub->add_option("--overlap-frac", o.overlap_frac, "co-occurring share of the smaller party")
      ->check(CLI::Range(0.0, 1.0));
}

void add_common_flags(CLI::App* sub, Opts& o) {
  sub->add_option("--seed", o.seed, "base seed for every random choice");
  sub->add_option("--out", o.out, "output directory")->required();
  sub->add_option("--config", o.config, "JSON config file (flags take precedence)");
}

void add_hyper_flags(CLI::App* sub, Opts& o) {
  sub->add_option("--eta", o.eta, "learning rate");
  sub->add_option("--gamma", o.gamma, "alignment weight");
  sub->add_option("--lambda", o.lambda, "regularization weight");
  sub->add_option("--iters", o.iters, "max training iterations");
  sub->add_option("--tol", o.tol, "stop when the loss improves by no more than this");
  sub->add_option("--warmup", o.warmup, "iterations before the stop test arms");
  sub->add_option("--alignment", o.alignment, "alignment loss kind")
      ->check(CLI::IsMember({"squared_distance", "negative_inner_product"}));
  sub->add_option("--hidden", o.hidden, "extractor hidden width");
  sub->add_option("--latent", o.latent, "shared latent dimension");
  sub->add_flag("--faithful-exchange", o.faithful, "also ship raw gradient frames");
}

void add_ae_flags(CLI::App* sub, Opts& o) {
  sub->add_option("--ae-epochs", o.ae_epochs, "autoencoder training epochs");
  sub->add_option("--ae-eta", o.ae_eta, "autoencoder learning rate");
  sub->add_option("--ae-batch", o.ae_batch, "autoencoder minibatch rows");
}

void merge_source(ConfigMerge& merge, Opts& o) {
  merge.key("--synthetic", o.synthetic);
  merge.key("--data", o.data);
  merge.key("--schema", o.schema);
  merge.key("--name", o.name);
}

void merge_sizes(ConfigMerge& merge, Opts& o) {
  merge.key("--case", o.case_preset);
  merge.key("--n-labeled", o.n_labeled);
  merge.key("--n-unlabeled", o.n_unlabeled);
  merge.key("--overlap-frac", o.overlap_frac);
}

void merge_common(ConfigMerge& merge, Opts& o) { merge.key("--seed", o.seed); }

void merge_hyper(ConfigMerge& merge, Opts& o) {
  merge.key("--eta", o.eta);
  merge.key("--gamma", o.gamma);
  merge.key("--lambda", o.lambda);
  merge.key("--iters", o.iters);
  merge.key("--tol", o.tol);
  merge.key("--warmup", o.warmup);
  merge.key("--alignment", o.alignment);
  merge.key("--hidden", o.hidden);
  merge.key("--latent", o.latent);
  merge.key("--faithful-exchange", o.faithful);
}

void merge_ae(ConfigMerge& merge, Opts& o) {
  merge.key("--ae-epochs", o.ae_epochs);
  merge.key("--ae-eta", o.ae_eta);
  merge.key("--ae-batch", o.ae_batch);
}

struct ResolvedSource {
  std::optional<SynthSpec> spec;        // regenerated from the seed
  std::optional<EncodedDataset> data;   // loaded once
  std::string dataset_name;
  std::size_t n_labeled = 0;
  std::size_t n_unlabeled = 0;
  double overlap_frac = 0.1;
};

ResolvedSource resolve_source(const Opts& o) {
  ResolvedSource r;
  if (!o.synthetic.empty()) {
    const SyntheticPreset preset = synthetic_preset(o.synthetic);
    r.spec = preset.spec;
    r.dataset_name = "synthetic:" + preset.name;
    r.n_labeled = preset.n_labeled;
    r.n_unlabeled = preset.n_unlabeled;
    r.overlap_frac = preset.overlap_frac;
  } else if (!o.data.empty()) {
    const DatasetSchema schema = schema_from_json_file(o.schema);
    const RawTable table = load_csv(o.data, schema);
    enforce_reject_limit(table, o.data);
    r.data = encode_features(table, schema);
    r.dataset_name = schema.name.empty() ? std::filesystem::path(o.data).stem().string() : schema.name;
  } else {
    fail(ErrorCode::config, "pick a dataset source: --synthetic PRESET or --data CSV --schema JSON");
  }
  if (o.case_preset == "CASE1") {
    r.n_labeled = 9577;
    r.n_unlabeled = 2000;
  } else if (o.case_preset == "CASE2") {
    r.n_labeled = 47893;
    r.n_unlabeled = 10000;
  }
  if (o.n_labeled > 0) r.n_labeled = o.n_labeled;
  if (o.n_unlabeled > 0) r.n_unlabeled = o.n_unlabeled;
  if (o.overlap_frac >= 0.0) r.overlap_frac = o.overlap_frac;
  if (!o.name.empty()) r.dataset_name = o.name;
  if (r.n_labeled == 0 || r.n_unlabeled == 0)
    fail(ErrorCode::config, "sample counts unset; pass --case CASE1|CASE2 or --n-labeled/--n-unlabeled");
  return r;
}

EncodedDataset materialize(const ResolvedSource& r, std::uint64_t seed) {
  if (r.spec) return gen_synthetic(*r.spec, seed);
  return *r.data;
}

HyperParams hyper_from(const Opts& o) {
  HyperParams h;
  h.eta = o.eta;
  h.gamma = o.gamma;
  h.lambda = o.lambda;
  h.max_iters = static_cast<std::uint32_t>(o.iters);
  h.tol = o.tol;
  h.warmup = static_cast<std::uint32_t>(o.warmup);
  h.alignment = alignment_kind_from_name(o.alignment);
  h.validate();
  return h;
}

AeConfig ae_from(const Opts& o) {
  AeConfig config;
  config.epochs = o.ae_epochs;
  config.eta = o.ae_eta;
  config.batch = o.ae_batch;
  config.validate();
  return config;
}

std::string out_path(const Opts& o, const char* file) {
  return (std::filesystem::path(o.out) / file).string();
}

void prepare_out(const Opts& o) {
  std::error_code ec;
  std::filesystem::create_directories(o.out, ec);
  if (ec) fail(ErrorCode::config, "cannot create output directory '" + o.out + "': " + ec.message());
}

std::pair<std::string, std::uint16_t> parse_endpoint(const std::string& text) {
  const auto pos = text.rfind(':');
  if (pos == std::string::npos || pos == 0 || pos + 1 >= text.size())
    fail(ErrorCode::config, "endpoint must look like host:port, got '" + text + "'");
  int port = -1;
  try {
    port = std::stoi(text.substr(pos + 1));
  } catch (const std::exception&) {
    port = -1;
  }
  if (port < 0 || port > 65535)
    fail(ErrorCode::config, "port must lie in [0, 65535], got '" + text.substr(pos + 1) + "'");
  return {text.substr(0, pos), static_cast<std::uint16_t>(port)};
}

std::vector<Method> parse_methods(const std::string& csv) {
  std::vector<Method> out;
  std::size_t start = 0;
  while (start <= csv.size()) {
    const auto pos = csv.find(',', start);
    const std::string token =
        csv.substr(start, pos == std::string::npos ? std::string::npos : pos - start);
    if (!token.empty()) out.push_back(method_from_name(token));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  if (out.empty()) fail(ErrorCode::config, "method list is empty");
  return out;
}

struct TrainedViews {
  SplitViews views;
  SplitPlan plan;
};

TrainedViews split_views(const ResolvedSource& r, std::uint64_t seed) {
  const EncodedDataset ds = materialize(r, seed);
  TrainedViews tv;
  tv.plan = vertical_split(ds, r.n_labeled, r.n_unlabeled, r.overlap_frac, seed);
  tv.views = make_views(ds, tv.plan);
  return tv;
}

void write_metrics(const Opts& o, const nlohmann::json& metrics) {
  write_text_file(out_path(o, "metrics.json"), metrics.dump(2) + "\n");
}

void run_gen_data(const Opts& o) {
  SynthSpec spec;
  std::string preset_name = "custom";
  if (!o.synthetic.empty()) {
    const SyntheticPreset preset = synthetic_preset(o.synthetic);
    spec = preset.spec;
    preset_name = preset.name;
  }
  if (o.gen_n > 0) spec.n = o.gen_n;
  if (o.gen_d > 0) spec.d = o.gen_d;
  if (o.gen_sep >= 0.0) spec.sep = o.gen_sep;
  if (o.gen_sigma_b >= 0.0) spec.sigma_b = o.gen_sigma_b;

  EncodedDataset ds = gen_synthetic(spec, o.seed);
  ds.name = o.name.empty() ? "synthetic:" + preset_name : o.name;
  prepare_out(o);
  write_dataset_csv(out_path(o, "data.csv"), ds);

  nlohmann::json schema;
  schema["name"] = ds.name;
  schema["has_header"] = true;
  nlohmann::json columns = nlohmann::json::array();
  for (const std::string& f : ds.feature_names) columns.push_back({{"name", f}, {"role", "numeric"}});
  columns.push_back({{"name", "label"}, {"role", "label"}});
  schema["columns"] = std::move(columns);
  schema["label_map"] = {{"1", 1}, {"-1", -1}};
  write_text_file(out_path(o, "schema.json"), schema.dump(2) + "\n");
}

void run_split(const Opts& o) {
  const ResolvedSource r = resolve_source(o);
  const EncodedDataset ds = materialize(r, o.seed);
  const SplitPlan plan = vertical_split(ds, r.n_labeled, r.n_unlabeled, r.overlap_frac, o.seed);
  prepare_out(o);
  write_text_file(out_path(o, "plan.json"), plan_to_json(plan));
}

void run_train_ftl(const Opts& o) {
  const ResolvedSource r = resolve_source(o);
  const TrainedViews tv = split_views(r, o.seed);
  const HyperParams hyper = hyper_from(o);

  MlpModel model_a = init_model({tv.views.a.x.cols, o.hidden, o.latent}, Activation::tanh_act,
                                derive_seed(o.seed, "model-a"));
  MlpModel model_b = init_model({tv.views.b.x.cols, o.hidden, o.latent}, Activation::tanh_act,
                                derive_seed(o.seed, "model-b"));
  PartyA a(std::move(model_a), tv.views.a.x, tv.views.a.y, tv.views.a.overlap_idx, hyper);
  PartyB b(std::move(model_b), tv.views.b.x, tv.views.b.overlap_idx, hyper);
  const TrainResult trained = train_ftl(a, b, o.faithful);
  const Predictions pred = predict_ftl(a, b, tv.views.b.x);
  const double auc = roc_auc(pred.scores, tv.views.sealed.y).xi;

  prepare_out(o);
  write_trace_csv(out_path(o, "trace.csv"), ftl_trace_rows(0, trained.trace));
  write_text_file(out_path(o, "model_a.json"), model_to_json(a.model()));
  write_text_file(out_path(o, "model_b.json"), model_to_json(b.model()));
  write_scores_csv(out_path(o, "scores.csv"), pred.scores, tv.views.sealed.y);
  write_metrics(o, {{"auc", auc}, {"iterations", trained.trace.size()}});
}

void run_train_udl(const Opts& o) {
  const ResolvedSource r = resolve_source(o);
  const TrainedViews tv = split_views(r, o.seed);
  const UdlResult udl = run_udl(tv.views.b.x, o.seed, ae_from(o));
  const double xi = roc_auc(udl.scores, tv.views.sealed.y).xi;
  const double auc = std::max(xi, 1.0 - xi);

  prepare_out(o);
  write_trace_csv(out_path(o, "ae_trace.csv"), ae_trace_rows(0, udl.ae_trace));
  write_scores_csv(out_path(o, "scores.csv"), udl.scores, tv.views.sealed.y);
  write_metrics(o, {{"auc", auc}, {"inertia", udl.km.inertia}});
}

void run_serve_a(const Opts& o) {
  const ResolvedSource r = resolve_source(o);
  const TrainedViews tv = split_views(r, o.seed);
  const HyperParams hyper = hyper_from(o);
  MlpModel model_a = init_model({tv.views.a.x.cols, o.hidden, o.latent}, Activation::tanh_act,
                                derive_seed(o.seed, "model-a"));
  PartyA a(std::move(model_a), tv.views.a.x, tv.views.a.y, tv.views.a.overlap_idx, hyper);

  const auto [host, port] = parse_endpoint(o.listen);
  TcpListener listener(host, port);
  prepare_out(o);
  write_text_file(out_path(o, "port.txt"), std::to_string(listener.port()) + "\n");
  log_line(LogLevel::info, "listening on " + host + ":" + std::to_string(listener.port()));

  const auto channel = listener.accept(std::chrono::milliseconds(o.accept_timeout_ms));
  channel->set_recv_timeout(std::chrono::milliseconds(o.io_timeout_ms));
  const std::vector<LossBreakdown> trace = run_party_a(a, *channel, o.faithful);
  serve_predictions_a(a, *channel);

  write_trace_csv(out_path(o, "trace.csv"), ftl_trace_rows(0, trace));
  write_text_file(out_path(o, "model_a.json"), model_to_json(a.model()));
}

void run_serve_b(const Opts& o) {
  const ResolvedSource r = resolve_source(o);
  const TrainedViews tv = split_views(r, o.seed);
  const HyperParams hyper = hyper_from(o);
  MlpModel model_b = init_model({tv.views.b.x.cols, o.hidden, o.latent}, Activation::tanh_act,
                                derive_seed(o.seed, "model-b"));
  PartyB b(std::move(model_b), tv.views.b.x, tv.views.b.overlap_idx, hyper);

  const auto [host, port] = parse_endpoint(o.peer);
  const auto channel = tcp_dial(host, port, std::chrono::milliseconds(o.connect_window_ms));
  channel->set_recv_timeout(std::chrono::milliseconds(o.io_timeout_ms));
  const std::vector<LossBreakdown> trace = run_party_b(b, *channel);
  const Predictions pred = request_predictions_b(b, *channel, tv.views.b.x);
  send_prediction_stop(*channel);
  const double auc = roc_auc(pred.scores, tv.views.sealed.y).xi;

  prepare_out(o);
  write_trace_csv(out_path(o, "trace.csv"), ftl_trace_rows(0, trace));
  write_text_file(out_path(o, "model_b.json"), model_to_json(b.model()));
  write_scores_csv(out_path(o, "scores.csv"), pred.scores, tv.views.sealed.y);
  write_metrics(o, {{"auc", auc}, {"iterations", trace.size()}});
}

void run_experiment_cmd(const Opts& o) {
  const ResolvedSource r = resolve_source(o);
  ExperimentConfig cfg;
  cfg.dataset_name = r.dataset_name;
  cfg.synthetic = r.spec;
  cfg.data = r.data;
  cfg.n_labeled = r.n_labeled;
  cfg.n_unlabeled = r.n_unlabeled;
  cfg.overlap_frac = r.overlap_frac;
  cfg.hyper = hyper_from(o);
  cfg.ae = ae_from(o);
  cfg.hidden_dim = static_cast<std::uint32_t>(o.hidden);
  cfg.latent_dim = static_cast<std::uint32_t>(o.latent);
  cfg.faithful_exchange = o.faithful;
  cfg.methods = parse_methods(o.methods);
  cfg.runs = o.runs;
  cfg.base_seed = o.seed;
  cfg.workers = o.workers;

  const ExperimentResult result = run_experiment(cfg);
  prepare_out(o);
  write_text_file(out_path(o, "report.csv"), report_csv(result));
  write_text_file(out_path(o, "report.json"), report_json(result));
  if (!result.ftl_trace.empty()) write_trace_csv(out_path(o, "trace_ftl.csv"), result.ftl_trace);
  if (!result.ae_trace.empty()) write_trace_csv(out_path(o, "trace_ae.csv"), result.ae_trace);
}

void run_report(const Opts& o) {
  const std::string csv = report_csv_from_json(read_text_file(o.in));
  prepare_out(o);
  write_text_file(out_path(o, "report.csv"), csv);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"two-party federated transfer learning pipeline"};
  app.require_subcommand(1);

  auto gen = std::make_shared<Opts>();
  CLI::App* gen_cmd = app.add_subcommand("gen-data", "generate a synthetic dataset CSV plus schema");
  gen_cmd->add_option("--synthetic", gen->synthetic, "preset to start from");
  gen_cmd->add_option("--name", gen->name, "dataset name stored in the schema");
  gen_cmd->add_option("--n", gen->gen_n, "sample count");
  gen_cmd->add_option("--d", gen->gen_d, "feature count");
  gen_cmd->add_option("--sep", gen->gen_sep, "class separation");
  gen_cmd->add_option("--sigma-b", gen->gen_sigma_b, "target-half common-mode noise scale");
  add_common_flags(gen_cmd, *gen);
  gen_cmd->callback([gen, gen_cmd] {
    ConfigMerge merge(gen_cmd, gen->config);
    merge.key("--synthetic", gen->synthetic);
    merge.key("--name", gen->name);
    merge.key("--n", gen->gen_n);
    merge.key("--d", gen->gen_d);
    merge.key("--sep", gen->gen_sep);
    merge.key("--sigma-b", gen->gen_sigma_b);
    merge_common(merge, *gen);
    merge.finish();
    run_gen_data(*gen);
  });

  auto spl = std::make_shared<Opts>();
  CLI::App* spl_cmd = app.add_subcommand("split", "write the two-party split plan for a dataset");
  add_source_flags(spl_cmd, *spl);
  add_size_flags(spl_cmd, *spl);
  add_common_flags(spl_cmd, *spl);
  spl_cmd->callback([spl, spl_cmd] {
    ConfigMerge merge(spl_cmd, spl->config);
    merge_source(merge, *spl);
    merge_sizes(merge, *spl);
    merge_common(merge, *spl);
    merge.finish();
    run_split(*spl);
  });

  auto ftl = std::make_shared<Opts>();
  CLI::App* ftl_cmd = app.add_subcommand("train-ftl", "train both parties in one process");
  add_source_flags(ftl_cmd, *ftl);
  add_size_flags(ftl_cmd, *ftl);
  add_hyper_flags(ftl_cmd, *ftl);
  add_common_flags(ftl_cmd, *ftl);
  ftl_cmd->callback([ftl, ftl_cmd] {
    ConfigMerge merge(ftl_cmd, ftl->config);
    merge_source(merge, *ftl);
    merge_sizes(merge, *ftl);
    merge_hyper(merge, *ftl);
    merge_common(merge, *ftl);
    merge.finish();
    run_train_ftl(*ftl);
  });

  auto udl = std::make_shared<Opts>();
  CLI::App* udl_cmd = app.add_subcommand("train-udl", "run the unsupervised baseline on party B's half");
  add_source_flags(udl_cmd, *udl);
  add_size_flags(udl_cmd, *udl);
  add_ae_flags(udl_cmd, *udl);
  add_common_flags(udl_cmd, *udl);
  udl_cmd->callback([udl, udl_cmd] {
    ConfigMerge merge(udl_cmd, udl->config);
    merge_source(merge, *udl);
    merge_sizes(merge, *udl);
    merge_ae(merge, *udl);
    merge_common(merge, *udl);
    merge.finish();
    run_train_udl(*udl);
  });

  auto sa = std::make_shared<Opts>();
  CLI::App* sa_cmd = app.add_subcommand("serve-a", "run party A over TCP (listens; writes port.txt)");
  sa_cmd->add_option("--listen", sa->listen, "host:port to bind (port 0 picks a free one)");
  sa_cmd->add_option("--accept-timeout-ms", sa->accept_timeout_ms, "how long to wait for the peer");
  sa_cmd->add_option("--io-timeout-ms", sa->io_timeout_ms, "per-message receive timeout");
  add_source_flags(sa_cmd, *sa);
  add_size_flags(sa_cmd, *sa);
  add_hyper_flags(sa_cmd, *sa);
  add_common_flags(sa_cmd, *sa);
  sa_cmd->callback([sa, sa_cmd] {
    ConfigMerge merge(sa_cmd, sa->config);
    merge.key("--listen", sa->listen);
    merge.key("--accept-timeout-ms", sa->accept_timeout_ms);
    merge.key("--io-timeout-ms", sa->io_timeout_ms);
    merge_source(merge, *sa);
    merge_sizes(merge, *sa);
    merge_hyper(merge, *sa);
    merge_common(merge, *sa);
    merge.finish();
    run_serve_a(*sa);
  });

  auto sb = std::make_shared<Opts>();
  CLI::App* sb_cmd = app.add_subcommand("serve-b", "run party B over TCP (dials the peer)");
  sb_cmd->add_option("--peer", sb->peer, "host:port of party A")->required();
  sb_cmd->add_option("--connect-window-ms", sb->connect_window_ms, "how long to keep retrying the dial");
  sb_cmd->add_option("--io-timeout-ms", sb->io_timeout_ms, "per-message receive timeout");
  add_source_flags(sb_cmd, *sb);
  add_size_flags(sb_cmd, *sb);
  add_hyper_flags(sb_cmd, *sb);
  add_common_flags(sb_cmd, *sb);
  sb_cmd->callback([sb, sb_cmd] {
    ConfigMerge merge(sb_cmd, sb->config);
    merge.key("--connect-window-ms", sb->connect_window_ms);
    merge.key("--io-timeout-ms", sb->io_timeout_ms);
    merge_source(merge, *sb);
    merge_sizes(merge, *sb);
    merge_hyper(merge, *sb);
    merge_common(merge, *sb);
    merge.finish();
    run_serve_b(*sb);
  });

  auto exp = std::make_shared<Opts>();
  CLI::App* exp_cmd = app.add_subcommand("experiment", "run the full multi-run significance study");
  exp_cmd->add_option("--methods", exp->methods, "comma-separated subset of FTL,UDL");
  exp_cmd->add_option("--runs", exp->runs, "number of runs in the series");
  exp_cmd->add_option("--workers", exp->workers, "parallel run workers");
  add_source_flags(exp_cmd, *exp);
  add_size_flags(exp_cmd, *exp);
  add_hyper_flags(exp_cmd, *exp);
  add_ae_flags(exp_cmd, *exp);
  add_common_flags(exp_cmd, *exp);
  exp_cmd->callback([exp, exp_cmd] {
    ConfigMerge merge(exp_cmd, exp->config);
    merge.key("--methods", exp->methods);
    merge.key("--runs", exp->runs);
    merge.key("--workers", exp->workers);
    merge_source(merge, *exp);
    merge_sizes(merge, *exp);
    merge_hyper(merge, *exp);
    merge_ae(merge, *exp);
    merge_common(merge, *exp);
    merge.finish();
    run_experiment_cmd(*exp);
  });

  auto rep = std::make_shared<Opts>();
  CLI::App* rep_cmd = app.add_subcommand("report", "rebuild the CSV table from a JSON report");
  rep_cmd->add_option("--in", rep->in, "report.json path")->required();
  add_common_flags(rep_cmd, *rep);
  rep_cmd->callback([rep, rep_cmd] {
    ConfigMerge merge(rep_cmd, rep->config);
    merge.key("--in", rep->in);
    merge_common(merge, *rep);
    merge.finish();
    run_report(*rep);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const fedxfer::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
