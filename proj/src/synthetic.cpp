#include "fedxfer/synthetic.hpp"

#include <cmath>

#include "fedxfer/error.hpp"
#include "fedxfer/rng.hpp"
#include "fedxfer/split.hpp"

namespace fedxfer {

EncodedDataset gen_synthetic(const SynthSpec& spec, std::uint64_t seed) {
  if (spec.n < 4) fail(ErrorCode::config, "synthetic dataset needs at least 4 samples");
  if (spec.d < 2) fail(ErrorCode::config, "synthetic dataset needs at least 2 features");
  if (!(spec.sep >= 0.0)) fail(ErrorCode::config, "class separation must be non-negative");
  if (!(spec.sigma_b >= 0.0)) fail(ErrorCode::config, "target noise scale must be non-negative");

  EncodedDataset ds;
  ds.name = "synthetic";
  ds.x = Matrix(spec.n, spec.d);
  ds.y.resize(spec.n);
  ds.feature_names.reserve(spec.d);
  for (std::size_t f = 0; f < spec.d; ++f) ds.feature_names.push_back("f" + std::to_string(f));

  // the same shuffle vertical_split will use, so the noisy half of the
  // features is exactly party B's half and the gap direction alternates sign
  // along it (orthogonal to B's common-mode noise)
  const std::vector<std::uint32_t> fperm = feature_shuffle(spec.d, derive_seed(seed, "features"));
  std::vector<double> dir(spec.d, 0.0);
  for (std::size_t j = 0; j < spec.d; ++j) dir[fperm[j]] = (j % 2 == 0) ? 1.0 : -1.0;
  const std::size_t b_begin = (spec.d + 1) / 2;

  const double half_gap = spec.sep / (2.0 * std::sqrt(static_cast<double>(spec.d)));
  Rng x_rng(derive_seed(seed, "x"));
  Rng noise_rng(derive_seed(seed, "b-noise"));
  for (std::size_t i = 0; i < spec.n; ++i) {
    const std::int8_t label = (i % 2 == 0) ? std::int8_t{1} : std::int8_t{-1};
    ds.y[i] = label;
    double* row = ds.x.row_ptr(i);
    for (std::size_t f = 0; f < spec.d; ++f)
      row[f] = static_cast<double>(label) * half_gap * dir[f] + x_rng.next_normal();
    const double shared = spec.sigma_b * noise_rng.next_normal();
    for (std::size_t j = b_begin; j < spec.d; ++j) row[fperm[j]] += shared;
  }

  // same [0, 1] scaling the CSV encoder applies
  for (std::size_t f = 0; f < spec.d; ++f) {
    double lo = ds.x.at(0, f);
    double hi = lo;
    for (std::size_t i = 1; i < spec.n; ++i) {
      lo = std::min(lo, ds.x.at(i, f));
      hi = std::max(hi, ds.x.at(i, f));
    }
    const double span = hi - lo;
    for (std::size_t i = 0; i < spec.n; ++i) {
      double& v = ds.x.row_ptr(i)[f];
      v = span > 0.0 ? (v - lo) / span : 0.0;
    }
  }
  return ds;
}

SyntheticPreset synthetic_preset(const std::string& name) {
  SyntheticPreset preset;
  preset.name = name;
  preset.n_labeled = 1200;
  preset.n_unlabeled = 700;
  preset.overlap_frac = 0.1;
  if (name == "weak-target") return preset;
  if (name == "clean") {
    preset.spec.sigma_b = 0.0;
    return preset;
  }
  if (name == "no-signal") {
    preset.spec.sep = 0.0;
    return preset;
  }
  fail(ErrorCode::config, "unknown synthetic preset '" + name + "' (try weak-target, clean, no-signal)");
}

std::vector<std::string> synthetic_preset_names() { return {"weak-target", "clean", "no-signal"}; }

}  // namespace fedxfer
