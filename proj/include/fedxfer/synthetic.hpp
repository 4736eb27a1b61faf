#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fedxfer/dataset.hpp"

namespace fedxfer {

/// Two Gaussian classes in d dimensions with balanced +/-1 labels. The class
/// mean gap has length `sep` and alternates sign across the shuffled feature
/// order, so it is orthogonal to the common-mode direction of B's noise. The
/// features destined for party B (second half of the seeded shuffle) carry an
/// extra shared per-sample noise term of scale sigma_b: it dominates B's
/// variance, which starves unsupervised clustering, while a supervised
/// extractor can project it out because it is orthogonal to the class signal.
struct SynthSpec {
  std::size_t n = 2000;
  std::size_t d = 20;
  double sep = 6.0;
  double sigma_b = 3.0;
};

EncodedDataset gen_synthetic(const SynthSpec& spec, std::uint64_t seed);

/// A synthetic spec plus the split sizes the experiment harness should use.
struct SyntheticPreset {
  std::string name;
  SynthSpec spec;
  std::size_t n_labeled = 0;
  std::size_t n_unlabeled = 0;
  double overlap_frac = 0.1;
};

/// Named presets: weak-target (separable source, noisy target), clean
/// (no target noise), no-signal (sep 0).
SyntheticPreset synthetic_preset(const std::string& name);
std::vector<std::string> synthetic_preset_names();

}  // namespace fedxfer
