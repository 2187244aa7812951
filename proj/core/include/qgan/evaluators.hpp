#pragma once

#include <string>

#include "qgan/search.hpp"

namespace qgan {

/// The shipped evaluator: trains one GAN per configuration (from scratch,
/// with the requested bit widths patched into the base config) and returns
/// the best QualityScore the run reached. When `curve_dir` is set, each run's
/// training curve is written there and exposed through history_ref().
class GanEvaluator : public Evaluator {
public:
  GanEvaluator(GanConfig base, RingDataset dataset, std::string curve_dir = "");

  QualityScore evaluate(std::optional<int> d_bits, std::optional<int> g_bits,
                        std::uint64_t seed) override;
  std::string history_ref(std::optional<int> d_bits, std::optional<int> g_bits,
                          std::uint64_t seed) const override;

  /// Stable per-configuration label, e.g. "d2_gfp_seed42".
  static std::string run_label(std::optional<int> d_bits, std::optional<int> g_bits,
                               std::uint64_t seed);

private:
  GanConfig base_;
  RingDataset dataset_;
  std::string curve_dir_;
};

/// Deterministic stand-in that keeps the search control flow testable in
/// milliseconds: score = min(1, g_slope * k_g) when the generator is
/// quantized, otherwise min(1, d_slope * k_d), otherwise 1.
class SlopeMockEvaluator : public Evaluator {
public:
  SlopeMockEvaluator(double d_slope, double g_slope) : d_slope_(d_slope), g_slope_(g_slope) {}

  QualityScore evaluate(std::optional<int> d_bits, std::optional<int> g_bits,
                        std::uint64_t seed) override;

private:
  double d_slope_;
  double g_slope_;
};

}  // namespace qgan
