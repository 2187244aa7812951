#include "qgan/evaluators.hpp"

#include <algorithm>

#include "qgan/rng.hpp"

namespace qgan {

GanEvaluator::GanEvaluator(GanConfig base, RingDataset dataset, std::string curve_dir)
    : base_(std::move(base)), dataset_(std::move(dataset)), curve_dir_(std::move(curve_dir)) {}

std::string GanEvaluator::run_label(std::optional<int> d_bits, std::optional<int> g_bits,
                                    std::uint64_t seed) {
  auto bits_token = [](std::optional<int> bits) {
    return bits ? std::to_string(*bits) : std::string("fp");
  };
  return "d" + bits_token(d_bits) + "_g" + bits_token(g_bits) + "_seed" + std::to_string(seed);
}

std::string GanEvaluator::history_ref(std::optional<int> d_bits, std::optional<int> g_bits,
                                      std::uint64_t seed) const {
  if (curve_dir_.empty()) return {};
  return curve_dir_ + "/curve_" + run_label(d_bits, g_bits, seed) + ".csv";
}

QualityScore GanEvaluator::evaluate(std::optional<int> d_bits, std::optional<int> g_bits,
                                    std::uint64_t seed) {
  GanConfig config = base_;
  config.d_bits = d_bits;
  config.g_bits = g_bits;
  config.seed = seed;

  TrainResult run = train(config, dataset_);
  if (!curve_dir_.empty()) {
    export_history_csv(history_ref(d_bits, g_bits, seed), run.history);
  }

  if (run.history.empty()) {
    return evaluate_quality(run.model, dataset_, kEvalSamples, derive_seed(seed, "eval"));
  }
  return std::max_element(run.history.begin(), run.history.end(),
                          [](const HistoryRow& a, const HistoryRow& b) {
                            return a.quality.score < b.quality.score;
                          })
      ->quality;
}

QualityScore SlopeMockEvaluator::evaluate(std::optional<int> d_bits, std::optional<int> g_bits,
                                          std::uint64_t seed) {
  (void)seed;
  double score = 1.0;
  if (g_bits) {
    score = std::min(1.0, g_slope_ * static_cast<double>(*g_bits));
  } else if (d_bits) {
    score = std::min(1.0, d_slope_ * static_cast<double>(*d_bits));
  }
  QualityScore q;
  q.covered_modes = 0;  // mock runs have no mode structure
  q.hq_fraction = score;
  q.score = score;
  return q;
}

}  // namespace qgan
