#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qgan/mlp.hpp"
#include "qgan/quant.hpp"
#include "qgan/rng.hpp"
#include "qgan/tensor.hpp"

namespace qgan {

// ============================================================================
// Configuration and data
// ============================================================================

struct GanConfig {
  std::size_t noise_dim = 2;
  std::vector<std::size_t> gen_layers = {2, 64, 64, 2};
  std::vector<std::size_t> disc_layers = {2, 64, 64, 1};
  std::optional<int> d_bits;    // unset = full precision
  std::optional<int> g_bits;
  Scheme d_scheme = Scheme::EmLinear;
  Scheme g_scheme = Scheme::EmLinear;
  double learning_rate = 2e-4;
  double adam_beta1 = 0.5;
  double adam_beta2 = 0.999;
  std::size_t batch_size = 128;
  std::size_t steps = 4000;
  std::uint64_t seed = 42;
};

/// Mixture of `mode_count` Gaussians equally spaced on a circle; the desk
/// scale stand-in for an image dataset with a known mode structure.
struct RingDataset {
  std::size_t mode_count = 8;
  double radius = 2.0;
  double sigma = 0.05;
  std::uint64_t seed = 0;

  std::vector<std::pair<double, double>> centers() const;
  // [n, 2] samples: uniform mode choice + N(0, sigma^2) per coordinate
  Tensor sample(std::size_t n, Rng& rng) const;
};

/// Mode-coverage quality proxy. A mode counts as covered when at least 2% of
/// the generated samples land within 3 sigma (per coordinate) of its center;
/// hq_fraction is the fraction of samples within 3 sigma of any center.
/// score = (covered_modes / mode_count) * hq_fraction, in [0, 1].
struct QualityScore {
  int covered_modes = 0;
  double hq_fraction = 0.0;
  double score = 0.0;
};

inline constexpr double kCoverageShare = 0.02;

/// G and D with full-precision master weights plus the per-network
/// quantization configs that shape every forward pass.
struct GanModel {
  Mlp generator;
  Mlp discriminator;
  std::optional<int> d_bits;
  std::optional<int> g_bits;
  Scheme d_scheme = Scheme::EmLinear;
  Scheme g_scheme = Scheme::EmLinear;
};

// ============================================================================
// Losses
// ============================================================================

struct GanLosses {
  double d_loss = 0.0;
  double g_loss = 0.0;
};

inline constexpr double kProbClamp = 1e-7;

/// d_loss = -mean(log d_real) - mean(log(1 - d_fake));
/// g_loss = -mean(log d_fake) (non-saturating form). Probabilities are
/// clamped to [1e-7, 1 - 1e-7] before the logs.
GanLosses gan_losses(const Tensor& d_real, const Tensor& d_fake);

/// Gradients of both losses w.r.t. the discriminator outputs; zero where the
/// clamp saturates. Feed these into backward() to reach logits and weights.
struct GanLossGrads {
  Tensor d_wrt_real;  // d(d_loss) / d(d_real)
  Tensor d_wrt_fake;  // d(d_loss) / d(d_fake)
  Tensor g_wrt_fake;  // d(g_loss) / d(d_fake)
};

GanLossGrads gan_loss_grads(const Tensor& d_real, const Tensor& d_fake);

// ============================================================================
// Quantization-aware training
// ============================================================================

/// Copy of `mlp` whose weight matrices are quantized per layer at `bits`
/// with the given scheme (biases stay full precision). Unset bits returns
/// the input unchanged. Constant matrices are already exactly representable
/// and pass through.
Mlp quantized_mlp(const Mlp& mlp, std::optional<int> bits, Scheme scheme);

/// Alternating-update trainer. Each step performs one discriminator update
/// on a real and a fake batch followed by one generator update, both via
/// Adam. Under quantization the forward passes use per-layer quantized
/// copies refit from the master weights every step, while gradients apply
/// to the full-precision masters (straight-through estimator).
class GanTrainer {
public:
  GanTrainer(GanConfig config, RingDataset dataset);

  /// One update with batches drawn from the trainer's seeded streams.
  GanLosses step();

  /// One update with explicit batches: real [B, 2], noise [B, noise_dim].
  GanLosses step(const Tensor& real, const Tensor& noise_d, const Tensor& noise_g);

  const GanModel& model() const { return model_; }
  const GanConfig& config() const { return config_; }
  const RingDataset& dataset() const { return dataset_; }

private:
  GanConfig config_;
  RingDataset dataset_;
  GanModel model_;
  AdamState d_opt_;
  AdamState g_opt_;
  AdamParams adam_;
  Rng data_rng_;
  Rng noise_rng_;
};

// ============================================================================
// Training and evaluation
// ============================================================================

struct HistoryRow {
  std::size_t step = 0;
  double d_loss = 0.0;
  double g_loss = 0.0;
  QualityScore quality;
};

struct TrainResult {
  GanModel model;
  std::vector<HistoryRow> history;
};

inline constexpr std::size_t kEvalInterval = 250;
inline constexpr std::size_t kEvalSamples = 5000;

/// Deterministic given config.seed and dataset. History carries losses and a
/// QualityScore every 250 steps (plus the final step).
TrainResult train(const GanConfig& config, const RingDataset& dataset);

/// Score a [n, 2] sample batch against the dataset's mode structure.
QualityScore score_samples(const Tensor& samples, const RingDataset& dataset);

/// Draw n_samples from the (possibly quantized) generator and score them.
/// Deterministic given the seed.
QualityScore evaluate_quality(const GanModel& model, const RingDataset& dataset,
                              std::size_t n_samples, std::uint64_t seed);

// ============================================================================
// External interfaces
// ============================================================================

/// Layer tensors named "g.<i>.w", "g.<i>.b", "d.<i>.w", "d.<i>.b", ready for
/// a QGW1 checkpoint.
std::vector<Tensor> model_tensors(const GanModel& model);

/// CSV with header "step,d_loss,g_loss,score".
void export_history_csv(const std::string& path, const std::vector<HistoryRow>& history);

}  // namespace qgan
