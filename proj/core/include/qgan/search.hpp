#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qgan/errors.hpp"
#include "qgan/gan.hpp"

namespace qgan {

// ============================================================================
// Evaluator abstraction
// ============================================================================

/// Trains and scores one bit-width configuration. An unset bit width leaves
/// that network in full precision. Implementations must be deterministic
/// given (d_bits, g_bits, seed) and safe to call from multiple threads.
class Evaluator {
public:
  virtual ~Evaluator() = default;

  virtual QualityScore evaluate(std::optional<int> d_bits, std::optional<int> g_bits,
                                std::uint64_t seed) = 0;

  /// Optional pointer to the per-run training curve (a CSV path for the real
  /// evaluator); empty when the implementation keeps no history.
  virtual std::string history_ref(std::optional<int> d_bits, std::optional<int> g_bits,
                                  std::uint64_t seed) const {
    (void)d_bits;
    (void)g_bits;
    (void)seed;
    return {};
  }
};

struct TrailEntry {
  std::optional<int> d_bits;
  std::optional<int> g_bits;
  double score = 0.0;
};

/// Raised when an evaluation fails mid-search; carries the trail gathered so
/// far so callers can still report partial progress.
class EvaluatorFailure : public Error {
public:
  explicit EvaluatorFailure(const std::string& what, std::vector<TrailEntry> partial = {})
      : Error(what), partial_trail_(std::move(partial)) {}

  const std::vector<TrailEntry>& partial_trail() const { return partial_trail_; }

private:
  std::vector<TrailEntry> partial_trail_;
};

// ============================================================================
// Multi-precision bit-width search
// ============================================================================

struct SearchResult {
  int d_bits = 0;
  int g_bits = 0;
  std::vector<TrailEntry> trail;  // every evaluation, D phase then G phase
  bool satisfied = false;
};

/// Two-phase minimal bit-width search. Phase 1 raises the discriminator bit
/// width from 1 with the generator in full precision until the score meets
/// `quality_target`; phase 2 freezes that d_bits and raises the generator
/// bit width the same way. Returns satisfied = false with the full trail if
/// either phase exhausts max_bits.
///
/// `repeats` > 1 evaluates each configuration on that many derived seeds and
/// keeps the median score (toy GAN training is noisy).
SearchResult multi_precision_search(Evaluator& evaluator, double quality_target, int max_bits,
                                    std::uint64_t seed, int repeats = 1);

// ============================================================================
// Sensitivity sweep
// ============================================================================

enum class SweepMode { DOnly, Both, GOnly };

std::string_view to_string(SweepMode mode);
std::optional<SweepMode> sweep_mode_from_string(std::string_view name);

struct SweepCell {
  SweepMode mode = SweepMode::DOnly;
  int bits = 0;
  QualityScore quality;
  std::string history_ref;
};

struct SweepResult {
  int lo = 0;
  int hi = 0;
  std::vector<SweepCell> cells;  // ordered by (mode, bits)
};

/// Evaluate every requested mode at every bit width in [lo, hi]. Cells are
/// independent; `jobs` > 1 runs them on a small worker pool and merges the
/// results in deterministic (mode, bits) order.
SweepResult sensitivity_sweep(Evaluator& evaluator, int lo, int hi, std::uint64_t seed,
                              const std::vector<SweepMode>& modes = {SweepMode::DOnly,
                                                                     SweepMode::Both,
                                                                     SweepMode::GOnly},
                              int jobs = 1);

// ============================================================================
// Training-run classification
// ============================================================================

enum class RunState { Convergent, Unstable, Failed };

std::string_view to_string(RunState state);

struct ClassifyConfig {
  double fail_threshold = 0.15;  // max score below this => Failed
  double pass_threshold = 0.5;   // oscillation only counts once this is reached
  double oscillation = 0.25;     // last-quartile peak-to-trough for Unstable
};

/// Failed when the score never leaves the noise floor; Unstable when the run
/// reaches pass_threshold but the last quartile still swings by at least
/// `oscillation`; Convergent otherwise. Throws TooShort for histories with
/// fewer than 4 entries.
RunState classify_run(const std::vector<QualityScore>& history, const ClassifyConfig& config = {});

}  // namespace qgan
