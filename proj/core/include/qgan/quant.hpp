#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "qgan/tensor.hpp"

namespace qgan {

// ============================================================================
// Quantization schemes
// ============================================================================
//
// Every scheme follows the same scale / discretize / rescale pipeline
// Q(x) = f^-1(round(f(x))) with k-bit codes z in [0, 2^k - 1]:
//
//   MinMax    f(x) = (x - beta) / alpha over the data range
//   LogMinMax MinMax applied to ln(|x| + epsilon), sign reattached
//   Tanh      f(x) = (tanh(x) + 1) / 2 * (2^k - 1), inverse clamped to
//             keep arctanh finite
//   EmLinear  f(x) = (x - beta) / alpha with (alpha, beta) fitted by
//             alternating rounding (E-step) and least squares (M-step)
//             to minimize the L2 reconstruction error
//
// Rounding is round-half-away-from-zero everywhere.

enum class Scheme { MinMax, LogMinMax, Tanh, EmLinear };

std::string_view to_string(Scheme scheme);
std::optional<Scheme> scheme_from_string(std::string_view name);

inline constexpr int kMinBits = 1;
inline constexpr int kMaxBits = 16;
inline constexpr double kDefaultLogEpsilon = 1e-7;
inline constexpr double kDefaultTanhDelta = 1e-6;

// Number of representable states, 2^bits.
long long state_count(int bits);

// The one rounding rule used by every scheme.
double round_half_away(double x);

/// Fitted scale/offset for a scheme at a given bit width. For MinMax and
/// EmLinear, (alpha, beta) live in the data domain; for LogMinMax they
/// describe the grid over ln(|x| + epsilon). Tanh needs no fitted scale.
struct QuantParams {
  Scheme scheme = Scheme::MinMax;
  int bits = 8;
  double alpha = 1.0;
  double beta = 0.0;
  double epsilon = kDefaultLogEpsilon;           // LogMinMax only
  double saturation_delta = kDefaultTanhDelta;   // Tanh only
};

/// Result of quantizing one tensor: the rescaled weights, the intermediate
/// codes, the summed squared reconstruction error, and occupancy stats.
///
/// state_histogram is keyed by code for MinMax/Tanh/EmLinear. LogMinMax
/// reattaches a sign after rescaling, so two signed states can share one
/// magnitude code; its histogram keys negative-sign states as -(code + 1),
/// which keeps the +/- pairs around zero distinct.
struct QuantOutcome {
  Tensor quantized;
  std::vector<int> codes;
  double l2_error = 0.0;
  int states_used = 0;
  std::map<long long, std::size_t> state_histogram;
};

struct EmIteration {
  double alpha = 0.0;
  double beta = 0.0;
  double objective = 0.0;  // sum of squared residuals after the M-step
};

/// Per-iteration record of one EM fit. The objective sequence is
/// non-increasing (within 1e-12 absolute).
struct EmTrace {
  std::vector<EmIteration> iterations;
  bool converged = false;
  int steps_taken = 0;
  bool degenerate_mstep = false;  // the all-codes-equal fallback was taken
};

struct MinMaxScaleResult {
  std::vector<double> scaled;  // f_m(x) = (x - min) / (max - min) * (2^k - 1)
  double alpha = 0.0;          // (max - min) / (2^k - 1)
  double beta = 0.0;           // min
};

struct EmFitResult {
  QuantParams params;
  QuantOutcome outcome;
  EmTrace trace;
};

/// Quantitative form of the state-utilization analysis: how many states are
/// occupied, how evenly (entropy in nats over the state histogram), and how
/// much mass sits in the two extremum codes 0 and 2^k - 1.
struct UtilizationReport {
  int states_used = 0;
  double entropy = 0.0;
  double extremum_fraction = 0.0;
  double l2_error = 0.0;
};

// ============================================================================
// Operations
// ============================================================================

/// Quantize `input` with fixed params. A constant tensor (max == min) is
/// exactly representable by a single state and is returned unchanged for
/// every scheme; the raw per-scheme functions below do not apply this rule.
///
/// For any fixed params the map is idempotent: re-quantizing the output
/// reproduces it element-wise exactly.
///
/// Throws EmptyTensor, InvalidParams (bits outside [1,16]; alpha <= 0 for
/// MinMax/EmLinear on non-constant data; epsilon <= 0; delta outside (0,1)).
QuantOutcome quantize(const Tensor& input, const QuantParams& params);

/// Scale by the data range: f_m(x) = (x - min) / (max - min) * (2^k - 1).
/// Returns the scaled values plus the equivalent linear params so that
/// f_m(x) = (x - beta) / alpha. Throws ZeroRange when max == min.
MinMaxScaleResult minmax_scale(const Tensor& input, int bits);

/// MinMax params for `input`, ready to pass to quantize().
QuantParams minmax_params(const Tensor& input, int bits);

/// Nonuniform variant: per element s = sign(w) (sign(0) = +1),
/// m = ln(|w| + epsilon); minmax-quantize {m} at k bits; rescale
/// w^q = s * (exp(m^q) - epsilon). When every magnitude is equal the log
/// domain has zero range and the input is already exactly representable.
QuantOutcome log_quantize(const Tensor& input, int bits, double epsilon = kDefaultLogEpsilon);

/// Log-domain grid params for `input` (alpha/beta over ln(|x| + epsilon)).
QuantParams log_minmax_params(const Tensor& input, int bits, double epsilon = kDefaultLogEpsilon);

/// Bounded scheme: f(x) = (tanh(x) + 1) / 2 * (2^k - 1). The inverse
/// argument is clamped to [-1 + delta, 1 - delta] so arctanh stays finite;
/// the endpoint codes therefore rescale to +/- arctanh(1 - delta), far from
/// typical weight magnitudes. Applies its map unconditionally (no constant
/// special case -- the scale function is data independent).
QuantOutcome tanh_quantize(const Tensor& input, int bits,
                           double saturation_delta = kDefaultTanhDelta);

/// E-step: z_i = clamp(round((w_i - beta) / alpha), 0, 2^k - 1).
/// Throws InvalidParams when alpha <= 0.
std::vector<int> em_estep(const Tensor& input, double alpha, double beta, int bits);

/// M-step: the exact least-squares minimizer of sum (w_i - alpha z_i - beta)^2,
///   alpha = (E[wz] - E[w]E[z]) / (E[z^2] - E[z]^2),  beta = E[w] - alpha E[z].
/// Throws DegenerateCodes when all codes are equal (zero denominator).
std::pair<double, double> em_mstep(const Tensor& input, const std::vector<int>& codes);

/// Fit (alpha, beta) by alternating em_estep / em_mstep, initialized from
/// minmax_scale, until the codes stop changing, the relative objective
/// improvement drops below tol, or max_iter is reached. The returned error
/// never exceeds plain minmax quantization at the same bit width. Constant
/// inputs short-circuit to the exact single-state representation.
EmFitResult em_fit(const Tensor& input, int bits, int max_iter = 100, double tol = 1e-9);

/// Occupancy summary of an outcome at the given bit width.
UtilizationReport quant_report(const QuantOutcome& outcome, int bits);

}  // namespace qgan
