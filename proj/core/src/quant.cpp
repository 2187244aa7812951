#include "qgan/quant.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <string>

#include "qgan/errors.hpp"

namespace qgan {

namespace {

void check_bits(int bits) {
  if (bits < kMinBits || bits > kMaxBits) {
    throw InvalidParams("bits must be in [" + std::to_string(kMinBits) + ", " +
                        std::to_string(kMaxBits) + "], got " + std::to_string(bits));
  }
}

void check_nonempty(const Tensor& input) {
  if (input.empty()) throw EmptyTensor();
}

double sign_of(double x) { return x >= 0.0 ? 1.0 : -1.0; }  // sign(0) = +1

int clamp_code(double rounded, long long max_code) {
  double r = std::clamp(rounded, 0.0, static_cast<double>(max_code));
  return static_cast<int>(r);
}

double sum_squared_error(const std::vector<double>& w, const std::vector<double>& wq) {
  double sse = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    double d = w[i] - wq[i];
    sse += d * d;
  }
  return sse;
}

// Histogram keyed by plain code; states_used = distinct codes.
void fill_code_stats(QuantOutcome& out) {
  out.state_histogram.clear();
  for (int z : out.codes) out.state_histogram[z] += 1;
  out.states_used = static_cast<int>(out.state_histogram.size());
}

// The exactly-representable single-state outcome used for constant input.
QuantOutcome identity_outcome(const Tensor& input) {
  QuantOutcome out;
  out.quantized = input;
  out.codes.assign(input.size(), 0);
  out.l2_error = 0.0;
  out.states_used = 1;
  out.state_histogram[0] = input.size();
  return out;
}

// Shared path for MinMax and EmLinear: fixed affine map in the data domain.
QuantOutcome linear_quantize(const Tensor& input, double alpha, double beta, int bits) {
  const long long max_code = state_count(bits) - 1;
  const auto& w = input.data();
  QuantOutcome out;
  out.codes.resize(w.size());
  std::vector<double> recon(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    int z = clamp_code(round_half_away((w[i] - beta) / alpha), max_code);
    out.codes[i] = z;
    recon[i] = beta + alpha * static_cast<double>(z);
  }
  out.quantized = Tensor(input.name(), input.shape(), std::move(recon));
  out.l2_error = sum_squared_error(w, out.quantized.data());
  fill_code_stats(out);
  return out;
}

}  // namespace

std::string_view to_string(Scheme scheme) {
  switch (scheme) {
    case Scheme::MinMax: return "minmax";
    case Scheme::LogMinMax: return "log";
    case Scheme::Tanh: return "tanh";
    case Scheme::EmLinear: return "em";
  }
  return "?";
}

std::optional<Scheme> scheme_from_string(std::string_view name) {
  if (name == "minmax") return Scheme::MinMax;
  if (name == "log") return Scheme::LogMinMax;
  if (name == "tanh") return Scheme::Tanh;
  if (name == "em") return Scheme::EmLinear;
  return std::nullopt;
}

long long state_count(int bits) { return 1LL << bits; }

double round_half_away(double x) { return std::round(x); }

MinMaxScaleResult minmax_scale(const Tensor& input, int bits) {
  check_nonempty(input);
  check_bits(bits);
  double lo = min_value(input);
  double hi = max_value(input);
  if (lo == hi) throw ZeroRange();

  const double levels = static_cast<double>(state_count(bits) - 1);
  MinMaxScaleResult res;
  res.alpha = (hi - lo) / levels;
  res.beta = lo;
  res.scaled.reserve(input.size());
  for (double x : input.data()) res.scaled.push_back((x - lo) / (hi - lo) * levels);
  return res;
}

QuantParams minmax_params(const Tensor& input, int bits) {
  MinMaxScaleResult s = minmax_scale(input, bits);
  QuantParams p;
  p.scheme = Scheme::MinMax;
  p.bits = bits;
  p.alpha = s.alpha;
  p.beta = s.beta;
  return p;
}

QuantParams log_minmax_params(const Tensor& input, int bits, double epsilon) {
  check_nonempty(input);
  check_bits(bits);
  if (epsilon <= 0.0) throw InvalidParams("epsilon must be > 0");
  std::vector<double> mags(input.size());
  for (std::size_t i = 0; i < input.size(); ++i) {
    mags[i] = std::log(std::abs(input[i]) + epsilon);
  }
  Tensor logs(input.name(), input.shape(), std::move(mags));
  MinMaxScaleResult s = minmax_scale(logs, bits);  // ZeroRange when all |w| equal
  QuantParams p;
  p.scheme = Scheme::LogMinMax;
  p.bits = bits;
  p.alpha = s.alpha;
  p.beta = s.beta;
  p.epsilon = epsilon;
  return p;
}

namespace {

// Fixed log-domain grid; builds the sign-aware histogram.
QuantOutcome log_quantize_with_grid(const Tensor& input, double alpha, double beta, int bits,
                                    double epsilon) {
  const long long max_code = state_count(bits) - 1;
  const auto& w = input.data();
  QuantOutcome out;
  out.codes.resize(w.size());
  std::vector<double> recon(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    double s = sign_of(w[i]);
    double m = std::log(std::abs(w[i]) + epsilon);
    int z = clamp_code(round_half_away((m - beta) / alpha), max_code);
    out.codes[i] = z;
    // exp(ln(eps)) can land one ulp under eps; magnitudes never go negative.
    double mag = std::max(std::exp(beta + alpha * static_cast<double>(z)) - epsilon, 0.0);
    recon[i] = s * mag;
    long long key = s >= 0.0 ? z : -(static_cast<long long>(z) + 1);
    out.state_histogram[key] += 1;
  }
  out.quantized = Tensor(input.name(), input.shape(), std::move(recon));
  out.l2_error = sum_squared_error(w, out.quantized.data());
  std::set<int> distinct(out.codes.begin(), out.codes.end());
  out.states_used = static_cast<int>(distinct.size());
  return out;
}

QuantOutcome tanh_quantize_impl(const Tensor& input, int bits, double delta) {
  const long long max_code = state_count(bits) - 1;
  const double levels = static_cast<double>(max_code);
  const auto& w = input.data();
  QuantOutcome out;
  out.codes.resize(w.size());
  std::vector<double> recon(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    double scaled = (std::tanh(w[i]) + 1.0) / 2.0 * levels;
    int z = clamp_code(round_half_away(scaled), max_code);
    out.codes[i] = z;
    double u = 2.0 * static_cast<double>(z) / levels - 1.0;
    u = std::clamp(u, -1.0 + delta, 1.0 - delta);
    recon[i] = std::atanh(u);
  }
  out.quantized = Tensor(input.name(), input.shape(), std::move(recon));
  out.l2_error = sum_squared_error(w, out.quantized.data());
  fill_code_stats(out);
  return out;
}

}  // namespace

QuantOutcome log_quantize(const Tensor& input, int bits, double epsilon) {
  check_nonempty(input);
  check_bits(bits);
  if (epsilon <= 0.0) throw InvalidParams("epsilon must be > 0");

  // Zero log-domain range: one state represents every magnitude exactly, so
  // s * |w| reproduces the input (this covers all-zero and +/-c tensors).
  double first_mag = std::abs(input[0]);
  bool constant_mag = std::all_of(input.data().begin(), input.data().end(),
                                  [&](double v) { return std::abs(v) == first_mag; });
  if (constant_mag) {
    QuantOutcome out;
    out.quantized = input;
    out.codes.assign(input.size(), 0);
    out.l2_error = 0.0;
    out.states_used = 1;
    for (double v : input.data()) {
      out.state_histogram[sign_of(v) >= 0.0 ? 0 : -1] += 1;
    }
    return out;
  }

  QuantParams grid = log_minmax_params(input, bits, epsilon);
  return log_quantize_with_grid(input, grid.alpha, grid.beta, bits, epsilon);
}

QuantOutcome tanh_quantize(const Tensor& input, int bits, double saturation_delta) {
  check_nonempty(input);
  check_bits(bits);
  if (saturation_delta <= 0.0 || saturation_delta >= 1.0) {
    throw InvalidParams("saturation delta must be in (0, 1)");
  }
  return tanh_quantize_impl(input, bits, saturation_delta);
}

QuantOutcome quantize(const Tensor& input, const QuantParams& params) {
  check_nonempty(input);
  check_bits(params.bits);

  if (is_constant(input)) return identity_outcome(input);

  switch (params.scheme) {
    case Scheme::MinMax:
    case Scheme::EmLinear:
      if (params.alpha <= 0.0) {
        throw InvalidParams("alpha must be > 0 for linear schemes on non-constant data");
      }
      return linear_quantize(input, params.alpha, params.beta, params.bits);
    case Scheme::LogMinMax:
      if (params.epsilon <= 0.0) throw InvalidParams("epsilon must be > 0");
      if (params.alpha <= 0.0) {
        throw InvalidParams("alpha must be > 0 for the log-domain grid on non-constant data");
      }
      return log_quantize_with_grid(input, params.alpha, params.beta, params.bits, params.epsilon);
    case Scheme::Tanh:
      if (params.saturation_delta <= 0.0 || params.saturation_delta >= 1.0) {
        throw InvalidParams("saturation delta must be in (0, 1)");
      }
      return tanh_quantize_impl(input, params.bits, params.saturation_delta);
  }
  throw InvalidParams("unknown scheme");
}

std::vector<int> em_estep(const Tensor& input, double alpha, double beta, int bits) {
  check_nonempty(input);
  check_bits(bits);
  if (alpha <= 0.0) throw InvalidParams("alpha must be > 0 in the E-step");
  const long long max_code = state_count(bits) - 1;
  std::vector<int> codes(input.size());
  for (std::size_t i = 0; i < input.size(); ++i) {
    codes[i] = clamp_code(round_half_away((input[i] - beta) / alpha), max_code);
  }
  return codes;
}

std::pair<double, double> em_mstep(const Tensor& input, const std::vector<int>& codes) {
  check_nonempty(input);
  if (codes.size() != input.size()) {
    throw ShapeMismatch("codes length " + std::to_string(codes.size()) + " != input length " +
                        std::to_string(input.size()));
  }
  const double n = static_cast<double>(input.size());
  double sw = 0.0, sz = 0.0, swz = 0.0, szz = 0.0;
  for (std::size_t i = 0; i < input.size(); ++i) {
    double z = static_cast<double>(codes[i]);
    sw += input[i];
    sz += z;
    swz += input[i] * z;
    szz += z * z;
  }
  double ew = sw / n, ez = sz / n, ewz = swz / n, ezz = szz / n;
  double denom = ezz - ez * ez;
  if (denom <= 0.0) throw DegenerateCodes();
  double alpha = (ewz - ew * ez) / denom;
  double beta = ew - alpha * ez;
  return {alpha, beta};
}

namespace {

double linear_objective(const Tensor& input, const std::vector<int>& codes, double alpha,
                        double beta) {
  double sse = 0.0;
  for (std::size_t i = 0; i < input.size(); ++i) {
    double d = input[i] - (beta + alpha * static_cast<double>(codes[i]));
    sse += d * d;
  }
  return sse;
}

}  // namespace

namespace {

// One EM run from a given start. Alternates E/M until the codes are stable
// under the refit params, the relative improvement drops below tol, or
// max_iter is hit. The recorded objective sequence is non-increasing.
EmFitResult em_run(const Tensor& input, int bits, int max_iter, double tol, double alpha,
                   double beta) {
  EmFitResult res;
  res.params.scheme = Scheme::EmLinear;
  res.params.bits = bits;

  std::vector<int> codes = em_estep(input, alpha, beta, bits);
  double prev_objective = std::numeric_limits<double>::infinity();

  for (int t = 1; t <= max_iter; ++t) {
    bool all_equal = std::all_of(codes.begin(), codes.end(),
                                 [&](int z) { return z == codes.front(); });
    if (all_equal) {
      // Zero code variance: keep alpha, refit the offset (still the optimal
      // beta for this alpha), and flag the trace.
      beta = mean_value(input) - alpha * static_cast<double>(codes.front());
      res.trace.degenerate_mstep = true;
    } else {
      auto [a, b] = em_mstep(input, codes);
      if (a <= 0.0) {
        // Comonotone codes make cov(w, z) >= 0; a non-positive alpha can only
        // be numerical noise. Fall back like the degenerate case.
        beta = mean_value(input) - alpha * (std::accumulate(codes.begin(), codes.end(), 0.0) /
                                            static_cast<double>(codes.size()));
        res.trace.degenerate_mstep = true;
      } else {
        alpha = a;
        beta = b;
      }
    }

    double objective = linear_objective(input, codes, alpha, beta);
    res.trace.iterations.push_back({alpha, beta, objective});
    res.trace.steps_taken = t;

    std::vector<int> next_codes = em_estep(input, alpha, beta, bits);
    if (next_codes == codes) {
      res.trace.converged = true;
      break;
    }
    if (prev_objective - objective <= tol * std::max(prev_objective, 1e-300) &&
        std::isfinite(prev_objective)) {
      res.trace.converged = true;
      codes = std::move(next_codes);
      break;
    }
    prev_objective = objective;
    codes = std::move(next_codes);
  }

  res.params.alpha = alpha;
  res.params.beta = beta;
  res.outcome = linear_quantize(input, alpha, beta, bits);
  return res;
}

}  // namespace

EmFitResult em_fit(const Tensor& input, int bits, int max_iter, double tol) {
  check_nonempty(input);
  check_bits(bits);
  if (max_iter < 1) throw InvalidParams("max_iter must be >= 1");
  if (tol <= 0.0) throw InvalidParams("tol must be > 0");

  if (is_constant(input)) {
    EmFitResult res;
    res.params.scheme = Scheme::EmLinear;
    res.params.bits = bits;
    res.params.alpha = 1.0;
    res.params.beta = input[0];
    res.outcome = identity_outcome(input);
    res.trace.converged = true;
    res.trace.steps_taken = 0;
    return res;
  }

  // Primary start: the minmax point. This alone already guarantees the fit
  // never does worse than plain minmax quantization.
  MinMaxScaleResult init = minmax_scale(input, bits);
  EmFitResult best = em_run(input, bits, max_iter, tol, init.alpha, init.beta);

  // The EM objective is multimodal and the range-midpoint start reliably
  // strands unimodal data in a poor fixed point. Rerun from a short ladder of
  // split starts (levels spanning the below/above-quantile means) and keep
  // the best fixed point; ties keep the minmax run.
  std::vector<double> sorted = input.data();
  std::sort(sorted.begin(), sorted.end());
  const double levels = static_cast<double>(state_count(bits) - 1);
  for (double quantile : {0.25, 0.5, 0.75}) {
    auto cut = static_cast<std::size_t>(quantile * static_cast<double>(sorted.size()));
    if (cut == 0 || cut >= sorted.size()) continue;
    double lower = std::accumulate(sorted.begin(), sorted.begin() + cut, 0.0) /
                   static_cast<double>(cut);
    double upper = std::accumulate(sorted.begin() + cut, sorted.end(), 0.0) /
                   static_cast<double>(sorted.size() - cut);
    if (upper <= lower) continue;
    EmFitResult split = em_run(input, bits, max_iter, tol, (upper - lower) / levels, lower);
    if (split.outcome.l2_error < best.outcome.l2_error) best = std::move(split);
  }
  return best;
}

UtilizationReport quant_report(const QuantOutcome& outcome, int bits) {
  check_bits(bits);
  UtilizationReport rep;
  rep.states_used = outcome.states_used;
  rep.l2_error = outcome.l2_error;

  const double n = static_cast<double>(outcome.codes.size());
  if (n == 0.0) return rep;

  double entropy = 0.0;
  for (const auto& [state, count] : outcome.state_histogram) {
    double p = static_cast<double>(count) / n;
    if (p > 0.0) entropy -= p * std::log(p);
  }
  rep.entropy = entropy;

  const long long max_code = state_count(bits) - 1;
  std::size_t extremum = 0;
  for (int z : outcome.codes) {
    if (z == 0 || z == max_code) ++extremum;
  }
  rep.extremum_fraction = static_cast<double>(extremum) / n;
  return rep;
}

}  // namespace qgan
