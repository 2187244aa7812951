#include "qgan/search.hpp"

#include <algorithm>
#include <atomic>
#include <thread>

#include "qgan/quant.hpp"
#include "qgan/rng.hpp"

namespace qgan {

std::string_view to_string(SweepMode mode) {
  switch (mode) {
    case SweepMode::DOnly: return "d";
    case SweepMode::Both: return "both";
    case SweepMode::GOnly: return "g";
  }
  return "?";
}

std::optional<SweepMode> sweep_mode_from_string(std::string_view name) {
  if (name == "d") return SweepMode::DOnly;
  if (name == "both") return SweepMode::Both;
  if (name == "g") return SweepMode::GOnly;
  return std::nullopt;
}

std::string_view to_string(RunState state) {
  switch (state) {
    case RunState::Convergent: return "convergent";
    case RunState::Unstable: return "unstable";
    case RunState::Failed: return "failed";
  }
  return "?";
}

namespace {

QualityScore evaluate_median(Evaluator& evaluator, std::optional<int> d_bits,
                             std::optional<int> g_bits, std::uint64_t seed, int repeats) {
  if (repeats <= 1) return evaluator.evaluate(d_bits, g_bits, seed);
  std::vector<QualityScore> scores;
  scores.reserve(repeats);
  for (int r = 0; r < repeats; ++r) {
    scores.push_back(evaluator.evaluate(d_bits, g_bits, derive_seed(seed, "repeat") + r));
  }
  std::sort(scores.begin(), scores.end(),
            [](const QualityScore& a, const QualityScore& b) { return a.score < b.score; });
  return scores[scores.size() / 2];
}

}  // namespace

SearchResult multi_precision_search(Evaluator& evaluator, double quality_target, int max_bits,
                                    std::uint64_t seed, int repeats) {
  if (quality_target <= 0.0 || quality_target > 1.0) {
    throw InvalidParams("quality target must be in (0, 1]");
  }
  if (max_bits < kMinBits || max_bits > kMaxBits) {
    throw InvalidParams("max_bits must be in [1, 16]");
  }
  if (repeats < 1) throw InvalidParams("repeats must be >= 1");

  SearchResult result;
  auto run = [&](std::optional<int> d, std::optional<int> g) {
    QualityScore q;
    try {
      q = evaluate_median(evaluator, d, g, seed, repeats);
    } catch (const EvaluatorFailure& e) {
      throw EvaluatorFailure(e.what(), result.trail);
    } catch (const Error& e) {
      throw EvaluatorFailure(e.what(), result.trail);
    }
    result.trail.push_back({d, g, q.score});
    return q.score;
  };

  // Phase 1: raise k_d with G in full precision.
  bool d_satisfied = false;
  for (int k_d = 1; k_d <= max_bits; ++k_d) {
    if (run(k_d, std::nullopt) >= quality_target) {
      result.d_bits = k_d;
      d_satisfied = true;
      break;
    }
  }
  if (!d_satisfied) return result;  // satisfied = false, trail is the D phase

  // Phase 2: raise k_g with D frozen at the phase-1 result.
  for (int k_g = 1; k_g <= max_bits; ++k_g) {
    if (run(result.d_bits, k_g) >= quality_target) {
      result.g_bits = k_g;
      result.satisfied = true;
      return result;
    }
  }
  return result;  // G phase exhausted
}

SweepResult sensitivity_sweep(Evaluator& evaluator, int lo, int hi, std::uint64_t seed,
                              const std::vector<SweepMode>& modes, int jobs) {
  if (lo < kMinBits || hi > kMaxBits || lo > hi) {
    throw InvalidParams("bits range must satisfy 1 <= lo <= hi <= 16");
  }
  if (modes.empty()) throw InvalidParams("at least one sweep mode is required");
  if (jobs < 1) throw InvalidParams("jobs must be >= 1");

  SweepResult result;
  result.lo = lo;
  result.hi = hi;
  for (SweepMode mode : modes) {
    for (int bits = lo; bits <= hi; ++bits) {
      SweepCell cell;
      cell.mode = mode;
      cell.bits = bits;
      result.cells.push_back(cell);
    }
  }

  auto bits_for = [](const SweepCell& cell) {
    std::optional<int> d, g;
    if (cell.mode != SweepMode::GOnly) d = cell.bits;
    if (cell.mode != SweepMode::DOnly) g = cell.bits;
    return std::pair(d, g);
  };

  auto run_cell = [&](SweepCell& cell) {
    auto [d, g] = bits_for(cell);
    cell.quality = evaluator.evaluate(d, g, seed);
    cell.history_ref = evaluator.history_ref(d, g, seed);
  };

  int workers = std::min<int>(jobs, static_cast<int>(result.cells.size()));
  if (workers <= 1) {
    for (SweepCell& cell : result.cells) run_cell(cell);
    return result;
  }

  // Cells own independent evaluations; results land at fixed indices, so the
  // merged output does not depend on scheduling.
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = next.fetch_add(1); i < result.cells.size(); i = next.fetch_add(1)) {
          run_cell(result.cells[i]);
        }
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (std::thread& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return result;
}

RunState classify_run(const std::vector<QualityScore>& history, const ClassifyConfig& config) {
  if (history.size() < 4) {
    throw TooShort("classification needs at least 4 history entries, got " +
                   std::to_string(history.size()));
  }

  double max_score = 0.0;
  for (const QualityScore& q : history) max_score = std::max(max_score, q.score);
  if (max_score < config.fail_threshold) return RunState::Failed;

  std::size_t quartile = std::max<std::size_t>(2, (history.size() + 3) / 4);
  double tail_min = history[history.size() - quartile].score;
  double tail_max = tail_min;
  for (std::size_t i = history.size() - quartile; i < history.size(); ++i) {
    tail_min = std::min(tail_min, history[i].score);
    tail_max = std::max(tail_max, history[i].score);
  }
  if (max_score >= config.pass_threshold && tail_max - tail_min >= config.oscillation) {
    return RunState::Unstable;
  }
  return RunState::Convergent;
}

}  // namespace qgan
