#include <doctest.h>

#include <cmath>
#include <set>

#include "oracles.hpp"
#include "qgan/errors.hpp"
#include "qgan/quant.hpp"
#include "qgan/tensor_io.hpp"

using namespace qgan;

namespace {

Tensor vec(std::vector<double> data) { return Tensor::vector("t", std::move(data)); }

QuantOutcome minmax_quantize(const Tensor& t, int bits) {
  return quantize(t, minmax_params(t, bits));
}

}  // namespace

TEST_CASE("minmax_scale hand examples") {
  auto s = minmax_scale(vec({-1.0, 2.0}), 2);
  CHECK(s.alpha == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(s.beta == doctest::Approx(-1.0).epsilon(1e-12));

  auto s2 = minmax_scale(vec({0.0, 1.0}), 1);
  CHECK(s2.alpha == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(s2.beta == doctest::Approx(0.0).epsilon(1e-12));

  CHECK_THROWS_AS(minmax_scale(vec({5.0, 5.0}), 3), ZeroRange);
}

TEST_CASE("minmax quantize hand examples") {
  auto out = minmax_quantize(vec({-1.0, 0.0, 2.0}), 2);
  CHECK(out.codes == std::vector<int>{0, 1, 3});
  CHECK(out.l2_error == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(out.quantized[0] == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(out.quantized[1] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(out.quantized[2] == doctest::Approx(2.0).epsilon(1e-12));

  auto half = minmax_quantize(vec({0.0, 0.5, 1.0}), 2);
  CHECK(half.codes == std::vector<int>{0, 2, 3});  // 1.5 rounds away from zero
  CHECK(half.quantized[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(half.quantized[2] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("constant tensors quantize to themselves under every scheme") {
  Tensor c = vec({3.25, 3.25, 3.25});
  for (Scheme scheme : {Scheme::MinMax, Scheme::LogMinMax, Scheme::Tanh, Scheme::EmLinear}) {
    for (int bits : {1, 3, 8}) {
      QuantParams p;
      p.scheme = scheme;
      p.bits = bits;
      auto out = quantize(c, p);
      CHECK(out.quantized.data() == c.data());
      CHECK(out.l2_error == 0.0);
      CHECK(out.states_used == 1);
    }
  }
}

TEST_CASE("quantize validates params") {
  CHECK_THROWS_AS(quantize(Tensor{}, QuantParams{}), EmptyTensor);

  QuantParams bad_bits;
  bad_bits.bits = 0;
  CHECK_THROWS_AS(quantize(vec({1.0, 2.0}), bad_bits), InvalidParams);
  bad_bits.bits = 17;
  CHECK_THROWS_AS(quantize(vec({1.0, 2.0}), bad_bits), InvalidParams);

  QuantParams bad_alpha;
  bad_alpha.scheme = Scheme::EmLinear;
  bad_alpha.bits = 2;
  bad_alpha.alpha = 0.0;
  CHECK_THROWS_AS(quantize(vec({1.0, 2.0}), bad_alpha), InvalidParams);

  QuantParams bad_eps;
  bad_eps.scheme = Scheme::LogMinMax;
  bad_eps.bits = 2;
  bad_eps.epsilon = 0.0;
  CHECK_THROWS_AS(quantize(vec({1.0, 2.0}), bad_eps), InvalidParams);
}

TEST_CASE("log quantize hand examples") {
  auto zeros = log_quantize(vec({0.0, 0.0, 0.0}), 2);
  CHECK(zeros.l2_error == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(zeros.quantized.data() == std::vector<double>{0.0, 0.0, 0.0});

  auto pm1 = log_quantize(vec({-1.0, 1.0}), 1);
  CHECK(pm1.quantized[0] == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(pm1.quantized[1] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(pm1.l2_error == doctest::Approx(0.0).epsilon(1e-12));

  auto ends = log_quantize(vec({0.1, 10.0}), 1);
  CHECK(ends.quantized[0] == doctest::Approx(0.1).epsilon(1e-6));
  CHECK(ends.quantized[1] == doctest::Approx(10.0).epsilon(1e-6));

  CHECK_THROWS_AS(log_quantize(vec({1.0, 2.0}), 2, 0.0), InvalidParams);
  CHECK_THROWS_AS(log_quantize(Tensor{}, 2), EmptyTensor);
}

TEST_CASE("log quantize keeps signed states distinct in the histogram") {
  // Small magnitudes of both signs share magnitude code 0 but not a state.
  auto out = log_quantize(vec({-0.001, 0.001, -5.0, 5.0}), 2);
  CHECK(out.state_histogram.count(0) == 1);
  CHECK(out.state_histogram.count(-1) == 1);
  std::size_t total = 0;
  for (const auto& [key, count] : out.state_histogram) total += count;
  CHECK(total == 4);
}

TEST_CASE("tanh quantize hand examples") {
  auto zero = tanh_quantize(vec({0.0}), 2);
  CHECK(zero.codes == std::vector<int>{2});  // scaled 1.5 rounds away from zero
  CHECK(zero.quantized[0] == doctest::Approx(std::atanh(1.0 / 3.0)).epsilon(1e-9));
  CHECK(zero.quantized[0] == doctest::Approx(0.346574).epsilon(1e-5));

  auto big = tanh_quantize(vec({100.0}), 2, 1e-6);
  CHECK(big.codes == std::vector<int>{3});
  CHECK(big.quantized[0] == doctest::Approx(0.5 * std::log((2.0 - 1e-6) / 1e-6)).epsilon(1e-9));
  CHECK(big.quantized[0] == doctest::Approx(7.25434).epsilon(1e-5));

  auto one_bit = tanh_quantize(vec({-100.0, -0.2, 0.2, 100.0}), 1);
  CHECK(one_bit.codes == std::vector<int>{0, 0, 1, 1});
  double v = std::atanh(1.0 - kDefaultTanhDelta);
  CHECK(one_bit.quantized[0] == doctest::Approx(-v).epsilon(1e-12));
  CHECK(one_bit.quantized[1] == doctest::Approx(-v).epsilon(1e-12));
  CHECK(one_bit.quantized[2] == doctest::Approx(v).epsilon(1e-12));
  CHECK(one_bit.quantized[3] == doctest::Approx(v).epsilon(1e-12));

  CHECK_THROWS_AS(tanh_quantize(vec({1.0}), 2, 0.0), InvalidParams);
  CHECK_THROWS_AS(tanh_quantize(vec({1.0}), 2, 1.0), InvalidParams);
}

TEST_CASE("em_estep hand examples") {
  CHECK(em_estep(vec({-1.0, -1.0, 1.0, 1.0}), 2.0, -1.0, 1) == std::vector<int>{0, 0, 1, 1});

  auto huge = em_estep(vec({-3.0, 0.5, 400.0}), 1e12, 0.0, 4);
  CHECK(huge == std::vector<int>{0, 0, 0});

  CHECK(em_estep(vec({0.0, 0.1, 0.2, 1.0}), 0.9, 0.1, 1) == std::vector<int>{0, 0, 0, 1});

  CHECK_THROWS_AS(em_estep(vec({1.0}), 0.0, 0.0, 1), InvalidParams);
  CHECK_THROWS_AS(em_estep(vec({1.0}), -1.0, 0.0, 1), InvalidParams);
}

TEST_CASE("em_mstep hand examples") {
  auto [a1, b1] = em_mstep(vec({-1.0, -1.0, 1.0, 1.0}), {0, 0, 1, 1});
  CHECK(a1 == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(b1 == doctest::Approx(-1.0).epsilon(1e-12));

  auto [a2, b2] = em_mstep(vec({0.0, 0.1, 0.2, 1.0}), {0, 0, 0, 1});
  CHECK(a2 == doctest::Approx(0.9).epsilon(1e-12));
  CHECK(b2 == doctest::Approx(0.1).epsilon(1e-12));

  CHECK_THROWS_AS(em_mstep(vec({3.0, 3.0, 3.0}), {1, 1, 1}), DegenerateCodes);
  CHECK_THROWS_AS(em_mstep(vec({1.0, 2.0}), {0, 1, 1}), ShapeMismatch);
}

TEST_CASE("em_fit hand examples") {
  auto sym = em_fit(vec({-1.0, -1.0, 1.0, 1.0}), 1);
  CHECK(sym.params.alpha == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(sym.params.beta == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(sym.outcome.l2_error == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(sym.trace.converged);
  CHECK(sym.trace.steps_taken == 1);

  auto outlier = em_fit(vec({0.0, 0.0, 0.0, 4.0}), 1);
  CHECK(outlier.outcome.l2_error == doctest::Approx(0.0).epsilon(1e-12));
  std::set<double> states(outlier.outcome.quantized.data().begin(),
                          outlier.outcome.quantized.data().end());
  CHECK(states == std::set<double>{0.0, 4.0});

  auto skewed = em_fit(vec({0.0, 0.1, 0.2, 1.0}), 1);
  CHECK(skewed.params.alpha == doctest::Approx(0.9).epsilon(1e-9));
  CHECK(skewed.params.beta == doctest::Approx(0.1).epsilon(1e-9));
  CHECK(skewed.outcome.l2_error == doctest::Approx(0.02).epsilon(1e-9));
  auto minmax = minmax_quantize(vec({0.0, 0.1, 0.2, 1.0}), 1);
  CHECK(minmax.l2_error == doctest::Approx(0.05).epsilon(1e-9));

  CHECK_THROWS_AS(em_fit(Tensor{}, 1), EmptyTensor);
}

TEST_CASE("em_fit short-circuits constant input") {
  auto res = em_fit(vec({2.5, 2.5}), 3);
  CHECK(res.outcome.l2_error == 0.0);
  CHECK(res.outcome.quantized.data() == std::vector<double>{2.5, 2.5});
  CHECK(res.trace.converged);
  CHECK(res.trace.steps_taken == 0);
}

TEST_CASE("quant_report values") {
  QuantParams p;
  p.scheme = Scheme::MinMax;
  p.bits = 2;
  auto constant = quantize(vec({1.0, 1.0, 1.0}), p);
  auto rep = quant_report(constant, 2);
  CHECK(rep.states_used == 1);
  CHECK(rep.entropy == doctest::Approx(0.0).epsilon(1e-12));

  auto em = em_fit(vec({-1.0, -1.0, 1.0, 1.0}), 1);
  auto em_rep = quant_report(em.outcome, 1);
  CHECK(em_rep.states_used == 2);
  CHECK(em_rep.entropy == doctest::Approx(std::log(2.0)).epsilon(1e-12));

  Tensor gauss = random_tensor(RandomKind::Gaussian, 1000, 7);
  auto tanh_out = tanh_quantize(gauss, 2);
  auto tanh_rep = quant_report(tanh_out, 2);
  CHECK(tanh_rep.states_used <= 4);
  CHECK(std::isfinite(tanh_rep.entropy));
}

TEST_CASE("idempotence: fixed params quantize their own output exactly") {
  for (std::uint64_t seed : {11u, 12u, 13u, 14u}) {
    for (auto kind : {RandomKind::Gaussian, RandomKind::Uniform, RandomKind::Bimodal}) {
      Tensor t = random_tensor(kind, 97, seed);
      for (int bits : {1, 2, 4, 8}) {
        QuantParams mm = minmax_params(t, bits);
        auto once = quantize(t, mm);
        auto twice = quantize(once.quantized, mm);
        CHECK(twice.quantized.data() == once.quantized.data());

        auto em = em_fit(t, bits);
        auto em_twice = quantize(em.outcome.quantized, em.params);
        CHECK(em_twice.quantized.data() == em.outcome.quantized.data());

        QuantParams lg = log_minmax_params(t, bits);
        auto log_once = quantize(t, lg);
        auto log_twice = quantize(log_once.quantized, lg);
        CHECK(log_twice.quantized.data() == log_once.quantized.data());

        QuantParams th;
        th.scheme = Scheme::Tanh;
        th.bits = bits;
        auto tanh_once = quantize(t, th);
        auto tanh_twice = quantize(tanh_once.quantized, th);
        CHECK(tanh_twice.quantized.data() == tanh_once.quantized.data());
      }
    }
  }
}

TEST_CASE("codes stay in range and states_used is bounded") {
  for (std::uint64_t seed : {21u, 22u}) {
    Tensor t = random_tensor(RandomKind::Bimodal, 128, seed);
    for (int bits : {1, 2, 3, 5}) {
      for (const QuantOutcome& out :
           {minmax_quantize(t, bits), log_quantize(t, bits), tanh_quantize(t, bits),
            em_fit(t, bits).outcome}) {
        long long max_code = state_count(bits) - 1;
        for (int z : out.codes) {
          CHECK(z >= 0);
          CHECK(z <= max_code);
        }
        CHECK(out.states_used <= state_count(bits));
        CHECK(out.codes.size() == t.size());
      }
    }
  }
}

TEST_CASE("EM objective is monotone and dominates minmax") {
  int checked = 0;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    auto kind = static_cast<RandomKind>(seed % 3);
    std::size_t n = 4 + (seed * 37) % 509;
    Tensor t = random_tensor(kind, n, 1000 + seed);
    for (int bits : {1, 2, 3, 4}) {
      auto res = em_fit(t, bits);
      for (std::size_t i = 1; i < res.trace.iterations.size(); ++i) {
        CHECK(res.trace.iterations[i].objective <=
              res.trace.iterations[i - 1].objective + 1e-12);
      }
      auto mm = minmax_quantize(t, bits);
      CHECK(res.outcome.l2_error <= mm.l2_error + 1e-12);
      ++checked;
    }
  }
  CHECK(checked == 120);
}

TEST_CASE("M-step output is a local optimum of the squared error") {
  Rng rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    std::size_t n = 8 + static_cast<std::size_t>(rng.uniform_index(56));
    std::vector<double> data(n);
    for (double& v : data) v = rng.normal(0.0, 1.0);
    Tensor t = Tensor::vector("t", data);
    std::vector<int> codes = em_estep(t, 0.7, -1.0, 2);
    bool all_equal = std::all_of(codes.begin(), codes.end(), [&](int z) { return z == codes[0]; });
    if (all_equal) continue;

    auto [alpha, beta] = em_mstep(t, codes);
    auto objective = [&](double a, double b) {
      double sse = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        double d = data[i] - (a * codes[i] + b);
        sse += d * d;
      }
      return sse;
    };
    double base = objective(alpha, beta);
    for (int da = -1; da <= 1; ++da) {
      for (int db = -1; db <= 1; ++db) {
        if (da == 0 && db == 0) continue;
        CHECK(objective(alpha + 1e-3 * da, beta + 1e-3 * db) >= base - 1e-12);
      }
    }
  }
}

TEST_CASE("1-bit EM matches the exhaustive split oracle on the hand examples") {
  for (const auto& [data, expected] :
       std::vector<std::pair<std::vector<double>, double>>{{{-1.0, -1.0, 1.0, 1.0}, 0.0},
                                                           {{0.0, 0.0, 0.0, 4.0}, 0.0},
                                                           {{0.0, 0.1, 0.2, 1.0}, 0.02}}) {
    auto best = oracle::best_two_cluster_split(data);
    CHECK(best.sse == doctest::Approx(expected).epsilon(1e-12));
    auto fit = em_fit(Tensor::vector("t", data), 1);
    CHECK(fit.outcome.l2_error == doctest::Approx(best.sse).epsilon(1e-9));
  }
}

TEST_CASE("1-bit EM is near the oracle on random tensors") {
  int total = 0, within = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    auto kind = static_cast<RandomKind>(seed % 3);
    std::size_t n = 4 + (seed * 13) % 61;
    Tensor t = random_tensor(kind, n, 4000 + seed);
    auto best = oracle::best_two_cluster_split(t.data());
    auto fit = em_fit(t, 1);
    ++total;
    if (fit.outcome.l2_error <= 1.02 * best.sse + 1e-12) ++within;

    // When the minmax initialization already induces the optimal split, the
    // fit must land exactly on the oracle optimum.
    auto init = minmax_scale(t, 1);
    auto init_codes = em_estep(t, init.alpha, init.beta, 1);
    if (oracle::assignment_sse(t.data(), init_codes) <= best.sse + 1e-12) {
      CHECK(fit.outcome.l2_error == doctest::Approx(best.sse).epsilon(1e-9));
    }
  }
  CHECK(within >= total * 95 / 100);
}

TEST_CASE("tanh-Q degenerates: endpoint states sit far from the weight scale") {
  Tensor gauss = random_tensor(RandomKind::Gaussian, 10000, 7, 0.02);
  auto out = tanh_quantize(gauss, 2);
  double endpoint = std::atanh(1.0 - kDefaultTanhDelta);
  CHECK(endpoint >= 5.0);
  for (double w : gauss.data()) {
    CHECK(std::abs(endpoint - w) >= 4.9);
    CHECK(std::abs(-endpoint - w) >= 4.9);
  }
  auto rep = quant_report(out, 2);
  CHECK(1.0 - rep.extremum_fraction >= 0.99);  // interior states hold the mass
}

TEST_CASE("integer-grid data is lossless under minmax") {
  for (int bits : {1, 2, 3, 4}) {
    std::vector<double> grid(state_count(bits));
    for (std::size_t i = 0; i < grid.size(); ++i) grid[i] = static_cast<double>(i);
    Tensor t = Tensor::vector("grid", grid);
    auto out = quantize(t, minmax_params(t, bits));
    CHECK(out.l2_error == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(out.quantized.data() == grid);
  }
}
