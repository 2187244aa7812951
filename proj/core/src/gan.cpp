#include "qgan/gan.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <string>

#include "qgan/errors.hpp"
#include "qgan/tensor_io.hpp"

namespace qgan {

std::vector<std::pair<double, double>> RingDataset::centers() const {
  std::vector<std::pair<double, double>> c;
  c.reserve(mode_count);
  for (std::size_t j = 0; j < mode_count; ++j) {
    double theta = 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(mode_count);
    c.emplace_back(radius * std::cos(theta), radius * std::sin(theta));
  }
  return c;
}

Tensor RingDataset::sample(std::size_t n, Rng& rng) const {
  auto cs = centers();
  std::vector<double> data(n * 2);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& c = cs[rng.uniform_index(mode_count)];
    data[2 * i] = c.first + rng.normal(0.0, sigma);
    data[2 * i + 1] = c.second + rng.normal(0.0, sigma);
  }
  return Tensor::matrix("ring", n, 2, std::move(data));
}

namespace {

double clamp_prob(double p) { return std::clamp(p, kProbClamp, 1.0 - kProbClamp); }

void check_prob_tensor(const Tensor& t, const char* which) {
  if (t.rank() != 2 || t.cols() != 1 || t.rows() == 0) {
    throw ShapeMismatch(std::string(which) + " must be a non-empty [B, 1] tensor");
  }
}

}  // namespace

GanLosses gan_losses(const Tensor& d_real, const Tensor& d_fake) {
  check_prob_tensor(d_real, "d_real");
  check_prob_tensor(d_fake, "d_fake");
  if (d_real.rows() != d_fake.rows()) throw ShapeMismatch("d_real and d_fake batch sizes differ");

  const double n = static_cast<double>(d_real.rows());
  GanLosses losses;
  for (double p : d_real.data()) losses.d_loss -= std::log(clamp_prob(p)) / n;
  for (double p : d_fake.data()) {
    losses.d_loss -= std::log(1.0 - clamp_prob(p)) / n;
    losses.g_loss -= std::log(clamp_prob(p)) / n;
  }
  return losses;
}

namespace {

bool clamped(double p) { return p <= kProbClamp || p >= 1.0 - kProbClamp; }

}  // namespace

GanLossGrads gan_loss_grads(const Tensor& d_real, const Tensor& d_fake) {
  check_prob_tensor(d_real, "d_real");
  check_prob_tensor(d_fake, "d_fake");

  GanLossGrads grads;
  const double nr = static_cast<double>(d_real.rows());
  std::vector<double> gr(d_real.size(), 0.0);
  for (std::size_t i = 0; i < d_real.size(); ++i) {
    if (!clamped(d_real[i])) gr[i] = -1.0 / (nr * d_real[i]);
  }
  grads.d_wrt_real = Tensor::matrix("d_real_grad", d_real.rows(), 1, std::move(gr));

  const double nf = static_cast<double>(d_fake.rows());
  std::vector<double> gf(d_fake.size(), 0.0);
  std::vector<double> gg(d_fake.size(), 0.0);
  for (std::size_t i = 0; i < d_fake.size(); ++i) {
    if (!clamped(d_fake[i])) {
      gf[i] = 1.0 / (nf * (1.0 - d_fake[i]));
      gg[i] = -1.0 / (nf * d_fake[i]);
    }
  }
  grads.d_wrt_fake = Tensor::matrix("d_fake_grad", d_fake.rows(), 1, std::move(gf));
  grads.g_wrt_fake = Tensor::matrix("g_fake_grad", d_fake.rows(), 1, std::move(gg));
  return grads;
}

Mlp quantized_mlp(const Mlp& mlp, std::optional<int> bits, Scheme scheme) {
  if (!bits) return mlp;
  Mlp out = mlp;
  for (Layer& layer : out.layers) {
    if (is_constant(layer.weight)) continue;  // exactly representable
    switch (scheme) {
      case Scheme::EmLinear:
        layer.weight = em_fit(layer.weight, *bits).outcome.quantized;
        break;
      case Scheme::MinMax:
        layer.weight = quantize(layer.weight, minmax_params(layer.weight, *bits)).quantized;
        break;
      case Scheme::LogMinMax:
        layer.weight = log_quantize(layer.weight, *bits).quantized;
        break;
      case Scheme::Tanh:
        layer.weight = tanh_quantize(layer.weight, *bits).quantized;
        break;
    }
  }
  return out;
}

namespace {

void check_bit_option(const std::optional<int>& bits, const char* which) {
  if (bits && (*bits < kMinBits || *bits > kMaxBits)) {
    throw InvalidParams(std::string(which) + " must be in [1, 16]");
  }
}

void validate_config(const GanConfig& config) {
  check_bit_option(config.d_bits, "d_bits");
  check_bit_option(config.g_bits, "g_bits");
  if (config.gen_layers.size() < 2 || config.disc_layers.size() < 2) {
    throw InvalidParams("generator and discriminator need at least one layer");
  }
  if (config.gen_layers.front() != config.noise_dim) {
    throw ShapeMismatch("gen_layers[0] must equal noise_dim");
  }
  if (config.gen_layers.back() != 2) throw ShapeMismatch("generator must output 2-D points");
  if (config.disc_layers.front() != 2) throw ShapeMismatch("discriminator must take 2-D points");
  if (config.disc_layers.back() != 1) throw ShapeMismatch("discriminator must output one probability");
  if (config.batch_size < 1) throw InvalidParams("batch_size must be >= 1");
  if (config.learning_rate < 0.0) throw InvalidParams("learning_rate must be >= 0");
}

Tensor normal_noise(std::size_t n, std::size_t dim, Rng& rng) {
  std::vector<double> data(n * dim);
  for (double& v : data) v = rng.normal(0.0, 1.0);
  return Tensor::matrix("noise", n, dim, std::move(data));
}

void accumulate(Gradients& into, const Gradients& other) {
  for (std::size_t li = 0; li < into.weight_grads.size(); ++li) {
    auto& wg = into.weight_grads[li].data();
    const auto& owg = other.weight_grads[li].data();
    for (std::size_t i = 0; i < wg.size(); ++i) wg[i] += owg[i];
    auto& bg = into.bias_grads[li].data();
    const auto& obg = other.bias_grads[li].data();
    for (std::size_t i = 0; i < bg.size(); ++i) bg[i] += obg[i];
  }
}

}  // namespace

GanTrainer::GanTrainer(GanConfig config, RingDataset dataset)
    : config_(std::move(config)),
      dataset_(std::move(dataset)),
      data_rng_(derive_seed(config_.seed ^ splitmix64(dataset_.seed), "train.data")),
      noise_rng_(derive_seed(config_.seed, "train.noise")) {
  validate_config(config_);
  Rng g_init(derive_seed(config_.seed, "init.g"));
  Rng d_init(derive_seed(config_.seed, "init.d"));
  model_.generator = make_mlp(config_.gen_layers, Activation::Relu, Activation::Identity, g_init);
  for (double& w : model_.generator.layers.back().weight.data()) w *= 3.0;  // EXPERIMENT
  model_.discriminator =
      make_mlp(config_.disc_layers, Activation::Relu, Activation::Sigmoid, d_init);
  model_.d_bits = config_.d_bits;
  model_.g_bits = config_.g_bits;
  model_.d_scheme = config_.d_scheme;
  model_.g_scheme = config_.g_scheme;
  d_opt_ = AdamState::like(model_.discriminator);
  g_opt_ = AdamState::like(model_.generator);
  adam_ = {config_.learning_rate, config_.adam_beta1, config_.adam_beta2, 1e-8};
}

GanLosses GanTrainer::step() {
  Tensor real = dataset_.sample(config_.batch_size, data_rng_);
  Tensor noise_d = normal_noise(config_.batch_size, config_.noise_dim, noise_rng_);
  Tensor noise_g = normal_noise(config_.batch_size, config_.noise_dim, noise_rng_);
  return step(real, noise_d, noise_g);
}

GanLosses GanTrainer::step(const Tensor& real, const Tensor& noise_d, const Tensor& noise_g) {
  GanLosses losses;

  // Discriminator update: ascend log D(x) + log(1 - D(G(z))), written as a
  // minimization. Quantized views are refit from the masters.
  Mlp g_view = quantized_mlp(model_.generator, model_.g_bits, model_.g_scheme);
  {
    Mlp d_view = quantized_mlp(model_.discriminator, model_.d_bits, model_.d_scheme);
    Tensor fake = forward(g_view, noise_d);
    ForwardCache cache_real, cache_fake;
    Tensor p_real = forward(d_view, real, cache_real);
    Tensor p_fake = forward(d_view, fake, cache_fake);
    losses.d_loss = gan_losses(p_real, p_fake).d_loss;

    GanLossGrads loss_grads = gan_loss_grads(p_real, p_fake);
    Gradients grads = backward(d_view, cache_real, loss_grads.d_wrt_real);
    Gradients fake_grads = backward(d_view, cache_fake, loss_grads.d_wrt_fake);
    accumulate(grads, fake_grads);
    adam_update(model_.discriminator, d_opt_, grads, adam_);
  }

  // Generator update against the freshly updated discriminator,
  // non-saturating objective -log D(G(z)).
  {
    Mlp d_view = quantized_mlp(model_.discriminator, model_.d_bits, model_.d_scheme);
    ForwardCache cache_g, cache_d;
    Tensor fake = forward(g_view, noise_g, cache_g);
    Tensor p_fake = forward(d_view, fake, cache_d);

    losses.g_loss = gan_losses(p_fake, p_fake).g_loss;
    Tensor g_grad = gan_loss_grads(p_fake, p_fake).g_wrt_fake;

    Gradients d_grads = backward(d_view, cache_d, g_grad);
    Gradients g_grads = backward(g_view, cache_g, d_grads.input_grad);
    adam_update(model_.generator, g_opt_, g_grads, adam_);
  }
  return losses;
}

TrainResult train(const GanConfig& config, const RingDataset& dataset) {
  GanTrainer trainer(config, dataset);
  std::vector<HistoryRow> history;
  for (std::size_t s = 1; s <= config.steps; ++s) {
    GanLosses losses = trainer.step();
    if (s % kEvalInterval == 0 || s == config.steps) {
      QualityScore q = evaluate_quality(trainer.model(), dataset, kEvalSamples,
                                        derive_seed(config.seed, "eval") ^ s);
      history.push_back({s, losses.d_loss, losses.g_loss, q});
    }
  }
  return {trainer.model(), std::move(history)};
}

QualityScore score_samples(const Tensor& samples, const RingDataset& dataset) {
  if (samples.rank() != 2 || samples.cols() != 2) {
    throw ShapeMismatch("samples must be a [n, 2] tensor");
  }
  const std::size_t n = samples.rows();
  auto cs = dataset.centers();
  const double reach = 3.0 * dataset.sigma;

  std::vector<std::size_t> per_mode(cs.size(), 0);
  std::size_t near_any = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double x = samples.at(i, 0);
    double y = samples.at(i, 1);
    for (std::size_t j = 0; j < cs.size(); ++j) {
      if (std::abs(x - cs[j].first) <= reach && std::abs(y - cs[j].second) <= reach) {
        per_mode[j] += 1;
        near_any += 1;
        break;  // mode boxes are disjoint for any sane ring geometry
      }
    }
  }

  QualityScore q;
  for (std::size_t count : per_mode) {
    if (static_cast<double>(count) >= kCoverageShare * static_cast<double>(n)) q.covered_modes += 1;
  }
  q.hq_fraction = n == 0 ? 0.0 : static_cast<double>(near_any) / static_cast<double>(n);
  q.score = (static_cast<double>(q.covered_modes) / static_cast<double>(dataset.mode_count)) *
            q.hq_fraction;
  return q;
}

QualityScore evaluate_quality(const GanModel& model, const RingDataset& dataset,
                              std::size_t n_samples, std::uint64_t seed) {
  Rng rng(derive_seed(seed, "quality.noise"));
  Mlp g_view = quantized_mlp(model.generator, model.g_bits, model.g_scheme);
  Tensor noise = normal_noise(n_samples, model.generator.input_dim(), rng);
  Tensor samples = forward(g_view, noise);
  return score_samples(samples, dataset);
}

std::vector<Tensor> model_tensors(const GanModel& model) {
  std::vector<Tensor> out;
  auto push_net = [&out](const Mlp& net, const std::string& prefix) {
    for (std::size_t li = 0; li < net.layers.size(); ++li) {
      Tensor w = net.layers[li].weight;
      w.rename(prefix + "." + std::to_string(li) + ".w");
      Tensor b = net.layers[li].bias;
      b.rename(prefix + "." + std::to_string(li) + ".b");
      out.push_back(std::move(w));
      out.push_back(std::move(b));
    }
  };
  push_net(model.generator, "g");
  push_net(model.discriminator, "d");
  return out;
}

void export_history_csv(const std::string& path, const std::vector<HistoryRow>& history) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << "step,d_loss,g_loss,score\n";
  for (const HistoryRow& row : history) {
    out << row.step << ',' << format_number(row.d_loss) << ',' << format_number(row.g_loss) << ','
        << format_number(row.quality.score) << '\n';
  }
  out.flush();
  if (!out) throw IoError("write to '" + path + "' failed");
}

}  // namespace qgan
