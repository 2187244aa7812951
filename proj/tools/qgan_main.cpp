// qgan: command-line front end for the quantization library, the toy GAN
// harness, and the multi-precision bit-width search.
//
// Exit codes: 0 success, 1 usage error, 2 runtime error.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "qgan/errors.hpp"
#include "qgan/evaluators.hpp"
#include "qgan/gan.hpp"
#include "qgan/quant.hpp"
#include "qgan/search.hpp"
#include "qgan/tensor_io.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace qgan;

namespace {

struct GlobalOpts {
  std::uint64_t seed = 42;
  std::string out_dir = "./out";
  bool json_stdout = false;
};

void ensure_out_dir(const GlobalOpts& global) { fs::create_directories(global.out_dir); }

void emit(const GlobalOpts& global, const json& report, const std::string& report_name,
          const std::string& human_summary) {
  ensure_out_dir(global);
  std::ofstream out(fs::path(global.out_dir) / report_name, std::ios::trunc);
  if (!out) throw IoError("cannot write report to " + global.out_dir);
  out << report.dump(2) << '\n';
  if (global.json_stdout) {
    std::cout << report.dump() << std::endl;
  } else {
    std::cout << human_summary;
  }
}

std::string sanitize(const std::string& name) {
  std::string s = name;
  for (char& c : s) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') c = '_';
  }
  return s;
}

json bits_json(const std::optional<int>& bits) {
  return bits ? json(*bits) : json(nullptr);
}

// --------------------------------------------------------------------------
// Shared GAN flags for train/search/sweep
// --------------------------------------------------------------------------

struct GanFlags {
  GanConfig config;
  RingDataset dataset;
  int d_bits = 0;  // 0 = full precision (CLI11 needs a concrete storage type)
  int g_bits = 0;
  std::string scheme = "em";
};

void add_gan_flags(CLI::App* cmd, GanFlags& flags, bool with_bits) {
  if (with_bits) {
    cmd->add_option("--d-bits", flags.d_bits, "Quantize D to this bit width (omit for full precision)")
        ->check(CLI::Range(1, 16));
    cmd->add_option("--g-bits", flags.g_bits, "Quantize G to this bit width (omit for full precision)")
        ->check(CLI::Range(1, 16));
  }
  cmd->add_option("--scheme", flags.scheme, "Quantization scheme for both networks")
      ->check(CLI::IsMember({"minmax", "log", "tanh", "em"}))
      ->capture_default_str();
  cmd->add_option("--steps", flags.config.steps, "Training steps")->capture_default_str();
  cmd->add_option("--lr", flags.config.learning_rate, "Adam learning rate")->capture_default_str();
  cmd->add_option("--batch", flags.config.batch_size, "Batch size")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--beta1", flags.config.adam_beta1, "Adam beta1")->capture_default_str();
  cmd->add_option("--noise-dim", flags.config.noise_dim, "Generator noise dimension")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--ring-modes", flags.dataset.mode_count, "Ring dataset mode count")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--radius", flags.dataset.radius, "Ring radius")->capture_default_str();
  cmd->add_option("--sigma", flags.dataset.sigma, "Per-mode standard deviation")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
}

GanConfig resolve_config(const GanFlags& flags, const GlobalOpts& global) {
  GanConfig config = flags.config;
  config.seed = global.seed;
  if (flags.d_bits > 0) config.d_bits = flags.d_bits;
  if (flags.g_bits > 0) config.g_bits = flags.g_bits;
  Scheme scheme = scheme_from_string(flags.scheme).value();
  config.d_scheme = scheme;
  config.g_scheme = scheme;
  if (config.noise_dim != config.gen_layers.front()) {
    config.gen_layers.front() = config.noise_dim;
  }
  return config;
}

// Mock evaluator spec "0.3d,0.25g": slope per network.
SlopeMockEvaluator parse_mock(const std::string& spec) {
  double d_slope = -1.0, g_slope = -1.0;
  std::stringstream ss(spec);
  std::string token;
  while (std::getline(ss, token, ',')) {
    if (token.empty()) continue;
    char which = token.back();
    double value = 0.0;
    try {
      value = std::stod(token.substr(0, token.size() - 1));
    } catch (const std::exception&) {
      throw CLI::ValidationError("--mock", "cannot parse slope in '" + token + "'");
    }
    if (which == 'd') {
      d_slope = value;
    } else if (which == 'g') {
      g_slope = value;
    } else {
      throw CLI::ValidationError("--mock", "token '" + token + "' must end with 'd' or 'g'");
    }
  }
  if (d_slope < 0.0 || g_slope < 0.0) {
    throw CLI::ValidationError("--mock", "expected both a d and a g slope, e.g. \"0.3d,0.25g\"");
  }
  return SlopeMockEvaluator(d_slope, g_slope);
}

// --------------------------------------------------------------------------
// quantize
// --------------------------------------------------------------------------

struct QuantizeArgs {
  std::string in_path;
  std::string out_path;
  std::string scheme = "minmax";
  int bits = 8;
  double epsilon = kDefaultLogEpsilon;
  double delta = kDefaultTanhDelta;
  int max_iter = 100;
  double tol = 1e-9;
};

int run_quantize(const QuantizeArgs& args, const GlobalOpts& global) {
  Scheme scheme = scheme_from_string(args.scheme).value();
  std::vector<Tensor> tensors = read_weights(args.in_path);

  json tensor_reports = json::array();
  std::vector<Tensor> quantized;
  quantized.reserve(tensors.size());

  for (const Tensor& t : tensors) {
    QuantOutcome outcome;
    json rep;
    rep["name"] = t.name();
    rep["n"] = t.size();
    bool constant = is_constant(t);
    switch (scheme) {
      case Scheme::MinMax: {
        if (constant) {
          QuantParams p;
          p.scheme = scheme;
          p.bits = args.bits;
          outcome = quantize(t, p);
          rep["alpha"] = nullptr;
          rep["beta"] = nullptr;
        } else {
          QuantParams p = minmax_params(t, args.bits);
          outcome = quantize(t, p);
          rep["alpha"] = p.alpha;
          rep["beta"] = p.beta;
        }
        break;
      }
      case Scheme::LogMinMax: {
        outcome = log_quantize(t, args.bits, args.epsilon);
        try {
          QuantParams p = log_minmax_params(t, args.bits, args.epsilon);
          rep["alpha"] = p.alpha;
          rep["beta"] = p.beta;
        } catch (const ZeroRange&) {
          rep["alpha"] = nullptr;
          rep["beta"] = nullptr;
        }
        rep["epsilon"] = args.epsilon;
        break;
      }
      case Scheme::Tanh: {
        QuantParams p;
        p.scheme = scheme;
        p.bits = args.bits;
        p.saturation_delta = args.delta;
        outcome = quantize(t, p);
        rep["delta"] = args.delta;
        break;
      }
      case Scheme::EmLinear: {
        EmFitResult fit = em_fit(t, args.bits, args.max_iter, args.tol);
        outcome = fit.outcome;
        rep["alpha"] = fit.params.alpha;
        rep["beta"] = fit.params.beta;
        rep["em"] = {{"iterations", fit.trace.steps_taken},
                     {"converged", fit.trace.converged}};
        break;
      }
    }
    rep["l2_error"] = outcome.l2_error;
    rep["states_used"] = outcome.states_used;
    tensor_reports.push_back(std::move(rep));
    quantized.push_back(std::move(outcome.quantized));
  }

  write_weights(args.out_path, quantized);

  json report;
  report["command"] = "quantize";
  report["input"] = args.in_path;
  report["output"] = args.out_path;
  report["scheme"] = args.scheme;
  report["bits"] = args.bits;
  report["tensors"] = std::move(tensor_reports);

  std::string human = "quantized " + std::to_string(quantized.size()) + " tensor(s) -> " +
                      args.out_path + "\n";
  for (const auto& t : report["tensors"]) {
    human += "  " + t["name"].get<std::string>() +
             ": l2_error=" + format_number(t["l2_error"].get<double>()) +
             " states_used=" + std::to_string(t["states_used"].get<int>()) + "\n";
  }
  emit(global, report, "quantize_report.json", human);
  return 0;
}

// --------------------------------------------------------------------------
// analyze
// --------------------------------------------------------------------------

struct AnalyzeArgs {
  std::string in_path;
  std::size_t bins = 80;
};

int run_analyze(const AnalyzeArgs& args, const GlobalOpts& global) {
  std::vector<Tensor> tensors = read_weights(args.in_path);
  ensure_out_dir(global);

  json tensor_reports = json::array();
  for (const Tensor& t : tensors) {
    double lo = min_value(t);
    double hi = max_value(t);
    double mean = mean_value(t);
    double var = 0.0;
    for (double v : t.data()) var += (v - mean) * (v - mean);
    double stddev = std::sqrt(var / static_cast<double>(t.size()));

    std::string csv_path =
        (fs::path(global.out_dir) / (sanitize(t.name()) + ".hist.csv")).string();
    HistogramSpec spec;
    spec.bin_count = args.bins;
    export_histogram(t, spec, csv_path);

    tensor_reports.push_back({{"name", t.name()},
                              {"n", t.size()},
                              {"min", lo},
                              {"max", hi},
                              {"mean", mean},
                              {"stddev", stddev},
                              {"histogram_csv", csv_path}});
  }

  json report;
  report["command"] = "analyze";
  report["input"] = args.in_path;
  report["bins"] = args.bins;
  report["tensors"] = std::move(tensor_reports);

  std::string human = "analyzed " + std::to_string(tensors.size()) + " tensor(s)\n";
  for (const auto& t : report["tensors"]) {
    human += "  " + t["name"].get<std::string>() + ": mean=" +
             format_number(t["mean"].get<double>()) +
             " stddev=" + format_number(t["stddev"].get<double>()) + "\n";
  }
  emit(global, report, "analyze_report.json", human);
  return 0;
}

// --------------------------------------------------------------------------
// train
// --------------------------------------------------------------------------

json quality_json(const QualityScore& q) {
  return {{"covered_modes", q.covered_modes}, {"hq_fraction", q.hq_fraction}, {"score", q.score}};
}

int run_train(const GanFlags& flags, const GlobalOpts& global) {
  GanConfig config = resolve_config(flags, global);
  ensure_out_dir(global);

  TrainResult result = train(config, flags.dataset);

  std::string history_path = (fs::path(global.out_dir) / "history.csv").string();
  export_history_csv(history_path, result.history);

  std::string checkpoint_path = (fs::path(global.out_dir) / "checkpoint.qgw1").string();
  write_weights(checkpoint_path, model_tensors(result.model));

  QualityScore final_score = evaluate_quality(result.model, flags.dataset, kEvalSamples,
                                              derive_seed(config.seed, "final_eval"));
  double best_score = final_score.score;
  std::vector<QualityScore> curve;
  for (const HistoryRow& row : result.history) {
    curve.push_back(row.quality);
    best_score = std::max(best_score, row.quality.score);
  }

  std::string classification = "insufficient-history";
  if (curve.size() >= 4) classification = std::string(to_string(classify_run(curve)));

  json report;
  report["command"] = "train";
  report["seed"] = config.seed;
  report["steps"] = config.steps;
  report["d_bits"] = bits_json(config.d_bits);
  report["g_bits"] = bits_json(config.g_bits);
  report["scheme"] = flags.scheme;
  report["final"] = quality_json(final_score);
  report["best_score"] = best_score;
  report["classification"] = classification;
  report["history_csv"] = history_path;
  report["checkpoint"] = checkpoint_path;

  std::string human = "trained " + std::to_string(config.steps) + " steps; final score " +
                      format_number(final_score.score) + " (best " + format_number(best_score) +
                      "), " + classification + "\n";
  emit(global, report, "train_summary.json", human);
  return 0;
}

// --------------------------------------------------------------------------
// search
// --------------------------------------------------------------------------

struct SearchArgs {
  double quality = 0.5;
  int max_bits = 8;
  int repeats = 1;
  std::string mock;
  bool allow_unsat = false;
};

json trail_json(const std::vector<TrailEntry>& trail) {
  json arr = json::array();
  for (const TrailEntry& e : trail) {
    arr.push_back({{"d_bits", bits_json(e.d_bits)},
                   {"g_bits", bits_json(e.g_bits)},
                   {"score", e.score}});
  }
  return arr;
}

int run_search(const SearchArgs& args, const GanFlags& flags, const GlobalOpts& global) {
  ensure_out_dir(global);
  std::string curve_dir = (fs::path(global.out_dir) / "curves").string();

  std::unique_ptr<Evaluator> evaluator;
  if (!args.mock.empty()) {
    evaluator = std::make_unique<SlopeMockEvaluator>(parse_mock(args.mock));
  } else {
    fs::create_directories(curve_dir);
    evaluator =
        std::make_unique<GanEvaluator>(resolve_config(flags, global), flags.dataset, curve_dir);
  }

  json report;
  report["command"] = "search";
  report["quality"] = args.quality;
  report["max_bits"] = args.max_bits;

  SearchResult result;
  try {
    result = multi_precision_search(*evaluator, args.quality, args.max_bits, global.seed,
                                    args.repeats);
  } catch (const EvaluatorFailure& e) {
    report["error"] = e.what();
    report["trail"] = trail_json(e.partial_trail());
    emit(global, report, "search_result.json", std::string("search failed: ") + e.what() + "\n");
    return 2;
  }

  report["satisfied"] = result.satisfied;
  report["d_bits"] = result.d_bits > 0 ? json(result.d_bits) : json(nullptr);
  report["g_bits"] = result.g_bits > 0 ? json(result.g_bits) : json(nullptr);
  report["trail"] = trail_json(result.trail);

  std::string human;
  if (result.satisfied) {
    human = "satisfied: d_bits=" + std::to_string(result.d_bits) +
            " g_bits=" + std::to_string(result.g_bits) + " after " +
            std::to_string(result.trail.size()) + " evaluations\n";
  } else {
    human = "not satisfied within max_bits=" + std::to_string(args.max_bits) + " (" +
            std::to_string(result.trail.size()) + " evaluations)\n";
  }
  emit(global, report, "search_result.json", human);
  if (!result.satisfied && !args.allow_unsat) return 2;
  return 0;
}

// --------------------------------------------------------------------------
// sweep
// --------------------------------------------------------------------------

struct SweepArgs {
  std::string bits = "1..4";
  std::string modes = "d,both,g";
  int jobs = 1;
  std::string mock;
};

std::pair<int, int> parse_bits_range(const std::string& text) {
  auto sep = text.find("..");
  try {
    if (sep == std::string::npos) {
      int single = std::stoi(text);
      return {single, single};
    }
    return {std::stoi(text.substr(0, sep)), std::stoi(text.substr(sep + 2))};
  } catch (const std::exception&) {
    throw CLI::ValidationError("--bits", "expected LO..HI, e.g. 1..4");
  }
}

std::vector<SweepMode> parse_modes(const std::string& text) {
  std::vector<SweepMode> modes;
  std::stringstream ss(text);
  std::string token;
  while (std::getline(ss, token, ',')) {
    auto mode = sweep_mode_from_string(token);
    if (!mode) throw CLI::ValidationError("--modes", "unknown mode '" + token + "'");
    modes.push_back(*mode);
  }
  if (modes.empty()) throw CLI::ValidationError("--modes", "at least one mode required");
  return modes;
}

int run_sweep(const SweepArgs& args, const GanFlags& flags, const GlobalOpts& global) {
  auto [lo, hi] = parse_bits_range(args.bits);
  if (lo < 1 || hi > 16 || lo > hi) {
    throw CLI::ValidationError("--bits", "range must satisfy 1 <= lo <= hi <= 16");
  }
  std::vector<SweepMode> modes = parse_modes(args.modes);

  ensure_out_dir(global);
  std::string curve_dir = (fs::path(global.out_dir) / "curves").string();

  std::unique_ptr<Evaluator> evaluator;
  if (!args.mock.empty()) {
    evaluator = std::make_unique<SlopeMockEvaluator>(parse_mock(args.mock));
  } else {
    fs::create_directories(curve_dir);
    evaluator =
        std::make_unique<GanEvaluator>(resolve_config(flags, global), flags.dataset, curve_dir);
  }

  SweepResult result = sensitivity_sweep(*evaluator, lo, hi, global.seed, modes, args.jobs);

  std::string table_path = (fs::path(global.out_dir) / "sweep_table.csv").string();
  {
    std::ofstream table(table_path, std::ios::trunc);
    if (!table) throw IoError("cannot write " + table_path);
    table << "mode,bits,score\n";
    for (const SweepCell& cell : result.cells) {
      table << to_string(cell.mode) << ',' << cell.bits << ','
            << format_number(cell.quality.score) << '\n';
    }
  }

  json cells = json::array();
  for (const SweepCell& cell : result.cells) {
    cells.push_back({{"mode", std::string(to_string(cell.mode))},
                     {"bits", cell.bits},
                     {"score", cell.quality.score},
                     {"covered_modes", cell.quality.covered_modes},
                     {"hq_fraction", cell.quality.hq_fraction},
                     {"history", cell.history_ref}});
  }

  json report;
  report["command"] = "sweep";
  report["bits_lo"] = lo;
  report["bits_hi"] = hi;
  report["table_csv"] = table_path;
  report["cells"] = std::move(cells);

  std::string human = "sweep: " + std::to_string(result.cells.size()) + " cells -> " + table_path + "\n";
  for (const SweepCell& cell : result.cells) {
    human += "  " + std::string(to_string(cell.mode)) + " @" + std::to_string(cell.bits) +
             " bits: " + format_number(cell.quality.score) + "\n";
  }
  emit(global, report, "sweep_result.json", human);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"QGAN quantization stack: weight quantizers, EM fitting, a toy GAN harness, "
               "and multi-precision bit-width search"};
  app.require_subcommand(1);

  GlobalOpts global;
  app.add_option("--seed", global.seed, "Root seed; every artifact is a pure function of it")
      ->capture_default_str();
  app.add_option("--out", global.out_dir, "Output directory for reports and artifacts")
      ->capture_default_str();
  app.add_flag("--json", global.json_stdout, "Print the machine-readable report to stdout");

  QuantizeArgs quantize_args;
  CLI::App* cmd_quantize = app.add_subcommand("quantize", "Quantize a QGW1 weight archive");
  cmd_quantize->add_option("--in", quantize_args.in_path, "Input QGW1 archive")->required();
  cmd_quantize->add_option("--out", quantize_args.out_path, "Output QGW1 archive")->required();
  cmd_quantize->add_option("--scheme", quantize_args.scheme, "Quantization scheme")
      ->check(CLI::IsMember({"minmax", "log", "tanh", "em"}))
      ->capture_default_str();
  cmd_quantize->add_option("--bits", quantize_args.bits, "Bit width")
      ->check(CLI::Range(1, 16))
      ->required();
  cmd_quantize->add_option("--epsilon", quantize_args.epsilon, "log scheme epsilon")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd_quantize->add_option("--delta", quantize_args.delta, "tanh saturation delta")
      ->capture_default_str();
  cmd_quantize->add_option("--max-iter", quantize_args.max_iter, "EM iteration cap")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd_quantize->add_option("--tol", quantize_args.tol, "EM relative objective tolerance")
      ->capture_default_str();

  AnalyzeArgs analyze_args;
  CLI::App* cmd_analyze = app.add_subcommand("analyze", "Histogram and summary stats of an archive");
  cmd_analyze->add_option("--in", analyze_args.in_path, "Input QGW1 archive")->required();
  cmd_analyze->add_option("--bins", analyze_args.bins, "Histogram bin count")
      ->check(CLI::Range(2, 100000))
      ->capture_default_str();

  GanFlags train_flags;
  CLI::App* cmd_train = app.add_subcommand("train", "Train the toy ring GAN, optionally quantized");
  add_gan_flags(cmd_train, train_flags, /*with_bits=*/true);

  SearchArgs search_args;
  GanFlags search_flags;
  CLI::App* cmd_search =
      app.add_subcommand("search", "Multi-precision bit-width search (Algorithm 1 style)");
  cmd_search->add_option("--quality", search_args.quality, "Quality requirement S in (0, 1]")
      ->required()
      ->check([](const std::string& value) -> std::string {
        double v = 0.0;
        try {
          v = std::stod(value);
        } catch (const std::exception&) {
          return "not a number";
        }
        if (v <= 0.0 || v > 1.0) return "quality must be in (0, 1]";
        return {};
      });
  cmd_search->add_option("--max-bits", search_args.max_bits, "Bit-width cap per phase")
      ->check(CLI::Range(1, 16))
      ->capture_default_str();
  cmd_search->add_option("--repeats", search_args.repeats, "Seeds per evaluation (median score)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd_search->add_option("--mock", search_args.mock,
                         "Slope mock evaluator, e.g. \"0.3d,0.25g\" (no GAN training)");
  cmd_search->add_flag("--allow-unsat", search_args.allow_unsat,
                       "Exit 0 even when max-bits is exhausted");
  add_gan_flags(cmd_search, search_flags, /*with_bits=*/false);

  SweepArgs sweep_args;
  GanFlags sweep_flags;
  CLI::App* cmd_sweep = app.add_subcommand("sweep", "Sensitivity sweep: quantize D only / both / G only");
  cmd_sweep->add_option("--bits", sweep_args.bits, "Bit-width range LO..HI")->capture_default_str();
  cmd_sweep->add_option("--modes", sweep_args.modes, "Comma list from {d, both, g}")
      ->capture_default_str();
  cmd_sweep->add_option("--jobs", sweep_args.jobs, "Worker threads for sweep cells")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd_sweep->add_option("--mock", sweep_args.mock, "Slope mock evaluator (no GAN training)");
  add_gan_flags(cmd_sweep, sweep_flags, /*with_bits=*/false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_name() == "CallForHelp" || e.get_name() == "CallForAllHelp") {
      return app.exit(e);
    }
    std::cerr << "usage error: " << e.what() << std::endl;
    return 1;
  }

  try {
    if (app.got_subcommand(cmd_quantize)) return run_quantize(quantize_args, global);
    if (app.got_subcommand(cmd_analyze)) return run_analyze(analyze_args, global);
    if (app.got_subcommand(cmd_train)) return run_train(train_flags, global);
    if (app.got_subcommand(cmd_search)) return run_search(search_args, search_flags, global);
    if (app.got_subcommand(cmd_sweep)) return run_sweep(sweep_args, sweep_flags, global);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "usage error: " << e.what() << std::endl;
    return 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 2;
  }
  return 0;
}
