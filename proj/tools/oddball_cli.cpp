#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <thread>

#include "oddball/data.hpp"
#include "oddball/fault.hpp"
#include "oddball/report.hpp"
#include "oddball/trainer.hpp"
#include "oddball/verify.hpp"

namespace {

constexpr const char* kArtifactVersion = "0.1.0";

constexpr int kExitOk = 0;
constexpr int kExitVerifyFailed = 1;
constexpr int kExitDataError = 2;
constexpr int kExitDiverged = 3;
constexpr int kExitUsage = 64;

using namespace oddball;

struct CommonOpts {
  std::uint64_t seed = 0;
  int sweeps = 100;
  double learning_rate = 1.0;
  int replicas = 100;
  double dropout_rate = 0.5;
  double dither_half_width = 0.5;
  std::string activation = "biased-sigmoid";
  double bias_offset = kDefaultBiasOffset;
  std::string loss = "cross-entropy";
  int refresh_steps = 1;
  int eval_every = 1;
  long long eval_every_steps = 0;
  std::size_t n_train = 256;
  unsigned threads = std::max(1u, std::thread::hardware_concurrency());
  bool record_timing = false;
  std::string train_images, train_labels, test_images, test_labels;
};

void add_common_options(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--seed", o.seed, "Base RNG seed");
  cmd->add_option("--sweeps", o.sweeps, "Equivalent full sweeps to train")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--learning-rate", o.learning_rate, "SGD step size");
  cmd->add_option("--replicas", o.replicas, "Parallel-set size for parallel modes")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--dropout-rate", o.dropout_rate, "Hidden-unit dropout rate");
  cmd->add_option("--dither-half-width", o.dither_half_width,
                  "Uniform dither noise is drawn from +/- this");
  cmd->add_option("--activation", o.activation, "sigmoid|biased-sigmoid|relu");
  cmd->add_option("--bias-offset", o.bias_offset,
                  "Offset inside the biased sigmoid");
  cmd->add_option("--loss", o.loss, "cross-entropy|squared-error");
  cmd->add_option("--refresh-steps", o.refresh_steps,
                  "Steps between novelty recomputations (oddball)")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--eval-every", o.eval_every,
                  "Evaluate every N equivalent sweeps")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--eval-every-steps", o.eval_every_steps,
                  "Oddball: evaluate every N steps instead (sub-sweep cadence)")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--n-train", o.n_train, "Training subset size (file-order prefix)")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--threads", o.threads, "Worker threads (affects speed only)")
      ->check(CLI::PositiveNumber);
  cmd->add_flag("--record-timing", o.record_timing,
                "Write measured wall_ms into the CSV (makes output bodies "
                "timing-dependent)");
  cmd->add_option("--train-images", o.train_images, "MNIST train images (idx/gz)");
  cmd->add_option("--train-labels", o.train_labels, "MNIST train labels (idx/gz)");
  cmd->add_option("--test-images", o.test_images, "MNIST test images (idx/gz)");
  cmd->add_option("--test-labels", o.test_labels, "MNIST test labels (idx/gz)");
}

TrainingConfig build_config(const CommonOpts& o, Variant variant) {
  TrainingConfig cfg;
  cfg.variant = variant;
  cfg.sweeps = o.sweeps;
  cfg.learning_rate = o.learning_rate;
  cfg.regularizer =
      regularizer_for(variant, o.replicas, o.dropout_rate, o.dither_half_width);
  if (o.activation == "sigmoid") {
    cfg.activation = {Activation::sigmoid, 0.0};
  } else if (o.activation == "biased-sigmoid") {
    cfg.activation = {Activation::biased_sigmoid, o.bias_offset};
  } else if (o.activation == "relu") {
    cfg.activation = {Activation::relu, 0.0};
  } else {
    throw CLI::ValidationError("--activation",
                               "expected sigmoid|biased-sigmoid|relu");
  }
  if (o.loss == "cross-entropy") {
    cfg.loss = LossKind::cross_entropy;
  } else if (o.loss == "squared-error") {
    cfg.loss = LossKind::squared_error;
  } else {
    throw CLI::ValidationError("--loss", "expected cross-entropy|squared-error");
  }
  cfg.novelty_refresh_steps = o.refresh_steps;
  cfg.seed = o.seed;
  cfg.eval_every_sweeps = o.eval_every;
  cfg.eval_every_steps = o.eval_every_steps;
  cfg.record_timing = o.record_timing;
  return cfg;
}

struct LoadedData {
  DatasetBundle bundle;
  // path and crc32 of the four files, in train-images/train-labels/
  // test-images/test-labels order
  std::vector<std::pair<std::string, std::uint32_t>> files;
};

std::string resolve_data_path(const std::string& explicit_path,
                              const std::string& base_name) {
  if (!explicit_path.empty()) return explicit_path;
  const char* env = std::getenv("ODDBALL_DATA_DIR");
  const std::filesystem::path dir = env ? env : ".";
  for (const char* ext : {"", ".gz"}) {
    const std::filesystem::path p = dir / (base_name + ext);
    if (std::filesystem::exists(p)) return p.string();
  }
  throw DataError("cannot find " + base_name + "[.gz] under '" + dir.string() +
                  "' (set ODDBALL_DATA_DIR or pass --" +
                  (base_name.find("train-images") == 0 ? "train-images"
                   : base_name.find("train-labels") == 0
                       ? "train-labels"
                       : base_name.find("t10k-images") == 0 ? "test-images"
                                                            : "test-labels") +
                  ")");
}

LoadedData load_data(const CommonOpts& o) {
  LoadedData out;
  const std::string paths[4] = {
      resolve_data_path(o.train_images, "train-images-idx3-ubyte"),
      resolve_data_path(o.train_labels, "train-labels-idx1-ubyte"),
      resolve_data_path(o.test_images, "t10k-images-idx3-ubyte"),
      resolve_data_path(o.test_labels, "t10k-labels-idx1-ubyte"),
  };
  std::vector<std::uint8_t> raw[4];
  for (int i = 0; i < 4; ++i) {
    std::ifstream f(paths[i], std::ios::binary);
    if (!f) throw DataError("cannot open file: " + paths[i]);
    std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(f),
                                    std::istreambuf_iterator<char>()};
    out.files.emplace_back(paths[i], crc32_of(bytes));
    raw[i] = bytes.size() >= 2 && bytes[0] == 0x1f && bytes[1] == 0x8b
                 ? read_file_maybe_gzip(paths[i])
                 : std::move(bytes);
  }
  const RawImages train_images = parse_idx_images(raw[0]);
  const auto train_labels = parse_idx_labels(raw[1]);
  const RawImages test_images = parse_idx_images(raw[2]);
  const auto test_labels = parse_idx_labels(raw[3]);
  out.bundle = build_datasets(train_images, train_labels, test_images,
                              test_labels, o.n_train);
  return out;
}

std::string manifest_text(const CommonOpts& o, const std::string& variants,
                          const LoadedData& data, const std::string& started,
                          const std::string& finished) {
  std::string m;
  auto kv = [&m](const std::string& k, const std::string& v) {
    m += k;
    m += '=';
    m += v;
    m += '\n';
  };
  kv("artifact_version", kArtifactVersion);
  kv("base_seed", std::to_string(o.seed));
  kv("variants", variants);
  kv("sweeps", std::to_string(o.sweeps));
  kv("learning_rate", format_g9(o.learning_rate));
  kv("replicas", std::to_string(o.replicas));
  kv("dropout_rate", format_g9(o.dropout_rate));
  kv("dither_half_width", format_g9(o.dither_half_width));
  kv("activation", o.activation);
  kv("bias_offset", format_g9(o.bias_offset));
  kv("loss", o.loss);
  kv("novelty_refresh_steps", std::to_string(o.refresh_steps));
  kv("eval_every_sweeps", std::to_string(o.eval_every));
  kv("eval_every_steps", std::to_string(o.eval_every_steps));
  kv("n_train", std::to_string(o.n_train));
  kv("threads", std::to_string(o.threads));
  kv("record_timing", o.record_timing ? "1" : "0");
  kv("normalization", "global-mean");
  const char* names[4] = {"train_images", "train_labels", "test_images",
                          "test_labels"};
  for (int i = 0; i < 4; ++i) {
    kv(std::string("data.") + names[i] + ".path", data.files[i].first);
    char crc[16];
    std::snprintf(crc, sizeof(crc), "%08x", data.files[i].second);
    kv(std::string("data.") + names[i] + ".crc32", crc);
  }
  kv("started_at", started);
  kv("finished_at", finished);
  return m;
}

int cmd_train(const CommonOpts& o, const std::string& variant_name_str,
              const std::string& out_path) {
  const auto variant = parse_variant(variant_name_str);
  if (!variant) {
    std::cerr << "unknown variant '" << variant_name_str
              << "' (expected one of: baseline, dropout, dither, "
                 "parallel-dither, parallel-dither-dropout, oddball)\n";
    return kExitUsage;
  }
  const std::string started = now_iso8601_utc();
  const LoadedData data = load_data(o);
  const TrainingConfig cfg = build_config(o, *variant);
  cfg.validate();
  ThreadPool pool(o.threads);
  const MetricsLog log =
      run_variant(cfg, data.bundle.train, data.bundle.test, &pool).log;
  write_file(out_path, csv_body(log));
  write_file(out_path + ".manifest",
             manifest_text(o, variant_name_str, data, started, now_iso8601_utc()));
  const MetricsRow& last = log.rows.back();
  std::cout << variant_name_str << ": " << last.equivalent_sweep
            << " equivalent sweeps, final test error " << format_g9(last.test_error)
            << " -> " << out_path << "\n";
  return kExitOk;
}

int cmd_compare(const CommonOpts& o, const std::string& variants_csv,
                const std::string& out_dir) {
  std::vector<Variant> variants;
  if (variants_csv.empty()) {
    variants.assign(std::begin(kAllVariants), std::end(kAllVariants));
  } else {
    std::string rest = variants_csv;
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      const std::string tok = rest.substr(0, comma);
      rest = comma == std::string::npos ? "" : rest.substr(comma + 1);
      const auto v = parse_variant(tok);
      if (!v) {
        std::cerr << "unknown variant '" << tok << "' in --variants\n";
        return kExitUsage;
      }
      variants.push_back(*v);
    }
  }

  const std::string started = now_iso8601_utc();
  const LoadedData data = load_data(o);
  TrainingConfig base = build_config(o, variants.front());
  ThreadPool pool(o.threads);
  std::filesystem::create_directories(out_dir);

  const std::vector<MetricsLog> logs = run_comparison(
      o.seed, variants, base, data.bundle.train, data.bundle.test, &pool);

  std::string names;
  for (std::size_t i = 0; i < variants.size(); ++i) {
    const std::string file =
        (std::filesystem::path(out_dir) /
         (std::string(variant_name(variants[i])) + ".csv"))
            .string();
    write_file(file, csv_body(logs[i]));
    names += (i ? "," : "") + std::string(variant_name(variants[i]));
  }

  const Summary summary = summarize(logs);
  write_file((std::filesystem::path(out_dir) / "summary.csv").string(),
             summary_csv(summary));
  write_file((std::filesystem::path(out_dir) / "manifest.txt").string(),
             manifest_text(o, names, data, started, now_iso8601_utc()));

  for (const SummaryRow& row : summary.rows) {
    std::cout << variant_name(row.variant) << ": best test error "
              << format_g9(row.best_test_error) << " at sweep "
              << format_g9(row.sweeps_to_best);
    if (row.variant == Variant::oddball && row.speedup_vs_best_uniform > 0.0)
      std::cout << " (reaches best-uniform error "
                << format_g9(summary.uniform_best_error) << " at sweep "
                << format_g9(row.sweeps_to_uniform_best) << ", speedup "
                << format_g9(row.speedup_vs_best_uniform) << "x)";
    std::cout << "\n";
  }
  return kExitOk;
}

int cmd_verify(const std::string& only, const std::string& inject) {
  if (!inject.empty()) {
    const auto kind = fault::parse(inject);
    if (!kind) {
      std::cerr << "unknown fault '" << inject
                << "' (backward-sign|softmax-unnormalized|sampler-uniform)\n";
      return kExitUsage;
    }
    fault::inject(*kind);
  }
  std::vector<CheckResult> results;
  try {
    results = run_self_checks(only);
  } catch (const std::invalid_argument& e) {
    std::cerr << e.what() << "; available:";
    for (const auto& n : self_check_names()) std::cerr << ' ' << n;
    std::cerr << "\n";
    return kExitUsage;
  }
  bool all_ok = true;
  for (const CheckResult& r : results) {
    std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail
              << "\n";
    if (!r.passed) all_ok = false;
  }
  return all_ok ? kExitOk : kExitVerifyFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Novelty-driven (oddball) SGD trainer for the 784x100x10 "
               "MNIST small-data protocol"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key=value config file (flags win)");

  CommonOpts train_opts, compare_opts;
  std::string variant_str, train_out = "run.csv";
  auto* train = app.add_subcommand("train", "Train one variant, write a CSV");
  add_common_options(train, train_opts);
  train->add_option("--variant", variant_str, "Training variant")->required();
  train->add_option("--out", train_out, "Output CSV path");

  std::string variants_csv, compare_out = ".";
  auto* compare = app.add_subcommand(
      "compare", "Train all variants from shared starting weights");
  add_common_options(compare, compare_opts);
  compare->add_option("--variants", variants_csv,
                      "Comma-separated subset (default: all six)");
  compare->add_option("--out", compare_out, "Output directory");

  std::string only, inject;
  auto* verify = app.add_subcommand("verify", "Run the built-in self checks");
  verify->add_option("--only", only, "Run a single named check");
  verify->add_option("--inject-fault", inject,
                     "Deliberately break one component (mutation testing)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (train->parsed()) return cmd_train(train_opts, variant_str, train_out);
    if (compare->parsed())
      return cmd_compare(compare_opts, variants_csv, compare_out);
    if (verify->parsed()) return cmd_verify(only, inject);
  } catch (const TrainingDiverged& e) {
    std::cerr << e.what() << "\n";
    return kExitDiverged;
  } catch (const DataError& e) {
    std::cerr << e.what() << "\n";
    return kExitDataError;
  } catch (const CLI::ValidationError& e) {
    std::cerr << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return kExitDataError;
  }
  return kExitOk;
}
