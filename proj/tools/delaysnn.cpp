// delaysnn command-line driver: single experiments, seeded sweeps, raster
// dumps and latency-code previews.
//
// Exit codes: 0 ok, 1 configuration error, 2 data error, 3 internal fault.

#include <algorithm>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "delaysnn/config.hpp"
#include "delaysnn/dataio.hpp"
#include "delaysnn/encoder.hpp"
#include "delaysnn/experiment.hpp"
#include "delaysnn/report.hpp"

namespace fs = std::filesystem;
using namespace delaysnn;

namespace {

struct CommonOptions {
  std::string config_path;
  std::string data_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> train_count;
  std::optional<std::size_t> test_count;
  bool invert = false;
};

void add_common(CLI::App& cmd, CommonOptions& opts) {
  cmd.add_option("--config", opts.config_path, "key = value config file");
  cmd.add_option("--data-dir", opts.data_dir, std::string("dataset directory (default: $") + kDataDirEnv + ")");
  cmd.add_option("--seed", opts.seed, "master seed");
  cmd.add_option("--train-count", opts.train_count, "training instances per trained class");
  cmd.add_option("--test-count", opts.test_count, "test instances per class");
  cmd.add_flag("--invert", opts.invert, "bright pixels fire first");
}

ExperimentConfig load_config(const CommonOptions& opts) {
  ExperimentConfig config;
  if (!opts.config_path.empty()) apply_settings(config, read_settings(opts.config_path));
  if (opts.seed) config.seed = *opts.seed;
  if (opts.train_count) config.split.train_count = *opts.train_count;
  if (opts.test_count) config.split.test_count = *opts.test_count;
  if (opts.invert) config.encoder.invert = true;
  config.check();
  return config;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

template <typename Fn>
std::string render(Fn&& fn) {
  std::ostringstream out;
  fn(out);
  return out.str();
}

std::string theta_tag(double theta) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", theta);
  return buf;
}

void print_accuracies(const ExperimentReport& report) {
  for (std::size_t t = 0; t < report.thresholds.size(); ++t) {
    const ClusterReport& b = report.baseline[t];
    const ClusterReport& a = report.trained[t];
    std::cout << "theta " << fmt(report.thresholds[t]) << "  baseline " << fmt(b.trained_accuracy)
              << (b.trained_separable ? "" : " (non-separable)") << "  trained " << fmt(a.trained_accuracy)
              << (a.trained_separable ? "" : " (non-separable)") << "  unseen " << fmt(b.unseen_accuracy) << " -> "
              << fmt(a.unseen_accuracy) << '\n';
  }
}

/// Parses `all`, `N` or `A-B` (inclusive) against `count` items.
std::vector<std::size_t> parse_selector(const std::string& selector, std::size_t count) {
  std::vector<std::size_t> out;
  if (selector == "all") {
    for (std::size_t i = 0; i < count; ++i) out.push_back(i);
    return out;
  }
  std::size_t lo = 0, hi = 0;
  char dash = 0;
  std::istringstream in(selector);
  if (!(in >> lo)) throw ConfigError("bad instance selector '" + selector + "'");
  hi = lo;
  if (in >> dash && (dash != '-' || !(in >> hi))) throw ConfigError("bad instance selector '" + selector + "'");
  if (lo > hi || hi >= count) {
    throw ConfigError("instance selector '" + selector + "' out of range (0-" + std::to_string(count - 1) + ")");
  }
  for (std::size_t i = lo; i <= hi; ++i) out.push_back(i);
  return out;
}

int cmd_run(const CommonOptions& opts, const std::string& out_dir, bool rasters) {
  const ExperimentConfig config = load_config(opts);
  const Dataset data = load_dataset(opts.data_dir);
  TrialCapture capture;
  const ExperimentReport report = run_single(config, data, 0, rasters ? &capture : nullptr);

  fs::create_directories(out_dir);
  const fs::path out(out_dir);
  write_file(out / "delays.txt", render([&](auto& o) { write_topology(o, report.final_topology); }));
  write_file(out / "report.txt", render([&](auto& o) { write_report(o, report, "delays.txt"); }));
  if (rasters) {
    for (Phase phase : {Phase::Baseline, Phase::Trained}) {
      const auto& records = phase == Phase::Baseline ? capture.baseline : capture.trained;
      std::vector<RasterLine> lines;
      for (std::size_t i = 0; i < records.size(); ++i) {
        for (const SpikeEvent& s : records[i].spikes) {
          if (!report.final_topology.is_input(s.neuron)) lines.push_back({s.time, s.neuron, i, capture.labels[i]});
        }
      }
      write_file(out / (std::string("raster_") + phase_name(phase) + ".txt"),
                 render([&](auto& o) { write_raster(o, lines); }));
    }
  }
  print_accuracies(report);
  return 0;
}

int cmd_sweep(const CommonOptions& opts, const std::string& out_dir, std::size_t n, std::size_t jobs) {
  if (n == 0) throw ConfigError("-n must be >= 1");
  const ExperimentConfig config = load_config(opts);
  const Dataset data = load_dataset(opts.data_dir);
  const SweepResult result = run_sweep(config, data, n, jobs);

  fs::create_directories(out_dir);
  const fs::path out(out_dir);
  for (const ExperimentReport& r : result.reports) {
    char stem[32];
    std::snprintf(stem, sizeof stem, "network_%04zu", r.network_index);
    const std::string delays = std::string(stem) + "_delays.txt";
    write_file(out / delays, render([&](auto& o) { write_topology(o, r.final_topology); }));
    write_file(out / (std::string(stem) + ".txt"), render([&](auto& o) { write_report(o, r, delays); }));
  }
  write_file(out / "summary.txt", render([&](auto& o) { write_summary(o, result.summary); }));
  for (const ThresholdSummary& ts : result.summary.per_threshold) {
    for (Phase phase : {Phase::Baseline, Phase::Trained}) {
      const auto p = static_cast<int>(phase);
      const std::string base = "hist_theta" + theta_tag(ts.threshold) + "_" + phase_name(phase);
      write_file(out / (base + "_trained.txt"), render([&](auto& o) { write_histogram(o, ts.trained_class[p]); }));
      write_file(out / (base + "_unseen.txt"), render([&](auto& o) { write_histogram(o, ts.unseen_class[p]); }));
    }
  }
  std::cout << render([&](auto& o) { write_summary(o, result.summary); });
  return 0;
}

int cmd_raster(const CommonOptions& opts, const std::string& phase, const std::string& selector,
               const std::string& layers) {
  if (phase != "baseline" && phase != "trained") throw ConfigError("--phase must be baseline or trained");
  ExperimentConfig config = load_config(opts);
  std::vector<std::size_t> shown;
  for (int layer : detail::parse_list<int>("--layers", layers)) {
    if (layer < 1 || static_cast<std::size_t>(layer) > config.layer_sizes.size()) {
      throw ConfigError("--layers out of range: " + std::to_string(layer));
    }
    shown.push_back(static_cast<std::size_t>(layer - 1));
  }
  const std::size_t test_total = config.split.test_count * (config.split.trained.size() + config.split.unseen.size());
  const std::vector<std::size_t> picked = parse_selector(selector, test_total);
  const Dataset data = load_dataset(opts.data_dir);
  TrialCapture capture;
  const ExperimentReport report = run_single(config, data, 0, &capture);
  const auto& records = phase == "baseline" ? capture.baseline : capture.trained;
  const NetworkTopology& topo = report.final_topology;

  std::vector<RasterLine> lines;
  for (std::size_t i : picked) {
    for (const SpikeEvent& s : records[i].spikes) {
      const std::size_t layer = *topo.layer_of(s.neuron);
      if (std::find(shown.begin(), shown.end(), layer) == shown.end()) continue;
      lines.push_back({s.time, s.neuron, i, capture.labels[i]});
    }
  }
  write_raster(std::cout, std::move(lines));
  return 0;
}

int cmd_encode_preview(const CommonOptions& opts, const std::string& images_path, std::size_t index) {
  EncoderConfig encoder = load_config(opts).encoder;
  std::vector<RawImage> images;
  if (!images_path.empty()) {
    images = read_images(images_path);
  } else {
    images = load_dataset(opts.data_dir).images;
  }
  if (index >= images.size()) {
    throw ConfigError("--index " + std::to_string(index) + " out of range (" + std::to_string(images.size()) +
                      " images)");
  }
  write_latencies(std::cout, encode(downscale(images[index]), encoder));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Delay-plasticity spiking network experiments"};
  app.require_subcommand(1);

  CommonOptions run_opts, sweep_opts, raster_opts, preview_opts;
  std::string run_out = "out", sweep_out = "out";
  bool run_rasters = false;
  std::size_t sweep_n = 20, sweep_jobs = 1;
  std::string raster_phase = "baseline", raster_selector = "all", raster_layers = "2,3";
  std::string preview_images;
  std::size_t preview_index = 0;

  auto* run = app.add_subcommand("run", "train and test one network");
  add_common(*run, run_opts);
  run->add_option("--out", run_out, "output directory");
  run->add_flag("--rasters", run_rasters, "also write baseline/trained raster dumps");

  auto* sweep = app.add_subcommand("sweep", "run many independently seeded networks");
  add_common(*sweep, sweep_opts);
  sweep->add_option("--out", sweep_out, "output directory");
  sweep->add_option("-n", sweep_n, "number of networks");
  sweep->add_option("--jobs", sweep_jobs, "parallel workers");

  auto* raster = app.add_subcommand("raster", "dump test-phase spikes as `time_ms neuron input_id class`");
  add_common(*raster, raster_opts);
  raster->add_option("--phase", raster_phase, "baseline or trained");
  raster->add_option("--instance", raster_selector, "test instance: all, N or A-B");
  raster->add_option("--layers", raster_layers, "comma-separated layers to show, 1 = input");

  auto* preview = app.add_subcommand("encode-preview", "dump the latency code of one image");
  add_common(*preview, preview_opts);
  preview->add_option("--images", preview_images, "IDX image file (default: dataset images)");
  preview->add_option("--index", preview_index, "image index");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*run) return cmd_run(run_opts, run_out, run_rasters);
    if (*sweep) return cmd_sweep(sweep_opts, sweep_out, sweep_n, sweep_jobs);
    if (*raster) return cmd_raster(raster_opts, raster_phase, raster_selector, raster_layers);
    if (*preview) return cmd_encode_preview(preview_opts, preview_images, preview_index);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal fault: " << e.what() << '\n';
    return 3;
  }
  return 1;
}
