#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "delaysnn/dataio.hpp"
#include "delaysnn/encoder.hpp"
#include "delaysnn/error.hpp"
#include "delaysnn/pgp.hpp"
#include "delaysnn/plasticity.hpp"
#include "delaysnn/simulator.hpp"
#include "delaysnn/topology.hpp"

namespace delaysnn {

/// Defaults reproduce the reference protocol: three layers of 100, p = 0.1,
/// weight 6, initial delays 1..39 ms, digits 0 and 1 trained with 2 unseen,
/// 20 train / 25 test instances per class, thresholds 0.8 and 0.9.
struct ExperimentConfig {
  std::vector<std::size_t> layer_sizes{100, 100, 100};
  double connection_probability = 0.1;
  double weight = 6.0;
  DelayRange initial_delays{1, 39};
  PlasticityConfig plasticity;
  SplitSpec split;  // split.seed is replaced by the per-network seed
  std::vector<double> thresholds{0.8, 0.9};
  TrialConfig trial;
  EncoderConfig encoder;
  std::vector<std::size_t> readout_layers{1, 2};  // 0-based
  std::size_t epochs = 1;
  std::uint64_t seed = 1;

  void check() const {
    if (layer_sizes.size() < 2) throw ConfigError("need at least 2 layers");
    for (std::size_t n : layer_sizes) {
      if (n == 0) throw ConfigError("layer sizes must be > 0");
    }
    if (layer_sizes.front() != kGridPixels) {
      throw ConfigError("input layer must have " + std::to_string(kGridPixels) + " neurons (one per pixel)");
    }
    plasticity.check();
    if (thresholds.empty()) throw ConfigError("at least one PGP threshold required");
    for (double t : thresholds) {
      if (!(t > 0.0 && t <= 1.0)) throw ConfigError("PGP thresholds must lie in (0, 1]");
    }
    if (split.trained.empty()) throw ConfigError("at least one trained digit required");
    if (split.test_count == 0) throw ConfigError("test count must be > 0");
    if (!(trial.dt > 0.0) || !(trial.duration > encoder.t_max)) {
      throw ConfigError("trial duration must exceed the latency window");
    }
    if (initial_delays.lo < plasticity.delay_min || initial_delays.hi > plasticity.delay_max) {
      throw ConfigError("initial delay range must lie inside [delay_min, delay_max]");
    }
    for (std::size_t layer : readout_layers) {
      if (layer == 0 || layer >= layer_sizes.size()) throw ConfigError("readout layers must be non-input layers");
    }
    if (epochs == 0) throw ConfigError("epochs must be > 0");
  }
};

/// SplitMix64 finaliser.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Seed of network `index` in a sweep; a single run is network 0.
constexpr std::uint64_t child_seed(std::uint64_t master, std::uint64_t index) {
  return mix64(mix64(master) ^ mix64(index + 1));
}

struct NetworkSeeds {
  std::uint64_t network = 0;
  std::uint64_t topology = 0;
  std::uint64_t split = 0;
  std::uint64_t order = 0;

  static NetworkSeeds derive(std::uint64_t network) {
    return {network, mix64(network ^ 0x746f706fULL), mix64(network ^ 0x73706c74ULL), mix64(network ^ 0x6f726472ULL)};
  }
};

enum class Phase { Baseline, Trained };

inline const char* phase_name(Phase phase) { return phase == Phase::Baseline ? "baseline" : "trained"; }

struct ExperimentReport {
  std::size_t network_index = 0;
  NetworkSeeds seeds;
  std::vector<double> thresholds;
  std::vector<ClusterReport> baseline;  // one per threshold
  std::vector<ClusterReport> trained;
  std::vector<std::size_t> test_instances;   // dataset indices, presentation order
  std::vector<std::size_t> train_sequence;   // dataset indices, presentation order
  std::size_t plasticity_events = 0;
  NetworkTopology initial_topology;
  NetworkTopology final_topology;

  const std::vector<ClusterReport>& phase(Phase p) const { return p == Phase::Baseline ? baseline : trained; }
};

/// Spike records of the test presentations, if the caller wants them.
struct TrialCapture {
  std::vector<SpikeRecord> baseline;
  std::vector<SpikeRecord> trained;
  std::vector<int> labels;
};

namespace detail {

inline std::vector<ClusterReport> evaluate(Simulator& sim, NetworkTopology& topology,
                                           const std::vector<InputSpikePattern>& inputs,
                                           const std::vector<int>& labels, const ExperimentConfig& config,
                                           std::vector<SpikeRecord>* records) {
  std::vector<Pgp> pgps;
  pgps.reserve(inputs.size());
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    SpikeRecord record = sim.run_trial(topology, inputs[i]);
    pgps.push_back(extract(record, topology, config.readout_layers, i, labels[i]));
    if (records) records->push_back(std::move(record));
  }
  std::vector<ClusterReport> out;
  for (double theta : config.thresholds) {
    out.push_back(cluster_and_score(pgps, theta, config.split.trained, config.split.unseen));
  }
  return out;
}

}  // namespace detail

/// Full protocol for one network: generate, baseline test (plasticity off),
/// train (plasticity on, seeded interleaved order), retest on the identical
/// test list (plasticity off).
inline ExperimentReport run_single(const ExperimentConfig& config, const Dataset& data,
                                   std::size_t network_index = 0, TrialCapture* capture = nullptr) {
  config.check();
  ExperimentReport report;
  report.network_index = network_index;
  report.seeds = NetworkSeeds::derive(child_seed(config.seed, network_index));
  report.thresholds = config.thresholds;

  NetworkTopology topology = generate_feedforward(config.layer_sizes, config.connection_probability, config.weight,
                                                  config.initial_delays, report.seeds.topology);
  report.initial_topology = topology;

  SplitSpec spec = config.split;
  spec.seed = report.seeds.split;
  const Split split = build_split(data.labels, spec);
  report.test_instances = split.test;

  std::vector<InputSpikePattern> test_inputs;
  std::vector<int> test_labels;
  for (std::size_t idx : split.test) {
    const Instance inst = data.instance(idx);
    test_inputs.push_back(encode(inst.pixels, config.encoder));
    test_labels.push_back(inst.label);
  }
  if (capture) capture->labels = test_labels;

  Simulator sim(config.trial);
  report.baseline = detail::evaluate(sim, topology, test_inputs, test_labels, config,
                                     capture ? &capture->baseline : nullptr);

  std::mt19937_64 order_rng(report.seeds.order);
  std::size_t events = 0;
  sim.set_observer([&events](const PlasticityEvent&) { ++events; });
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::vector<std::size_t> order = split.train;
    std::shuffle(order.begin(), order.end(), order_rng);
    for (std::size_t idx : order) {
      const InputSpikePattern input = encode(data.instance(idx).pixels, config.encoder);
      sim.run_trial(topology, input, &config.plasticity);
      report.train_sequence.push_back(idx);
    }
  }
  sim.set_observer({});
  report.plasticity_events = events;

  report.trained = detail::evaluate(sim, topology, test_inputs, test_labels, config,
                                    capture ? &capture->trained : nullptr);
  report.final_topology = std::move(topology);
  return report;
}

inline constexpr std::size_t kHistogramBins = 10;

/// Accuracy distribution of one (threshold, phase, evaluation) cell.
struct AccuracyStats {
  double mean = 0.0;
  double non_separable_fraction = 0.0;
  std::array<std::size_t, kHistogramBins> histogram{};  // [k/10, (k+1)/10), last bin closed
};

struct ThresholdSummary {
  double threshold = 0.0;
  AccuracyStats trained_class[2];  // indexed by Phase
  AccuracyStats unseen_class[2];
  std::size_t separable_both = 0;  // trained classes separable before and after training
  std::size_t improved = 0;        // of those, post-training accuracy >= baseline
  double mean_improvement = 0.0;   // over separable_both networks
  std::size_t unseen_separable_after = 0;
};

struct SweepSummary {
  std::size_t networks = 0;
  std::uint64_t master_seed = 0;
  std::vector<ThresholdSummary> per_threshold;
};

inline std::size_t histogram_bin(double accuracy) {
  const auto bin = static_cast<std::size_t>(accuracy * kHistogramBins);
  return std::min(bin, kHistogramBins - 1);
}

/// Aggregates reports in network-index order.
inline SweepSummary summarize(const std::vector<ExperimentReport>& reports, std::uint64_t master_seed) {
  SweepSummary summary;
  summary.networks = reports.size();
  summary.master_seed = master_seed;
  if (reports.empty()) return summary;
  const double n = static_cast<double>(reports.size());
  for (std::size_t t = 0; t < reports.front().thresholds.size(); ++t) {
    ThresholdSummary ts;
    ts.threshold = reports.front().thresholds[t];
    for (Phase phase : {Phase::Baseline, Phase::Trained}) {
      auto& tc = ts.trained_class[static_cast<int>(phase)];
      auto& uc = ts.unseen_class[static_cast<int>(phase)];
      for (const ExperimentReport& r : reports) {
        const ClusterReport& c = r.phase(phase)[t];
        tc.mean += c.trained_accuracy;
        tc.non_separable_fraction += c.trained_separable ? 0.0 : 1.0;
        ++tc.histogram[histogram_bin(c.trained_accuracy)];
        uc.mean += c.unseen_accuracy;
        uc.non_separable_fraction += c.unseen_separable ? 0.0 : 1.0;
        ++uc.histogram[histogram_bin(c.unseen_accuracy)];
      }
      for (AccuracyStats* s : {&tc, &uc}) {
        s->mean /= n;
        s->non_separable_fraction /= n;
      }
    }
    for (const ExperimentReport& r : reports) {
      const ClusterReport& before = r.baseline[t];
      const ClusterReport& after = r.trained[t];
      if (after.unseen_separable) ++ts.unseen_separable_after;
      if (!before.trained_separable || !after.trained_separable) continue;
      ++ts.separable_both;
      if (after.trained_accuracy >= before.trained_accuracy) ++ts.improved;
      ts.mean_improvement += after.trained_accuracy - before.trained_accuracy;
    }
    if (ts.separable_both > 0) ts.mean_improvement /= static_cast<double>(ts.separable_both);
    summary.per_threshold.push_back(ts);
  }
  return summary;
}

struct SweepResult {
  std::vector<ExperimentReport> reports;
  SweepSummary summary;
};

/// Runs `n_networks` independent networks on up to `jobs` threads. Results
/// do not depend on `jobs`: each network's seed depends only on its index.
inline SweepResult run_sweep(const ExperimentConfig& config, const Dataset& data, std::size_t n_networks,
                             std::size_t jobs = 1) {
  if (n_networks == 0) throw ConfigError("sweep needs at least one network");
  config.check();
  jobs = std::clamp<std::size_t>(jobs, 1, n_networks);

  SweepResult result;
  result.reports.resize(n_networks);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < n_networks; i = next++) {
      try {
        result.reports[i] = run_single(config, data, i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = n_networks;
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    for (std::size_t j = 1; j < jobs; ++j) pool.emplace_back(worker);
    worker();
  }
  if (failure) std::rethrow_exception(failure);
  result.summary = summarize(result.reports, config.seed);
  return result;
}

}  // namespace delaysnn
