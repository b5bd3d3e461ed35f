#pragma once

#include <algorithm>
#include <cstdio>
#include <ostream>
#include <string>
#include <tuple>
#include <vector>

#include "delaysnn/experiment.hpp"
#include "delaysnn/pgp.hpp"
#include "delaysnn/spikes.hpp"

namespace delaysnn {

inline constexpr const char* kReportSchema = "# schema delaysnn-report 1";
inline constexpr const char* kSummarySchema = "# schema delaysnn-summary 1";
inline constexpr const char* kHistogramSchema = "# schema delaysnn-histogram 1";
inline constexpr const char* kRasterSchema = "# schema delaysnn-raster 1";
inline constexpr const char* kLatencySchema = "# schema delaysnn-latency 1";

/// Fixed six-decimal rendering so report files are byte-stable.
inline std::string fmt(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", value);
  return buf;
}

/// One record per threshold: cluster assignments, modal clusters,
/// accuracies and separability flags.
inline void write_cluster_report(std::ostream& out, const ClusterReport& report) {
  out << "clusters " << report.cluster_count << '\n';
  out << "trained_accuracy " << fmt(report.trained_accuracy) << '\n';
  out << "trained_separable " << report.trained_separable << '\n';
  out << "unseen_accuracy " << fmt(report.unseen_accuracy) << '\n';
  out << "unseen_separable " << report.unseen_separable << '\n';
  auto classes = [&](const char* kind, const std::vector<ClassOutcome>& group) {
    for (const ClassOutcome& c : group) {
      out << "class " << c.label << ' ' << kind << " total " << c.total << " modal ";
      if (c.modal) out << *c.modal; else out << '-';
      out << " count " << c.modal_count << '\n';
    }
  };
  classes("trained", report.trained);
  classes("unseen", report.unseen);
  out << "assignment";
  for (std::size_t a : report.assignment) out << ' ' << a;
  out << '\n';
}

inline void write_report(std::ostream& out, const ExperimentReport& report, const std::string& delays_ref = {}) {
  out << "network " << report.network_index << '\n';
  out << "seed " << report.seeds.network << '\n';
  out << "topology_seed " << report.seeds.topology << '\n';
  out << "split_seed " << report.seeds.split << '\n';
  out << "order_seed " << report.seeds.order << '\n';
  out << "synapses " << report.final_topology.synapses().size() << '\n';
  out << "test_instances";
  for (std::size_t i : report.test_instances) out << ' ' << i;
  out << '\n';
  out << "train_sequence";
  for (std::size_t i : report.train_sequence) out << ' ' << i;
  out << '\n';
  out << "plasticity_events " << report.plasticity_events << '\n';
  if (!delays_ref.empty()) out << "delays " << delays_ref << '\n';
  for (std::size_t t = 0; t < report.thresholds.size(); ++t) {
    for (Phase phase : {Phase::Baseline, Phase::Trained}) {
      out << "threshold " << fmt(report.thresholds[t]) << " phase " << phase_name(phase) << '\n';
      write_cluster_report(out, report.phase(phase)[t]);
    }
  }
  out << kReportSchema << '\n';
}

inline void write_summary(std::ostream& out, const SweepSummary& summary) {
  out << "networks " << summary.networks << '\n';
  out << "master_seed " << summary.master_seed << '\n';
  for (const ThresholdSummary& ts : summary.per_threshold) {
    out << "threshold " << fmt(ts.threshold) << '\n';
    for (Phase phase : {Phase::Baseline, Phase::Trained}) {
      const auto p = static_cast<int>(phase);
      out << phase_name(phase) << " trained_mean_accuracy " << fmt(ts.trained_class[p].mean)
          << " trained_non_separable " << fmt(ts.trained_class[p].non_separable_fraction)
          << " unseen_mean_accuracy " << fmt(ts.unseen_class[p].mean)
          << " unseen_non_separable " << fmt(ts.unseen_class[p].non_separable_fraction) << '\n';
    }
    out << "separable_both " << ts.separable_both << " improved " << ts.improved << " mean_improvement "
        << fmt(ts.mean_improvement) << " unseen_separable_after " << ts.unseen_separable_after << '\n';
  }
  out << kSummarySchema << '\n';
}

/// `bin_low bin_high count` lines.
inline void write_histogram(std::ostream& out, const AccuracyStats& stats) {
  for (std::size_t b = 0; b < kHistogramBins; ++b) {
    out << fmt(static_cast<double>(b) / kHistogramBins) << ' ' << fmt(static_cast<double>(b + 1) / kHistogramBins)
        << ' ' << stats.histogram[b] << '\n';
  }
  out << kHistogramSchema << '\n';
}

/// Raster line: `time_ms neuron_index input_id class`.
struct RasterLine {
  double time = 0.0;
  NeuronIndex neuron = 0;
  std::size_t input_id = 0;
  int label = 0;
};

inline void write_raster(std::ostream& out, std::vector<RasterLine> lines) {
  std::stable_sort(lines.begin(), lines.end(), [](const RasterLine& a, const RasterLine& b) {
    return std::tie(a.time, a.neuron, a.input_id) < std::tie(b.time, b.neuron, b.input_id);
  });
  for (const RasterLine& l : lines) out << fmt(l.time) << ' ' << l.neuron << ' ' << l.input_id << ' ' << l.label << '\n';
  out << kRasterSchema << '\n';
}

/// Latency dump: `neuron_index time_ms`.
inline void write_latencies(std::ostream& out, const InputSpikePattern& pattern) {
  for (const SpikeEvent& s : pattern) out << s.neuron << ' ' << fmt(s.time) << '\n';
  out << kLatencySchema << '\n';
}

}  // namespace delaysnn
