#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "delaysnn/spikes.hpp"
#include "delaysnn/topology.hpp"

namespace delaysnn {

/// One spike inside a pattern. `ordinal` counts firings of the same neuron
/// within the trial, starting at 1.
struct Token {
  NeuronIndex neuron = 0;
  std::uint32_t ordinal = 1;
  double time = 0.0;

  std::uint64_t key() const { return (std::uint64_t{neuron} << 32) | ordinal; }
  friend bool operator==(const Token&, const Token&) = default;
};

/// Polychronous group pattern: the ordered readout-layer spikes of one trial.
struct Pgp {
  std::vector<Token> tokens;
  std::size_t trial = 0;
  int label = 0;
};

/// Readout-layer spikes of `record` in (time, neuron) order. `layers` are
/// 0-based layer indices (input layer = 0).
inline Pgp extract(const SpikeRecord& record, const NetworkTopology& topology,
                   std::span<const std::size_t> layers, std::size_t trial = 0, int label = 0) {
  std::vector<char> selected(topology.neuron_count(), 0);
  for (std::size_t layer : layers) {
    for (NeuronIndex n = topology.layer_begin(layer); n < topology.layer_end(layer); ++n) selected[n] = 1;
  }
  std::vector<SpikeEvent> spikes;
  for (const SpikeEvent& s : record.spikes) {
    if (s.neuron < selected.size() && selected[s.neuron]) spikes.push_back(s);
  }
  std::stable_sort(spikes.begin(), spikes.end(), spike_order);
  std::unordered_map<NeuronIndex, std::uint32_t> seen;
  Pgp pgp{{}, trial, label};
  pgp.tokens.reserve(spikes.size());
  for (const SpikeEvent& s : spikes) pgp.tokens.push_back({s.neuron, ++seen[s.neuron], s.time});
  return pgp;
}

/// Length of the longest common subsequence of the two key sequences.
inline std::size_t lcs_length(std::span<const Token> a, std::span<const Token> b) {
  if (a.empty() || b.empty()) return 0;
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    const std::uint64_t ka = a[i - 1].key();
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = ka == b[j - 1].key() ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

/// Order-preserving matching spikes over the mean pattern length. Two empty
/// patterns match fully; one empty pattern matches nothing.
inline double match_ratio(std::span<const Token> a, std::span<const Token> b) {
  if (a.empty() && b.empty()) return 1.0;
  if (a.empty() || b.empty()) return 0.0;
  return 2.0 * static_cast<double>(lcs_length(a, b)) / static_cast<double>(a.size() + b.size());
}

inline double match_ratio(const Pgp& a, const Pgp& b) { return match_ratio(a.tokens, b.tokens); }

/// Per-key accumulated spike times of a cluster's members.
class CentroidAccumulator {
 public:
  void add(const Pgp& pgp) {
    ++members_;
    for (const Token& t : pgp.tokens) {
      auto& [count, sum] = stats_[t.key()];
      ++count;
      sum += t.time;
    }
  }

  /// Keys present in at least half of the members, at their mean time,
  /// ordered by (mean time, neuron, ordinal).
  std::vector<Token> centroid() const {
    std::vector<Token> out;
    for (const auto& [key, stat] : stats_) {
      if (2 * stat.first < members_) continue;
      out.push_back({static_cast<NeuronIndex>(key >> 32), static_cast<std::uint32_t>(key & 0xffffffffu),
                     stat.second / static_cast<double>(stat.first)});
    }
    std::sort(out.begin(), out.end(), [](const Token& a, const Token& b) {
      return std::tie(a.time, a.neuron, a.ordinal) < std::tie(b.time, b.neuron, b.ordinal);
    });
    return out;
  }

 private:
  std::size_t members_ = 0;
  std::map<std::uint64_t, std::pair<std::size_t, double>> stats_;
};

struct Cluster {
  std::vector<std::size_t> members;  // indices into the clustered list
  std::vector<Token> centroid;
};

/// Centroid of `members` recomputed from scratch.
inline std::vector<Token> recompute_centroid(std::span<const Pgp> pgps, std::span<const std::size_t> members) {
  CentroidAccumulator acc;
  for (std::size_t m : members) acc.add(pgps[m]);
  return acc.centroid();
}

/// Single pass in presentation order: each pattern joins the existing
/// cluster whose centroid it matches best if that ratio reaches `threshold`
/// (ties to the lowest cluster index), else it starts a new cluster.
inline std::vector<Cluster> cluster(std::span<const Pgp> pgps, double threshold) {
  std::vector<Cluster> clusters;
  std::vector<CentroidAccumulator> accumulators;
  for (std::size_t i = 0; i < pgps.size(); ++i) {
    std::optional<std::size_t> best;
    double best_ratio = -1.0;
    for (std::size_t c = 0; c < clusters.size(); ++c) {
      const double r = match_ratio(pgps[i].tokens, clusters[c].centroid);
      if (r >= threshold && r > best_ratio) {
        best = c;
        best_ratio = r;
      }
    }
    if (!best) {
      best = clusters.size();
      clusters.emplace_back();
      accumulators.emplace_back();
    }
    clusters[*best].members.push_back(i);
    accumulators[*best].add(pgps[i]);
    clusters[*best].centroid = accumulators[*best].centroid();
  }
  return clusters;
}

/// Cluster index for every pattern.
inline std::vector<std::size_t> assignments(const std::vector<Cluster>& clusters, std::size_t n) {
  std::vector<std::size_t> out(n, 0);
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    for (std::size_t m : clusters[c].members) out[m] = c;
  }
  return out;
}

struct ClassOutcome {
  int label = 0;
  std::size_t total = 0;           // test patterns of this class
  std::optional<std::size_t> modal;  // cluster with most of them
  std::size_t modal_count = 0;
};

/// Classification outcome of one clustering.
struct ClusterReport {
  double threshold = 0.0;
  std::vector<std::size_t> assignment;
  std::size_t cluster_count = 0;
  std::vector<ClassOutcome> trained;
  std::vector<ClassOutcome> unseen;
  double trained_accuracy = 0.0;
  bool trained_separable = false;
  double unseen_accuracy = 0.0;
  bool unseen_separable = false;
};

/// Modal cluster per class (ties to the lowest index). Trained classes are
/// separable when their modal clusters are pairwise distinct; the accuracy is
/// then the fraction of trained-class patterns sitting in their class's modal
/// cluster. An unseen class is separable when its modal cluster differs from
/// every trained modal cluster and from other unseen classes'. Non-separable
/// means accuracy 0.
inline ClusterReport score(const std::vector<std::size_t>& assignment, std::size_t cluster_count,
                           std::span<const int> labels, std::span<const int> trained,
                           std::span<const int> unseen, double threshold = 0.0) {
  ClusterReport report;
  report.threshold = threshold;
  report.assignment = assignment;
  report.cluster_count = cluster_count;

  auto outcome = [&](int label) {
    ClassOutcome o;
    o.label = label;
    std::vector<std::size_t> counts(cluster_count, 0);
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] != label) continue;
      ++o.total;
      ++counts[assignment[i]];
    }
    for (std::size_t c = 0; c < cluster_count; ++c) {
      if (counts[c] > o.modal_count) {
        o.modal = c;
        o.modal_count = counts[c];
      }
    }
    return o;
  };
  for (int label : trained) report.trained.push_back(outcome(label));
  for (int label : unseen) report.unseen.push_back(outcome(label));

  auto distinct = [](const std::vector<ClassOutcome>& group, const std::vector<ClassOutcome>& others) {
    for (std::size_t i = 0; i < group.size(); ++i) {
      if (!group[i].modal) return false;
      for (std::size_t j = i + 1; j < group.size(); ++j) {
        if (group[i].modal == group[j].modal) return false;
      }
      for (const ClassOutcome& o : others) {
        if (o.modal == group[i].modal) return false;
      }
    }
    return !group.empty();
  };
  auto accuracy = [](const std::vector<ClassOutcome>& group) {
    std::size_t hit = 0, total = 0;
    for (const ClassOutcome& o : group) {
      hit += o.modal_count;
      total += o.total;
    }
    return total == 0 ? 0.0 : static_cast<double>(hit) / static_cast<double>(total);
  };

  report.trained_separable = distinct(report.trained, {});
  report.trained_accuracy = report.trained_separable ? accuracy(report.trained) : 0.0;
  report.unseen_separable = distinct(report.unseen, report.trained);
  report.unseen_accuracy = report.unseen_separable ? accuracy(report.unseen) : 0.0;
  return report;
}

/// Clusters the patterns and scores them in one go.
inline ClusterReport cluster_and_score(std::span<const Pgp> pgps, double threshold,
                                       std::span<const int> trained, std::span<const int> unseen) {
  const auto clusters = cluster(pgps, threshold);
  std::vector<int> labels;
  labels.reserve(pgps.size());
  for (const Pgp& p : pgps) labels.push_back(p.label);
  return score(assignments(clusters, pgps.size()), clusters.size(), labels, trained, unseen, threshold);
}

}  // namespace delaysnn
