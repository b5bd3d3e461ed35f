#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <optional>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "delaysnn/error.hpp"

namespace delaysnn {

using NeuronIndex = std::uint32_t;
using SynapseIndex = std::size_t;

struct Synapse {
  NeuronIndex pre = 0;
  NeuronIndex post = 0;
  double weight = 0.0;
  double delay = 0.0;  // ms

  friend bool operator==(const Synapse&, const Synapse&) = default;
};

/// Closed integer range of initial delays, in ms.
struct DelayRange {
  int lo = 1;
  int hi = 39;
};

/// Allowed interval for delays at any time, including after training.
struct DelayBounds {
  double min = 1.0;
  double max = 60.0;
};

/// Layered feedforward network. Neurons are numbered consecutively layer by
/// layer; layer 0 is the input layer.
class NetworkTopology {
 public:
  NetworkTopology() = default;

  NetworkTopology(std::vector<std::size_t> layer_sizes, std::vector<Synapse> synapses)
      : layer_sizes_(std::move(layer_sizes)), synapses_(std::move(synapses)) {
    offsets_.reserve(layer_sizes_.size() + 1);
    offsets_.push_back(0);
    for (std::size_t n : layer_sizes_) offsets_.push_back(offsets_.back() + n);
  }

  const std::vector<std::size_t>& layer_sizes() const { return layer_sizes_; }
  std::size_t layer_count() const { return layer_sizes_.size(); }
  std::size_t neuron_count() const { return offsets_.empty() ? 0 : offsets_.back(); }

  /// First neuron index of `layer`.
  NeuronIndex layer_begin(std::size_t layer) const {
    return static_cast<NeuronIndex>(offsets_.at(layer));
  }
  /// One past the last neuron index of `layer`.
  NeuronIndex layer_end(std::size_t layer) const {
    return static_cast<NeuronIndex>(offsets_.at(layer + 1));
  }

  /// Layer containing `neuron`, or nullopt when out of range.
  std::optional<std::size_t> layer_of(NeuronIndex neuron) const {
    if (neuron >= neuron_count()) return std::nullopt;
    auto it = std::upper_bound(offsets_.begin(), offsets_.end(), std::size_t{neuron});
    return static_cast<std::size_t>(it - offsets_.begin()) - 1;
  }

  bool is_input(NeuronIndex neuron) const { return neuron < layer_end(0); }

  const std::vector<Synapse>& synapses() const { return synapses_; }
  const Synapse& synapse(SynapseIndex i) const { return synapses_.at(i); }

  /// Only delays are mutable after construction.
  void set_delay(SynapseIndex i, double delay) { synapses_.at(i).delay = delay; }

  friend bool operator==(const NetworkTopology&, const NetworkTopology&) = default;

 private:
  std::vector<std::size_t> layer_sizes_;
  std::vector<std::size_t> offsets_;
  std::vector<Synapse> synapses_;
};

/// Random feedforward wiring: every ordered pair between adjacent layers is
/// connected independently with `connection_probability`, and each synapse
/// draws an integer delay uniformly from `delays`. Pure in `seed`.
inline NetworkTopology generate_feedforward(const std::vector<std::size_t>& layer_sizes,
                                            double connection_probability, double weight,
                                            DelayRange delays, std::uint64_t seed) {
  if (layer_sizes.size() < 2) {
    throw ConfigError("network needs at least 2 layers, got " +
                      std::to_string(layer_sizes.size()));
  }
  if (!(connection_probability >= 0.0 && connection_probability <= 1.0)) {
    throw ConfigError("connection probability must lie in [0, 1]");
  }
  if (delays.lo > delays.hi) throw ConfigError("initial delay range is empty");

  std::mt19937_64 rng(seed);
  std::bernoulli_distribution connect(connection_probability);
  std::uniform_int_distribution<int> draw_delay(delays.lo, delays.hi);

  std::vector<Synapse> synapses;
  std::size_t base = 0;
  for (std::size_t layer = 0; layer + 1 < layer_sizes.size(); ++layer) {
    const std::size_t next = base + layer_sizes[layer];
    for (std::size_t i = 0; i < layer_sizes[layer]; ++i) {
      for (std::size_t j = 0; j < layer_sizes[layer + 1]; ++j) {
        if (!connect(rng)) continue;
        synapses.push_back({static_cast<NeuronIndex>(base + i),
                            static_cast<NeuronIndex>(next + j), weight,
                            static_cast<double>(draw_delay(rng))});
      }
    }
    base = next;
  }
  return NetworkTopology(layer_sizes, std::move(synapses));
}

/// Checks structural invariants. Returns a description of the first
/// violation, or nullopt when the topology is well formed.
inline std::optional<std::string> validate(const NetworkTopology& topology,
                                           DelayBounds bounds = {}) {
  if (topology.layer_count() < 2) return "fewer than 2 layers";
  std::set<std::pair<NeuronIndex, NeuronIndex>> seen;
  const auto& synapses = topology.synapses();
  for (std::size_t i = 0; i < synapses.size(); ++i) {
    const Synapse& s = synapses[i];
    const std::string where = " (synapse " + std::to_string(i) + ")";
    auto pre_layer = topology.layer_of(s.pre);
    auto post_layer = topology.layer_of(s.post);
    if (!pre_layer || !post_layer) return "neuron index out of range" + where;
    if (*post_layer != *pre_layer + 1) return "non-adjacent layers" + where;
    if (!seen.emplace(s.pre, s.post).second) return "duplicate synapse" + where;
    if (!std::isfinite(s.delay)) return "non-finite delay" + where;
    if (s.delay < bounds.min) return "delay below minimum" + where;
    if (s.delay > bounds.max) return "delay above maximum" + where;
    if (s.weight != synapses.front().weight) return "inhomogeneous weight" + where;
  }
  return std::nullopt;
}

inline constexpr const char* kTopologySchema = "# schema delaysnn-topology 1";

/// Line format: `layers: n1 n2 ...`, then `pre post weight delay` per synapse.
inline void write_topology(std::ostream& out, const NetworkTopology& topology) {
  out << "layers:";
  for (std::size_t n : topology.layer_sizes()) out << ' ' << n;
  out << '\n';
  char line[96];
  for (const Synapse& s : topology.synapses()) {
    std::snprintf(line, sizeof line, "%u %u %.6f %.6f\n", s.pre, s.post, s.weight, s.delay);
    out << line;
  }
  out << kTopologySchema << '\n';
}

inline NetworkTopology read_topology(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("layers:", 0) != 0) {
    throw DataError("topology: missing 'layers:' header");
  }
  std::vector<std::size_t> sizes;
  {
    std::istringstream header(line.substr(7));
    std::size_t n = 0;
    while (header >> n) sizes.push_back(n);
  }
  std::vector<Synapse> synapses;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    std::istringstream fields(line);
    Synapse s;
    if (!(fields >> s.pre >> s.post >> s.weight >> s.delay)) {
      throw DataError("topology: malformed synapse at line " + std::to_string(line_no));
    }
    synapses.push_back(s);
  }
  return NetworkTopology(std::move(sizes), std::move(synapses));
}

}  // namespace delaysnn
