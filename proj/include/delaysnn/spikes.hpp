#pragma once

#include <algorithm>
#include <tuple>
#include <vector>

#include "delaysnn/topology.hpp"

namespace delaysnn {

struct SpikeEvent {
  NeuronIndex neuron = 0;
  double time = 0.0;  // ms, on the simulation grid

  friend bool operator==(const SpikeEvent&, const SpikeEvent&) = default;
};

inline bool spike_order(const SpikeEvent& a, const SpikeEvent& b) {
  return std::tie(a.time, a.neuron) < std::tie(b.time, b.neuron);
}

/// Input-layer spikes for one trial; the encoder emits exactly one per input
/// neuron.
using InputSpikePattern = std::vector<SpikeEvent>;

/// Every spike of one trial, inputs included, sorted by (time, neuron).
struct SpikeRecord {
  std::vector<SpikeEvent> spikes;
  double duration = 0.0;

  friend bool operator==(const SpikeRecord&, const SpikeRecord&) = default;
};

}  // namespace delaysnn
