#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "delaysnn/error.hpp"
#include "delaysnn/topology.hpp"

namespace delaysnn {

/// Delay-alignment rule constants. Defaults: 10 ms window, amplitude and
/// slope of 3 ms, delays clamped to [1, 60] ms.
struct PlasticityConfig {
  double window = 10.0;
  double amplitude = 3.0;
  double slope = 3.0;
  double delay_min = 1.0;
  double delay_max = 60.0;

  DelayBounds bounds() const { return {delay_min, delay_max}; }

  void check() const {
    if (!(window > 0.0)) throw ConfigError("plasticity window must be > 0");
    if (!(amplitude > 0.0)) throw ConfigError("plasticity amplitude must be > 0");
    if (!(slope > 0.0)) throw ConfigError("plasticity slope must be > 0");
    if (!(delay_min < delay_max)) throw ConfigError("delay_min must be < delay_max");
  }
};

/// A pre-synaptic spike reaching its post-synaptic neuron at an exact
/// (off-grid) time.
struct Arrival {
  SynapseIndex synapse = 0;
  double time = 0.0;

  friend bool operator==(const Arrival&, const Arrival&) = default;
};

struct DelayUpdate {
  SynapseIndex synapse = 0;
  double delta = 0.0;
  double new_delay = 0.0;
};

/// Arrivals whose lag to the post spike lies in [0, window).
inline std::vector<Arrival> collect_window(double post_spike_time,
                                           std::span<const Arrival> arrivals,
                                           const PlasticityConfig& config = {}) {
  std::vector<Arrival> out;
  for (const Arrival& a : arrivals) {
    const double lag = post_spike_time - a.time;
    if (lag >= 0.0 && lag < config.window) out.push_back(a);
  }
  return out;
}

/// Mean arrival time; nullopt for an empty set, which means no update.
inline std::optional<double> mean_arrival(std::span<const Arrival> participants) {
  if (participants.empty()) return std::nullopt;
  double sum = 0.0;
  for (const Arrival& a : participants) sum += a.time;
  return sum / static_cast<double>(participants.size());
}

/// Delay change pulling one arrival toward the mean:
/// -amplitude * tanh((arrival - mean) / slope).
inline double delay_update(double arrival_time, double mean,
                           const PlasticityConfig& config = {}) {
  return -config.amplitude * std::tanh((arrival_time - mean) / config.slope);
}

/// Updates for one post-synaptic spike, computed from a frozen view of the
/// arrivals; new_delay is filled from the current topology with clamping.
inline std::vector<DelayUpdate> compute_updates(double post_spike_time,
                                                std::span<const Arrival> arrivals,
                                                const NetworkTopology& topology,
                                                const PlasticityConfig& config = {}) {
  const std::vector<Arrival> participants = collect_window(post_spike_time, arrivals, config);
  const auto mean = mean_arrival(participants);
  std::vector<DelayUpdate> updates;
  if (!mean) return updates;
  updates.reserve(participants.size());
  for (const Arrival& a : participants) {
    const double delta = delay_update(a.time, *mean, config);
    const double old = topology.synapse(a.synapse).delay;
    updates.push_back({a.synapse, delta, std::clamp(old + delta, config.delay_min, config.delay_max)});
  }
  return updates;
}

/// Applies each update as clamp(old + delta). Rewrites `new_delay` with the
/// value actually stored.
inline void apply_updates(NetworkTopology& topology, std::span<DelayUpdate> updates,
                          const PlasticityConfig& config = {}) {
  for (DelayUpdate& u : updates) {
    if (u.synapse >= topology.synapses().size()) {
      throw Fault("apply_updates: unknown synapse " + std::to_string(u.synapse));
    }
    const double old = topology.synapse(u.synapse).delay;
    u.new_delay = std::clamp(old + u.delta, config.delay_min, config.delay_max);
    topology.set_delay(u.synapse, u.new_delay);
  }
}

}  // namespace delaysnn
