#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "delaysnn/error.hpp"
#include "delaysnn/neuron.hpp"
#include "delaysnn/plasticity.hpp"
#include "delaysnn/spikes.hpp"
#include "delaysnn/topology.hpp"

namespace delaysnn {

/// A spike in flight along one synapse. The exact arrival time feeds the
/// learning rule; the rounded step decides when the drive is applied.
struct PendingDelivery {
  SynapseIndex synapse = 0;
  double arrival_time_exact = 0.0;
  std::int64_t arrival_step = 0;
};

/// Grid step for a time in ms, rounding half to even.
inline std::int64_t to_step(double time, double dt = kDefaultDt) {
  return static_cast<std::int64_t>(std::nearbyint(time / dt));
}

inline PendingDelivery schedule_delivery(const SpikeEvent& spike, SynapseIndex index,
                                         const Synapse& synapse, double dt = kDefaultDt) {
  const double exact = spike.time + synapse.delay;
  return {index, exact, to_step(exact, dt)};
}

/// Emitted once per post-synaptic spike that triggered delay learning.
struct PlasticityEvent {
  NeuronIndex post = 0;
  double time = 0.0;
  std::span<const DelayUpdate> updates;
};

struct TrialConfig {
  double duration = 200.0;  // ms
  double dt = kDefaultDt;
  IzhikevichParams neuron = IzhikevichParams::regular_spiking();
};

/// Clock-driven trial runner. Input-layer neurons are pure spike sources;
/// every other neuron follows Izhikevich dynamics driven by impulse synapses:
/// a delivery injects current weight/dt for one step, i.e. a jump of
/// `weight` mV independent of dt.
///
/// Per step: (1) emit input spikes due now, (2) deliver arrivals due now,
/// (3) advance neurons, (4) record and schedule this step's spikes,
/// (5) apply delay learning for each post-synaptic spike.
///
/// State is fully reset at the start of every trial; only delays persist in
/// the topology. One instance is single-threaded but may be moved between
/// threads between trials.
class Simulator {
 public:
  using EventObserver = std::function<void(const PlasticityEvent&)>;

  explicit Simulator(TrialConfig config = {}) : config_(config) {}

  const TrialConfig& config() const { return config_; }

  /// Called after each applied plasticity event (training trials only).
  void set_observer(EventObserver observer) { observer_ = std::move(observer); }

  /// Runs one trial. With `plasticity` null the topology is never written.
  SpikeRecord run_trial(NetworkTopology& topology, const InputSpikePattern& input,
                        const PlasticityConfig* plasticity = nullptr) {
    const double dt = config_.dt;
    const std::int64_t n_steps = to_step(config_.duration, dt);
    const DelayBounds bounds = plasticity ? plasticity->bounds() : DelayBounds{};
    if (plasticity) plasticity->check();
    if (auto violation = validate(topology, bounds)) {
      throw ConfigError("invalid topology: " + *violation);
    }
    prepare(topology, input, n_steps, bounds);

    SpikeRecord record;
    record.duration = config_.duration;
    std::vector<NeuronIndex> fired;
    std::vector<Arrival> arrivals;
    std::vector<DelayUpdate> updates;
    std::size_t next_input = 0;
    const NeuronIndex first_dynamic = topology.layer_end(0);

    for (std::int64_t s = 0; s < n_steps; ++s) {
      while (next_input < inputs_.size() && to_step(inputs_[next_input].time, dt) == s) {
        const SpikeEvent spike{inputs_[next_input].neuron, static_cast<double>(s) * dt};
        record.spikes.push_back(spike);
        emit(topology, spike, s, n_steps);
        ++next_input;
      }

      auto& slot = ring_[static_cast<std::size_t>(s) % ring_.size()];
      for (const PendingDelivery& d : slot) {
        const Synapse& syn = topology.synapse(d.synapse);
        drive_[syn.post] += syn.weight / dt;
        last_arrival_[d.synapse] = d.arrival_time_exact;
      }
      slot.clear();

      fired.clear();
      for (NeuronIndex n = first_dynamic; n < states_.size(); ++n) {
        const StepResult r = step(states_[n], config_.neuron, drive_[n], dt);
        states_[n] = r.state;
        drive_[n] = 0.0;
        if (r.fired) fired.push_back(n);
      }

      const double t = static_cast<double>(s + 1) * dt;
      for (NeuronIndex n : fired) {
        const SpikeEvent spike{n, t};
        record.spikes.push_back(spike);
        emit(topology, spike, s + 1, n_steps);
      }

      if (!plasticity) continue;
      for (NeuronIndex n : fired) {
        arrivals.clear();
        for (SynapseIndex syn : incoming_[n]) {
          if (!std::isnan(last_arrival_[syn])) arrivals.push_back({syn, last_arrival_[syn]});
        }
        updates = compute_updates(t, arrivals, topology, *plasticity);
        if (updates.empty()) continue;
        apply_updates(topology, updates, *plasticity);
        if (observer_) observer_({n, t, updates});
      }
    }

    std::stable_sort(record.spikes.begin(), record.spikes.end(), spike_order);
    return record;
  }

 private:
  void prepare(const NetworkTopology& topology, const InputSpikePattern& input,
               std::int64_t n_steps, DelayBounds bounds) {
    const std::size_t n = topology.neuron_count();
    states_.assign(n, rest_state(config_.neuron));
    drive_.assign(n, 0.0);
    outgoing_.assign(n, {});
    incoming_.assign(n, {});
    const auto& synapses = topology.synapses();
    for (SynapseIndex i = 0; i < synapses.size(); ++i) {
      outgoing_[synapses[i].pre].push_back(i);
      incoming_[synapses[i].post].push_back(i);
    }
    last_arrival_.assign(synapses.size(), std::numeric_limits<double>::quiet_NaN());

    // Slots cover the largest delay the bounds permit plus rounding slack.
    const auto horizon = static_cast<std::size_t>(std::ceil(bounds.max / config_.dt)) + 2;
    ring_.assign(horizon, {});

    inputs_ = input;
    for (const SpikeEvent& spike : inputs_) {
      if (spike.neuron >= topology.layer_end(0)) {
        throw ConfigError("input spike on non-input neuron " + std::to_string(spike.neuron));
      }
      if (!(spike.time >= 0.0) || to_step(spike.time, config_.dt) >= n_steps) {
        throw ConfigError("input spike at " + std::to_string(spike.time) +
                          " ms lies outside the trial duration");
      }
    }
    std::stable_sort(inputs_.begin(), inputs_.end(), spike_order);
  }

  void emit(const NetworkTopology& topology, const SpikeEvent& spike, std::int64_t emit_step,
            std::int64_t n_steps) {
    for (SynapseIndex i : outgoing_[spike.neuron]) {
      const PendingDelivery d = schedule_delivery(spike, i, topology.synapse(i), config_.dt);
      if (d.arrival_step <= emit_step) throw Fault("delivery not after its emitting step");
      if (d.arrival_step - emit_step >= static_cast<std::int64_t>(ring_.size())) {
        throw Fault("delivery beyond event horizon");
      }
      if (d.arrival_step >= n_steps) continue;
      ring_[static_cast<std::size_t>(d.arrival_step) % ring_.size()].push_back(d);
    }
  }

  TrialConfig config_;
  EventObserver observer_;
  std::vector<NeuronState> states_;
  std::vector<double> drive_;
  std::vector<std::vector<SynapseIndex>> outgoing_;
  std::vector<std::vector<SynapseIndex>> incoming_;
  std::vector<double> last_arrival_;
  std::vector<std::vector<PendingDelivery>> ring_;
  InputSpikePattern inputs_;
};

}  // namespace delaysnn
