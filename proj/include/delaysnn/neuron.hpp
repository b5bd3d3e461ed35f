#pragma once

#include <cmath>

#include "delaysnn/error.hpp"

namespace delaysnn {

/// Simulation step in ms. Spike times, encoded latencies and delivery slots
/// all live on this grid.
inline constexpr double kDefaultDt = 0.5;

/// Izhikevich two-variable model parameters.
struct IzhikevichParams {
  double a = 0.02;   // recovery time scale (1/ms)
  double b = 0.2;    // recovery sensitivity
  double c = -65.0;  // reset potential (mV)
  double d = 8.0;    // recovery increment
  double threshold = 30.0;

  /// Regular spiking preset.
  static constexpr IzhikevichParams regular_spiking() { return {}; }

  constexpr bool valid() const { return a > 0.0 && d >= 0.0; }
};

struct NeuronState {
  double v = -65.0;  // membrane potential (mV)
  double u = -13.0;  // recovery variable

  friend bool operator==(const NeuronState&, const NeuronState&) = default;
};

struct StepResult {
  NeuronState state;
  bool fired = false;
};

/// Stable resting point for zero input.
constexpr NeuronState rest_state(const IzhikevichParams& params) {
  return {params.c, params.b * params.c};
}

/// One forward-Euler step of length dt: v first, then u using the new v.
/// When v reaches threshold the returned state is already reset and the
/// spike belongs to the end of this step.
inline StepResult step(NeuronState state, const IzhikevichParams& params,
                       double input_current, double dt = kDefaultDt) {
  if (!std::isfinite(state.v) || !std::isfinite(state.u) ||
      !std::isfinite(input_current)) {
    throw Fault("neuron step: non-finite state or input current");
  }
  const double v = state.v;
  double v_next = v + dt * (0.04 * v * v + 5.0 * v + 140.0 - state.u + input_current);
  double u_next = state.u + dt * params.a * (params.b * v_next - state.u);
  if (!std::isfinite(v_next) || !std::isfinite(u_next)) {
    throw Fault("neuron step: numerical blow-up");
  }
  if (v_next >= params.threshold) {
    return {{params.c, u_next + params.d}, true};
  }
  return {{v_next, u_next}, false};
}

}  // namespace delaysnn
