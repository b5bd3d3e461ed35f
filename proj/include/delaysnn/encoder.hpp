#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>

#include "delaysnn/error.hpp"
#include "delaysnn/neuron.hpp"
#include "delaysnn/spikes.hpp"

namespace delaysnn {

struct EncoderConfig {
  double t_max = 40.0;  // ms
  double dt = kDefaultDt;
  bool invert = false;  // bright pixels first instead of dark pixels first
};

/// Latency code: one spike per pixel, lowest value at 0 ms and highest at
/// t_max, linear in between on this instance's own min-max range. Times
/// are snapped to the simulation grid (half to even). A flat image fires
/// everything at 0 ms. Input neuron k is pixel k.
inline InputSpikePattern encode(std::span<const double> pixels, const EncoderConfig& config = {}) {
  if (pixels.empty()) return {};
  for (double p : pixels) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("pixel value " + std::to_string(p) + " outside [0, 1]");
  }
  const auto [lo_it, hi_it] = std::minmax_element(pixels.begin(), pixels.end());
  const double lo = *lo_it;
  const double range = *hi_it - lo;
  InputSpikePattern pattern;
  pattern.reserve(pixels.size());
  for (std::size_t k = 0; k < pixels.size(); ++k) {
    double rel = range > 0.0 ? (pixels[k] - lo) / range : 0.0;
    if (config.invert && range > 0.0) rel = 1.0 - rel;
    const double t = std::nearbyint(config.t_max * rel / config.dt) * config.dt;
    pattern.push_back({static_cast<NeuronIndex>(k), t});
  }
  return pattern;
}

}  // namespace delaysnn
