#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "delaysnn/error.hpp"
#include "delaysnn/experiment.hpp"

namespace delaysnn {

/// Flat `key = value` settings; `#` starts a comment. Lists are
/// comma-separated. Layer numbers are 1-based (layer 1 is the input layer).
///
///   layer_sizes = 100, 100, 100
///   connection_probability = 0.1
///   weight = 6
///   initial_delay_min = 1          initial_delay_max = 39
///   delay_min = 1                  delay_max = 60
///   plasticity_window = 10         plasticity_amplitude = 3
///   plasticity_slope = 3
///   trained_digits = 0, 1          unseen_digits = 2
///   train_instances = 20           test_instances = 25
///   pgp_thresholds = 0.8, 0.9
///   readout_layers = 2, 3
///   trial_duration = 200           dt = 0.5
///   latency_window = 40            invert = false
///   epochs = 1                     seed = 1
using Settings = std::map<std::string, std::string>;

namespace detail {

inline std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end) throw ConfigError("bad value for " + key + ": '" + text + "'");
  return value;
}

template <typename T>
std::vector<T> parse_list(const std::string& key, const std::string& text) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(parse_number<T>(key, item));
  }
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigError("bad boolean for " + key + ": '" + text + "'");
}

}  // namespace detail

inline Settings parse_settings(std::istream& in, const std::string& source = "config") {
  Settings settings;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(source + ":" + std::to_string(line_no) + ": expected 'key = value'");
    }
    settings[detail::trim(std::string_view(line).substr(0, eq))] = detail::trim(std::string_view(line).substr(eq + 1));
  }
  return settings;
}

inline Settings read_settings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  return parse_settings(in, path.string());
}

/// Applies `settings` on top of `config`. Unknown keys are rejected.
inline void apply_settings(ExperimentConfig& config, const Settings& settings) {
  using detail::parse_bool;
  using detail::parse_list;
  using detail::parse_number;
  for (const auto& [key, value] : settings) {
    if (key == "layer_sizes") config.layer_sizes = parse_list<std::size_t>(key, value);
    else if (key == "connection_probability") config.connection_probability = parse_number<double>(key, value);
    else if (key == "weight") config.weight = parse_number<double>(key, value);
    else if (key == "initial_delay_min") config.initial_delays.lo = parse_number<int>(key, value);
    else if (key == "initial_delay_max") config.initial_delays.hi = parse_number<int>(key, value);
    else if (key == "delay_min") config.plasticity.delay_min = parse_number<double>(key, value);
    else if (key == "delay_max") config.plasticity.delay_max = parse_number<double>(key, value);
    else if (key == "plasticity_window") config.plasticity.window = parse_number<double>(key, value);
    else if (key == "plasticity_amplitude") config.plasticity.amplitude = parse_number<double>(key, value);
    else if (key == "plasticity_slope") config.plasticity.slope = parse_number<double>(key, value);
    else if (key == "trained_digits") config.split.trained = parse_list<int>(key, value);
    else if (key == "unseen_digits") config.split.unseen = parse_list<int>(key, value);
    else if (key == "train_instances") config.split.train_count = parse_number<std::size_t>(key, value);
    else if (key == "test_instances") config.split.test_count = parse_number<std::size_t>(key, value);
    else if (key == "pgp_thresholds") config.thresholds = parse_list<double>(key, value);
    else if (key == "trial_duration") config.trial.duration = parse_number<double>(key, value);
    else if (key == "dt") config.encoder.dt = config.trial.dt = parse_number<double>(key, value);
    else if (key == "latency_window") config.encoder.t_max = parse_number<double>(key, value);
    else if (key == "invert") config.encoder.invert = parse_bool(key, value);
    else if (key == "epochs") config.epochs = parse_number<std::size_t>(key, value);
    else if (key == "seed") config.seed = parse_number<std::uint64_t>(key, value);
    else if (key == "readout_layers") {
      config.readout_layers.clear();
      for (std::size_t layer : parse_list<std::size_t>(key, value)) {
        if (layer < 1) throw ConfigError("readout_layers are numbered from 1");
        config.readout_layers.push_back(layer - 1);
      }
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
}

}  // namespace delaysnn
