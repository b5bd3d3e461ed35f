#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <random>
#include <set>

#include "delaysnn/simulator.hpp"
#include "oracles.hpp"

using namespace delaysnn;

namespace {

/// k inputs converging on neuron k with the given delays.
NetworkTopology fan_in(const std::vector<double>& delays, double weight = 6.0) {
  std::vector<Synapse> syn;
  for (std::size_t i = 0; i < delays.size(); ++i) {
    syn.push_back({static_cast<NeuronIndex>(i), static_cast<NeuronIndex>(delays.size()), weight, delays[i]});
  }
  return NetworkTopology({delays.size(), 1}, syn);
}

InputSpikePattern all_at(std::size_t n, double t) {
  InputSpikePattern p;
  for (std::size_t i = 0; i < n; ++i) p.push_back({static_cast<NeuronIndex>(i), t});
  return p;
}

std::size_t non_input_spikes(const SpikeRecord& r, const NetworkTopology& topo) {
  return static_cast<std::size_t>(
      std::count_if(r.spikes.begin(), r.spikes.end(), [&](const SpikeEvent& s) { return !topo.is_input(s.neuron); }));
}

/// Layer-by-layer reference: each non-input neuron integrated on its own
/// from the arrival times implied by already-computed upstream spikes.
std::vector<SpikeEvent> staged_reference(const NetworkTopology& topo, const InputSpikePattern& input, double duration) {
  const double dt = 0.5;
  std::vector<std::vector<double>> spikes(topo.neuron_count());
  for (const SpikeEvent& s : input) spikes[s.neuron].push_back(s.time);
  for (std::size_t layer = 1; layer < topo.layer_count(); ++layer) {
    for (NeuronIndex n = topo.layer_begin(layer); n < topo.layer_end(layer); ++n) {
      std::vector<double> arrivals;
      for (const Synapse& s : topo.synapses()) {
        if (s.post != n) continue;
        for (double t : spikes[s.pre]) {
          if (std::nearbyint((t + s.delay) / dt) < duration / dt) arrivals.push_back(t + s.delay);
        }
      }
      const auto trace = oracle::izhikevich(oracle::impulses(arrivals, topo.synapses().front().weight, duration), dt);
      for (std::size_t step : trace.spike_steps) spikes[n].push_back((step + 1) * dt);
    }
  }
  std::vector<SpikeEvent> out;
  for (NeuronIndex n = 0; n < spikes.size(); ++n) {
    for (double t : spikes[n]) out.push_back({n, t});
  }
  std::sort(out.begin(), out.end(), spike_order);
  return out;
}

}  // namespace

TEST(ScheduleDelivery, Examples) {
  const Synapse syn12{0, 1, 6.0, 12.0};
  auto d = schedule_delivery({0, 5.0}, 0, syn12);
  EXPECT_DOUBLE_EQ(d.arrival_time_exact, 17.0);
  EXPECT_EQ(d.arrival_step, 34);

  d = schedule_delivery({0, 0.0}, 0, {0, 1, 6.0, 1.25});
  EXPECT_EQ(d.arrival_step, 2);  // 2.5 rounds to even

  d = schedule_delivery({0, 10.0}, 0, {0, 1, 6.0, 39.0});
  EXPECT_DOUBLE_EQ(d.arrival_time_exact, 49.0);
  EXPECT_EQ(d.arrival_step, 98);

  EXPECT_EQ(schedule_delivery({0, 0.0}, 0, {0, 1, 6.0, 1.75}).arrival_step, 4);  // 3.5 -> 4
}

TEST(Simulator, EmptyInputIsSilent) {
  auto topo = generate_feedforward({100, 100, 100}, 0.1, 6.0, {1, 39}, 4);
  const auto copy = topo;
  Simulator sim;
  PlasticityConfig cfg;
  const auto rec = sim.run_trial(topo, {}, &cfg);
  EXPECT_TRUE(rec.spikes.empty());
  EXPECT_EQ(topo, copy);
}

TEST(Simulator, SingleImpulseIsSubthreshold) {
  const auto trace = oracle::izhikevich(oracle::impulses({10.0}, 6.0, 200.0));
  EXPECT_TRUE(trace.spike_steps.empty());
  const double before = trace.v[19];
  const double peak = *std::max_element(trace.v.begin() + 20, trace.v.end());
  EXPECT_LT(peak - before, 10.0);
  EXPECT_GT(peak - before, 5.0);

  auto topo = fan_in({10.0});
  const auto rec = Simulator().run_trial(topo, all_at(1, 0.0));
  EXPECT_EQ(non_input_spikes(rec, topo), 0u);
}

TEST(Simulator, CoincidenceThreshold) {
  // Oracle sweep: smallest number of simultaneous weight-6 impulses that fire
  // a resting RS neuron.
  std::size_t k_min = 0;
  for (std::size_t k = 1; k <= 10 && k_min == 0; ++k) {
    if (!oracle::izhikevich(oracle::impulses(std::vector<double>(k, 10.0), 6.0, 100.0)).spike_steps.empty()) k_min = k;
  }
  ASSERT_EQ(k_min, 3u);

  auto coincident = fan_in(std::vector<double>(k_min, 10.0));
  EXPECT_EQ(non_input_spikes(Simulator().run_trial(coincident, all_at(k_min, 0.0)), coincident), 1u);

  auto fewer = fan_in(std::vector<double>(k_min - 1, 10.0));
  EXPECT_EQ(non_input_spikes(Simulator().run_trial(fewer, all_at(k_min - 1, 0.0)), fewer), 0u);

  std::vector<double> spread;
  for (std::size_t i = 0; i < k_min; ++i) spread.push_back(10.0 + 8.0 * i);
  EXPECT_TRUE(oracle::izhikevich(oracle::impulses(spread, 6.0, 100.0)).spike_steps.empty());
  auto spread_topo = fan_in(spread);
  EXPECT_EQ(non_input_spikes(Simulator().run_trial(spread_topo, all_at(k_min, 0.0)), spread_topo), 0u);
}

TEST(Simulator, PlasticityOffNeverWrites) {
  auto topo = generate_feedforward({100, 100, 100}, 0.1, 6.0, {1, 39}, 8);
  const auto copy = topo;
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> t(0, 80);
  for (int trial = 0; trial < 5; ++trial) {
    InputSpikePattern in;
    for (NeuronIndex n = 0; n < 100; ++n) in.push_back({n, t(rng) * 0.5});
    Simulator().run_trial(topo, in);
  }
  EXPECT_EQ(topo, copy);
}

TEST(Simulator, MatchesStagedReference) {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<int> t(0, 80);
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    auto topo = generate_feedforward({100, 40, 40}, 0.2, 6.0, {1, 39}, seed);
    InputSpikePattern in;
    for (NeuronIndex n = 0; n < 100; ++n) in.push_back({n, (n % 3 == 0 ? 0 : t(rng)) * 0.5});
    const auto rec = Simulator().run_trial(topo, in);
    EXPECT_EQ(rec.spikes, staged_reference(topo, in, 200.0)) << "seed " << seed;
    EXPECT_GT(non_input_spikes(rec, topo), 0u);
  }
}

TEST(Simulator, RecordInvariants) {
  auto topo = generate_feedforward({100, 100, 100}, 0.1, 6.0, {1, 39}, 5);
  InputSpikePattern in;
  for (NeuronIndex n = 0; n < 100; ++n) in.push_back({n, (n * 7 % 81) * 0.5});
  PlasticityConfig cfg;
  std::size_t events = 0;
  Simulator sim;
  sim.set_observer([&](const PlasticityEvent& e) {
    ++events;
    std::set<SynapseIndex> seen;
    for (const DelayUpdate& u : e.updates) {
      EXPECT_TRUE(seen.insert(u.synapse).second);  // one arrival per synapse
      EXPECT_EQ(topo.synapse(u.synapse).post, e.post);
      EXPECT_LT(std::abs(u.delta), cfg.amplitude);
      EXPECT_GE(u.new_delay, cfg.delay_min);
      EXPECT_LE(u.new_delay, cfg.delay_max);
    }
  });
  const auto rec = sim.run_trial(topo, in, &cfg);
  EXPECT_TRUE(std::is_sorted(rec.spikes.begin(), rec.spikes.end(), spike_order));
  const std::size_t inputs = static_cast<std::size_t>(
      std::count_if(rec.spikes.begin(), rec.spikes.end(), [&](const SpikeEvent& s) { return topo.is_input(s.neuron); }));
  EXPECT_EQ(inputs, in.size());
  EXPECT_EQ(inputs + non_input_spikes(rec, topo), rec.spikes.size());
  EXPECT_GT(events, 0u);
  for (const SpikeEvent& s : rec.spikes) {
    EXPECT_GE(s.time, 0.0);
    EXPECT_LE(s.time, rec.duration);
  }
  EXPECT_FALSE(validate(topo, cfg.bounds()).has_value());
}

TEST(Simulator, Deterministic) {
  InputSpikePattern in;
  for (NeuronIndex n = 0; n < 100; ++n) in.push_back({n, (n * 13 % 81) * 0.5});
  PlasticityConfig cfg;
  auto a = generate_feedforward({100, 100, 100}, 0.1, 6.0, {1, 39}, 9);
  auto b = a;
  Simulator s1, s2;
  for (int i = 0; i < 3; ++i) {
    EXPECT_EQ(s1.run_trial(a, in, &cfg), s2.run_trial(b, in, &cfg));
  }
  EXPECT_EQ(a, b);
}

TEST(Simulator, StateResetsBetweenTrials) {
  auto topo = generate_feedforward({100, 100, 100}, 0.1, 6.0, {1, 39}, 10);
  InputSpikePattern in;
  for (NeuronIndex n = 0; n < 100; ++n) in.push_back({n, (n % 40) * 1.0});
  Simulator sim;
  const auto first = sim.run_trial(topo, in);
  sim.run_trial(topo, all_at(100, 0.0));
  EXPECT_EQ(sim.run_trial(topo, in), first);
}

TEST(Simulator, UpdatesMatchRuleOnArrivals) {
  // Three coincident-ish arrivals fire the post neuron; check the update
  // against the rule evaluated by hand.
  auto topo = fan_in({10.0, 11.0, 12.0}, 12.0);
  std::vector<DelayUpdate> seen;
  double t_post = 0.0;
  Simulator sim;
  sim.set_observer([&](const PlasticityEvent& e) {
    seen.assign(e.updates.begin(), e.updates.end());
    t_post = e.time;
  });
  PlasticityConfig cfg;
  sim.run_trial(topo, all_at(3, 0.0), &cfg);
  ASSERT_EQ(seen.size(), 3u);
  EXPECT_GT(t_post, 12.0);
  EXPECT_NEAR(seen[0].delta, 3.0 * std::tanh(1.0 / 3.0), 1e-12);
  EXPECT_NEAR(seen[1].delta, 0.0, 1e-12);
  EXPECT_NEAR(seen[2].delta, -3.0 * std::tanh(1.0 / 3.0), 1e-12);
  EXPECT_DOUBLE_EQ(topo.synapse(0).delay, 10.0 + seen[0].delta);
}

TEST(Simulator, MostRecentArrivalPerSynapse) {
  // Neuron 0 fires twice; only its later arrival may take part.
  auto topo = fan_in({5.0, 5.0, 5.0}, 6.0);
  const InputSpikePattern in{{0, 0.0}, {0, 2.0}, {1, 2.0}, {2, 2.0}};
  std::vector<DelayUpdate> updates;
  Simulator sim;
  sim.set_observer([&](const PlasticityEvent& e) { updates.assign(e.updates.begin(), e.updates.end()); });
  PlasticityConfig cfg;
  sim.run_trial(topo, in, &cfg);
  ASSERT_EQ(updates.size(), 3u);
  // All three latest arrivals are at 7 ms, so nothing moves.
  for (const DelayUpdate& u : updates) EXPECT_EQ(u.delta, 0.0);
}

TEST(Simulator, InputErrors) {
  auto topo = fan_in({5.0});
  Simulator sim;
  EXPECT_THROW(sim.run_trial(topo, {{0, 200.0}}), ConfigError);
  EXPECT_THROW(sim.run_trial(topo, {{0, -1.0}}), ConfigError);
  EXPECT_THROW(sim.run_trial(topo, {{1, 3.0}}), ConfigError);
}

TEST(Simulator, InvalidTopologyRejected) {
  NetworkTopology bad({1, 1}, {{0, 1, 6.0, 0.2}});
  EXPECT_THROW(Simulator().run_trial(bad, {{0, 0.0}}), ConfigError);
}
