#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "support.hpp"
#include "tdccim/io.hpp"
#include "tdccim/metrics.hpp"

using namespace tdccim;
using namespace tdccim::testing;

namespace {

CostParams defaults() { return io::load_cost_params(data_path("calibration/default.cfg")); }

void expect_consistent(const MetricsReport& r) {
  EXPECT_NEAR(r.power_w * r.latency_s, r.energy_j, 1e-12 * r.energy_j);
  EXPECT_NEAR(r.efficiency_tops_per_w * 1e3 * r.power_w, r.throughput_gops, 1e-9 * r.throughput_gops);
  EXPECT_NEAR(r.breakdown.total(), r.energy_j, 1e-15 * r.energy_j);
}

}  // namespace

TEST(Metrics, ZeroLayerNetworkIsAllZero) {
  MappingPlan empty = map_network(std::span<const LayerWorkload>{}, macro_for_kb(16));
  const auto r = evaluate(empty, defaults());
  EXPECT_EQ(r.energy_j, 0.0);
  EXPECT_EQ(r.latency_s, 0.0);
  EXPECT_EQ(r.power_w, 0.0);
  EXPECT_EQ(r.throughput_gops, 0.0);
  EXPECT_EQ(r.efficiency_tops_per_w, 0.0);
  EXPECT_EQ(r.cycles, 0);
}

TEST(Metrics, EnergyTermsFollowTheActivityModel) {
  CostParams p;
  p.e_mac_cycle = 1e-15;
  p.e_tdc_conv = 2e-15;
  p.e_write_bit = 3e-15;
  p.recycle_fraction = 0.5;
  p.e_offmacro_byte = 4e-15;
  p.p_leak = 1e-6;
  p.p_static = 1e-3;
  p.f_clk = 5e8;
  const MacroConfig c = macro_for_kb(16);
  const auto plan = map_network(full_utilization_workload(c), c);
  const auto& e = plan.entries[0];
  const auto r = evaluate(plan, p);
  const double latency = 58368 / 5e8;
  EXPECT_DOUBLE_EQ(r.latency_s, latency);
  EXPECT_DOUBLE_EQ(r.breakdown.compute_j, e.mac_groups * 2.0 * 2 * 1e-15);
  EXPECT_DOUBLE_EQ(r.breakdown.tdc_j, e.mac_groups * 8.0 * 2e-15);
  EXPECT_DOUBLE_EQ(r.breakdown.write_j, 65536 * 4 * 3e-15 * 0.5);
  EXPECT_DOUBLE_EQ(r.breakdown.offmacro_j, 1 * 16128 * 4e-15);
  EXPECT_DOUBLE_EQ(r.breakdown.static_j, 1e-3 * latency);
  EXPECT_DOUBLE_EQ(r.breakdown.leak_j, 1e-6 * 16 * latency);
  EXPECT_DOUBLE_EQ(r.throughput_gops, 2.0 * 16515072 / latency / 1e9);
  expect_consistent(r);
}

TEST(Metrics, CalibrationHitsTheEfficiencyAnchor) {
  const auto r = evaluate(extract_layer_info(full_utilization_workload(macro_for_kb(16))), macro_for_kb(16),
                          defaults());
  EXPECT_NEAR(r.efficiency_tops_per_w, 38.46, 1e-9);
  EXPECT_NEAR(r.compute_density_tops_per_mm2, 2.1, 1e-9);
  // peak is 64 kernels * 9 MACs every 2 cycles, less one writeback cycle per 56
  EXPECT_NEAR(r.throughput_gops, 2.0 * 576 / 2 * 0.5 * 56.0 / 57.0, 1e-9);
}

TEST(Metrics, CalibrateIsIdempotent) {
  const auto p = defaults();
  const auto q = calibrate(p);
  EXPECT_DOUBLE_EQ(q.p_static, p.p_static);
  EXPECT_DOUBLE_EQ(q.area_mm2_per_kb, p.area_mm2_per_kb);
  CostParams hot = p;
  hot.e_tdc_conv = 1.25e-12;
  EXPECT_THROW(calibrate(hot), UserError);
}

TEST(Metrics, ReportInvariantsAcrossSweeps) {
  const auto p = defaults();
  auto nets = synthetic_workloads();
  const auto m = io::load_model(data_path("models/lenet5.json"), data_path("models/lenet5.bin"));
  nets.push_back(m.net);
  for (const auto& n : nets) {
    const auto layers = extract_layer_info(n);
    for (const auto& c : sweep_configs()) expect_consistent(evaluate(layers, c, p));
  }
}

TEST(Metrics, EnergyDropsWhenWeightReloadsDrop) {
  const auto p = defaults();
  auto nets = synthetic_workloads();
  nets.push_back(io::load_model(data_path("models/lenet5.json"), data_path("models/lenet5.bin")).net);
  for (const auto& n : nets) {
    const auto layers = extract_layer_info(n);
    const auto configs = sweep_configs();
    for (std::size_t i = 1; i < configs.size(); ++i) {
      const auto a = map_network(layers, configs[i - 1]), b = map_network(layers, configs[i]);
      int64_t loads_a = 0, loads_b = 0;
      for (std::size_t j = 0; j < a.entries.size(); ++j) {
        loads_a += a.entries[j].weight_load_passes * a.entries[j].weight_bytes;
        loads_b += b.entries[j].weight_load_passes * b.entries[j].weight_bytes;
      }
      if (loads_b < loads_a) EXPECT_LT(evaluate(b, p).energy_j, evaluate(a, p).energy_j) << n.name << " " << i;
    }
  }
}

// The synthetic workloads are held to the same bound in acceptance.cpp.
TEST(Metrics, PowerStaysFlatAcrossTheSweep) {
  const auto p = defaults();
  const std::vector<NetworkDesc> nets{
      io::load_model(data_path("models/lenet5.json"), data_path("models/lenet5.bin")).net};
  for (const auto& n : nets) {
    const auto layers = extract_layer_info(n);
    double lo = 1e9, hi = 0;
    for (const auto& c : sweep_configs()) {
      const double w = evaluate(layers, c, p).power_w;
      lo = std::min(lo, w);
      hi = std::max(hi, w);
    }
    EXPECT_LE(hi / lo, 1.5) << n.name;
  }
}

TEST(Metrics, SelectSingleCandidate) {
  const auto layers = extract_layer_info(resnet18_like());
  const std::vector<MacroConfig> one{macro_for_kb(64)};
  const auto s = select_macro(layers, one, defaults());
  EXPECT_EQ(s.best, 0u);
  EXPECT_EQ(s.table.size(), 1u);
}

TEST(Metrics, SelectDominantCandidate) {
  // with leakage off, 256 KB is never worse on any term and strictly better on
  // weight reloads and static energy
  auto p = defaults();
  p.p_leak = 0;
  const auto layers = extract_layer_info(mobilenet_v1_like());
  std::vector<MacroConfig> cands{macro_for_kb(8), macro_for_kb(256)};
  const auto s = select_macro(layers, cands, p);
  const auto& a = s.table[0];
  const auto& b = s.table[1];
  ASSERT_LT(b.breakdown.offmacro_j, a.breakdown.offmacro_j);
  ASSERT_LT(b.breakdown.static_j, a.breakdown.static_j);
  EXPECT_EQ(s.best, 1u);
}

TEST(Metrics, SelectionIsTheArgminAndOrderIndependent) {
  const auto p = defaults();
  auto nets = synthetic_workloads();
  nets.push_back(io::load_model(data_path("models/lenet5.json"), data_path("models/lenet5.bin")).net);
  for (const auto& n : nets) {
    const auto layers = extract_layer_info(n);
    auto cands = sweep_configs();
    const auto s = select_macro(layers, cands, p);
    const double min_e =
        std::min_element(s.table.begin(), s.table.end(), [](auto& a, auto& b) { return a.energy_j < b.energy_j; })
            ->energy_j;
    EXPECT_EQ(s.table[s.best_row].energy_j, min_e) << n.name;
    std::reverse(cands.begin(), cands.end());
    const auto r = select_macro(layers, cands, p);
    EXPECT_EQ(cands[r.best].banks, sweep_configs()[s.best].banks) << n.name;
  }
}

TEST(Metrics, TiesBreakByLatencyThenCapacity) {
  auto p = defaults();
  p.p_leak = 0;
  // a single 1x1 layer with one kernel: every size does the same work in the same time
  LayerWorkload l;
  l.kind = LayerKind::fully_connected;
  l.in_channels = 9;
  l.out_channels = 1;
  l.out_h = l.out_w = 1;
  l.reduction = 9;
  l.macs = 9;
  l.weight_bytes = 9;
  l.output_elements = 1;
  const std::vector<LayerWorkload> layers{l};
  const std::vector<MacroConfig> cands{macro_for_kb(64), macro_for_kb(8), macro_for_kb(32)};
  const auto s = select_macro(layers, cands, p);
  EXPECT_EQ(s.table[0].energy_j, s.table[1].energy_j);
  EXPECT_EQ(s.best, 1u);
}

TEST(Metrics, DroppedCandidatesAreExplained) {
  const auto layers = extract_layer_info(resnet18_like());
  MacroConfig broken = macro_for_kb(8);
  broken.banks = 0;
  std::vector<MacroConfig> cands{broken, macro_for_kb(16)};
  const auto s = select_macro(layers, cands, defaults());
  EXPECT_EQ(s.best, 1u);
  ASSERT_EQ(s.dropped.size(), 1u);
  EXPECT_NE(s.dropped[0].find("candidate 0"), std::string::npos);
  const std::vector<MacroConfig> none{broken};
  try {
    select_macro(layers, none, defaults());
    FAIL();
  } catch (const UserError& e) {
    EXPECT_NE(std::string(e.what()).find("geometry"), std::string::npos);
  }
  EXPECT_THROW(select_macro(layers, std::span<const MacroConfig>{}, defaults()), UserError);
}

TEST(Metrics, InductorSizing) {
  EXPECT_NEAR(calculate_inductor(0.5e9, 1e-12), 101.32e-9, 0.01e-9);
  EXPECT_NEAR(calculate_inductor(0.5e9, 4e-12), calculate_inductor(0.5e9, 1e-12) / 4, 1e-21);
  EXPECT_NEAR(calculate_inductor(0.25e9, 1e-12), calculate_inductor(0.5e9, 1e-12) * 4, 1e-18);
  EXPECT_THROW(calculate_inductor(0.5e9, 0.0), UserError);
  const MacroConfig c = macro_for_kb(16);
  EXPECT_DOUBLE_EQ(calculate_inductor(c, 50e-15), calculate_inductor(0.5e9, 512 * 50e-15));
}

TEST(Metrics, CostParamValidation) {
  auto p = defaults();
  p.recycle_fraction = 1.0;
  EXPECT_THROW(validate(p), UserError);
  auto q = defaults();
  q.e_tdc_conv = -1;
  EXPECT_THROW(validate(q), UserError);
  auto z = defaults();
  z.f_clk = 0;
  EXPECT_THROW(validate(z), UserError);
}
