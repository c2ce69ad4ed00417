#include <gtest/gtest.h>

#include <random>

#include "support.hpp"
#include "tdccim/io.hpp"
#include "tdccim/mapper.hpp"

using namespace tdccim;
using namespace tdccim::testing;

namespace {

LayerWorkload conv_workload(int c, int k, int kernel, int out_hw, int groups = 1) {
  LayerWorkload w;
  w.kind = LayerKind::conv2d;
  w.in_channels = c;
  w.out_channels = k;
  w.kernel_h = w.kernel_w = kernel;
  w.groups = groups;
  w.out_h = w.out_w = out_hw;
  w.reduction = c / groups * kernel * kernel;
  w.output_elements = int64_t{k} * out_hw * out_hw;
  w.macs = w.output_elements * w.reduction;
  w.weight_bytes = int64_t{k} * w.reduction;
  return w;
}

}  // namespace

TEST(Mapper, SmallLayerReplicatesAcrossBanks) {
  const auto l = conv_workload(1, 6, 5, 28);
  const auto e = map_layer(l, macro_for_kb(32));
  EXPECT_EQ(e.mode, MapMode::input_parallel);
  EXPECT_EQ(e.ifm_tiles_parallel, 4);
  EXPECT_EQ(e.kernel_tiles, 1);
  EXPECT_EQ(e.passes, 3);
  EXPECT_EQ(e.steps, 196);
  EXPECT_EQ(e.compute_cycles, 196 * 3 * 2);
  EXPECT_EQ(e.writeback_cycles, 196);
  EXPECT_EQ(e.weight_load_passes, 1);
}

TEST(Mapper, WideLayerTilesKernelsInTime) {
  const auto l = conv_workload(28, 128, 3, 8);
  const auto e = map_layer(l, macro_for_kb(16));
  EXPECT_EQ(e.mode, MapMode::kernel_parallel);
  EXPECT_EQ(e.kernel_tiles, 2);
  EXPECT_EQ(e.ifm_tiles_parallel, 1);
  EXPECT_EQ(e.passes, 28);
  EXPECT_EQ(e.steps, 2 * 64);
  EXPECT_EQ(e.weight_load_passes, 2);
}

TEST(Mapper, TallKernelsUseRowTiles) {
  LayerWorkload fc;
  fc.kind = LayerKind::fully_connected;
  fc.in_channels = 400;
  fc.out_channels = 120;
  fc.out_h = fc.out_w = 1;
  fc.reduction = 400;
  fc.output_elements = 120;
  fc.macs = 48000;
  fc.weight_bytes = 48000;
  const auto e = map_layer(fc, macro_for_kb(8));
  EXPECT_EQ(e.row_tiles, 2);
  EXPECT_EQ(e.passes, 23);
  EXPECT_EQ(e.kernel_tiles, 8);  // 240 units over 32 slots
  EXPECT_EQ(e.weight_load_passes, 8);
  EXPECT_EQ(e.scheduled_macs, 48000);
}

TEST(Mapper, FullUtilizationAnchorSchedule) {
  const MacroConfig c = macro_for_kb(16);
  const auto plan = map_network(full_utilization_workload(c), c);
  ASSERT_EQ(plan.entries.size(), 1u);
  const auto& e = plan.entries[0];
  EXPECT_EQ(e.mode, MapMode::kernel_parallel);
  EXPECT_EQ(e.kernel_tiles, 1);
  EXPECT_EQ(e.passes, 28);
  EXPECT_EQ(e.steps, 1024);
  EXPECT_EQ(plan.total_cycles(), 1024 * (28 * 2 + 1));
}

TEST(Mapper, MacConservationProperty) {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<int> ch(1, 600), k(1, 700), ks(0, 2), hw(1, 40);
  const int kernels[] = {1, 3, 5};
  for (int t = 0; t < 2000; ++t) {
    const auto l = conv_workload(ch(rng), k(rng), kernels[ks(rng)], hw(rng));
    for (const auto& c : sweep_configs()) {
      for (auto enc : {InputEncoding::pulse_count, InputEncoding::bit_serial}) {
        MacroConfig cc = c;
        cc.input_encoding = enc;
        const auto e = map_layer(l, cc);
        ASSERT_EQ(e.scheduled_macs, l.macs);
        ASSERT_GE(int64_t{e.weight_load_passes} * cc.capacity_bytes(), l.weight_bytes);
        ASSERT_LE(e.banks_used, cc.banks);
        ASSERT_LE(e.kernels_per_bank, cc.kernels_per_bank());
        ASSERT_EQ(e.conversions, e.mac_groups * conversions_per_group(enc));
      }
    }
  }
}

TEST(Mapper, MoreBanksNeverSlowALayer) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> ch(1, 300), k(1, 600), hw(1, 30);
  for (int t = 0; t < 500; ++t) {
    const auto l = conv_workload(ch(rng), k(rng), 3, hw(rng));
    int64_t prev = std::numeric_limits<int64_t>::max();
    int prev_loads = std::numeric_limits<int>::max();
    for (const auto& c : sweep_configs()) {
      const auto e = map_layer(l, c);
      ASSERT_LE(e.cycles(), prev);
      ASSERT_LE(e.weight_load_passes, prev_loads);
      prev = e.cycles();
      prev_loads = e.weight_load_passes;
    }
  }
}

TEST(Mapper, GroupedConvRunsGroupsSequentially) {
  const auto dw = conv_workload(64, 64, 3, 16, 64);
  const auto e = map_layer(dw, macro_for_kb(8));
  EXPECT_EQ(e.mode, MapMode::input_parallel);
  EXPECT_EQ(e.passes, 1);
  EXPECT_EQ(e.steps, 64 * 256);
  EXPECT_EQ(e.scheduled_macs, dw.macs);
}

TEST(Mapper, NonWeightLayersCostOnlyPeripheralCycles) {
  LayerWorkload pool;
  pool.kind = LayerKind::maxpool2d;
  pool.output_elements = 100;
  EXPECT_EQ(map_layer(pool, MacroConfig{}).cycles(), 0);
  EXPECT_EQ(map_layer(pool, MacroConfig{}, MapperOptions{2}).cycles(), 200);
}

TEST(Mapper, LeNetPlanAndMismatch) {
  const auto m = io::load_model(data_path("models/lenet5.json"), data_path("models/lenet5.bin"));
  const MacroConfig c = macro_for_kb(24);
  const auto plan = map_network(m.net, c);
  EXPECT_EQ(plan.entries.size(), m.net.layers.size());
  EXPECT_EQ(plan.sum(&PlanEntry::macs), 416520);
  EXPECT_NO_THROW(check_plan(plan, m.net, c));
  EXPECT_THROW(check_plan(plan, m.net, macro_for_kb(32)), UserError);
  try {
    run_network(m.net, m.weights, io::load_tensor_file(data_path("fixtures/mnist100.json")).images()[0],
                macro_for_kb(8), plan);
    FAIL();
  } catch (const UserError& e) {
    EXPECT_NE(std::string(e.what()).find("plan/config mismatch"), std::string::npos);
  }
}

TEST(Mapper, RunNetworkIdealMatchesReference) {
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<int> small(1, 5);
  for (int t = 0; t < 60; ++t) {
    auto r = random_conv(rng, small(rng) * 3, small(rng), 6, 6, 3, 3, 1);
    const MacroConfig c = with_ideal_tdc(macro_for_kb(8));
    const auto in = make_tensor({r.net.input_shape.c, 6, 6}, random_int8(rng, r.net.input_shape.elements()));
    const auto plan = map_network(r.net, c);
    const auto run = run_network(r.net, r.ws, in, c, plan);
    ASSERT_EQ(run.outputs[0].data, infer_int8_reference(r.net, r.ws, in).data);
    ASSERT_EQ(run.saturation_rate, 0.0);
    ASSERT_EQ(run.op_counts.macs, plan.sum(&PlanEntry::macs));
    ASSERT_EQ(run.op_counts.mac_groups, plan.sum(&PlanEntry::mac_groups));
    ASSERT_EQ(run.op_counts.conversions, plan.sum(&PlanEntry::conversions));
  }
}

TEST(Mapper, RunNetworkLeNetCountsMatchPlan) {
  const auto m = io::load_model(data_path("models/lenet5.json"), data_path("models/lenet5.bin"));
  const auto img = io::load_tensor_file(data_path("fixtures/mnist100.json")).images()[0];
  const MacroConfig c = with_ideal_tdc(macro_for_kb(24));
  const auto plan = map_network(m.net, c);
  const auto run = run_network(m.net, m.weights, img, c, plan);
  EXPECT_EQ(run.outputs[0].data, infer_int8_reference(m.net, m.weights, img).data);
  EXPECT_EQ(run.op_counts.mac_groups, plan.sum(&PlanEntry::mac_groups));
  // one writeback per requantized weight-layer output: 6*28*28 + 16*10*10 + 120 + 84 + 10
  EXPECT_EQ(run.op_counts.writebacks, 6518);
}
