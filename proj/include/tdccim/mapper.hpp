#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tdccim/cnn.hpp"
#include "tdccim/error.hpp"
#include "tdccim/pipeline.hpp"

namespace tdccim {

enum class MapMode { none, kernel_parallel, input_parallel };

inline const char* to_string(MapMode m) {
  switch (m) {
    case MapMode::none: return "none";
    case MapMode::kernel_parallel: return "kernel_parallel";
    case MapMode::input_parallel: return "input_parallel";
  }
  return "?";
}

/// Placement and schedule of one layer. Layers without weights have mode none
/// and only peripheral cycles.
struct PlanEntry {
  std::size_t layer_index = 0;
  LayerKind kind = LayerKind::relu;
  MapMode mode = MapMode::none;
  int banks_used = 0;
  int kernels_per_bank = 0;   // kernel column units resident per bank
  int ifm_tiles_parallel = 0; // IFM copies in flight
  int kernel_tiles = 0;       // sequential kernel groups per position
  int row_tiles = 0;          // column units per kernel when taps exceed rows
  int passes = 0;             // row passes per unit
  int64_t steps = 0;          // (position, kernel tile) steps, each ends in a writeback
  int64_t compute_cycles = 0;
  int64_t writeback_cycles = 0;
  int64_t peripheral_cycles = 0;
  int weight_load_passes = 0;
  int64_t macs = 0;
  int64_t scheduled_macs = 0;
  int64_t mac_groups = 0;
  int64_t conversions = 0;
  int64_t weight_bytes = 0;
  int64_t output_elements = 0;

  int64_t cycles() const { return compute_cycles + writeback_cycles + peripheral_cycles; }
};

struct MappingPlan {
  int banks = 0;
  int rows = 0;
  int cols = 0;
  int64_t capacity_bytes = 0;
  InputEncoding encoding = InputEncoding::pulse_count;
  std::vector<PlanEntry> entries;

  int64_t total_cycles() const {
    int64_t s = 0;
    for (const auto& e : entries) s += e.cycles();
    return s;
  }
  int64_t sum(int64_t PlanEntry::*f) const {
    int64_t s = 0;
    for (const auto& e : entries) s += e.*f;
    return s;
  }
};

struct MapperOptions {
  int peripheral_cycles_per_element = 0;  // pool / relu unit
};

inline int cycles_per_group(InputEncoding e) { return e == InputEncoding::pulse_count ? 2 : 8; }
inline int conversions_per_group(InputEncoding e) { return e == InputEncoding::pulse_count ? 8 : 32; }

namespace detail {
inline int64_t ceil_div(int64_t a, int64_t b) { return (a + b - 1) / b; }
}  // namespace detail

/// Weight-stationary placement of one layer. Kernels wider than the array are split
/// into row tiles (extra column units whose partial sums add digitally); each unit
/// is driven in passes of at most active_rows rows. With at least as many units as
/// kernel slots the IFM is broadcast and kernels are tiled in time; otherwise the
/// kernel set is replicated across banks and IFM positions are split between copies.
/// Grouped convolutions run their groups one after another.
inline PlanEntry map_layer(const LayerWorkload& l, const MacroConfig& c, const MapperOptions& opt = {}) {
  validate(c);
  PlanEntry e;
  e.layer_index = l.index;
  e.kind = l.kind;
  e.output_elements = l.output_elements;
  if (!has_weights(l.kind)) {
    e.peripheral_cycles = l.output_elements * opt.peripheral_cycles_per_element;
    return e;
  }
  const TapSplit split = split_taps(l.reduction, c);
  const int64_t kg = l.out_channels / l.groups;
  const int64_t units = kg * split.row_tiles;
  const int64_t slots = c.kernel_slots();
  const int64_t kpb = c.kernels_per_bank();
  const int64_t positions = l.positions();

  if (units >= slots) {
    e.mode = MapMode::kernel_parallel;
    e.kernel_tiles = static_cast<int>(detail::ceil_div(units, slots));
    e.ifm_tiles_parallel = 1;
    e.banks_used = c.banks;
    e.kernels_per_bank = static_cast<int>(kpb);
  } else {
    e.mode = MapMode::input_parallel;
    const int64_t banks_per_copy = detail::ceil_div(units, kpb);
    e.kernel_tiles = 1;
    e.ifm_tiles_parallel = static_cast<int>(c.banks / banks_per_copy);
    e.banks_used = static_cast<int>(e.ifm_tiles_parallel * banks_per_copy);
    e.kernels_per_bank = static_cast<int>(detail::ceil_div(units, banks_per_copy));
  }
  e.row_tiles = split.row_tiles;
  e.passes = split.passes;
  e.steps = l.groups * e.kernel_tiles * detail::ceil_div(positions, e.ifm_tiles_parallel);
  e.compute_cycles = e.steps * split.passes * cycles_per_group(c.input_encoding);
  e.writeback_cycles = e.steps;

  for (int t = 0; t < split.row_tiles; ++t) {
    const int64_t rows_t = std::min<int64_t>(split.rows_per_tile, l.reduction - int64_t{t} * split.rows_per_tile);
    e.scheduled_macs += rows_t * kg * positions * l.groups;
    e.mac_groups += detail::ceil_div(rows_t, c.active_rows) * kg * positions * l.groups;
  }
  e.conversions = e.mac_groups * conversions_per_group(c.input_encoding);
  e.macs = l.macs;
  e.weight_bytes = l.weight_bytes;
  e.weight_load_passes = static_cast<int>(detail::ceil_div(int64_t{l.out_channels} * split.row_tiles, slots));
  check_invariant(e.scheduled_macs == e.macs, "mapper lost MACs in layer " + std::to_string(l.index));
  check_invariant(int64_t{e.weight_load_passes} * c.capacity_bytes() >= e.weight_bytes,
                  "weight load passes do not cover layer " + std::to_string(l.index));
  return e;
}

inline MappingPlan map_network(std::span<const LayerWorkload> layers, const MacroConfig& c,
                               const MapperOptions& opt = {}) {
  validate(c);
  MappingPlan p;
  p.banks = c.banks;
  p.rows = c.rows;
  p.cols = c.cols;
  p.capacity_bytes = c.capacity_bytes();
  p.encoding = c.input_encoding;
  for (const auto& l : layers) p.entries.push_back(map_layer(l, c, opt));
  return p;
}

inline MappingPlan map_network(const NetworkDesc& net, const MacroConfig& c, const MapperOptions& opt = {}) {
  const auto layers = extract_layer_info(net);
  return map_network(layers, c, opt);
}

/// Throws UserError when `plan` was not produced for this configuration and network.
inline void check_plan(const MappingPlan& p, const NetworkDesc& net, const MacroConfig& c) {
  if (p.banks != c.banks || p.rows != c.rows || p.cols != c.cols || p.encoding != c.input_encoding)
    throw UserError("plan/config mismatch: plan is for " + std::to_string(p.banks) + " bank(s) of " +
                    std::to_string(p.rows) + "x" + std::to_string(p.cols) + ", config has " +
                    std::to_string(c.banks) + " of " + std::to_string(c.rows) + "x" + std::to_string(c.cols));
  if (p.entries.size() != net.layers.size()) throw UserError("plan/config mismatch: layer count differs");
  for (std::size_t i = 0; i < p.entries.size(); ++i) {
    const auto& e = p.entries[i];
    if (e.kind != net.layers[i].kind || e.kernels_per_bank * kColsPerKernel > c.cols)
      throw UserError("plan/config mismatch at layer " + std::to_string(i));
  }
}

struct NetworkRun {
  std::vector<QuantTensor> outputs;
  OpCounts op_counts;
  double saturation_rate = 0.0;
};

/// Full inference of one or more inputs through the macro datapath.
inline NetworkRun run_network(const NetworkDesc& net, const WeightStore& ws, std::span<const QuantTensor> inputs,
                              const MacroConfig& c, const MappingPlan& plan) {
  check_plan(plan, net, c);
  MacroEngine engine(c);
  NetworkRun r;
  for (const auto& in : inputs) r.outputs.push_back(run_layers(net, ws, in, engine));
  r.op_counts = engine.counts;
  r.saturation_rate = engine.counts.saturation_rate();
  return r;
}

inline NetworkRun run_network(const NetworkDesc& net, const WeightStore& ws, const QuantTensor& input,
                              const MacroConfig& c, const MappingPlan& plan) {
  return run_network(net, ws, std::span(&input, 1), c, plan);
}

}  // namespace tdccim
