#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "tdccim/cnn.hpp"
#include "tdccim/error.hpp"
#include "tdccim/mapper.hpp"
#include "tdccim/pipeline.hpp"

namespace tdccim {

/// Linear activity-model constants. Loaded from a calibration file; the zero
/// defaults only exist so the struct can be filled field by field.
struct CostParams {
  double e_mac_cycle = 0;       // J per active 4-bitline group per compute cycle
  double e_tdc_conv = 0;        // J per TDC conversion
  double e_write_bit = 0;       // J per flipped output bit, conventional driver
  double recycle_fraction = 0;  // share of write energy recovered by the resonant driver
  double e_offmacro_byte = 0;   // J per weight byte fetched from outside the macro
  double p_leak = 0;            // W per KB of array
  double p_static = 0;          // W of periphery and control, independent of size
  double f_clk = 0;             // Hz
  double area_mm2_per_kb = 0;   // fixed area constant for compute density
  double c_wbl_per_line = 0;    // F per write bitline, for inductor sizing
};

inline void validate(const CostParams& p) {
  const double v[] = {p.e_mac_cycle, p.e_tdc_conv, p.e_write_bit, p.recycle_fraction, p.e_offmacro_byte,
                      p.p_leak, p.p_static, p.area_mm2_per_kb, p.c_wbl_per_line};
  for (double x : v)
    if (!(x >= 0) || !std::isfinite(x)) throw UserError("cost parameters must be finite and non-negative");
  if (!(p.recycle_fraction < 1)) throw UserError("recycle_fraction must be below 1");
  if (!(p.f_clk > 0)) throw UserError("f_clk must be positive");
}

inline constexpr double kWritebackBits = 8;
inline constexpr double kExpectedFlipShare = 0.5;  // random data flips half the bits
inline constexpr int kBitlineGroupsPerUnit = 2;     // low and high weight nibble

struct EnergyBreakdown {
  double compute_j = 0, tdc_j = 0, write_j = 0, offmacro_j = 0, static_j = 0, leak_j = 0;
  double total() const { return compute_j + tdc_j + write_j + offmacro_j + static_j + leak_j; }
};

struct MetricsReport {
  double config_kb = 0;
  int banks = 0;
  int64_t cycles = 0;
  int64_t macs = 0;
  double energy_j = 0;
  double latency_s = 0;
  double power_w = 0;
  double throughput_gops = 0;
  double efficiency_tops_per_w = 0;
  double compute_density_tops_per_mm2 = 0;
  EnergyBreakdown breakdown;
};

inline MetricsReport evaluate(const MappingPlan& plan, const CostParams& p) {
  validate(p);
  MetricsReport r;
  r.config_kb = static_cast<double>(plan.capacity_bytes) / 1024.0;
  r.banks = plan.banks;
  r.cycles = plan.total_cycles();
  r.latency_s = static_cast<double>(r.cycles) / p.f_clk;
  auto& b = r.breakdown;
  for (const auto& e : plan.entries) {
    r.macs += e.macs;
    const double groups = static_cast<double>(e.mac_groups);
    b.compute_j += groups * cycles_per_group(plan.encoding) * kBitlineGroupsPerUnit * p.e_mac_cycle;
    b.tdc_j += static_cast<double>(e.conversions) * p.e_tdc_conv;
    if (e.mode != MapMode::none) {
      b.write_j += static_cast<double>(e.output_elements) * kWritebackBits * kExpectedFlipShare * p.e_write_bit *
                   (1.0 - p.recycle_fraction);
      b.offmacro_j += static_cast<double>(e.weight_load_passes) * static_cast<double>(e.weight_bytes) *
                      p.e_offmacro_byte;
    }
  }
  b.static_j = p.p_static * r.latency_s;
  b.leak_j = p.p_leak * r.config_kb * r.latency_s;
  r.energy_j = b.total();
  if (r.latency_s > 0) {
    r.power_w = r.energy_j / r.latency_s;
    const double ops_per_s = 2.0 * static_cast<double>(r.macs) / r.latency_s;
    r.throughput_gops = ops_per_s / 1e9;
    r.efficiency_tops_per_w = r.power_w > 0 ? ops_per_s / r.power_w / 1e12 : 0.0;
    const double area = p.area_mm2_per_kb * r.config_kb;
    r.compute_density_tops_per_mm2 = area > 0 ? ops_per_s / 1e12 / area : 0.0;
  }
  return r;
}

inline MetricsReport evaluate(std::span<const LayerWorkload> layers, const MacroConfig& c, const CostParams& p) {
  return evaluate(map_network(layers, c), p);
}

inline MetricsReport evaluate(const NetworkDesc& net, const WeightStore& ws, const MacroConfig& c,
                              const MappingPlan& plan, const CostParams& p) {
  validate_network(net, ws);
  check_plan(plan, net, c);
  return evaluate(plan, p);
}

/// One conv layer that fills every kernel slot and every row group the array can
/// drive at once: 256 / 9 channels of 3x3 taps, one kernel per slot, 32x32 outputs.
inline NetworkDesc full_utilization_workload(const MacroConfig& c) {
  NetworkDesc n;
  n.name = "full_utilization";
  const int ch = c.rows / c.active_rows;
  n.input_shape = {ch, 34, 34};
  LayerDesc l;
  l.kind = LayerKind::conv2d;
  l.in_channels = ch;
  l.out_channels = c.kernel_slots();
  l.kernel_h = l.kernel_w = 3;
  l.weight_ref = "w";
  n.layers.push_back(l);
  return n;
}

/// Published macro-level operating point the cost model is fitted to.
struct Anchor {
  int macro_kb = 16;
  double tops_per_w = 38.46;
  double tops_per_mm2 = 2.1;
};

/// Solves p_static so the anchor workload reaches the anchor efficiency, and the
/// area constant so it reaches the anchor compute density. Other fields are kept.
inline CostParams calibrate(CostParams p, const Anchor& a = {}) {
  p.p_static = 0;
  p.area_mm2_per_kb = 0;
  const MacroConfig c = macro_for_kb(a.macro_kb);
  const auto layers = extract_layer_info(full_utilization_workload(c));
  const MetricsReport r = evaluate(layers, c, p);
  const double target_energy = 2.0 * static_cast<double>(r.macs) / (a.tops_per_w * 1e12);
  p.p_static = (target_energy - r.energy_j) / r.latency_s;
  if (!(p.p_static >= 0)) throw UserError("calibration: dynamic energy alone exceeds the efficiency anchor");
  p.area_mm2_per_kb = r.throughput_gops / 1e3 / (a.tops_per_mm2 * r.config_kb);
  return p;
}

struct SelectionResult {
  std::size_t best = 0;      // index into `candidates`
  std::size_t best_row = 0;  // index into `table`
  std::vector<std::size_t> survivors;
  std::vector<MetricsReport> table;  // one row per survivor, candidate order
  std::vector<std::string> dropped;  // reason per dropped candidate
};

/// Drops candidates that cannot hold a single kernel column group or cannot map a
/// layer, evaluates the rest and picks minimum energy, then lower latency, then
/// smaller capacity.
inline SelectionResult select_macro(std::span<const LayerWorkload> layers, std::span<const MacroConfig> candidates,
                                    const CostParams& p) {
  if (candidates.empty()) throw UserError("select_macro: no candidates");
  SelectionResult s;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& c = candidates[i];
    try {
      validate(c);
      if (c.kernels_per_bank() < 1) throw UserError("bank has fewer than 8 columns, no kernel fits");
      s.table.push_back(evaluate(map_network(layers, c), p));
      s.survivors.push_back(i);
    } catch (const UserError& e) {
      s.dropped.push_back("candidate " + std::to_string(i) + " (" + std::to_string(c.capacity_kb()) +
                          " KB): " + e.what());
    }
  }
  if (s.survivors.empty()) {
    std::string why = "select_macro: every candidate was dropped";
    for (const auto& d : s.dropped) why += "; " + d;
    throw UserError(why);
  }
  std::size_t best = 0;
  for (std::size_t j = 1; j < s.table.size(); ++j) {
    const auto& a = s.table[j];
    const auto& b = s.table[best];
    if (a.energy_j < b.energy_j ||
        (a.energy_j == b.energy_j &&
         (a.latency_s < b.latency_s || (a.latency_s == b.latency_s && a.config_kb < b.config_kb))))
      best = j;
  }
  s.best_row = best;
  s.best = s.survivors[best];
  return s;
}

/// Series inductor resonating with the total write-bitline capacitance at f_res:
/// L = 1 / ((2 pi f)^2 C).
inline double calculate_inductor(double f_res_hz, double c_total_f) {
  if (!(c_total_f > 0)) throw UserError("calculate_inductor: capacitance must be positive");
  if (!(f_res_hz > 0)) throw UserError("calculate_inductor: frequency must be positive");
  const double w = 2.0 * std::numbers::pi * f_res_hz;
  return 1.0 / (w * w * c_total_f);
}

inline double calculate_inductor(const MacroConfig& c, double c_wbl_per_line) {
  return calculate_inductor(c.clock_hz, static_cast<double>(c.cols) * c.banks * c_wbl_per_line);
}

}  // namespace tdccim
