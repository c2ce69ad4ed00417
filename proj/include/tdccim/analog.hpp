#pragma once

#include <algorithm>
#include <array>
#include <span>

#include "tdccim/error.hpp"

namespace tdccim::analog {

/// Electrical parameters of one 4-bitline readout group. vdd is the precharge level
/// of both the read bitlines and C_acc; v_floor is the lowest V_mac the readout uses.
struct AnalogParams {
  double vdd = 0.8;
  double i_ds = 0.0;
  double t_dis = 1e-9;
  double c_rbl = 4e-15;
  double c_unit = 4e-15;
  double c_acc = 32e-15;
  double v_floor = 0.2;
};

inline constexpr int kNibbleBits = 4;

inline void validate(const AnalogParams& p) {
  if (!(p.vdd > 0 && p.i_ds >= 0 && p.t_dis >= 0 && p.c_rbl > 0 && p.c_unit > 0 && p.c_acc > 0 && p.v_floor > 0))
    throw UserError("analog parameters must be positive");
  if (!(p.v_floor < p.vdd)) throw UserError("analog v_floor must be below vdd");
}

/// Delta V drop of one bitline per hit: I_ds * T_dis / C_RBL.
inline double unit_discharge(const AnalogParams& p) { return p.i_ds * p.t_dis / p.c_rbl; }

/// Sum of the four binary-weighted capacitors plus C_acc (92 fF by default).
inline double total_capacitance(const AnalogParams& p) { return ((1 << kNibbleBits) - 1) * p.c_unit + p.c_acc; }

/// Sets i_ds so that a weighted count of w_max spans exactly vdd - v_floor on V_mac.
inline AnalogParams calibrate_unit_discharge(AnalogParams p, int w_max) {
  if (w_max < 1) throw UserError("w_max must be at least 1");
  const double dv = (p.vdd - p.v_floor) * total_capacitance(p) / (p.c_unit * w_max);
  p.i_ds = dv * p.c_rbl / p.t_dis;
  return p;
}

inline AnalogParams default_params(int w_max = 15) { return calibrate_unit_discharge(AnalogParams{}, w_max); }

inline double bitline_voltage(long hit_count, const AnalogParams& p) {
  return std::max(0.0, p.vdd - static_cast<double>(hit_count) * unit_discharge(p));
}

struct BitlineState {
  int weight_bit_index = 0;
  long hit_count = 0;
  double voltage = 0.0;

  double capacitance(const AnalogParams& p) const { return static_cast<double>(1 << weight_bit_index) * p.c_unit; }
};

inline BitlineState discharge(int bit, long hit_count, const AnalogParams& p) {
  return {bit, hit_count, bitline_voltage(hit_count, p)};
}

/// True when hit_count would drive the line below 0 V.
inline bool clamps(long hit_count, const AnalogParams& p) {
  return p.vdd - static_cast<double>(hit_count) * unit_discharge(p) < 0.0;
}

struct ShareResult {
  double v_mac = 0.0;
  bool saturated = false;  // some bitline clamped at 0 V
};

inline ShareResult charge_share(std::span<const BitlineState, 4> bl, const AnalogParams& p) {
  double q = p.c_acc * p.vdd;
  bool sat = false;
  for (const auto& b : bl) {
    if (b.weight_bit_index < 0 || b.weight_bit_index >= kNibbleBits) throw UserError("bit index outside nibble");
    q += b.capacitance(p) * b.voltage;
    sat = sat || clamps(b.hit_count, p);
  }
  return {q / total_capacitance(p), sat};
}

inline long weighted_count(std::span<const BitlineState, 4> bl) {
  long w = 0;
  for (const auto& b : bl) w += (1L << b.weight_bit_index) * b.hit_count;
  return w;
}

/// V_mac as an affine function of the weighted count, the value charge_share
/// produces while no bitline clamps.
inline double mac_voltage(long weighted, const AnalogParams& p) {
  return p.vdd - static_cast<double>(weighted) * unit_discharge(p) * p.c_unit / total_capacitance(p);
}

/// Weighted count the readout maps onto [v_floor, vdd].
inline double full_scale_count(const AnalogParams& p) {
  return (p.vdd - p.v_floor) * total_capacitance(p) / (unit_discharge(p) * p.c_unit);
}

}  // namespace tdccim::analog
