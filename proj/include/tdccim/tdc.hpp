#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "tdccim/error.hpp"

namespace tdccim::tdc {

/// Pulse-shrinking TDC. Codes decrease as the input voltage rises.
/// `thresholds` holds the 2^bits - 1 transition voltages in ascending order.
/// The delay line shrinks the pulse by dt(v) per stage, affine between dt_lo at
/// v_lo and dt_hi at v_hi.
struct TdcModel {
  int resolution_bits = 4;
  double v_lo = 0.2;
  double v_hi = 0.8;
  std::vector<double> thresholds;
  double pulse_width_in = 500e-12;
  double dt_lo = 500e-12 / 16;
  double dt_hi = 500e-12;

  int max_code() const { return (1 << resolution_bits) - 1; }
  double lsb() const { return (v_hi - v_lo) / static_cast<double>(1 << resolution_bits); }
};

inline std::vector<double> uniform_thresholds(int bits, double v_lo, double v_hi) {
  const int n = (1 << bits) - 1;
  const double lsb = (v_hi - v_lo) / (n + 1);
  std::vector<double> t(n);
  for (int i = 0; i < n; ++i) t[i] = v_lo + (i + 1) * lsb;
  return t;
}

inline void validate(const TdcModel& m) {
  if (m.resolution_bits < 1 || m.resolution_bits > 16) throw UserError("tdc resolution_bits must be in [1, 16]");
  if (!(m.v_lo < m.v_hi)) throw UserError("tdc v_lo must be below v_hi");
  if (m.thresholds.size() != static_cast<std::size_t>(m.max_code()))
    throw UserError("tdc needs " + std::to_string(m.max_code()) + " thresholds, got " +
                    std::to_string(m.thresholds.size()));
  for (std::size_t i = 0; i < m.thresholds.size(); ++i) {
    if (m.thresholds[i] < m.v_lo || m.thresholds[i] > m.v_hi) throw UserError("tdc threshold outside [v_lo, v_hi]");
    if (i && !(m.thresholds[i] > m.thresholds[i - 1])) throw UserError("tdc thresholds not strictly ascending");
  }
  if (!(m.pulse_width_in > 0 && m.dt_lo > 0 && m.dt_hi >= m.dt_lo)) throw UserError("tdc delay-line parameters invalid");
}

/// Uniform thresholds and the default delay line for `bits`.
inline TdcModel make_uniform(int bits = 4, double v_lo = 0.2, double v_hi = 0.8) {
  TdcModel m;
  m.resolution_bits = bits;
  m.v_lo = v_lo;
  m.v_hi = v_hi;
  m.thresholds = uniform_thresholds(bits, v_lo, v_hi);
  m.dt_lo = m.pulse_width_in / static_cast<double>(1 << bits);
  m.dt_hi = m.pulse_width_in;
  return m;
}

struct Conversion {
  int code = 0;
  bool out_of_range = false;
};

inline double clamp_input(double v, const TdcModel& m, bool& out_of_range) {
  if (v < 0.0 || std::isnan(v)) throw UserError("tdc input voltage must be non-negative");
  out_of_range = v < m.v_lo || v > m.v_hi;
  return std::clamp(v, m.v_lo, m.v_hi);
}

/// Per-stage shrink at voltage v (already clamped to the input window).
inline double delta_t(double v, const TdcModel& m) {
  const double u = (v - m.v_lo) / (m.v_hi - m.v_lo);
  return m.dt_lo * (1.0 - u) + m.dt_hi * u;
}

/// DFF outputs of the delay line: stage k latches while the pulse still has
/// positive width after k shrink steps.
inline std::vector<uint8_t> delay_line(double v, const TdcModel& m) {
  const double dt = delta_t(v, m);
  std::vector<uint8_t> dff(m.max_code());
  for (std::size_t k = 0; k < dff.size(); ++k)
    dff[k] = m.pulse_width_in - dt * static_cast<double>(k + 1) > 0.0 ? 1 : 0;
  return dff;
}

/// Thermometer code (run of ones then zeros) to binary. A bubble is an invariant
/// violation of the delay line.
inline int thermometer_to_binary(std::span<const uint8_t> therm) {
  int ones = 0;
  while (ones < static_cast<int>(therm.size()) && therm[ones]) ++ones;
  for (std::size_t i = ones; i < therm.size(); ++i)
    check_invariant(!therm[i], "thermometer code has a bubble");
  return ones;
}

inline Conversion convert_structural(double v_mac, const TdcModel& m) {
  Conversion c;
  const double v = clamp_input(v_mac, m, c.out_of_range);
  c.code = std::clamp(thermometer_to_binary(delay_line(v, m)), 0, m.max_code());
  return c;
}

/// code = number of thresholds strictly above v, the same tie rule as the
/// delay line (code >= c exactly while v < threshold).
inline Conversion convert_threshold(double v_mac, const TdcModel& m) {
  Conversion c;
  const double v = clamp_input(v_mac, m, c.out_of_range);
  const auto upto = std::upper_bound(m.thresholds.begin(), m.thresholds.end(), v) - m.thresholds.begin();
  c.code = m.max_code() - static_cast<int>(upto);
  return c;
}

/// Transition voltages implied by the delay line: the structural code is at
/// least c exactly while dt(v) < pulse_width_in / c.
inline std::vector<double> thresholds_from_delay_line(const TdcModel& m) {
  std::vector<double> t;
  for (int c = m.max_code(); c >= 1; --c) {
    const double u = (m.pulse_width_in / c - m.dt_lo) / (m.dt_hi - m.dt_lo);
    t.push_back(m.v_lo + std::clamp(u, 0.0, 1.0) * (m.v_hi - m.v_lo));
  }
  return t;
}

inline TdcModel with_delay_line_thresholds(TdcModel m) {
  m.thresholds = thresholds_from_delay_line(m);
  return m;
}

// Nonlinearity. Arrays are in ascending-voltage threshold order. The ideal
// transition i sits at v_lo + (i + 1) LSB, the straight line through the
// nominal range endpoints, so INL[i] - INL[i-1] == DNL[i-1].
// Transition i is labelled by the code entered above it (max_code - 1 - i),
// and gap i by the code entered above its upper end (max_code - 2 - i).

inline std::vector<double> compute_dnl(const TdcModel& m) {
  validate(m);
  const double lsb = m.lsb();
  std::vector<double> d;
  for (std::size_t i = 0; i + 1 < m.thresholds.size(); ++i)
    d.push_back((m.thresholds[i + 1] - m.thresholds[i]) / lsb - 1.0);
  return d;
}

inline std::vector<double> compute_inl(const TdcModel& m) {
  validate(m);
  const double lsb = m.lsb();
  std::vector<double> r;
  for (std::size_t i = 0; i < m.thresholds.size(); ++i)
    r.push_back((m.thresholds[i] - (m.v_lo + static_cast<double>(i + 1) * lsb)) / lsb);
  return r;
}

inline int dnl_code(std::size_t i, const TdcModel& m) { return m.max_code() - 2 - static_cast<int>(i); }
inline int inl_code(std::size_t i, const TdcModel& m) { return m.max_code() - 1 - static_cast<int>(i); }

/// Inverse of compute_dnl/compute_inl: thresholds from a DNL vector plus the INL of
/// the first transition.
inline std::vector<double> thresholds_from_dnl(std::span<const double> dnl, double inl0, const TdcModel& m) {
  const double lsb = m.lsb();
  std::vector<double> t{m.v_lo + (1.0 + inl0) * lsb};
  for (double d : dnl) t.push_back(t.back() + (1.0 + d) * lsb);
  return t;
}

inline double enob(double sndr_db) { return (sndr_db - 1.76) / 6.02; }

/// Walden figure of merit in joules per conversion step.
inline double compute_fom(double power_w, double sndr_db, double fs_hz) {
  if (!(power_w > 0 && fs_hz > 0)) throw UserError("compute_fom: power and fs must be positive");
  return power_w / (std::pow(2.0, enob(sndr_db)) * fs_hz);
}

struct ConverterAnalytics {
  std::vector<double> dnl;
  std::vector<double> inl;
  double sndr_db = 0, sfdr_db = 0, enob = 0, fom_fj_per_step = 0, power_w = 0, fs_hz = 0;
};

/// Measured figures the behavioral model echoes rather than re-derives.
struct ConverterSpecs {
  double sndr_db = 19.45;
  double sfdr_db = 22.4;
  double power_w = 1.25e-3;
  double fs_hz = 1e9;
};

inline ConverterAnalytics analyze(const TdcModel& m, const ConverterSpecs& s = {}) {
  ConverterAnalytics a;
  a.dnl = compute_dnl(m);
  a.inl = compute_inl(m);
  a.sndr_db = s.sndr_db;
  a.sfdr_db = s.sfdr_db;
  a.enob = enob(s.sndr_db);
  a.power_w = s.power_w;
  a.fs_hz = s.fs_hz;
  a.fom_fj_per_step = compute_fom(s.power_w, s.sndr_db, s.fs_hz) * 1e15;
  return a;
}

// Monte Carlo PVT.

struct Corner {
  double vdd = 1.0;
  double temp_c = 27.0;
};

struct CornerStats {
  double power_mean_w = 0, power_sigma_w = 0;
  double delay_mean_s = 0, delay_sigma_s = 0;
};

struct CalibratedCorner {
  Corner corner;
  CornerStats stats;
};

/// Stage power and pulse-width statistics at the simulated corners: three supply
/// voltages at 27 C and three temperatures at 1.0 V, sharing the nominal point.
inline const std::array<CalibratedCorner, 5>& calibrated_corners() {
  static const std::array<CalibratedCorner, 5> k{{
      {{0.9, 27.0}, {334.8e-6, 1.72e-6, 247e-12, 2.68e-12}},
      {{1.0, 27.0}, {432e-6, 2.29e-6, 285e-12, 2.09e-12}},
      {{1.1, 27.0}, {512.37e-6, 2.93e-6, 309.56e-12, 1.79e-12}},
      {{1.0, 0.0}, {430.6e-6, 3.4e-6, 287.5e-12, 2.05e-12}},
      {{1.0, 100.0}, {485.44e-6, 2.13e-6, 279.82e-12, 2.2e-12}},
  }};
  return k;
}

namespace detail {

inline bool near(double a, double b) { return std::abs(a - b) < 1e-9; }

inline CornerStats lerp(const CornerStats& a, const CornerStats& b, double t) {
  auto f = [t](double x, double y) { return x + (y - x) * t; };
  return {f(a.power_mean_w, b.power_mean_w), f(a.power_sigma_w, b.power_sigma_w), f(a.delay_mean_s, b.delay_mean_s),
          f(a.delay_sigma_s, b.delay_sigma_s)};
}

/// Piecewise-linear interpolation over corners sorted by `key`.
template <class Key>
CornerStats along(std::span<const CalibratedCorner> pts, double x, Key key) {
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const double a = key(pts[i].corner), b = key(pts[i + 1].corner);
    if (x >= a - 1e-12 && x <= b + 1e-12) return lerp(pts[i].stats, pts[i + 1].stats, (x - a) / (b - a));
  }
  throw UserError("corner outside the calibrated range");
}

}  // namespace detail

/// Configured (mean, sigma) at a corner. Off-grid corners are interpolated
/// linearly: along vdd at 27 C, along temperature at 1.0 V, and additively when
/// both differ from nominal.
inline CornerStats corner_stats(const Corner& c, bool allow_interpolation = true) {
  const auto& k = calibrated_corners();
  for (const auto& cc : k)
    if (detail::near(cc.corner.vdd, c.vdd) && detail::near(cc.corner.temp_c, c.temp_c)) return cc.stats;
  if (!allow_interpolation)
    throw UserError("corner (" + std::to_string(c.vdd) + " V, " + std::to_string(c.temp_c) +
                    " C) is not calibrated and interpolation is disabled");
  const std::array<CalibratedCorner, 3> volts{k[0], k[1], k[2]};
  const std::array<CalibratedCorner, 3> temps{k[3], k[1], k[4]};
  const auto sv = detail::along<>(std::span(volts), c.vdd, [](const Corner& x) { return x.vdd; });
  const auto st = detail::along<>(std::span(temps), c.temp_c, [](const Corner& x) { return x.temp_c; });
  const auto& n = k[1].stats;
  return {sv.power_mean_w + st.power_mean_w - n.power_mean_w, sv.power_sigma_w + st.power_sigma_w - n.power_sigma_w,
          sv.delay_mean_s + st.delay_mean_s - n.delay_mean_s, sv.delay_sigma_s + st.delay_sigma_s - n.delay_sigma_s};
}

struct MonteCarloResult {
  Corner corner;
  CornerStats configured;
  std::vector<double> power_samples;
  std::vector<double> delay_samples;
  CornerStats sample;  // sample mean and unbiased sigma
};

namespace detail {

inline void mean_sigma(std::span<const double> x, double& mean, double& sigma) {
  mean = 0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  double ss = 0;
  for (double v : x) ss += (v - mean) * (v - mean);
  sigma = x.size() > 1 ? std::sqrt(ss / static_cast<double>(x.size() - 1)) : 0.0;
}

}  // namespace detail

/// Gaussian samples of stage power and delay. Sample i draws from a generator
/// seeded by (seed, i) alone, so any partition of the index range across
/// threads gives the same samples.
inline MonteCarloResult monte_carlo_pvt(const Corner& corner, int n_samples, uint64_t seed,
                                        bool allow_interpolation = true) {
  if (n_samples < 1) throw UserError("monte carlo needs at least one sample");
  MonteCarloResult r;
  r.corner = corner;
  r.configured = corner_stats(corner, allow_interpolation);
  r.power_samples.resize(n_samples);
  r.delay_samples.resize(n_samples);
  for (int i = 0; i < n_samples; ++i) {
    std::seed_seq seq{static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32), static_cast<uint32_t>(i)};
    std::mt19937_64 gen(seq);
    std::normal_distribution<double> z(0.0, 1.0);
    r.power_samples[i] = r.configured.power_mean_w + r.configured.power_sigma_w * z(gen);
    r.delay_samples[i] = r.configured.delay_mean_s + r.configured.delay_sigma_s * z(gen);
  }
  detail::mean_sigma(r.power_samples, r.sample.power_mean_w, r.sample.power_sigma_w);
  detail::mean_sigma(r.delay_samples, r.sample.delay_mean_s, r.sample.delay_sigma_s);
  return r;
}

}  // namespace tdccim::tdc
