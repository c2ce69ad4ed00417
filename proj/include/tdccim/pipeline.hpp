#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <span>
#include <string>
#include <vector>

#include "tdccim/analog.hpp"
#include "tdccim/cnn.hpp"
#include "tdccim/error.hpp"
#include "tdccim/tdc.hpp"

namespace tdccim {

enum class InputEncoding { pulse_count, bit_serial };

inline const char* to_string(InputEncoding e) { return e == InputEncoding::pulse_count ? "pulse_count" : "bit_serial"; }

inline InputEncoding encoding_from_string(const std::string& s) {
  if (s == "pulse_count") return InputEncoding::pulse_count;
  if (s == "bit_serial") return InputEncoding::bit_serial;
  throw UserError("unknown input encoding '" + s + "'");
}

inline constexpr int kColsPerKernel = 8;   // two nibbles of four bitlines
inline constexpr int kColsPerTdc = 4;
inline constexpr int kBankBytes = 256 * 256 / 8;

/// One macro: `banks` identical rows x cols arrays sharing the clock.
struct MacroConfig {
  int rows = 256;
  int cols = 256;
  int banks = 1;
  double clock_hz = 0.5e9;
  int active_rows = 9;
  int tdc_count = 64;
  tdc::TdcModel tdc = tdc::make_uniform(4);
  analog::AnalogParams analog = analog::default_params(15);
  InputEncoding input_encoding = InputEncoding::pulse_count;

  int64_t capacity_bytes() const { return int64_t{rows} * cols * banks / 8; }
  double capacity_kb() const { return static_cast<double>(capacity_bytes()) / 1024.0; }
  int kernels_per_bank() const { return cols / kColsPerKernel; }
  int kernel_slots() const { return kernels_per_bank() * banks; }
};

inline void validate(const MacroConfig& c) {
  if (c.rows < 1 || c.cols < 1 || c.banks < 1) throw UserError("macro geometry must be positive");
  if (c.cols % kColsPerKernel) throw UserError("macro cols must be divisible by 8");
  if (c.tdc_count != c.cols / kColsPerTdc) throw UserError("macro needs one TDC per 4 columns");
  if (c.active_rows < 1 || c.active_rows > c.rows) throw UserError("active_rows must be in [1, rows]");
  if (!(c.clock_hz > 0)) throw UserError("clock must be positive");
  tdc::validate(c.tdc);
  analog::validate(c.analog);
}

/// Macro of `kb` kilobytes built from 8 KB banks.
inline MacroConfig macro_for_kb(int kb) {
  if (kb < 1 || (kb * 1024) % kBankBytes) throw UserError("macro size must be a multiple of 8 KB");
  MacroConfig c;
  c.banks = kb * 1024 / kBankBytes;
  return c;
}

/// Largest weighted count one conversion can see: every active row at full nibble.
inline long max_weighted_count(const MacroConfig& c) {
  return long{c.active_rows} * 15 * (c.input_encoding == InputEncoding::pulse_count ? 15 : 1);
}

/// Uniform `bits`-bit TDC with the discharge calibrated to one count per code.
inline MacroConfig with_tdc_bits(MacroConfig c, int bits) {
  c.tdc = tdc::make_uniform(bits, c.tdc.v_lo, c.tdc.v_hi);
  c.analog = analog::calibrate_unit_discharge(c.analog, (1 << bits) - 1);
  return c;
}

/// Resolution high enough to represent every weighted count exactly.
inline int ideal_tdc_bits(const MacroConfig& c) {
  return static_cast<int>(std::bit_width(static_cast<unsigned long>(max_weighted_count(c))));
}

inline MacroConfig with_ideal_tdc(MacroConfig c) { return with_tdc_bits(std::move(c), ideal_tdc_bits(c)); }

struct MacOpResult {
  int32_t value = 0;
  bool saturated = false;
  int cycles = 0;
  int conversions = 0;
  int saturated_conversions = 0;
};

/// Weighted count -> TDC code through V_mac, tabulated once per configuration.
class Readout {
 public:
  explicit Readout(const MacroConfig& c) {
    validate(c);
    const long wmax = max_weighted_count(c);
    const double full_scale = analog::full_scale_count(c.analog);
    codes_.resize(wmax + 1);
    sat_.resize(wmax + 1);
    for (long w = 0; w <= wmax; ++w) {
      codes_[w] = tdc::convert_threshold(std::max(0.0, analog::mac_voltage(w, c.analog)), c.tdc).code;
      sat_[w] = static_cast<double>(w) > full_scale + 1e-9;
    }
  }

  int code(long w) const { return codes_[w]; }
  bool saturated(long w) const { return sat_[w]; }

 private:
  std::vector<int> codes_;
  std::vector<uint8_t> sat_;
};

namespace detail {

inline int sign_of(int v) { return (v > 0) - (v < 0); }

struct Phase {
  int64_t value = 0;
  int conversions = 0;
  int saturated = 0;
};

inline int convert_into(const Readout& r, long w, Phase& p) {
  ++p.conversions;
  if (r.saturated(w)) ++p.saturated;
  return r.code(w);
}

}  // namespace detail

/// One MAC over up to active_rows rows. Inputs and weights arrive as magnitude
/// plus sign; the sign of each row product picks one of two conversion phases and
/// is applied digitally. Weights are stored as two 4-bit magnitude nibbles.
inline MacOpResult mac_rows(const Readout& r, InputEncoding enc, std::span<const uint8_t> x_mag,
                            std::span<const int8_t> x_sign, std::span<const uint8_t> w_mag,
                            std::span<const int8_t> w_sign) {
  const std::size_t n = x_mag.size();
  MacOpResult out;
  for (int phase : {1, -1}) {
    detail::Phase p;
    if (enc == InputEncoding::pulse_count) {
      long ll = 0, lh = 0, hl = 0, hh = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (x_sign[i] * w_sign[i] != phase) continue;
        const long xl = x_mag[i] & 15, xh = x_mag[i] >> 4, wl = w_mag[i] & 15, wh = w_mag[i] >> 4;
        ll += xl * wl;
        lh += xl * wh;
        hl += xh * wl;
        hh += xh * wh;
      }
      // cycle 1: input low nibble against both weight nibbles; cycle 2: high nibble
      const int c_ll = detail::convert_into(r, ll, p), c_lh = detail::convert_into(r, lh, p);
      const int c_hl = detail::convert_into(r, hl, p), c_hh = detail::convert_into(r, hh, p);
      p.value = c_ll + (int64_t{c_lh} << 4) + (int64_t{c_hl} << 4) + (int64_t{c_hh} << 8);
      out.cycles = 2;
    } else {
      for (int b = 0; b < 8; ++b) {
        long lo = 0, hi = 0;
        for (std::size_t i = 0; i < n; ++i) {
          if (x_sign[i] * w_sign[i] != phase || !((x_mag[i] >> b) & 1)) continue;
          lo += w_mag[i] & 15;
          hi += w_mag[i] >> 4;
        }
        const int c_lo = detail::convert_into(r, lo, p), c_hi = detail::convert_into(r, hi, p);
        p.value += (c_lo + (int64_t{c_hi} << 4)) << b;
      }
      out.cycles = 8;
    }
    out.value += static_cast<int32_t>(phase * p.value);
    out.conversions += p.conversions;
    out.saturated_conversions += p.saturated;
  }
  out.saturated = out.saturated_conversions > 0;
  return out;
}

/// Resonant write driver: recycled fraction of the bitline energy per flipped bit.
struct WriteDriver {
  double e_write_bit = 0.0;
  double recycle_fraction = 0.4;
};

inline double writeback_energy(uint8_t old_value, uint8_t new_value, const WriteDriver& d) {
  return std::popcount(static_cast<uint8_t>(old_value ^ new_value)) * d.e_write_bit * (1.0 - d.recycle_fraction);
}

/// Weights held stationary in the array plus the output buffer.
/// Thread safety: mac() is const and may be called concurrently; writeback()
/// mutates the buffer and needs exclusive access.
class MacroState {
 public:
  MacroState(const MacroConfig& c, const std::vector<std::vector<int8_t>>& kernels)
      : config_(c), readout_(c) {
    const int slots = c.kernel_slots();
    if (static_cast<int>(kernels.size()) > slots)
      throw UserError("store_weights: " + std::to_string(kernels.size()) + " kernels need " +
                      std::to_string(kernels.size() * kColsPerKernel) + " columns, only " +
                      std::to_string(slots * kColsPerKernel) + " available (" + std::to_string(c.banks) +
                      " bank(s) x " + std::to_string(c.cols) + ")");
    for (std::size_t k = 0; k < kernels.size(); ++k) {
      if (static_cast<int>(kernels[k].size()) > c.rows)
        throw UserError("store_weights: kernel " + std::to_string(k) + " needs " +
                        std::to_string(kernels[k].size()) + " rows, only " + std::to_string(c.rows) + " available");
      Stored s;
      for (int8_t w : kernels[k]) {
        s.mag.push_back(static_cast<uint8_t>(std::abs(int{w})));
        s.sign.push_back(static_cast<int8_t>(detail::sign_of(w)));
      }
      kernels_.push_back(std::move(s));
    }
  }

  const MacroConfig& config() const { return config_; }
  int kernel_count() const { return static_cast<int>(kernels_.size()); }
  int kernel_rows(int k) const { return static_cast<int>(kernels_.at(k).mag.size()); }
  int bank_of(int k) const { return k / config_.kernels_per_bank(); }
  int initialization_passes() const { return 1; }

  /// MAC of unsigned inputs against rows [row_offset, row_offset + inputs.size()).
  MacOpResult mac(int kernel_index, std::span<const uint8_t> inputs, int row_offset = 0) const {
    if (kernel_index < 0 || kernel_index >= kernel_count()) throw UserError("mac: kernel index out of range");
    const auto& s = kernels_[kernel_index];
    if (row_offset < 0 || row_offset + inputs.size() > s.mag.size()) throw UserError("mac: rows outside kernel");
    if (static_cast<int>(inputs.size()) > config_.active_rows) throw UserError("mac: more rows than active_rows");
    const std::vector<int8_t> pos(inputs.size(), 1);
    return mac_rows(readout_, config_.input_encoding, inputs, pos,
                    std::span(s.mag).subspan(row_offset, inputs.size()),
                    std::span(s.sign).subspan(row_offset, inputs.size()));
  }

  /// Stores `value` at `address` of the output buffer; returns the write energy.
  double writeback(int8_t value, std::size_t address, const WriteDriver& d) {
    if (address >= buffer_.size()) buffer_.resize(address + 1, 0);
    const double e = writeback_energy(buffer_[address], static_cast<uint8_t>(value), d);
    buffer_[address] = static_cast<uint8_t>(value);
    return e;
  }

  int8_t buffered(std::size_t address) const { return static_cast<int8_t>(buffer_.at(address)); }

 private:
  struct Stored {
    std::vector<uint8_t> mag;
    std::vector<int8_t> sign;
  };
  MacroConfig config_;
  Readout readout_;
  std::vector<Stored> kernels_;
  std::vector<uint8_t> buffer_;
};

inline MacroState store_weights(const MacroConfig& c, const std::vector<std::vector<int8_t>>& kernels) {
  return MacroState(c, kernels);
}

inline MacOpResult mac_3x3(const MacroState& s, std::span<const uint8_t, 9> inputs, int kernel_index) {
  return s.mac(kernel_index, inputs);
}

/// How the taps of one output are split: row_tiles column units of at most
/// rows_per_tile rows each, every unit driven in passes of at most active_rows rows.
struct TapSplit {
  int row_tiles = 1;
  int rows_per_tile = 0;
  int passes = 0;  // per tile
};

inline TapSplit split_taps(int reduction, const MacroConfig& c) {
  TapSplit s;
  s.row_tiles = (reduction + c.rows - 1) / c.rows;
  s.rows_per_tile = (reduction + s.row_tiles - 1) / s.row_tiles;
  s.passes = (s.rows_per_tile + c.active_rows - 1) / c.active_rows;
  return s;
}

struct OpCounts {
  int64_t macs = 0;
  int64_t mac_groups = 0;
  int64_t group_cycles = 0;
  int64_t conversions = 0;
  int64_t saturated_conversions = 0;
  int64_t writebacks = 0;
  int64_t bits_flipped = 0;

  double saturation_rate() const {
    return conversions ? static_cast<double>(saturated_conversions) / static_cast<double>(conversions) : 0.0;
  }
};

/// Dot-product engine for run_layers that computes every dot through the macro
/// datapath, split into passes the way the mapper schedules them.
class MacroEngine {
 public:
  explicit MacroEngine(const MacroConfig& c) : config_(c), readout_(c) {}

  int64_t dot(std::span<const int8_t> x, std::span<const int8_t> w) {
    const int r = static_cast<int>(x.size());
    const TapSplit s = split_taps(r, config_);
    xm_.resize(r);
    xs_.resize(r);
    wm_.resize(r);
    ws_.resize(r);
    for (int i = 0; i < r; ++i) {
      xm_[i] = static_cast<uint8_t>(std::abs(int{x[i]}));
      xs_[i] = static_cast<int8_t>(detail::sign_of(x[i]));
      wm_[i] = static_cast<uint8_t>(std::abs(int{w[i]}));
      ws_[i] = static_cast<int8_t>(detail::sign_of(w[i]));
    }
    int64_t acc = 0;
    for (int t = 0; t < s.row_tiles; ++t) {
      const int lo = t * s.rows_per_tile, hi = std::min(r, lo + s.rows_per_tile);
      for (int g = lo; g < hi; g += config_.active_rows) {
        const std::size_t n = std::min(config_.active_rows, hi - g);
        const auto res = mac_rows(readout_, config_.input_encoding, std::span(xm_).subspan(g, n),
                                  std::span(xs_).subspan(g, n), std::span(wm_).subspan(g, n),
                                  std::span(ws_).subspan(g, n));
        acc += res.value;
        ++counts.mac_groups;
        counts.group_cycles += res.cycles;
        counts.conversions += res.conversions;
        counts.saturated_conversions += res.saturated_conversions;
      }
    }
    counts.macs += r;
    return acc;
  }

  /// Called by run_layers after each requantized weight layer.
  void on_layer_output(std::size_t layer, std::span<const int8_t> out) {
    if (buffers_.size() <= layer) buffers_.resize(layer + 1);
    auto& b = buffers_[layer];
    b.resize(out.size(), 0);
    for (std::size_t i = 0; i < out.size(); ++i) {
      counts.bits_flipped += std::popcount(static_cast<uint8_t>(b[i] ^ static_cast<uint8_t>(out[i])));
      b[i] = static_cast<uint8_t>(out[i]);
    }
    counts.writebacks += static_cast<int64_t>(out.size());
  }

  OpCounts counts;

 private:
  MacroConfig config_;
  Readout readout_;
  std::vector<uint8_t> xm_, wm_;
  std::vector<int8_t> xs_, ws_;
  std::vector<std::vector<uint8_t>> buffers_;
};

}  // namespace tdccim
