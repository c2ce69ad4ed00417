#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <vector>

#include "tdccim/error.hpp"

namespace tdccim {

struct QuantParams {
  double scale = 1.0;
  int zero_point = 0;
  int bit_width = 8;
};

struct QuantTensor {
  std::vector<int> shape;
  std::vector<int8_t> data;
  QuantParams params;

  std::size_t size() const { return data.size(); }
};

inline std::size_t shape_elements(std::span<const int> shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         [](std::size_t a, int b) { return a * static_cast<std::size_t>(b); });
}

inline void validate(const QuantTensor& t) {
  if (!(t.params.scale > 0.0)) throw UserError("quant tensor scale must be positive");
  if (t.params.zero_point < -128 || t.params.zero_point > 127)
    throw UserError("quant tensor zero_point outside [-128, 127]");
  if (shape_elements(t.shape) != t.data.size())
    throw UserError("quant tensor data length does not match its shape");
}

/// Round half away from zero. std::round already does this; the wrapper pins the choice.
inline double round_half_away(double x) { return std::round(x); }

inline int qmax_for(int bit_width) { return (1 << (bit_width - 1)) - 1; }

/// Quantize one value with params p. Output is clamped to the symmetric range,
/// so -2^(b-1) is never produced.
inline int quantize_value(double x, const QuantParams& p) {
  const int qmax = qmax_for(p.bit_width);
  const double q = round_half_away(x / p.scale) + p.zero_point;
  return static_cast<int>(std::clamp(q, static_cast<double>(-qmax), static_cast<double>(qmax)));
}

inline double dequantize_value(int q, const QuantParams& p) {
  return static_cast<double>(q - p.zero_point) * p.scale;
}

/// Symmetric per-tensor quantization. An all-zero tensor gets scale 1.
inline QuantTensor quantize_tensor(std::span<const double> values, std::vector<int> shape,
                                   int bit_width = 8) {
  if (values.empty()) throw UserError("quantize_tensor: empty input");
  if (bit_width != 4 && bit_width != 8) throw UserError("quantize_tensor: bit_width must be 4 or 8");
  if (shape.empty()) shape = {static_cast<int>(values.size())};
  if (shape_elements(shape) != values.size()) throw UserError("quantize_tensor: shape mismatch");

  double max_abs = 0.0;
  for (double v : values) max_abs = std::max(max_abs, std::abs(v));
  QuantParams p;
  p.bit_width = bit_width;
  p.scale = max_abs == 0.0 ? 1.0 : max_abs / qmax_for(bit_width);

  QuantTensor t{std::move(shape), {}, p};
  t.data.reserve(values.size());
  for (double v : values) t.data.push_back(static_cast<int8_t>(quantize_value(v, p)));
  return t;
}

inline QuantTensor quantize_tensor(std::span<const double> values, int bit_width = 8) {
  return quantize_tensor(values, {}, bit_width);
}

inline std::vector<double> dequantize(const QuantTensor& t) {
  std::vector<double> out;
  out.reserve(t.data.size());
  for (int8_t q : t.data) out.push_back(dequantize_value(q, t.params));
  return out;
}

/// Folded multiplier used between layers: (s_in * s_w) / s_out.
inline double requant_multiplier(const QuantParams& in, const QuantParams& w, const QuantParams& out) {
  return (in.scale * w.scale) / out.scale;
}

inline int8_t requantize_with(int64_t acc, double multiplier) {
  const double r = round_half_away(static_cast<double>(acc) * multiplier);
  return static_cast<int8_t>(std::clamp(r, -128.0, 127.0));
}

inline int8_t requantize_accumulator(int64_t acc, const QuantParams& in, const QuantParams& w,
                                     const QuantParams& out) {
  return requantize_with(acc, requant_multiplier(in, w, out));
}

}  // namespace tdccim
