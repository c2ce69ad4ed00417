#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tdccim/error.hpp"
#include "tdccim/quant.hpp"

namespace tdccim {

enum class LayerKind { conv2d, fully_connected, relu, maxpool2d, avgpool2d };

inline const char* to_string(LayerKind k) {
  switch (k) {
    case LayerKind::conv2d: return "conv2d";
    case LayerKind::fully_connected: return "fully_connected";
    case LayerKind::relu: return "relu";
    case LayerKind::maxpool2d: return "maxpool2d";
    case LayerKind::avgpool2d: return "avgpool2d";
  }
  return "?";
}

inline LayerKind layer_kind_from_string(const std::string& s) {
  if (s == "conv2d") return LayerKind::conv2d;
  if (s == "fully_connected") return LayerKind::fully_connected;
  if (s == "relu") return LayerKind::relu;
  if (s == "maxpool2d") return LayerKind::maxpool2d;
  if (s == "avgpool2d") return LayerKind::avgpool2d;
  throw UserError("unknown layer kind '" + s + "'");
}

inline bool has_weights(LayerKind k) { return k == LayerKind::conv2d || k == LayerKind::fully_connected; }

/// One layer. Pool layers use kernel_h/kernel_w/stride/padding; conv2d also uses groups
/// (groups == in_channels for depthwise). out_scale is the activation scale this
/// layer requantizes to; layers without weights keep their input scale.
struct LayerDesc {
  LayerKind kind = LayerKind::relu;
  int in_channels = 0;
  int out_channels = 0;
  int kernel_h = 1;
  int kernel_w = 1;
  int stride = 1;
  int padding = 0;
  int groups = 1;
  std::optional<std::string> weight_ref;
  std::optional<std::string> bias_ref;
  double out_scale = 1.0;
};

struct Shape3 {
  int c = 0, h = 0, w = 0;
  int64_t elements() const { return int64_t{c} * h * w; }
  bool operator==(const Shape3&) const = default;
};

struct NetworkDesc {
  std::string name;
  std::vector<LayerDesc> layers;
  Shape3 input_shape;
};

struct BiasTensor {
  std::vector<int> shape;
  std::vector<int32_t> data;
  double scale = 1.0;
};

/// Named tensors of a model. `order` remembers file order so saving is stable.
struct WeightStore {
  std::map<std::string, QuantTensor> weights;
  std::map<std::string, BiasTensor> biases;
  std::vector<std::string> order;

  const QuantTensor& weight(const std::string& id) const {
    auto it = weights.find(id);
    if (it == weights.end()) throw UserError("missing weight tensor '" + id + "'");
    return it->second;
  }
  const BiasTensor* bias(const std::optional<std::string>& id) const {
    if (!id) return nullptr;
    auto it = biases.find(*id);
    if (it == biases.end()) throw UserError("missing bias tensor '" + *id + "'");
    return &it->second;
  }
};

namespace detail {
inline std::string at_layer(std::size_t i, const LayerDesc& l) {
  return "layer " + std::to_string(i) + " (" + to_string(l.kind) + "): ";
}
}  // namespace detail

inline Shape3 output_shape(const LayerDesc& l, const Shape3& in, std::size_t index) {
  const auto where = detail::at_layer(index, l);
  switch (l.kind) {
    case LayerKind::conv2d: {
      if (l.groups < 1 || l.in_channels % l.groups || l.out_channels % l.groups)
        throw UserError(where + "channels not divisible by groups");
      if (l.in_channels != in.c)
        throw UserError(where + "expects " + std::to_string(l.in_channels) + " input channels, got " +
                        std::to_string(in.c));
      if (l.stride < 1 || l.padding < 0 || l.kernel_h < 1 || l.kernel_w < 1)
        throw UserError(where + "invalid kernel/stride/padding");
      const int oh = (in.h + 2 * l.padding - l.kernel_h) / l.stride + 1;
      const int ow = (in.w + 2 * l.padding - l.kernel_w) / l.stride + 1;
      if (in.h + 2 * l.padding < l.kernel_h || in.w + 2 * l.padding < l.kernel_w)
        throw UserError(where + "kernel larger than padded input");
      return {l.out_channels, oh, ow};
    }
    case LayerKind::fully_connected:
      if (l.in_channels != in.elements())
        throw UserError(where + "expects " + std::to_string(l.in_channels) + " inputs, got " +
                        std::to_string(in.elements()));
      return {l.out_channels, 1, 1};
    case LayerKind::relu:
      return in;
    case LayerKind::maxpool2d:
    case LayerKind::avgpool2d: {
      if (l.stride < 1 || l.kernel_h < 1 || l.kernel_w < 1 || l.padding != 0)
        throw UserError(where + "invalid pooling window");
      if (in.h < l.kernel_h || in.w < l.kernel_w) throw UserError(where + "window larger than input");
      return {in.c, (in.h - l.kernel_h) / l.stride + 1, (in.w - l.kernel_w) / l.stride + 1};
    }
  }
  throw UserError(where + "unsupported layer");
}

/// Shapes after every layer; element 0 is the network input.
inline std::vector<Shape3> infer_shapes(const NetworkDesc& net) {
  std::vector<Shape3> shapes{net.input_shape};
  if (net.input_shape.elements() <= 0) throw UserError("network input shape must be positive");
  for (std::size_t i = 0; i < net.layers.size(); ++i)
    shapes.push_back(output_shape(net.layers[i], shapes.back(), i));
  return shapes;
}

/// Taps per output element: (in_channels / groups) * kh * kw, or in_channels for FC.
inline int reduction_length(const LayerDesc& l) {
  if (l.kind == LayerKind::fully_connected) return l.in_channels;
  return l.in_channels / l.groups * l.kernel_h * l.kernel_w;
}

/// Checks shapes, tensor presence and tensor sizes. Throws UserError naming the layer.
inline void validate_network(const NetworkDesc& net, const WeightStore& ws) {
  infer_shapes(net);
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const auto& l = net.layers[i];
    const auto where = detail::at_layer(i, l);
    if (has_weights(l.kind)) {
      if (!l.weight_ref) throw UserError(where + "missing weight_ref");
      auto it = ws.weights.find(*l.weight_ref);
      if (it == ws.weights.end()) throw UserError(where + "unresolved weight_ref '" + *l.weight_ref + "'");
      const auto want = static_cast<std::size_t>(l.out_channels) * reduction_length(l);
      if (it->second.data.size() != want)
        throw UserError(where + "weight tensor '" + *l.weight_ref + "' has " +
                        std::to_string(it->second.data.size()) + " elements, expected " + std::to_string(want));
      if (l.bias_ref) {
        const auto* b = ws.bias(l.bias_ref);
        if (b->data.size() != static_cast<std::size_t>(l.out_channels))
          throw UserError(where + "bias tensor '" + *l.bias_ref + "' length mismatch");
      }
      if (!(l.out_scale > 0.0)) throw UserError(where + "out_scale must be positive");
    } else if (l.weight_ref || l.bias_ref) {
      throw UserError(where + "layer kind takes no weights");
    }
  }
}

/// Plain integer dot product; the accuracy and MAC oracle.
struct ReferenceEngine {
  int64_t dot(std::span<const int8_t> x, std::span<const int8_t> w) {
    int64_t acc = 0;
    for (std::size_t i = 0; i < x.size(); ++i) acc += int64_t{x[i]} * int64_t{w[i]};
    return acc;
  }
};

namespace detail {

inline int32_t checked_acc(int64_t acc, std::size_t layer) {
  check_invariant(acc >= std::numeric_limits<int32_t>::min() && acc <= std::numeric_limits<int32_t>::max(),
                  "32-bit accumulator overflow in layer " + std::to_string(layer));
  return static_cast<int32_t>(acc);
}

/// Gathers the receptive field of output (oy, ox) for group g into `patch`
/// in weight layout order [c][kh][kw]; padded positions read as zero.
inline void gather_patch(const LayerDesc& l, std::span<const int8_t> in, const Shape3& s, int g, int oy, int ox,
                         std::vector<int8_t>& patch) {
  const int cg = l.in_channels / l.groups;
  std::size_t n = 0;
  for (int c = 0; c < cg; ++c) {
    const int ch = g * cg + c;
    for (int ky = 0; ky < l.kernel_h; ++ky) {
      const int y = oy * l.stride + ky - l.padding;
      for (int kx = 0; kx < l.kernel_w; ++kx) {
        const int x = ox * l.stride + kx - l.padding;
        const bool inside = y >= 0 && y < s.h && x >= 0 && x < s.w;
        patch[n++] = inside ? in[(static_cast<std::size_t>(ch) * s.h + y) * s.w + x] : int8_t{0};
      }
    }
  }
}

}  // namespace detail

/// Raw 32-bit accumulators (bias included, before requantization) of a conv2d or
/// fully_connected layer, output order [k][oy][ox].
template <class Engine>
std::vector<int32_t> layer_accumulators(const LayerDesc& l, const WeightStore& ws, std::span<const int8_t> in,
                                        const Shape3& in_shape, Engine& engine, std::size_t index = 0) {
  const Shape3 out = output_shape(l, in_shape, index);
  const auto& w = ws.weight(*l.weight_ref);
  const BiasTensor* bias = ws.bias(l.bias_ref);
  const int r = reduction_length(l);
  std::vector<int32_t> acc(static_cast<std::size_t>(out.elements()));
  const std::span<const int8_t> wall(w.data);

  if (l.kind == LayerKind::fully_connected) {
    for (int k = 0; k < l.out_channels; ++k) {
      int64_t a = engine.dot(in, wall.subspan(static_cast<std::size_t>(k) * r, r));
      if (bias) a += bias->data[k];
      acc[k] = detail::checked_acc(a, index);
    }
    return acc;
  }

  std::vector<int8_t> patch(r);
  const int kg = l.out_channels / l.groups;
  for (int g = 0; g < l.groups; ++g) {
    for (int oy = 0; oy < out.h; ++oy) {
      for (int ox = 0; ox < out.w; ++ox) {
        detail::gather_patch(l, in, in_shape, g, oy, ox, patch);
        for (int kk = 0; kk < kg; ++kk) {
          const int k = g * kg + kk;
          int64_t a = engine.dot(patch, wall.subspan(static_cast<std::size_t>(k) * r, r));
          if (bias) a += bias->data[k];
          acc[(static_cast<std::size_t>(k) * out.h + oy) * out.w + ox] = detail::checked_acc(a, index);
        }
      }
    }
  }
  return acc;
}

namespace detail {

inline std::vector<int8_t> pool(const LayerDesc& l, std::span<const int8_t> in, const Shape3& s, const Shape3& o) {
  std::vector<int8_t> out(static_cast<std::size_t>(o.elements()));
  const bool is_max = l.kind == LayerKind::maxpool2d;
  for (int c = 0; c < o.c; ++c)
    for (int oy = 0; oy < o.h; ++oy)
      for (int ox = 0; ox < o.w; ++ox) {
        int best = -129;
        int sum = 0;
        for (int ky = 0; ky < l.kernel_h; ++ky)
          for (int kx = 0; kx < l.kernel_w; ++kx) {
            const int v = in[(static_cast<std::size_t>(c) * s.h + oy * l.stride + ky) * s.w + ox * l.stride + kx];
            best = std::max(best, v);
            sum += v;
          }
        const int v = is_max ? best
                             : static_cast<int>(round_half_away(static_cast<double>(sum) / (l.kernel_h * l.kernel_w)));
        out[(static_cast<std::size_t>(c) * o.h + oy) * o.w + ox] = static_cast<int8_t>(v);
      }
  return out;
}

inline Shape3 input_shape_of(const QuantTensor& t, const Shape3& expected) {
  std::vector<int> s = t.shape;
  if (s.size() == 4 && s[0] == 1) s.erase(s.begin());
  if (s.size() != 3 || Shape3{s[0], s[1], s[2]} != expected)
    throw UserError("input tensor shape does not match network input shape");
  return expected;
}

}  // namespace detail

/// Runs the integer network with `engine` doing every dot product. The result is
/// a [C, H, W] tensor carrying the final activation scale.
template <class Engine>
QuantTensor run_layers(const NetworkDesc& net, const WeightStore& ws, const QuantTensor& input, Engine& engine) {
  validate_network(net, ws);
  validate(input);
  Shape3 shape = detail::input_shape_of(input, net.input_shape);
  std::vector<int8_t> act = input.data;
  QuantParams params = input.params;

  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const auto& l = net.layers[i];
    const Shape3 out = output_shape(l, shape, i);
    switch (l.kind) {
      case LayerKind::conv2d:
      case LayerKind::fully_connected: {
        const auto acc = layer_accumulators(l, ws, act, shape, engine, i);
        const QuantParams out_p{l.out_scale, 0, 8};
        const double m = requant_multiplier(params, ws.weight(*l.weight_ref).params, out_p);
        act.resize(acc.size());
        for (std::size_t j = 0; j < acc.size(); ++j) act[j] = requantize_with(acc[j], m);
        params = out_p;
        if constexpr (requires { engine.on_layer_output(i, std::span<const int8_t>(act)); })
          engine.on_layer_output(i, std::span<const int8_t>(act));
        break;
      }
      case LayerKind::relu:
        for (auto& v : act) v = static_cast<int8_t>(std::max<int>(v, params.zero_point));
        break;
      case LayerKind::maxpool2d:
      case LayerKind::avgpool2d:
        act = detail::pool(l, act, shape, out);
        break;
    }
    shape = out;
  }
  return QuantTensor{{shape.c, shape.h, shape.w}, std::move(act), params};
}

inline QuantTensor infer_int8_reference(const NetworkDesc& net, const WeightStore& ws, const QuantTensor& input) {
  ReferenceEngine e;
  return run_layers(net, ws, input, e);
}

/// Index of the largest element; ties go to the lowest index.
inline int argmax(const QuantTensor& t) {
  return static_cast<int>(std::max_element(t.data.begin(), t.data.end()) - t.data.begin());
}

struct LayerWorkload {
  std::size_t index = 0;
  LayerKind kind = LayerKind::relu;
  int in_channels = 0, out_channels = 0;
  int kernel_h = 1, kernel_w = 1, stride = 1, groups = 1;
  int out_h = 0, out_w = 0;
  int reduction = 0;  // taps per output element
  int64_t macs = 0;
  int64_t weight_bytes = 0;
  int64_t output_elements = 0;

  int64_t positions() const { return int64_t{out_h} * out_w; }
};

/// Per-layer MAC/weight/output counts. Weight bytes count INT8 weights only; biases
/// live in the digital accumulator path.
inline std::vector<LayerWorkload> extract_layer_info(const NetworkDesc& net) {
  const auto shapes = infer_shapes(net);
  std::vector<LayerWorkload> out;
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const auto& l = net.layers[i];
    const Shape3 o = shapes[i + 1];
    LayerWorkload w;
    w.index = i;
    w.kind = l.kind;
    w.in_channels = l.in_channels;
    w.out_channels = o.c;
    w.kernel_h = l.kernel_h;
    w.kernel_w = l.kernel_w;
    w.stride = l.stride;
    w.groups = l.groups;
    w.out_h = o.h;
    w.out_w = o.w;
    w.output_elements = o.elements();
    if (has_weights(l.kind)) {
      if (l.kind == LayerKind::fully_connected) w.kernel_h = w.kernel_w = 1;
      w.reduction = reduction_length(l);
      w.macs = w.output_elements * w.reduction;
      w.weight_bytes = int64_t{l.out_channels} * w.reduction;
    }
    out.push_back(w);
  }
  return out;
}

inline std::vector<LayerWorkload> extract_layer_info(const NetworkDesc& net, const WeightStore& ws) {
  validate_network(net, ws);
  return extract_layer_info(net);
}

inline int64_t total_macs(std::span<const LayerWorkload> ls) {
  int64_t s = 0;
  for (const auto& l : ls) s += l.macs;
  return s;
}

inline int64_t total_weight_bytes(std::span<const LayerWorkload> ls) {
  int64_t s = 0;
  for (const auto& l : ls) s += l.weight_bytes;
  return s;
}

}  // namespace tdccim
