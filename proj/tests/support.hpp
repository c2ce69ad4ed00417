// Helpers shared by the unit tests and the acceptance binary.
#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "tdccim/tdccim.hpp"

namespace tdccim::testing {

inline std::string data_path(const std::string& rel) { return std::string(TDCCIM_DATA_DIR) + "/" + rel; }

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("tdccim_" + tag + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

inline std::vector<int8_t> random_int8(std::mt19937_64& rng, std::size_t n, int lo = -128, int hi = 127) {
  std::uniform_int_distribution<int> d(lo, hi);
  std::vector<int8_t> v(n);
  for (auto& x : v) x = static_cast<int8_t>(d(rng));
  return v;
}

inline QuantTensor make_tensor(std::vector<int> shape, std::vector<int8_t> data, double scale = 1.0 / 64) {
  return QuantTensor{std::move(shape), std::move(data), QuantParams{scale, 0, 8}};
}

/// Single conv2d layer with random weights and bias. out_scale is picked so the
/// requantized values spread over the int8 range instead of saturating.
struct RandomConv {
  NetworkDesc net;
  WeightStore ws;
};

inline RandomConv random_conv(std::mt19937_64& rng, int c, int k, int h, int w, int kh, int kw, int pad,
                              int wlo = -128, int whi = 127, bool with_bias = true) {
  RandomConv r;
  r.net.name = "random_conv";
  r.net.input_shape = {c, h, w};
  LayerDesc l;
  l.kind = LayerKind::conv2d;
  l.in_channels = c;
  l.out_channels = k;
  l.kernel_h = kh;
  l.kernel_w = kw;
  l.padding = pad;
  l.weight_ref = "w";
  const int taps = c * kh * kw;
  const double in_scale = 1.0 / 64, w_scale = 1.0 / 128;
  // typical |acc| is about 64 * 64 * sqrt(taps); map that to about 64
  l.out_scale = in_scale * w_scale * 64.0 * std::sqrt(static_cast<double>(taps));
  r.ws.weights["w"] =
      make_tensor({k, c, kh, kw}, random_int8(rng, static_cast<std::size_t>(k) * taps, wlo, whi), w_scale);
  r.ws.order.push_back("w");
  if (with_bias) {
    l.bias_ref = "b";
    std::uniform_int_distribution<int> bd(-2000, 2000);
    BiasTensor b{{k}, std::vector<int32_t>(k), in_scale * w_scale};
    for (auto& x : b.data) x = bd(rng);
    r.ws.biases["b"] = std::move(b);
    r.ws.order.push_back("b");
  }
  r.net.layers.push_back(l);
  return r;
}

// Synthetic workloads whose layer shapes follow the published benchmark
// networks. Only shapes matter for mapping and cost, so no weights are attached.

namespace detail {

inline void conv(NetworkDesc& n, Shape3& s, int k, int kernel, int stride, int groups = 1) {
  LayerDesc l;
  l.kind = LayerKind::conv2d;
  l.in_channels = s.c;
  l.out_channels = k;
  l.kernel_h = l.kernel_w = kernel;
  l.stride = stride;
  l.padding = kernel / 2;
  l.groups = groups;
  l.weight_ref = "w" + std::to_string(n.layers.size());
  n.layers.push_back(l);
  s = output_shape(l, s, n.layers.size() - 1);
}

inline void pool(NetworkDesc& n, Shape3& s, int k, int stride, LayerKind kind = LayerKind::maxpool2d) {
  LayerDesc l;
  l.kind = kind;
  l.kernel_h = l.kernel_w = k;
  l.stride = stride;
  n.layers.push_back(l);
  s = output_shape(l, s, n.layers.size() - 1);
}

inline void fc(NetworkDesc& n, Shape3& s, int k) {
  LayerDesc l;
  l.kind = LayerKind::fully_connected;
  l.in_channels = static_cast<int>(s.elements());
  l.out_channels = k;
  l.weight_ref = "w" + std::to_string(n.layers.size());
  n.layers.push_back(l);
  s = output_shape(l, s, n.layers.size() - 1);
}

}  // namespace detail

inline NetworkDesc mobilenet_v1_like() {
  NetworkDesc n{"mobilenet_v1_like", {}, {3, 32, 32}};
  Shape3 s = n.input_shape;
  detail::conv(n, s, 32, 3, 1);
  const int plan[][2] = {{64, 1}, {128, 2}, {128, 1}, {256, 2}, {256, 1}, {512, 2}, {512, 1},
                         {512, 1}, {512, 1}, {512, 1}, {512, 1}, {1024, 2}, {1024, 1}};
  for (const auto& p : plan) {
    detail::conv(n, s, s.c, 3, p[1], s.c);
    detail::conv(n, s, p[0], 1, 1);
  }
  detail::pool(n, s, s.h, 1, LayerKind::avgpool2d);
  detail::fc(n, s, 10);
  return n;
}

inline NetworkDesc mobilenet_v2_like() {
  NetworkDesc n{"mobilenet_v2_like", {}, {3, 32, 32}};
  Shape3 s = n.input_shape;
  detail::conv(n, s, 32, 3, 1);
  // expansion t, channels c, repeats r, stride s
  const int plan[][4] = {{1, 16, 1, 1}, {6, 24, 2, 1}, {6, 32, 3, 2}, {6, 64, 4, 2},
                         {6, 96, 3, 1}, {6, 160, 3, 2}, {6, 320, 1, 1}};
  for (const auto& p : plan)
    for (int r = 0; r < p[2]; ++r) {
      if (p[0] != 1) detail::conv(n, s, s.c * p[0], 1, 1);
      detail::conv(n, s, s.c, 3, r == 0 ? p[3] : 1, s.c);
      detail::conv(n, s, p[1], 1, 1);
    }
  detail::conv(n, s, 1280, 1, 1);
  detail::pool(n, s, s.h, 1, LayerKind::avgpool2d);
  detail::fc(n, s, 10);
  return n;
}

inline NetworkDesc squeezenet_like() {
  NetworkDesc n{"squeezenet_like", {}, {3, 224, 224}};
  Shape3 s = n.input_shape;
  detail::conv(n, s, 64, 3, 2);
  detail::pool(n, s, 3, 2);
  // A network here is a chain, so each fire module's concatenated expand pair
  // becomes one 3x3 conv with 2e outputs.
  const int fire[][2] = {{16, 64}, {16, 64}, {32, 128}, {32, 128}, {48, 192}, {48, 192}, {64, 256}, {64, 256}};
  for (int i = 0; i < 8; ++i) {
    detail::conv(n, s, fire[i][0], 1, 1);
    detail::conv(n, s, 2 * fire[i][1], 3, 1);
    if (i == 1 || i == 3) detail::pool(n, s, 3, 2);
  }
  detail::conv(n, s, 1000, 1, 1);
  detail::pool(n, s, s.h, 1, LayerKind::avgpool2d);
  return n;
}

inline NetworkDesc resnet18_like() {
  NetworkDesc n{"resnet18_like", {}, {3, 224, 224}};
  Shape3 s = n.input_shape;
  detail::conv(n, s, 64, 7, 2);
  detail::pool(n, s, 2, 2);
  for (int stage = 0; stage < 4; ++stage) {
    const int ch = 64 << stage;
    for (int block = 0; block < 2; ++block) {
      const int stride = stage > 0 && block == 0 ? 2 : 1;
      detail::conv(n, s, ch, 3, stride);
      detail::conv(n, s, ch, 3, 1);
    }
  }
  detail::pool(n, s, s.h, 1, LayerKind::avgpool2d);
  detail::fc(n, s, 1000);
  return n;
}

inline NetworkDesc tiny_yolo_like() {
  NetworkDesc n{"tiny_yolo_like", {}, {3, 416, 416}};
  Shape3 s = n.input_shape;
  for (int i = 0; i < 6; ++i) {
    detail::conv(n, s, 16 << i, 3, 1);
    detail::pool(n, s, 2, i < 5 ? 2 : 1);
  }
  detail::conv(n, s, 1024, 3, 1);
  detail::conv(n, s, 256, 1, 1);
  detail::conv(n, s, 512, 3, 1);
  detail::conv(n, s, 255, 1, 1);
  return n;
}

inline std::vector<NetworkDesc> synthetic_workloads() {
  return {mobilenet_v1_like(), mobilenet_v2_like(), squeezenet_like(), resnet18_like(), tiny_yolo_like()};
}

inline const std::vector<int>& sweep_sizes() {
  static const std::vector<int> k{8, 16, 24, 32, 64, 96, 128, 192, 256};
  return k;
}

inline std::vector<MacroConfig> sweep_configs() {
  std::vector<MacroConfig> out;
  for (int kb : sweep_sizes()) out.push_back(macro_for_kb(kb));
  return out;
}

}  // namespace tdccim::testing
