#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "tdccim/cnn.hpp"
#include "tdccim/error.hpp"
#include "tdccim/mapper.hpp"
#include "tdccim/metrics.hpp"
#include "tdccim/quant.hpp"
#include "tdccim/tdc.hpp"

namespace tdccim::io {

using json = nlohmann::ordered_json;

// ---------------------------------------------------------------- text helpers

/// 17 significant digits, '.' separator, independent of the global locale.
inline std::string format_double(double x) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
  if (ec != std::errc{}) throw InvariantError("format_double failed");
  return std::string(buf, end);
}

inline std::string read_text(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw UserError("cannot open '" + path + "'");
  return {std::istreambuf_iterator<char>(f), {}};
}

inline std::vector<uint8_t> read_bytes(const std::string& path) {
  const auto s = read_text(path);
  return {s.begin(), s.end()};
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw UserError("cannot write '" + path + "'");
  f << text;
  if (!f) throw UserError("write failed for '" + path + "'");
}

inline json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw UserError(what + ": malformed JSON at byte " + std::to_string(e.byte) + ": " + e.what());
  }
}

namespace detail {

inline const json& field(const json& j, const std::string& key, const std::string& path) {
  if (!j.is_object() || !j.contains(key)) throw UserError("missing field " + path + "." + key);
  return j.at(key);
}

template <class T>
T get(const json& j, const std::string& key, const std::string& path) {
  const auto& v = field(j, key, path);
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    throw UserError("field " + path + "." + key + " has the wrong type");
  }
}

template <class T>
T get_or(const json& j, const std::string& key, const std::string& path, T fallback) {
  return j.contains(key) ? get<T>(j, key, path) : fallback;
}

}  // namespace detail

// ---------------------------------------------------------------- model files

struct Model {
  NetworkDesc net;
  WeightStore weights;
};

inline LayerDesc parse_layer(const json& j, const std::string& path) {
  LayerDesc l;
  l.kind = layer_kind_from_string(detail::get<std::string>(j, "kind", path));
  l.in_channels = detail::get_or<int>(j, "in_channels", path, 0);
  l.out_channels = detail::get_or<int>(j, "out_channels", path, 0);
  l.kernel_h = detail::get_or<int>(j, "kernel_h", path, 1);
  l.kernel_w = detail::get_or<int>(j, "kernel_w", path, 1);
  l.stride = detail::get_or<int>(j, "stride", path, 1);
  l.padding = detail::get_or<int>(j, "padding", path, 0);
  l.groups = detail::get_or<int>(j, "groups", path, 1);
  if (j.contains("weight_ref")) l.weight_ref = detail::get<std::string>(j, "weight_ref", path);
  if (j.contains("bias_ref")) l.bias_ref = detail::get<std::string>(j, "bias_ref", path);
  l.out_scale = detail::get_or<double>(j, "out_scale", path, 1.0);
  return l;
}

inline json layer_json(const LayerDesc& l) {
  json j;
  j["kind"] = to_string(l.kind);
  const bool weighted = has_weights(l.kind);
  if (weighted) {
    j["in_channels"] = l.in_channels;
    j["out_channels"] = l.out_channels;
  }
  if (l.kind != LayerKind::relu && l.kind != LayerKind::fully_connected) {
    j["kernel_h"] = l.kernel_h;
    j["kernel_w"] = l.kernel_w;
    j["stride"] = l.stride;
    j["padding"] = l.padding;
  }
  if (l.kind == LayerKind::conv2d && l.groups != 1) j["groups"] = l.groups;
  if (l.weight_ref) j["weight_ref"] = *l.weight_ref;
  if (l.bias_ref) j["bias_ref"] = *l.bias_ref;
  if (weighted) j["out_scale"] = l.out_scale;
  return j;
}

/// Loads and validates a model JSON plus its little-endian weight blob.
inline Model load_model(const std::string& json_path, const std::string& blob_path) {
  const json doc = parse_json(read_text(json_path), json_path);
  const auto blob = read_bytes(blob_path);
  Model m;
  m.net.name = detail::get<std::string>(doc, "name", "$");
  const auto shape = detail::get<std::vector<int>>(doc, "input_shape", "$");
  if (shape.size() != 3) throw UserError("field $.input_shape must have 3 extents");
  m.net.input_shape = {shape[0], shape[1], shape[2]};
  const auto& layers = detail::field(doc, "layers", "$");
  if (!layers.is_array()) throw UserError("field $.layers must be an array");
  for (std::size_t i = 0; i < layers.size(); ++i)
    m.net.layers.push_back(parse_layer(layers[i], "$.layers[" + std::to_string(i) + "]"));

  const auto& tensors = detail::field(doc, "tensors", "$");
  if (!tensors.is_array()) throw UserError("field $.tensors must be an array");
  std::vector<std::pair<int64_t, int64_t>> spans;
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    const std::string path = "$.tensors[" + std::to_string(i) + "]";
    const auto& t = tensors[i];
    const auto id = detail::get<std::string>(t, "id", path);
    const auto dtype = detail::get_or<std::string>(t, "dtype", path, "int8");
    const auto tshape = detail::get<std::vector<int>>(t, "shape", path);
    const double scale = detail::get<double>(t, "scale", path);
    const int zp = detail::get_or<int>(t, "zero_point", path, 0);
    const auto offset = detail::get<int64_t>(t, "offset", path);
    const auto length = detail::get<int64_t>(t, "length", path);
    const int64_t elem = dtype == "int8" ? 1 : dtype == "int32" ? 4 : 0;
    if (!elem) throw UserError("tensor '" + id + "' (" + path + ") has unknown dtype '" + dtype + "'");
    const auto n = static_cast<int64_t>(shape_elements(tshape));
    if (length != n * elem)
      throw UserError("tensor '" + id + "' length " + std::to_string(length) + " does not match shape (" +
                      std::to_string(n * elem) + " bytes)");
    if (offset < 0 || offset + length > static_cast<int64_t>(blob.size()))
      throw UserError("tensor '" + id + "' [" + std::to_string(offset) + ", " + std::to_string(offset + length) +
                      ") lies outside blob of " + std::to_string(blob.size()) + " bytes");
    if (m.weights.weights.count(id) || m.weights.biases.count(id))
      throw UserError("duplicate tensor id '" + id + "'");
    spans.push_back({offset, offset + length});
    const uint8_t* p = blob.data() + offset;
    if (dtype == "int8") {
      QuantTensor q{tshape, std::vector<int8_t>(p, p + length), QuantParams{scale, zp, 8}};
      validate(q);
      m.weights.weights.emplace(id, std::move(q));
    } else {
      BiasTensor b{tshape, std::vector<int32_t>(n), scale};
      for (int64_t k = 0; k < n; ++k)
        b.data[k] = static_cast<int32_t>(uint32_t{p[4 * k]} | uint32_t{p[4 * k + 1]} << 8 |
                                         uint32_t{p[4 * k + 2]} << 16 | uint32_t{p[4 * k + 3]} << 24);
      m.weights.biases.emplace(id, std::move(b));
    }
    m.weights.order.push_back(id);
  }
  std::sort(spans.begin(), spans.end());
  for (std::size_t i = 1; i < spans.size(); ++i)
    if (spans[i].first < spans[i - 1].second) throw UserError("overlapping tensor ranges in '" + blob_path + "'");

  for (std::size_t i = 0; i < m.net.layers.size(); ++i) {
    const auto& l = m.net.layers[i];
    if (l.weight_ref && !m.weights.weights.count(*l.weight_ref))
      throw UserError("$.layers[" + std::to_string(i) + "].weight_ref '" + *l.weight_ref +
                      "' does not resolve to an int8 tensor");
    if (l.bias_ref && !m.weights.biases.count(*l.bias_ref))
      throw UserError("$.layers[" + std::to_string(i) + "].bias_ref '" + *l.bias_ref +
                      "' does not resolve to an int32 tensor");
  }
  validate_network(m.net, m.weights);
  return m;
}

/// Writes tensors back to back in `order` (then any unlisted ids, sorted).
inline void save_model(const Model& m, const std::string& json_path, const std::string& blob_path) {
  std::vector<std::string> ids = m.weights.order;
  for (const auto& [id, _] : m.weights.weights)
    if (std::find(ids.begin(), ids.end(), id) == ids.end()) ids.push_back(id);
  for (const auto& [id, _] : m.weights.biases)
    if (std::find(ids.begin(), ids.end(), id) == ids.end()) ids.push_back(id);

  std::string blob;
  json tensors = json::array();
  for (const auto& id : ids) {
    json t;
    t["id"] = id;
    if (auto it = m.weights.weights.find(id); it != m.weights.weights.end()) {
      t["dtype"] = "int8";
      t["shape"] = it->second.shape;
      t["scale"] = it->second.params.scale;
      t["zero_point"] = it->second.params.zero_point;
      t["offset"] = blob.size();
      t["length"] = it->second.data.size();
      blob.append(reinterpret_cast<const char*>(it->second.data.data()), it->second.data.size());
    } else {
      const auto& b = m.weights.biases.at(id);
      t["dtype"] = "int32";
      t["shape"] = b.shape;
      t["scale"] = b.scale;
      t["zero_point"] = 0;
      t["offset"] = blob.size();
      t["length"] = b.data.size() * 4;
      for (int32_t v : b.data) {
        const auto u = static_cast<uint32_t>(v);
        for (int k = 0; k < 4; ++k) blob.push_back(static_cast<char>((u >> (8 * k)) & 0xff));
      }
    }
    tensors.push_back(std::move(t));
  }
  json doc;
  doc["name"] = m.net.name;
  doc["input_shape"] = {m.net.input_shape.c, m.net.input_shape.h, m.net.input_shape.w};
  doc["layers"] = json::array();
  for (const auto& l : m.net.layers) doc["layers"].push_back(layer_json(l));
  doc["tensors"] = std::move(tensors);
  write_text(json_path, doc.dump(1) + "\n");
  write_text(blob_path, blob);
}

// ---------------------------------------------------------------- tensor files

/// A batch of activations: shape [N, C, H, W] (or [C, H, W] for one image) plus
/// optional class labels.
struct TensorFile {
  QuantTensor tensor;
  std::vector<int> labels;

  /// Splits the leading batch extent into single [C, H, W] tensors.
  std::vector<QuantTensor> images() const {
    if (tensor.shape.size() == 3) return {tensor};
    if (tensor.shape.size() != 4) throw UserError("tensor file must be 3-D or 4-D");
    const std::vector<int> one(tensor.shape.begin() + 1, tensor.shape.end());
    const std::size_t n = shape_elements(one);
    std::vector<QuantTensor> out;
    for (int b = 0; b < tensor.shape[0]; ++b)
      out.push_back({one, {tensor.data.begin() + b * n, tensor.data.begin() + (b + 1) * n}, tensor.params});
    return out;
  }
};

inline TensorFile load_tensor_file(const std::string& path) {
  const json doc = parse_json(read_text(path), path);
  TensorFile f;
  f.tensor.shape = detail::get<std::vector<int>>(doc, "shape", "$");
  f.tensor.params.scale = detail::get<double>(doc, "scale", "$");
  f.tensor.params.zero_point = detail::get_or<int>(doc, "zero_point", "$", 0);
  for (int v : detail::get<std::vector<int>>(doc, "data", "$")) {
    if (v < -128 || v > 127) throw UserError(path + ": tensor element outside [-128, 127]");
    f.tensor.data.push_back(static_cast<int8_t>(v));
  }
  try {
    validate(f.tensor);
  } catch (const UserError& e) {
    throw UserError(path + ": " + e.what());
  }
  if (doc.contains("labels")) f.labels = detail::get<std::vector<int>>(doc, "labels", "$");
  return f;
}

/// Stacks equally shaped tensors into one [N, ...] document.
inline std::string tensor_file_text(std::span<const QuantTensor> ts) {
  if (ts.empty()) throw UserError("no tensors to write");
  std::ostringstream o;
  o << "{\"shape\":[" << ts.size();
  for (int e : ts[0].shape) o << ',' << e;
  o << "],\"scale\":" << format_double(ts[0].params.scale) << ",\"zero_point\":" << ts[0].params.zero_point
    << ",\"data\":[";
  bool first = true;
  for (const auto& t : ts)
    for (int8_t v : t.data) {
      o << (first ? "" : ",") << int{v};
      first = false;
    }
  o << "]}\n";
  return o.str();
}

// ---------------------------------------------------------------- thresholds

/// One voltage per line, ascending. Blank lines and '#' comments are skipped.
inline std::vector<double> load_thresholds(const std::string& path) {
  std::istringstream in(read_text(path));
  std::vector<double> t;
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos || line[b] == '#') continue;
    const auto e = line.find_last_not_of(" \t\r");
    double v = 0;
    const char* first = line.data() + b;
    const char* last = line.data() + e + 1;
    auto [p, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || p != last) throw UserError(path + ":" + std::to_string(n) + ": not a voltage");
    if (!t.empty() && !(v > t.back())) throw UserError(path + ":" + std::to_string(n) + ": thresholds must ascend");
    t.push_back(v);
  }
  return t;
}

inline std::string thresholds_text(std::span<const double> t) {
  std::string s;
  for (double v : t) s += format_double(v) + "\n";
  return s;
}

// ---------------------------------------------------------------- calibration

inline const std::map<std::string, double CostParams::*>& cost_fields() {
  static const std::map<std::string, double CostParams::*> f{
      {"e_mac_cycle", &CostParams::e_mac_cycle},         {"e_tdc_conv", &CostParams::e_tdc_conv},
      {"e_write_bit", &CostParams::e_write_bit},         {"recycle_fraction", &CostParams::recycle_fraction},
      {"e_offmacro_byte", &CostParams::e_offmacro_byte}, {"p_leak", &CostParams::p_leak},
      {"p_static", &CostParams::p_static},               {"f_clk", &CostParams::f_clk},
      {"area_mm2_per_kb", &CostParams::area_mm2_per_kb}, {"c_wbl_per_line", &CostParams::c_wbl_per_line},
  };
  return f;
}

/// key = value lines; '#' starts a comment. Every field must be present exactly once.
inline CostParams parse_cost_params(const std::string& text, const std::string& where) {
  CostParams p;
  std::map<std::string, int> seen;
  std::istringstream in(text);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw UserError(where + ":" + std::to_string(n) + ": expected key = value");
    auto trim = [](std::string s) {
      const auto x = s.find_first_not_of(" \t\r"), y = s.find_last_not_of(" \t\r");
      return x == std::string::npos ? std::string{} : s.substr(x, y - x + 1);
    };
    const std::string key = trim(line.substr(0, eq)), val = trim(line.substr(eq + 1));
    auto it = cost_fields().find(key);
    if (it == cost_fields().end()) throw UserError(where + ":" + std::to_string(n) + ": unknown key '" + key + "'");
    double v = 0;
    auto [p2, ec] = std::from_chars(val.data(), val.data() + val.size(), v);
    if (ec != std::errc{} || p2 != val.data() + val.size())
      throw UserError(where + ":" + std::to_string(n) + ": bad number for '" + key + "'");
    if (seen[key]++) throw UserError(where + ":" + std::to_string(n) + ": duplicate key '" + key + "'");
    p.*(it->second) = v;
  }
  for (const auto& [k, _] : cost_fields())
    if (!seen.count(k)) throw UserError(where + ": missing key '" + k + "'");
  validate(p);
  return p;
}

inline CostParams load_cost_params(const std::string& path) { return parse_cost_params(read_text(path), path); }

inline std::string cost_params_text(const CostParams& p) {
  std::string s;
  for (const auto& [k, f] : cost_fields()) s += k + " = " + format_double(p.*f) + "\n";
  return s;
}

// ---------------------------------------------------------------- reports

enum class Format { csv, json };

inline Format format_from_string(const std::string& s) {
  if (s == "csv") return Format::csv;
  if (s == "json") return Format::json;
  throw UserError("unknown format '" + s + "'");
}

inline const char* kCsvHeader = "config_kb,banks,energy_j,latency_s,power_w,gops,tops_per_w";

inline std::string report_csv(std::span<const MetricsReport> rows) {
  std::string s = std::string(kCsvHeader) + "\n";
  for (const auto& r : rows)
    s += format_double(r.config_kb) + "," + std::to_string(r.banks) + "," + format_double(r.energy_j) + "," +
         format_double(r.latency_s) + "," + format_double(r.power_w) + "," + format_double(r.throughput_gops) +
         "," + format_double(r.efficiency_tops_per_w) + "\n";
  return s;
}

namespace detail {

/// Minimal writer for flat objects with fixed key order and 17-digit numbers.
class ObjectWriter {
 public:
  ObjectWriter& num(const std::string& k, double v) { return raw(k, format_double(v)); }
  ObjectWriter& integer(const std::string& k, int64_t v) { return raw(k, std::to_string(v)); }
  ObjectWriter& str(const std::string& k, const std::string& v) { return raw(k, json(v).dump()); }
  ObjectWriter& nums(const std::string& k, std::span<const double> v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_double(v[i]);
    return raw(k, s + "]");
  }
  ObjectWriter& ints(const std::string& k, std::span<const int> v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    return raw(k, s + "]");
  }
  ObjectWriter& raw(const std::string& k, const std::string& v) {
    body_ += (body_.empty() ? "" : ",") + json(k).dump() + ":" + v;
    return *this;
  }
  std::string done() const { return "{" + body_ + "}"; }

 private:
  std::string body_;
};

}  // namespace detail

inline std::string report_json(const MetricsReport& r) {
  const auto& b = r.breakdown;
  const std::string breakdown = detail::ObjectWriter{}
                                    .num("compute_j", b.compute_j)
                                    .num("tdc_j", b.tdc_j)
                                    .num("write_j", b.write_j)
                                    .num("offmacro_j", b.offmacro_j)
                                    .num("static_j", b.static_j)
                                    .num("leak_j", b.leak_j)
                                    .done();
  return detail::ObjectWriter{}
      .num("config_kb", r.config_kb)
      .integer("banks", r.banks)
      .integer("cycles", r.cycles)
      .integer("macs", r.macs)
      .num("energy_j", r.energy_j)
      .num("latency_s", r.latency_s)
      .num("power_w", r.power_w)
      .num("gops", r.throughput_gops)
      .num("tops_per_w", r.efficiency_tops_per_w)
      .num("tops_per_mm2", r.compute_density_tops_per_mm2)
      .raw("breakdown", breakdown)
      .done();
}

inline std::string table_json(std::span<const MetricsReport> rows) {
  std::string s = "{\"rows\":[";
  for (std::size_t i = 0; i < rows.size(); ++i) s += (i ? ",\n" : "\n") + report_json(rows[i]);
  return s + "\n]}\n";
}

inline std::string table_text(std::span<const MetricsReport> rows, Format f) {
  return f == Format::csv ? report_csv(rows) : table_json(rows);
}

inline void save_report(std::span<const MetricsReport> rows, const std::string& path, Format f) {
  write_text(path, table_text(rows, f));
}

inline MetricsReport report_from_json(const json& j) {
  MetricsReport r;
  const std::string p = "$.rows[]";
  r.config_kb = detail::get<double>(j, "config_kb", p);
  r.banks = detail::get<int>(j, "banks", p);
  r.cycles = detail::get<int64_t>(j, "cycles", p);
  r.macs = detail::get<int64_t>(j, "macs", p);
  r.energy_j = detail::get<double>(j, "energy_j", p);
  r.latency_s = detail::get<double>(j, "latency_s", p);
  r.power_w = detail::get<double>(j, "power_w", p);
  r.throughput_gops = detail::get<double>(j, "gops", p);
  r.efficiency_tops_per_w = detail::get<double>(j, "tops_per_w", p);
  r.compute_density_tops_per_mm2 = detail::get<double>(j, "tops_per_mm2", p);
  const auto& b = detail::field(j, "breakdown", p);
  r.breakdown = {detail::get<double>(b, "compute_j", p), detail::get<double>(b, "tdc_j", p),
                 detail::get<double>(b, "write_j", p),   detail::get<double>(b, "offmacro_j", p),
                 detail::get<double>(b, "static_j", p),  detail::get<double>(b, "leak_j", p)};
  return r;
}

inline std::vector<MetricsReport> load_table_json(const std::string& text) {
  const json doc = parse_json(text, "report");
  std::vector<MetricsReport> rows;
  for (const auto& r : detail::field(doc, "rows", "$")) rows.push_back(report_from_json(r));
  return rows;
}

// ---------------------------------------------------------------- plans, analytics

inline std::string plan_json(const MappingPlan& p) {
  std::string entries = "[";
  for (std::size_t i = 0; i < p.entries.size(); ++i) {
    const auto& e = p.entries[i];
    entries += (i ? ",\n" : "\n") + detail::ObjectWriter{}
                                        .integer("layer", static_cast<int64_t>(e.layer_index))
                                        .str("kind", to_string(e.kind))
                                        .str("mode", to_string(e.mode))
                                        .integer("banks_used", e.banks_used)
                                        .integer("kernels_per_bank", e.kernels_per_bank)
                                        .integer("ifm_tiles_parallel", e.ifm_tiles_parallel)
                                        .integer("kernel_tiles", e.kernel_tiles)
                                        .integer("row_tiles", e.row_tiles)
                                        .integer("passes", e.passes)
                                        .integer("compute_cycles", e.compute_cycles)
                                        .integer("writeback_cycles", e.writeback_cycles)
                                        .integer("peripheral_cycles", e.peripheral_cycles)
                                        .integer("weight_load_passes", e.weight_load_passes)
                                        .integer("macs", e.macs)
                                        .integer("mac_groups", e.mac_groups)
                                        .integer("conversions", e.conversions)
                                        .done();
  }
  entries += "\n]";
  return detail::ObjectWriter{}
             .integer("banks", p.banks)
             .integer("rows", p.rows)
             .integer("cols", p.cols)
             .integer("capacity_bytes", p.capacity_bytes)
             .str("encoding", to_string(p.encoding))
             .integer("total_cycles", p.total_cycles())
             .raw("entries", entries)
             .done() +
         "\n";
}

inline std::string analytics_json(const tdc::ConverterAnalytics& a, const tdc::TdcModel& m) {
  std::vector<int> dnl_codes, inl_codes;
  for (std::size_t i = 0; i < a.dnl.size(); ++i) dnl_codes.push_back(tdc::dnl_code(i, m));
  for (std::size_t i = 0; i < a.inl.size(); ++i) inl_codes.push_back(tdc::inl_code(i, m));
  return detail::ObjectWriter{}
             .nums("dnl", a.dnl)
             .nums("inl", a.inl)
             .ints("dnl_code", dnl_codes)
             .ints("inl_code", inl_codes)
             .num("sndr_db", a.sndr_db)
             .num("sfdr_db", a.sfdr_db)
             .num("enob", a.enob)
             .num("fom_fj_per_step", a.fom_fj_per_step)
             .num("power_w", a.power_w)
             .num("fs_hz", a.fs_hz)
             .done() +
         "\n";
}

inline std::string monte_carlo_json(const tdc::MonteCarloResult& r, uint64_t seed) {
  auto stats = [](const tdc::CornerStats& s) {
    return detail::ObjectWriter{}
        .num("power_mean_w", s.power_mean_w)
        .num("power_sigma_w", s.power_sigma_w)
        .num("delay_mean_s", s.delay_mean_s)
        .num("delay_sigma_s", s.delay_sigma_s)
        .done();
  };
  return detail::ObjectWriter{}
             .num("vdd", r.corner.vdd)
             .num("temp_c", r.corner.temp_c)
             .integer("samples", static_cast<int64_t>(r.power_samples.size()))
             .integer("seed", static_cast<int64_t>(seed))
             .raw("configured", stats(r.configured))
             .raw("sample", stats(r.sample))
             .nums("power_samples", r.power_samples)
             .nums("delay_samples", r.delay_samples)
             .done() +
         "\n";
}

}  // namespace tdccim::io
