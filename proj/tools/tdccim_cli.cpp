// tdccim: inference, size sweeps, macro selection and TDC analytics.
//
// Exit codes: 0 success, 1 bad input or flags, 2 internal invariant violation.

#include <cstdint>
#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tdccim/tdccim.hpp"

namespace {

using namespace tdccim;

struct Globals {
  uint64_t seed = 42;
  std::string calibration = std::string(TDCCIM_DATA_DIR) + "/calibration/default.cfg";
  std::string format = "json";
  bool verbose = false;
};

void emit(const std::string& text, const std::string& path) {
  if (path.empty())
    std::cout << text;
  else
    io::write_text(path, text);
}

void verbose_config(const Globals& g, const MacroConfig& c, const char* cmd) {
  if (!g.verbose) return;
  std::cerr << "[" << cmd << "] seed=" << g.seed << " calibration=" << g.calibration << " format=" << g.format
            << " macro_kb=" << c.capacity_kb() << " banks=" << c.banks << " rows=" << c.rows << " cols=" << c.cols
            << " active_rows=" << c.active_rows << " tdc_bits=" << c.tdc.resolution_bits
            << " encoding=" << to_string(c.input_encoding) << " clock_hz=" << c.clock_hz << "\n";
}

void verbose_costs(const Globals& g, const CostParams& p) {
  if (g.verbose) std::cerr << io::cost_params_text(p);
}

std::vector<MacroConfig> configs_for(const std::vector<int>& sizes) {
  if (sizes.empty()) throw UserError("--sizes needs at least one size");
  std::vector<MacroConfig> out;
  for (int kb : sizes) out.push_back(macro_for_kb(kb));
  return out;
}

struct InferArgs {
  std::string model, blob, input, out, emit_plan;
  std::optional<int> macro_kb, banks;
  int tdc_bits = 4;
  std::string encoding = "pulse_count";
  bool ideal = false;
  bool compare = false;
};

int cmd_infer(const Globals& g, const InferArgs& a) {
  const auto model = io::load_model(a.model, a.blob);
  const auto file = io::load_tensor_file(a.input);
  const auto images = file.images();

  MacroConfig c = macro_for_kb(a.macro_kb.value_or(a.banks ? *a.banks * 8 : 16));
  if (a.banks) {
    if (*a.banks < 1) throw UserError("--banks must be positive");
    if (a.macro_kb && *a.macro_kb != *a.banks * 8)
      throw UserError("--macro-kb " + std::to_string(*a.macro_kb) + " disagrees with --banks " +
                      std::to_string(*a.banks) + " (8 KB per bank)");
    c.banks = *a.banks;
  }
  c.input_encoding = encoding_from_string(a.encoding);
  if (a.tdc_bits < 1 || a.tdc_bits > 16) throw UserError("--tdc-bits must be in [1, 16]");
  c = a.ideal ? with_ideal_tdc(c) : with_tdc_bits(c, a.tdc_bits);
  verbose_config(g, c, "infer");

  const MappingPlan plan = map_network(model.net, c);
  if (!a.emit_plan.empty()) io::write_text(a.emit_plan, io::plan_json(plan));
  const NetworkRun run = run_network(model.net, model.weights, images, c, plan);
  if (!a.out.empty()) io::write_text(a.out, io::tensor_file_text(run.outputs));

  std::vector<int> pred, ref_pred;
  for (const auto& o : run.outputs) pred.push_back(argmax(o));
  if (a.compare)
    for (const auto& im : images) ref_pred.push_back(argmax(infer_int8_reference(model.net, model.weights, im)));

  const auto& oc = run.op_counts;
  if (g.format == "csv") {
    std::ostringstream o;
    o << "image,prediction" << (file.labels.empty() ? "" : ",label") << (a.compare ? ",reference" : "") << "\n";
    for (std::size_t i = 0; i < pred.size(); ++i) {
      o << i << "," << pred[i];
      if (!file.labels.empty()) o << "," << file.labels.at(i);
      if (a.compare) o << "," << ref_pred[i];
      o << "\n";
    }
    std::cout << o.str();
    return 0;
  }
  const std::string counts = io::detail::ObjectWriter{}
                                 .integer("macs", oc.macs)
                                 .integer("mac_groups", oc.mac_groups)
                                 .integer("group_cycles", oc.group_cycles)
                                 .integer("conversions", oc.conversions)
                                 .integer("saturated_conversions", oc.saturated_conversions)
                                 .integer("writebacks", oc.writebacks)
                                 .integer("bits_flipped", oc.bits_flipped)
                                 .integer("scheduled_cycles", plan.total_cycles())
                                 .done();
  io::detail::ObjectWriter w;
  w.str("model", model.net.name)
      .integer("images", static_cast<int64_t>(images.size()))
      .num("macro_kb", c.capacity_kb())
      .integer("banks", c.banks)
      .integer("tdc_bits", c.tdc.resolution_bits)
      .str("encoding", to_string(c.input_encoding))
      .raw("op_counts", counts)
      .num("saturation_rate", run.saturation_rate)
      .ints("predictions", pred);
  if (!file.labels.empty()) {
    int correct = 0;
    for (std::size_t i = 0; i < pred.size() && i < file.labels.size(); ++i) correct += pred[i] == file.labels[i];
    w.integer("correct", correct);
  }
  if (a.compare) {
    int agree = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) agree += pred[i] == ref_pred[i];
    w.ints("reference_predictions", ref_pred).integer("reference_agreement", agree);
  }
  std::cout << w.done() << "\n";
  return 0;
}

struct TableArgs {
  std::string model, blob, out, emit_plan;
  std::vector<int> sizes{8, 16, 24, 32, 64, 96, 128, 192, 256};
};

int cmd_sweep(const Globals& g, const TableArgs& a) {
  const auto model = io::load_model(a.model, a.blob);
  const CostParams p = io::load_cost_params(g.calibration);
  verbose_costs(g, p);
  const auto layers = extract_layer_info(model.net, model.weights);
  std::vector<MetricsReport> rows;
  std::string plans;
  for (const auto& c : configs_for(a.sizes)) {
    verbose_config(g, c, "sweep");
    const auto plan = map_network(layers, c);
    if (!a.emit_plan.empty()) plans += io::plan_json(plan);
    rows.push_back(evaluate(plan, p));
  }
  if (!a.emit_plan.empty()) io::write_text(a.emit_plan, plans);
  emit(io::table_text(rows, io::format_from_string(g.format)), a.out);
  return 0;
}

int cmd_select(const Globals& g, const TableArgs& a) {
  const auto model = io::load_model(a.model, a.blob);
  const CostParams p = io::load_cost_params(g.calibration);
  verbose_costs(g, p);
  const auto layers = extract_layer_info(model.net, model.weights);
  auto candidates = configs_for(a.sizes);
  for (auto& c : candidates) c.clock_hz = p.f_clk;
  const SelectionResult s = select_macro(layers, candidates, p);
  for (const auto& d : s.dropped) std::cerr << "dropped " << d << "\n";
  const MacroConfig& best = candidates[s.best];
  verbose_config(g, best, "select");
  const double inductor = calculate_inductor(best, p.c_wbl_per_line);
  const auto f = io::format_from_string(g.format);
  if (!a.out.empty()) io::save_report(s.table, a.out, f);
  if (f == io::Format::csv) {
    std::cout << "best_config_kb,banks,inductor_h\n"
              << io::format_double(best.capacity_kb()) << "," << best.banks << "," << io::format_double(inductor)
              << "\n\n"
              << io::report_csv(s.table);
  } else {
    const std::string best_obj = io::detail::ObjectWriter{}
                                     .num("config_kb", best.capacity_kb())
                                     .integer("banks", best.banks)
                                     .num("inductor_h", inductor)
                                     .done();
    std::cout << "{\"best\":" << best_obj << ",\n\"table\":" << io::table_json(s.table) << "}\n";
  }
  return 0;
}

struct TdcArgs {
  bool analyze = false, montecarlo = false;
  std::string corner = "1.0,27";
  int samples = 2000;
  std::string thresholds;
};

int cmd_tdc(const Globals& g, const TdcArgs& a) {
  if (a.analyze == a.montecarlo) throw UserError("tdc: give exactly one of --analyze or --montecarlo");
  if (a.analyze) {
    tdc::TdcModel m = tdc::make_uniform(4);
    if (!a.thresholds.empty()) {
      m.thresholds = io::load_thresholds(a.thresholds);
      tdc::validate(m);
    }
    std::cout << io::analytics_json(tdc::analyze(m), m);
    return 0;
  }
  tdc::Corner c;
  char comma = 0;
  std::istringstream in(a.corner);
  if (!(in >> c.vdd >> comma >> c.temp_c) || comma != ',' || !(in >> std::ws).eof())
    throw UserError("--corner expects V,T (for example 1.0,27)");
  std::cout << io::monte_carlo_json(tdc::monte_carlo_pvt(c, a.samples, g.seed), g.seed);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"TDC compute-in-memory macro simulator"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "Seed for all randomness")->capture_default_str();
  app.add_option("--calibration", g.calibration, "Cost parameter file (key = value)")->capture_default_str();
  app.add_option("--format", g.format, "Output format")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
  app.add_flag("--verbose", g.verbose, "Print the effective configuration to stderr");

  InferArgs ia;
  auto* infer = app.add_subcommand("infer", "Run a model through the macro pipeline");
  infer->add_option("--model", ia.model, "Model JSON")->required();
  infer->add_option("--blob", ia.blob, "Weight blob")->required();
  infer->add_option("--input", ia.input, "Input tensor file")->required();
  infer->add_option("--macro-kb", ia.macro_kb, "Macro size in KB (default 16)");
  infer->add_option("--banks", ia.banks, "Number of 8 KB banks");
  infer->add_option("--tdc-bits", ia.tdc_bits, "TDC resolution")->capture_default_str();
  infer->add_option("--encoding", ia.encoding, "Input encoding")
      ->check(CLI::IsMember({"pulse_count", "bit_serial"}))
      ->capture_default_str();
  infer->add_flag("--ideal-tdc", ia.ideal, "Use a TDC wide enough to be exact");
  infer->add_option("--out", ia.out, "Write the output tensors here");
  infer->add_option("--emit-plan", ia.emit_plan, "Write the mapping plan JSON here");
  infer->add_flag("--compare-reference", ia.compare, "Also run the integer reference and count agreement");

  TableArgs sa, sel;
  auto* sweep = app.add_subcommand("sweep", "Metrics for every macro size");
  auto* select = app.add_subcommand("select", "Pick the minimum-energy macro size");
  for (auto [cmd, args] : {std::pair{sweep, &sa}, std::pair{select, &sel}}) {
    cmd->add_option("--model", args->model, "Model JSON")->required();
    cmd->add_option("--blob", args->blob, "Weight blob")->required();
    cmd->add_option("--sizes", args->sizes, "Macro sizes in KB")->delimiter(',')->capture_default_str();
    cmd->add_option("--out", args->out, "Write the metrics table here");
  }
  sweep->add_option("--emit-plan", sa.emit_plan, "Write the mapping plans here");

  TdcArgs ta;
  auto* tdc = app.add_subcommand("tdc", "Converter analytics and Monte Carlo");
  tdc->add_flag("--analyze", ta.analyze, "DNL/INL/FoM of a threshold table");
  tdc->add_flag("--montecarlo", ta.montecarlo, "Monte Carlo PVT samples");
  tdc->add_option("--corner", ta.corner, "Corner as V,T")->capture_default_str();
  tdc->add_option("--samples", ta.samples, "Monte Carlo sample count")->capture_default_str();
  tdc->add_option("--thresholds", ta.thresholds, "Threshold table (one voltage per line)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*infer) return cmd_infer(g, ia);
    if (*sweep) return cmd_sweep(g, sa);
    if (*select) return cmd_select(g, sel);
    if (*tdc) return cmd_tdc(g, ta);
  } catch (const tdccim::InvariantError& e) {
    std::cerr << "invariant violation: " << e.what() << "\n";
    return 2;
  } catch (const tdccim::UserError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
