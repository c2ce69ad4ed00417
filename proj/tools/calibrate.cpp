// Fits the anchor-dependent cost constants and writes the frozen calibration.
//
//   tdccim_calibrate <base.cfg> <out.cfg> [anchor_report.json]
//
// base.cfg carries the hand-set activity constants; p_static and
// area_mm2_per_kb are overwritten by the fit.

#include <cstdio>
#include <exception>

#include "tdccim/io.hpp"
#include "tdccim/metrics.hpp"

int main(int argc, char** argv) {
  using namespace tdccim;
  if (argc < 3 || argc > 4) {
    std::fprintf(stderr, "usage: %s <base.cfg> <out.cfg> [anchor_report.json]\n", argv[0]);
    return 1;
  }
  try {
    const CostParams fitted = calibrate(io::load_cost_params(argv[1]));
    io::write_text(argv[2], "# generated by tdccim_calibrate from " + std::string(argv[1]) + "\n" +
                                io::cost_params_text(fitted));
    if (argc == 4) {
      const MacroConfig c = macro_for_kb(Anchor{}.macro_kb);
      const auto layers = extract_layer_info(full_utilization_workload(c));
      const MetricsReport r = evaluate(layers, c, io::load_cost_params(argv[2]));
      io::save_report(std::span(&r, 1), argv[3], io::Format::json);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
