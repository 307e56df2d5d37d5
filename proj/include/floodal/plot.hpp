#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "floodal/experiment.hpp"

namespace floodal {

/// Fixed per-function colors so figures stay comparable across runs.
const std::string& acquisition_color(const std::string& function_name);

struct PlotSpec {
  std::string kind;  // mdf_bpr_density | fpr_bpr_density | f1_curve |
                     // sd_curve | correlation_box
  std::vector<std::string> inputs;  // report.json paths
  std::string output;               // target .svg
  std::vector<double> levels;       // iso-proportion levels, default 19
  std::string x_label, y_label;     // defaults depend on kind
  std::string population = "pool";  // density kinds: pool | selected
  int iteration = 0;                // density kinds: which iteration
  int grid_size = 128;
  std::optional<double> baseline;   // extra dashed line for f1/sd curves

  void validate() const;
};

PlotSpec plotspec_from_json(const nlohmann::ordered_json& j);

/// Renders the spec to SVG. Degenerate inputs (fewer than two usable points
/// for a density) still emit a plot, with a warning annotation.
void render_plot(const PlotSpec& spec);

}  // namespace floodal
