#include "floodal/plot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include "floodal/csv.hpp"
#include "floodal/errors.hpp"
#include "floodal/svg.hpp"

namespace floodal {

using json = nlohmann::ordered_json;

const std::string& acquisition_color(const std::string& function_name) {
  static const std::map<std::string, std::string> palette = {
      {"random", "#444444"},  {"kmeans", "#2ca02c"}, {"entropy", "#ff7f0e"},
      {"margin", "#d62728"},  {"bald", "#1f77b4"}};
  static const std::string fallback = "#888888";
  auto it = palette.find(function_name);
  return it == palette.end() ? fallback : it->second;
}

namespace {

// 19 sampled viridis colors, one per iso-proportion level; contours of the
// same level share a color.
const char* kLevelColors[19] = {
    "#440154", "#481467", "#482576", "#453781", "#404688", "#39558c",
    "#33638d", "#2d708e", "#287d8e", "#238a8d", "#1f968b", "#20a386",
    "#29af7f", "#3dbc74", "#56c667", "#75d054", "#95d840", "#bade28",
    "#dde318"};

std::vector<std::pair<double, double>> density_points(const PlotSpec& spec,
                                                      bool use_fpr) {
  std::vector<std::pair<double, double>> points;
  for (const auto& input : spec.inputs) {
    const std::filesystem::path report_path(input);
    if (spec.population == "selected") {
      const RunReport report = load_report(report_path);
      for (const auto& run : report.runs) {
        if (run.failed) continue;
        for (const auto& rec : run.records) {
          if (rec.iteration != spec.iteration) continue;
          for (const auto& ix : rec.selected_indices) {
            if (!use_fpr && !ix.mdf.has_value()) continue;
            points.emplace_back(use_fpr ? ix.fpr : *ix.mdf, ix.bpr);
          }
        }
      }
    } else {
      // Pool population: the indices.csv snapshot next to the report,
      // deduplicated by tile id across runs.
      const auto rows =
          read_csv((report_path.parent_path() / "indices.csv").string());
      std::set<std::string> seen;
      for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& row = rows[i];
        if (row.size() < 9) continue;
        if (std::stoi(row[1]) != spec.iteration) continue;
        if (!seen.insert(row[2]).second) continue;
        const std::string& mdf = row[4];
        if (!use_fpr && mdf.empty()) continue;
        points.emplace_back(use_fpr ? std::stod(row[5]) : std::stod(mdf),
                            std::stod(row[3]));
      }
    }
  }
  return points;
}

void render_density(const PlotSpec& spec, bool use_fpr) {
  const auto points = density_points(spec, use_fpr);
  SvgDocument svg(640, 480);
  ChartArea area;

  const std::string x_label =
      !spec.x_label.empty() ? spec.x_label : (use_fpr ? "FPR" : "MDF");
  const std::string y_label = !spec.y_label.empty() ? spec.y_label : "BPR";
  const std::string title =
      (use_fpr ? "FPR-BPR density (" : "MDF-BPR density (") + spec.population +
      ", iteration " + std::to_string(spec.iteration) + ")";

  if (points.size() < 2) {
    area.x_min = 0.0;
    area.x_max = 1.0;
    area.y_min = 0.0;
    area.y_max = 1.0;
    draw_axes(svg, area, x_label, y_label, title);
    svg.open_group("warning");
    svg.text(320, 240, "warning: fewer than 2 points; no density estimated",
             14, "middle", "#b00000");
    svg.close_group();
    for (const auto& [x, y] : points)
      svg.circle(area.sx(x), area.sy(y), 3.0, "#d62728");
    svg.write(spec.output);
    return;
  }

  const DensityField field = kde2d(points, spec.grid_size);
  const auto levels = spec.levels.empty()
                          ? default_iso_levels()
                          : spec.levels;
  const auto thresholds = iso_proportion_levels(field, levels);

  // density field sidecar: ranges, bandwidths, grid
  {
    json dj;
    dj["grid_size"] = field.grid_size;
    dj["x_range"] = {field.x0, field.x1};
    dj["y_range"] = {field.y0, field.y1};
    dj["bandwidths"] = {field.bandwidth_x, field.bandwidth_y};
    dj["raw_mass"] = field.mass;
    dj["degenerate_bandwidth"] = field.degenerate_bandwidth;
    dj["levels"] = levels;
    dj["thresholds"] = thresholds;
    dj["grid"] = field.grid;
    std::filesystem::path sidecar(spec.output);
    sidecar.replace_extension(".json");
    std::ofstream out(sidecar, std::ios::binary);
    if (!out) throw DataError("cannot write " + sidecar.string());
    out << dj.dump() << '\n';
  }

  area.x_min = field.x0;
  area.x_max = field.x1;
  area.y_min = field.y0;
  area.y_max = field.y1;
  draw_axes(svg, area, x_label, y_label, title);

  for (std::size_t li = 0; li < levels.size(); ++li) {
    char gid[32];
    std::snprintf(gid, sizeof(gid), "level-%.2f", levels[li]);
    svg.open_group(gid);
    const std::string color =
        kLevelColors[std::min<std::size_t>(li, 18)];
    for (const auto& poly : contour_polylines(field, thresholds[li])) {
      std::vector<std::pair<double, double>> px;
      px.reserve(poly.size());
      for (const auto& [x, y] : poly) px.emplace_back(area.sx(x), area.sy(y));
      svg.polyline(px, color, 1.2);
    }
    svg.close_group();
  }

  double mu_x = 0.0, mu_y = 0.0;
  for (const auto& [x, y] : points) {
    mu_x += x;
    mu_y += y;
  }
  mu_x /= static_cast<double>(points.size());
  mu_y /= static_cast<double>(points.size());
  svg.open_group("means");
  svg.circle(area.sx(mu_x), area.sy(mu_y), 4.0, "#d62728");
  char label[96];
  std::snprintf(label, sizeof(label), "mu_x=%.3f  mu_y=%.3f", mu_x, mu_y);
  svg.text(area.right - 8, area.top + 16, label, 12, "end");
  svg.close_group();
  svg.write(spec.output);
}

void render_curves(const PlotSpec& spec, bool sd_kind) {
  struct Arm {
    std::string name;
    std::vector<std::pair<double, double>> points;  // labeled_count, value
    std::optional<double> full_line;
  };
  std::vector<Arm> arms;
  for (const auto& input : spec.inputs) {
    const RunReport report = load_report(input);
    const ExperimentSummary summary = aggregate_runs(report);
    Arm arm;
    arm.name = to_string(report.config.acquisition);
    for (const auto& it : summary.iterations)
      arm.points.emplace_back(it.labeled_count,
                              sd_kind ? it.sdf1 : it.mf1);
    if (summary.full_mf1_sdf1.has_value() && !sd_kind)
      arm.full_line = summary.full_mf1_sdf1->first;
    arms.push_back(std::move(arm));
  }
  if (arms.empty()) throw DataError("plot: no readable reports");

  ChartArea area;
  area.x_min = 1e30;
  area.x_max = -1e30;
  area.y_min = 0.0;
  area.y_max = sd_kind ? 0.0 : 1.0;
  for (const auto& arm : arms)
    for (const auto& [x, y] : arm.points) {
      area.x_min = std::min(area.x_min, x);
      area.x_max = std::max(area.x_max, x);
      if (sd_kind) area.y_max = std::max(area.y_max, y * 1.2);
    }
  if (sd_kind && area.y_max <= 0.0) area.y_max = 0.1;
  if (area.x_max <= area.x_min) area.x_max = area.x_min + 1.0;

  SvgDocument svg(640, 480);
  draw_axes(svg, area, spec.x_label.empty() ? "labeled tiles" : spec.x_label,
            spec.y_label.empty() ? (sd_kind ? "sdF1" : "mF1") : spec.y_label,
            sd_kind ? "F1 standard deviation per iteration"
                    : "Mean F1 per iteration");

  for (const auto& arm : arms) {
    svg.open_group("arm-" + arm.name);
    const std::string& color = acquisition_color(arm.name);
    std::vector<std::pair<double, double>> px;
    for (const auto& [x, y] : arm.points)
      px.emplace_back(area.sx(x), area.sy(y));
    svg.polyline(px, color, 2.0);
    for (const auto& [x, y] : px) svg.circle(x, y, 3.0, color);
    svg.close_group();
  }
  if (!sd_kind) {
    for (const auto& arm : arms)
      if (arm.full_line.has_value()) {
        svg.open_group("full-baseline");
        const double y = area.sy(*arm.full_line);
        svg.line(area.left, y, area.right, y, "#1f77b4", 1.5, "6,4");
        svg.text(area.right - 4, y - 6, "full", 11, "end", "#1f77b4");
        svg.close_group();
        break;
      }
  }
  if (spec.baseline.has_value()) {
    svg.open_group("baseline");
    const double y = area.sy(*spec.baseline);
    svg.line(area.left, y, area.right, y, "#000000", 1.5, "6,4");
    svg.close_group();
  }
  // legend
  svg.open_group("legend");
  double ly = area.top + 10;
  for (const auto& arm : arms) {
    svg.line(area.left + 10, ly, area.left + 34, ly,
             acquisition_color(arm.name), 2.0);
    svg.text(area.left + 40, ly + 4, arm.name, 12);
    ly += 18;
  }
  svg.close_group();
  svg.write(spec.output);
}

void render_correlation_box(const PlotSpec& spec) {
  if (spec.inputs.empty()) throw DataError("plot: no report inputs");
  const RunReport report = load_report(spec.inputs.front());

  // rho values per (index, function, iteration) across runs
  const std::vector<std::string> functions = {"entropy", "margin", "bald"};
  const std::vector<std::string> indices = {"bpr", "mdf"};
  int n_iters = 0;
  for (const auto& run : report.runs)
    if (!run.failed) n_iters = std::max<int>(n_iters, run.records.size());
  if (n_iters == 0) throw DataError("plot: all runs failed");

  SvgDocument svg(760, 520);
  const double panel_h = 200.0;
  for (std::size_t pi = 0; pi < indices.size(); ++pi) {
    ChartArea area;
    area.left = 70;
    area.right = 730;
    area.top = 50 + pi * (panel_h + 60);
    area.bottom = area.top + panel_h;
    area.x_min = -0.5;
    area.x_max = n_iters - 0.5;
    area.y_min = -1.0;
    area.y_max = 1.0;
    draw_axes(svg, area, "iteration",
              "Spearman rho vs " + indices[pi] + " (uncertainty-oriented)",
              pi == 0 ? "Rank correlation of scores with ambiguity indices"
                      : "");
    svg.open_group("panel-" + indices[pi]);
    const double zero_y = area.sy(0.0);
    svg.line(area.left, zero_y, area.right, zero_y, "#bbbbbb", 1.0, "3,3");
    const double group_w = (area.right - area.left) / n_iters;
    const double box_w = group_w / 5.0;
    for (int it = 0; it < n_iters; ++it) {
      for (std::size_t fi = 0; fi < functions.size(); ++fi) {
        std::vector<double> rhos;
        for (const auto& run : report.runs) {
          if (run.failed || it >= static_cast<int>(run.records.size()))
            continue;
          auto found = run.records[it].correlations.find(functions[fi]);
          if (found == run.records[it].correlations.end()) continue;
          const auto& corr =
              indices[pi] == "bpr" ? found->second.bpr : found->second.mdf;
          if (corr.has_value()) rhos.push_back(corr->rho);
        }
        if (rhos.empty()) continue;
        std::sort(rhos.begin(), rhos.end());
        auto quantile = [&](double q) {
          const double pos = q * (rhos.size() - 1);
          const std::size_t lo = static_cast<std::size_t>(pos);
          const std::size_t hi = std::min(lo + 1, rhos.size() - 1);
          return rhos[lo] + (pos - lo) * (rhos[hi] - rhos[lo]);
        };
        const double cx =
            area.left + group_w * (it + 0.5) + box_w * (fi - 1.0);
        const std::string& color = acquisition_color(functions[fi]);
        const double q1 = quantile(0.25), q2 = quantile(0.5), q3 = quantile(0.75);
        svg.line(cx, area.sy(rhos.front()), cx, area.sy(q1), color, 1.0);
        svg.line(cx, area.sy(q3), cx, area.sy(rhos.back()), color, 1.0);
        svg.rect(cx - box_w * 0.4, area.sy(q3), box_w * 0.8,
                 area.sy(q1) - area.sy(q3), "none", color);
        svg.line(cx - box_w * 0.4, area.sy(q2), cx + box_w * 0.4, area.sy(q2),
                 color, 1.6);
      }
    }
    svg.close_group();
  }
  svg.open_group("legend");
  double lx = 90;
  for (const auto& fn : functions) {
    svg.line(lx, 24, lx + 22, 24, acquisition_color(fn), 2.0);
    svg.text(lx + 28, 28, fn, 12);
    lx += 110;
  }
  svg.close_group();
  svg.write(spec.output);
}

}  // namespace

void PlotSpec::validate() const {
  static const std::set<std::string> kinds = {
      "mdf_bpr_density", "fpr_bpr_density", "f1_curve", "sd_curve",
      "correlation_box"};
  if (kinds.find(kind) == kinds.end())
    throw ConfigError("plot: unknown kind: " + kind);
  if (inputs.empty()) throw ConfigError("plot: inputs must not be empty");
  if (output.empty()) throw ConfigError("plot: output path required");
  for (double l : levels) {
    const double scaled = l / 0.05;
    if (l < 0.049 || l > 0.951 ||
        std::fabs(scaled - std::lround(scaled)) > 1e-9)
      throw ConfigError("plot: levels must come from {0.05,...,0.95}");
  }
  for (const auto& input : inputs)
    if (!std::filesystem::exists(input))
      throw DataError("plot: input does not exist: " + input);
  if (population != "pool" && population != "selected")
    throw ConfigError("plot: population must be pool or selected");
  if (grid_size < 16) throw ConfigError("plot: grid_size must be >= 16");
}

PlotSpec plotspec_from_json(const json& j) {
  PlotSpec spec;
  try {
    spec.kind = j.value("kind", std::string{});
    if (j.contains("inputs"))
      spec.inputs = j["inputs"].get<std::vector<std::string>>();
    spec.output = j.value("output", std::string{});
    if (j.contains("levels"))
      spec.levels = j["levels"].get<std::vector<double>>();
    spec.x_label = j.value("x_label", std::string{});
    spec.y_label = j.value("y_label", std::string{});
    spec.population = j.value("population", spec.population);
    spec.iteration = j.value("iteration", spec.iteration);
    spec.grid_size = j.value("grid_size", spec.grid_size);
    if (j.contains("baseline") && !j["baseline"].is_null())
      spec.baseline = j["baseline"].get<double>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed plot spec: ") + e.what());
  }
  return spec;
}

void render_plot(const PlotSpec& spec) {
  spec.validate();
  if (spec.kind == "mdf_bpr_density")
    render_density(spec, false);
  else if (spec.kind == "fpr_bpr_density")
    render_density(spec, true);
  else if (spec.kind == "f1_curve")
    render_curves(spec, false);
  else if (spec.kind == "sd_curve")
    render_curves(spec, true);
  else
    render_correlation_box(spec);
}

}  // namespace floodal
