#include "halo/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <thread>

#include "halo/error.hpp"
#include "io_util.hpp"

namespace halo {

std::string to_string(Goal g) {
  switch (g) {
    case Goal::PerfOpt: return "perf-opt";
    case Goal::AccOpt: return "acc-opt";
    case Goal::Bal: return "bal";
  }
  return "perf-opt";
}

Goal goal_from_string(const std::string& s) {
  if (s == "perf-opt" || s == "perf_opt" || s == "perf") return Goal::PerfOpt;
  if (s == "acc-opt" || s == "acc_opt" || s == "acc") return Goal::AccOpt;
  if (s == "bal" || s == "balanced") return Goal::Bal;
  throw Error(ErrorCode::InvalidArgument, "unknown goal '" + s + "'");
}

void GoalConfig::validate() const {
  if (!(retention_perf > 0.0 && retention_perf < retention_acc && retention_acc <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "retentions must satisfy 0 < perf < acc <= 1");
  }
  if (sweep_points == 0) throw Error(ErrorCode::InvalidArgument, "sweep needs at least one point");
  if (tile_size == 0) throw Error(ErrorCode::InvalidArgument, "tile size must be positive");
  if (!(transition_time_s >= 0.0)) throw Error(ErrorCode::InvalidArgument, "transition time must be nonnegative");
  array.validate();
  if (tile_size > array.array_rows || tile_size > array.array_cols) {
    throw Error(ErrorCode::TileTooLarge, "tile size exceeds the array");
  }
  table().validate();
}

DvfsTable GoalConfig::table() const { return levels ? *levels : table_for_target(dvfs_target); }

GoalConfig goal_config_from_json(const std::string& text, GoalConfig c) {
  const auto j = detail::parse_json(text, "config");
  if (!j.is_object()) throw Error(ErrorCode::MalformedFile, "config must be a JSON object");
  try {
    if (j.contains("goal")) c.goal = goal_from_string(j["goal"].get<std::string>());
    c.retention_perf = j.value("retention_perf", c.retention_perf);
    c.retention_acc = j.value("retention_acc", c.retention_acc);
    c.sweep_points = j.value("sweep_points", c.sweep_points);
    c.tile_size = j.value("tile_size", c.tile_size);
    c.dvfs_target = j.value("dvfs_target", c.dvfs_target);
    if (j.contains("levels")) {
      nlohmann::json t = {{"target", c.dvfs_target}, {"levels", j["levels"]}};
      c.levels = dvfs_table_from_json(t.dump());
    }
    if (j.contains("low_mode")) c.low_mode = level_mode_from_string(j["low_mode"].get<std::string>());
    if (j.contains("high_mode")) c.high_mode = level_mode_from_string(j["high_mode"].get<std::string>());
    if (j.contains("overlay_mode")) {
      c.overlay_mode = level_mode_from_string(j["overlay_mode"].get<std::string>());
    }
    c.transition_time_s = j.value("transition_time_s", c.transition_time_s);
    c.salient_fraction = j.value("salient_fraction", c.salient_fraction);
    c.overlay_cap = j.value("overlay_cap", c.overlay_cap);
    c.baseline_bits = j.value("baseline_bits", c.baseline_bits);
    c.threads = j.value("threads", c.threads);
    if (j.contains("array")) c.array = array_config_from_json(j["array"].dump());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedFile, std::string("config has a field of the wrong type: ") + e.what());
  }
  c.validate();
  return c;
}

std::string goal_config_to_json(const GoalConfig& c) {
  nlohmann::ordered_json j;
  j["goal"] = to_string(c.goal);
  j["retention_perf"] = c.retention_perf;
  j["retention_acc"] = c.retention_acc;
  j["sweep_points"] = c.sweep_points;
  j["tile_size"] = c.tile_size;
  j["dvfs_target"] = c.dvfs_target;
  j["levels"] = nlohmann::ordered_json::parse(dvfs_table_to_json(c.table()))["levels"];
  j["low_mode"] = to_string(c.low_mode);
  j["high_mode"] = to_string(c.high_mode);
  j["overlay_mode"] = to_string(c.overlay_mode);
  j["transition_time_s"] = c.transition_time_s;
  j["salient_fraction"] = c.salient_fraction;
  j["overlay_cap"] = c.overlay_cap;
  j["baseline_bits"] = c.baseline_bits;
  j["array"] = nlohmann::ordered_json::parse(array_config_to_json(c.array));
  return j.dump(2);
}

std::vector<std::size_t> pareto_front(const std::vector<ParetoPoint>& points) {
  std::vector<std::size_t> front;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const ParetoPoint& p = points[i];
    bool dominated = false;
    for (const ParetoPoint& q : points) {
      if (q.normalized_perf >= p.normalized_perf && q.proxy_loss <= p.proxy_loss &&
          (q.normalized_perf > p.normalized_perf || q.proxy_loss < p.proxy_loss)) {
        dominated = true;
        break;
      }
    }
    if (!dominated) front.push_back(i);
  }
  return front;
}

KneeResult knee_point(const std::vector<ParetoPoint>& points) {
  if (points.empty()) throw Error(ErrorCode::InvalidArgument, "knee point of an empty set");
  auto lower_loss = [&](std::size_t a, std::size_t b) {
    if (points[a].proxy_loss != points[b].proxy_loss) return points[a].proxy_loss < points[b].proxy_loss;
    if (points[a].normalized_perf != points[b].normalized_perf) {
      return points[a].normalized_perf > points[b].normalized_perf;
    }
    return a < b;
  };
  if (points.size() < 3) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < points.size(); ++i) {
      if (lower_loss(i, best)) best = i;
    }
    return {best, points[best], true};
  }

  const std::vector<std::size_t> front = pareto_front(points);
  double pmin = points[front[0]].normalized_perf, pmax = pmin;
  double lmin = points[front[0]].proxy_loss, lmax = lmin;
  for (std::size_t i : front) {
    pmin = std::min(pmin, points[i].normalized_perf);
    pmax = std::max(pmax, points[i].normalized_perf);
    lmin = std::min(lmin, points[i].proxy_loss);
    lmax = std::max(lmax, points[i].proxy_loss);
  }
  auto norm = [](double x, double lo, double hi) { return hi > lo ? (x - lo) / (hi - lo) : 0.0; };

  std::size_t a = front[0];
  std::size_t b = front[0];
  for (std::size_t i : front) {
    const ParetoPoint& p = points[i];
    if (p.normalized_perf < points[a].normalized_perf ||
        (p.normalized_perf == points[a].normalized_perf && lower_loss(i, a))) {
      a = i;
    }
    if (p.normalized_perf > points[b].normalized_perf ||
        (p.normalized_perf == points[b].normalized_perf && lower_loss(i, b))) {
      b = i;
    }
  }
  const double ax = norm(points[a].normalized_perf, pmin, pmax), ay = norm(points[a].proxy_loss, lmin, lmax);
  const double bx = norm(points[b].normalized_perf, pmin, pmax), by = norm(points[b].proxy_loss, lmin, lmax);
  const double len = std::hypot(bx - ax, by - ay);

  constexpr double kTie = 1e-12;
  std::size_t best = front[0];
  double best_d = -1.0;
  for (std::size_t i : front) {
    const double x = norm(points[i].normalized_perf, pmin, pmax);
    const double y = norm(points[i].proxy_loss, lmin, lmax);
    const double d = len > 0.0 ? std::abs((bx - ax) * (ay - y) - (ax - x) * (by - ay)) / len : 0.0;
    if (d > best_d + kTie || (std::abs(d - best_d) <= kTie && lower_loss(i, best))) {
      best = i;
      best_d = std::max(d, best_d);
    }
  }
  return {best, points[best], false};
}

QuantizerConfig quantizer_config(const GoalConfig& goal, double retention, const WeightProfile& profile) {
  QuantizerConfig qc = default_quantizer_config(profile);
  qc.tile_rows = goal.tile_size;
  qc.tile_cols = goal.tile_size;
  qc.retention = retention;
  qc.salient_fraction = goal.salient_fraction;
  qc.overlay_cap = goal.overlay_cap;
  return qc;
}

std::map<std::uint32_t, DvfsLevel> class_levels(const GoalConfig& goal, const QuantizerConfig& qc,
                                                const WeightProfile& profile) {
  const DvfsTable table = goal.table();
  FrequencyClass overlay;
  overlay.name = "overlay";
  for (int v = -127; v <= 127; ++v) overlay.codebook.push_back(static_cast<std::int8_t>(v));
  return {{0u, level_for_class(table, qc.low_class, profile, goal.low_mode)},
          {1u, level_for_class(table, qc.high_class, profile, goal.high_mode)},
          {kOverlayClass, level_for_class(table, overlay, profile, goal.overlay_mode)}};
}

std::vector<std::uint32_t> global_tile_classes(std::span<const QuantizedModel> models) {
  std::vector<std::uint32_t> labels;
  for (const QuantizedModel& m : models) labels.insert(labels.end(), m.tile_class.begin(), m.tile_class.end());
  return labels;
}

DvfsSchedule schedule_models(std::span<const QuantizedModel> models,
                             const std::map<std::uint32_t, DvfsLevel>& levels,
                             double transition_time_s) {
  const bool overlay = std::any_of(models.begin(), models.end(),
                                   [](const QuantizedModel& m) { return m.overlay.nnz() > 0; });
  return build_schedule(global_tile_classes(models), levels, transition_time_s, overlay);
}

namespace {

// Dynamic energy is referenced to the lowest voltage of the level table.
ArrayConfig pipeline_array(const GoalConfig& goal) {
  ArrayConfig a = goal.array;
  a.reference_voltage_v = goal.table().min_voltage();
  return a;
}

}  // namespace

SimReport run_uniform_baseline(const TensorContainer& container, const GoalConfig& goal,
                               const WeightProfile& profile) {
  container.validate();
  std::vector<QuantizedModel> models;
  for (const LayerTensors& l : container.layers) {
    models.push_back(quantize_uniform(l.weights, goal.tile_size, goal.tile_size, goal.baseline_bits,
                                      profile, l.name));
  }
  return run_baseline(models, pipeline_array(goal), goal.table(), profile, goal.transition_time_s);
}

RunResult evaluate_retention(const TensorContainer& container, const GoalConfig& goal,
                             double retention, const WeightProfile& profile,
                             double baseline_time_s) {
  container.validate();
  const QuantizerConfig qc = quantizer_config(goal, retention, profile);
  RunResult out;
  out.retention = retention;
  for (const LayerTensors& l : container.layers) {
    QuantizationDetail detail;
    QuantizedModel m = quantize_model(l.weights, l.gradients, qc, profile, &detail, l.name);
    LayerMetrics lm;
    lm.name = l.name;
    lm.rows = m.rows;
    lm.cols = m.cols;
    lm.high_tiles = static_cast<std::size_t>(std::count(m.tile_class.begin(), m.tile_class.end(), 1));
    lm.low_tiles = m.tile_count() - lm.high_tiles;
    lm.k_fraction = detail.masks.k_fraction;
    lm.overlay_nnz = m.overlay.nnz();
    lm.overlay_cap_exceeded = detail.overlay_cap_exceeded;
    lm.proxy_loss = fisher_weighted_error(l.weights, dequantize(m), fisher_sensitivity(l.gradients));
    lm.b_eff = effective_bitwidth(m);
    out.proxy_loss += lm.proxy_loss;
    out.layers.push_back(std::move(lm));
    out.models.push_back(std::move(m));
  }
  out.b_eff = effective_bitwidth(out.models);
  out.schedule = schedule_models(out.models, class_levels(goal, qc, profile), goal.transition_time_s);
  out.report = simulate(out.models, out.schedule, pipeline_array(goal), profile);
  out.point = {retention, baseline_time_s / out.report.exec_time_s, out.proxy_loss, out.b_eff};
  return out;
}

std::vector<double> sweep_retentions(const GoalConfig& goal) {
  std::vector<double> r(goal.sweep_points);
  if (goal.sweep_points == 1) {
    r[0] = goal.retention_perf;
    return r;
  }
  for (std::size_t i = 0; i < goal.sweep_points; ++i) {
    r[i] = goal.retention_perf + (goal.retention_acc - goal.retention_perf) * static_cast<double>(i) /
                                     static_cast<double>(goal.sweep_points - 1);
  }
  r.back() = goal.retention_acc;
  return r;
}

PipelineResult run_pipeline(const TensorContainer& container, const GoalConfig& goal,
                            const WeightProfile& profile) {
  goal.validate();
  container.validate();
  PipelineResult out;
  out.goal = goal.goal;
  out.profile_digest = profile.digest();
  out.baseline = run_uniform_baseline(container, goal, profile);
  const double base_t = out.baseline.exec_time_s;

  if (goal.goal != Goal::Bal) {
    const double r = goal.goal == Goal::PerfOpt ? goal.retention_perf : goal.retention_acc;
    out.run = evaluate_retention(container, goal, r, profile, base_t);
  } else {
    const std::vector<double> rs = sweep_retentions(goal);
    std::vector<RunResult> runs(rs.size());
    std::vector<std::exception_ptr> errors(rs.size());
    std::atomic<std::size_t> next{0};
    auto work = [&] {
      for (std::size_t i = next++; i < rs.size(); i = next++) {
        try {
          runs[i] = evaluate_retention(container, goal, rs[i], profile, base_t);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    };
    std::size_t workers = goal.threads ? goal.threads : std::max(1u, std::thread::hardware_concurrency());
    workers = std::min(workers, rs.size());
    if (workers <= 1) {
      work();
    } else {
      std::vector<std::jthread> pool;
      for (std::size_t i = 0; i < workers; ++i) pool.emplace_back(work);
    }
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
    for (const RunResult& r : runs) out.sweep.push_back(r.point);
    out.knee = knee_point(out.sweep);
    out.run = std::move(runs[out.knee->index]);
  }
  out.energy_ratio = out.run.report.energy.total / out.baseline.energy.total;
  return out;
}

namespace {

std::string num(double x) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

nlohmann::ordered_json point_json(const ParetoPoint& p) {
  nlohmann::ordered_json j;
  j["retention"] = p.retention;
  j["normalized_perf"] = p.normalized_perf;
  j["proxy_loss"] = p.proxy_loss;
  j["b_eff"] = p.b_eff;
  return j;
}

}  // namespace

std::string report_json(const PipelineResult& r, const GoalConfig& goal) {
  nlohmann::ordered_json j;
  j["schema"] = "halo-report-v1";
  j["goal"] = to_string(r.goal);
  j["retention"] = r.run.retention;
  j["profile_digest"] = r.profile_digest;
  j["config"] = nlohmann::ordered_json::parse(goal_config_to_json(goal));
  nlohmann::ordered_json agg;
  agg["proxy_loss"] = r.run.proxy_loss;
  agg["b_eff"] = r.run.b_eff;
  agg["normalized_perf"] = r.run.point.normalized_perf;
  agg["energy_ratio"] = r.energy_ratio;
  agg["exec_time_s"] = r.run.report.exec_time_s;
  agg["baseline_exec_time_s"] = r.baseline.exec_time_s;
  agg["energy_total"] = r.run.report.energy.total;
  agg["baseline_energy_total"] = r.baseline.energy.total;
  j["aggregate"] = std::move(agg);
  auto& layers = j["layers"] = nlohmann::ordered_json::array();
  for (const LayerMetrics& l : r.run.layers) {
    nlohmann::ordered_json jl;
    jl["name"] = l.name;
    jl["rows"] = l.rows;
    jl["cols"] = l.cols;
    jl["low_tiles"] = l.low_tiles;
    jl["high_tiles"] = l.high_tiles;
    jl["k_fraction"] = l.k_fraction;
    jl["overlay_nnz"] = l.overlay_nnz;
    jl["overlay_cap_exceeded"] = l.overlay_cap_exceeded;
    jl["proxy_loss"] = l.proxy_loss;
    jl["b_eff"] = l.b_eff;
    layers.push_back(std::move(jl));
  }
  j["schedule"] = nlohmann::ordered_json::parse(schedule_to_json(r.run.schedule));
  j["sim"] = nlohmann::ordered_json::parse(sim_report_to_json(r.run.report));
  j["baseline"] = nlohmann::ordered_json::parse(sim_report_to_json(r.baseline));
  auto& sweep = j["pareto"] = nlohmann::ordered_json::array();
  for (const ParetoPoint& p : r.sweep) sweep.push_back(point_json(p));
  if (r.knee) {
    j["knee"] = {{"index", r.knee->index}, {"warning", r.knee->warning}, {"point", point_json(r.knee->point)}};
  }
  return j.dump(1);
}

std::string layers_csv(const PipelineResult& r) {
  std::string s = "layer,rows,cols,low_tiles,high_tiles,k_fraction,overlay_nnz,proxy_loss,b_eff\n";
  for (const LayerMetrics& l : r.run.layers) {
    s += l.name + "," + std::to_string(l.rows) + "," + std::to_string(l.cols) + "," +
         std::to_string(l.low_tiles) + "," + std::to_string(l.high_tiles) + "," + num(l.k_fraction) + "," +
         std::to_string(l.overlay_nnz) + "," + num(l.proxy_loss) + "," + num(l.b_eff) + "\n";
  }
  return s;
}

std::string pareto_csv(const PipelineResult& r) {
  std::string s = "retention,normalized_perf,proxy_loss,b_eff,on_front,knee\n";
  std::vector<ParetoPoint> pts = r.sweep;
  if (pts.empty()) pts.push_back(r.run.point);
  const auto front = pareto_front(pts);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const bool on_front = std::find(front.begin(), front.end(), i) != front.end();
    const bool knee = r.knee ? r.knee->index == i : true;
    s += num(pts[i].retention) + "," + num(pts[i].normalized_perf) + "," + num(pts[i].proxy_loss) + "," +
         num(pts[i].b_eff) + "," + (on_front ? "1" : "0") + "," + (knee ? "1" : "0") + "\n";
  }
  return s;
}

std::string schedule_csv(const DvfsSchedule& schedule) {
  std::string s = "group,v,f_ghz,classes,tiles,overlay\n";
  for (std::size_t g = 0; g < schedule.groups.size(); ++g) {
    const ScheduleGroup& grp = schedule.groups[g];
    std::string classes;
    for (std::uint32_t c : grp.classes) {
      if (!classes.empty()) classes += ";";
      classes += c == kOverlayClass ? std::string("overlay") : std::to_string(c);
    }
    s += std::to_string(g) + "," + num(grp.level.voltage_v) + "," + num(grp.level.freq_ghz) + "," + classes +
         "," + std::to_string(grp.tile_ids.size()) + "," + (grp.overlay ? "1" : "0") + "\n";
  }
  return s;
}

void emit_report(const PipelineResult& result, const GoalConfig& goal, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create " + dir.string() + ": " + ec.message());
  detail::write_text(dir / "report.json", report_json(result, goal) + "\n");
  detail::write_text(dir / "layers.csv", layers_csv(result));
  detail::write_text(dir / "pareto.csv", pareto_csv(result));
  detail::write_text(dir / "schedule.csv", schedule_csv(result.run.schedule));
}

}  // namespace halo
