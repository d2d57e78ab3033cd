#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "halo/characterizer.hpp"
#include "halo/dvfs.hpp"
#include "halo/error.hpp"
#include "halo/model_io.hpp"
#include "halo/netlist.hpp"
#include "halo/pipeline.hpp"
#include "halo/profile.hpp"
#include "halo/simulator.hpp"
#include "halo/tensor_io.hpp"

namespace fs = std::filesystem;

namespace {

struct Globals {
  std::string config;
  std::uint64_t seed = 1;
  std::string profile;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw halo::Error(halo::ErrorCode::Io, "cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw halo::Error(halo::ErrorCode::Io, "cannot open " + p.string() + " for writing");
  out << text;
}

halo::WeightProfile profile_of(const Globals& g) {
  return g.profile.empty() ? halo::default_profile() : halo::load_profile(g.profile);
}

halo::GoalConfig config_of(const Globals& g) {
  return g.config.empty() ? halo::GoalConfig{} : halo::goal_config_from_json(slurp(g.config));
}

// Class id -> level for every class declared by the models, plus the overlay.
std::map<std::uint32_t, halo::DvfsLevel> levels_for_models(const std::vector<halo::QuantizedModel>& models,
                                                           const halo::DvfsTable& table,
                                                           const halo::WeightProfile& profile,
                                                           halo::LevelMode mode) {
  std::map<std::uint32_t, halo::DvfsLevel> levels;
  for (const auto& m : models) {
    for (const auto& c : m.classes) {
      const halo::DvfsLevel l = halo::level_for_class(table, c, profile, mode);
      const auto [it, inserted] = levels.emplace(c.id, l);
      if (!inserted && !(it->second == l)) {
        throw halo::Error(halo::ErrorCode::InvalidArgument,
                          "class " + std::to_string(c.id) + " maps to different levels across layers");
      }
    }
  }
  levels[halo::kOverlayClass] = halo::baseline_level(table, profile);
  return levels;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"halo: hardware-aware post-training quantization toolkit"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "pipeline configuration JSON");
  app.add_option("--seed", g.seed, "random seed");
  app.add_option("--profile", g.profile, "weight profile JSON (default: built-in calibrated profile)");

  // characterize
  auto* ch = app.add_subcommand("characterize", "characterize the default MAC netlist");
  bool exhaustive = false;
  std::size_t samples = 0;
  bool raw = false;
  unsigned threads = 0;
  std::string ch_out;
  ch->add_flag("--exhaustive", exhaustive, "all 256x256 activation transitions (default)");
  ch->add_option("--samples", samples, "random activation transitions per weight");
  ch->add_flag("--raw", raw, "write unit-delay results without calibration");
  ch->add_option("--threads", threads, "worker threads");
  ch->add_option("--out", ch_out, "output profile JSON")->required();

  // quantize
  auto* qz = app.add_subcommand("quantize", "quantize a tensor container");
  std::string qz_in, qz_out, goal_name;
  std::optional<double> retention;
  qz->add_option("--container", qz_in, "tensor container directory")->required();
  qz->add_option("--out", qz_out, "output model directory")->required();
  qz->add_option("--goal", goal_name, "perf-opt | acc-opt | bal");
  qz->add_option("--retention", retention, "explicit retention threshold");

  // schedule
  auto* sc = app.add_subcommand("schedule", "build a DVFS schedule for a quantized model");
  std::string sc_model, sc_out, levels_file, mode_name = "max_freq";
  std::optional<double> transition_us;
  sc->add_option("--model", sc_model, "model directory")->required();
  sc->add_option("--out", sc_out, "output schedule JSON")->required();
  sc->add_option("--levels", levels_file, "DVFS level table JSON");
  sc->add_option("--mode", mode_name, "max_freq | min_energy");
  sc->add_option("--transition-us", transition_us, "DVFS transition time in microseconds");

  // simulate
  auto* sm = app.add_subcommand("simulate", "simulate a model under a schedule");
  std::string sm_model, sm_schedule, sm_array, sm_out;
  sm->add_option("--model", sm_model, "model directory")->required();
  sm->add_option("--schedule", sm_schedule, "schedule JSON")->required();
  sm->add_option("--array", sm_array, "array configuration JSON");
  sm->add_option("--out", sm_out, "output report JSON")->required();

  // sweep
  auto* sw = app.add_subcommand("sweep", "retention sweep with knee detection");
  std::string sw_in, sw_out;
  sw->add_option("--container", sw_in, "tensor container directory")->required();
  sw->add_option("--out", sw_out, "output directory")->required();

  // report
  auto* rp = app.add_subcommand("report", "run the full pipeline and write the report");
  std::string rp_in, rp_out, rp_goal;
  rp->add_option("--container", rp_in, "tensor container directory")->required();
  rp->add_option("--out", rp_out, "output directory")->required();
  rp->add_option("--goal", rp_goal, "perf-opt | acc-opt | bal");

  // synth
  auto* sy = app.add_subcommand("synth", "write a synthetic tensor container");
  halo::SyntheticSpec spec;
  std::string sy_out;
  sy->add_option("--layers", spec.layers, "layer count");
  sy->add_option("--rows", spec.rows, "rows per layer");
  sy->add_option("--cols", spec.cols, "columns per layer");
  sy->add_option("--block", spec.block, "gradient block size");
  sy->add_option("--heavy-sigma", spec.heavy_sigma, "log-normal spread of gradient blocks");
  sy->add_option("--out", sy_out, "output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ch) {
      const auto netlist = halo::build_default_mac_netlist();
      const auto sampling = samples > 0 && !exhaustive ? halo::SamplingSpec::random(samples, g.seed)
                                                       : halo::SamplingSpec::exhaustive();
      halo::CharacterizeOptions opts;
      opts.threads = threads;
      halo::WeightProfile p = halo::characterize(netlist, sampling, opts);
      if (!raw) p = halo::calibrate_profile(p);
      halo::save_profile(p, ch_out);
      std::cout << "profile " << p.digest() << " -> " << ch_out << "\n";
    } else if (*qz) {
      halo::GoalConfig cfg = config_of(g);
      if (!goal_name.empty()) cfg.goal = halo::goal_from_string(goal_name);
      const auto profile = profile_of(g);
      const auto container = halo::load_container(qz_in);
      std::vector<halo::QuantizedModel> models;
      if (retention) {
        models = halo::evaluate_retention(container, cfg, *retention, profile, 1.0).models;
      } else {
        models = halo::run_pipeline(container, cfg, profile).run.models;
      }
      halo::save_model_set(models, qz_out);
      std::cout << "quantized " << models.size() << " layer(s), b_eff " << halo::effective_bitwidth(models)
                << " -> " << qz_out << "\n";
    } else if (*sc) {
      halo::GoalConfig cfg = config_of(g);
      const auto profile = profile_of(g);
      const auto table = levels_file.empty() ? cfg.table() : halo::load_dvfs_table(levels_file);
      const auto models = halo::load_model_set(sc_model);
      const double tt = transition_us ? *transition_us * 1e-6 : cfg.transition_time_s;
      const auto levels = levels_for_models(models, table, profile, halo::level_mode_from_string(mode_name));
      const auto schedule = halo::schedule_models(models, levels, tt);
      halo::save_schedule(schedule, sc_out);
      std::cout << schedule.groups.size() << " group(s), " << schedule.transition_count << " transition(s) -> "
                << sc_out << "\n";
    } else if (*sm) {
      halo::GoalConfig cfg = config_of(g);
      const auto profile = profile_of(g);
      const auto models = halo::load_model_set(sm_model);
      const auto schedule = halo::load_schedule(sm_schedule);
      const auto array = sm_array.empty() ? cfg.array : halo::load_array_config(sm_array);
      const auto report = halo::simulate(models, schedule, array, profile);
      spit(sm_out, halo::sim_report_to_json(report) + "\n");
      std::cout << "exec_time_s " << report.exec_time_s << ", energy " << report.energy.total << " -> " << sm_out
                << "\n";
    } else if (*sw) {
      halo::GoalConfig cfg = config_of(g);
      cfg.goal = halo::Goal::Bal;
      const auto result = halo::run_pipeline(halo::load_container(sw_in), cfg, profile_of(g));
      fs::create_directories(sw_out);
      spit(fs::path(sw_out) / "pareto.csv", halo::pareto_csv(result));
      spit(fs::path(sw_out) / "report.json", halo::report_json(result, cfg) + "\n");
      std::cout << "knee at retention " << result.knee->point.retention << " -> " << sw_out << "\n";
    } else if (*rp) {
      halo::GoalConfig cfg = config_of(g);
      if (!rp_goal.empty()) cfg.goal = halo::goal_from_string(rp_goal);
      const auto result = halo::run_pipeline(halo::load_container(rp_in), cfg, profile_of(g));
      halo::emit_report(result, cfg, rp_out);
      std::cout << halo::to_string(result.goal) << ": normalized_perf " << result.run.point.normalized_perf
                << ", energy_ratio " << result.energy_ratio << " -> " << rp_out << "\n";
    } else if (*sy) {
      spec.seed = g.seed;
      halo::save_container(halo::synthetic_container(spec), sy_out);
      std::cout << "synthetic container -> " << sy_out << "\n";
    }
  } catch (const halo::Error& e) {
    std::cerr << "error [" << halo::to_string(e.code()) << "]: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
