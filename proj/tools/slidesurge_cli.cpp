// Command-line front end: landslide runs, tsunami runs, the coupled
// pipeline, synthetic basin generation and the validation suite.

#include <cstdio>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "slidesurge/slidesurge.hpp"

namespace {

using namespace slidesurge;

struct CommonArgs {
  std::string config;
  std::string out;
  int threads = 0;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool needs_config = true) {
  auto* copt = cmd->add_option("--config", args.config, "scenario configuration file");
  if (needs_config) copt->required();
  cmd->add_option("--out", args.out, "output directory (overrides the scenario's output_dir)");
  cmd->add_option("--threads", args.threads,
                  "worker threads (SLIDESURGE_THREADS overrides this flag)")
      ->check(CLI::PositiveNumber);
}

ThreadPool* make_pool(int threads, std::optional<ThreadPool>& storage) {
  const int workers = resolve_worker_count(threads);
  if (workers > 1) storage.emplace(workers);
  return storage ? &*storage : nullptr;
}

int cmd_run_slide(const CommonArgs& args) {
  Scenario sc = parse_config(args.config);
  if (!args.out.empty()) sc.output_dir = args.out;
  const std::string& out = sc.output_dir;
  detail::ensure_dir(out);
  detail::ensure_dir(out + "/dtopo");

  std::optional<ThreadPool> pool;
  ThreadPool* pp = make_pool(args.threads, pool);

  detail::PreparedInputs inputs = detail::prepare_inputs(sc);

  SlideConfig cfg;
  cfg.hb = sc.hb;
  cfg.mat = sc.material;
  cfg.cfl = sc.slide_numerics.cfl;
  cfg.h_min = sc.slide_numerics.h_min;
  cfg.u_stop = sc.slide_numerics.u_stop;
  cfg.t_end = sc.slide_numerics.t_end;
  cfg.use_bingham_path = sc.use_bingham_path;
  cfg.bed = inputs.slide_bed;

  std::ofstream steps(out + "/slide_steps.csv");
  steps << "t,dt,max_speed,moving_cells,volume\n";
  long count = 0;
  SlideRunResult run = run_slide(
      inputs.slide_h, cfg, sc.slide_numerics.frame_dt,
      [&](double t, const SlideStepReport& rep) {
        ++count;
        steps << format_double(t) << ',' << format_double(rep.dt) << ','
              << format_double(rep.max_speed) << ',' << rep.moving_cell_count << ','
              << format_double(rep.volume) << '\n';
      },
      pp);

  export_dtopo(run.series, out + "/dtopo/slide_motion.dtopo");

  CoupledSummary sum;
  sum.slide_steps = count;
  sum.slide_rest_time = run.rest_time;
  sum.slide_volume_initial = field_stats(inputs.slide_h).integral;
  sum.slide_volume_final = slide_volume(run.final_state);
  detail::write_manifest(sc, RunOptions{args.out, args.threads, false}, sum,
                         &inputs.water_bed.spec, &inputs.slide_bed.spec, out + "/manifest.txt");

  std::printf("run-slide: %ld steps, rest at %s s, %zu frames -> %s\n", count,
              format_double(run.rest_time).c_str(), run.series.frames.size(), out.c_str());
  return 0;
}

int cmd_run_tsunami(const CommonArgs& args, const std::string& dtopo_override) {
  Scenario sc = parse_config(args.config);
  if (!args.out.empty()) sc.output_dir = args.out;
  const std::string& out = sc.output_dir;
  detail::ensure_dir(out);
  detail::ensure_dir(out + "/gauges");
  detail::ensure_dir(out + "/fields");

  const std::string dtopo_path = dtopo_override.empty() ? sc.dtopo_path : dtopo_override;
  if (dtopo_path.empty())
    throw ConfigError("run-tsunami needs a bed-motion file: set dtopo_path or pass --dtopo");

  ScalarField bed;
  if (sc.basin) {
    bed = make_synthetic_basin(*sc.basin).first;
  } else {
    bed = read_esri_ascii(sc.bed_path);
  }
  BedMotionSeries motion = import_dtopo(dtopo_path);

  std::optional<ThreadPool> pool;
  ThreadPool* pp = make_pool(args.threads, pool);

  SWEConfig cfg;
  cfg.cfl = sc.water_numerics.cfl;
  cfg.h_dry = sc.water_numerics.h_dry;
  cfg.datum = sc.water_numerics.datum;
  cfg.t_end = sc.water_numerics.t_end;
  cfg.g = sc.material.g;

  SWERunHooks hooks;
  hooks.snapshot_dt = sc.water_numerics.snapshot_dt;
  hooks.on_snapshot = [&](const WaterState& st) {
    ScalarField eta(st.spec, st.spec.nodata);
    for (std::size_t k = 0; k < st.h.size(); ++k)
      if (st.h[k] >= cfg.h_dry) eta.values[k] = st.h[k] + st.bed[k];
    write_esri_ascii(out + "/fields/" + detail::snapshot_name(st.t), eta);
  };

  SWERunResult water = run_swe(bed, motion, cfg, sc.gauges, hooks, pp);

  for (const auto& gs : water.gauges)
    write_gauge_csv(gs, out + "/gauges/gauge_" + std::to_string(gs.gauge.id) + ".csv");
  write_max_fields(water.max_fields, out + "/fields");
  const RunupReport runup =
      inundation_metrics(water.initial_state, water.max_fields, water.wet, cfg);
  write_runup_report(runup, out + "/report.txt");

  CoupledSummary sum;
  sum.water_steps = water.steps;
  sum.runup = runup;
  detail::write_manifest(sc, RunOptions{args.out, args.threads, false}, sum, &bed.spec, nullptr,
                         out + "/manifest.txt");

  std::printf("run-tsunami: %ld steps, runup %.2f m -> %s\n", water.steps,
              runup.max_runup_height, out.c_str());
  return 0;
}

int cmd_make_basin(const CommonArgs& args) {
  Scenario sc = parse_config(args.config);
  if (!sc.basin) throw ConfigError("make-basin: the scenario has no [basin] section");
  const std::string out = args.out.empty() ? sc.output_dir : args.out;
  detail::ensure_dir(out);
  auto [bed, thick] = make_synthetic_basin(*sc.basin);
  write_esri_ascii(out + "/bed.asc", bed);
  write_esri_ascii(out + "/slide_thickness.asc", thick);
  write_esri_ascii(out + "/slide_bed.asc", resample(bed, thick.spec));
  const FieldStats bs = field_stats(bed);
  const FieldStats ts = field_stats(thick);
  std::printf("make-basin: bed %dx%d (min %.1f m), slide volume %.0f m^3 -> %s\n", bed.spec.nx,
              bed.spec.ny, bs.min, ts.integral, out.c_str());
  return 0;
}

int cmd_validate(const std::string& out) {
  const std::string dir = out.empty() ? "validation_out" : out;
  ValidationReport rep = run_validation_suite(dir, [](const CaseResult& c) {
    std::printf("%s %s error=%s tol=%s%s%s\n", c.passed ? "PASS" : "FAIL", c.name.c_str(),
                format_double(c.error).c_str(), format_double(c.tolerance).c_str(),
                c.detail.empty() ? "" : "  # ", c.detail.c_str());
    std::fflush(stdout);
  });
  std::printf("%s\n", rep.all_passed() ? "ALL PASS" : "FAILURES PRESENT");
  return rep.all_passed() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"slidesurge: coupled viscoplastic landslide + lake tsunami simulator"};
  app.require_subcommand(1);

  std::string seed;
  app.add_option("--seed", seed,
                 "reserved: the model has no stochastic components; setting this is an error")
      ->group("");

  CommonArgs slide_args, tsunami_args, coupled_args, basin_args;
  std::string dtopo_override, validate_out;

  auto* c_slide = app.add_subcommand("run-slide", "run the landslide phase only");
  add_common(c_slide, slide_args);
  auto* c_tsunami = app.add_subcommand("run-tsunami", "run the water phase from a bed-motion file");
  add_common(c_tsunami, tsunami_args);
  c_tsunami->add_option("--dtopo", dtopo_override, "bed-motion file (overrides dtopo_path)");
  auto* c_coupled = app.add_subcommand("run-coupled", "run slide, coupling and water end to end");
  add_common(c_coupled, coupled_args);
  auto* c_basin = app.add_subcommand("make-basin", "generate the synthetic basin rasters");
  add_common(c_basin, basin_args);
  auto* c_validate = app.add_subcommand("validate", "run the built-in validation suite");
  c_validate->add_option("--out", validate_out, "directory for the validation report");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (!seed.empty()) {
      std::fprintf(stderr,
                   "error: --seed is reserved; the model has no stochastic components\n");
      return 2;
    }
    if (c_slide->parsed()) return cmd_run_slide(slide_args);
    if (c_tsunami->parsed()) return cmd_run_tsunami(tsunami_args, dtopo_override);
    if (c_coupled->parsed()) {
      Scenario sc = parse_config(coupled_args.config);
      return run_coupled(sc, RunOptions{coupled_args.out, coupled_args.threads, false});
    }
    if (c_basin->parsed()) return cmd_make_basin(basin_args);
    if (c_validate->parsed()) return cmd_validate(validate_out);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
