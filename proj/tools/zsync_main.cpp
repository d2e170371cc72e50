// Experiment driver: subcommands gen / sync / sweep / diag / check-scales.
// Configuration comes from a flat key=value file, ZSYNC_-prefixed environment
// variables, and command-line flags (flags win).  Every run writes a
// long-format results.csv (quantity, params, value, se) plus a manifest.json
// embedding the full configuration, master seed, build id, and timings, so
// any result is reproducible from its own manifest.  Rows are flushed as they
// are produced; an interrupted run leaves a valid CSV prefix.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "zsync/csvio.hpp"
#include "zsync/diagnostics.hpp"
#include "zsync/model.hpp"
#include "zsync/multiscale.hpp"
#include "zsync/renorm.hpp"

using nlohmann::json;
using namespace zsync;

#ifndef ZSYNC_GIT_DESCRIBE
#define ZSYNC_GIT_DESCRIBE "unknown"
#endif

namespace {

struct ExperimentConfig {
  // model
  int d = 2;
  int n = 20;
  double p = 0.05;
  double eta = 0.5;
  int range_L = 12;
  uint64_t seed = 1;
  // pipeline
  int scale_L = 6;
  int kappa = 1;
  double t = 0.5;
  int64_t sweeps = 500;
  int reps = 1;
  // sampling plan for diagnostics
  int replicas = 8;
  int samples = 40;
  int64_t burn = 500;
  int64_t gap = 2;
  // sweep grids
  std::vector<double> p_grid;
  std::vector<int> L_grid;
  // diagnostics
  std::string which = "correlation";
  int region_side = 5;
  int instances = 40;
  double beta_multiplier = 1.0;
  double lambda_max = 1.0;
  int grid_points = 13;
  std::vector<double> q_grid = {0.0, 0.2, 0.4, 0.6, 0.8, 1.0};
  // infrastructure
  std::string out_dir = "out";
  int threads = 1;
};

ModelParams model_of(const ExperimentConfig& cfg) {
  ModelParams mp;
  mp.d = cfg.d;
  mp.n = cfg.n;
  mp.p = cfg.p;
  mp.eta = cfg.eta;
  mp.range_L = cfg.range_L;
  mp.seed = cfg.seed;
  mp.validate();
  return mp;
}

ReplicaPlan plan_of(const ExperimentConfig& cfg) {
  ReplicaPlan plan;
  plan.pairs = cfg.replicas;
  plan.samples = cfg.samples;
  plan.burn = cfg.burn;
  plan.gap = cfg.gap;
  plan.threads = cfg.threads;
  return plan;
}

json config_json(const ExperimentConfig& c) {
  return json{{"d", c.d},
              {"n", c.n},
              {"p", c.p},
              {"eta", c.eta},
              {"range_L", c.range_L},
              {"seed", c.seed},
              {"scale_L", c.scale_L},
              {"kappa", c.kappa},
              {"t", c.t},
              {"sweeps", c.sweeps},
              {"reps", c.reps},
              {"replicas", c.replicas},
              {"samples", c.samples},
              {"burn", c.burn},
              {"gap", c.gap},
              {"p_grid", c.p_grid},
              {"L_grid", c.L_grid},
              {"which", c.which},
              {"region_side", c.region_side},
              {"instances", c.instances},
              {"beta_multiplier", c.beta_multiplier},
              {"lambda_max", c.lambda_max},
              {"grid_points", c.grid_points},
              {"q_grid", c.q_grid},
              {"out_dir", c.out_dir},
              {"threads", c.threads}};
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Collects result rows and side files, then writes the manifest last so a
// complete manifest certifies a complete run.
struct RunOutput {
  std::filesystem::path dir;
  CsvWriter csv;
  json timings = json::object();
  std::vector<std::string> files;

  explicit RunOutput(const std::string& out_dir) : dir(out_dir) {
    std::filesystem::create_directories(dir);
    csv.open((dir / "results.csv").string(), {"quantity", "params", "value", "se"});
    files.push_back("results.csv");
  }

  void row(const std::string& quantity, const std::string& params, double value, double se) {
    csv.row({quantity, params, fmt_double(value), fmt_double(se)});
  }

  void manifest(const std::string& subcommand, const ExperimentConfig& cfg) {
    json m{{"schema", "zsync-results-v1"},
           {"subcommand", subcommand},
           {"git_describe", ZSYNC_GIT_DESCRIBE},
           {"config", config_json(cfg)},
           {"seed", cfg.seed},
           {"timings", timings},
           {"outputs", files}};
    std::ofstream out(dir / "manifest.json", std::ios::binary | std::ios::trunc);
    out << m.dump(2) << "\n";
    files.push_back("manifest.json");
  }
};

std::string scan_params(const ExperimentConfig& cfg, double p) {
  return "p=" + fmt_double(p) + ";scale_L=" + std::to_string(cfg.scale_L) +
         ";reps=" + std::to_string(cfg.reps);
}

// One scan point; `point_key` keys the repetition seeds so grid points are
// independent.  A single point with point_key 0 is exactly the `sync` run.
void emit_scan_point(RunOutput& out, const ExperimentConfig& cfg, const ModelParams& base,
                     double p, uint64_t point_key) {
  ModelParams mp = base;
  mp.p = p;
  mp.validate();
  ThresholdScan scan =
      threshold_scan(mp, {p}, cfg.scale_L, cfg.reps, cfg.sweeps, cfg.threads, point_key);
  const ThresholdRow& r = scan.rows[0];
  std::string params = scan_params(cfg, p);
  out.row("risk", params, r.risk_value.value, r.risk_value.se);
  out.row("p_hat", params, r.p_hat.value, r.p_hat.se);
  out.row("delta_hat", params, 1.0 - 2.0 * r.p_hat.value, 2.0 * r.p_hat.se);
}

int cmd_gen(const ExperimentConfig& cfg) {
  auto t0 = std::chrono::steady_clock::now();
  ModelParams mp = model_of(cfg);
  RunOutput out(cfg.out_dir);
  LatticeInstance inst = generate_instance(mp);
  out.timings["generate_s"] = seconds_since(t0);

  std::filesystem::path bin = out.dir / "instance.bin";
  save_instance(inst, bin.string());
  out.files.push_back("instance.bin");

  int64_t edges = 0;
  for (int axis = 0; axis < mp.d; ++axis) {
    int64_t along = inst.box.hi[size_t(axis)] - inst.box.lo[size_t(axis)];
    edges += along * (inst.box.size() / (along + 1));
  }
  out.row("vertices", "", double(inst.vertex_count()), 0);
  out.row("edges", "", double(edges), 0);
  out.row("goe_offsets", "", double(inst.goe_offsets.size()), 0);
  out.timings["total_s"] = seconds_since(t0);
  out.manifest("gen", cfg);
  return 0;
}

int cmd_sync(const ExperimentConfig& cfg) {
  auto t0 = std::chrono::steady_clock::now();
  ModelParams base = model_of(cfg);
  if (cfg.reps < 1) throw std::invalid_argument("reps: must be >= 1");
  BlockPartition part = build_partition(cfg.n, cfg.d, cfg.scale_L);
  RunOutput out(cfg.out_dir);

  emit_scan_point(out, cfg, base, cfg.p, 0);
  out.timings["scan_s"] = seconds_since(t0);

  // detail files from an identical keyed rerun of repetition 0
  auto t1 = std::chrono::steady_clock::now();
  ModelParams mp = base;
  mp.seed = key_hash(base.seed, TAG_REP, {0, 0, 0});
  LatticeInstance inst = generate_instance(mp);
  BlockSideInfo side = build_block_side_info(inst, part, cfg.t, cfg.threads);
  RenormInstance r = renormalize(inst, part, side, cfg.sweeps, cfg.threads, 0);
  OverlapReport rep = overlap_report(r, inst, part);
  dump_renorm_csv(r, rep, part, (out.dir / "renorm_edges.csv").string(),
                  (out.dir / "renorm_blocks.csv").string());
  out.files.push_back("renorm_edges.csv");
  out.files.push_back("renorm_blocks.csv");

  Hierarchy h = build_hierarchy(part, cfg.kappa);
  SyncResult sync = synchronize(r, part, h);
  AuditReport audit = honest_good_audit(sync.state, to_block_graph(r, part), h);
  dump_multiscale_csv(sync, audit, (out.dir / "multiscale.csv").string());
  out.files.push_back("multiscale.csv");

  std::string params = scan_params(cfg, cfg.p) + ";rep=0";
  out.row("overlap_m2", params, rep.m2.value, rep.m2.se);
  out.row("overlap_w2", params, rep.w2.value, rep.w2.se);
  out.row("overlap_wmm", params, rep.wmm.value, rep.wmm.se);
  out.row("risk_rep0", params, pipeline_risk_exact(inst, part, r, sync), 0);
  out.row("blocks", params, double(part.block_count()), 0);
  int64_t covered = 0;
  for (int32_t o : part.owner) covered += o >= 0 ? 1 : 0;
  out.row("covered_fraction", params, double(covered) / double(inst.vertex_count()), 0);
  out.timings["detail_s"] = seconds_since(t1);
  out.timings["total_s"] = seconds_since(t0);
  out.manifest("sync", cfg);
  return 0;
}

int cmd_sweep(const ExperimentConfig& cfg) {
  auto t0 = std::chrono::steady_clock::now();
  ModelParams base = model_of(cfg);
  if (cfg.reps < 1) throw std::invalid_argument("reps: must be >= 1");
  if (cfg.p_grid.empty() == cfg.L_grid.empty())
    throw std::invalid_argument("grid: provide exactly one of p-grid or L-grid");
  RunOutput out(cfg.out_dir);

  if (!cfg.p_grid.empty()) {
    build_partition(cfg.n, cfg.d, cfg.scale_L);  // validate geometry up front
    for (size_t i = 0; i < cfg.p_grid.size(); ++i) {
      emit_scan_point(out, cfg, base, cfg.p_grid[i], i);
      out.timings["point_" + std::to_string(i) + "_s"] = seconds_since(t0);
    }
  } else {
    for (size_t i = 0; i < cfg.L_grid.size(); ++i) {
      int L = cfg.L_grid[i];
      build_partition(cfg.n, cfg.d, L);
      std::vector<EffectiveNoiseRow> rows =
          effective_noise_curve(base, {L}, cfg.reps, cfg.sweeps, cfg.t, cfg.threads);
      std::string params = "scale_L=" + std::to_string(L) + ";p=" + fmt_double(cfg.p) +
                           ";reps=" + std::to_string(cfg.reps);
      out.row("p_hat", params, rows[0].p_hat, rows[0].se);
      out.row("edges", params, double(rows[0].edges), 0);
      out.row("disagreements", params, double(rows[0].disagreements), 0);
      out.timings["point_" + std::to_string(i) + "_s"] = seconds_since(t0);
    }
  }
  out.timings["total_s"] = seconds_since(t0);
  out.manifest("sweep", cfg);
  return 0;
}

int cmd_diag(const ExperimentConfig& cfg) {
  auto t0 = std::chrono::steady_clock::now();
  ModelParams mp = model_of(cfg);
  ReplicaPlan plan = plan_of(cfg);
  if (cfg.region_side < 1 || cfg.region_side % 2 == 0)
    throw std::invalid_argument("region-side: must be odd and positive");
  RunOutput out(cfg.out_dir);
  std::string params = "which=" + cfg.which + ";side=" + std::to_string(cfg.region_side);

  if (cfg.which == "correlation") {
    LatticeInstance inst = generate_instance(mp);
    auto region = centered_region(inst.box, mp.d, cfg.region_side);
    CorrelationEstimate ce = pair_correlation(inst, region, plan, 0);
    out.row("phi_e", params, ce.phi_e.value, ce.phi_e.se);
    out.row("phi_v", params, ce.phi_v.value, ce.phi_v.se);
    out.row("q_star_sq", params, ce.q_star_sq, ce.phi_e.se);
  } else if (cfg.which == "nishimori") {
    params += ";instances=" + std::to_string(cfg.instances) +
              ";beta_multiplier=" + fmt_double(cfg.beta_multiplier);
    Box sub = Box::centered(mp.d, (cfg.region_side - 1) / 2);
    NishimoriReport rep =
        nishimori_check(mp, sub, cfg.instances, plan, cfg.beta_multiplier, 0);
    out.row("r12_sq", params, rep.r12_sq.value, rep.r12_sq.se);
    out.row("r10_sq", params, rep.r10_sq.value, rep.r10_sq.se);
    out.row("mean_z", params, rep.mean_z, 0);
    out.row("sq_z", params, rep.sq_z, 0);
    out.row("ks", params, rep.ks, 0);
    out.row("ks_z", params, rep.ks_z, 0);
  } else if (cfg.which == "locking" || cfg.which == "susceptibility") {
    BlockPartition part = build_partition(cfg.n, cfg.d, cfg.scale_L);
    LatticeInstance inst = generate_instance(mp);
    BlockSideInfo side = build_block_side_info(inst, part, cfg.t, cfg.threads);
    Coord center{};
    int64_t b1 = part.block_index_of(center);
    int64_t b2 = b1 >= 0 ? part.neighbor(b1, 0) : -1;
    if (b1 < 0 || b2 < 0)
      throw std::invalid_argument("scale_L: no adjacent interior block pair at the center");
    params = "which=" + cfg.which + ";scale_L=" + std::to_string(cfg.scale_L);
    if (cfg.which == "locking") {
      LockingDeficit def = locking_deficit(inst, part, side, b1, b2, plan, 0);
      out.row("locking_one_block", params, def.one_block.value, def.one_block.se);
      out.row("locking_two_block", params, def.two_block.value, def.two_block.se);
      out.row("alpha", params, def.alpha, 0);
    } else {
      SusceptibilityReport s = susceptibility(inst, part, side, b1, b2, plan, 0);
      out.row("tr2", params, s.tr2, 0);
      out.row("tr3", params, s.tr3, 0);
      out.row("opnorm", params, s.opnorm, 0);
      out.row("slack_lower", params, s.slack_lower, 0);
      out.row("slack_upper", params, s.slack_upper, 0);
      out.row("sandwich_ok", params, s.sandwich_ok ? 1 : 0, 0);
    }
  } else if (cfg.which == "free-energy") {
    if (cfg.grid_points < 3) throw std::invalid_argument("grid-points: must be >= 3");
    if (!(cfg.lambda_max > 0)) throw std::invalid_argument("lambda-max: must be > 0");
    std::vector<int32_t> region;
    {
      LatticeInstance inst = generate_instance(mp);
      region = centered_region(inst.box, mp.d, cfg.region_side);
    }
    auto grid =
        geometric_grid_with_zero(cfg.lambda_max / 512.0, cfg.lambda_max, cfg.grid_points);
    FreeEnergyCurve curve = free_energy_scalar(mp, region, grid, plan, 0);
    for (size_t i = 0; i < grid.size(); ++i) {
      std::string lp = params + ";lambda=" + fmt_double(grid[i]);
      out.row("integrand", lp, curve.integrand[i].value, curve.integrand[i].se);
      out.row("f_diff", lp, curve.f_diff[i].value, curve.f_diff[i].se);
      out.row("f_chan", lp, curve.f_chan[i].value, curve.f_chan[i].se);
      out.row("disc_err", lp, curve.disc_err[i], 0);
    }
  } else if (cfg.which == "variational") {
    std::vector<int32_t> region;
    {
      LatticeInstance inst = generate_instance(mp);
      region = centered_region(inst.box, mp.d, cfg.region_side);
    }
    VariationalReport v = variational_check(mp, region, cfg.eta, cfg.q_grid, plan, 0);
    params += ";eta=" + fmt_double(cfg.eta);
    out.row("lhs", params, v.lhs.value, v.lhs.se);
    out.row("rhs", params, v.rhs.value, v.rhs.se);
    out.row("q_opt", params, v.q_opt, 0);
    out.row("lhs_disc", params, v.lhs_disc, 0);
    out.row("rhs_disc", params, v.rhs_disc, 0);
    for (size_t j = 0; j < v.q_grid.size(); ++j)
      out.row("rhs_at_q", params + ";q=" + fmt_double(v.q_grid[j]), v.rhs_values[j].value,
              v.rhs_values[j].se);
  } else {
    throw std::invalid_argument("which: unknown diagnostic '" + cfg.which +
                                "' (correlation|nishimori|locking|susceptibility|free-energy|"
                                "variational)");
  }
  out.timings["total_s"] = seconds_since(t0);
  out.manifest("diag", cfg);
  return 0;
}

int cmd_check_scales(const ExperimentConfig& cfg) {
  auto t0 = std::chrono::steady_clock::now();
  if (cfg.kappa < 1) throw std::invalid_argument("kappa: must be >= 1");
  RunOutput out(cfg.out_dir);
  ScaleReport r = check_scale_conditions(cfg.kappa, cfg.d);
  std::string params = "kappa=" + std::to_string(cfg.kappa) + ";d=" + std::to_string(cfg.d);
  out.row("a1", params, r.a1, 0);
  out.row("a2", params, r.a2, r.a2_tail);
  out.row("a3", params, r.a3, r.a3_tail);
  out.row("pass1", params, r.pass1 ? 1 : 0, 0);
  out.row("pass2", params, r.pass2 ? 1 : 0, 0);
  out.row("pass3", params, r.pass3 ? 1 : 0, 0);
  out.row("all_pass", params, r.all_pass ? 1 : 0, 0);
  out.timings["total_s"] = seconds_since(t0);
  out.manifest("check-scales", cfg);
  return 0;
}

// The message convention "parameter: explanation" names the offending input.
json error_json(const std::string& msg) {
  json e{{"error", msg}};
  size_t pos = msg.find(':');
  if (pos != std::string::npos && pos > 0 && pos <= 24) {
    std::string tok = msg.substr(0, pos);
    bool ident = true;
    for (char c : tok)
      if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-') ident = false;
    if (ident) e["parameter"] = tok;
  }
  return e;
}

}  // namespace

int main(int argc, char** argv) {
  ExperimentConfig cfg;
  CLI::App app{"Z2-synchronization pipeline driver"};
  app.option_defaults()->always_capture_default();
  app.set_config("--config", "", "flat key=value configuration file");

  app.add_option("--d", cfg.d, "lattice dimension")->envname("ZSYNC_D");
  app.add_option("--n", cfg.n, "box half-width")->envname("ZSYNC_N");
  app.add_option("--p", cfg.p, "edge flip probability")->envname("ZSYNC_P");
  app.add_option("--eta", cfg.eta, "pair-observation SNR")->envname("ZSYNC_ETA");
  app.add_option("--range-L", cfg.range_L, "pair-observation range")->envname("ZSYNC_RANGE_L");
  app.add_option("--seed", cfg.seed, "master seed")->envname("ZSYNC_SEED");
  app.add_option("--scale-L", cfg.scale_L, "block scale")->envname("ZSYNC_SCALE_L");
  app.add_option("--kappa", cfg.kappa, "hierarchy parameter")->envname("ZSYNC_KAPPA");
  app.add_option("--t", cfg.t, "side-information split")->envname("ZSYNC_T");
  app.add_option("--sweeps", cfg.sweeps, "posterior sweeps per block")->envname("ZSYNC_SWEEPS");
  app.add_option("--reps", cfg.reps, "pipeline repetitions")->envname("ZSYNC_REPS");
  app.add_option("--replicas", cfg.replicas, "chain pairs per estimate")
      ->envname("ZSYNC_REPLICAS");
  app.add_option("--samples", cfg.samples, "recorded states per chain")
      ->envname("ZSYNC_SAMPLES");
  app.add_option("--burn", cfg.burn, "burn-in sweeps")->envname("ZSYNC_BURN");
  app.add_option("--gap", cfg.gap, "sweeps between recorded states")->envname("ZSYNC_GAP");
  app.add_option("--p-grid", cfg.p_grid, "sweep grid over p")
      ->delimiter(',')
      ->envname("ZSYNC_P_GRID");
  app.add_option("--L-grid", cfg.L_grid, "sweep grid over the block scale")
      ->delimiter(',')
      ->envname("ZSYNC_L_GRID");
  app.add_option("--which", cfg.which, "diagnostic to run")->envname("ZSYNC_WHICH");
  app.add_option("--region-side", cfg.region_side, "diagnostic region side (odd)")
      ->envname("ZSYNC_REGION_SIDE");
  app.add_option("--instances", cfg.instances, "disorder instances for consistency checks")
      ->envname("ZSYNC_INSTANCES");
  app.add_option("--beta-multiplier", cfg.beta_multiplier,
                 "coupling rescale for the consistency negative control")
      ->envname("ZSYNC_BETA_MULTIPLIER");
  app.add_option("--lambda-max", cfg.lambda_max, "free-energy grid endpoint")
      ->envname("ZSYNC_LAMBDA_MAX");
  app.add_option("--grid-points", cfg.grid_points, "free-energy grid size")
      ->envname("ZSYNC_GRID_POINTS");
  app.add_option("--q-grid", cfg.q_grid, "variational overlap grid")
      ->delimiter(',')
      ->envname("ZSYNC_Q_GRID");
  app.add_option("--out-dir", cfg.out_dir, "output directory")->envname("ZSYNC_OUT_DIR");
  app.add_option("--threads", cfg.threads, "worker threads")->envname("ZSYNC_THREADS");

  CLI::App* gen = app.add_subcommand("gen", "generate an instance and write it to disk");
  CLI::App* sync = app.add_subcommand("sync", "run the full pipeline once");
  CLI::App* sweep = app.add_subcommand("sweep", "pipeline scan over a p or scale grid");
  CLI::App* diag = app.add_subcommand("diag", "Monte Carlo diagnostic estimates");
  CLI::App* scales = app.add_subcommand("check-scales", "scale-sequence conditions");
  app.require_subcommand(0, 1);
  for (CLI::App* sub : {gen, sync, sweep, diag, scales}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cout << error_json(e.what()).dump() << "\n";
    return 2;
  }

  try {
    if (gen->parsed()) return cmd_gen(cfg);
    if (sync->parsed()) return cmd_sync(cfg);
    if (sweep->parsed()) return cmd_sweep(cfg);
    if (diag->parsed()) return cmd_diag(cfg);
    if (scales->parsed()) return cmd_check_scales(cfg);
    std::cout << app.help();
    return 0;
  } catch (const std::exception& e) {
    std::cout << error_json(e.what()).dump() << "\n";
    return 2;
  }
}
