#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "octlts/config.hpp"
#include "octlts/perf_model.hpp"
#include "octlts/rk.hpp"
#include "octlts/run.hpp"

using namespace octlts;

namespace {

SolverConfig load(const std::string& par) {
  if (par.empty()) return parse_config_string("", true);
  return parse_config(par, true);
}

void print_matrix(std::ostream& os, const std::string& name, const Matrix& m) {
  for (int i = 0; i < m.size(); ++i) {
    os << name << ',' << i;
    for (int j = 0; j < m.size(); ++j) os << ',' << m(i, j);
    os << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"octree local time stepping driver"};
  app.require_subcommand(1);

  std::string par, out, hist, tableau = "rk3", dump;
  int ts_mode = -1, threads = 0, rounds = -1;
  double dtf = 0.5;

  auto* run_cmd = app.add_subcommand("run", "evolve the wave system");
  run_cmd->add_option("--par", par, "JSON parameter file");
  run_cmd->add_option("--ts-mode", ts_mode, "0 LTS, 1 GTS, 2 LTS vs GTS one round, 3 LTS vs GTS to end")
      ->check(CLI::Range(0, 3));
  run_cmd->add_option("--threads", threads, "worker threads")->check(CLI::Range(1, 256));
  run_cmd->add_option("--out", out, "output directory");
  run_cmd->add_option("--rounds", rounds, "coarse rounds (overrides end_time)")->check(CLI::NonNegativeNumber);

  auto* est_cmd = app.add_subcommand("estimate", "LTS speedup estimate from a mesh or histogram");
  est_cmd->add_option("--par", par, "JSON parameter file");
  est_cmd->add_option("--hist", hist, "level,alpha CSV")->check(CLI::ExistingFile);

  auto* part_cmd = app.add_subcommand("partition-report", "per-rank octant counts and weights");
  part_cmd->add_option("--par", par, "JSON parameter file");

  auto* info_cmd = app.add_subcommand("mesh-info", "mesh statistics");
  info_cmd->add_option("--par", par, "JSON parameter file");
  info_cmd->add_option("--dump", dump, "write the octree leaves to this file");

  auto* corr_cmd = app.add_subcommand("dump-correction", "stage correction matrices as CSV");
  corr_cmd->add_option("--tableau", tableau, "euler, rk2, rk3 or rk4");
  corr_cmd->add_option("--dtf", dtf, "fine step size")->check(CLI::PositiveNumber);

  auto* cfg_cmd = app.add_subcommand("dump-config", "print the validated configuration");
  cfg_cmd->add_option("--par", par, "JSON parameter file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    std::cout.precision(17);
    if (*run_cmd) {
      SolverConfig cfg = load(par);
      if (ts_mode >= 0) cfg.ts_mode = ts_mode;
      if (threads > 0) cfg.threads = threads;
      if (!out.empty()) cfg.output_dir = out;
      cfg.validate();
      const Mesh mesh = build_mesh(cfg);
      std::optional<int> r;
      if (rounds >= 0) r = rounds;
      const RunResult res = run(cfg, mesh, TsMode(cfg.ts_mode), r);
      const auto files = write_outputs(cfg, mesh, res, cfg.output_dir);
      std::cerr << "blocks " << mesh.num_blocks() << ", rounds " << res.rounds << ", dt " << res.dt_finest
                << ", wrote " << files.size() << " files to " << cfg.output_dir << '\n';
      if (res.mode == TsMode::Compare || res.mode == TsMode::CompareToEnd) {
        std::cerr << "measured speedup " << res.measured_speedup << ", estimate " << res.estimate.speedup
                  << '\n';
      }
    } else if (*est_cmd) {
      WorkHistogram h;
      if (!hist.empty()) {
        std::ifstream in(hist);
        h = read_histogram_csv(in);
      } else {
        h = histogram_from_mesh(build_mesh(load(par)));
      }
      write_estimate_csv(std::cout, estimate(h));
    } else if (*part_cmd) {
      const Mesh mesh = build_mesh(load(par));
      write_partition_csv(std::cout, mesh.partition());
    } else if (*info_cmd) {
      const Mesh mesh = build_mesh(load(par));
      std::cout << "leaves," << mesh.tree().size() << '\n'
                << "blocks," << mesh.num_blocks() << '\n'
                << "zip_nodes," << mesh.num_zip() << '\n'
                << "min_block_level," << mesh.min_block_level() << '\n'
                << "max_block_level," << mesh.max_block_level() << '\n'
                << "finest_spacing," << mesh.finest_spacing() << '\n';
      if (!dump.empty()) {
        std::ofstream os(dump);
        write_octree(os, mesh.tree());
      }
    } else if (*corr_cmd) {
      const ButcherTableau tab = tableau_by_name(tableau);
      const CorrectionSet cs = build_M(tab, dtf, 2.0 * dtf);
      std::cout << "matrix,row";
      for (int j = 0; j < tab.stages; ++j) std::cout << ",c" << j;
      std::cout << '\n';
      print_matrix(std::cout, "C", cs.C);
      print_matrix(std::cout, "M1_fc", cs.M1_fc);
      print_matrix(std::cout, "M1_fc_inv", cs.M1_fc_inv);
      print_matrix(std::cout, "M2_cf", cs.M2_cf);
    } else if (*cfg_cmd) {
      std::cout << dump_config(load(par));
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
