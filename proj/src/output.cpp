#include <filesystem>
#include <fstream>
#include <ostream>

#include <json.hpp>

#include "octlts/run.hpp"

namespace octlts {

void write_timeseries_csv(std::ostream& os, const std::vector<TimeseriesRow>& rows) {
  os << "step,time,l2,linf\n";
  os.precision(17);
  for (const auto& r : rows) os << r.step << ',' << r.time << ',' << r.l2 << ',' << r.linf << '\n';
}

void write_diff_csv(std::ostream& os, const std::vector<DiffRow>& rows) {
  os << "time,linf_diff\n";
  os.precision(17);
  for (const auto& r : rows) os << r.time << ',' << r.linf_diff << '\n';
}

void write_phases_csv(std::ostream& os, int ranks, const PhaseTimes& p) {
  os << "ranks,blk_sync,time_interp,rhs,comm\n";
  os.precision(9);
  os << ranks << ',' << p.blk_sync << ',' << p.time_interp << ',' << p.rhs << ',' << p.comm << '\n';
}

void write_work_csv(std::ostream& os, const std::vector<WorkRow>& rows) {
  os << "level,alpha,steps\n";
  os.precision(17);
  for (const auto& r : rows) os << r.level << ',' << r.alpha << ',' << r.steps << '\n';
}

void write_partition_csv(std::ostream& os, const PartitionMap& pmap) {
  os << "rank,octants,weight\n";
  os.precision(17);
  for (int r = 0; r < pmap.ranks(); ++r) {
    const auto& rg = pmap.ranges[std::size_t(r)];
    os << r << ',' << (rg.second - rg.first) << ',' << pmap.rank_weights[std::size_t(r)] << '\n';
  }
}

namespace {

const char* mode_name(TsMode m) {
  switch (m) {
    case TsMode::LTS: return "lts";
    case TsMode::GTS: return "gts";
    case TsMode::Compare: return "compare";
    case TsMode::CompareToEnd: return "compare_to_end";
  }
  return "?";
}

template <class Fn>
void emit(const std::filesystem::path& dir, const std::string& name, std::vector<std::string>& out,
          Fn&& fn) {
  std::ofstream os(dir / name);
  if (!os) throw InvalidState("cannot write '" + (dir / name).string() + "'");
  fn(os);
  out.push_back(name);
}

}  // namespace

std::vector<std::string> write_outputs(const SolverConfig& cfg, const Mesh& mesh,
                                       const RunResult& res, const std::string& dir) {
  namespace fs = std::filesystem;
  const fs::path root(dir);
  fs::create_directories(root);
  std::vector<std::string> files;
  emit(root, "timeseries.csv", files, [&](std::ostream& os) { write_timeseries_csv(os, res.timeseries); });
  emit(root, "phases.csv", files, [&](std::ostream& os) { write_phases_csv(os, mesh.ranks(), res.phases); });
  emit(root, "work.csv", files, [&](std::ostream& os) { write_work_csv(os, res.work); });
  emit(root, "partition.csv", files, [&](std::ostream& os) { write_partition_csv(os, mesh.partition()); });
  emit(root, "estimate.csv", files, [&](std::ostream& os) { write_estimate_csv(os, res.estimate); });
  if (res.mode == TsMode::Compare || res.mode == TsMode::CompareToEnd) {
    emit(root, "gts_vs_lts.csv", files, [&](std::ostream& os) { write_diff_csv(os, res.diff); });
    emit(root, "phases_gts.csv", files,
         [&](std::ostream& os) { write_phases_csv(os, mesh.ranks(), res.gts_phases); });
  }
  if (cfg.write_fields || cfg.write_vtk) {
    const auto unz = mesh.unzip(res.final_state, cfg.threads);
    const int nvar = res.final_state.nvar;
    if (cfg.write_fields) {
      emit(root, "chi.csv", files, [&](std::ostream& os) { write_field_csv(os, mesh, unz, nvar, 0); });
    }
    if (cfg.write_vtk) {
      const fs::path vdir = root / "vtk";
      fs::create_directories(vdir);
      const std::vector<std::string> names{"chi", "phi"};
      for (std::size_t b = 0; b < mesh.num_blocks(); ++b) {
        emit(vdir, "block_" + std::to_string(b) + ".vtk", files,
             [&](std::ostream& os) { write_block_vtk(os, mesh, b, unz[b], nvar, names); });
        files.back() = "vtk/" + files.back();
      }
    }
  }

  nlohmann::ordered_json m;
  m["config_hash"] = config_hash(cfg);
  m["seed"] = cfg.seed;
  m["threads"] = cfg.threads;
  m["mode"] = mode_name(res.mode);
  m["config"] = nlohmann::json::parse(dump_config(cfg));
  m["mesh"] = {{"leaves", mesh.tree().size()},
               {"blocks", mesh.num_blocks()},
               {"zip_nodes", mesh.num_zip()},
               {"ranks", mesh.ranks()},
               {"min_block_level", mesh.min_block_level()},
               {"max_block_level", mesh.max_block_level()}};
  m["time"] = {{"dt_finest", res.dt_finest}, {"rounds", res.rounds}, {"delta_levels", res.delta_levels}};
  m["estimate"] = {{"L", res.estimate.L},
                   {"W_lts", res.estimate.w_lts},
                   {"W_gts", res.estimate.w_gts},
                   {"S", res.estimate.speedup}};
  if (res.mode == TsMode::Compare || res.mode == TsMode::CompareToEnd) {
    m["measured_speedup"] = res.measured_speedup;
  }
  files.push_back("manifest.json");
  m["files"] = files;
  std::ofstream os(root / "manifest.json");
  if (!os) throw InvalidState("cannot write manifest.json");
  os << m.dump(2) << '\n';
  return files;
}

}  // namespace octlts
