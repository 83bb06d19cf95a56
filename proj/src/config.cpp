#include "octlts/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iomanip>
#include <set>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "octlts/rk.hpp"

namespace octlts {

namespace {

using json = nlohmann::json;

struct Field {
  const char* key;
  std::function<void(SolverConfig&, const json&)> read;
  std::function<json(const SolverConfig&)> write;
};

template <class T>
T as(const json& v, const char* key) {
  try {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError(key, "expected a boolean");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw ConfigError(key, "expected an integer");
      if constexpr (std::is_unsigned_v<T>) {
        if (v.get<long long>() < 0) throw ConfigError(key, "expected a non-negative integer");
      }
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw ConfigError(key, "expected a number");
    } else {
      if (!v.is_string()) throw ConfigError(key, "expected a string");
    }
    return v.get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(key, e.what());
  }
}

#define OCTLTS_FIELD(name)                                                            \
  Field {                                                                             \
    #name, [](SolverConfig& c, const json& v) { c.name = as<decltype(c.name)>(v, #name); }, \
        [](const SolverConfig& c) { return json(c.name); }                            \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> f = {
      OCTLTS_FIELD(dimension),
      OCTLTS_FIELD(maxdepth),
      OCTLTS_FIELD(min_level),
      OCTLTS_FIELD(wavelet_tol),
      OCTLTS_FIELD(coarsen_factor),
      OCTLTS_FIELD(domain_lo),
      OCTLTS_FIELD(domain_hi),
      OCTLTS_FIELD(cfl),
      OCTLTS_FIELD(points_per_octant),
      OCTLTS_FIELD(pad),
      OCTLTS_FIELD(tableau),
      OCTLTS_FIELD(nonlinear),
      OCTLTS_FIELD(end_time),
      OCTLTS_FIELD(ranks),
      OCTLTS_FIELD(sfc),
      OCTLTS_FIELD(partition_mode),
      OCTLTS_FIELD(threads),
      OCTLTS_FIELD(output_dir),
      OCTLTS_FIELD(seed),
      OCTLTS_FIELD(ts_mode),
      OCTLTS_FIELD(wave_k_chi),
      OCTLTS_FIELD(wave_k_phi),
      OCTLTS_FIELD(id_profile),
      Field{"id_center",
            [](SolverConfig& c, const json& v) {
              if (!v.is_array() || v.size() < 2 || v.size() > 3) {
                throw ConfigError("id_center", "expected an array of 2 or 3 numbers");
              }
              c.id_center = {0.0, 0.0, 0.0};
              for (std::size_t i = 0; i < v.size(); ++i) c.id_center[i] = as<double>(v[i], "id_center");
            },
            [](const SolverConfig& c) { return json(c.id_center); }},
      OCTLTS_FIELD(id_width),
      OCTLTS_FIELD(id_amplitude),
      OCTLTS_FIELD(id_axis),
      OCTLTS_FIELD(analysis_halfwidth),
      OCTLTS_FIELD(write_vtk),
      OCTLTS_FIELD(write_fields),
  };
  return f;
}

#undef OCTLTS_FIELD

void require(bool ok, const char* key, const std::string& what) {
  if (!ok) throw ConfigError(key, what);
}

json env_value(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception&) {
    return json(text);
  }
}

std::string upper(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::toupper(c); });
  return s;
}

}  // namespace

void SolverConfig::validate() const {
  require(dimension == 2 || dimension == 3, "dimension", "must be 2 or 3");
  require(maxdepth >= 1 && maxdepth <= 18, "maxdepth", "must lie in [1, 18]");
  require(min_level >= 0 && min_level <= maxdepth, "min_level", "must lie in [0, maxdepth]");
  require(wavelet_tol > 0.0, "wavelet_tol", "must be positive");
  require(coarsen_factor > 0.0 && coarsen_factor < 1.0, "coarsen_factor", "must lie in (0, 1)");
  require(domain_hi > domain_lo, "domain_hi", "must exceed domain_lo");
  require(cfl > 0.0, "cfl", "must be positive");
  require(points_per_octant >= 5 && points_per_octant % 2 == 1 && points_per_octant <= 33,
          "points_per_octant", "must be odd and lie in [5, 33]");
  require(pad >= 2 && pad < points_per_octant, "pad", "must lie in [2, points_per_octant)");
  {
    const auto names = tableau_names();
    require(std::find(names.begin(), names.end(), tableau) != names.end(), "tableau",
            "must be one of euler, rk2, rk3, rk4");
  }
  require(end_time >= 0.0, "end_time", "must be >= 0");
  require(ranks >= 1 && ranks <= 4096, "ranks", "must lie in [1, 4096]");
  require(sfc == "hilbert" || sfc == "morton", "sfc", "must be hilbert or morton");
  require(partition_mode == "lts" || partition_mode == "gts", "partition_mode", "must be lts or gts");
  require(threads >= 1 && threads <= 256, "threads", "must lie in [1, 256]");
  require(!output_dir.empty(), "output_dir", "must not be empty");
  require(ts_mode >= 0 && ts_mode <= 3, "ts_mode", "must be 0, 1, 2 or 3");
  require(wave_k_chi >= 0.0, "wave_k_chi", "must be >= 0");
  require(wave_k_phi >= 0.0, "wave_k_phi", "must be >= 0");
  require(id_profile == "gaussian" || id_profile == "plane", "id_profile", "must be gaussian or plane");
  require(id_width > 0.0, "id_width", "must be positive");
  require(id_axis >= 0 && id_axis < dimension, "id_axis", "must lie in [0, dimension)");
  require(analysis_halfwidth > 0.0, "analysis_halfwidth", "must be positive");
}

SolverConfig parse_config_string(const std::string& text, bool use_env) {
  SolverConfig cfg;
  json doc;
  const bool blank = text.find_first_not_of(" \t\r\n") == std::string::npos;
  if (!blank) {
    try {
      doc = json::parse(text);
    } catch (const json::exception& e) {
      throw ConfigError("<document>", std::string("parse error: ") + e.what());
    }
    if (!doc.is_object()) throw ConfigError("<document>", "top level must be an object");
  } else {
    doc = json::object();
  }
  std::set<std::string> known;
  for (const Field& f : fields()) known.insert(f.key);
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    if (!known.count(it.key())) throw ConfigError(it.key(), "unknown key");
  }
  for (const Field& f : fields()) {
    if (doc.contains(f.key)) f.read(cfg, doc[f.key]);
    if (use_env) {
      const std::string var = "LTS_" + upper(f.key);
      if (const char* v = std::getenv(var.c_str())) f.read(cfg, env_value(v));
    }
  }
  cfg.validate();
  return cfg;
}

SolverConfig parse_config(const std::string& path, bool use_env) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_string(ss.str(), use_env);
}

std::string dump_config(const SolverConfig& cfg) {
  json doc = json::object();
  for (const Field& f : fields()) doc[f.key] = f.write(cfg);
  return doc.dump(2) + "\n";
}

std::string config_hash(const SolverConfig& cfg) {
  // FNV-1a over the canonical dump
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : dump_config(cfg)) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

}  // namespace octlts
