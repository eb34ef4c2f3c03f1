#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mnls/evolve.hpp"
#include "mnls/groundstate.hpp"
#include "mnls/nonlinear.hpp"

namespace mnls {

/// Flat INI document: section -> key -> raw value.
using IniDocument = std::map<std::string, std::map<std::string, std::string>>;

/// Parses `[section]` headers and `key = value` lines; `#` anywhere and a leading `;` start
/// comments. Duplicate keys and text outside a section are errors.
IniDocument parse_ini(std::istream& is);

struct InitialData {
  std::string kind = "gaussian";  // gaussian | sech | random | file
  std::filesystem::path file;
  std::vector<double> amplitude{1.0};  // per component
  double width = 1.0;
  std::vector<double> center;          // per axis
  std::vector<double> momentum;        // per axis, multiplies by exp(i k.x)
};

struct RunConfig {
  GridSpec grid;
  int m = 1;

  std::string A_kind = "zero";  // zero | constant | harmonic_gauge | file
  std::vector<double> A_constant;
  double B = 0.0;
  std::filesystem::path A_file;
  std::string V_kind = "constant";  // constant | harmonic | file
  double V_value = 0.0;
  double V_omega = 1.0;
  double V_offset = 0.0;
  std::filesystem::path V_file;
  double V_p = kInf;  // V in L^p + L^inf

  LocalSpec local;
  std::optional<NonlocalSpec> nonlocal;

  EvolveConfig evolve;
  InitialData initial;

  GroundStateConfig groundstate;
  InitialData groundstate_initial;

  std::uint64_t seed = 0;
};

/// Builds a validated RunConfig; throws ValidationError naming the section/key.
RunConfig config_from_ini(const IniDocument& doc, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

PotentialSet build_potentials(const RunConfig& cfg, const GridPtr& grid);
System build_system(const RunConfig& cfg, const GridPtr& grid);
/// `seed` only affects the random kind (band-limited field of correlation
/// length `width`, L^2 norm `amplitude`).
Field build_initial(const InitialData& init, int m, const GridPtr& grid, std::uint64_t seed = 0);

}  // namespace mnls
