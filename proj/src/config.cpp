#include "hfvrom/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace hfvrom {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void config_fail(int line, const std::string& what) {
  fail(ErrorKind::kConfigError, "line " + std::to_string(line) + ": " + what);
}

double to_double(std::string_view v, const std::string& key, int line) {
  double out = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || !std::isfinite(out))
    config_fail(line, "'" + key + "' expects a number, got '" + std::string(v) + "'");
  return out;
}

int to_int(std::string_view v, const std::string& key, int line) {
  int out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    config_fail(line, "'" + key + "' expects an integer, got '" + std::string(v) + "'");
  return out;
}

bool to_bool(std::string_view v, const std::string& key, int line) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  config_fail(line, "'" + key + "' expects true or false, got '" + std::string(v) + "'");
}

double positive(double x, const std::string& key, int line) {
  if (!(x > 0.0)) config_fail(line, "'" + key + "' must be positive");
  return x;
}

double fraction(double x, const std::string& key, int line) {
  if (!(x > 0.0 && x <= 1.0)) config_fail(line, "'" + key + "' must lie in (0, 1]");
  return x;
}

int positive_int(int x, const std::string& key, int line) {
  if (x < 1) config_fail(line, "'" + key + "' must be at least 1");
  return x;
}

using Setter = std::function<void(RunConfig&, std::string_view, const std::string&, int)>;

struct KeyInfo {
  Setter set;
  const char* help;
};

const std::map<std::string, KeyInfo>& key_table() {
  static const std::map<std::string, KeyInfo> table = {
      {"case.name", {[](RunConfig& c, std::string_view v, const std::string& k, int l) {
                       if (v != "manufactured" && v != "cavity")
                         config_fail(l, "'" + k + "' must be manufactured or cavity");
                       c.case_name = std::string(v);
                     },
                     "manufactured | cavity (required)"}},
      {"case.n", {[](RunConfig& c, std::string_view v, const std::string& k, int l) {
                    c.n = positive_int(to_int(v, k, l), k, l);
                  },
                  "cube subdivisions per axis (required unless mesh is given)"}},
      {"case.mesh", {[](RunConfig& c, std::string_view v, const std::string&, int) { c.mesh_path = std::string(v); },
                     "mesh file in HFM 1 format (optional)"}},
      {"case.output", {[](RunConfig& c, std::string_view v, const std::string&, int) { c.output = std::string(v); },
                       "output directory (default out)"}},
      {"fluid.rho", {[](RunConfig& c, std::string_view v, const std::string& k, int l) {
                       c.rho = positive(to_double(v, k, l), k, l);
                     },
                     "density (default 1)"}},
      {"fluid.mu", {[](RunConfig& c, std::string_view v, const std::string& k, int l) {
                      c.mu = to_double(v, k, l);
                      if (*c.mu < 0.0) config_fail(l, "'" + k + "' must be non-negative");
                    },
                    "dynamic viscosity (default 1e-2)"}},
      {"fluid.diffusivity", {[](RunConfig& c, std::string_view v, const std::string& k, int l) {
                               c.diffusivity = to_double(v, k, l);
                               if (*c.diffusivity < 0.0) config_fail(l, "'" + k + "' must be non-negative");
                             },
                             "species diffusivity (default 0 manufactured, 1e-2 cavity)"}},
      {"time.cfl", {[](RunConfig& c, std::string_view v, const std::string& k, int l) {
                      c.cfl = positive(to_double(v, k, l), k, l);
                    },
                    "CFL number (default 1)"}},
      {"time.t_end", {[](RunConfig& c, std::string_view v, const std::string& k, int l) {
                        c.t_end = positive(to_double(v, k, l), k, l);
                      },
                      "final time (default 2.5 manufactured, 5 cavity)"}},
      {"time.snapshot_interval", {[](RunConfig& c, std::string_view v, const std::string& k, int l) {
                                    c.snapshot_interval = positive(to_double(v, k, l), k, l);
                                  },
                                  "time between snapshots (default 0.01)"}},
      {"pod.kappa_wu", {[](RunConfig& c, std::string_view v, const std::string& k, int l) {
                          c.kappa_wu = fraction(to_double(v, k, l), k, l);
                        },
                        "momentum energy threshold (default 0.99999 manufactured, 0.9999 cavity)"}},
      {"pod.kappa_pi", {[](RunConfig& c, std::string_view v, const std::string& k, int l) {
                          c.kappa_pi = fraction(to_double(v, k, l), k, l);
                        },
                        "pressure energy threshold (default 0.9999 manufactured, 0.99 cavity)"}},
      {"pod.kappa_wy", {[](RunConfig& c, std::string_view v, const std::string& k, int l) {
                          c.kappa_wy = fraction(to_double(v, k, l), k, l);
                        },
                        "species energy threshold (default 0.9999)"}},
      {"pod.n_wu", {[](RunConfig& c, std::string_view v, const std::string& k, int l) {
                      c.counts.momentum = positive_int(to_int(v, k, l), k, l);
                    },
                    "fixed momentum mode count, overrides kappa_wu"}},
      {"pod.n_pi", {[](RunConfig& c, std::string_view v, const std::string& k, int l) {
                      c.counts.pressure = positive_int(to_int(v, k, l), k, l);
                    },
                    "fixed pressure mode count, overrides kappa_pi"}},
      {"pod.n_wy", {[](RunConfig& c, std::string_view v, const std::string& k, int l) {
                      c.counts.species = positive_int(to_int(v, k, l), k, l);
                    },
                    "fixed species mode count, overrides kappa_wy"}},
      {"rom.dt_divisor", {[](RunConfig& c, std::string_view v, const std::string& k, int l) {
                            c.rom.dt_divisor = positive_int(to_int(v, k, l), k, l);
                          },
                          "reduced step = snapshot interval / divisor (default 50)"}},
      {"rom.ablate_pressure", {[](RunConfig& c, std::string_view v, const std::string& k, int l) {
                                 c.rom.model.ablate_pressure = to_bool(v, k, l);
                               },
                               "drop the pressure gradient coupling (default false)"}},
      {"rom.anchor_pressure", {[](RunConfig& c, std::string_view v, const std::string& k, int l) {
                                 c.rom.model.anchor_pressure = to_bool(v, k, l);
                               },
                               "constant pressure shift fitted at the second snapshot (default false)"}},
      {"rom.convection", {[](RunConfig& c, std::string_view v, const std::string& k, int l) {
                            if (v == "facet")
                              c.rom.offline.convection = ConvectionForm::kFacet;
                            else if (v == "nodal")
                              c.rom.offline.convection = ConvectionForm::kNodal;
                            else
                              config_fail(l, "'" + k + "' must be facet or nodal");
                          },
                          "reduced convection form: facet | nodal (default facet)"}},
      {"rom.interior_residual", {[](RunConfig& c, std::string_view v, const std::string& k, int l) {
                                   c.rom.offline.interior_residual = to_bool(v, k, l);
                                 },
                                 "Galerkin residual on interior cells only (default true)"}},
      {"rom.upwind_dissipation", {[](RunConfig& c, std::string_view v, const std::string& k, int l) {
                                    c.rom.offline.upwind_dissipation = to_bool(v, k, l);
                                  },
                                  "snapshot-sampled upwind dissipation (default true)"}},
      {"solver.tolerance", {[](RunConfig& c, std::string_view v, const std::string& k, int l) {
                              c.tolerance = positive(to_double(v, k, l), k, l);
                            },
                            "pressure CG relative tolerance (default 1e-10)"}},
  };
  return table;
}

}  // namespace

CaseDefinition RunConfig::make_case() const {
  CaseDefinition c = case_by_name(case_name);
  if (rho) c.params.rho = *rho;
  if (mu) c.params.mu = *mu;
  if (diffusivity) c.params.diffusivity = *diffusivity;
  if (cfl) c.time.cfl = *cfl;
  if (t_end) c.time.t_end = *t_end;
  if (snapshot_interval) c.time.snapshot_interval = *snapshot_interval;
  if (kappa_wu) c.kappa.momentum = *kappa_wu;
  if (kappa_pi) c.kappa.pressure = *kappa_pi;
  if (kappa_wy) c.kappa.species = *kappa_wy;
  try {
    c.params.validate();
    c.time.validate();
    c.kappa.validate();
  } catch (const Error& e) {
    fail(ErrorKind::kConfigError, e.what());
  }
  return c;
}

RunConfig parse_config(std::string_view text) {
  RunConfig cfg;
  std::string section;
  std::set<std::string> seen;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string_view s = raw;
    if (const auto hash = s.find('#'); hash != std::string_view::npos) s = s.substr(0, hash);
    s = trim(s);
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') config_fail(line, "malformed section header");
      section = std::string(trim(s.substr(1, s.size() - 2)));
      static const std::set<std::string> sections = {"case", "fluid", "time", "pod", "rom", "solver"};
      if (!sections.count(section)) config_fail(line, "unknown section [" + section + "]");
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string_view::npos) config_fail(line, "expected key = value");
    const std::string key(trim(s.substr(0, eq)));
    const std::string_view value = trim(s.substr(eq + 1));
    if (section.empty()) config_fail(line, "key '" + key + "' appears before any section");
    const std::string full = section + "." + key;
    const auto it = key_table().find(full);
    if (it == key_table().end()) config_fail(line, "unknown key '" + key + "' in [" + section + "]");
    if (!seen.insert(full).second) config_fail(line, "duplicate key '" + key + "'");
    if (value.empty()) config_fail(line, "key '" + key + "' has no value");
    it->second.set(cfg, value, key, line);
  }
  if (!seen.count("case.name")) fail(ErrorKind::kConfigError, "missing required key 'name' in [case]");
  if (!seen.count("case.n") && !seen.count("case.mesh"))
    fail(ErrorKind::kConfigError, "missing required key 'n' in [case] (or give 'mesh')");
  cfg.make_case();  // range checks that need the preset
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kIoError, "cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  RunConfig cfg = parse_config(ss.str());
  // Relative mesh paths resolve against the config file.
  if (!cfg.mesh_path.empty() && cfg.mesh_path.is_relative()) cfg.mesh_path = path.parent_path() / cfg.mesh_path;
  return cfg;
}

std::string config_reference() {
  std::string out = "Config keys (INI, '#' comments):\n";
  std::string section;
  for (const char* s : {"case", "fluid", "time", "pod", "rom", "solver"}) {
    out += "  [" + std::string(s) + "]\n";
    for (const auto& [key, info] : key_table())
      if (key.rfind(std::string(s) + ".", 0) == 0) out += "    " + key.substr(key.find('.') + 1) + ": " + info.help + "\n";
  }
  return out;
}

}  // namespace hfvrom
