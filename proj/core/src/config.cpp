#include "consflux/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace consflux {

namespace {

namespace pt = boost::property_tree;

const std::map<std::string, std::set<std::string>> kKeys = {
    {"case",
     {"scenario", "mode", "averaging", "weights", "sigma", "cells", "levels", "dt", "end_time",
      "low_permeability", "injected", "snapshot_every", "distortion", "seed"}},
    {"geometry", {"barrier", "channel", "well_rate", "well_size"}},
    {"solver",
     {"flow_tolerance", "pp_tolerance", "transport_tolerance", "max_iterations",
      "flow_preconditioner", "pp_preconditioner", "relaxation"}},
    {"output", {"directory", "csv", "vtk", "flux_dump"}},
};

// True if the stream read cleanly and only blanks remain.
bool consumed(std::istream& in) {
  if (in.fail()) return false;
  if (in.eof()) return true;
  in >> std::ws;
  return in.eof();
}

template <typename T>
T get(const pt::ptree& sec, const std::string& section, const std::string& key, T fallback) {
  const auto v = sec.get_optional<std::string>(key);
  if (!v) return fallback;
  std::istringstream in(*v);
  T out{};
  if constexpr (std::is_same_v<T, bool>) {
    std::string s;
    in >> s;
    if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "0" || s == "no" || s == "off") return false;
    throw ConfigError("[" + section + "] " + key + ": expected a boolean, got '" + *v + "'");
  } else {
    in >> out;
    if (!consumed(in))
      throw ConfigError("[" + section + "] " + key + ": cannot parse '" + *v + "'");
    return out;
  }
}

Rectangle parse_rectangle(const std::string& text, const std::string& key) {
  std::istringstream in(text);
  Rectangle r;
  in >> r.x0 >> r.y0 >> r.x1 >> r.y1;
  if (!consumed(in))
    throw ConfigError("[geometry] " + key + ": expected 'x0 y0 x1 y1', got '" + text + "'");
  return r;
}

}  // namespace

DirichletMode parse_mode(const std::string& s) {
  if (s == "sd") return DirichletMode::Strong;
  if (s == "wd") return DirichletMode::Weak;
  if (s == "rd") return DirichletMode::Recovery;
  throw ConfigError("mode must be sd, wd or rd, got '" + s + "'");
}

Averaging parse_averaging(const std::string& s) {
  if (s == "central") return Averaging::Central;
  if (s == "harmonic") return Averaging::Harmonic;
  throw ConfigError("averaging must be central or harmonic, got '" + s + "'");
}

std::optional<WeightScheme> parse_weights(const std::string& s) {
  if (s == "none") return std::nullopt;
  if (s == "l2") return WeightScheme::Uniform;
  if (s == "wl2") return WeightScheme::InversePermeability;
  throw ConfigError("weights must be none, l2 or wl2, got '" + s + "'");
}

Preconditioner parse_preconditioner(const std::string& s) {
  if (s == "none") return Preconditioner::None;
  if (s == "ssor") return Preconditioner::SSOR;
  if (s == "jacobi") return Preconditioner::Jacobi;
  throw ConfigError("preconditioner must be none, ssor or jacobi, got '" + s + "'");
}

CaseSpec default_case(ScenarioId id) {
  CaseSpec c;
  c.scenario = id;
  switch (id) {
    case ScenarioId::Barrier:
      c.averaging = Averaging::Harmonic;
      c.weights = WeightScheme::InversePermeability;
      break;
    case ScenarioId::Channel:
      c.averaging = Averaging::Harmonic;
      c.weights = WeightScheme::InversePermeability;
      c.low_permeability = 1e-5;
      c.dt = 0.005;
      break;
    case ScenarioId::Wellpair:
      c.averaging = Averaging::Harmonic;
      c.weights = WeightScheme::InversePermeability;
      c.end_time = 10.0;
      // plain CG stalls near 1e-12 on the pure-Neumann well matrix at h = 1/32
      c.flow_solver.tolerance = 1e-11;
      break;
    default:
      break;
  }
  return c;
}

RunConfig parse_run_config(std::istream& in) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("config line " + std::to_string(e.line()) + ": " + e.message());
  }
  for (const auto& [section, body] : tree) {
    const auto it = kKeys.find(section);
    if (it == kKeys.end()) {
      if (body.empty()) throw ConfigError("key '" + section + "' outside a section");
      throw ConfigError("unknown section [" + section + "]");
    }
    for (const auto& [key, value] : body)
      if (!it->second.count(key)) throw ConfigError("unknown key '" + key + "' in [" + section + "]");
  }

  const pt::ptree empty;
  auto section = [&](const std::string& name) -> const pt::ptree& {
    const auto s = tree.get_child_optional(name);
    return s ? *s : empty;
  };
  const auto& cs = section("case");
  const auto& gs = section("geometry");
  const auto& ss = section("solver");
  const auto& os = section("output");

  RunConfig cfg;
  const auto scenario = cs.get_optional<std::string>("scenario");
  if (!scenario) throw ConfigError("[case] scenario is required");
  try {
    cfg.spec = default_case(parse_scenario(*scenario));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  CaseSpec& s = cfg.spec;
  if (auto v = cs.get_optional<std::string>("mode")) s.mode = parse_mode(*v);
  if (auto v = cs.get_optional<std::string>("averaging")) s.averaging = parse_averaging(*v);
  if (auto v = cs.get_optional<std::string>("weights")) s.weights = parse_weights(*v);
  s.sigma = get(cs, "case", "sigma", s.sigma);
  s.cells = get(cs, "case", "cells", s.cells);
  s.levels = get(cs, "case", "levels", s.levels);
  s.dt = get(cs, "case", "dt", s.dt);
  s.end_time = get(cs, "case", "end_time", s.end_time);
  s.low_permeability = get(cs, "case", "low_permeability", s.low_permeability);
  s.injected = get(cs, "case", "injected", s.injected);
  s.snapshot_every = get(cs, "case", "snapshot_every", s.snapshot_every);
  s.distortion = get(cs, "case", "distortion", s.distortion);
  s.seed = get(cs, "case", "seed", s.seed);

  if (auto v = gs.get_optional<std::string>("barrier")) s.barrier = parse_rectangle(*v, "barrier");
  if (auto v = gs.get_optional<std::string>("channel")) {
    s.channel.clear();
    std::istringstream parts(*v);
    std::string part;
    while (std::getline(parts, part, ';')) s.channel.push_back(parse_rectangle(part, "channel"));
  }
  s.well_rate = get(gs, "geometry", "well_rate", s.well_rate);
  s.well_size = get(gs, "geometry", "well_size", s.well_size);

  s.flow_solver.tolerance = get(ss, "solver", "flow_tolerance", s.flow_solver.tolerance);
  s.pp_solver.tolerance = get(ss, "solver", "pp_tolerance", s.pp_solver.tolerance);
  s.transport_solver.tolerance =
      get(ss, "solver", "transport_tolerance", s.transport_solver.tolerance);
  const int iters = get(ss, "solver", "max_iterations", s.flow_solver.max_iterations);
  s.flow_solver.max_iterations = s.pp_solver.max_iterations = s.transport_solver.max_iterations =
      iters;
  if (auto v = ss.get_optional<std::string>("flow_preconditioner"))
    s.flow_solver.preconditioner = parse_preconditioner(*v);
  if (auto v = ss.get_optional<std::string>("pp_preconditioner"))
    s.pp_solver.preconditioner = parse_preconditioner(*v);
  const double w = get(ss, "solver", "relaxation", s.flow_solver.relaxation);
  s.flow_solver.relaxation = s.pp_solver.relaxation = w;

  cfg.output_dir = os.get<std::string>("directory", cfg.output_dir.string());
  cfg.csv = get(os, "output", "csv", cfg.csv);
  cfg.vtk = get(os, "output", "vtk", cfg.vtk);
  cfg.flux_dump = get(os, "output", "flux_dump", cfg.flux_dump);

  try {
    s.validate();
    s.flow_solver.validate();
    s.pp_solver.validate();
    s.transport_solver.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  return parse_run_config(in);
}

}  // namespace consflux
