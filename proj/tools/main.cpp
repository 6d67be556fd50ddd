// consflux: command-line driver for the consistency, convergence and
// flow/transport studies, plus standalone flux repair.
//
// Exit codes: 0 success, 1 numerical failure, 2 bad input or configuration.

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "consflux/config.hpp"
#include "consflux/harness.hpp"
#include "consflux/mesh.hpp"
#include "consflux/output.hpp"
#include "consflux/postprocess.hpp"

namespace fs = std::filesystem;
using namespace consflux;

namespace {

constexpr int kOk = 0;
constexpr int kNumerical = 1;
constexpr int kConfig = 2;

std::string sci(double v, int digits = 4) {
  std::ostringstream s;
  s << std::setprecision(digits) << v;
  return s.str();
}

void ensure_dir(const fs::path& dir) {
  if (dir.empty()) return;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory " + dir.string() + ": " + ec.message());
}

void print_consistency(const CaseSpec& spec, const ConsistencyResult& r) {
  std::cout << to_string(spec.scenario) << "  " << spec.label() << "\n";
  std::cout << std::left << std::setw(6) << "" << std::setw(14) << "residual" << std::setw(14)
            << "flux_error" << "imbalance\n";
  std::cout << std::setw(6) << "U_h" << std::setw(14) << sci(r.residual_u) << std::setw(14)
            << sci(r.error_u) << sci(r.imbalance_u) << "\n";
  std::cout << std::setw(6) << "V_h" << std::setw(14) << sci(r.residual_v) << std::setw(14)
            << sci(r.error_v) << sci(r.imbalance_v) << "\n";
  std::cout << "line integrals of u.n over x = const\n";
  std::cout << std::setw(10) << "x" << std::setw(14) << "exact" << std::setw(14) << "U_h" << "V_h\n";
  for (const auto& l : r.lines)
    std::cout << std::setw(10) << sci(l.x) << std::setw(14) << sci(l.exact, 6) << std::setw(14)
              << sci(l.u, 6) << sci(l.v, 6) << "\n";
  std::cout << std::right;
}

Table consistency_table(const ConsistencyResult& r) {
  Table t;
  t.columns = {"residual_U", "residual_V", "error_U", "error_V", "imbalance_U", "imbalance_V"};
  t.rows.push_back(
      {r.residual_u, r.residual_v, r.error_u, r.error_v, r.imbalance_u, r.imbalance_v});
  return t;
}

void dump_consistency(const ConsistencyResult& r, const fs::path& dir) {
  ensure_dir(dir);
  save_mesh(r.mesh, dir / "mesh.txt");
  write_flux_csv(r.mesh, r.flux_u, dir / "flux_u.csv");
  write_flux_csv(r.mesh, r.flux_v, dir / "flux_v.csv");
  std::ofstream src(dir / "source.csv");
  if (!src) throw std::runtime_error("cannot write " + (dir / "source.csv").string());
  write_cell_csv(r.source, "source", src);
}

void print_convergence(const ConvergenceTable& t) {
  std::cout << std::left << std::setw(12) << "h";
  for (double h : t.h) std::cout << std::setw(20) << sci(h);
  std::cout << "\n";
  for (const auto& name : t.names) {
    const auto& e = t.column(name);
    const auto rates = t.rates(name);
    std::cout << std::setw(12) << name;
    for (std::size_t k = 0; k < e.size(); ++k) {
      std::string cell = sci(e[k]);
      if (k > 0) cell += " (" + (std::isnan(rates[k - 1]) ? std::string("-") : sci(rates[k - 1], 3)) + ")";
      std::cout << std::setw(20) << cell;
    }
    std::cout << "\n";
  }
  std::cout << std::right;
}

void write_scenario(const RunConfig& cfg, const ScenarioResult& r) {
  const fs::path& dir = cfg.output_dir;
  ensure_dir(dir);
  if (cfg.csv) {
    Table series;
    series.columns = {"time", "overshoot", "min_c", "max_c", "production"};
    for (const auto& s : r.series)
      series.rows.push_back({s.time, s.overshoot, s.min_c, s.max_c, s.production});
    write_csv(series, dir / "series.csv");
    std::ofstream c(dir / "concentration.csv");
    if (!c) throw std::runtime_error("cannot write " + (dir / "concentration.csv").string());
    write_cell_csv(r.concentration, "concentration", c);
  }
  if (cfg.vtk) {
    int k = 0;
    for (const auto& [time, c] : r.snapshots) {
      std::ostringstream name;
      name << "concentration_" << std::setw(4) << std::setfill('0') << k++ << ".vtk";
      write_vtk(r.mesh, {{"concentration", c}, {"permeability", r.permeability}}, dir / name.str());
    }
  }
  if (cfg.flux_dump) {
    save_mesh(r.mesh, dir / "mesh.txt");
    write_flux_csv(r.mesh, r.flux_u, dir / "flux_u.csv");
    write_flux_csv(r.mesh, r.flux, dir / "flux.csv");
  }
}

int cmd_run(const fs::path& config_path) {
  const RunConfig cfg = load_run_config(config_path);
  const CaseSpec& spec = cfg.spec;
  if (is_consistency(spec.scenario)) {
    const auto r = run_consistency(spec);
    print_consistency(spec, r);
    if (cfg.csv) {
      ensure_dir(cfg.output_dir);
      write_csv(consistency_table(r), cfg.output_dir / "consistency.csv");
    }
    if (cfg.flux_dump) dump_consistency(r, cfg.output_dir);
    return kOk;
  }
  if (is_convergence(spec.scenario)) {
    const auto t = run_convergence(spec, spec.levels);
    print_convergence(t);
    if (cfg.csv) {
      ensure_dir(cfg.output_dir);
      write_csv(to_table(t), cfg.output_dir / "convergence.csv");
    }
    return kOk;
  }

  const ScenarioResult r = run_scenario(spec);
  const auto& last = r.series.back();
  double worst = 0.0;
  for (const auto& s : r.series) worst = std::max(worst, s.overshoot);
  std::cout << to_string(spec.scenario) << "  " << spec.label() << "  t = " << last.time << "\n";
  std::cout << "residual U_h      " << sci(r.residual_u) << "\n";
  if (r.residual_v)
    std::cout << "residual V_h      " << sci(*r.residual_v) << "  (" << r.pp_iterations
              << " CG iterations)\n";
  std::cout << "overshoot         " << sci(last.overshoot) << "  (max over time " << sci(worst)
            << ")\n";
  std::cout << "min/max c         " << sci(last.min_c) << " / " << sci(last.max_c, 6) << "\n";
  if (spec.scenario != ScenarioId::Wellpair)
    std::cout << "region mean c     " << sci(r.region_mean) << "\n";
  if (r.breakthrough) std::cout << "breakthrough      " << sci(*r.breakthrough) << "\n";
  write_scenario(cfg, r);
  return kOk;
}

struct PostprocessArgs {
  fs::path mesh, flux, source, permeability, output;
  std::string weights = "l2";
  double tolerance = 1e-13;
  bool fix_dirichlet = false;
};

int cmd_postprocess(const PostprocessArgs& a) {
  const Mesh mesh = load_mesh(a.mesh);
  const FaceField u = read_flux_csv(mesh, a.flux);
  const CellField q = read_cell_csv(mesh.num_elements(), a.source);
  CellField k(mesh.num_elements(), 1.0);
  if (!a.permeability.empty()) k = read_cell_csv(mesh.num_elements(), a.permeability);
  for (double v : k)
    if (!(v > 0.0)) throw ConfigError("permeability must be positive in every element");
  const auto weights = parse_weights(a.weights);
  if (!weights) throw ConfigError("postprocess needs --weights l2 or wl2");

  const SourceSpec src = SourceSpec::from_integrals(q);
  const auto before = conservation_report(u, src, mesh);
  const auto pp = postprocess_flux(u, src, mesh, *weights, PermeabilityField::from_scalar(k),
                                   SolverConfig{a.tolerance}, a.fix_dirichlet);
  std::cerr << "residual " << sci(before.norm) << " -> " << sci(pp.report.norm) << ", "
            << pp.iterations << " CG iterations\n";
  if (a.output.empty() || a.output == "-") {
    write_flux_csv(mesh, pp.flux, std::cout);
  } else {
    ensure_dir(a.output.parent_path());
    write_flux_csv(mesh, pp.flux, a.output);
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conservative flux postprocessing for CG Darcy flow with DG(0) transport"};
  app.require_subcommand(1);

  // consistency
  auto* cons = app.add_subcommand("consistency", "stationary -div grad p = 2 on a test grid");
  std::string grid, alpha = "sd", averaging = "central", weights = "l2";
  double sigma = 10.0;
  fs::path cons_csv, cons_dump;
  cons->add_option("--grid", grid, "uniform1d | nonuniform1d | uniform2d | distorted | nonmatching")
      ->required()
      ->check(CLI::IsMember({"uniform1d", "nonuniform1d", "uniform2d", "distorted", "nonmatching"}));
  cons->add_option("--alpha", alpha, "Dirichlet treatment")
      ->check(CLI::IsMember({"sd", "wd", "rd"}));
  cons->add_option("--sigma", sigma, "weak Dirichlet penalty");
  cons->add_option("--averaging", averaging)->check(CLI::IsMember({"central", "harmonic"}));
  cons->add_option("--weights", weights)->check(CLI::IsMember({"l2", "wl2"}));
  cons->add_option("--csv", cons_csv, "write the norms as a one-row csv");
  cons->add_option("--dump", cons_dump, "directory for mesh.txt, flux_u.csv, flux_v.csv, source.csv");

  // converge
  auto* conv = app.add_subcommand("converge", "manufactured transient convergence study");
  std::string conv_case = "smooth", conv_alpha = "sd";
  int levels = 4;
  fs::path conv_csv;
  conv->add_option("--case", conv_case)->check(CLI::IsMember({"smooth", "distorted"}));
  conv->add_option("--levels", levels)->check(CLI::Range(2, 8));
  conv->add_option("--alpha", conv_alpha)->check(CLI::IsMember({"sd", "rd"}));
  conv->add_option("--csv", conv_csv, "write errors and rates");

  // run
  auto* run = app.add_subcommand("run", "run an INI-configured case");
  fs::path config;
  run->add_option("--config", config, "INI file")->required();

  // postprocess
  auto* post = app.add_subcommand("postprocess", "make a face flux locally conservative");
  PostprocessArgs pa;
  post->add_option("--mesh", pa.mesh, "mesh file")->required()->check(CLI::ExistingFile);
  post->add_option("--flux", pa.flux, "face flux csv (face_id,...,g0,g1)")
      ->required()
      ->check(CLI::ExistingFile);
  post->add_option("--source", pa.source, "per-element source integrals (element_id,value)")
      ->required()
      ->check(CLI::ExistingFile);
  post->add_option("--weights", pa.weights)->check(CLI::IsMember({"l2", "wl2"}));
  post->add_option("--permeability", pa.permeability, "per-element k (element_id,value)")
      ->check(CLI::ExistingFile);
  post->add_option("--tolerance", pa.tolerance, "relative CG tolerance");
  post->add_flag("--fix-dirichlet", pa.fix_dirichlet, "leave Dirichlet faces uncorrected");
  post->add_option("-o,--output", pa.output, "output csv, stdout if omitted");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfig;
  }

  try {
    if (*cons) {
      CaseSpec spec;
      spec.scenario = parse_scenario("consistency-" + grid);
      spec.mode = parse_mode(alpha);
      spec.averaging = parse_averaging(averaging);
      spec.weights = parse_weights(weights);
      spec.sigma = sigma;
      const auto r = run_consistency(spec);
      print_consistency(spec, r);
      if (!cons_csv.empty()) write_csv(consistency_table(r), cons_csv);
      if (!cons_dump.empty()) dump_consistency(r, cons_dump);
      return kOk;
    }
    if (*conv) {
      CaseSpec spec;
      spec.scenario = conv_case == "smooth" ? ScenarioId::ConvergenceSmooth
                                            : ScenarioId::ConvergenceDistortedFamily;
      spec.mode = parse_mode(conv_alpha);
      const auto t = run_convergence(spec, levels);
      print_convergence(t);
      if (!conv_csv.empty()) write_csv(to_table(t), conv_csv);
      return kOk;
    }
    if (*run) return cmd_run(config);
    if (*post) return cmd_postprocess(pa);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const ParseError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kConfig;
  } catch (const SolverError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumerical;
  }
  return kOk;
}
