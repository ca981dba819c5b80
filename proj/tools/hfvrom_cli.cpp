#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <thread>

#include "hfvrom/config.hpp"
#include "hfvrom/io.hpp"
#include "hfvrom/parallel.hpp"
#include "hfvrom/pipeline.hpp"

namespace fs = std::filesystem;
using namespace hfvrom;

namespace {

struct Paths {
  fs::path dir;
  fs::path mesh() const { return dir / "mesh.hfm"; }
  fs::path snapshots() const { return dir / "snapshots.hfvrom"; }
  fs::path bases() const { return dir / "bases.hfvpod"; }
  fs::path eigenvalues() const { return dir / "eigenvalues.csv"; }
  fs::path operators() const { return dir / "operators.hfvops"; }
  fs::path coefficients(bool ablated) const { return dir / (ablated ? "coefficients_ablated.csv" : "coefficients.csv"); }
  fs::path errors(bool ablated) const { return dir / (ablated ? "errors_ablated.csv" : "errors.csv"); }
  fs::path fields() const { return dir / "fields"; }
};

std::unique_ptr<Discretization> make_discretization(const RunConfig& cfg) {
  if (!cfg.mesh_path.empty()) {
    auto in = io::open_input(cfg.mesh_path, false);
    return std::make_unique<Discretization>(read_mesh(in));
  }
  return std::make_unique<Discretization>(build_cube_primal(cfg.n));
}

template <class T>
T load(const fs::path& path, T (*reader)(std::istream&)) {
  auto in = io::open_input(path);
  return reader(in);
}

void dump_state(const fs::path& path, const Discretization& disc, const FomState& s, const std::string& title) {
  io::atomic_write(path, [&](std::ostream& out) { io::write_vtk(out, disc.primal, disc.dual, s, title); }, false);
}

std::string stamp(double t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", t);
  return buf;
}

void note(const std::string& msg) { std::cerr << msg << '\n'; }

// Stage bodies shared by the single-stage commands and `pipeline`.

SnapshotSet stage_fom(const RunConfig& cfg, const CaseDefinition& c, const Discretization& disc, const Paths& p) {
  const auto run = run_fom(c, disc, cfg.tolerance);
  const auto& s = run.snapshots;
  io::atomic_write(p.snapshots(), [&](std::ostream& out) { io::write_snapshots(out, s); });
  for (Eigen::Index n : {Eigen::Index(0), s.size() - 1})
    dump_state(p.fields() / ("fom_t" + stamp(s.times[n]) + ".vtk"), disc, s.state(n), c.name + " full order");
  note("fom: " + std::to_string(run.diagnostics.steps) + " steps, " + std::to_string(s.size()) +
       " snapshots, max relative divergence " + io::format_double(run.diagnostics.max_divergence));
  return s;
}

RomBases stage_pod(const RunConfig& cfg, const CaseDefinition& c, const Discretization& disc,
                   const SnapshotSet& snapshots, const Paths& p) {
  RomBases bases = build_bases(c, disc, snapshots, cfg.counts);
  io::atomic_write(p.bases(), [&](std::ostream& out) { io::write_bases(out, bases); });
  io::atomic_write(p.eigenvalues(), [&](std::ostream& out) { io::write_eigenvalue_csv(out, bases); }, false);
  note("pod: modes (momentum, pressure, species) = (" + std::to_string(bases.momentum.size()) + ", " +
       std::to_string(bases.pressure.size()) + ", " + std::to_string(bases.species ? bases.species->size() : 0) + ")");
  return bases;
}

RomOperators stage_offline(const RunConfig& cfg, const CaseDefinition& c, const Discretization& disc,
                           const SnapshotSet& snapshots, const RomBases& bases, const Paths& p) {
  RomOperators ops = assemble_operators(disc.ops, bases, c.params, c.bc, assembly_options(c, disc, snapshots, cfg.rom));
  io::atomic_write(p.operators(), [&](std::ostream& out) { io::write_operators(out, ops); });
  return ops;
}

std::vector<RomState> stage_online(const RunConfig& cfg, const CaseDefinition& c, const Discretization& disc,
                                   const SnapshotSet& snapshots, const RomBases& bases, const RomOperators& ops,
                                   bool ablate, const Paths& p) {
  RomRunSettings settings = cfg.rom;
  settings.model.ablate_pressure = ablate;
  const auto rom = run_rom(ops, bases, disc, snapshots, settings);
  io::atomic_write(p.coefficients(ablate), [&](std::ostream& out) { io::write_coefficients_csv(out, rom); }, false);
  const std::string tag = ablate ? "rom_ablated_t" : "rom_t";
  for (const auto* s : {&rom.front(), &rom.back()})
    dump_state(p.fields() / (tag + stamp(s->time) + ".vtk"), disc, reconstruct(*s, bases), c.name + " reduced");
  return rom;
}

ErrorReport stage_compare(const Discretization& disc, const SnapshotSet& snapshots, const RomBases& bases,
                          const std::vector<RomState>& rom, bool ablate, const Paths& p) {
  ErrorReport report = compare(disc, bases, snapshots, rom);
  io::atomic_write(p.errors(ablate), [&](std::ostream& out) { io::write_error_csv(out, report); }, false);
  std::string msg = std::string(ablate ? "compare (ablated)" : "compare") +
                    ": mean relative error momentum " + io::format_double(report.mean(&ErrorRow::rom_wu)) +
                    " (projection " + io::format_double(report.mean(&ErrorRow::proj_wu)) + "), pressure " +
                    io::format_double(report.mean(&ErrorRow::rom_pi));
  if (report.has_species) msg += ", species " + io::format_double(report.mean(&ErrorRow::rom_wy));
  note(msg);
  return report;
}

std::vector<RomState> load_coefficients(const fs::path& path, const RomBases& bases) {
  auto in = io::open_input(path, false);
  return io::read_coefficients_csv(in, bases.momentum.size(), bases.pressure.size(),
                                   bases.species ? bases.species->size() : 0);
}

int exit_code(ErrorKind kind) { return is_numerical(kind) ? 2 : 1; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hybrid finite volume / finite element solver with a POD-Galerkin reduced model"};
  app.require_subcommand(1);
  app.footer(config_reference());

  unsigned threads = 0;
  double tolerance = 0.0;
  app.add_option("--threads", threads, "Worker thread cap (default: machine parallelism)")->check(CLI::PositiveNumber);
  app.add_option("--tolerance", tolerance, "Pressure CG tolerance (overrides the config, default 1e-10)")
      ->check(CLI::PositiveNumber);

  std::string config_path, out_dir, snapshots_path, bases_path, operators_path, coefficients_path, mesh_out;
  int mesh_n = 0;
  bool ablate = false;

  auto* mesh_gen = app.add_subcommand("mesh-gen", "Write the Kuhn-subdivided unit cube mesh");
  mesh_gen->add_option("--n", mesh_n, "Subdivisions per axis")->required()->check(CLI::PositiveNumber);
  mesh_gen->add_option("--out", mesh_out, "Output mesh file")->required();

  auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "Run configuration (INI)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "Output directory (overrides [case] output)");
  };
  auto* fom_run = app.add_subcommand("fom-run", "Run the full-order solver and store snapshots");
  add_config(fom_run);
  auto* pod_build = app.add_subcommand("pod-build", "Build POD bases from snapshots");
  add_config(pod_build);
  pod_build->add_option("--snapshots", snapshots_path, "Snapshot file")->required()->check(CLI::ExistingFile);
  auto* rom_offline = app.add_subcommand("rom-offline", "Assemble reduced operators");
  add_config(rom_offline);
  rom_offline->add_option("--snapshots", snapshots_path, "Snapshot file")->required()->check(CLI::ExistingFile);
  rom_offline->add_option("--bases", bases_path, "Basis file")->required()->check(CLI::ExistingFile);
  auto* rom_run = app.add_subcommand("rom-run", "Integrate the reduced model");
  add_config(rom_run);
  rom_run->add_option("--snapshots", snapshots_path, "Snapshot file (initial state and times)")
      ->required()
      ->check(CLI::ExistingFile);
  rom_run->add_option("--bases", bases_path, "Basis file")->required()->check(CLI::ExistingFile);
  rom_run->add_option("--operators", operators_path, "Operator file")->required()->check(CLI::ExistingFile);
  rom_run->add_flag("--ablate-pressure", ablate, "Drop the pressure gradient coupling");
  auto* cmp = app.add_subcommand("compare", "Relative errors of the reduced run against the snapshots");
  add_config(cmp);
  cmp->add_option("--snapshots", snapshots_path, "Snapshot file")->required()->check(CLI::ExistingFile);
  cmp->add_option("--bases", bases_path, "Basis file")->required()->check(CLI::ExistingFile);
  cmp->add_option("--coefficients", coefficients_path, "Coefficient history CSV")->check(CLI::ExistingFile);
  cmp->add_option("--operators", operators_path, "Operator file, used with --ablate-pressure")
      ->check(CLI::ExistingFile);
  cmp->add_flag("--ablate-pressure", ablate, "Integrate with the pressure coupling dropped and compare that run");
  auto* pipeline = app.add_subcommand("pipeline", "All stages in sequence");
  add_config(pipeline);
  pipeline->add_flag("--ablate-pressure", ablate, "Also run and compare the ablated reduced model");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    worker_limit() = threads;

    if (*mesh_gen) {
      const PrimalMesh mesh = build_cube_primal(mesh_n);
      io::atomic_write(mesh_out, [&](std::ostream& out) { write_mesh(out, mesh); }, false);
      return 0;
    }

    RunConfig cfg = load_config(config_path);
    if (tolerance > 0.0) cfg.tolerance = tolerance;
    if (!out_dir.empty()) cfg.output = out_dir;
    const CaseDefinition c = cfg.make_case();
    const Paths p{cfg.output};
    const auto disc = make_discretization(cfg);

    if (*fom_run) {
      io::atomic_write(p.mesh(), [&](std::ostream& out) { write_mesh(out, disc->primal); }, false);
      stage_fom(cfg, c, *disc, p);
    } else if (*pod_build) {
      stage_pod(cfg, c, *disc, load(snapshots_path, &io::read_snapshots), p);
    } else if (*rom_offline) {
      stage_offline(cfg, c, *disc, load(snapshots_path, &io::read_snapshots), load(bases_path, &io::read_bases), p);
    } else if (*rom_run) {
      stage_online(cfg, c, *disc, load(snapshots_path, &io::read_snapshots), load(bases_path, &io::read_bases),
                   load(operators_path, &io::read_operators), ablate, p);
    } else if (*cmp) {
      const auto snapshots = load(snapshots_path, &io::read_snapshots);
      const auto bases = load(bases_path, &io::read_bases);
      std::vector<RomState> rom;
      if (ablate) {
        if (operators_path.empty()) fail(ErrorKind::kInvalidArgument, "--ablate-pressure needs --operators");
        rom = stage_online(cfg, c, *disc, snapshots, bases, load(operators_path, &io::read_operators), true, p);
      } else {
        if (coefficients_path.empty()) fail(ErrorKind::kInvalidArgument, "compare needs --coefficients");
        rom = load_coefficients(coefficients_path, bases);
      }
      stage_compare(*disc, snapshots, bases, rom, ablate, p);
    } else if (*pipeline) {
      io::atomic_write(p.mesh(), [&](std::ostream& out) { write_mesh(out, disc->primal); }, false);
      const auto snapshots = stage_fom(cfg, c, *disc, p);
      const auto bases = stage_pod(cfg, c, *disc, snapshots, p);
      const auto ops = stage_offline(cfg, c, *disc, snapshots, bases, p);
      const bool configured_ablation = cfg.rom.model.ablate_pressure;
      stage_compare(*disc, snapshots, bases, stage_online(cfg, c, *disc, snapshots, bases, ops, configured_ablation, p),
                    configured_ablation, p);
      if (ablate && !configured_ablation)
        stage_compare(*disc, snapshots, bases, stage_online(cfg, c, *disc, snapshots, bases, ops, true, p), true, p);
    }
    return 0;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
