#include "hfvrom/pipeline.hpp"

#include <cmath>
#include <limits>

namespace hfvrom {

double relative_error(const InnerProductSpace& space, const Eigen::VectorXd& field, const Eigen::VectorXd& reference) {
  const double ref = space.norm(reference);
  if (!(ref > 0.0)) fail(ErrorKind::kDivisionGuard, "relative error against a zero reference");
  return space.norm(field - reference) / ref;
}

Discretization::Discretization(PrimalMesh mesh)
    : primal(std::move(mesh)),
      dual(primal),
      ops(primal, dual),
      fv3(InnerProductSpace::finite_volume(dual, 3)),
      fv1(InnerProductSpace::finite_volume(dual, 1)),
      fe(InnerProductSpace::finite_element(primal)) {}

FomRunResult run_fom(const CaseDefinition& c, const Discretization& disc, double tolerance,
                     const FomSolver::Observer& observer) {
  FomSolver solver(disc.ops, c.params, c.bc, c.source, tolerance);
  FomRunResult out;
  out.snapshots = solver.run(initial_state(c, solver), c.time, &out.diagnostics, observer);
  return out;
}

Eigen::MatrixXd source_snapshots(const CaseDefinition& c, const DualMesh& dual, const Eigen::VectorXd& times) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(3 * dual.num_cells(), times.size());
  if (!c.source) return out;
  for (Eigen::Index n = 0; n < times.size(); ++n) out.col(n) = sample_source(c.source, dual, times[n]).reshaped();
  return out;
}

RomBases build_bases(const CaseDefinition& c, const Discretization& disc, const SnapshotSet& snapshots,
                     const BasisCounts& counts) {
  c.kappa.validate();
  RomBases bases;
  const ModeSelection wu{c.kappa.momentum, counts.momentum};
  bases.momentum = c.use_lifting ? build_lifted_basis(disc.fv3, snapshots.momentum, wu, Variable::kMomentum)
                                 : build_basis(disc.fv3, snapshots.momentum, wu, Variable::kMomentum);
  bases.pressure = build_basis(disc.fe, snapshots.pressure, {c.kappa.pressure, counts.pressure}, Variable::kPressure);
  if (c.has_species)
    bases.species = build_basis(disc.fv1, snapshots.species, {c.kappa.species, counts.species}, Variable::kSpecies);
  if (c.source) bases.source = build_source_basis(bases.momentum, source_snapshots(c, disc.dual, snapshots.times));
  return bases;
}

RomAssemblyOptions assembly_options(const CaseDefinition& c, const Discretization& disc, const SnapshotSet& snapshots,
                                    const RomRunSettings& settings) {
  require(settings.dt_divisor >= 1, ErrorKind::kInvalidArgument, "reduced step divisor must be >= 1");
  RomAssemblyOptions o;
  o.convection = settings.offline.convection;
  o.interior_residual = settings.offline.interior_residual;
  if (settings.offline.upwind_dissipation && snapshots.size() > 0) {
    o.facet_speeds = facet_speeds(disc.ops, snapshots.momentum, c.params.rho);
    o.speed_t0 = snapshots.times[0];
    o.speed_spacing = snapshots.size() > 1 ? snapshots.times[1] - snapshots.times[0] : 0.0;
  }
  o.t_end = c.time.t_end;
  o.spacing = c.time.snapshot_interval / (2.0 * settings.dt_divisor);
  return o;
}

std::vector<RomState> run_rom(const RomOperators& ops, const RomBases& bases, const Discretization& disc,
                              const SnapshotSet& snapshots, const RomRunSettings& settings) {
  require(snapshots.size() > 0, ErrorKind::kInvalidArgument, "reduced run needs the initial snapshot");
  require(settings.dt_divisor >= 1, ErrorKind::kInvalidArgument, "reduced step divisor must be >= 1");
  RomModel model(ops, settings.model);
  const RomState initial = project_initial(snapshots.state(0), bases, disc.fv3, disc.fe, disc.fv1);
  // The first snapshot's pressure precedes any projection step, so the shift uses the second.
  model.anchor(snapshots.size() > 1 ? project_initial(snapshots.state(1), bases, disc.fv3, disc.fe, disc.fv1) : initial);
  const double interval = snapshots.size() > 1 ? snapshots.times[1] - snapshots.times[0] : 1.0;
  return model.integrate(initial, snapshots.times[snapshots.size() - 1], interval, interval / settings.dt_divisor);
}

namespace {

double guarded_error(const InnerProductSpace& space, const Eigen::VectorXd& field, const Eigen::VectorXd& reference) {
  if (!(space.norm(reference) > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  return relative_error(space, field, reference);
}

}  // namespace

double ErrorReport::mean(double ErrorRow::*column) const {
  double sum = 0.0;
  int count = 0;
  for (const auto& r : rows)
    if (std::isfinite(r.*column)) {
      sum += r.*column;
      ++count;
    }
  return count ? sum / count : std::numeric_limits<double>::quiet_NaN();
}

double ErrorReport::max(double ErrorRow::*column) const {
  double m = std::numeric_limits<double>::quiet_NaN();
  for (const auto& r : rows)
    if (std::isfinite(r.*column)) m = std::isfinite(m) ? std::max(m, r.*column) : r.*column;
  return m;
}

ErrorReport compare(const Discretization& disc, const RomBases& bases, const SnapshotSet& snapshots,
                    const std::vector<RomState>& rom) {
  require(rom.size() == static_cast<std::size_t>(snapshots.size()), ErrorKind::kInvalidArgument,
          "reduced trajectory and snapshots have different lengths");
  ErrorReport report;
  report.has_species = bases.species.has_value();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const Eigen::MatrixXd pa = project(disc.fv3, bases.momentum, snapshots.momentum);
  const Eigen::MatrixXd pb = project(disc.fe, bases.pressure, snapshots.pressure);
  const Eigen::MatrixXd pc =
      bases.species ? project(disc.fv1, *bases.species, snapshots.species) : Eigen::MatrixXd();
  for (Eigen::Index n = 0; n < snapshots.size(); ++n) {
    ErrorRow row;
    row.t = snapshots.times[n];
    const FomState rs = reconstruct(rom[std::size_t(n)], bases);
    const Eigen::VectorXd wu = snapshots.momentum.col(n);
    row.rom_wu = guarded_error(disc.fv3, rs.momentum.reshaped(), wu);
    row.proj_wu = guarded_error(disc.fv3, bases.momentum.modes * pa.col(n), wu);
    const Eigen::VectorXd pi = snapshots.pressure.col(n);
    row.rom_pi = guarded_error(disc.fe, rs.pressure, pi);
    row.proj_pi = guarded_error(disc.fe, bases.pressure.modes * pb.col(n), pi);
    if (bases.species) {
      const Eigen::VectorXd wy = snapshots.species.col(n);
      row.rom_wy = guarded_error(disc.fv1, rs.species, wy);
      row.proj_wy = guarded_error(disc.fv1, bases.species->modes * pc.col(n), wy);
    } else {
      row.rom_wy = row.proj_wy = nan;
    }
    report.rows.push_back(row);
  }
  return report;
}

PipelineResult run_pipeline(const CaseDefinition& c, const Discretization& disc, const RomRunSettings& settings,
                            double tolerance) {
  PipelineResult out;
  auto stage = [](const char* name, auto&& body) {
    try {
      body();
    } catch (const Error& e) {
      throw Error(e.kind(), std::string(name) + " stage: " + e.what());
    }
  };
  stage("fom", [&] { out.fom = run_fom(c, disc, tolerance); });
  stage("pod", [&] { out.bases = build_bases(c, disc, out.fom.snapshots); });
  stage("offline", [&] {
    out.operators = assemble_operators(disc.ops, out.bases, c.params, c.bc,
                                       assembly_options(c, disc, out.fom.snapshots, settings));
  });
  stage("online", [&] { out.rom = run_rom(out.operators, out.bases, disc, out.fom.snapshots, settings); });
  stage("compare", [&] { out.report = compare(disc, out.bases, out.fom.snapshots, out.rom); });
  return out;
}

}  // namespace hfvrom
