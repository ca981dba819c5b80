#pragma once

#include <string>
#include <vector>

#include "hfvrom/cases.hpp"
#include "hfvrom/pod.hpp"
#include "hfvrom/rom.hpp"

namespace hfvrom {

/// ||field - reference|| / ||reference|| in the space's norm.
double relative_error(const InnerProductSpace& space, const Eigen::VectorXd& field, const Eigen::VectorXd& reference);

/// Mesh, dual mesh and discrete operators built together; not copyable
/// because the operators point into the meshes.
struct Discretization {
  explicit Discretization(PrimalMesh mesh);
  Discretization(const Discretization&) = delete;
  Discretization& operator=(const Discretization&) = delete;

  PrimalMesh primal;
  DualMesh dual;
  HybridOperators ops;
  InnerProductSpace fv3;
  InnerProductSpace fv1;
  InnerProductSpace fe;
};

struct FomRunResult {
  SnapshotSet snapshots;
  FomDiagnostics diagnostics;
};

FomRunResult run_fom(const CaseDefinition& c, const Discretization& disc, double tolerance = 1e-10,
                     const FomSolver::Observer& observer = {});

/// Momentum source at every snapshot time, 3 n_cells x N_s.
Eigen::MatrixXd source_snapshots(const CaseDefinition& c, const DualMesh& dual, const Eigen::VectorXd& times);

struct BasisCounts {
  std::optional<int> momentum, pressure, species;  // fixed energy-mode counts override kappa
};

RomBases build_bases(const CaseDefinition& c, const Discretization& disc, const SnapshotSet& snapshots,
                     const BasisCounts& counts = {});

struct OfflineSettings {
  ConvectionForm convection = ConvectionForm::kFacet;
  bool interior_residual = true;
  bool upwind_dissipation = true;  // frozen facet speeds from the momentum snapshots
};

struct RomRunSettings {
  RomSettings model;
  OfflineSettings offline;
  int dt_divisor = 50;  // reduced step = snapshot interval / divisor
};

/// Assembly options for a case: forcing sampled every interval / (2 divisor).
RomAssemblyOptions assembly_options(const CaseDefinition& c, const Discretization& disc, const SnapshotSet& snapshots,
                                    const RomRunSettings& settings);

/// Reduced trajectory at the snapshot times, started from the projection of
/// the first snapshot.
std::vector<RomState> run_rom(const RomOperators& ops, const RomBases& bases, const Discretization& disc,
                              const SnapshotSet& snapshots, const RomRunSettings& settings);

struct ErrorRow {
  double t = 0.0;
  double rom_wu = 0.0, proj_wu = 0.0;
  double rom_pi = 0.0, proj_pi = 0.0;
  double rom_wy = 0.0, proj_wy = 0.0;  // NaN without species
};

/// Relative errors per snapshot time; NaN marks times whose reference vanishes.
struct ErrorReport {
  std::vector<ErrorRow> rows;
  bool has_species = false;

  /// Mean over the rows where the entry is finite.
  double mean(double ErrorRow::*column) const;
  double max(double ErrorRow::*column) const;
};

ErrorReport compare(const Discretization& disc, const RomBases& bases, const SnapshotSet& snapshots,
                    const std::vector<RomState>& rom);

struct PipelineResult {
  FomRunResult fom;
  RomBases bases;
  RomOperators operators;
  std::vector<RomState> rom;
  ErrorReport report;
};

PipelineResult run_pipeline(const CaseDefinition& c, const Discretization& disc, const RomRunSettings& settings,
                            double tolerance = 1e-10);

}  // namespace hfvrom
