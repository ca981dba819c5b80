#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>

#include "hfvrom/fom.hpp"

namespace hfvrom {

/// Truncation bounds per variable, each in (0, 1].
struct PodThresholds {
  double momentum = 0.99999;
  double pressure = 0.9999;
  double species = 0.9999;

  void validate() const;
};

/// Everything the exact manufactured solution provides at one point.
struct ManufacturedSample {
  Vec3 velocity;
  double pressure = 0.0;
  Vec3 source;
  Vec3 velocity_rate;  // time derivative of the velocity (boundary g_t)
};

/// u = (sin(pi t y) cos(pi t z), -cos(pi t z), exp(-2 pi t^2 x)),
/// p = t cos(pi (x+y+z)), with the matching momentum source for mu.
ManufacturedSample manufactured_fields(const Vec3& x, double t, double mu = 1e-2);

/// Residual rho u_t + div(rho u (x) u) + grad p - mu lap u - f of the
/// manufactured fields, using analytic derivatives computed independently of
/// the source formula.
Vec3 manufactured_residual(const Vec3& x, double t, double mu = 1e-2);

/// Initial species for the cavity: 10 inside |x - c|^2 <= 1e-2, else 0.
double cavity_species(const Vec3& x);

enum class CaseKind { kManufactured, kCavity };

struct CaseDefinition {
  CaseKind kind = CaseKind::kManufactured;
  std::string name;
  FluidParams params;
  BoundaryConditions bc;
  SourceTerm source;
  TimeControls time;
  PodThresholds kappa;
  bool has_species = false;
  bool use_lifting = false;
  VectorField exact_velocity;  // empty when no exact solution is known
  ScalarField exact_pressure;
};

CaseDefinition manufactured_case();
CaseDefinition cavity_case();
CaseDefinition case_by_name(std::string_view name);

/// Initial state sampled at dual nodes and primal vertices, with the momentum
/// projected onto the discretely divergence-free space.
FomState initial_state(const CaseDefinition& c, const FomSolver& solver);

/// Momentum source sampled at the dual nodes (3 x n_cells).
Eigen::Matrix3Xd sample_source(const SourceTerm& source, const DualMesh& dual, double t);

}  // namespace hfvrom
