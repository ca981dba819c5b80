#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "hfvrom/mesh.hpp"

namespace hfvrom {

struct FluidParams {
  double rho = 1.0;
  double mu = 0.0;
  double diffusivity = 0.0;

  double nu() const { return mu / rho; }
  void validate() const;
};

/// Momentum and species live on dual cells, pressure on primal vertices.
struct FomState {
  Eigen::Matrix3Xd momentum;
  Eigen::VectorXd pressure;
  Eigen::VectorXd species;
  double time = 0.0;
};

using VectorField = std::function<Vec3(const Vec3&, double)>;
using ScalarField = std::function<double(const Vec3&, double)>;

/// Dirichlet data of one boundary region. `velocity` is g (momentum is rho*g),
/// `velocity_rate` its time derivative g_t.
struct BoundaryData {
  VectorField velocity;
  VectorField velocity_rate;
  ScalarField species;
};

struct BoundaryConditions {
  std::map<std::string, BoundaryData, std::less<>> regions;

  const BoundaryData& at(std::string_view tag) const;
  /// Every tagged region of the mesh needs an entry.
  void validate(const PrimalMesh& mesh) const;
};

struct TimeControls {
  double cfl = 1.0;
  double t_end = 0.0;
  double snapshot_interval = 0.01;

  void validate() const;
};

struct SourceTerm {
  VectorField momentum;  // empty means zero

  Vec3 operator()(const Vec3& x, double t) const { return momentum ? momentum(x, t) : Vec3::Zero(); }
  explicit operator bool() const { return static_cast<bool>(momentum); }
};

/// Conserved variables (momentum, species) and velocities on both sides of a
/// facet, as fed to the numerical flux.
struct FacetStates {
  Eigen::Vector4d left;
  Eigen::Vector4d right;
  Vec3 u_left;
  Vec3 u_right;
};

/// Hook for higher-order reconstruction of facet states; the first-order
/// scheme leaves the cell values untouched.
using Reconstruction = std::function<void(Idx facet, const DualMesh::Facet&, FacetStates&)>;

/// Rusanov flux through a facet with unit normal `normal` for F_i(w) = u_i w.
template <typename Scalar>
Eigen::Matrix<Scalar, 4, 1> rusanov_flux(const Eigen::Matrix<Scalar, 4, 1>& w_left,
                                         const Eigen::Matrix<Scalar, 4, 1>& w_right,
                                         const Vector3<Scalar>& u_left, const Vector3<Scalar>& u_right,
                                         const Vector3<Scalar>& normal) {
  using std::abs;
  using std::max;
  const Scalar un_left = u_left.dot(normal);
  const Scalar un_right = u_right.dot(normal);
  const Scalar speed = max(abs(un_left), abs(un_right));
  return Scalar(0.5) * (un_left * w_left + un_right * w_right) - Scalar(0.5) * speed * (w_right - w_left);
}

/// Pressure sampled for the face-level pressure term: per generating tet, the
/// mean of the three face-vertex values and the tet-barycentre value.
struct PressureFaceValue {
  double owner = 0.0;
  double neighbor = 0.0;  // NaN for boundary faces
};
PressureFaceValue pressure_face_value(const PrimalMesh& mesh, Idx face, const Eigen::VectorXd& pressure);

/// Standard P1 stiffness matrix sum_T |T| grad(phi_a).grad(phi_b).
Eigen::SparseMatrix<double> assemble_poisson(const PrimalMesh& mesh);

/// Discrete operators shared by the full-order solver and the reduced-order
/// assembly. Vector cell fields are 3 x n_cells (flattened cell-major).
class HybridOperators {
 public:
  HybridOperators(const PrimalMesh& primal, const DualMesh& dual);

  const PrimalMesh& primal() const { return *primal_; }
  const DualMesh& dual() const { return *dual_; }

  /// Volume part of the weak divergence: row v holds int_{C_i} grad(phi_v)
  /// for every cell, i.e. sum over generating tets of |T|/4 grad(phi_v)|_T.
  const Eigen::SparseMatrix<double>& divergence_volume() const { return div_volume_; }
  /// Full weak divergence functional r_v = int W.grad(phi_v) - int_dOmega (W.eta) phi_v,
  /// the boundary flux taken from the boundary-cell values.
  const Eigen::SparseMatrix<double>& divergence_functional() const { return div_full_; }
  Eigen::VectorXd divergence(const Eigen::Matrix3Xd& momentum) const;
  /// Component of a vertex functional that is nonzero on the zero-mean space.
  Eigen::VectorXd zero_mean_part(const Eigen::VectorXd& functional) const;

  /// int_{C_i} grad p for a P1 field p (exact for linear p).
  Eigen::Matrix3Xd cell_gradient_integral(const Eigen::VectorXd& p) const;
  /// Volume-weighted mean of the generating-tet P1 gradients.
  Eigen::Matrix3Xd cell_gradient(const Eigen::VectorXd& p) const;

  /// int phi_v, the lumped P1 mass.
  const Eigen::VectorXd& vertex_mass() const { return vertex_mass_; }
  double mean_value(const Eigen::VectorXd& p) const;

  /// D_int M^{-1} D_int^T over interior cells; the Poisson operator whose
  /// solution makes the post-projection momentum satisfy the weak divergence
  /// constraint exactly.
  const Eigen::SparseMatrix<double>& projection_matrix() const { return projection_; }
  const std::vector<Idx>& interior_cells() const { return interior_; }
  const std::vector<Idx>& boundary_cells() const { return boundary_; }

  /// Per-tet Jacobian (K x 3, stored column-block per tet) of the affine field
  /// fitted to the tet's four face values. field is K x n_cells.
  Eigen::MatrixXd tet_jacobians(const Eigen::MatrixXd& field) const;
  /// Node average of tet_jacobians over generating tets.
  Eigen::MatrixXd node_jacobians(const Eigen::MatrixXd& field) const;
  /// sum over facets of area * (grad U)_tet . eta_out per cell (K x n_cells).
  /// Boundary facets are included; callers needing Dirichlet cells skip them.
  Eigen::MatrixXd diffusion_flux_sum(const Eigen::MatrixXd& field) const;
  /// int_{dOmega} G phi_v with G piecewise constant per boundary face.
  Eigen::VectorXd boundary_load(const Eigen::VectorXd& face_flux) const;
  /// Boundary faces in the order used by boundary flux vectors.
  const std::vector<Idx>& boundary_faces() const { return boundary_faces_; }

 private:
  const PrimalMesh* primal_;
  const DualMesh* dual_;
  Eigen::SparseMatrix<double> div_volume_;
  Eigen::SparseMatrix<double> div_full_;
  Eigen::SparseMatrix<double> projection_;
  Eigen::VectorXd vertex_mass_;
  std::vector<Idx> interior_;
  std::vector<Idx> boundary_;
  std::vector<Idx> boundary_faces_;
};

struct ProjectionResult {
  Eigen::VectorXd delta;          // pressure correction per vertex
  Eigen::VectorXd boundary_flux;  // G = W.eta per boundary face
  int iterations = 0;
  double relative_residual = 0.0;
};

struct StageResult {
  Eigen::Matrix3Xd momentum;
  Eigen::VectorXd species;
};

/// Time-series of full-order states; column n of each matrix is snapshot n.
struct SnapshotSet {
  Eigen::VectorXd times;
  Eigen::MatrixXd momentum;  // 3*n_cells x N_s
  Eigen::MatrixXd pressure;  // n_vertices x N_s
  Eigen::MatrixXd species;   // n_cells x N_s

  Eigen::Index size() const { return times.size(); }
  FomState state(Eigen::Index n) const;
  void append(const FomState& state);
};

struct FomDiagnostics {
  int steps = 0;
  double max_divergence = 0.0;         // relative_divergence after projection
  double max_pressure_mean = 0.0;      // |volume-weighted mean| after projection
  double max_speed = 0.0;
  int max_cg_iterations = 0;
};

struct FomStepInfo {
  double dt = 0.0;
  double divergence = 0.0;
  double pressure_mean = 0.0;
  int cg_iterations = 0;
};

/// Explicit FV transport-diffusion, P1 projection and post-projection update.
/// Boundary dual cells (nodes on the boundary) carry the Dirichlet data.
class FomSolver {
 public:
  FomSolver(const HybridOperators& ops, FluidParams params, BoundaryConditions bc, SourceTerm source,
            double tolerance = 1e-10);

  const HybridOperators& operators() const { return *ops_; }
  const FluidParams& params() const { return params_; }
  const BoundaryConditions& boundary_conditions() const { return bc_; }
  const SourceTerm& source() const { return source_; }
  double tolerance() const { return tolerance_; }
  void set_reconstruction(Reconstruction r) { reconstruction_ = std::move(r); }

  /// Dirichlet momentum rho*g and species value at boundary cell nodes.
  void apply_dirichlet(Eigen::Matrix3Xd& momentum, Eigen::VectorXd& species, double t) const;

  StageResult transport_diffusion_stage(const FomState& state, double dt) const;
  ProjectionResult projection_stage(const Eigen::Matrix3Xd& momentum_tilde, double dt) const;
  Eigen::Matrix3Xd post_projection(const Eigen::Matrix3Xd& momentum_tilde, const Eigen::VectorXd& delta,
                                   double dt) const;
  /// Zero-mean part of the divergence functional, normalised by the size of
  /// the terms that cancel in it (|D| |W|), so the value is scale free.
  double relative_divergence(const Eigen::Matrix3Xd& momentum) const;

  /// Makes an initial momentum field discretely divergence free (pressure untouched).
  void project_initial(FomState& state) const;
  FomStepInfo step(FomState& state, double dt) const;

  using Observer = std::function<void(const FomState&, const FomStepInfo&)>;
  SnapshotSet run(FomState initial, const TimeControls& controls, FomDiagnostics* diagnostics = nullptr,
                  const Observer& observer = {}) const;

 private:
  const HybridOperators* ops_;
  FluidParams params_;
  BoundaryConditions bc_;
  SourceTerm source_;
  double tolerance_;
  Reconstruction reconstruction_;
};

/// Explicit step bound: cfl * min_i h_i / (|u_i| + 1e-12 + 2 (mu/rho + D) / h_i),
/// h_i = |C_i| / area(dC_i).
double compute_dt(const FomState& state, const FluidParams& params, const DualMesh& dual, double cfl);

}  // namespace hfvrom
