#pragma once

#include <Eigen/Dense>
#include <array>
#include <vector>

#include "hfvrom/fom.hpp"
#include "hfvrom/pod.hpp"

namespace hfvrom {

/// Dense third-order tensor, row-major in (i, j, k).
class Tensor3 {
 public:
  Tensor3() = default;
  Tensor3(Eigen::Index n0, Eigen::Index n1, Eigen::Index n2) : dims_{n0, n1, n2}, data_(n0 * n1 * n2) {
    data_.setZero();
  }

  const std::array<Eigen::Index, 3>& dims() const { return dims_; }
  double& operator()(Eigen::Index i, Eigen::Index j, Eigen::Index k) { return data_[(i * dims_[1] + j) * dims_[2] + k]; }
  double operator()(Eigen::Index i, Eigen::Index j, Eigen::Index k) const {
    return data_[(i * dims_[1] + j) * dims_[2] + k];
  }
  const Eigen::VectorXd& data() const { return data_; }
  Eigen::VectorXd& data() { return data_; }

  /// v_i = sum_jk T_ijk x_j y_k.
  Eigen::VectorXd contract(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const;
  /// Slice i as an n1 x n2 matrix.
  Eigen::MatrixXd slice(Eigen::Index i) const;

 private:
  std::array<Eigen::Index, 3> dims_{0, 0, 0};
  Eigen::VectorXd data_;
};

/// Derivatives of dual-node fields: per tet, the affine fit through the four
/// face values; per node, the mean over the generating tets.
namespace mode_derivatives {

/// Jacobians of a K-component field, K x 3 block per cell: (k, d) = d f_k / d x_d.
Eigen::MatrixXd gradient(const HybridOperators& ops, const Eigen::MatrixXd& field);
/// Divergence of a vector field (3 x n_cells) at the nodes.
Eigen::VectorXd divergence(const HybridOperators& ops, const Eigen::Matrix3Xd& field);
/// Row-wise divergence of a tensor field stored as 9 x n_cells (row 3a+b is T_ab):
/// (div T)_a = sum_b d T_ab / d x_b.
Eigen::Matrix3Xd tensor_divergence(const HybridOperators& ops, const Eigen::MatrixXd& tensor);
/// div(u (x) v) with row index from u: (div)_a = sum_b d(u_a v_b)/d x_b.
Eigen::Matrix3Xd convection(const HybridOperators& ops, const Eigen::Matrix3Xd& u, const Eigen::Matrix3Xd& v);
/// Facet-flux Laplacian (sum of area * grad . eta over the cell boundary) / |C_i|.
Eigen::MatrixXd laplacian(const HybridOperators& ops, const Eigen::MatrixXd& field);
/// Curl of a vector field at the nodes.
Eigen::Matrix3Xd curl(const HybridOperators& ops, const Eigen::Matrix3Xd& field);

}  // namespace mode_derivatives

struct RomBases {
  PodBasis momentum;
  PodBasis pressure;
  std::optional<PodBasis> species;
  Eigen::MatrixXd source;  // one column per momentum mode; empty when there is no source
};

/// Boundary-rate forcing of the reduced Poisson equation, sampled on a
/// uniform grid and interpolated linearly.
struct ForcingSamples {
  double t0 = 0.0;
  double spacing = 0.0;
  Eigen::MatrixXd values;  // N_pi x samples; no columns means identically zero

  Eigen::VectorXd at(double t, Eigen::Index rows) const;
};

struct RomOperators {
  Eigen::MatrixXd M, B, K, F;
  Tensor3 C;
  Eigen::MatrixXd N, H, P;
  Tensor3 D;
  ForcingSamples G;
  Tensor3 E;
  Eigen::MatrixXd Q;
  ForcingSamples boundary_rate;  // N rows: modes tested against the Dirichlet rate in boundary cells
  // Time-sampled upwind dissipation added to B, P and Q, flattened column-major.
  ForcingSamples B_upwind, P_upwind, Q_upwind;

  Eigen::MatrixXd B_at(double t) const;
  Eigen::MatrixXd P_at(double t) const;
  Eigen::MatrixXd Q_at(double t) const;

  Eigen::Index n_momentum() const { return M.rows(); }
  Eigen::Index n_pressure() const { return N.rows(); }
  Eigen::Index n_species() const { return Q.rows(); }
  void validate() const;
};

enum class ConvectionForm {
  kNodal,  // divergence of the node-averaged derivative of phi_j (x) phi_k
  kFacet,  // central part of the full-order facet flux
};

struct RomAssemblyOptions {
  ConvectionForm convection = ConvectionForm::kFacet;
  /// Test the residual on interior cells only; boundary cells contribute
  /// their Dirichlet rate through `boundary_rate`, as in the full-order scheme.
  bool interior_residual = true;
  /// Upwind speeds per interior facet (rows) at speed_t0 + s * speed_spacing
  /// (columns, see facet_speeds). A single column is folded into B, P and Q;
  /// more columns are interpolated in time. Empty disables the dissipation.
  Eigen::MatrixXd facet_speeds;
  double speed_t0 = 0.0;
  double speed_spacing = 0.0;
  /// Sampling of the time-dependent forcing on [0, t_end].
  double t_end = 0.0;
  double spacing = 1.0;
};

/// max(|u_L.eta|, |u_R.eta|) per interior facet (rows) and snapshot (columns).
Eigen::MatrixXd facet_speeds(const HybridOperators& ops, const Eigen::MatrixXd& momentum_snapshots, double rho);

/// Central facet-flux convection sum_f (A/2)((v_L.eta) u_L + (v_R.eta) u_R) / (rho |C_i|)
/// for K-component u and velocity-carrying v (3 x n_cells, momentum units).
Eigen::MatrixXd facet_convection(const HybridOperators& ops, const Eigen::MatrixXd& u, const Eigen::Matrix3Xd& v,
                                 double rho);
/// Linearised upwind dissipation sum_f (A/2) s_f (u_other - u_self) / |C_i| on interior facets.
Eigen::MatrixXd facet_dissipation(const HybridOperators& ops, const Eigen::VectorXd& speeds, const Eigen::MatrixXd& u);

/// M, B, C, K, F in the finite-volume inner product.
void assemble_momentum_ops(const HybridOperators& ops, const RomBases& bases, const FluidParams& params,
                           const BoundaryConditions& bc, const RomAssemblyOptions& options, RomOperators& out);
/// N, D, H, P from the weak pressure equation tested with the interior part of
/// the divergence functional; G sampled from the boundary data rate.
void assemble_pressure_ops(const HybridOperators& ops, const RomBases& bases, const FluidParams& params,
                           const BoundaryConditions& bc, const RomAssemblyOptions& options, RomOperators& out);
/// E, Q for the species equation.
void assemble_transport_ops(const HybridOperators& ops, const RomBases& bases, const FluidParams& params,
                            const RomAssemblyOptions& options, RomOperators& out);
/// Upwind dissipation parts of B, P and Q from options.facet_speeds.
void assemble_upwind_ops(const HybridOperators& ops, const RomBases& bases, const RomAssemblyOptions& options,
                         RomOperators& out);
RomOperators assemble_operators(const HybridOperators& ops, const RomBases& bases, const FluidParams& params,
                                const BoundaryConditions& bc, const RomAssemblyOptions& options);

struct RomState {
  Eigen::VectorXd a, b, c;
  double time = 0.0;
};

/// Galerkin projection of a full-order state onto the bases.
RomState project_initial(const FomState& state, const RomBases& bases, const InnerProductSpace& fv3,
                         const InnerProductSpace& fe, const InnerProductSpace& fv1);

FomState reconstruct(const RomState& state, const RomBases& bases);

struct RomSettings {
  bool ablate_pressure = false;  // drop the K b coupling
  bool anchor_pressure = false;  // one-time constant shift matching a reference pressure
};

/// Online reduced model: RK4 on (a, c) with M a' = -C(a,a) + B a - K b + F a,
/// c' = -E(a,c) + Q c, and b recovered from the reduced Poisson equation.
class RomModel {
 public:
  RomModel(RomOperators ops, RomSettings settings = {});

  const RomOperators& operators() const { return ops_; }
  /// Fixes the pressure shift so the recovered pressure matches `reference.b`.
  void anchor(const RomState& reference);
  const Eigen::VectorXd& pressure_shift() const { return shift_; }

  Eigen::VectorXd recover_pressure(const Eigen::VectorXd& a, double t) const;
  RomState step(const RomState& state, double dt) const;
  /// States at t0 + k * output_interval up to t_end (inclusive), dt refined to
  /// divide each output interval evenly.
  std::vector<RomState> integrate(RomState initial, double t_end, double output_interval, double dt) const;

 private:
  void rates(const Eigen::VectorXd& a, const Eigen::VectorXd& c, double t, Eigen::VectorXd& da,
             Eigen::VectorXd& dc) const;

  RomOperators ops_;
  RomSettings settings_;
  Eigen::LDLT<Eigen::MatrixXd> mass_;
  Eigen::LDLT<Eigen::MatrixXd> poisson_;
  Eigen::VectorXd shift_;
};

}  // namespace hfvrom
