#include "hfvrom/fom.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <cmath>
#include <limits>

namespace hfvrom {

void FluidParams::validate() const {
  require(rho > 0.0, ErrorKind::kInvalidArgument, "density must be positive");
  require(mu >= 0.0, ErrorKind::kInvalidArgument, "viscosity must be nonnegative");
  require(diffusivity >= 0.0, ErrorKind::kInvalidArgument, "diffusivity must be nonnegative");
}

void TimeControls::validate() const {
  require(cfl > 0.0, ErrorKind::kInvalidArgument, "cfl must be positive");
  require(snapshot_interval > 0.0, ErrorKind::kInvalidArgument, "snapshot interval must be positive");
  require(t_end >= 0.0, ErrorKind::kInvalidArgument, "t_end must be nonnegative");
}

const BoundaryData& BoundaryConditions::at(std::string_view tag) const {
  auto it = regions.find(tag);
  if (it == regions.end()) fail(ErrorKind::kInvalidArgument, "no boundary data for region '" + std::string(tag) + "'");
  return it->second;
}

void BoundaryConditions::validate(const PrimalMesh& mesh) const {
  for (const auto& name : mesh.tag_names()) {
    const auto& data = at(name);
    require(static_cast<bool>(data.velocity), ErrorKind::kInvalidArgument, "region '" + name + "' lacks velocity data");
  }
}

PressureFaceValue pressure_face_value(const PrimalMesh& mesh, Idx face, const Eigen::VectorXd& pressure) {
  const auto& f = mesh.faces()[face];
  const double face_sum = pressure[f.vertices[0]] + pressure[f.vertices[1]] + pressure[f.vertices[2]];
  auto per_tet = [&](Idx t) {
    double bary = 0.0;
    for (Idx v : mesh.tets()[t]) bary += pressure[v];
    return (face_sum + bary / 4.0) / 4.0;
  };
  PressureFaceValue out;
  out.owner = per_tet(f.owner);
  out.neighbor = f.neighbor == kNone ? std::numeric_limits<double>::quiet_NaN() : per_tet(f.neighbor);
  return out;
}

Eigen::SparseMatrix<double> assemble_poisson(const PrimalMesh& mesh) {
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(16 * std::size_t(mesh.num_tets()));
  for (Idx t = 0; t < mesh.num_tets(); ++t) {
    const Eigen::Matrix4d local = mesh.tet_volume(t) * mesh.grad_lambda(t).transpose() * mesh.grad_lambda(t);
    const auto& tet = mesh.tets()[t];
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) trip.emplace_back(tet[a], tet[b], local(a, b));
  }
  Eigen::SparseMatrix<double> a(mesh.num_vertices(), mesh.num_vertices());
  a.setFromTriplets(trip.begin(), trip.end());
  return a;
}

HybridOperators::HybridOperators(const PrimalMesh& primal, const DualMesh& dual) : primal_(&primal), dual_(&dual) {
  require(dual.num_cells() == primal.num_faces(), ErrorKind::kInvalidArgument, "dual mesh does not match primal mesh");
  const Idx nv = primal.num_vertices();
  const Idx nc = dual.num_cells();

  std::vector<Eigen::Triplet<double>> vol;
  vol.reserve(24 * std::size_t(nc));
  for (Idx i = 0; i < nc; ++i) {
    (dual.is_boundary(i) ? boundary_ : interior_).push_back(i);
    for (Idx t : dual.generating_tets(i)) {
      if (t == kNone) continue;
      const double w = primal.tet_volume(t) / 4.0;
      const auto& tet = primal.tets()[t];
      for (int a = 0; a < 4; ++a)
        for (int k = 0; k < 3; ++k) vol.emplace_back(tet[a], 3 * i + k, w * primal.grad_lambda(t)(k, a));
    }
  }
  div_volume_.resize(nv, 3 * nc);
  div_volume_.setFromTriplets(vol.begin(), vol.end());

  std::vector<Eigen::Triplet<double>> full = vol;
  for (Idx f = 0; f < primal.num_faces(); ++f) {
    const auto& face = primal.faces()[f];
    if (!face.is_boundary()) continue;
    boundary_faces_.push_back(f);
    const Vec3 av = primal.face_area_vector(f);
    for (Idx v : face.vertices)
      for (int k = 0; k < 3; ++k) full.emplace_back(v, 3 * f + k, -av[k] / 3.0);
  }
  div_full_.resize(nv, 3 * nc);
  div_full_.setFromTriplets(full.begin(), full.end());

  vertex_mass_.setZero(nv);
  for (Idx t = 0; t < primal.num_tets(); ++t)
    for (Idx v : primal.tets()[t]) vertex_mass_[v] += primal.tet_volume(t) / 4.0;

  // Interior columns only, scaled by 1/|C_i|.
  Eigen::SparseMatrix<double> scaled = div_volume_;
  Eigen::VectorXd col_scale = Eigen::VectorXd::Zero(3 * nc);
  for (Idx i : interior_) col_scale.segment<3>(3 * i).setConstant(1.0 / dual.volume(i));
  scaled = scaled * col_scale.asDiagonal();
  Eigen::SparseMatrix<double> interior_div = div_volume_;
  Eigen::VectorXd mask = Eigen::VectorXd::Zero(3 * nc);
  for (Idx i : interior_) mask.segment<3>(3 * i).setOnes();
  interior_div = interior_div * mask.asDiagonal();
  projection_ = (scaled * Eigen::SparseMatrix<double>(interior_div.transpose())).pruned();
}

Eigen::VectorXd HybridOperators::divergence(const Eigen::Matrix3Xd& momentum) const {
  return div_full_ * momentum.reshaped();
}

Eigen::VectorXd HybridOperators::zero_mean_part(const Eigen::VectorXd& functional) const {
  return functional - (functional.sum() / vertex_mass_.sum()) * vertex_mass_;
}

Eigen::Matrix3Xd HybridOperators::cell_gradient_integral(const Eigen::VectorXd& p) const {
  Eigen::VectorXd flat = div_volume_.transpose() * p;
  return flat.reshaped(3, dual_->num_cells());
}

Eigen::Matrix3Xd HybridOperators::cell_gradient(const Eigen::VectorXd& p) const {
  Eigen::Matrix3Xd g = cell_gradient_integral(p);
  return g * dual_->volumes().cwiseInverse().asDiagonal();
}

double HybridOperators::mean_value(const Eigen::VectorXd& p) const {
  return vertex_mass_.dot(p) / vertex_mass_.sum();
}

Eigen::MatrixXd HybridOperators::tet_jacobians(const Eigen::MatrixXd& field) const {
  const Idx nt = primal_->num_tets();
  const Eigen::Index k = field.rows();
  Eigen::MatrixXd out(k, 3 * nt);
  Eigen::MatrixXd face_values(k, 4);
  for (Idx t = 0; t < nt; ++t) {
    const auto& tf = primal_->tet_faces(t);
    for (int f = 0; f < 4; ++f) face_values.col(f) = field.col(tf[f]);
    out.middleCols(3 * t, 3).noalias() = -3.0 * face_values * primal_->grad_lambda(t).transpose();
  }
  return out;
}

Eigen::MatrixXd HybridOperators::node_jacobians(const Eigen::MatrixXd& field) const {
  const Eigen::MatrixXd per_tet = tet_jacobians(field);
  const Idx nc = dual_->num_cells();
  Eigen::MatrixXd out(field.rows(), 3 * nc);
  for (Idx i = 0; i < nc; ++i) {
    const auto& gen = dual_->generating_tets(i);
    if (gen[1] == kNone)
      out.middleCols(3 * i, 3) = per_tet.middleCols(3 * gen[0], 3);
    else
      out.middleCols(3 * i, 3) = 0.5 * (per_tet.middleCols(3 * gen[0], 3) + per_tet.middleCols(3 * gen[1], 3));
  }
  return out;
}

Eigen::MatrixXd HybridOperators::diffusion_flux_sum(const Eigen::MatrixXd& field) const {
  const Eigen::MatrixXd jac = tet_jacobians(field);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(field.rows(), dual_->num_cells());
  const auto& facets = dual_->facets();
  for (std::size_t f = 0; f < facets.size(); ++f) {
    const auto& facet = facets[f];
    const Eigen::VectorXd flux = facet.area * (jac.middleCols(3 * facet.tet, 3) * facet.normal);
    out.col(facet.left) += flux;
    if (facet.right != kNone) out.col(facet.right) -= flux;
  }
  return out;
}

Eigen::VectorXd HybridOperators::boundary_load(const Eigen::VectorXd& face_flux) const {
  require(face_flux.size() == static_cast<Eigen::Index>(boundary_faces_.size()), ErrorKind::kInvalidArgument,
          "boundary flux length mismatch");
  Eigen::VectorXd load = Eigen::VectorXd::Zero(primal_->num_vertices());
  for (std::size_t b = 0; b < boundary_faces_.size(); ++b) {
    const Idx f = boundary_faces_[b];
    const double area = primal_->face_area_vector(f).norm();
    for (Idx v : primal_->faces()[f].vertices) load[v] += face_flux[b] * area / 3.0;
  }
  return load;
}

FomState SnapshotSet::state(Eigen::Index n) const {
  FomState s;
  s.time = times[n];
  s.momentum = momentum.col(n).reshaped(3, momentum.rows() / 3);
  s.pressure = pressure.col(n);
  s.species = species.col(n);
  return s;
}

void SnapshotSet::append(const FomState& s) {
  const Eigen::Index n = times.size();
  if (n == 0) {
    momentum.resize(3 * s.momentum.cols(), 0);
    pressure.resize(s.pressure.size(), 0);
    species.resize(s.species.size(), 0);
  }
  times.conservativeResize(n + 1);
  times[n] = s.time;
  momentum.conservativeResize(Eigen::NoChange, n + 1);
  momentum.col(n) = s.momentum.reshaped();
  pressure.conservativeResize(Eigen::NoChange, n + 1);
  pressure.col(n) = s.pressure;
  species.conservativeResize(Eigen::NoChange, n + 1);
  species.col(n) = s.species;
}

FomSolver::FomSolver(const HybridOperators& ops, FluidParams params, BoundaryConditions bc, SourceTerm source,
                     double tolerance)
    : ops_(&ops), params_(params), bc_(std::move(bc)), source_(std::move(source)), tolerance_(tolerance) {
  params_.validate();
  bc_.validate(ops.primal());
  require(tolerance_ > 0.0 && tolerance_ < 1.0, ErrorKind::kInvalidArgument, "solver tolerance must lie in (0,1)");
}

void FomSolver::apply_dirichlet(Eigen::Matrix3Xd& momentum, Eigen::VectorXd& species, double t) const {
  const auto& dual = ops_->dual();
  const auto& names = ops_->primal().tag_names();
  for (Idx i : ops_->boundary_cells()) {
    const auto& data = bc_.at(names[dual.tag(i)]);
    momentum.col(i) = params_.rho * data.velocity(dual.node(i), t);
    species[i] = data.species ? data.species(dual.node(i), t) : 0.0;
  }
}

StageResult FomSolver::transport_diffusion_stage(const FomState& state, double dt) const {
  const auto& dual = ops_->dual();
  const Idx nc = dual.num_cells();
  require(state.momentum.cols() == nc && state.species.size() == nc &&
              state.pressure.size() == ops_->primal().num_vertices(),
          ErrorKind::kInvalidArgument, "state does not match mesh");

  const Eigen::Matrix3Xd velocity = state.momentum / params_.rho;
  const Eigen::MatrixXd jac_u = ops_->tet_jacobians(velocity);
  const Eigen::MatrixXd jac_y = ops_->tet_jacobians(state.species.transpose());

  Eigen::Matrix4Xd residual = Eigen::Matrix4Xd::Zero(4, nc);
  const auto& facets = dual.facets();
  for (Idx f = 0; f < dual.num_interior_facets(); ++f) {
    const auto& facet = facets[f];
    FacetStates s;
    s.left << state.momentum.col(facet.left), state.species[facet.left];
    s.right << state.momentum.col(facet.right), state.species[facet.right];
    s.u_left = velocity.col(facet.left);
    s.u_right = velocity.col(facet.right);
    if (reconstruction_) reconstruction_(f, facet, s);
    Eigen::Vector4d flux = -facet.area * rusanov_flux<double>(s.left, s.right, s.u_left, s.u_right, facet.normal);
    flux.head<3>() += facet.area * params_.mu * (jac_u.middleCols<3>(3 * facet.tet) * facet.normal);
    flux[3] += facet.area * params_.diffusivity * jac_y.middleCols<3>(3 * facet.tet).row(0).dot(facet.normal);
    residual.col(facet.left) += flux;
    residual.col(facet.right) -= flux;
  }

  const Eigen::Matrix3Xd grad_p = ops_->cell_gradient_integral(state.pressure);
  StageResult out{state.momentum, state.species};
  for (Idx i : ops_->interior_cells()) {
    const double scale = dt / dual.volume(i);
    out.momentum.col(i) += scale * (residual.col(i).head<3>() - grad_p.col(i)) + dt * source_(dual.node(i), state.time);
    out.species[i] += scale * residual(3, i);
    if (!out.momentum.col(i).allFinite() || !std::isfinite(out.species[i]))
      fail(ErrorKind::kNumericalBlowup, "non-finite value in cell " + std::to_string(i));
  }
  apply_dirichlet(out.momentum, out.species, state.time + dt);
  return out;
}

ProjectionResult FomSolver::projection_stage(const Eigen::Matrix3Xd& momentum_tilde, double dt) const {
  require(dt > 0.0, ErrorKind::kInvalidArgument, "projection needs dt > 0");
  const auto& primal = ops_->primal();
  ProjectionResult out;
  out.boundary_flux.resize(static_cast<Eigen::Index>(ops_->boundary_faces().size()));
  for (std::size_t b = 0; b < ops_->boundary_faces().size(); ++b) {
    const Idx f = ops_->boundary_faces()[b];
    out.boundary_flux[b] = momentum_tilde.col(f).dot(primal.face_area_vector(f).normalized());
  }

  // V_0 weak problem: L delta = r/dt - mu m, then fix the zero-mean constant.
  const Eigen::VectorXd rhs = ops_->zero_mean_part(ops_->divergence(momentum_tilde) / dt);
  const Eigen::VectorXd& mass = ops_->vertex_mass();
  if (rhs.norm() == 0.0) {
    out.delta = Eigen::VectorXd::Zero(primal.num_vertices());
    return out;
  }
  Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper> cg;
  cg.setTolerance(tolerance_);
  cg.setMaxIterations(std::max<Eigen::Index>(1000, 10 * primal.num_vertices()));
  cg.compute(ops_->projection_matrix());
  out.delta = cg.solve(rhs);
  out.iterations = static_cast<int>(cg.iterations());
  out.delta.array() -= mass.dot(out.delta) / mass.sum();
  const Eigen::VectorXd res = ops_->zero_mean_part(ops_->projection_matrix() * out.delta - rhs);
  out.relative_residual = res.norm() / rhs.norm();
  if (cg.info() != Eigen::Success && out.relative_residual > tolerance_)
    fail(ErrorKind::kSolverFailure, "pressure correction did not converge (residual " +
                                        std::to_string(out.relative_residual) + ")");
  return out;
}

Eigen::Matrix3Xd FomSolver::post_projection(const Eigen::Matrix3Xd& momentum_tilde, const Eigen::VectorXd& delta,
                                            double dt) const {
  const Eigen::Matrix3Xd grad = ops_->cell_gradient(delta);
  Eigen::Matrix3Xd out = momentum_tilde;
  for (Idx i : ops_->interior_cells()) out.col(i) -= dt * grad.col(i);
  return out;
}

double FomSolver::relative_divergence(const Eigen::Matrix3Xd& momentum) const {
  const Eigen::VectorXd r = ops_->zero_mean_part(ops_->divergence(momentum));
  const Eigen::VectorXd scale = ops_->divergence_functional().cwiseAbs() * momentum.reshaped().cwiseAbs();
  const double s = scale.norm();
  return s > 0.0 ? r.norm() / s : 0.0;
}

void FomSolver::project_initial(FomState& state) const {
  apply_dirichlet(state.momentum, state.species, state.time);
  const ProjectionResult pr = projection_stage(state.momentum, 1.0);
  state.momentum = post_projection(state.momentum, pr.delta, 1.0);
}

FomStepInfo FomSolver::step(FomState& state, double dt) const {
  StageResult stage = transport_diffusion_stage(state, dt);
  const ProjectionResult pr = projection_stage(stage.momentum, dt);
  FomStepInfo info;
  info.dt = dt;
  info.cg_iterations = pr.iterations;
  state.momentum = post_projection(stage.momentum, pr.delta, dt);
  info.divergence = relative_divergence(state.momentum);
  state.species = std::move(stage.species);
  state.pressure += pr.delta;
  info.pressure_mean = ops_->mean_value(state.pressure);
  state.time += dt;
  return info;
}

SnapshotSet FomSolver::run(FomState state, const TimeControls& controls, FomDiagnostics* diagnostics,
                           const Observer& observer) const {
  controls.validate();
  FomDiagnostics diag;
  SnapshotSet snaps;
  snaps.append(state);
  const double interval = controls.snapshot_interval;
  const double eps = 1e-9 * interval;
  long next = 1;
  while (state.time < controls.t_end - eps) {
    const double target = std::min(static_cast<double>(next) * interval, controls.t_end);
    double dt = compute_dt(state, params_, ops_->dual(), controls.cfl);
    const bool hit = state.time + dt >= target - eps;
    if (hit) dt = target - state.time;
    FomStepInfo info;
    try {
      info = step(state, dt);
    } catch (const Error& e) {
      fail(e.kind(), std::string(e.what()) + " at t=" + std::to_string(state.time));
    }
    if (hit) state.time = target;
    ++diag.steps;
    diag.max_divergence = std::max(diag.max_divergence, info.divergence);
    diag.max_pressure_mean = std::max(diag.max_pressure_mean, std::abs(info.pressure_mean));
    diag.max_cg_iterations = std::max(diag.max_cg_iterations, info.cg_iterations);
    diag.max_speed = std::max(diag.max_speed, state.momentum.colwise().norm().maxCoeff() / params_.rho);
    if (observer) observer(state, info);
    if (hit) {
      snaps.append(state);
      if (target >= static_cast<double>(next) * interval - eps) ++next;
    }
  }
  if (diagnostics) *diagnostics = diag;
  return snaps;
}

double compute_dt(const FomState& state, const FluidParams& params, const DualMesh& dual, double cfl) {
  constexpr double kSpeedFloor = 1e-12;
  const double diff = 2.0 * (params.nu() + params.diffusivity);
  double best = std::numeric_limits<double>::infinity();
  for (Idx i = 0; i < dual.num_cells(); ++i) {
    const double h = dual.volume(i) / dual.surface_area(i);
    const double speed = state.momentum.col(i).norm() / params.rho;
    best = std::min(best, h / (speed + kSpeedFloor + diff / h));
  }
  return cfl * best;
}

}  // namespace hfvrom
