#include "hfvrom/rom.hpp"

#include <cmath>
#include <optional>

#include "hfvrom/parallel.hpp"

namespace hfvrom {

Eigen::VectorXd Tensor3::contract(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const {
  require(x.size() == dims_[1] && y.size() == dims_[2], ErrorKind::kInvalidArgument, "tensor contraction size mismatch");
  Eigen::VectorXd out(dims_[0]);
  for (Eigen::Index i = 0; i < dims_[0]; ++i) out[i] = x.dot(slice(i) * y);
  return out;
}

Eigen::MatrixXd Tensor3::slice(Eigen::Index i) const {
  return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      data_.data() + i * dims_[1] * dims_[2], dims_[1], dims_[2]);
}

namespace mode_derivatives {

Eigen::MatrixXd gradient(const HybridOperators& ops, const Eigen::MatrixXd& field) { return ops.node_jacobians(field); }

Eigen::VectorXd divergence(const HybridOperators& ops, const Eigen::Matrix3Xd& field) {
  const Eigen::MatrixXd jac = ops.node_jacobians(field);
  Eigen::VectorXd out(field.cols());
  for (Eigen::Index i = 0; i < field.cols(); ++i) out[i] = jac.middleCols<3>(3 * i).trace();
  return out;
}

Eigen::Matrix3Xd tensor_divergence(const HybridOperators& ops, const Eigen::MatrixXd& tensor) {
  require(tensor.rows() == 9, ErrorKind::kInvalidArgument, "tensor field needs 9 rows");
  const Eigen::MatrixXd jac = ops.node_jacobians(tensor);
  Eigen::Matrix3Xd out(3, tensor.cols());
  for (Eigen::Index i = 0; i < tensor.cols(); ++i)
    for (int a = 0; a < 3; ++a) out(a, i) = jac(3 * a, 3 * i) + jac(3 * a + 1, 3 * i + 1) + jac(3 * a + 2, 3 * i + 2);
  return out;
}

Eigen::Matrix3Xd convection(const HybridOperators& ops, const Eigen::Matrix3Xd& u, const Eigen::Matrix3Xd& v) {
  Eigen::MatrixXd tensor(9, u.cols());
  for (Eigen::Index i = 0; i < u.cols(); ++i)
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) tensor(3 * a + b, i) = u(a, i) * v(b, i);
  return tensor_divergence(ops, tensor);
}

Eigen::MatrixXd laplacian(const HybridOperators& ops, const Eigen::MatrixXd& field) {
  return ops.diffusion_flux_sum(field) * ops.dual().volumes().cwiseInverse().asDiagonal();
}

Eigen::Matrix3Xd curl(const HybridOperators& ops, const Eigen::Matrix3Xd& field) {
  const Eigen::MatrixXd jac = ops.node_jacobians(field);
  Eigen::Matrix3Xd out(3, field.cols());
  for (Eigen::Index i = 0; i < field.cols(); ++i) {
    const auto j = jac.middleCols<3>(3 * i);
    out.col(i) << j(2, 1) - j(1, 2), j(0, 2) - j(2, 0), j(1, 0) - j(0, 1);
  }
  return out;
}

}  // namespace mode_derivatives

Eigen::VectorXd ForcingSamples::at(double t, Eigen::Index rows) const {
  if (values.cols() == 0) return Eigen::VectorXd::Zero(rows);
  require(values.rows() == rows, ErrorKind::kInvalidArgument, "forcing sample size mismatch");
  if (values.cols() == 1 || spacing <= 0.0) return values.col(0);
  const double s = std::clamp((t - t0) / spacing, 0.0, double(values.cols() - 1));
  const auto k = std::min<Eigen::Index>(static_cast<Eigen::Index>(std::floor(s)), values.cols() - 2);
  const double w = s - double(k);
  return (1.0 - w) * values.col(k) + w * values.col(k + 1);
}

void RomOperators::validate() const {
  const Eigen::Index n = n_momentum(), np = n_pressure(), ny = n_species();
  auto dims_ok = [](const Eigen::MatrixXd& m, Eigen::Index r, Eigen::Index c) { return m.rows() == r && m.cols() == c; };
  require(dims_ok(M, n, n) && dims_ok(B, n, n) && dims_ok(K, n, np) && dims_ok(F, n, n) && dims_ok(N, np, np) &&
              dims_ok(H, np, n) && dims_ok(P, np, n) && dims_ok(Q, ny, ny),
          ErrorKind::kInvalidArgument, "reduced operator dimensions are inconsistent");
  require(C.dims() == std::array<Eigen::Index, 3>{n, n, n} && D.dims() == std::array<Eigen::Index, 3>{np, n, n} &&
              E.dims() == std::array<Eigen::Index, 3>{ny, n, ny},
          ErrorKind::kInvalidArgument, "reduced tensor dimensions are inconsistent");
  require(G.values.cols() == 0 || G.values.rows() == np, ErrorKind::kInvalidArgument, "forcing sample size mismatch");
  require(boundary_rate.values.cols() == 0 || boundary_rate.values.rows() == n, ErrorKind::kInvalidArgument,
          "boundary rate sample size mismatch");
  for (const auto* m : {&M, &B, &K, &F, &N, &H, &P, &Q})
    require(m->allFinite(), ErrorKind::kIllConditionedBasis, "reduced operator has non-finite entries");
  for (const auto* t : {&C, &D, &E})
    require(t->data().allFinite(), ErrorKind::kIllConditionedBasis, "reduced tensor has non-finite entries");
}

namespace {

Eigen::Matrix3Xd as_vector_field(const Eigen::VectorXd& flat) { return flat.reshaped(3, flat.size() / 3); }

/// Vertex functional of a cell vector field restricted to a set of cells.
Eigen::VectorXd weak_divergence(const Eigen::SparseMatrix<double>& d, const Eigen::Matrix3Xd& field,
                                const std::vector<Idx>& cells) {
  Eigen::VectorXd masked = Eigen::VectorXd::Zero(3 * field.cols());
  for (Idx i : cells) masked.segment<3>(3 * i) = field.col(i);
  return d * masked;
}

void check_layouts(const HybridOperators& ops, const RomBases& bases) {
  const Eigen::Index nc = ops.dual().num_cells();
  require(bases.momentum.modes.rows() == 3 * nc, ErrorKind::kInvalidArgument, "momentum basis does not match mesh");
  require(bases.pressure.modes.rows() == ops.primal().num_vertices(), ErrorKind::kInvalidArgument,
          "pressure basis does not match mesh");
  require(bases.source.cols() == 0 || (bases.source.rows() == 3 * nc && bases.source.cols() == bases.momentum.size()),
          ErrorKind::kInvalidArgument, "source basis does not match the momentum basis");
  if (bases.species)
    require(bases.species->modes.rows() == nc, ErrorKind::kInvalidArgument, "species basis does not match mesh");
}

/// Zeroes the rows of boundary cells; `components` rows per cell.
Eigen::MatrixXd restrict_to_interior(const HybridOperators& ops, Eigen::MatrixXd m, int components) {
  for (Idx i : ops.boundary_cells()) m.middleRows(Eigen::Index(components) * i, components).setZero();
  return m;
}

/// Transported-field convection for every (j, k) pair, flattened: row data from
/// u_j, transporting momentum v_k, divided by rho.
std::vector<Eigen::VectorXd> convection_fields(const HybridOperators& ops, const Eigen::MatrixXd& u,
                                               int components, const Eigen::MatrixXd& v, double rho,
                                               ConvectionForm form) {
  const Eigen::Index nu = u.cols(), nv = v.cols();
  std::vector<Eigen::VectorXd> out(static_cast<std::size_t>(nu * nv));
  parallel_for(out.size(), [&](std::size_t jk) {
    const Eigen::Index j = Eigen::Index(jk) / nv, k = Eigen::Index(jk) % nv;
    const Eigen::MatrixXd uj = u.col(j).reshaped(components, u.rows() / components);
    const Eigen::Matrix3Xd vk = as_vector_field(v.col(k));
    if (form == ConvectionForm::kFacet) {
      out[jk] = facet_convection(ops, uj, vk, rho).reshaped();
    } else if (components == 3) {
      out[jk] = mode_derivatives::convection(ops, uj, vk).reshaped() / rho;
    } else {
      out[jk] = mode_derivatives::divergence(ops, vk * uj.row(0).transpose().asDiagonal()) / rho;
    }
  });
  return out;
}

/// Samples of f(t) on [0, t_end] every `spacing` seconds; empty when f vanishes.
template <class Fn>
ForcingSamples sample_forcing(Eigen::Index rows, const RomAssemblyOptions& options, Fn&& f) {
  require(options.spacing > 0.0 && options.t_end >= 0.0, ErrorKind::kInvalidArgument,
          "forcing sampling needs spacing > 0");
  const auto samples = static_cast<Eigen::Index>(std::ceil(options.t_end / options.spacing - 1e-9)) + 1;
  Eigen::MatrixXd values(rows, samples);
  parallel_for(static_cast<std::size_t>(samples),
               [&](std::size_t s) { values.col(Eigen::Index(s)) = f(double(s) * options.spacing); });
  if (rows == 0 || values.cwiseAbs().maxCoeff() == 0.0) return {};
  return {0.0, options.spacing, std::move(values)};
}

/// rho * boundary velocity rate at the boundary-cell nodes; nullopt when it vanishes.
std::optional<Eigen::Matrix3Xd> boundary_rate_field(const HybridOperators& ops, const FluidParams& params,
                                                    const BoundaryConditions& bc, double t) {
  const auto& dual = ops.dual();
  const auto& names = ops.primal().tag_names();
  Eigen::Matrix3Xd rate = Eigen::Matrix3Xd::Zero(3, dual.num_cells());
  bool any = false;
  for (Idx i : ops.boundary_cells()) {
    const auto& data = bc.at(names[dual.tag(i)]);
    if (!data.velocity_rate) continue;
    rate.col(i) = params.rho * data.velocity_rate(dual.node(i), t);
    any = any || rate.col(i).squaredNorm() > 0.0;
  }
  if (!any) return std::nullopt;
  return rate;
}

}  // namespace

Eigen::MatrixXd facet_speeds(const HybridOperators& ops, const Eigen::MatrixXd& momentum_snapshots, double rho) {
  const auto& dual = ops.dual();
  require(momentum_snapshots.rows() == 3 * dual.num_cells(), ErrorKind::kInvalidArgument,
          "momentum snapshots do not match mesh");
  const auto& facets = dual.facets();
  Eigen::MatrixXd speeds(dual.num_interior_facets(), momentum_snapshots.cols());
  parallel_for(static_cast<std::size_t>(speeds.rows()), [&](std::size_t f) {
    const auto& facet = facets[f];
    for (Eigen::Index n = 0; n < momentum_snapshots.cols(); ++n) {
      const double l = momentum_snapshots.col(n).segment<3>(3 * facet.left).dot(facet.normal);
      const double r = momentum_snapshots.col(n).segment<3>(3 * facet.right).dot(facet.normal);
      speeds(Eigen::Index(f), n) = std::max(std::abs(l), std::abs(r)) / rho;
    }
  });
  return speeds;
}

Eigen::MatrixXd facet_convection(const HybridOperators& ops, const Eigen::MatrixXd& u, const Eigen::Matrix3Xd& v,
                                 double rho) {
  const auto& dual = ops.dual();
  require(u.cols() == dual.num_cells() && v.cols() == dual.num_cells(), ErrorKind::kInvalidArgument,
          "convection fields do not match mesh");
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(u.rows(), u.cols());
  for (const auto& facet : dual.facets()) {
    if (facet.right == kNone) {
      out.col(facet.left) += facet.area * v.col(facet.left).dot(facet.normal) * u.col(facet.left);
      continue;
    }
    const Eigen::VectorXd flux = 0.5 * facet.area *
                                 (v.col(facet.left).dot(facet.normal) * u.col(facet.left) +
                                  v.col(facet.right).dot(facet.normal) * u.col(facet.right));
    out.col(facet.left) += flux;
    out.col(facet.right) -= flux;
  }
  return out * (dual.volumes().cwiseInverse() / rho).asDiagonal();
}

Eigen::MatrixXd facet_dissipation(const HybridOperators& ops, const Eigen::VectorXd& speeds, const Eigen::MatrixXd& u) {
  const auto& dual = ops.dual();
  require(speeds.size() == dual.num_interior_facets() && u.cols() == dual.num_cells(), ErrorKind::kInvalidArgument,
          "dissipation inputs do not match mesh");
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(u.rows(), u.cols());
  const auto& facets = dual.facets();
  for (Idx f = 0; f < dual.num_interior_facets(); ++f) {
    const auto& facet = facets[f];
    const Eigen::VectorXd jump = 0.5 * facet.area * speeds[f] * (u.col(facet.right) - u.col(facet.left));
    out.col(facet.left) += jump;
    out.col(facet.right) -= jump;
  }
  return out * dual.volumes().cwiseInverse().asDiagonal();
}

void assemble_momentum_ops(const HybridOperators& ops, const RomBases& bases, const FluidParams& params,
                           const BoundaryConditions& bc, const RomAssemblyOptions& options, RomOperators& out) {
  check_layouts(ops, bases);
  const auto space = InnerProductSpace::finite_volume(ops.dual(), 3);
  const Eigen::MatrixXd& phi = bases.momentum.modes;
  const Eigen::Index n = phi.cols();
  const Eigen::MatrixXd gphi_full = space.apply(phi);
  const Eigen::MatrixXd gphi = options.interior_residual ? restrict_to_interior(ops, gphi_full, 3) : gphi_full;

  out.M = phi.transpose() * gphi_full;
  out.M = 0.5 * (out.M + out.M.transpose()).eval();

  Eigen::MatrixXd lap(phi.rows(), n);
  for (Eigen::Index j = 0; j < n; ++j)
    lap.col(j) = mode_derivatives::laplacian(ops, as_vector_field(phi.col(j))).reshaped();
  out.B = params.nu() * gphi.transpose() * lap;

  const Eigen::MatrixXd& psi = bases.pressure.modes;
  Eigen::MatrixXd grad_psi(phi.rows(), psi.cols());
  for (Eigen::Index j = 0; j < psi.cols(); ++j) grad_psi.col(j) = ops.cell_gradient(psi.col(j)).reshaped();
  out.K = gphi.transpose() * grad_psi;

  out.F = bases.source.cols() ? Eigen::MatrixXd(gphi.transpose() * bases.source) : Eigen::MatrixXd::Zero(n, n);

  const auto conv = convection_fields(ops, phi, 3, phi, params.rho, options.convection);
  out.C = Tensor3(n, n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index k = 0; k < n; ++k) {
      const Eigen::VectorXd proj = gphi.transpose() * conv[std::size_t(j * n + k)];
      for (Eigen::Index i = 0; i < n; ++i) out.C(i, j, k) = proj[i];
    }

  out.boundary_rate = {};
  if (options.interior_residual) {
    const Eigen::MatrixXd gphi_b = gphi_full - gphi;
    out.boundary_rate = sample_forcing(n, options, [&](double t) -> Eigen::VectorXd {
      const auto rate = boundary_rate_field(ops, params, bc, t);
      if (!rate) return Eigen::VectorXd::Zero(n);
      return gphi_b.transpose() * rate->reshaped();
    });
  }
}

void assemble_pressure_ops(const HybridOperators& ops, const RomBases& bases, const FluidParams& params,
                           const BoundaryConditions& bc, const RomAssemblyOptions& options, RomOperators& out) {
  check_layouts(ops, bases);
  const Eigen::MatrixXd& phi = bases.momentum.modes;
  const Eigen::MatrixXd& psi = bases.pressure.modes;
  const Eigen::Index n = phi.cols(), np = psi.cols();
  const auto& interior = ops.interior_cells();
  const auto& dvol = ops.divergence_volume();

  out.N = psi.transpose() * ops.projection_matrix() * psi;
  out.N = 0.5 * (out.N + out.N.transpose()).eval();

  auto tested = [&](const Eigen::VectorXd& flat) -> Eigen::VectorXd {
    return psi.transpose() * weak_divergence(dvol, as_vector_field(flat), interior);
  };

  out.H = Eigen::MatrixXd::Zero(np, n);
  if (bases.source.cols())
    for (Eigen::Index j = 0; j < n; ++j) out.H.col(j) = tested(bases.source.col(j));

  out.P.resize(np, n);
  for (Eigen::Index j = 0; j < n; ++j)
    out.P.col(j) = tested(params.nu() * mode_derivatives::laplacian(ops, as_vector_field(phi.col(j))).reshaped());

  const auto conv = convection_fields(ops, phi, 3, phi, params.rho, options.convection);
  out.D = Tensor3(np, n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index k = 0; k < n; ++k) {
      const Eigen::VectorXd v = -tested(conv[std::size_t(j * n + k)]);
      for (Eigen::Index i = 0; i < np; ++i) out.D(i, j, k) = v[i];
    }

  // G_i(t) = psi_i . (boundary-cell columns of the divergence functional) rho g_t.
  out.G = sample_forcing(np, options, [&](double t) -> Eigen::VectorXd {
    const auto rate = boundary_rate_field(ops, params, bc, t);
    if (!rate) return Eigen::VectorXd::Zero(np);
    return psi.transpose() * weak_divergence(ops.divergence_functional(), *rate, ops.boundary_cells());
  });
}

void assemble_transport_ops(const HybridOperators& ops, const RomBases& bases, const FluidParams& params,
                            const RomAssemblyOptions& options, RomOperators& out) {
  check_layouts(ops, bases);
  const Eigen::Index n = bases.momentum.size();
  if (!bases.species) {
    out.E = Tensor3(0, n, 0);
    out.Q.resize(0, 0);
    return;
  }
  const auto space = InnerProductSpace::finite_volume(ops.dual(), 1);
  const Eigen::MatrixXd& chi = bases.species->modes;
  const Eigen::Index ny = chi.cols();
  Eigen::MatrixXd gchi = space.apply(chi);
  if (options.interior_residual) gchi = restrict_to_interior(ops, gchi, 1);

  const Eigen::MatrixXd lap = mode_derivatives::laplacian(ops, chi.transpose());
  out.Q = params.diffusivity * gchi.transpose() * lap.transpose();

  // E(i, j, k): transported species mode k, transporting momentum mode j.
  const auto conv = convection_fields(ops, chi, 1, bases.momentum.modes, params.rho, options.convection);
  out.E = Tensor3(ny, n, ny);
  for (Eigen::Index k = 0; k < ny; ++k)
    for (Eigen::Index j = 0; j < n; ++j) {
      const Eigen::VectorXd proj = gchi.transpose() * conv[std::size_t(k * n + j)];
      for (Eigen::Index i = 0; i < ny; ++i) out.E(i, j, k) = proj[i];
    }
}

void assemble_upwind_ops(const HybridOperators& ops, const RomBases& bases, const RomAssemblyOptions& options,
                         RomOperators& out) {
  check_layouts(ops, bases);
  out.B_upwind = out.P_upwind = out.Q_upwind = {};
  const Eigen::MatrixXd& speeds = options.facet_speeds;
  if (speeds.size() == 0) return;
  require(speeds.rows() == ops.dual().num_interior_facets(), ErrorKind::kInvalidArgument,
          "facet speed count does not match the interior facets");
  require(speeds.cols() == 1 || options.speed_spacing > 0.0, ErrorKind::kInvalidArgument,
          "sampled facet speeds need a positive spacing");

  const Eigen::MatrixXd& phi = bases.momentum.modes;
  const Eigen::MatrixXd& psi = bases.pressure.modes;
  const Eigen::Index n = phi.cols(), np = psi.cols();
  const Eigen::Index ny = bases.species ? bases.species->size() : 0;
  Eigen::MatrixXd gphi = InnerProductSpace::finite_volume(ops.dual(), 3).apply(phi);
  Eigen::MatrixXd gchi = bases.species ? InnerProductSpace::finite_volume(ops.dual(), 1).apply(bases.species->modes)
                                       : Eigen::MatrixXd();
  if (options.interior_residual) {
    gphi = restrict_to_interior(ops, gphi, 3);
    if (ny) gchi = restrict_to_interior(ops, gchi, 1);
  }
  const Eigen::MatrixXd chi_rows = ny ? Eigen::MatrixXd(bases.species->modes.transpose()) : Eigen::MatrixXd();

  const Eigen::Index samples = speeds.cols();
  Eigen::MatrixXd bv(n * n, samples), pv(np * n, samples), qv(ny * ny, samples);
  parallel_for(static_cast<std::size_t>(samples), [&](std::size_t s) {
    const Eigen::VectorXd sp = speeds.col(Eigen::Index(s));
    Eigen::MatrixXd diss(phi.rows(), n);
    for (Eigen::Index j = 0; j < n; ++j)
      diss.col(j) = facet_dissipation(ops, sp, as_vector_field(phi.col(j))).reshaped();
    bv.col(Eigen::Index(s)) = (gphi.transpose() * diss).reshaped();
    Eigen::MatrixXd masked = diss;
    for (Idx i : ops.boundary_cells()) masked.middleRows(3 * i, 3).setZero();
    pv.col(Eigen::Index(s)) = Eigen::MatrixXd(psi.transpose() * (ops.divergence_volume() * masked)).reshaped();
    if (ny) qv.col(Eigen::Index(s)) = (gchi.transpose() * facet_dissipation(ops, sp, chi_rows).transpose()).reshaped();
  });

  if (samples == 1) {
    out.B += bv.col(0).reshaped(n, n);
    out.P += pv.col(0).reshaped(np, n);
    if (ny) out.Q += qv.col(0).reshaped(ny, ny);
    return;
  }
  out.B_upwind = {options.speed_t0, options.speed_spacing, std::move(bv)};
  out.P_upwind = {options.speed_t0, options.speed_spacing, std::move(pv)};
  if (ny) out.Q_upwind = {options.speed_t0, options.speed_spacing, std::move(qv)};
}

Eigen::MatrixXd RomOperators::B_at(double t) const {
  const Eigen::Index n = n_momentum();
  return B_upwind.values.cols() ? Eigen::MatrixXd(B + B_upwind.at(t, n * n).reshaped(n, n)) : B;
}

Eigen::MatrixXd RomOperators::P_at(double t) const {
  const Eigen::Index n = n_momentum(), np = n_pressure();
  return P_upwind.values.cols() ? Eigen::MatrixXd(P + P_upwind.at(t, np * n).reshaped(np, n)) : P;
}

Eigen::MatrixXd RomOperators::Q_at(double t) const {
  const Eigen::Index ny = n_species();
  return Q_upwind.values.cols() ? Eigen::MatrixXd(Q + Q_upwind.at(t, ny * ny).reshaped(ny, ny)) : Q;
}

RomOperators assemble_operators(const HybridOperators& ops, const RomBases& bases, const FluidParams& params,
                                const BoundaryConditions& bc, const RomAssemblyOptions& options) {
  RomOperators out;
  assemble_momentum_ops(ops, bases, params, bc, options, out);
  assemble_pressure_ops(ops, bases, params, bc, options, out);
  assemble_transport_ops(ops, bases, params, options, out);
  assemble_upwind_ops(ops, bases, options, out);
  out.validate();
  return out;
}

RomState project_initial(const FomState& state, const RomBases& bases, const InnerProductSpace& fv3,
                         const InnerProductSpace& fe, const InnerProductSpace& fv1) {
  RomState r;
  r.time = state.time;
  r.a = project(fv3, bases.momentum, state.momentum.reshaped());
  r.b = project(fe, bases.pressure, state.pressure);
  if (bases.species) r.c = project(fv1, *bases.species, state.species);
  return r;
}

FomState reconstruct(const RomState& state, const RomBases& bases) {
  require(state.a.size() == bases.momentum.size() && state.b.size() == bases.pressure.size(),
          ErrorKind::kInvalidArgument, "coefficient lengths do not match the bases");
  FomState s;
  s.time = state.time;
  s.momentum = as_vector_field(bases.momentum.modes * state.a);
  s.pressure = bases.pressure.modes * state.b;
  if (bases.species) {
    require(state.c.size() == bases.species->size(), ErrorKind::kInvalidArgument, "species coefficient length mismatch");
    s.species = bases.species->modes * state.c;
  } else {
    s.species = Eigen::VectorXd::Zero(s.momentum.cols());
  }
  return s;
}

RomModel::RomModel(RomOperators ops, RomSettings settings) : ops_(std::move(ops)), settings_(settings) {
  ops_.validate();
  mass_.compute(ops_.M);
  if (mass_.info() != Eigen::Success || !mass_.isPositive() || ops_.M.diagonal().minCoeff() <= 0.0)
    fail(ErrorKind::kIllConditionedBasis, "reduced mass matrix is not positive definite");
  const double rcond = mass_.rcond();
  require(rcond > 1e-14, ErrorKind::kIllConditionedBasis, "reduced mass matrix is singular");
  Eigen::MatrixXd n = ops_.N;
  if (n.size()) n.diagonal().array() += 1e-14 * n.trace();
  poisson_.compute(n);
  if (n.size() && (poisson_.info() != Eigen::Success || poisson_.rcond() < 1e-14))
    fail(ErrorKind::kIllConditionedBasis, "reduced pressure matrix is singular");
  shift_ = Eigen::VectorXd::Zero(ops_.n_pressure());
}

Eigen::VectorXd RomModel::recover_pressure(const Eigen::VectorXd& a, double t) const {
  const Eigen::Index np = ops_.n_pressure();
  if (np == 0) return {};
  const Eigen::VectorXd rhs = ops_.D.contract(a, a) + ops_.H * a + ops_.P_at(t) * a + ops_.G.at(t, np);
  return poisson_.solve(rhs) + shift_;
}

void RomModel::anchor(const RomState& reference) {
  shift_.setZero();
  if (settings_.anchor_pressure && ops_.n_pressure() > 0)
    shift_ = reference.b - recover_pressure(reference.a, reference.time);
}

void RomModel::rates(const Eigen::VectorXd& a, const Eigen::VectorXd& c, double t, Eigen::VectorXd& da,
                     Eigen::VectorXd& dc) const {
  Eigen::VectorXd rhs = -ops_.C.contract(a, a) + ops_.B_at(t) * a + ops_.F * a + ops_.boundary_rate.at(t, a.size());
  if (!settings_.ablate_pressure && ops_.n_pressure() > 0) rhs -= ops_.K * recover_pressure(a, t);
  da = mass_.solve(rhs);
  dc = ops_.n_species() ? Eigen::VectorXd(-ops_.E.contract(a, c) + ops_.Q_at(t) * c) : Eigen::VectorXd();
}

RomState RomModel::step(const RomState& s, double dt) const {
  require(dt > 0.0, ErrorKind::kInvalidArgument, "reduced time step must be positive");
  Eigen::VectorXd ka1, kc1, ka2, kc2, ka3, kc3, ka4, kc4;
  rates(s.a, s.c, s.time, ka1, kc1);
  rates(s.a + 0.5 * dt * ka1, s.c + 0.5 * dt * kc1, s.time + 0.5 * dt, ka2, kc2);
  rates(s.a + 0.5 * dt * ka2, s.c + 0.5 * dt * kc2, s.time + 0.5 * dt, ka3, kc3);
  rates(s.a + dt * ka3, s.c + dt * kc3, s.time + dt, ka4, kc4);
  RomState out;
  out.time = s.time + dt;
  out.a = s.a + dt / 6.0 * (ka1 + 2.0 * ka2 + 2.0 * ka3 + ka4);
  out.c = s.c + dt / 6.0 * (kc1 + 2.0 * kc2 + 2.0 * kc3 + kc4);
  if (!out.a.allFinite() || !out.c.allFinite())
    fail(ErrorKind::kNumericalBlowup, "reduced state became non-finite at t=" + std::to_string(out.time));
  out.b = recover_pressure(out.a, out.time);
  return out;
}

std::vector<RomState> RomModel::integrate(RomState initial, double t_end, double output_interval, double dt) const {
  require(output_interval > 0.0 && dt > 0.0, ErrorKind::kInvalidArgument, "reduced run needs positive steps");
  const int substeps = std::max(1, static_cast<int>(std::ceil(output_interval / dt - 1e-9)));
  const double h = output_interval / substeps;
  const double t0 = initial.time;
  const auto outputs = static_cast<long>(std::floor((t_end - t0) / output_interval + 1e-9));
  initial.b = recover_pressure(initial.a, initial.time);
  std::vector<RomState> out{initial};
  out.reserve(static_cast<std::size_t>(outputs) + 1);
  RomState s = initial;
  for (long k = 1; k <= outputs; ++k) {
    for (int m = 0; m < substeps; ++m) s = step(s, h);
    s.time = t0 + double(k) * output_interval;
    out.push_back(s);
  }
  return out;
}

}  // namespace hfvrom
