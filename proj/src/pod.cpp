#include "hfvrom/pod.hpp"

#include "hfvrom/parallel.hpp"

namespace hfvrom {

InnerProductSpace InnerProductSpace::finite_volume(const DualMesh& dual, int components) {
  require(components >= 1, ErrorKind::kInvalidArgument, "component count must be positive");
  InnerProductSpace s;
  s.kind_ = SpaceKind::kFiniteVolume;
  s.components_ = components;
  s.size_ = Eigen::Index(components) * dual.num_cells();
  s.weights_.resize(s.size_);
  for (Idx i = 0; i < dual.num_cells(); ++i) s.weights_.segment(Eigen::Index(components) * i, components).setConstant(dual.volume(i));
  s.measure_ = dual.total_volume();
  return s;
}

InnerProductSpace InnerProductSpace::finite_element(const PrimalMesh& primal) {
  InnerProductSpace s;
  s.kind_ = SpaceKind::kFiniteElement;
  s.size_ = primal.num_vertices();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(24 * std::size_t(primal.num_tets()));
  for (Idx t = 0; t < primal.num_tets(); ++t) {
    const auto& tet = primal.tets()[t];
    // Midpoint value (p_a + p_b)/2 squared and weighted by |T|/6.
    const double w = primal.tet_volume(t) / 24.0;
    for (int a = 0; a < 4; ++a)
      for (int b = a + 1; b < 4; ++b) {
        trip.emplace_back(tet[a], tet[a], w);
        trip.emplace_back(tet[b], tet[b], w);
        trip.emplace_back(tet[a], tet[b], w);
        trip.emplace_back(tet[b], tet[a], w);
      }
  }
  s.gram_.resize(s.size_, s.size_);
  s.gram_.setFromTriplets(trip.begin(), trip.end());
  s.measure_ = primal.total_volume();
  return s;
}

void InnerProductSpace::check(Eigen::Index rows) const {
  require(rows == size_, ErrorKind::kInvalidArgument,
          "field length " + std::to_string(rows) + " does not match space size " + std::to_string(size_));
}

Eigen::MatrixXd InnerProductSpace::apply(const Eigen::MatrixXd& x) const {
  check(x.rows());
  if (kind_ == SpaceKind::kFiniteVolume) return weights_.asDiagonal() * x;
  return gram_ * x;
}

double InnerProductSpace::dot(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const {
  check(a.size());
  check(b.size());
  if (kind_ == SpaceKind::kFiniteVolume) return (a.array() * weights_.array() * b.array()).sum();
  return a.dot(gram_ * b);
}

Eigen::MatrixXd correlation_matrix(const InnerProductSpace& space, const Eigen::MatrixXd& snapshots) {
  require(snapshots.cols() > 0, ErrorKind::kInvalidArgument, "correlation matrix needs at least one snapshot");
  const Eigen::Index ns = snapshots.cols();
  const Eigen::MatrixXd weighted = space.apply(snapshots);
  Eigen::MatrixXd c(ns, ns);
  parallel_for(static_cast<std::size_t>(ns), [&](std::size_t j) {
    for (Eigen::Index k = Eigen::Index(j); k < ns; ++k) c(Eigen::Index(j), k) = snapshots.col(j).dot(weighted.col(k));
  });
  for (Eigen::Index j = 0; j < ns; ++j)
    for (Eigen::Index k = j + 1; k < ns; ++k) c(k, j) = c(j, k);
  return c / static_cast<double>(ns);
}

int select_modes(const Eigen::VectorXd& cumulative, double kappa) {
  require(kappa > 0.0 && kappa <= 1.0, ErrorKind::kInvalidArgument, "kappa must lie in (0,1]");
  require(cumulative.size() > 0, ErrorKind::kInvalidArgument, "empty cumulative energy list");
  for (Eigen::Index i = 1; i < cumulative.size(); ++i)
    require(cumulative[i] >= cumulative[i - 1], ErrorKind::kInvalidArgument, "cumulative energies must not decrease");
  for (Eigen::Index i = 0; i < cumulative.size(); ++i)
    if (cumulative[i] >= kappa) return static_cast<int>(i + 1);
  // Rounding can leave the final entry a hair below 1.
  return static_cast<int>(cumulative.size());
}

int select_modes(const std::vector<double>& cumulative, double kappa) {
  return select_modes(Eigen::Map<const Eigen::VectorXd>(cumulative.data(), Eigen::Index(cumulative.size())), kappa);
}

std::string_view to_string(Variable v) {
  switch (v) {
    case Variable::kMomentum: return "momentum";
    case Variable::kPressure: return "pressure";
    case Variable::kSpecies: return "species";
  }
  return "unknown";
}

namespace {

constexpr double kEigenCutoff = 1e-12;

}  // namespace

PodBasis build_basis(const InnerProductSpace& space, const Eigen::MatrixXd& snapshots, ModeSelection selection,
                     Variable variable) {
  require(snapshots.cols() > 0, ErrorKind::kInvalidArgument, "basis needs at least one snapshot");
  const Eigen::MatrixXd corr = correlation_matrix(space, snapshots);
  if (!(corr.trace() > 0.0)) fail(ErrorKind::kDegenerateSnapshots, std::string(to_string(variable)) + " snapshots are all zero");

  const auto eig = sym_eig(corr);
  PodBasis basis;
  basis.variable = variable;
  basis.eigenvalues = eig.values.cwiseMax(0.0);
  const double total = basis.eigenvalues.sum();
  basis.cumulative.resize(basis.eigenvalues.size());
  double running = 0.0;
  for (Eigen::Index i = 0; i < basis.eigenvalues.size(); ++i) basis.cumulative[i] = (running += basis.eigenvalues[i]) / total;

  Eigen::Index admissible = 0;
  while (admissible < basis.eigenvalues.size() && basis.eigenvalues[admissible] > kEigenCutoff * basis.eigenvalues[0])
    ++admissible;
  Eigen::Index n = selection.count ? *selection.count : select_modes(basis.cumulative, selection.kappa);
  require(n >= 1, ErrorKind::kInvalidArgument, "mode count must be positive");
  n = std::min(n, admissible);

  basis.eigenvectors = eig.vectors.leftCols(n);
  const Eigen::VectorXd inv_sqrt = basis.eigenvalues.head(n).cwiseSqrt().cwiseInverse();
  basis.weights = basis.eigenvectors * inv_sqrt.asDiagonal();
  basis.modes = snapshots * basis.weights;
  basis.raw_norms.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    basis.raw_norms[i] = space.norm(basis.modes.col(i));
    if (!(basis.raw_norms[i] > 0.0))
      fail(ErrorKind::kIllConditionedBasis, "mode " + std::to_string(i + 1) + " has zero norm");
    basis.modes.col(i) /= basis.raw_norms[i];
    basis.weights.col(i) /= basis.raw_norms[i];
  }
  // Modes from small eigenvalues lose orthogonality to rounding; two Cholesky-QR
  // passes restore it. R is upper triangular, so mode k stays in the span of 1..k.
  for (int pass = 0; pass < 2; ++pass) {
    Eigen::MatrixXd gram = basis.modes.transpose() * space.apply(basis.modes);
    gram = 0.5 * (gram + gram.transpose()).eval();
    const Eigen::LLT<Eigen::MatrixXd> llt(gram);
    if (llt.info() != Eigen::Success) fail(ErrorKind::kIllConditionedBasis, "POD modes are numerically dependent");
    const Eigen::MatrixXd r = llt.matrixU();
    basis.modes = r.triangularView<Eigen::Upper>().solve<Eigen::OnTheRight>(basis.modes);
    basis.weights = r.triangularView<Eigen::Upper>().solve<Eigen::OnTheRight>(basis.weights);
  }
  return basis;
}

Lifting build_lifting(const Eigen::MatrixXd& snapshots) {
  require(snapshots.cols() > 0, ErrorKind::kInvalidArgument, "lifting needs at least one snapshot");
  Lifting l;
  l.field = snapshots.rowwise().mean();
  l.homogenized = snapshots.colwise() - l.field;
  return l;
}

PodBasis build_lifted_basis(const InnerProductSpace& space, const Eigen::MatrixXd& snapshots, ModeSelection selection,
                            Variable variable) {
  Lifting lift = build_lifting(snapshots);
  PodBasis basis;
  // Centred data at rounding level counts as empty.
  const double scale = space.norm(lift.field);
  const Eigen::MatrixXd corr_diag = space.apply(lift.homogenized).cwiseProduct(lift.homogenized).colwise().sum();
  if (corr_diag.maxCoeff() <= 1e-24 * std::max(scale * scale, 1e-300)) {
    basis.variable = variable;
    basis.eigenvalues = Eigen::VectorXd::Zero(snapshots.cols());
    basis.cumulative = Eigen::VectorXd::Ones(snapshots.cols());
    basis.eigenvectors.resize(snapshots.cols(), 0);
    basis.raw_norms.resize(0);
    basis.weights.resize(snapshots.cols(), 0);
  } else {
    basis = build_basis(space, lift.homogenized, selection, variable);
  }
  basis.has_lifting = true;
  Eigen::MatrixXd modes(snapshots.rows(), basis.modes.cols() + 1);
  modes.col(0) = lift.field;
  modes.rightCols(basis.modes.cols()) = basis.modes;
  basis.modes = std::move(modes);
  return basis;
}

Eigen::MatrixXd build_source_basis(const PodBasis& momentum, const Eigen::MatrixXd& source_snapshots) {
  require(source_snapshots.cols() == momentum.weights.rows(), ErrorKind::kInvalidArgument,
          "source snapshot count does not match the momentum snapshots");
  const Eigen::Index first = momentum.first_energy_mode();
  const Eigen::Index n = momentum.energy_modes();
  Eigen::MatrixXd out(source_snapshots.rows(), first + n);
  Eigen::MatrixXd centred = source_snapshots;
  if (momentum.has_lifting) {
    out.col(0) = source_snapshots.rowwise().mean();
    centred.colwise() -= out.col(0);
  }
  out.rightCols(n) = centred * momentum.weights;
  return out;
}

Eigen::MatrixXd project(const InnerProductSpace& space, const PodBasis& basis, const Eigen::MatrixXd& fields) {
  const Eigen::MatrixXd gm = space.apply(basis.modes);
  const Eigen::MatrixXd mass = basis.modes.transpose() * gm;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(mass);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
    fail(ErrorKind::kIllConditionedBasis, "basis mass matrix is singular");
  return ldlt.solve(gm.transpose() * fields);
}

}  // namespace hfvrom
