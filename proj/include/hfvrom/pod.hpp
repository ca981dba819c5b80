#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cmath>
#include <numeric>
#include <optional>
#include <string_view>
#include <vector>

#include "hfvrom/error.hpp"
#include "hfvrom/mesh.hpp"

namespace hfvrom {

enum class SpaceKind { kFiniteVolume, kFiniteElement };

/// Weighted L2 inner product on a discrete field layout. Finite-volume fields
/// are cell-major with `components` entries per dual cell; finite-element
/// fields hold one value per primal vertex and use the six-point edge-midpoint
/// rule (weight 1/6 per midpoint) on every tet.
class InnerProductSpace {
 public:
  static InnerProductSpace finite_volume(const DualMesh& dual, int components);
  static InnerProductSpace finite_element(const PrimalMesh& primal);

  SpaceKind kind() const { return kind_; }
  Eigen::Index size() const { return size_; }
  int components() const { return components_; }

  /// Gram-matrix product G x (columns of x are fields).
  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
  double dot(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const;
  double norm(const Eigen::VectorXd& a) const { return std::sqrt(std::max(0.0, dot(a, a))); }
  /// Total weight, i.e. the inner product of the unit constant with itself per component.
  double measure() const { return measure_; }

 private:
  void check(Eigen::Index rows) const;

  SpaceKind kind_ = SpaceKind::kFiniteVolume;
  Eigen::Index size_ = 0;
  int components_ = 1;
  Eigen::VectorXd weights_;           // FV diagonal
  Eigen::SparseMatrix<double> gram_;  // FE quadrature Gram matrix
  double measure_ = 0.0;
};

/// C_jk = <s_j, s_k> / N_s; each pair evaluated once and mirrored.
Eigen::MatrixXd correlation_matrix(const InnerProductSpace& space, const Eigen::MatrixXd& snapshots);

template <typename Scalar>
struct SymmetricEigen {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> values;                // descending
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> vectors;  // column per value
  int sweeps = 0;
};

/// Cyclic Jacobi eigensolver. Rotations continue until the off-diagonal
/// Frobenius norm is at most 1e-14 of the matrix norm. Eigenvector signs make
/// the largest-magnitude entry positive.
template <typename Derived>
SymmetricEigen<typename Derived::Scalar> sym_eig(const Eigen::MatrixBase<Derived>& input, int max_sweeps = 100) {
  using Scalar = typename Derived::Scalar;
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using std::abs;
  using std::sqrt;
  require(input.rows() == input.cols(), ErrorKind::kInvalidArgument, "eigensolver needs a square matrix");
  Mat a = input;
  const Eigen::Index n = a.rows();
  const Scalar scale = a.norm();
  require((a - a.transpose()).norm() <= Scalar(1e-12) * std::max(scale, Scalar(1)), ErrorKind::kInvalidArgument,
          "eigensolver input is not symmetric");
  a = Scalar(0.5) * (a + a.transpose()).eval();
  Mat v = Mat::Identity(n, n);
  SymmetricEigen<Scalar> out;

  auto off_norm = [&] {
    Scalar s(0);
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index i = 0; i < n; ++i)
        if (i != j) s += a(i, j) * a(i, j);
    return sqrt(s);
  };

  const Scalar target = Scalar(1e-14) * scale;
  while (out.sweeps < max_sweeps && off_norm() > target) {
    ++out.sweeps;
    for (Eigen::Index p = 0; p + 1 < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const Scalar apq = a(p, q);
        if (apq == Scalar(0)) continue;
        const Scalar theta = (a(q, q) - a(p, p)) / (Scalar(2) * apq);
        const Scalar t = (theta >= Scalar(0) ? Scalar(1) : Scalar(-1)) / (abs(theta) + sqrt(theta * theta + Scalar(1)));
        const Scalar c = Scalar(1) / sqrt(t * t + Scalar(1));
        const Scalar s = t * c;
        for (Eigen::Index r = 0; r < n; ++r) {
          if (r == p || r == q) continue;
          const Scalar arp = a(r, p), arq = a(r, q);
          a(r, p) = a(p, r) = c * arp - s * arq;
          a(r, q) = a(q, r) = s * arp + c * arq;
        }
        a(p, p) -= t * apq;
        a(q, q) += t * apq;
        a(p, q) = a(q, p) = Scalar(0);
        for (Eigen::Index r = 0; r < n; ++r) {
          const Scalar vrp = v(r, p), vrq = v(r, q);
          v(r, p) = c * vrp - s * vrq;
          v(r, q) = s * vrp + c * vrq;
        }
      }
  }
  if (off_norm() > target)
    fail(ErrorKind::kSolverFailure, "Jacobi eigensolver did not converge in " + std::to_string(max_sweeps) + " sweeps");

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index(0));
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index x, Eigen::Index y) { return a(x, x) > a(y, y); });
  out.values.resize(n);
  out.vectors.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    out.values[k] = a(order[k], order[k]);
    auto col = v.col(order[k]);
    Eigen::Index big = 0;
    col.cwiseAbs().maxCoeff(&big);
    out.vectors.col(k) = col[big] < Scalar(0) ? (-col).eval() : col.eval();
  }
  return out;
}

/// Smallest N whose cumulative energy reaches kappa.
int select_modes(const std::vector<double>& cumulative_energies, double kappa);
int select_modes(const Eigen::VectorXd& cumulative_energies, double kappa);

enum class Variable { kMomentum, kPressure, kSpecies };
std::string_view to_string(Variable v);

struct PodBasis {
  Variable variable = Variable::kMomentum;
  bool has_lifting = false;
  Eigen::MatrixXd modes;         // lifting (when present) in column 0
  Eigen::VectorXd eigenvalues;   // every eigenvalue, descending, clipped at 0
  Eigen::VectorXd cumulative;    // cumulative energy fractions
  Eigen::MatrixXd eigenvectors;  // N_s x (retained energy modes)
  Eigen::VectorXd raw_norms;     // norm of each mode before normalisation
  Eigen::MatrixXd weights;       // N_s x energy modes: energy modes = (homogenised) snapshots * weights

  Eigen::Index size() const { return modes.cols(); }
  Eigen::Index energy_modes() const { return eigenvectors.cols(); }
  /// Column offset of the first orthonormal mode.
  Eigen::Index first_energy_mode() const { return has_lifting ? 1 : 0; }
};

/// Either an energy bound or a fixed number of energy modes.
struct ModeSelection {
  double kappa = 1.0;
  std::optional<int> count;
};

/// Modes from the snapshot correlation matrix (method of snapshots).
/// Eigenvalues below 1e-12 of the largest are never retained.
PodBasis build_basis(const InnerProductSpace& space, const Eigen::MatrixXd& snapshots, ModeSelection selection,
                     Variable variable);

struct Lifting {
  Eigen::VectorXd field;
  Eigen::MatrixXd homogenized;
};
Lifting build_lifting(const Eigen::MatrixXd& snapshots);

/// Lifting mode prepended to the basis of the homogenised snapshots. If the
/// homogenised set vanishes the basis holds the lifting alone.
PodBasis build_lifted_basis(const InnerProductSpace& space, const Eigen::MatrixXd& snapshots, ModeSelection selection,
                            Variable variable);

/// Source modes sharing the momentum coefficients. A lifted basis gets the
/// source mean as its first mode.
Eigen::MatrixXd build_source_basis(const PodBasis& momentum, const Eigen::MatrixXd& source_snapshots);

/// Coefficients of the G-orthogonal projection onto the basis (solves M a = Phi^T G w).
Eigen::MatrixXd project(const InnerProductSpace& space, const PodBasis& basis, const Eigen::MatrixXd& fields);

}  // namespace hfvrom
