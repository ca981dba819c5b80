#include <doctest.h>

#include <Eigen/Eigenvalues>

#include "hfvrom/pipeline.hpp"
#include "oracles.hpp"

using namespace hfvrom;

namespace {

const std::vector<double> kTable1Momentum = {0.4232018, 0.7194136, 0.9276722, 0.9724632, 0.9910768,
                                             0.9989818, 0.9999167, 0.9999800, 0.9999955};
const std::vector<double> kTable1Pressure = {0.9999753, 0.9999924, 0.9999959, 0.9999975, 0.9999984,
                                             0.9999988, 0.9999991, 0.9999994, 0.9999995};

}  // namespace

TEST_CASE("Jacobi eigensolver agrees with the library solver") {
  for (int size : {1, 2, 5, 12}) {
    const Eigen::MatrixXd r = oracle::random_matrix(size, size, unsigned(size));
    const Eigen::MatrixXd a = r * r.transpose();
    const auto ours = sym_eig(a);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ref(a);
    const Eigen::VectorXd expected = ref.eigenvalues().reverse();
    CHECK((ours.values - expected).cwiseAbs().maxCoeff() <= 1e-12 * expected.cwiseAbs().maxCoeff());
    CHECK((a * ours.vectors - ours.vectors * ours.values.asDiagonal()).norm() <= 1e-12 * a.norm());
    CHECK((ours.vectors.transpose() * ours.vectors - Eigen::MatrixXd::Identity(size, size)).norm() <= 1e-12);
  }
  CHECK_THROWS_AS(sym_eig(Eigen::MatrixXd::Zero(2, 3)), Error);
  Eigen::Matrix2d skew;
  skew << 1.0, 2.0, 0.0, 1.0;
  CHECK_THROWS_AS(sym_eig(skew), Error);
}

TEST_CASE("mode selection on the published cumulative tables") {
  CHECK(select_modes(kTable1Momentum, 0.99999) == 9);
  CHECK(select_modes(kTable1Pressure, 0.9999) == 1);
  CHECK(select_modes(std::vector<double>{0.5, 0.9, 1.0}, 0.9) == 2);
  CHECK(select_modes(std::vector<double>{0.5, 0.9, 1.0}, 1.0) == 3);
}

TEST_CASE("POD basis properties") {
  const Discretization disc(build_cube_primal(2));
  const Eigen::Index ns = 12;
  const Eigen::MatrixXd snaps = oracle::random_matrix(3 * disc.dual.num_cells(), ns, 42);
  const PodBasis full = build_basis(disc.fv3, snaps, {1.0, int(ns)}, Variable::kMomentum);
  REQUIRE(full.size() == ns);

  const Eigen::MatrixXd gram = full.modes.transpose() * disc.fv3.apply(full.modes);
  CHECK((gram - Eigen::MatrixXd::Identity(ns, ns)).cwiseAbs().maxCoeff() <= 1e-10);

  const Eigen::MatrixXd corr = correlation_matrix(disc.fv3, snaps);
  CHECK(std::abs(full.eigenvalues.sum() - corr.trace()) <= 1e-12 * corr.trace());
  CHECK(full.cumulative[ns - 1] == doctest::Approx(1.0).epsilon(1e-14));

  const Eigen::MatrixXd coeff = project(disc.fv3, full, snaps);
  const Eigen::MatrixXd rebuilt = full.modes * coeff;
  for (Eigen::Index n = 0; n < ns; ++n)
    CHECK(relative_error(disc.fv3, rebuilt.col(n), snaps.col(n)) <= 1e-8);

  // Projection error at a fixed snapshot never grows with more modes.
  double previous = std::numeric_limits<double>::infinity();
  for (int count : {2, 4, 6, 8}) {
    const PodBasis b = build_basis(disc.fv3, snaps, {1.0, count}, Variable::kMomentum);
    double total = 0.0;
    for (Eigen::Index n = 0; n < ns; ++n) {
      const Eigen::VectorXd r = b.modes * project(disc.fv3, b, snaps.col(n));
      total += std::pow(disc.fv3.norm(r - snaps.col(n)), 2);
    }
    CHECK(total <= previous * (1 + 1e-12));
    previous = total;
  }
}

TEST_CASE("finite-element inner product integrates linear fields exactly") {
  const Discretization disc(build_cube_primal(2));
  const Eigen::VectorXd x = disc.primal.vertices().row(0).transpose();
  const Eigen::VectorXd one = Eigen::VectorXd::Ones(x.size());
  CHECK(disc.fe.dot(one, one) == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(disc.fe.dot(x, one) == doctest::Approx(0.5).epsilon(1e-13));
}

TEST_CASE("lifting and energy selection") {
  const Discretization disc(build_cube_primal(2));
  const Eigen::MatrixXd base = oracle::random_matrix(disc.dual.num_cells(), 1, 9);
  Eigen::MatrixXd snaps = base.replicate(1, 6);
  snaps += 1e-2 * oracle::random_matrix(snaps.rows(), 6, 10);
  const Lifting lift = build_lifting(snaps);
  CHECK((lift.field - snaps.rowwise().mean()).norm() == 0.0);
  CHECK(lift.homogenized.rowwise().sum().cwiseAbs().maxCoeff() <= 1e-14);

  const PodBasis lifted = build_lifted_basis(disc.fv1, snaps, {0.999, std::nullopt}, Variable::kSpecies);
  CHECK(lifted.has_lifting);
  CHECK(lifted.first_energy_mode() == 1);
  CHECK((lifted.modes.col(0) - lift.field).norm() == 0.0);
  CHECK(lifted.energy_modes() == select_modes(lifted.cumulative, 0.999));

  // All-identical snapshots leave only the lifting.
  const PodBasis flat = build_lifted_basis(disc.fv1, base.replicate(1, 4), {0.999, std::nullopt}, Variable::kSpecies);
  CHECK(flat.size() == 1);
}

TEST_CASE("relative error") {
  const Discretization disc(build_cube_primal(2));
  const Eigen::VectorXd a = oracle::random_matrix(disc.dual.num_cells(), 1, 1).col(0);
  const Eigen::VectorXd b = oracle::random_matrix(disc.dual.num_cells(), 1, 2).col(0);
  CHECK(relative_error(disc.fv1, a, a) == 0.0);
  CHECK(relative_error(disc.fv1, 2.0 * a, a) == doctest::Approx(1.0).epsilon(1e-15));
  const Eigen::VectorXd w = disc.dual.volumes();
  const double naive = std::sqrt((w.array() * (a - b).array().square()).sum() / (w.array() * b.array().square()).sum());
  CHECK(std::abs(relative_error(disc.fv1, a, b) - naive) <= 1e-14 * naive);
  CHECK_THROWS_AS(relative_error(disc.fv1, a, Eigen::VectorXd::Zero(a.size())), Error);
}

TEST_CASE("source basis applies the momentum snapshot weights") {
  const Discretization disc(build_cube_primal(2));
  const Eigen::MatrixXd snaps = oracle::random_matrix(3 * disc.dual.num_cells(), 10, 77);
  for (bool lifted : {false, true}) {
    const PodBasis b = lifted ? build_lifted_basis(disc.fv3, snaps, {1.0, 6}, Variable::kMomentum)
                              : build_basis(disc.fv3, snaps, {1.0, 6}, Variable::kMomentum);
    // A source history equal to the momentum history reproduces the modes.
    const Eigen::MatrixXd src = build_source_basis(b, snaps);
    CHECK((src - b.modes).cwiseAbs().maxCoeff() <= 1e-12 * b.modes.cwiseAbs().maxCoeff());
  }
}
