#include <doctest.h>

#include "hfvrom/pipeline.hpp"
#include "oracles.hpp"

using namespace hfvrom;

namespace {

RomBases random_bases(const Discretization& disc, Eigen::Index n, Eigen::Index np, Eigen::Index ny) {
  RomBases b;
  const Idx nc = disc.dual.num_cells();
  b.momentum.modes = oracle::random_matrix(3 * nc, n, 101);
  b.pressure.variable = Variable::kPressure;
  b.pressure.modes = oracle::random_matrix(disc.primal.num_vertices(), np, 202);
  PodBasis s;
  s.variable = Variable::kSpecies;
  s.modes = oracle::random_matrix(nc, ny, 303);
  b.species = s;
  return b;
}

double tensor_gap(const Tensor3& a, const Tensor3& b) {
  REQUIRE(a.dims() == b.dims());
  return oracle::relative_gap(a.data(), b.data());
}

/// Diagonal linear system a' = -lambda a with no pressure or species.
RomOperators decay_system(const Eigen::VectorXd& lambda) {
  const Eigen::Index n = lambda.size();
  RomOperators o;
  o.M = Eigen::MatrixXd::Identity(n, n);
  o.B = -lambda.asDiagonal().toDenseMatrix();
  o.F = Eigen::MatrixXd::Zero(n, n);
  o.K = Eigen::MatrixXd::Zero(n, 0);
  o.C = Tensor3(n, n, n);
  o.N = o.H = o.P = Eigen::MatrixXd::Zero(0, 0);
  o.H.resize(0, n);
  o.P.resize(0, n);
  o.D = Tensor3(0, n, n);
  o.E = Tensor3(0, n, 0);
  o.Q.resize(0, 0);
  return o;
}

}  // namespace

TEST_CASE("reduced tensors match facet-loop assembly") {
  const Discretization disc(build_cube_primal(2));
  const CaseDefinition c = case_by_name("cavity");
  const RomBases bases = random_bases(disc, 4, 3, 3);
  RomAssemblyOptions opt;
  opt.t_end = 0.0;
  const RomOperators ops = assemble_operators(disc.ops, bases, c.params, c.bc, opt);
  const double rho = c.params.rho;
  CHECK(tensor_gap(ops.C, oracle::naive_convection(disc.ops, bases.momentum.modes, rho)) <= 1e-13);
  CHECK(tensor_gap(ops.D, oracle::naive_pressure_convection(disc.ops, bases.momentum.modes, bases.pressure.modes, rho)) <=
        1e-13);
  CHECK(tensor_gap(ops.E, oracle::naive_species_convection(disc.ops, bases.momentum.modes, bases.species->modes, rho)) <=
        1e-13);
}

TEST_CASE("tensor contraction is the quadratic form") {
  Tensor3 t(3, 4, 2);
  t.data() = oracle::random_matrix(24, 1, 8).col(0);
  const Eigen::VectorXd x = oracle::random_matrix(4, 1, 9).col(0), y = oracle::random_matrix(2, 1, 10).col(0);
  const Eigen::VectorXd v = t.contract(x, y);
  for (Eigen::Index i = 0; i < 3; ++i) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < 4; ++j)
      for (Eigen::Index k = 0; k < 2; ++k) s += t(i, j, k) * x[j] * y[k];
    CHECK(std::abs(v[i] - s) <= 1e-15);
  }
  CHECK_THROWS_AS(t.contract(y, x), Error);
}

TEST_CASE("RK4 reproduces exponential decay at fourth order") {
  const Eigen::Vector3d lambda(1.0, 2.0, 0.5);
  const RomModel model(decay_system(lambda));
  auto error_at_one = [&](double dt) {
    RomState s;
    s.a = Eigen::Vector3d::Ones();
    const auto traj = model.integrate(s, 1.0, 1.0, dt);
    const Eigen::Vector3d exact = (-lambda).array().exp();
    return (traj.back().a - exact).cwiseAbs().maxCoeff();
  };
  const double e1 = error_at_one(0.1), e2 = error_at_one(0.05), e3 = error_at_one(0.025);
  CHECK(std::log2(e1 / e2) == doctest::Approx(4.0).epsilon(0.05));
  CHECK(std::log2(e2 / e3) == doctest::Approx(4.0).epsilon(0.05));
  CHECK(e1 <= 1e-5);
}

TEST_CASE("staged step equals the monolithic RK4 step") {
  const Discretization disc(build_cube_primal(2));
  const CaseDefinition c = case_by_name("cavity");
  const RomBases bases = random_bases(disc, 3, 2, 2);
  RomAssemblyOptions opt;
  opt.t_end = 0.0;
  RomOperators ops = assemble_operators(disc.ops, bases, c.params, c.bc, opt);
  ops.M = ops.M + Eigen::MatrixXd::Identity(3, 3);  // keep the toy mass well conditioned
  const RomModel model(ops);
  RomState s;
  s.a = Eigen::Vector3d(0.3, -0.1, 0.2);
  s.c = Eigen::Vector2d(0.5, 0.4);
  const double dt = 1e-3;

  auto rate = [&](const Eigen::VectorXd& a, const Eigen::VectorXd& y) {
    const Eigen::VectorXd b = ops.N.ldlt().solve(ops.D.contract(a, a) + ops.H * a + ops.P * a);
    Eigen::VectorXd da = ops.M.ldlt().solve(-ops.C.contract(a, a) + ops.B * a + ops.F * a - ops.K * b);
    Eigen::VectorXd dc = -ops.E.contract(a, y) + ops.Q * y;
    return std::pair{da, dc};
  };
  const auto [a1, c1] = rate(s.a, s.c);
  const auto [a2, c2] = rate(s.a + 0.5 * dt * a1, s.c + 0.5 * dt * c1);
  const auto [a3, c3] = rate(s.a + 0.5 * dt * a2, s.c + 0.5 * dt * c2);
  const auto [a4, c4] = rate(s.a + dt * a3, s.c + dt * c3);
  const Eigen::VectorXd a = s.a + dt / 6 * (a1 + 2 * a2 + 2 * a3 + a4);
  const Eigen::VectorXd y = s.c + dt / 6 * (c1 + 2 * c2 + 2 * c3 + c4);
  const RomState next = model.step(s, dt);
  CHECK(oracle::relative_gap(next.a, a) <= 1e-10);
  CHECK(oracle::relative_gap(next.c, y) <= 1e-10);
}

TEST_CASE("forcing samples interpolate linearly") {
  ForcingSamples f{1.0, 0.5, Eigen::MatrixXd(2, 3)};
  f.values << 0, 1, 3, 10, 20, 40;
  CHECK((f.at(1.0, 2) - Eigen::Vector2d(0, 10)).norm() == 0.0);
  CHECK((f.at(1.25, 2) - Eigen::Vector2d(0.5, 15)).norm() <= 1e-14);
  CHECK((f.at(1.75, 2) - Eigen::Vector2d(2, 30)).norm() <= 1e-14);
  CHECK((f.at(9.0, 2) - Eigen::Vector2d(3, 40)).norm() == 0.0);
  CHECK((f.at(0.0, 2) - Eigen::Vector2d(0, 10)).norm() == 0.0);
  CHECK(ForcingSamples{}.at(0.3, 4).isZero());
  CHECK_THROWS_AS(f.at(0.0, 3), Error);
}

TEST_CASE("constant fields carry no convection") {
  const Discretization disc(build_cube_primal(3));
  const Idx nc = disc.dual.num_cells();
  const Eigen::Matrix3Xd u = Vec3(0.4, 1.0, -0.3).replicate(1, nc), v = Vec3(-0.2, 0.5, 0.9).replicate(1, nc);
  CHECK(mode_derivatives::convection(disc.ops, u, v).cwiseAbs().maxCoeff() <= 1e-12);
  const Eigen::MatrixXd facet = facet_convection(disc.ops, u, v, 1.0);
  for (Idx i : disc.ops.interior_cells()) CHECK(facet.col(i).norm() <= 1e-12);
  CHECK(facet_dissipation(disc.ops, Eigen::VectorXd::Ones(disc.dual.num_interior_facets()), u).cwiseAbs().maxCoeff() <=
        1e-12);
}

TEST_CASE("steady snapshots give a constant reduced trajectory") {
  const Discretization disc(build_cube_primal(3));
  const CaseDefinition c = oracle::steady_case();
  const FomSolver solver(disc.ops, c.params, c.bc, c.source);
  const SnapshotSet snaps = solver.run(oracle::steady_state(disc.ops), c.time);
  const RomBases bases = build_bases(c, disc, snaps);
  const RomRunSettings settings;
  const RomOperators ops = assemble_operators(disc.ops, bases, c.params, c.bc, assembly_options(c, disc, snaps, settings));
  const auto traj = run_rom(ops, bases, disc, snaps, settings);
  REQUIRE(traj.size() == std::size_t(snaps.size()));
  for (const auto& s : traj) {
    CHECK(oracle::relative_gap(s.a, traj.front().a) <= 1e-10);
    CHECK(oracle::relative_gap(s.b, traj.front().b) <= 1e-10);
    CHECK(oracle::relative_gap(s.c, traj.front().c) <= 1e-10);
  }
  const ErrorReport report = compare(disc, bases, snaps, traj);
  CHECK(report.max(&ErrorRow::rom_wu) <= 1e-10);
  CHECK(report.max(&ErrorRow::rom_pi) <= 1e-8);
  CHECK(report.max(&ErrorRow::rom_wy) <= 1e-10);
}
