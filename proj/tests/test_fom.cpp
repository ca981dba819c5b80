#include <doctest.h>

#include "hfvrom/pipeline.hpp"
#include "oracles.hpp"

using namespace hfvrom;

TEST_CASE("Rusanov flux is consistent and conservative") {
  const Eigen::Vector4d w(1.0, -2.0, 0.5, 3.0), v(0.2, 0.1, -0.4, 1.5);
  const Vec3 u(0.4, -0.3, 0.8), q(-0.1, 0.6, 0.2), n = Vec3(1.0, 2.0, -2.0).normalized();
  const Eigen::Vector4d same = rusanov_flux<double>(w, w, u, u, n);
  CHECK((same - u.dot(n) * w).norm() <= 1e-15);
  const Eigen::Vector4d fwd = rusanov_flux<double>(w, v, u, q, n);
  const Eigen::Vector4d back = rusanov_flux<double>(v, w, q, u, (-n).eval());
  CHECK((fwd + back).norm() <= 1e-15);
}

TEST_CASE("uniform momentum has no discrete divergence") {
  const Discretization disc(build_cube_primal(3));
  const Eigen::Matrix3Xd w = Vec3(0.7, -0.2, 1.1).replicate(1, disc.dual.num_cells());
  const Eigen::VectorXd r = disc.ops.zero_mean_part(disc.ops.divergence(w));
  CHECK(r.cwiseAbs().maxCoeff() <= 1e-13);
}

TEST_CASE("species is frozen without velocity and diffusion") {
  const Discretization disc(build_cube_primal(3));
  CaseDefinition c = case_by_name("cavity");
  c.params.diffusivity = 0.0;
  BoundaryData rest;
  rest.velocity = [](const Vec3&, double) { return Vec3::Zero().eval(); };
  rest.velocity_rate = rest.velocity;
  rest.species = [](const Vec3& x, double) { return x.sum(); };
  for (auto& [name, data] : c.bc.regions) data = rest;
  const FomSolver solver(disc.ops, c.params, c.bc, {});
  FomState s;
  const Idx nc = disc.dual.num_cells();
  s.momentum = Eigen::Matrix3Xd::Zero(3, nc);
  s.pressure = Eigen::VectorXd::Zero(disc.primal.num_vertices());
  s.species = oracle::random_matrix(nc, 1, 5).col(0);
  for (Idx i : disc.ops.boundary_cells()) s.species[i] = disc.dual.node(i).sum();
  const Eigen::VectorXd before = s.species;
  for (int k = 0; k < 5; ++k) solver.step(s, 0.01);
  CHECK(s.species == before);
  CHECK(s.momentum.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("uniform flow with balanced pressure is steady") {
  const Discretization disc(build_cube_primal(3));
  const CaseDefinition c = oracle::steady_case();
  const FomSolver solver(disc.ops, c.params, c.bc, c.source);
  FomState s = oracle::steady_state(disc.ops);
  const FomState start = s;
  FomDiagnostics diag;
  const SnapshotSet snaps = solver.run(s, c.time, &diag);
  CHECK(snaps.size() == 11);
  for (Eigen::Index n = 0; n < snaps.size(); ++n) {
    CHECK((snaps.momentum.col(n) - start.momentum.reshaped()).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((snaps.pressure.col(n) - start.pressure).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((snaps.species.col(n) - start.species).cwiseAbs().maxCoeff() <= 1e-12);
  }
  CHECK(diag.max_divergence <= 1e-8);
}

TEST_CASE("projection restores the discrete divergence constraint") {
  const Discretization disc(build_cube_primal(3));
  const CaseDefinition c = case_by_name("manufactured");
  const FomSolver solver(disc.ops, c.params, c.bc, c.source);
  FomState s = initial_state(c, solver);
  CHECK(solver.relative_divergence(s.momentum) <= 1e-8);
  for (int k = 0; k < 5; ++k) {
    const FomStepInfo info = solver.step(s, compute_dt(s, c.params, disc.dual, 1.0));
    CHECK(info.divergence <= 1e-8);
    CHECK(std::abs(info.pressure_mean) <= 1e-10);
  }
}

TEST_CASE("time step bound") {
  const Discretization disc(build_cube_primal(2));
  FluidParams p{1.0, 0.0, 0.0};
  FomState s;
  s.momentum = Vec3(2.0, 0.0, 0.0).replicate(1, disc.dual.num_cells());
  const double dt1 = compute_dt(s, p, disc.dual, 1.0);
  CHECK(compute_dt(s, p, disc.dual, 0.5) == doctest::Approx(0.5 * dt1));
  s.momentum *= 2.0;
  CHECK(compute_dt(s, p, disc.dual, 1.0) == doctest::Approx(0.5 * dt1).epsilon(1e-9));
}
