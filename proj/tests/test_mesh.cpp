#include <doctest.h>

#include <sstream>

#include "hfvrom/fom.hpp"
#include "hfvrom/mesh.hpp"

using namespace hfvrom;

namespace {

double max_normal_sum(const DualMesh& dual) {
  double worst = 0.0;
  for (Idx i = 0; i < dual.num_cells(); ++i) {
    Vec3 s = Vec3::Zero();
    double scale = 0.0;
    for (const auto& ref : dual.cell_facets(i)) {
      const auto& f = dual.facets()[ref.facet];
      s += ref.sign * f.area * f.normal;
      scale = std::max(scale, f.area);
    }
    worst = std::max(worst, s.norm() / scale);
  }
  return worst;
}

}  // namespace

TEST_CASE("cube mesh counts") {
  for (int n : {1, 2, 3}) {
    const PrimalMesh m = build_cube_primal(n);
    CHECK(m.num_vertices() == (n + 1) * (n + 1) * (n + 1));
    CHECK(m.num_tets() == 6 * n * n * n);
    // Euler: V - E + F - T = 1 for a ball; boundary faces: 2 triangles per square.
    Idx boundary = 0;
    for (const auto& f : m.faces()) boundary += f.is_boundary();
    CHECK(boundary == 12 * n * n);
    CHECK(4 * m.num_tets() == 2 * m.num_faces() - boundary);
    CHECK(m.tag_names().size() == 6);
  }
}

TEST_CASE("dual cells partition the cube") {
  for (int n : {1, 2, 4}) {
    const PrimalMesh m = build_cube_primal(n);
    const DualMesh d(m);
    CHECK(d.num_cells() == m.num_faces());
    CHECK(std::abs(d.total_volume() - 1.0) <= 1e-12);
    CHECK(std::abs(m.total_volume() - 1.0) <= 1e-12);
    CHECK(d.volumes().minCoeff() > 0.0);
    // Each tet gives a quarter of its volume to each of its faces.
    for (Idx i = 0; i < d.num_cells(); ++i) {
      double expected = 0.0;
      for (Idx t : d.generating_tets(i))
        if (t != kNone) expected += m.tet_volume(t) / 4.0;
      CHECK(d.volume(i) == doctest::Approx(expected).epsilon(1e-12));
    }
  }
}

TEST_CASE("closed dual cells have zero normal sum") {
  for (int n : {1, 2, 4}) {
    const PrimalMesh m = build_cube_primal(n);
    CHECK(max_normal_sum(DualMesh(m)) <= 1e-12);
  }
}

TEST_CASE("interior facets precede boundary facets") {
  const PrimalMesh m = build_cube_primal(2);
  const DualMesh d(m);
  const auto& facets = d.facets();
  for (Idx f = 0; f < Idx(facets.size()); ++f) CHECK((f < d.num_interior_facets()) == (facets[f].right != kNone));
  for (const auto& f : facets) CHECK(std::abs(f.normal.norm() - 1.0) <= 1e-14);
}

TEST_CASE("P1 gradients are exact for linear fields") {
  const PrimalMesh m = build_cube_primal(3);
  const DualMesh d(m);
  const HybridOperators ops(m, d);
  const Vec3 g(0.3, -1.7, 2.2);
  const Eigen::VectorXd p = (m.vertices().transpose() * g).array() + 0.4;
  for (Idx t = 0; t < m.num_tets(); ++t) {
    Vec3 grad = Vec3::Zero();
    for (int k = 0; k < 4; ++k) grad += p[m.tets()[t][k]] * m.grad_lambda(t).col(k);
    CHECK((grad - g).norm() <= 1e-12 * g.norm());
  }
  const Eigen::Matrix3Xd cg = ops.cell_gradient(p);
  const Eigen::Matrix3Xd gi = ops.cell_gradient_integral(p);
  for (Idx i = 0; i < d.num_cells(); ++i) {
    CHECK((cg.col(i) - g).norm() <= 1e-12 * g.norm());
    CHECK((gi.col(i) - d.volume(i) * g).norm() <= 1e-12 * d.volume(i) * g.norm());
  }
}

TEST_CASE("mesh text format round-trips") {
  const PrimalMesh m = build_cube_primal(2);
  std::stringstream first;
  write_mesh(first, m);
  const PrimalMesh back = read_mesh(first);
  std::stringstream second;
  write_mesh(second, back);
  CHECK(first.str() == second.str());
  CHECK(back.num_faces() == m.num_faces());
}

TEST_CASE("malformed meshes are rejected") {
  auto kind_of = [](const std::string& text) {
    std::istringstream in(text);
    try {
      read_mesh(in);
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::kInvalidArgument;
  };
  CHECK(kind_of("HFX 1\n") == ErrorKind::kMalformedMesh);
  CHECK(kind_of("HFM 1\nvertices 4\n0 0 0\n1 0 0\n") == ErrorKind::kMalformedMesh);
  const std::string verts = "HFM 1\nvertices 4\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n";
  // Missing boundary tags.
  CHECK(kind_of(verts + "tets 1\n0 1 2 3\nboundary 0\n") == ErrorKind::kMalformedMesh);
  // Vertex index out of range.
  CHECK(kind_of(verts + "tets 1\n0 1 2 7\nboundary 0\n") == ErrorKind::kMalformedMesh);
  const std::string flat = "HFM 1\nvertices 4\n0 0 0\n1 0 0\n0 1 0\n1 1 0\n";
  const std::string tags = "boundary 4\n0 1 2 a\n0 1 3 a\n0 2 3 a\n1 2 3 a\n";
  CHECK(kind_of(flat + "tets 1\n0 1 2 3\n" + tags) == ErrorKind::kDegenerateElement);
  std::istringstream valid(verts + "tets 1\n0 1 2 3\n" + tags);
  CHECK_NOTHROW(read_mesh(valid));
}
