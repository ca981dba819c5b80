#include <iomanip>
#include <istream>
#include <ostream>

#include "hfvrom/mesh.hpp"

namespace hfvrom {

void write_mesh(std::ostream& out, const PrimalMesh& mesh) {
  out << "HFM 1\n" << std::setprecision(17);
  out << "vertices " << mesh.num_vertices() << '\n';
  for (Idx v = 0; v < mesh.num_vertices(); ++v)
    out << mesh.vertices()(0, v) << ' ' << mesh.vertices()(1, v) << ' ' << mesh.vertices()(2, v) << '\n';
  out << "tets " << mesh.num_tets() << '\n';
  for (const auto& t : mesh.tets()) out << t[0] << ' ' << t[1] << ' ' << t[2] << ' ' << t[3] << '\n';
  const auto boundary = mesh.boundary_list();
  out << "boundary " << boundary.size() << '\n';
  for (const auto& b : boundary)
    out << b.vertices[0] << ' ' << b.vertices[1] << ' ' << b.vertices[2] << ' ' << b.tag << '\n';
}

namespace {

std::size_t expect_section(std::istream& in, const char* name) {
  std::string word;
  long long count = -1;
  if (!(in >> word >> count) || word != name || count < 0)
    fail(ErrorKind::kMalformedMesh, std::string("expected section '") + name + "'");
  return static_cast<std::size_t>(count);
}

}  // namespace

PrimalMesh read_mesh(std::istream& in) {
  std::string magic;
  int version = 0;
  if (!(in >> magic >> version) || magic != "HFM" || version != 1)
    fail(ErrorKind::kMalformedMesh, "missing 'HFM 1' header");
  const std::size_t nv = expect_section(in, "vertices");
  Eigen::Matrix3Xd vertices(3, static_cast<Eigen::Index>(nv));
  for (std::size_t v = 0; v < nv; ++v)
    if (!(in >> vertices(0, v) >> vertices(1, v) >> vertices(2, v)))
      fail(ErrorKind::kMalformedMesh, "truncated vertex list");
  const std::size_t nt = expect_section(in, "tets");
  std::vector<std::array<Idx, 4>> tets(nt);
  for (auto& t : tets)
    if (!(in >> t[0] >> t[1] >> t[2] >> t[3])) fail(ErrorKind::kMalformedMesh, "truncated tet list");
  const std::size_t nb = expect_section(in, "boundary");
  std::vector<BoundaryFaceTag> boundary(nb);
  for (auto& b : boundary)
    if (!(in >> b.vertices[0] >> b.vertices[1] >> b.vertices[2] >> b.tag))
      fail(ErrorKind::kMalformedMesh, "truncated boundary list");
  return PrimalMesh::from_tets(std::move(vertices), std::move(tets), boundary);
}

}  // namespace hfvrom
