#include "hfvrom/mesh.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace hfvrom {

namespace {

std::array<Idx, 3> sorted_triple(Idx a, Idx b, Idx c) {
  std::array<Idx, 3> t{a, b, c};
  std::sort(t.begin(), t.end());
  return t;
}

// Local vertex indices of the face opposite local vertex k.
constexpr std::array<std::array<int, 3>, 4> kFaceVertices{{{1, 2, 3}, {0, 2, 3}, {0, 1, 3}, {0, 1, 2}}};

}  // namespace

PrimalMesh PrimalMesh::from_tets(Eigen::Matrix3Xd vertices, std::vector<std::array<Idx, 4>> tets,
                                 const std::vector<BoundaryFaceTag>& boundary) {
  PrimalMesh mesh;
  mesh.vertices_ = std::move(vertices);
  mesh.tets_ = std::move(tets);
  const Idx nv = mesh.num_vertices();
  const Idx nt = mesh.num_tets();
  require(nt > 0, ErrorKind::kMalformedMesh, "mesh has no tetrahedra");

  for (Idx t = 0; t < nt; ++t) {
    auto& tet = mesh.tets_[t];
    for (Idx v : tet)
      require(v >= 0 && v < nv, ErrorKind::kMalformedMesh, "tet " + std::to_string(t) + " references missing vertex");
    if (signed_volume(mesh.tet_coords(t)) < 0.0) std::swap(tet[2], tet[3]);
  }

  mesh.tet_volume_.resize(nt);
  for (Idx t = 0; t < nt; ++t) mesh.tet_volume_[t] = signed_volume(mesh.tet_coords(t));
  const double mean_volume = mesh.tet_volume_.cwiseAbs().mean();
  mesh.grad_lambda_.resize(nt);
  for (Idx t = 0; t < nt; ++t) {
    try {
      const auto coords = mesh.tet_coords(t);
      mesh.grad_lambda_[t] = barycentric_gradients(coords, std::max(mean_volume, reference_volume(coords)));
    } catch (const Error&) {
      fail(ErrorKind::kDegenerateElement, "tet " + std::to_string(t) + " is degenerate");
    }
  }

  std::map<std::array<Idx, 3>, Idx> face_index;
  mesh.tet_faces_.assign(nt, {kNone, kNone, kNone, kNone});
  for (Idx t = 0; t < nt; ++t) {
    const auto& tet = mesh.tets_[t];
    for (int k = 0; k < 4; ++k) {
      const auto& lv = kFaceVertices[k];
      const auto key = sorted_triple(tet[lv[0]], tet[lv[1]], tet[lv[2]]);
      require(key[0] != key[1] && key[1] != key[2], ErrorKind::kMalformedMesh,
              "tet " + std::to_string(t) + " repeats a vertex");
      auto [it, inserted] = face_index.try_emplace(key, static_cast<Idx>(mesh.faces_.size()));
      if (inserted) {
        Face face;
        face.vertices = key;
        face.owner = t;
        face.owner_local = static_cast<std::int8_t>(k);
        mesh.faces_.push_back(face);
      } else {
        Face& face = mesh.faces_[it->second];
        require(face.neighbor == kNone, ErrorKind::kMalformedMesh,
                "face shared by more than two tets (tet " + std::to_string(t) + ")");
        face.neighbor = t;
        face.neighbor_local = static_cast<std::int8_t>(k);
      }
      mesh.tet_faces_[t][k] = it->second;
    }
  }

  std::set<std::string> names;
  for (const auto& b : boundary) names.insert(b.tag);
  mesh.tag_names_.assign(names.begin(), names.end());
  mesh.face_tag_.assign(mesh.faces_.size(), -1);
  for (const auto& b : boundary) {
    const auto key = sorted_triple(b.vertices[0], b.vertices[1], b.vertices[2]);
    auto it = face_index.find(key);
    require(it != face_index.end() && mesh.faces_[it->second].is_boundary(), ErrorKind::kMalformedMesh,
            "tagged face is not a boundary face");
    const auto pos = std::lower_bound(mesh.tag_names_.begin(), mesh.tag_names_.end(), b.tag);
    mesh.face_tag_[it->second] = static_cast<int>(pos - mesh.tag_names_.begin());
  }
  for (Idx f = 0; f < mesh.num_faces(); ++f)
    require(!mesh.faces_[f].is_boundary() || mesh.face_tag_[f] >= 0, ErrorKind::kMalformedMesh,
            "boundary face " + std::to_string(f) + " has no tag");
  return mesh;
}

TetCoords<double> PrimalMesh::tet_coords(Idx t) const {
  TetCoords<double> c;
  for (int k = 0; k < 4; ++k) c.col(k) = vertices_.col(tets_[t][k]);
  return c;
}

Vec3 PrimalMesh::tet_barycenter(Idx t) const { return tet_coords(t).rowwise().mean(); }

Vec3 PrimalMesh::face_barycenter(Idx f) const {
  const auto& v = faces_[f].vertices;
  return (vertices_.col(v[0]) + vertices_.col(v[1]) + vertices_.col(v[2])) / 3.0;
}

Vec3 PrimalMesh::face_area_vector(Idx f) const {
  const auto& v = faces_[f].vertices;
  Vec3 a = area_vector<double>(vertices_.col(v[0]), vertices_.col(v[1]), vertices_.col(v[2]));
  const Vec3 out = face_barycenter(f) - tet_barycenter(faces_[f].owner);
  return a.dot(out) < 0.0 ? Vec3(-a) : a;
}

double PrimalMesh::total_volume() const { return tet_volume_.sum(); }

std::string_view PrimalMesh::boundary_tag(Idx f) const {
  const int tag = face_tag_[f];
  return tag < 0 ? std::string_view{} : std::string_view{tag_names_[tag]};
}

std::vector<BoundaryFaceTag> PrimalMesh::boundary_list() const {
  std::vector<BoundaryFaceTag> out;
  for (Idx f = 0; f < num_faces(); ++f)
    if (faces_[f].is_boundary()) out.push_back({faces_[f].vertices, tag_names_[face_tag_[f]]});
  return out;
}

PrimalMesh build_cube_primal(int n) {
  require(n >= 1, ErrorKind::kInvalidArgument, "cube subdivisions must be >= 1");
  const Idx m = n + 1;
  Eigen::Matrix3Xd vertices(3, m * m * m);
  auto vid = [m](Idx i, Idx j, Idx k) { return i + m * (j + m * k); };
  for (Idx k = 0; k < m; ++k)
    for (Idx j = 0; j < m; ++j)
      for (Idx i = 0; i < m; ++i)
        vertices.col(vid(i, j, k)) = Vec3(double(i) / n, double(j) / n, double(k) / n);

  // Kuhn split: every tet follows a monotone path from corner 000 to 111.
  constexpr std::array<std::array<int, 3>, 6> kPaths{
      {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}}};
  std::vector<std::array<Idx, 4>> tets;
  tets.reserve(6 * std::size_t(n) * n * n);
  for (Idx k = 0; k < n; ++k)
    for (Idx j = 0; j < n; ++j)
      for (Idx i = 0; i < n; ++i)
        for (const auto& path : kPaths) {
          std::array<Idx, 3> c{i, j, k};
          std::array<Idx, 4> tet{};
          tet[0] = vid(c[0], c[1], c[2]);
          for (int s = 0; s < 3; ++s) {
            ++c[path[s]];
            tet[s + 1] = vid(c[0], c[1], c[2]);
          }
          tets.push_back(tet);
        }

  std::vector<BoundaryFaceTag> boundary;
  const std::array<std::string, 6> names{"xmin", "xmax", "ymin", "ymax", "zmin", "zmax"};
  // Every cube-boundary face lies in one coordinate plane x_d = 0 or 1.
  for (const auto& tet : tets) {
    for (const auto& lv : kFaceVertices) {
      const std::array<Idx, 3> fv{tet[lv[0]], tet[lv[1]], tet[lv[2]]};
      for (int d = 0; d < 3; ++d)
        for (int side = 0; side < 2; ++side) {
          const double plane = side;
          bool on = true;
          for (Idx v : fv) on = on && vertices(d, v) == plane;
          if (on) boundary.push_back({fv, names[2 * d + side]});
        }
    }
  }
  return PrimalMesh::from_tets(std::move(vertices), std::move(tets), boundary);
}

DualMesh::DualMesh(const PrimalMesh& primal) {
  const Idx nf = primal.num_faces();
  nodes_.resize(3, nf);
  volumes_.setZero(nf);
  generating_.resize(nf);
  tag_.resize(nf);
  const auto& faces = primal.faces();
  for (Idx f = 0; f < nf; ++f) {
    const auto& face = faces[f];
    require(face.owner != kNone, ErrorKind::kMalformedMesh, "face without owner");
    nodes_.col(f) = primal.face_barycenter(f);
    generating_[f] = {face.owner, face.neighbor};
    volumes_[f] = primal.tet_volume(face.owner) / 4.0;
    if (face.neighbor != kNone) volumes_[f] += primal.tet_volume(face.neighbor) / 4.0;
    tag_[f] = primal.face_tag(f);
  }

  // Six lateral facets per tet: triangle (edge, tet barycentre) separates the
  // sub-tets of the two faces that share the edge.
  std::vector<std::vector<FacetRef>> per_cell(nf);
  facets_.reserve(6 * std::size_t(primal.num_tets()));
  for (Idx t = 0; t < primal.num_tets(); ++t) {
    const auto& tet = primal.tets()[t];
    const auto& tf = primal.tet_faces(t);
    const Vec3 bary = primal.tet_barycenter(t);
    for (int a = 0; a < 4; ++a)
      for (int b = a + 1; b < 4; ++b) {
        // The two remaining local vertices c < d; face opposite d contains
        // edge ab and c, face opposite c contains edge ab and d.
        int c = -1, d = -1;
        for (int k = 0; k < 4; ++k)
          if (k != a && k != b) (c < 0 ? c : d) = k;
        const Idx left = tf[d];
        const Idx right = tf[c];
        const Vec3 pa = primal.vertices().col(tet[a]);
        const Vec3 pb = primal.vertices().col(tet[b]);
        const Vec3 pc = primal.vertices().col(tet[c]);
        Vec3 av = area_vector<double>(pa, pb, bary);
        if (av.dot(pc - pa) > 0.0) av = -av;  // point away from the left cell's vertex c
        Facet facet;
        facet.left = left;
        facet.right = right;
        facet.tet = t;
        facet.area = av.norm();
        facet.normal = av / facet.area;
        facet.centroid = (pa + pb + bary) / 3.0;
        per_cell[left].push_back({static_cast<Idx>(facets_.size()), 1.0});
        per_cell[right].push_back({static_cast<Idx>(facets_.size()), -1.0});
        facets_.push_back(facet);
      }
  }
  num_interior_facets_ = static_cast<Idx>(facets_.size());
  for (Idx f = 0; f < nf; ++f) {
    if (!faces[f].is_boundary()) continue;
    const Vec3 av = primal.face_area_vector(f);
    Facet facet;
    facet.left = f;
    facet.tet = faces[f].owner;
    facet.area = av.norm();
    facet.normal = av / facet.area;
    facet.centroid = nodes_.col(f);
    per_cell[f].push_back({static_cast<Idx>(facets_.size()), 1.0});
    facets_.push_back(facet);
  }

  facet_offsets_.assign(nf + 1, 0);
  for (Idx i = 0; i < nf; ++i) facet_offsets_[i + 1] = facet_offsets_[i] + per_cell[i].size();
  facet_refs_.reserve(facet_offsets_.back());
  for (auto& refs : per_cell) facet_refs_.insert(facet_refs_.end(), refs.begin(), refs.end());
}

double DualMesh::surface_area(Idx i) const {
  double s = 0.0;
  for (const auto& ref : cell_facets(i)) s += facets_[ref.facet].area;
  return s;
}

}  // namespace hfvrom
