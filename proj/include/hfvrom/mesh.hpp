#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hfvrom/geometry.hpp"

namespace hfvrom {

using Idx = std::int32_t;
inline constexpr Idx kNone = -1;

struct BoundaryFaceTag {
  std::array<Idx, 3> vertices;
  std::string tag;
};

/// Tetrahedral finite element mesh. Faces carry sorted vertex triples; the
/// face with local index k in a tet is the one opposite local vertex k.
class PrimalMesh {
 public:
  struct Face {
    std::array<Idx, 3> vertices;  // sorted ascending
    Idx owner = kNone;
    Idx neighbor = kNone;
    std::int8_t owner_local = -1;     // local face index in owner
    std::int8_t neighbor_local = -1;  // local face index in neighbor
    bool is_boundary() const { return neighbor == kNone; }
  };

  PrimalMesh() = default;

  /// Builds faces and adjacency, reorients negative tets, validates and tags
  /// boundary faces. Every boundary face must appear in `boundary`.
  static PrimalMesh from_tets(Eigen::Matrix3Xd vertices, std::vector<std::array<Idx, 4>> tets,
                              const std::vector<BoundaryFaceTag>& boundary);

  Idx num_vertices() const { return static_cast<Idx>(vertices_.cols()); }
  Idx num_tets() const { return static_cast<Idx>(tets_.size()); }
  Idx num_faces() const { return static_cast<Idx>(faces_.size()); }

  const Eigen::Matrix3Xd& vertices() const { return vertices_; }
  const std::vector<std::array<Idx, 4>>& tets() const { return tets_; }
  const std::vector<Face>& faces() const { return faces_; }
  const std::array<Idx, 4>& tet_faces(Idx t) const { return tet_faces_[t]; }

  TetCoords<double> tet_coords(Idx t) const;
  double tet_volume(Idx t) const { return tet_volume_[t]; }
  const Eigen::VectorXd& tet_volumes() const { return tet_volume_; }
  /// Gradients of the barycentric coordinates of tet t, column per local vertex.
  const Eigen::Matrix<double, 3, 4>& grad_lambda(Idx t) const { return grad_lambda_[t]; }
  Vec3 tet_barycenter(Idx t) const;
  Vec3 face_barycenter(Idx f) const;
  /// Area times unit normal pointing out of the owner tet.
  Vec3 face_area_vector(Idx f) const;
  double total_volume() const;

  const std::vector<std::string>& tag_names() const { return tag_names_; }
  /// Index into tag_names(), or -1 for interior faces.
  int face_tag(Idx f) const { return face_tag_[f]; }
  std::string_view boundary_tag(Idx f) const;
  std::vector<BoundaryFaceTag> boundary_list() const;

 private:
  Eigen::Matrix3Xd vertices_;
  std::vector<std::array<Idx, 4>> tets_;
  std::vector<Face> faces_;
  std::vector<std::array<Idx, 4>> tet_faces_;
  Eigen::VectorXd tet_volume_;
  std::vector<Eigen::Matrix<double, 3, 4>> grad_lambda_;
  std::vector<std::string> tag_names_;
  std::vector<int> face_tag_;
};

/// Unit cube split into n^3 hexahedra of 6 tetrahedra each (Kuhn split).
/// Boundary tags: xmin, xmax, ymin, ymax, zmin, zmax.
PrimalMesh build_cube_primal(int n);

/// Face-type dual mesh: cell i is generated by primal face i and is the union
/// of the sub-tetrahedra (face, barycentre of an adjacent tet).
class DualMesh {
 public:
  struct Facet {
    Idx left = kNone;   // cell the normal points out of
    Idx right = kNone;  // kNone on the domain boundary
    Idx tet = kNone;    // primal tet containing the facet
    double area = 0.0;
    Vec3 normal = Vec3::Zero();  // unit, left -> right
    Vec3 centroid = Vec3::Zero();
  };

  struct FacetRef {
    Idx facet;
    double sign;  // +1 when the facet normal is outward for this cell
  };

  DualMesh() = default;
  explicit DualMesh(const PrimalMesh& primal);

  Idx num_cells() const { return static_cast<Idx>(volumes_.size()); }
  const Eigen::Matrix3Xd& nodes() const { return nodes_; }
  Vec3 node(Idx i) const { return nodes_.col(i); }
  double volume(Idx i) const { return volumes_[i]; }
  const Eigen::VectorXd& volumes() const { return volumes_; }
  bool is_boundary(Idx i) const { return generating_[i][1] == kNone; }
  int tag(Idx i) const { return tag_[i]; }
  /// Generating tets; second entry is kNone for boundary cells.
  const std::array<Idx, 2>& generating_tets(Idx i) const { return generating_[i]; }
  int num_generating(Idx i) const { return is_boundary(i) ? 1 : 2; }

  const std::vector<Facet>& facets() const { return facets_; }
  std::span<const FacetRef> cell_facets(Idx i) const {
    return {facet_refs_.data() + facet_offsets_[i], facet_refs_.data() + facet_offsets_[i + 1]};
  }
  /// Number of interior (cell-to-cell) facets; they precede the boundary facets.
  Idx num_interior_facets() const { return num_interior_facets_; }
  double total_volume() const { return volumes_.sum(); }
  double surface_area(Idx i) const;

 private:
  Eigen::Matrix3Xd nodes_;
  Eigen::VectorXd volumes_;
  std::vector<std::array<Idx, 2>> generating_;
  std::vector<int> tag_;
  std::vector<Facet> facets_;
  Idx num_interior_facets_ = 0;
  std::vector<FacetRef> facet_refs_;
  std::vector<std::size_t> facet_offsets_;
};

inline DualMesh build_dual(const PrimalMesh& primal) { return DualMesh(primal); }

/// Mean of per-tet values over the generating tets of dual cell i.
template <typename Derived>
auto node_gradient(const DualMesh& dual, Idx cell, const Eigen::MatrixBase<Derived>& per_tet) {
  const auto& gen = dual.generating_tets(cell);
  if (gen[1] == kNone) return per_tet.col(gen[0]).eval();
  return (0.5 * (per_tet.col(gen[0]) + per_tet.col(gen[1]))).eval();
}

/// Text mesh format `HFM 1`.
void write_mesh(std::ostream& out, const PrimalMesh& mesh);
PrimalMesh read_mesh(std::istream& in);

}  // namespace hfvrom
