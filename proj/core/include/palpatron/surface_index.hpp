#pragma once

#include "palpatron/mesh.hpp"

#include <Eigen/Geometry>

#include <cstdint>
#include <limits>
#include <vector>

namespace palpatron
{

/// Which feature of a triangle the closest point landed on.
enum class TriangleRegion : std::uint8_t
{
  Face,
  Edge01,
  Edge12,
  Edge20,
  Vertex0,
  Vertex1,
  Vertex2,
};

struct TrianglePoint
{
  Vec3 point;
  Vec3 barycentric;  // weights of (a, b, c)
  TriangleRegion region = TriangleRegion::Face;
};

/// Closest point on triangle (a, b, c) to p (Voronoi-region walk).
TrianglePoint closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b,
                                        const Vec3& c);

struct SurfaceHit
{
  Vec3 point;
  Vec3 barycentric;
  std::uint32_t triangle = std::numeric_limits<std::uint32_t>::max();
  TriangleRegion region = TriangleRegion::Face;
  double distance_sq = std::numeric_limits<double>::infinity();
  /// +1 outside (on the normal side), -1 beneath, from angle-weighted pseudo-normals.
  double side = 1.0;
};

/// Bounding-volume hierarchy over a triangle mesh for nearest-point queries.
///
/// Ties between equidistant triangles resolve to the lowest triangle index, so
/// results match an exhaustive scan exactly.
class SurfaceIndex
{
public:
  SurfaceIndex() = default;
  explicit SurfaceIndex(const SurfaceMesh& mesh);

  SurfaceHit closest(const Vec3& p) const;

  /// Exhaustive scan with the same tie-breaking; used for cross-checks and benchmarks.
  SurfaceHit closest_brute_force(const Vec3& p) const;

  std::size_t node_count() const { return nodes_.size(); }

private:
  struct Node
  {
    Eigen::AlignedBox3d box;
    std::uint32_t first = 0;  // first triangle slot (leaf) or left child (inner)
    std::uint32_t count = 0;  // triangles in leaf; 0 for inner nodes
    std::uint32_t right = 0;
  };

  struct Tri
  {
    Vec3 a;
    Vec3 b;
    Vec3 c;
    std::uint32_t id;
  };

  std::uint32_t build(std::uint32_t begin, std::uint32_t end);
  void visit_triangle(const Tri& tri, const Vec3& p, SurfaceHit& best) const;
  double side_of(const SurfaceHit& hit, const Vec3& p) const;

  std::vector<Node> nodes_;
  std::vector<Tri> tris_;  // leaf-ordered copies

  // Pseudo-normals indexed by original triangle id.
  std::vector<Vec3> face_normals_;
  std::vector<std::array<Vec3, 3>> edge_normals_;  // edges 01, 12, 20
  std::vector<std::array<Vec3, 3>> corner_normals_;
};

}  // namespace palpatron
