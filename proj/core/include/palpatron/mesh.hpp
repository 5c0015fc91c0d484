#pragma once

#include "palpatron/types.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace palpatron
{

using Triangle = std::array<std::uint32_t, 3>;

/// Open triangulated shell with per-vertex unit normals and a patch id per triangle.
struct SurfaceMesh
{
  std::vector<Vec3> vertices;
  std::vector<Triangle> triangles;
  std::vector<Vec3> vertex_normals;
  std::vector<std::uint32_t> patch_ids;
  std::uint32_t patch_count = 0;

  std::size_t vertex_count() const { return vertices.size(); }
  std::size_t triangle_count() const { return triangles.size(); }

  Vec3 triangle_normal(std::size_t t) const;
  Vec3 triangle_centroid(std::size_t t) const;
  double triangle_area(std::size_t t) const;
};

struct DomeShape
{
  Vec3 semi_axes{140.0, 80.0, 60.0};
  int grid_u = 60;
  int grid_v = 40;
  int patches_u = 20;
  int patches_v = 10;
};

/// Upper half-ellipsoid (z >= 0) centred at the origin.
///
/// A (grid_u x grid_v) square grid is mapped onto the unit disk with the
/// concentric (Shirley-Chiu) map and lifted onto the ellipsoid, so the pole is a
/// grid vertex and the square's boundary becomes the z = 0 rim. Patch ids come
/// from a (patches_u x patches_v) partition of the same grid.
SurfaceMesh make_dome_mesh(const DomeShape& shape);

/// Angle-weighted vertex normals.
std::vector<Vec3> angle_weighted_normals(const std::vector<Vec3>& vertices,
                                         const std::vector<Triangle>& triangles);

/// Throws MeshError unless indices are in range, normals are unit length, every
/// edge has at most two incident triangles and every patch id is below patch_count.
void validate_mesh(const SurfaceMesh& mesh);

/// `palpmesh v1` import/export. Text and binary encodings share the same header
/// line prefix; see docs/mesh-format.md.
enum class MeshEncoding
{
  Text,
  Binary,
};

SurfaceMesh read_palpmesh(const std::filesystem::path& path);
void write_palpmesh(const SurfaceMesh& mesh, const std::filesystem::path& path,
                    MeshEncoding encoding);

}  // namespace palpatron
