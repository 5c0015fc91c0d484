#include "palpatron/mesh.hpp"

#include "palpatron/error.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <string>
#include <utility>

namespace palpatron
{
namespace
{

/// Concentric square-to-disk map; returns the disk point for (a, b) in [-1, 1]^2.
Eigen::Vector2d concentric_disk(double a, double b)
{
  constexpr double kQuarterPi = std::numbers::pi / 4.0;
  if (a == 0.0 && b == 0.0)
  {
    return Eigen::Vector2d::Zero();
  }
  double r = 0.0;
  double phi = 0.0;
  if (std::abs(a) > std::abs(b))
  {
    r = a;
    phi = kQuarterPi * (b / a);
  }
  else
  {
    r = b;
    phi = 2.0 * kQuarterPi - kQuarterPi * (a / b);
  }
  return {r * std::cos(phi), r * std::sin(phi)};
}

double corner_angle(const Vec3& at, const Vec3& p, const Vec3& q)
{
  const Vec3 u = p - at;
  const Vec3 v = q - at;
  return std::atan2(u.cross(v).norm(), u.dot(v));
}

}  // namespace

Vec3 SurfaceMesh::triangle_normal(std::size_t t) const
{
  const auto& tri = triangles[t];
  const Vec3 n = (vertices[tri[1]] - vertices[tri[0]]).cross(vertices[tri[2]] - vertices[tri[0]]);
  const double len = n.norm();
  return len > 0.0 ? Vec3(n / len) : Vec3::UnitZ();
}

Vec3 SurfaceMesh::triangle_centroid(std::size_t t) const
{
  const auto& tri = triangles[t];
  return (vertices[tri[0]] + vertices[tri[1]] + vertices[tri[2]]) / 3.0;
}

double SurfaceMesh::triangle_area(std::size_t t) const
{
  const auto& tri = triangles[t];
  return 0.5 * (vertices[tri[1]] - vertices[tri[0]]).cross(vertices[tri[2]] - vertices[tri[0]]).norm();
}

SurfaceMesh make_dome_mesh(const DomeShape& shape)
{
  if (shape.grid_u <= 0 || shape.grid_v <= 0 || shape.patches_u <= 0 || shape.patches_v <= 0)
  {
    throw ConfigError("mesh and patch resolution must be positive");
  }
  if (shape.patches_u > shape.grid_u || shape.patches_v > shape.grid_v)
  {
    throw ConfigError("patch grid must not be finer than the mesh grid");
  }
  if ((shape.semi_axes.array() <= 0.0).any())
  {
    throw ConfigError("dome semi-axes must be positive");
  }

  const int nu = shape.grid_u;
  const int nv = shape.grid_v;
  SurfaceMesh mesh;
  mesh.vertices.reserve(static_cast<std::size_t>((nu + 1) * (nv + 1)));

  for (int j = 0; j <= nv; ++j)
  {
    for (int i = 0; i <= nu; ++i)
    {
      // Exact rational grid coordinates keep the pole and the axes on vertices.
      const double s = static_cast<double>(2 * i - nu) / nu;
      const double t = static_cast<double>(2 * j - nv) / nv;
      const Eigen::Vector2d disk = concentric_disk(s, t);
      const double rho = std::min(1.0, disk.norm());
      const double theta = rho * std::numbers::pi / 2.0;
      Eigen::Vector2d dir = Eigen::Vector2d::Zero();
      if (rho > 0.0)
      {
        dir = disk / disk.norm();
      }
      const double sin_t = std::sin(theta);
      // cos(pi/2) is not exactly zero; pin the rim to z = 0.
      const double z = rho >= 1.0 ? 0.0 : shape.semi_axes.z() * std::cos(theta);
      mesh.vertices.emplace_back(shape.semi_axes.x() * sin_t * dir.x(),
                                 shape.semi_axes.y() * sin_t * dir.y(), z);
    }
  }

  auto index = [nu](int i, int j) { return static_cast<std::uint32_t>(j * (nu + 1) + i); };

  mesh.triangles.reserve(static_cast<std::size_t>(2 * nu * nv));
  mesh.patch_ids.reserve(mesh.triangles.capacity());
  for (int j = 0; j < nv; ++j)
  {
    for (int i = 0; i < nu; ++i)
    {
      const std::uint32_t v00 = index(i, j);
      const std::uint32_t v10 = index(i + 1, j);
      const std::uint32_t v01 = index(i, j + 1);
      const std::uint32_t v11 = index(i + 1, j + 1);
      const std::uint32_t patch = static_cast<std::uint32_t>(
        (j * shape.patches_v / nv) * shape.patches_u + (i * shape.patches_u / nu));

      // Diagonals run away from the pole so the mesh is symmetric in x and y.
      const int sc = 2 * i + 1 - nu;
      const int tc = 2 * j + 1 - nv;
      if ((sc > 0) == (tc > 0))
      {
        mesh.triangles.push_back({v00, v10, v11});
        mesh.triangles.push_back({v00, v11, v01});
      }
      else
      {
        mesh.triangles.push_back({v00, v10, v01});
        mesh.triangles.push_back({v10, v11, v01});
      }
      mesh.patch_ids.push_back(patch);
      mesh.patch_ids.push_back(patch);
    }
  }
  mesh.patch_count = static_cast<std::uint32_t>(shape.patches_u * shape.patches_v);
  mesh.vertex_normals = angle_weighted_normals(mesh.vertices, mesh.triangles);
  return mesh;
}

std::vector<Vec3> angle_weighted_normals(const std::vector<Vec3>& vertices,
                                         const std::vector<Triangle>& triangles)
{
  std::vector<Vec3> normals(vertices.size(), Vec3::Zero());
  for (const auto& tri : triangles)
  {
    const Vec3& a = vertices[tri[0]];
    const Vec3& b = vertices[tri[1]];
    const Vec3& c = vertices[tri[2]];
    Vec3 n = (b - a).cross(c - a);
    const double len = n.norm();
    if (len == 0.0)
    {
      continue;
    }
    n /= len;
    normals[tri[0]] += corner_angle(a, b, c) * n;
    normals[tri[1]] += corner_angle(b, c, a) * n;
    normals[tri[2]] += corner_angle(c, a, b) * n;
  }
  for (auto& n : normals)
  {
    const double len = n.norm();
    n = len > 0.0 ? Vec3(n / len) : Vec3::UnitZ();
  }
  return normals;
}

void validate_mesh(const SurfaceMesh& mesh)
{
  const auto nv = mesh.vertices.size();
  if (mesh.vertex_normals.size() != nv)
  {
    throw MeshError("vertex normal count does not match vertex count");
  }
  if (mesh.patch_ids.size() != mesh.triangles.size())
  {
    throw MeshError("patch id count does not match triangle count");
  }
  for (const auto& n : mesh.vertex_normals)
  {
    if (std::abs(n.norm() - 1.0) > 1e-6)
    {
      throw MeshError("vertex normal is not unit length");
    }
  }
  std::map<std::pair<std::uint32_t, std::uint32_t>, int> edge_use;
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t)
  {
    const auto& tri = mesh.triangles[t];
    for (int k = 0; k < 3; ++k)
    {
      if (tri[k] >= nv)
      {
        throw MeshError("triangle " + std::to_string(t) + " references vertex out of range");
      }
    }
    if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2])
    {
      throw MeshError("triangle " + std::to_string(t) + " is degenerate");
    }
    for (int k = 0; k < 3; ++k)
    {
      auto a = tri[k];
      auto b = tri[(k + 1) % 3];
      if (a > b)
      {
        std::swap(a, b);
      }
      if (++edge_use[{a, b}] > 2)
      {
        throw MeshError("edge shared by more than two triangles");
      }
    }
    if (mesh.patch_ids[t] >= mesh.patch_count)
    {
      throw MeshError("patch id out of range");
    }
  }
}

}  // namespace palpatron
