#include "palpatron/surface_index.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <utility>

namespace palpatron
{

TrianglePoint closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b,
                                        const Vec3& c)
{
  const Vec3 ab = b - a;
  const Vec3 ac = c - a;
  const Vec3 ap = p - a;
  const double d1 = ab.dot(ap);
  const double d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0)
  {
    return {a, {1.0, 0.0, 0.0}, TriangleRegion::Vertex0};
  }

  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp);
  const double d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3)
  {
    return {b, {0.0, 1.0, 0.0}, TriangleRegion::Vertex1};
  }

  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0)
  {
    const double v = d1 / (d1 - d3);
    return {a + v * ab, {1.0 - v, v, 0.0}, TriangleRegion::Edge01};
  }

  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp);
  const double d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6)
  {
    return {c, {0.0, 0.0, 1.0}, TriangleRegion::Vertex2};
  }

  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0)
  {
    const double w = d2 / (d2 - d6);
    return {a + w * ac, {1.0 - w, 0.0, w}, TriangleRegion::Edge20};
  }

  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0)
  {
    const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    return {b + w * (c - b), {0.0, 1.0 - w, w}, TriangleRegion::Edge12};
  }

  const double denom = 1.0 / (va + vb + vc);
  const double v = vb * denom;
  const double w = vc * denom;
  return {a + ab * v + ac * w, {1.0 - v - w, v, w}, TriangleRegion::Face};
}

SurfaceIndex::SurfaceIndex(const SurfaceMesh& mesh)
{
  const auto nt = mesh.triangles.size();
  tris_.reserve(nt);
  face_normals_.resize(nt);
  edge_normals_.resize(nt);
  corner_normals_.resize(nt);

  std::map<std::pair<std::uint32_t, std::uint32_t>, Vec3> edge_sum;
  std::vector<Vec3> vertex_sum(mesh.vertices.size(), Vec3::Zero());

  for (std::size_t t = 0; t < nt; ++t)
  {
    const auto& tri = mesh.triangles[t];
    const Vec3& a = mesh.vertices[tri[0]];
    const Vec3& b = mesh.vertices[tri[1]];
    const Vec3& c = mesh.vertices[tri[2]];
    tris_.push_back({a, b, c, static_cast<std::uint32_t>(t)});

    const Vec3 n = mesh.triangle_normal(t);
    face_normals_[t] = n;
    for (int k = 0; k < 3; ++k)
    {
      auto u = tri[k];
      auto v = tri[(k + 1) % 3];
      if (u > v)
      {
        std::swap(u, v);
      }
      auto [it, inserted] = edge_sum.try_emplace({u, v}, Vec3::Zero());
      it->second += n;

      const Vec3& at = mesh.vertices[tri[k]];
      const Vec3 e1 = mesh.vertices[tri[(k + 1) % 3]] - at;
      const Vec3 e2 = mesh.vertices[tri[(k + 2) % 3]] - at;
      vertex_sum[tri[k]] += std::atan2(e1.cross(e2).norm(), e1.dot(e2)) * n;
    }
  }

  for (std::size_t t = 0; t < nt; ++t)
  {
    const auto& tri = mesh.triangles[t];
    for (int k = 0; k < 3; ++k)
    {
      auto u = tri[k];
      auto v = tri[(k + 1) % 3];
      if (u > v)
      {
        std::swap(u, v);
      }
      edge_normals_[t][k] = edge_sum.at({u, v}).normalized();
      corner_normals_[t][k] = vertex_sum[tri[k]].normalized();
    }
  }

  if (nt > 0)
  {
    nodes_.reserve(2 * nt);
    build(0, static_cast<std::uint32_t>(nt));
  }
}

std::uint32_t SurfaceIndex::build(std::uint32_t begin, std::uint32_t end)
{
  constexpr std::uint32_t kLeafSize = 4;

  const auto node_index = static_cast<std::uint32_t>(nodes_.size());
  nodes_.emplace_back();

  Eigen::AlignedBox3d box;
  Eigen::AlignedBox3d centroid_box;
  for (auto i = begin; i < end; ++i)
  {
    const Tri& t = tris_[i];
    box.extend(t.a).extend(t.b).extend(t.c);
    centroid_box.extend(Vec3((t.a + t.b + t.c) / 3.0));
  }
  nodes_[node_index].box = box;

  if (end - begin <= kLeafSize)
  {
    nodes_[node_index].first = begin;
    nodes_[node_index].count = end - begin;
    return node_index;
  }

  int axis = 0;
  centroid_box.sizes().maxCoeff(&axis);
  const auto mid = begin + (end - begin) / 2;
  std::nth_element(tris_.begin() + begin, tris_.begin() + mid, tris_.begin() + end,
                   [axis](const Tri& l, const Tri& r) {
                     const double cl = l.a[axis] + l.b[axis] + l.c[axis];
                     const double cr = r.a[axis] + r.b[axis] + r.c[axis];
                     return cl < cr || (cl == cr && l.id < r.id);
                   });

  const auto left = build(begin, mid);
  const auto right = build(mid, end);
  nodes_[node_index].first = left;
  nodes_[node_index].right = right;
  nodes_[node_index].count = 0;
  return node_index;
}

void SurfaceIndex::visit_triangle(const Tri& tri, const Vec3& p, SurfaceHit& best) const
{
  const TrianglePoint cp = closest_point_on_triangle(p, tri.a, tri.b, tri.c);
  const double d2 = (p - cp.point).squaredNorm();
  if (d2 < best.distance_sq || (d2 == best.distance_sq && tri.id < best.triangle))
  {
    best.point = cp.point;
    best.barycentric = cp.barycentric;
    best.triangle = tri.id;
    best.region = cp.region;
    best.distance_sq = d2;
  }
}

double SurfaceIndex::side_of(const SurfaceHit& hit, const Vec3& p) const
{
  const auto t = hit.triangle;
  Vec3 n;
  switch (hit.region)
  {
    case TriangleRegion::Face: n = face_normals_[t]; break;
    case TriangleRegion::Edge01: n = edge_normals_[t][0]; break;
    case TriangleRegion::Edge12: n = edge_normals_[t][1]; break;
    case TriangleRegion::Edge20: n = edge_normals_[t][2]; break;
    case TriangleRegion::Vertex0: n = corner_normals_[t][0]; break;
    case TriangleRegion::Vertex1: n = corner_normals_[t][1]; break;
    case TriangleRegion::Vertex2: n = corner_normals_[t][2]; break;
  }
  return (p - hit.point).dot(n) < 0.0 ? -1.0 : 1.0;
}

SurfaceHit SurfaceIndex::closest(const Vec3& p) const
{
  SurfaceHit best;
  if (nodes_.empty())
  {
    return best;
  }

  std::uint32_t stack[64];
  int top = 0;
  stack[top++] = 0;
  while (top > 0)
  {
    const Node& node = nodes_[stack[--top]];
    if (node.box.squaredExteriorDistance(p) > best.distance_sq)
    {
      continue;
    }
    if (node.count > 0)
    {
      for (auto i = node.first; i < node.first + node.count; ++i)
      {
        visit_triangle(tris_[i], p, best);
      }
      continue;
    }
    const double dl = nodes_[node.first].box.squaredExteriorDistance(p);
    const double dr = nodes_[node.right].box.squaredExteriorDistance(p);
    // Push the farther child first so the nearer one is explored first.
    if (dl <= dr)
    {
      stack[top++] = node.right;
      stack[top++] = node.first;
    }
    else
    {
      stack[top++] = node.first;
      stack[top++] = node.right;
    }
  }
  best.side = side_of(best, p);
  return best;
}

SurfaceHit SurfaceIndex::closest_brute_force(const Vec3& p) const
{
  SurfaceHit best;
  for (const Tri& tri : tris_)
  {
    visit_triangle(tri, p, best);
  }
  if (best.triangle != std::numeric_limits<std::uint32_t>::max())
  {
    best.side = side_of(best, p);
  }
  return best;
}

}  // namespace palpatron
