#pragma once

// Straightforward reference implementations the library is checked against.
// They share no code with the library.

#include "palpatron/haptics.hpp"
#include "palpatron/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

namespace palpatron::oracle
{

inline Vec3 closest_on_segment(const Vec3& p, const Vec3& a, const Vec3& b)
{
  const Vec3 ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 == 0.0)
  {
    return a;
  }
  const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return a + t * ab;
}

/// Distance from p to triangle abc: plane projection when it falls inside, else the nearest edge.
inline double point_triangle_distance(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c)
{
  const double edges = std::min({(p - closest_on_segment(p, a, b)).norm(),
                                 (p - closest_on_segment(p, b, c)).norm(),
                                 (p - closest_on_segment(p, c, a)).norm()});
  Vec3 n = (b - a).cross(c - a);
  if (n.norm() == 0.0)
  {
    return edges;
  }
  n.normalize();
  const Vec3 q = p - (p - a).dot(n) * n;
  const bool inside = (b - a).cross(q - a).dot(n) >= 0.0 && (c - b).cross(q - b).dot(n) >= 0.0 &&
                      (a - c).cross(q - c).dot(n) >= 0.0;
  return inside ? std::min(edges, (p - q).norm()) : edges;
}

struct Nearest
{
  double distance = std::numeric_limits<double>::infinity();
  std::size_t triangle = 0;
};

inline Nearest nearest_triangle(const SurfaceMesh& mesh, const Vec3& p)
{
  Nearest best;
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t)
  {
    const auto& tri = mesh.triangles[t];
    const double d =
      point_triangle_distance(p, mesh.vertices[tri[0]], mesh.vertices[tri[1]], mesh.vertices[tri[2]]);
    if (d < best.distance)
    {
      best = {d, t};
    }
  }
  return best;
}

struct Tap
{
  TimeMs t_start = 0;
  TimeMs t_end = 0;
  TimeMs t_peak = 0;
  double peak = 0.0;
  double mean_tangential_speed = 0.0;
};

/// Mask the supra-threshold samples, find their runs, merge runs separated by
/// fewer than min_gap samples, and read each merged run off directly.
inline std::vector<Tap> scan_taps(std::span<const HapticTick> ticks, double threshold, TimeMs min_gap)
{
  std::vector<bool> above(ticks.size());
  for (std::size_t i = 0; i < ticks.size(); ++i)
  {
    above[i] = ticks[i].force.norm() > threshold;
  }

  std::vector<std::pair<std::size_t, std::size_t>> runs;  // [first, last]
  for (std::size_t i = 0; i < ticks.size(); ++i)
  {
    if (!above[i])
    {
      continue;
    }
    if (!runs.empty() && runs.back().second + 1 == i)
    {
      runs.back().second = i;
    }
    else
    {
      runs.push_back({i, i});
    }
  }

  std::vector<std::pair<std::size_t, std::size_t>> merged;
  for (const auto& run : runs)
  {
    if (!merged.empty() && static_cast<TimeMs>(run.first - merged.back().second - 1) < min_gap)
    {
      merged.back().second = run.second;
    }
    else
    {
      merged.push_back(run);
    }
  }

  std::vector<Tap> taps;
  for (const auto& [first, last] : merged)
  {
    Tap tap;
    tap.t_start = ticks[first].t;
    tap.t_end = ticks[last].t + 1;
    tap.peak = -1.0;
    double speed = 0.0;
    int count = 0;
    for (std::size_t i = first; i <= last; ++i)
    {
      if (!above[i])
      {
        continue;
      }
      const Vec3 n = ticks[i].force.normalized();
      const Vec3 v = ticks[i].tip_velocity;
      speed += (v - v.dot(n) * n).norm();
      ++count;
      if (ticks[i].force.norm() > tap.peak)
      {
        tap.peak = ticks[i].force.norm();
        tap.t_peak = ticks[i].t;
      }
    }
    tap.mean_tangential_speed = speed / count;
    taps.push_back(tap);
  }
  return taps;
}

/// Target in force at time t: the latest sample at or before t, else `initial`.
inline RigState held_target(std::span<const InputSample> samples, TimeMs t, const RigState& initial)
{
  RigState target = initial;
  for (const auto& s : samples)
  {
    if (s.t <= t)
    {
      target = s.target;
    }
  }
  return target;
}

}  // namespace palpatron::oracle
