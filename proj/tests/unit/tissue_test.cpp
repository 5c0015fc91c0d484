#include "palpatron/error.hpp"
#include "palpatron/mesh.hpp"
#include "palpatron/rng.hpp"
#include "palpatron/tissue.hpp"

#include "oracles.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <map>
#include <set>

namespace palpatron
{
namespace
{

using testing::model;

TEST(DomeMesh, DefaultShapeCounts)
{
  const SurfaceMesh mesh = make_dome_mesh(DomeShape{});
  EXPECT_EQ(mesh.vertex_count(), 61U * 41U);
  EXPECT_EQ(mesh.triangle_count(), 60U * 40U * 2U);
  EXPECT_EQ(mesh.patch_count, 200U);
  EXPECT_NO_THROW(validate_mesh(mesh));
}

TEST(DomeMesh, ShellInvariants)
{
  const SurfaceMesh mesh = make_dome_mesh(DomeShape{});
  std::map<std::pair<std::uint32_t, std::uint32_t>, int> edge_use;
  for (const auto& tri : mesh.triangles)
  {
    for (int k = 0; k < 3; ++k)
    {
      ASSERT_LT(tri[k], mesh.vertex_count());
      const auto a = tri[k];
      const auto b = tri[(k + 1) % 3];
      ++edge_use[{std::min(a, b), std::max(a, b)}];
    }
  }
  for (const auto& [edge, count] : edge_use)
  {
    EXPECT_LE(count, 2);
  }
  for (const auto& n : mesh.vertex_normals)
  {
    EXPECT_NEAR(n.norm(), 1.0, 1e-6);
  }
  std::set<std::uint32_t> patches(mesh.patch_ids.begin(), mesh.patch_ids.end());
  EXPECT_EQ(patches.size(), 200U);
  EXPECT_EQ(*patches.rbegin(), 199U);
}

TEST(DomeMesh, VerticesOnEllipsoid)
{
  const DomeShape shape;
  const SurfaceMesh mesh = make_dome_mesh(shape);
  for (const auto& v : mesh.vertices)
  {
    const Vec3 u = v.cwiseQuotient(shape.semi_axes);
    EXPECT_NEAR(u.squaredNorm(), 1.0, 1e-9);
    EXPECT_GE(v.z(), -1e-12);
  }
}

TEST(DomeMesh, ValidateRejectsBadIndex)
{
  SurfaceMesh mesh = make_dome_mesh(DomeShape{});
  mesh.triangles[3][1] = static_cast<std::uint32_t>(mesh.vertex_count());
  EXPECT_THROW(validate_mesh(mesh), MeshError);
}

TEST(Scenario, HealthyIsUniform)
{
  const auto m = model(Scenario::Healthy, 42);
  EXPECT_TRUE(m->features().empty());
  EXPECT_EQ(m->global_multiplier(), 1.0);
  EXPECT_EQ(m->appearance().pallor, 0.0);
  for (std::size_t i = 0; i < m->mesh().vertex_count(); i += 37)
  {
    EXPECT_EQ(stiffness_at(*m, m->mesh().vertices[i]), 600.0);
    EXPECT_EQ(displaced_height(*m, m->mesh().vertices[i]), 0.0);
  }
}

TEST(Scenario, HepaticIsStifferAndPale)
{
  const auto m = model(Scenario::Hepatic, 42);
  EXPECT_GT(m->global_multiplier(), 1.0);
  EXPECT_EQ(m->appearance().pallor, 0.5);
  for (std::size_t i = 0; i < m->mesh().vertex_count(); i += 41)
  {
    EXPECT_DOUBLE_EQ(stiffness_at(*m, m->mesh().vertices[i]), 2.5 * 600.0);
  }
}

TEST(Scenario, CirrhoticHasManyNodules)
{
  const auto m = model(Scenario::Cirrhotic, 3);
  std::size_t nodules = 0;
  for (const auto& f : m->features())
  {
    nodules += f.kind == FeatureKind::Nodule ? 1U : 0U;
  }
  EXPECT_GE(nodules, 10U);
}

TEST(Scenario, TumoralFeatureKindsAndReproducibility)
{
  const auto a = model(Scenario::Tumoral, 7);
  const auto b = model(Scenario::Tumoral, 7);
  std::size_t surface = 0;
  std::size_t deep = 0;
  for (const auto& f : a->features())
  {
    surface += f.kind == FeatureKind::SurfaceCyst ? 1U : 0U;
    if (f.kind == FeatureKind::DeepCyst)
    {
      ++deep;
      EXPECT_FALSE(f.visible);
    }
  }
  EXPECT_GE(surface, 1U);
  EXPECT_GE(deep, 1U);
  ASSERT_EQ(a->features().size(), b->features().size());
  for (std::size_t i = 0; i < a->features().size(); ++i)
  {
    EXPECT_EQ(a->features()[i], b->features()[i]);
  }
  EXPECT_EQ(a->displaced_mesh().vertices, b->displaced_mesh().vertices);
}

TEST(Scenario, FeatureInvariantsAcrossSeeds)
{
  for (const Scenario s : kAllScenarios)
  {
    for (std::uint64_t seed = 1; seed <= 8; ++seed)
    {
      const auto m = model(s, seed);
      for (const auto& f : m->features())
      {
        EXPECT_GT(f.radius_sigma, 0.0);
        EXPECT_GT(f.stiffness_delta, 0.0);
        if (f.kind == FeatureKind::DeepCyst)
        {
          EXPECT_FALSE(f.visible);
          EXPECT_EQ(f.bump_height, 0.0);
          EXPECT_GT(f.burial_depth, 0.0);
          // Attenuated contrast stays at least a quarter of the delta.
          const double d = m->material().attenuation_depth;
          EXPECT_GE(std::exp(-f.burial_depth * f.burial_depth / (2 * d * d)), 0.25);
        }
        else
        {
          EXPECT_EQ(f.burial_depth, 0.0);
        }
      }
    }
  }
}

TEST(Scenario, DifferentSeedsDiffer)
{
  const auto a = model(Scenario::Cirrhotic, 1);
  const auto b = model(Scenario::Cirrhotic, 2);
  EXPECT_NE(a->features().front().center, b->features().front().center);
}

TEST(Scenario, InvalidConfigRejected)
{
  Config config;
  config.set("tissue.tumoral.burial_min", 9.0);
  config.set("tissue.tumoral.burial_max", 4.0);
  EXPECT_THROW(build_scenario(Scenario::Tumoral, 1, tissue_config(config)), ConfigError);
}

/// Single-nodule model on the default dome.
TissueModel nodule_model(const Vec3& center, double sigma, std::vector<PathologyFeature> extra = {})
{
  PathologyFeature f;
  f.kind = FeatureKind::Nodule;
  f.center = center;
  f.radius_sigma = sigma;
  f.stiffness_delta = 900.0;
  f.bump_height = 1.5;
  std::vector<PathologyFeature> features{f};
  features.insert(features.end(), extra.begin(), extra.end());
  return TissueModel(Scenario::Cirrhotic, 0, make_dome_mesh(DomeShape{}), TissueModel::Material{}, features,
                     Appearance{});
}

TEST(Stiffness, NoduleCenterAndOneSigma)
{
  const Vec3 c(0.0, 0.0, 60.0);
  const TissueModel m = nodule_model(c, 6.0);
  EXPECT_DOUBLE_EQ(stiffness_at(m, c), 1500.0);
  const Vec3 at_sigma = c + Vec3(6.0, 0.0, 0.0);
  EXPECT_NEAR(stiffness_at(m, at_sigma), 600.0 + 900.0 * std::exp(-0.5), 1e-9);
  EXPECT_DOUBLE_EQ(displaced_height(m, c), 1.5);
}

TEST(Stiffness, ClosedFormSumOverFeatures)
{
  Rng rng(11);
  std::vector<PathologyFeature> extra;
  for (int i = 0; i < 6; ++i)
  {
    PathologyFeature f;
    f.kind = i % 2 == 0 ? FeatureKind::Nodule : FeatureKind::DeepCyst;
    f.center = Vec3(rng.uniform(-60, 60), rng.uniform(-40, 40), 50.0);
    f.radius_sigma = rng.uniform(4, 10);
    f.stiffness_delta = rng.uniform(300, 1200);
    f.burial_depth = f.kind == FeatureKind::DeepCyst ? rng.uniform(5, 9) : 0.0;
    f.bump_height = f.kind == FeatureKind::Nodule ? rng.uniform(0.5, 2.0) : 0.0;
    f.visible = f.kind == FeatureKind::Nodule;
    extra.push_back(f);
  }
  const TissueModel m = nodule_model(Vec3(10, 5, 58), 5.0, extra);
  for (int probe = 0; probe < 200; ++probe)
  {
    const Vec3 p(rng.uniform(-80, 80), rng.uniform(-50, 50), rng.uniform(20, 60));
    double k = 600.0;
    double h = 0.0;
    for (const auto& f : m.features())
    {
      const double r2 = (p - f.center).squaredNorm();
      const double w = std::exp(-r2 / (2.0 * f.radius_sigma * f.radius_sigma));
      k += f.stiffness_delta * w * std::exp(-f.burial_depth * f.burial_depth / (2.0 * 36.0));
      h += f.bump_height * w;
    }
    EXPECT_NEAR(stiffness_at(m, p), k, 1e-9);
    EXPECT_NEAR(displaced_height(m, p), h, 1e-12);
  }
}

TEST(Stiffness, OverlappingBumpsAdd)
{
  const Vec3 c(0.0, 0.0, 60.0);
  PathologyFeature second;
  second.center = c + Vec3(4.0, 0.0, 0.0);
  second.radius_sigma = 5.0;
  second.stiffness_delta = 900.0;
  second.bump_height = 1.5;
  const TissueModel m = nodule_model(c, 5.0, {second});
  const Vec3 mid = c + Vec3(2.0, 0.0, 0.0);
  EXPECT_NEAR(displaced_height(m, mid), 2.0 * 1.5 * std::exp(-4.0 / 50.0), 1e-12);
}

TEST(SurfaceQuery, OffsetAlongVertexNormal)
{
  const auto m = model(Scenario::Healthy);
  const auto& mesh = m->displaced_mesh();
  for (std::size_t i = 0; i < mesh.vertex_count(); i += 97)
  {
    const Vec3& v = mesh.vertices[i];
    if (v.z() < 5.0)
    {
      continue;  // rim vertices: the open shell's edge
    }
    const SurfaceQuery on = surface_query(*m, v);
    EXPECT_NEAR(on.signed_distance, 0.0, 1e-6);
    const SurfaceQuery out = surface_query(*m, v + 5.0 * mesh.vertex_normals[i]);
    EXPECT_NEAR(out.signed_distance, 5.0, 0.1);
    const SurfaceQuery in = surface_query(*m, v - 2.0 * mesh.vertex_normals[i]);
    EXPECT_NEAR(in.signed_distance, -2.0, 0.1);
  }
}

TEST(SurfaceQuery, MatchesExhaustiveOracle)
{
  const auto m = model(Scenario::Cirrhotic, 5);
  const auto& mesh = m->displaced_mesh();
  Rng rng(99);
  for (int i = 0; i < 300; ++i)
  {
    const Vec3 p(rng.uniform(-170, 170), rng.uniform(-100, 100), rng.uniform(-20, 90));
    const SurfaceQuery q = surface_query(*m, p);
    const oracle::Nearest o = oracle::nearest_triangle(mesh, p);
    EXPECT_NEAR(std::abs(q.signed_distance), o.distance, 1e-9);
    EXPECT_EQ(q.patch_id, mesh.patch_ids[q.triangle]);
  }
}

TEST(SurfaceQuery, BvhAgreesWithBruteForce)
{
  const auto m = model(Scenario::Tumoral, 2);
  Rng rng(5);
  for (int i = 0; i < 200; ++i)
  {
    const Vec3 p(rng.uniform(-160, 160), rng.uniform(-90, 90), rng.uniform(-10, 80));
    const SurfaceHit a = m->index().closest(p);
    const SurfaceHit b = m->index().closest_brute_force(p);
    EXPECT_EQ(a.triangle, b.triangle);
    EXPECT_EQ(a.distance_sq, b.distance_sq);
    EXPECT_EQ(a.side, b.side);
  }
}

TEST(SurfaceQuery, ClosestPointRegions)
{
  const Vec3 a(0, 0, 0);
  const Vec3 b(1, 0, 0);
  const Vec3 c(0, 1, 0);
  EXPECT_EQ(closest_point_on_triangle(Vec3(0.2, 0.2, 1), a, b, c).region, TriangleRegion::Face);
  EXPECT_EQ(closest_point_on_triangle(Vec3(-1, -1, 0), a, b, c).region, TriangleRegion::Vertex0);
  EXPECT_EQ(closest_point_on_triangle(Vec3(0.5, -1, 0), a, b, c).region, TriangleRegion::Edge01);
  const auto p = closest_point_on_triangle(Vec3(1, 1, 0), a, b, c);
  EXPECT_EQ(p.region, TriangleRegion::Edge12);
  EXPECT_NEAR((p.point - Vec3(0.5, 0.5, 0)).norm(), 0.0, 1e-15);
}

TEST(PatchCentroids, AreaWeightedMean)
{
  const auto m = model(Scenario::Cirrhotic, 4);
  const auto centroids = patch_centroids(*m);
  ASSERT_EQ(centroids.size(), 200U);
  const auto& mesh = m->displaced_mesh();
  std::set<std::uint32_t> ids;
  for (const auto& [id, point] : centroids)
  {
    ids.insert(id);
    Vec3 sum = Vec3::Zero();
    double area = 0.0;
    for (std::size_t t = 0; t < mesh.triangle_count(); ++t)
    {
      if (mesh.patch_ids[t] != id)
      {
        continue;
      }
      const auto& tri = mesh.triangles[t];
      const Vec3& p0 = mesh.vertices[tri[0]];
      const Vec3& p1 = mesh.vertices[tri[1]];
      const Vec3& p2 = mesh.vertices[tri[2]];
      const double a = 0.5 * (p1 - p0).cross(p2 - p0).norm();
      sum += a * (p0 + p1 + p2) / 3.0;
      area += a;
    }
    EXPECT_NEAR((point - sum / area).norm(), 0.0, 1e-9);
  }
  EXPECT_EQ(ids.size(), 200U);
}

TEST(Findings, MatchScenario)
{
  EXPECT_EQ(expected_findings(*model(Scenario::Healthy)).diagnosis, "healthy liver");
  EXPECT_EQ(expected_findings(*model(Scenario::Cirrhotic)).diagnosis, "cirrhosis");
  EXPECT_EQ(expected_findings(*model(Scenario::Tumoral)).diagnosis, "tumors/cysts");
  EXPECT_EQ(expected_findings(*model(Scenario::Hepatic)).color, "pale");
  EXPECT_EQ(expected_findings(*model(Scenario::Healthy)).consistency, "smooth, no irregularities");
}

TEST(MeshIo, RoundTripBothEncodings)
{
  testing::TempDir dir("meshio");
  const SurfaceMesh mesh = make_dome_mesh(DomeShape{{100, 70, 50}, 20, 16, 5, 4});
  for (const auto encoding : {MeshEncoding::Text, MeshEncoding::Binary})
  {
    const auto path = dir / (encoding == MeshEncoding::Text ? "m.txt" : "m.bin");
    write_palpmesh(mesh, path, encoding);
    const SurfaceMesh back = read_palpmesh(path);
    EXPECT_EQ(back.triangles, mesh.triangles);
    EXPECT_EQ(back.patch_ids, mesh.patch_ids);
    EXPECT_EQ(back.patch_count, mesh.patch_count);
    ASSERT_EQ(back.vertices.size(), mesh.vertices.size());
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i)
    {
      EXPECT_EQ(back.vertices[i], mesh.vertices[i]);
    }
  }
}

TEST(MeshIo, MalformedFilesRejected)
{
  testing::TempDir dir("meshbad");
  const auto path = dir / "bad.txt";
  {
    std::ofstream(path) << "palpmesh v2\n3 1\n";
  }
  EXPECT_THROW(read_palpmesh(path), MeshError);
  {
    std::ofstream(path) << "palpmesh v1\n3 1\n0 0 0\n1 0 0\n";
  }
  EXPECT_THROW(read_palpmesh(path), MeshError);
  EXPECT_THROW(read_palpmesh(dir / "absent.txt"), MeshError);
}

TEST(MeshIo, ImportedMeshDrivesScenario)
{
  testing::TempDir dir("meshscn");
  const SurfaceMesh mesh = make_dome_mesh(DomeShape{{120, 90, 50}, 30, 20, 10, 5});
  const SurfaceMesh back = [&] {
    write_palpmesh(mesh, dir / "m.bin", MeshEncoding::Binary);
    return read_palpmesh(dir / "m.bin");
  }();
  const TissueModel m = build_scenario(Scenario::Cirrhotic, 3, tissue_config(Config()), &back);
  EXPECT_EQ(m.patch_count(), 50U);
  EXPECT_EQ(m.mesh().vertex_count(), mesh.vertex_count());
}

}  // namespace
}  // namespace palpatron
