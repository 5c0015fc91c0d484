#include "palpatron/tissue.hpp"

#include "palpatron/error.hpp"
#include "palpatron/rng.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace palpatron
{
namespace
{

double gaussian_weight(const Vec3& x, const Vec3& center, double sigma)
{
  return std::exp(-(x - center).squaredNorm() / (2.0 * sigma * sigma));
}

void require(bool condition, const char* message)
{
  if (!condition)
  {
    throw ConfigError(message);
  }
}

/// Samples feature footprints uniformly by area over the palpable (upward-facing) triangles.
class SurfaceSampler
{
public:
  SurfaceSampler(const SurfaceMesh& mesh, double min_nz) : mesh_(mesh)
  {
    double total = 0.0;
    for (std::size_t t = 0; t < mesh.triangle_count(); ++t)
    {
      if (mesh.triangle_normal(t).z() >= min_nz)
      {
        total += mesh.triangle_area(t);
        triangles_.push_back(static_cast<std::uint32_t>(t));
        cumulative_.push_back(total);
      }
    }
    if (triangles_.empty())
    {
      throw ConfigError("mesh has no palpable upper region for feature placement");
    }
  }

  Vec3 sample(Rng& rng) const
  {
    const double target = rng.uniform() * cumulative_.back();
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), target);
    const auto slot = std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()),
                                            triangles_.size() - 1);
    const auto& tri = mesh_.triangles[triangles_[slot]];
    const double r1 = std::sqrt(rng.uniform());
    const double r2 = rng.uniform();
    return (1.0 - r1) * mesh_.vertices[tri[0]] + r1 * (1.0 - r2) * mesh_.vertices[tri[1]] +
           r1 * r2 * mesh_.vertices[tri[2]];
  }

private:
  const SurfaceMesh& mesh_;
  std::vector<std::uint32_t> triangles_;
  std::vector<double> cumulative_;
};

}  // namespace

std::string_view to_string(FeatureKind kind)
{
  switch (kind)
  {
    case FeatureKind::Nodule: return "nodule";
    case FeatureKind::SurfaceCyst: return "surface_cyst";
    case FeatureKind::DeepCyst: return "deep_cyst";
  }
  return "unknown";
}

TissueConfig tissue_config(const Config& config)
{
  TissueConfig c;
  c.k0 = config.get("tissue.k0");
  c.damping = config.get("tissue.damping");
  c.dome.semi_axes = {config.get("tissue.axis.x"), config.get("tissue.axis.y"),
                      config.get("tissue.axis.z")};
  c.dome.grid_u = config.get_int("tissue.mesh.u");
  c.dome.grid_v = config.get_int("tissue.mesh.v");
  c.dome.patches_u = config.get_int("tissue.patch.u");
  c.dome.patches_v = config.get_int("tissue.patch.v");
  c.attenuation_depth = config.get("tissue.d_atten");
  c.feature_min_nz = config.get("tissue.feature_min_nz");
  c.hepatic_multiplier = config.get("tissue.hepatic.multiplier");
  c.hepatic_pallor = config.get("tissue.hepatic.pallor");
  c.nodule_count = config.get_int("tissue.cirrhotic.count");
  c.nodule_sigma_min = config.get("tissue.cirrhotic.sigma_min");
  c.nodule_sigma_max = config.get("tissue.cirrhotic.sigma_max");
  c.nodule_delta_k = config.get("tissue.cirrhotic.delta_k");
  c.nodule_bump = config.get("tissue.cirrhotic.bump");
  c.surface_cyst_count = config.get_int("tissue.tumoral.surface_count");
  c.surface_cyst_delta_k = config.get("tissue.tumoral.surface_delta_k");
  c.surface_cyst_sigma_min = config.get("tissue.tumoral.surface_sigma_min");
  c.surface_cyst_sigma_max = config.get("tissue.tumoral.surface_sigma_max");
  c.surface_cyst_bump = config.get("tissue.tumoral.surface_bump");
  c.deep_cyst_count = config.get_int("tissue.tumoral.deep_count");
  c.deep_cyst_delta_k = config.get("tissue.tumoral.deep_delta_k");
  c.deep_cyst_sigma_min = config.get("tissue.tumoral.deep_sigma_min");
  c.deep_cyst_sigma_max = config.get("tissue.tumoral.deep_sigma_max");
  c.burial_min = config.get("tissue.tumoral.burial_min");
  c.burial_max = config.get("tissue.tumoral.burial_max");
  return c;
}

void validate(const TissueConfig& c)
{
  require(c.k0 > 0.0, "tissue.k0 must be positive");
  require(c.damping >= 0.0, "tissue.damping must be non-negative");
  require(c.dome.grid_u > 0 && c.dome.grid_v > 0, "mesh resolution must be positive");
  require(c.dome.patches_u > 0 && c.dome.patches_v > 0, "patch grid must be positive");
  require(c.attenuation_depth > 0.0, "tissue.d_atten must be positive");
  require(c.hepatic_multiplier > 1.0, "tissue.hepatic.multiplier must exceed 1");
  require(c.hepatic_pallor > 0.0 && c.hepatic_pallor <= 1.0,
          "tissue.hepatic.pallor must lie in (0, 1]");
  require(c.nodule_count >= 10, "tissue.cirrhotic.count must be at least 10");
  require(c.nodule_sigma_min > 0.0 && c.nodule_sigma_min <= c.nodule_sigma_max,
          "cirrhotic sigma range is invalid");
  require(c.nodule_delta_k > 0.0, "tissue.cirrhotic.delta_k must be positive");
  require(c.nodule_bump >= 0.0, "tissue.cirrhotic.bump must be non-negative");
  require(c.surface_cyst_count >= 1, "tissue.tumoral.surface_count must be at least 1");
  require(c.surface_cyst_delta_k > 0.0, "tissue.tumoral.surface_delta_k must be positive");
  require(c.surface_cyst_sigma_min > 0.0 && c.surface_cyst_sigma_min <= c.surface_cyst_sigma_max,
          "surface cyst sigma range is invalid");
  require(c.surface_cyst_bump >= 0.0, "tissue.tumoral.surface_bump must be non-negative");
  require(c.deep_cyst_count >= 1, "tissue.tumoral.deep_count must be at least 1");
  require(c.deep_cyst_delta_k > 0.0, "tissue.tumoral.deep_delta_k must be positive");
  require(c.deep_cyst_sigma_min > 0.0 && c.deep_cyst_sigma_min <= c.deep_cyst_sigma_max,
          "deep cyst sigma range is invalid");
  require(c.burial_min > 0.0 && c.burial_min <= c.burial_max, "burial depth range is invalid");
}

TissueModel::TissueModel(Scenario scenario, std::uint64_t seed, SurfaceMesh base_mesh,
                         Material material, std::vector<PathologyFeature> features,
                         Appearance appearance)
  : scenario_(scenario),
    seed_(seed),
    base_mesh_(std::move(base_mesh)),
    material_(material),
    features_(std::move(features)),
    appearance_(appearance)
{
  displaced_mesh_ = base_mesh_;
  for (std::size_t v = 0; v < base_mesh_.vertices.size(); ++v)
  {
    const double h = displaced_height(*this, base_mesh_.vertices[v]);
    if (h != 0.0)
    {
      displaced_mesh_.vertices[v] += h * base_mesh_.vertex_normals[v];
    }
  }
  displaced_mesh_.vertex_normals =
    angle_weighted_normals(displaced_mesh_.vertices, displaced_mesh_.triangles);
  index_ = SurfaceIndex(displaced_mesh_);

  for (const auto& v : displaced_mesh_.vertices)
  {
    bounds_.extend(v);
  }
  for (const auto& v : base_mesh_.vertices)
  {
    bounds_.extend(v);
  }
}

double TissueModel::max_stiffness() const
{
  double k = material_.k0;
  for (const auto& f : features_)
  {
    k += f.stiffness_delta;
  }
  return material_.global_multiplier * k;
}

TissueModel build_scenario(Scenario kind, std::uint64_t seed, const TissueConfig& config,
                           const SurfaceMesh* base_mesh)
{
  validate(config);
  SurfaceMesh mesh = base_mesh != nullptr ? *base_mesh : make_dome_mesh(config.dome);
  validate_mesh(mesh);

  TissueModel::Material material{config.k0, 1.0, config.damping, config.attenuation_depth};
  Appearance appearance;
  std::vector<PathologyFeature> features;

  Rng rng(derive_seed(seed, "tissue"));
  const SurfaceSampler sampler(mesh, config.feature_min_nz);

  switch (kind)
  {
    case Scenario::Healthy:
      break;

    case Scenario::Hepatic:
      material.global_multiplier = config.hepatic_multiplier;
      appearance.pallor = config.hepatic_pallor;
      break;

    case Scenario::Cirrhotic:
    {
      Rng nodules = rng.split("nodules");
      for (int i = 0; i < config.nodule_count; ++i)
      {
        PathologyFeature f;
        f.kind = FeatureKind::Nodule;
        f.center = sampler.sample(nodules);
        f.radius_sigma = nodules.uniform(config.nodule_sigma_min, config.nodule_sigma_max);
        f.stiffness_delta = config.nodule_delta_k;
        f.bump_height = config.nodule_bump;
        f.visible = true;
        features.push_back(f);
      }
      break;
    }

    case Scenario::Tumoral:
    {
      Rng surface = rng.split("surface_cysts");
      for (int i = 0; i < config.surface_cyst_count; ++i)
      {
        PathologyFeature f;
        f.kind = FeatureKind::SurfaceCyst;
        f.center = sampler.sample(surface);
        f.radius_sigma =
          surface.uniform(config.surface_cyst_sigma_min, config.surface_cyst_sigma_max);
        f.stiffness_delta = config.surface_cyst_delta_k;
        f.bump_height = config.surface_cyst_bump;
        f.visible = true;
        features.push_back(f);
      }
      Rng deep = rng.split("deep_cysts");
      for (int i = 0; i < config.deep_cyst_count; ++i)
      {
        PathologyFeature f;
        f.kind = FeatureKind::DeepCyst;
        f.center = sampler.sample(deep);
        f.radius_sigma = deep.uniform(config.deep_cyst_sigma_min, config.deep_cyst_sigma_max);
        f.stiffness_delta = config.deep_cyst_delta_k;
        f.bump_height = 0.0;
        f.burial_depth = deep.uniform(config.burial_min, config.burial_max);
        f.visible = false;
        features.push_back(f);
      }
      break;
    }
  }

  return TissueModel(kind, seed, std::move(mesh), material, std::move(features), appearance);
}

double stiffness_at(const TissueModel& model, const Vec3& point)
{
  const auto& material = model.material();
  double k = material.k0;
  const double two_d2 = 2.0 * material.attenuation_depth * material.attenuation_depth;
  for (const auto& f : model.features())
  {
    const double attenuation = std::exp(-(f.burial_depth * f.burial_depth) / two_d2);
    k += f.stiffness_delta * gaussian_weight(point, f.center, f.radius_sigma) * attenuation;
  }
  return material.global_multiplier * k;
}

double displaced_height(const TissueModel& model, const Vec3& point)
{
  double h = 0.0;
  for (const auto& f : model.features())
  {
    if (f.bump_height > 0.0)
    {
      h += f.bump_height * gaussian_weight(point, f.center, f.radius_sigma);
    }
  }
  return h;
}

SurfaceQuery surface_query(const TissueModel& model, const Vec3& point)
{
  const SurfaceHit hit = model.index().closest(point);
  const auto& surface = model.displaced_mesh();
  const auto& base = model.mesh();
  const auto& tri = surface.triangles[hit.triangle];

  SurfaceQuery q;
  q.nearest_point = hit.point;
  q.signed_distance = hit.side * std::sqrt(hit.distance_sq);
  q.triangle = hit.triangle;
  q.patch_id = surface.patch_ids[hit.triangle];

  Vec3 n = Vec3::Zero();
  Vec3 b = Vec3::Zero();
  for (int k = 0; k < 3; ++k)
  {
    n += hit.barycentric[k] * surface.vertex_normals[tri[k]];
    b += hit.barycentric[k] * base.vertices[tri[k]];
  }
  const double len = n.norm();
  q.normal = len > 0.0 ? Vec3(n / len) : surface.triangle_normal(hit.triangle);
  q.base_point = b;
  return q;
}

std::vector<std::pair<std::uint32_t, Vec3>> patch_centroids(const TissueModel& model)
{
  const auto& mesh = model.displaced_mesh();
  std::vector<Vec3> weighted(mesh.patch_count, Vec3::Zero());
  std::vector<double> area(mesh.patch_count, 0.0);
  for (std::size_t t = 0; t < mesh.triangle_count(); ++t)
  {
    const double a = mesh.triangle_area(t);
    weighted[mesh.patch_ids[t]] += a * mesh.triangle_centroid(t);
    area[mesh.patch_ids[t]] += a;
  }
  std::vector<std::pair<std::uint32_t, Vec3>> out;
  out.reserve(mesh.patch_count);
  for (std::uint32_t p = 0; p < mesh.patch_count; ++p)
  {
    if (area[p] > 0.0)
    {
      out.emplace_back(p, weighted[p] / area[p]);
    }
  }
  return out;
}

ClinicalFindings expected_findings(const TissueModel& model)
{
  std::size_t nodules = 0;
  std::size_t cysts = 0;
  bool visible_cyst = false;
  for (const auto& f : model.features())
  {
    if (f.kind == FeatureKind::Nodule)
    {
      ++nodules;
    }
    else
    {
      ++cysts;
      visible_cyst = visible_cyst || (f.kind == FeatureKind::SurfaceCyst && f.visible);
    }
  }
  const bool stiffened = model.global_multiplier() > 1.0;

  ClinicalFindings findings{"normal reddish-brown", "smooth, no irregularities", "healthy liver"};
  if (model.appearance().pallor > 0.0)
  {
    findings.color = "pale";
  }
  else if (visible_cyst)
  {
    findings.color = "discolored patches";
  }

  if (nodules >= 10)
  {
    findings.consistency = "nodular irregularity";
    findings.diagnosis = "cirrhosis";
  }
  else if (cysts > 0)
  {
    findings.consistency = "localized firm lesions";
    findings.diagnosis = "tumors/cysts";
  }
  else if (stiffened)
  {
    findings.consistency = "significantly increased";
    findings.diagnosis = "hepatic liver";
  }
  return findings;
}

}  // namespace palpatron
