#pragma once

#include "palpatron/config.hpp"
#include "palpatron/mesh.hpp"
#include "palpatron/surface_index.hpp"
#include "palpatron/types.hpp"

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

namespace palpatron
{

enum class FeatureKind : std::uint8_t
{
  Nodule,
  SurfaceCyst,
  DeepCyst,
};

std::string_view to_string(FeatureKind kind);

/// A lesion superimposed on the parenchyma as a Gaussian stiffness bump.
///
/// `center` is the lesion's footprint on the undeformed surface; a deep cyst
/// sits `burial_depth` beneath it and only shows up through attenuated stiffness.
struct PathologyFeature
{
  FeatureKind kind = FeatureKind::Nodule;
  Vec3 center = Vec3::Zero();
  double radius_sigma = 1.0;     // mm
  double stiffness_delta = 0.0;  // N/m
  double bump_height = 0.0;      // mm
  double burial_depth = 0.0;     // mm
  bool visible = true;

  friend bool operator==(const PathologyFeature&, const PathologyFeature&) = default;
};

struct Appearance
{
  std::array<double, 3> base_color{0.55, 0.22, 0.17};
  double pallor = 0.0;  // [0, 1]

  friend bool operator==(const Appearance&, const Appearance&) = default;
};

/// Scenario generation parameters, read from the `tissue.*` config keys.
struct TissueConfig
{
  double k0 = 600.0;
  double damping = 2.0;
  DomeShape dome;
  double attenuation_depth = 6.0;
  double feature_min_nz = 0.5;

  double hepatic_multiplier = 2.5;
  double hepatic_pallor = 0.5;

  int nodule_count = 40;
  double nodule_sigma_min = 4.0;
  double nodule_sigma_max = 8.0;
  double nodule_delta_k = 900.0;
  double nodule_bump = 1.5;

  int surface_cyst_count = 2;
  double surface_cyst_delta_k = 1200.0;
  double surface_cyst_sigma_min = 6.0;
  double surface_cyst_sigma_max = 9.0;
  double surface_cyst_bump = 1.0;

  int deep_cyst_count = 2;
  double deep_cyst_delta_k = 800.0;
  double deep_cyst_sigma_min = 8.0;
  double deep_cyst_sigma_max = 12.0;
  double burial_min = 5.0;
  double burial_max = 9.5;
};

TissueConfig tissue_config(const Config& config);

/// Throws ConfigError when a value is out of its admissible range.
void validate(const TissueConfig& config);

/// Result of a nearest-point query against the displaced liver surface.
struct SurfaceQuery
{
  Vec3 nearest_point = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();  // interpolated outward normal at nearest_point
  double signed_distance = 0.0; // mm, negative beneath the surface
  std::uint32_t triangle = 0;
  std::uint32_t patch_id = 0;
  /// Preimage of nearest_point on the undeformed mesh (same triangle, same barycentrics).
  Vec3 base_point = Vec3::Zero();
};

/// Immutable liver model: undeformed mesh, displaced contact surface, stiffness
/// field and appearance. Safe to share read-only between threads.
class TissueModel
{
public:
  struct Material
  {
    double k0 = 600.0;
    double global_multiplier = 1.0;
    double damping = 2.0;
    double attenuation_depth = 6.0;
  };

  TissueModel(Scenario scenario, std::uint64_t seed, SurfaceMesh base_mesh, Material material,
              std::vector<PathologyFeature> features, Appearance appearance);

  Scenario scenario() const { return scenario_; }
  std::uint64_t seed() const { return seed_; }
  const SurfaceMesh& mesh() const { return base_mesh_; }
  const SurfaceMesh& displaced_mesh() const { return displaced_mesh_; }
  const SurfaceIndex& index() const { return index_; }
  const Material& material() const { return material_; }
  double base_stiffness() const { return material_.k0; }
  double global_multiplier() const { return material_.global_multiplier; }
  double damping() const { return material_.damping; }
  /// global_multiplier * k0, the lesion-free stiffness.
  double baseline_stiffness() const { return material_.global_multiplier * material_.k0; }
  const std::vector<PathologyFeature>& features() const { return features_; }
  const Appearance& appearance() const { return appearance_; }
  std::uint32_t patch_count() const { return base_mesh_.patch_count; }
  const Eigen::AlignedBox3d& bounds() const { return bounds_; }

  /// Largest value the stiffness field can take (sum of all deltas at full weight).
  double max_stiffness() const;

private:
  Scenario scenario_;
  std::uint64_t seed_;
  SurfaceMesh base_mesh_;
  SurfaceMesh displaced_mesh_;
  SurfaceIndex index_;
  Material material_;
  std::vector<PathologyFeature> features_;
  Appearance appearance_;
  Eigen::AlignedBox3d bounds_;
};

/// Deterministic scenario model; identical arguments give a bit-identical model.
/// `base_mesh` replaces the generated dome when given (imported palpmesh).
TissueModel build_scenario(Scenario kind, std::uint64_t seed, const TissueConfig& config,
                           const SurfaceMesh* base_mesh = nullptr);

/// Stiffness (N/m) at a point of the undeformed surface.
double stiffness_at(const TissueModel& model, const Vec3& point);

/// Outward surface displacement (mm) contributed by visible bumps.
double displaced_height(const TissueModel& model, const Vec3& point);

SurfaceQuery surface_query(const TissueModel& model, const Vec3& point);

/// One area-weighted centroid of the displaced surface per nonempty patch, by patch id.
std::vector<std::pair<std::uint32_t, Vec3>> patch_centroids(const TissueModel& model);

/// What an examiner should conclude from the model's look and feel.
struct ClinicalFindings
{
  std::string_view color;
  std::string_view consistency;
  std::string_view diagnosis;
};

ClinicalFindings expected_findings(const TissueModel& model);

}  // namespace palpatron
