#pragma once

#include "palpatron/config.hpp"
#include "palpatron/haptics.hpp"
#include "palpatron/tissue.hpp"
#include "palpatron/types.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace palpatron
{

/// Recommended palpation force interval (closed).
struct ForceBand
{
  double low = 2.1;   // N
  double high = 2.5;  // N
  Scenario scenario = Scenario::Healthy;

  bool contains(double force) const { return force >= low && force <= high; }
};

ForceBand force_band(const Config& config, Scenario scenario);

enum class GaugeState : std::uint8_t
{
  Below,
  InBand,
  Above,
};

std::string_view to_string(GaugeState state);

GaugeState gauge_state(double force_magnitude, const ForceBand& band);

/// One press on the surface: a maximal supra-threshold run of force samples.
struct TapEpisode
{
  int rig = 0;
  TimeMs t_start = 0;
  TimeMs t_end = 0;  // exclusive: one tick past the last supra-threshold sample
  TimeMs t_peak = 0;
  double peak_force = 0.0;
  Vec3 contact_point = Vec3::Zero();
  Vec3 direction_at_peak = -Vec3::UnitZ();
  std::optional<std::uint32_t> patch_id;
  double mean_tangential_speed = 0.0;  // mm/s
  double penetration_at_peak = 0.0;    // mm

  friend bool operator==(const TapEpisode&, const TapEpisode&) = default;
};

struct SegmentationParams
{
  double threshold = 0.3;  // N
  TimeMs min_gap = 50;     // sub-threshold samples needed to split two runs
};

/// Single-pass streaming tap segmenter; feed ticks of one instrument in time order.
class TapSegmenter
{
public:
  explicit TapSegmenter(SegmentationParams params = {});

  /// Returns an episode once min_gap sub-threshold samples close it.
  /// Throws OrderError when t does not increase.
  std::optional<TapEpisode> push(const HapticTick& tick);

  /// Closes the open episode, if any.
  std::optional<TapEpisode> finish();

  bool in_episode() const { return open_; }

private:
  TapEpisode close();

  SegmentationParams params_;
  bool open_ = false;
  bool has_last_t_ = false;
  TimeMs last_t_ = 0;
  TimeMs gap_ = 0;
  TimeMs last_above_t_ = 0;
  double speed_sum_ = 0.0;
  std::size_t speed_count_ = 0;
  TapEpisode current_;
};

/// Taps of one instrument's time-ordered tick stream.
std::vector<TapEpisode> segment_taps(std::span<const HapticTick> ticks,
                                     const SegmentationParams& params = {});

/// Sorts by (t_start, rig).
void order_episodes(std::vector<TapEpisode>& episodes);

/// Splits a mixed stream by instrument, segments each and orders by (t_start, rig).
std::vector<TapEpisode> segment_all_rigs(std::span<const HapticTick> ticks,
                                         const SegmentationParams& params = {});

struct PalpationMetrics
{
  std::size_t tap_count = 0;
  std::optional<double> peak_force_cv;
  std::optional<double> speed_cv;
  double in_band_fraction = 0.0;
  double coverage_fraction = 0.0;
  double mean_peak_force = 0.0;
  std::size_t covered_patches = 0;
  std::size_t palpable_patches = 0;
};

/// Population coefficient of variation; 0 for an all-zero sample, empty below two values.
std::optional<double> coefficient_of_variation(std::span<const double> values);

PalpationMetrics compute_metrics(std::span<const TapEpisode> episodes, const TissueModel& model,
                                 const ForceBand& band);

struct ExpertThresholds
{
  double max_peak_cv = 0.15;
  double max_speed_cv = 0.20;
  double min_in_band = 0.8;
};

enum class Classification : std::uint8_t
{
  Expert,
  Novice,
  Unrated,
};

std::string_view to_string(Classification c);

Classification classify(const PalpationMetrics& metrics, const ExpertThresholds& thresholds = {});

struct ConeGlyph
{
  Vec3 base = Vec3::Zero();
  Vec3 axis = -Vec3::UnitZ();
  double height = 0.0;  // mm
  double radius = 0.0;  // mm
};

struct ConeScale
{
  double height_per_newton = 6.0;  // mm/N
  double radius_per_newton = 2.5;  // mm/N
};

/// One cone per episode, in episode order. Throws ConfigError on non-positive scales.
std::vector<ConeGlyph> cone_glyphs(std::span<const TapEpisode> episodes, const ConeScale& scale = {});

struct LesionParams
{
  double deviation = 0.2;           // relative deviation from baseline stiffness
  double radius_sigmas = 1.5;       // detection radius in feature sigmas
  double attribution_sigmas = 3.0;  // beyond this an anomaly is a false detection
};

/// Stiffness implied by a tap's peak (N/m), empty when the peak had no penetration.
std::optional<double> estimated_stiffness(const TapEpisode& episode);

struct LesionFinding
{
  std::size_t feature_index = 0;
  FeatureKind kind = FeatureKind::Nodule;
  bool detected = false;
  std::optional<double> estimated_k;         // most deviant estimate within the detection radius
  std::optional<std::size_t> best_episode;
};

struct LesionReport
{
  std::vector<LesionFinding> findings;
  /// Anomalous taps not attributable to any feature.
  std::vector<std::size_t> false_detections;

  std::size_t detected_count(FeatureKind kind) const;
  std::size_t feature_count(FeatureKind kind) const;
};

LesionReport lesion_report(std::span<const TapEpisode> episodes, const TissueModel& model,
                           const LesionParams& params = {});

/// Everything the `assess.*` keys control.
struct AssessConfig
{
  SegmentationParams segmentation;
  ConeScale cones;
  ExpertThresholds expert;
  LesionParams lesions;
};

AssessConfig assess_config(const Config& config);

struct AssessmentReport
{
  Scenario scenario = Scenario::Healthy;
  std::uint64_t seed = 0;
  ForceBand band;
  PalpationMetrics metrics;
  Classification classification = Classification::Unrated;
  std::vector<TapEpisode> episodes;
  std::vector<ConeGlyph> cones;
  LesionReport lesions;
};

/// Report over already segmented episodes.
AssessmentReport assess_episodes(const TissueModel& model, std::vector<TapEpisode> episodes,
                                 const ForceBand& band, const AssessConfig& config);

AssessmentReport assess_session(const TissueModel& model, std::span<const HapticTick> ticks,
                                const ForceBand& band, const AssessConfig& config);

nlohmann::json to_json(const AssessmentReport& report, const TissueModel& model);

/// Header row of the episode table CSV.
std::string_view episode_csv_header();

std::string episodes_csv(const AssessmentReport& report);

}  // namespace palpatron
