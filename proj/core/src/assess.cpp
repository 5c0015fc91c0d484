#include "palpatron/assess.hpp"

#include "palpatron/error.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

namespace palpatron
{
namespace
{

nlohmann::json vec_json(const Vec3& v)
{
  return nlohmann::json::array({v.x(), v.y(), v.z()});
}

double tangential_speed(const HapticTick& tick)
{
  const double f = tick.force.norm();
  if (f == 0.0)
  {
    return tick.tip_velocity.norm();
  }
  const Vec3 n = tick.force / f;
  return (tick.tip_velocity - tick.tip_velocity.dot(n) * n).norm();
}

}  // namespace

ForceBand force_band(const Config& config, Scenario scenario)
{
  const std::string prefix = "assess.band." + std::string(to_string(scenario));
  ForceBand band{config.get(prefix + ".lo"), config.get(prefix + ".hi"), scenario};
  if (!(band.low > 0.0 && band.low < band.high))
  {
    throw ConfigError("force band for " + std::string(to_string(scenario)) +
                      " must satisfy 0 < lo < hi");
  }
  return band;
}

std::string_view to_string(GaugeState state)
{
  switch (state)
  {
    case GaugeState::Below: return "below";
    case GaugeState::InBand: return "in_band";
    case GaugeState::Above: return "above";
  }
  return "unknown";
}

GaugeState gauge_state(double force_magnitude, const ForceBand& band)
{
  if (force_magnitude < band.low)
  {
    return GaugeState::Below;
  }
  if (force_magnitude > band.high)
  {
    return GaugeState::Above;
  }
  return GaugeState::InBand;
}

TapSegmenter::TapSegmenter(SegmentationParams params) : params_(params) {}

std::optional<TapEpisode> TapSegmenter::push(const HapticTick& tick)
{
  if (has_last_t_ && tick.t <= last_t_)
  {
    throw OrderError("tick at t=" + std::to_string(tick.t) + " ms follows t=" +
                     std::to_string(last_t_) + " ms");
  }
  has_last_t_ = true;
  last_t_ = tick.t;

  const double f = tick.force.norm();
  if (f > params_.threshold)
  {
    if (!open_)
    {
      open_ = true;
      current_ = TapEpisode{};
      current_.rig = tick.rig;
      current_.t_start = tick.t;
      current_.peak_force = -1.0;
      speed_sum_ = 0.0;
      speed_count_ = 0;
    }
    gap_ = 0;
    last_above_t_ = tick.t;
    speed_sum_ += tangential_speed(tick);
    ++speed_count_;
    if (f > current_.peak_force)
    {
      current_.peak_force = f;
      current_.t_peak = tick.t;
      current_.contact_point = tick.contact_point.value_or(tick.tip);
      current_.direction_at_peak = tick.direction;
      current_.patch_id = tick.patch_id;
      current_.penetration_at_peak = tick.penetration;
    }
    return std::nullopt;
  }

  if (open_ && ++gap_ >= params_.min_gap)
  {
    return close();
  }
  return std::nullopt;
}

std::optional<TapEpisode> TapSegmenter::finish()
{
  if (!open_)
  {
    return std::nullopt;
  }
  return close();
}

TapEpisode TapSegmenter::close()
{
  open_ = false;
  gap_ = 0;
  current_.t_end = last_above_t_ + kServoPeriodMs;
  current_.mean_tangential_speed =
    speed_count_ > 0 ? speed_sum_ / static_cast<double>(speed_count_) : 0.0;
  return current_;
}

std::vector<TapEpisode> segment_taps(std::span<const HapticTick> ticks,
                                     const SegmentationParams& params)
{
  TapSegmenter segmenter(params);
  std::vector<TapEpisode> out;
  for (const auto& tick : ticks)
  {
    if (auto episode = segmenter.push(tick))
    {
      out.push_back(*episode);
    }
  }
  if (auto episode = segmenter.finish())
  {
    out.push_back(*episode);
  }
  return out;
}

void order_episodes(std::vector<TapEpisode>& episodes)
{
  std::stable_sort(episodes.begin(), episodes.end(), [](const TapEpisode& a, const TapEpisode& b) {
    return a.t_start < b.t_start || (a.t_start == b.t_start && a.rig < b.rig);
  });
}

std::vector<TapEpisode> segment_all_rigs(std::span<const HapticTick> ticks,
                                         const SegmentationParams& params)
{
  std::map<int, std::vector<HapticTick>> by_rig;
  for (const auto& tick : ticks)
  {
    by_rig[tick.rig].push_back(tick);
  }
  std::vector<TapEpisode> out;
  for (const auto& [rig, stream] : by_rig)
  {
    auto episodes = segment_taps(stream, params);
    out.insert(out.end(), episodes.begin(), episodes.end());
  }
  order_episodes(out);
  return out;
}

std::optional<double> coefficient_of_variation(std::span<const double> values)
{
  if (values.size() < 2)
  {
    return std::nullopt;
  }
  double sum = 0.0;
  for (const double v : values)
  {
    sum += v;
  }
  const double mean = sum / static_cast<double>(values.size());
  double sq = 0.0;
  for (const double v : values)
  {
    sq += (v - mean) * (v - mean);
  }
  const double sd = std::sqrt(sq / static_cast<double>(values.size()));
  if (mean == 0.0)
  {
    return 0.0;
  }
  return sd / std::abs(mean);
}

PalpationMetrics compute_metrics(std::span<const TapEpisode> episodes, const TissueModel& model,
                                 const ForceBand& band)
{
  PalpationMetrics m;
  m.tap_count = episodes.size();
  m.palpable_patches = model.patch_count();

  std::vector<double> peaks;
  std::vector<double> speeds;
  std::set<std::uint32_t> covered;
  std::size_t in_band = 0;
  for (const auto& e : episodes)
  {
    peaks.push_back(e.peak_force);
    speeds.push_back(e.mean_tangential_speed);
    if (band.contains(e.peak_force))
    {
      ++in_band;
      if (e.patch_id)
      {
        covered.insert(*e.patch_id);
      }
    }
  }
  m.peak_force_cv = coefficient_of_variation(peaks);
  m.speed_cv = coefficient_of_variation(speeds);
  m.covered_patches = covered.size();
  if (m.tap_count > 0)
  {
    m.in_band_fraction = static_cast<double>(in_band) / static_cast<double>(m.tap_count);
    double sum = 0.0;
    for (const double p : peaks)
    {
      sum += p;
    }
    m.mean_peak_force = sum / static_cast<double>(m.tap_count);
  }
  if (m.palpable_patches > 0)
  {
    m.coverage_fraction =
      static_cast<double>(m.covered_patches) / static_cast<double>(m.palpable_patches);
  }
  return m;
}

std::string_view to_string(Classification c)
{
  switch (c)
  {
    case Classification::Expert: return "Expert";
    case Classification::Novice: return "Novice";
    case Classification::Unrated: return "Unrated";
  }
  return "Unrated";
}

Classification classify(const PalpationMetrics& metrics, const ExpertThresholds& thresholds)
{
  if (metrics.tap_count < 2 || !metrics.peak_force_cv || !metrics.speed_cv)
  {
    return Classification::Unrated;
  }
  const bool steady_force = *metrics.peak_force_cv <= thresholds.max_peak_cv;
  const bool steady_speed = *metrics.speed_cv <= thresholds.max_speed_cv;
  const bool in_band = metrics.in_band_fraction >= thresholds.min_in_band;
  return steady_force && steady_speed && in_band ? Classification::Expert : Classification::Novice;
}

std::vector<ConeGlyph> cone_glyphs(std::span<const TapEpisode> episodes, const ConeScale& scale)
{
  if (!(scale.height_per_newton > 0.0 && scale.radius_per_newton > 0.0))
  {
    throw ConfigError("cone scale constants must be positive");
  }
  std::vector<ConeGlyph> cones;
  cones.reserve(episodes.size());
  for (const auto& e : episodes)
  {
    cones.push_back({e.contact_point, e.direction_at_peak, scale.height_per_newton * e.peak_force,
                     scale.radius_per_newton * e.peak_force});
  }
  return cones;
}

std::optional<double> estimated_stiffness(const TapEpisode& episode)
{
  if (episode.penetration_at_peak <= 0.0)
  {
    return std::nullopt;
  }
  return episode.peak_force * 1000.0 / episode.penetration_at_peak;
}

std::size_t LesionReport::detected_count(FeatureKind kind) const
{
  return static_cast<std::size_t>(std::count_if(findings.begin(), findings.end(), [kind](const auto& f) {
    return f.kind == kind && f.detected;
  }));
}

std::size_t LesionReport::feature_count(FeatureKind kind) const
{
  return static_cast<std::size_t>(std::count_if(
    findings.begin(), findings.end(), [kind](const auto& f) { return f.kind == kind; }));
}

LesionReport lesion_report(std::span<const TapEpisode> episodes, const TissueModel& model,
                           const LesionParams& params)
{
  const double baseline = model.baseline_stiffness();
  const auto& features = model.features();

  struct Estimate
  {
    Vec3 base_point;
    double k;
    double deviation;
  };
  std::vector<std::optional<Estimate>> estimates(episodes.size());
  for (std::size_t i = 0; i < episodes.size(); ++i)
  {
    if (const auto k = estimated_stiffness(episodes[i]))
    {
      const Vec3 base = surface_query(model, episodes[i].contact_point).base_point;
      estimates[i] = Estimate{base, *k, std::abs(*k - baseline) / baseline};
    }
  }

  LesionReport report;
  for (std::size_t fi = 0; fi < features.size(); ++fi)
  {
    const auto& feature = features[fi];
    LesionFinding finding;
    finding.feature_index = fi;
    finding.kind = feature.kind;
    double best_deviation = -1.0;
    for (std::size_t i = 0; i < estimates.size(); ++i)
    {
      if (!estimates[i])
      {
        continue;
      }
      const double dist = (estimates[i]->base_point - feature.center).norm();
      if (dist > params.radius_sigmas * feature.radius_sigma)
      {
        continue;
      }
      if (estimates[i]->deviation > best_deviation)
      {
        best_deviation = estimates[i]->deviation;
        finding.estimated_k = estimates[i]->k;
        finding.best_episode = i;
      }
      if (estimates[i]->deviation > params.deviation)
      {
        finding.detected = true;
      }
    }
    report.findings.push_back(finding);
  }

  for (std::size_t i = 0; i < estimates.size(); ++i)
  {
    if (!estimates[i] || estimates[i]->deviation <= params.deviation)
    {
      continue;
    }
    const bool attributable = std::any_of(features.begin(), features.end(), [&](const auto& f) {
      return (estimates[i]->base_point - f.center).norm() <=
             params.attribution_sigmas * f.radius_sigma;
    });
    if (!attributable)
    {
      report.false_detections.push_back(i);
    }
  }
  return report;
}

AssessConfig assess_config(const Config& config)
{
  AssessConfig c;
  c.segmentation.threshold = config.get("assess.threshold");
  c.segmentation.min_gap = config.get_int("assess.min_gap");
  c.cones.height_per_newton = config.get("assess.cone.height_scale");
  c.cones.radius_per_newton = config.get("assess.cone.radius_scale");
  c.expert.max_peak_cv = config.get("assess.expert.peak_cv");
  c.expert.max_speed_cv = config.get("assess.expert.speed_cv");
  c.expert.min_in_band = config.get("assess.expert.in_band");
  c.lesions.deviation = config.get("assess.lesion.deviation");
  c.lesions.radius_sigmas = config.get("assess.lesion.radius_sigmas");
  c.lesions.attribution_sigmas = config.get("assess.lesion.attribution_sigmas");
  if (c.segmentation.threshold < 0.0 || c.segmentation.min_gap < 1)
  {
    throw ConfigError("assess.threshold must be >= 0 and assess.min_gap >= 1");
  }
  return c;
}

AssessmentReport assess_episodes(const TissueModel& model, std::vector<TapEpisode> episodes,
                                 const ForceBand& band, const AssessConfig& config)
{
  AssessmentReport report;
  report.scenario = model.scenario();
  report.seed = model.seed();
  report.band = band;
  report.episodes = std::move(episodes);
  report.metrics = compute_metrics(report.episodes, model, band);
  report.classification = classify(report.metrics, config.expert);
  report.cones = cone_glyphs(report.episodes, config.cones);
  report.lesions = lesion_report(report.episodes, model, config.lesions);
  return report;
}

AssessmentReport assess_session(const TissueModel& model, std::span<const HapticTick> ticks,
                                const ForceBand& band, const AssessConfig& config)
{
  return assess_episodes(model, segment_all_rigs(ticks, config.segmentation), band, config);
}

nlohmann::json to_json(const AssessmentReport& report, const TissueModel& model)
{
  using nlohmann::json;
  const auto& m = report.metrics;
  json metrics = {
    {"tap_count", m.tap_count},
    {"peak_force_cv", m.peak_force_cv ? json(*m.peak_force_cv) : json(nullptr)},
    {"speed_cv", m.speed_cv ? json(*m.speed_cv) : json(nullptr)},
    {"in_band_fraction", m.in_band_fraction},
    {"coverage_fraction", m.coverage_fraction},
    {"mean_peak_force", m.mean_peak_force},
    {"covered_patches", m.covered_patches},
    {"palpable_patches", m.palpable_patches},
  };

  json episodes = json::array();
  for (std::size_t i = 0; i < report.episodes.size(); ++i)
  {
    const auto& e = report.episodes[i];
    const auto k = estimated_stiffness(e);
    episodes.push_back({
      {"index", i},
      {"rig", e.rig},
      {"t_start", e.t_start},
      {"t_end", e.t_end},
      {"t_peak", e.t_peak},
      {"peak_force", e.peak_force},
      {"contact_point", vec_json(e.contact_point)},
      {"direction", vec_json(e.direction_at_peak)},
      {"patch_id", e.patch_id ? json(*e.patch_id) : json(nullptr)},
      {"mean_tangential_speed", e.mean_tangential_speed},
      {"penetration_at_peak", e.penetration_at_peak},
      {"estimated_k", k ? json(*k) : json(nullptr)},
      {"in_band", report.band.contains(e.peak_force)},
    });
  }

  json cones = json::array();
  for (const auto& c : report.cones)
  {
    cones.push_back({{"base", vec_json(c.base)},
                     {"axis", vec_json(c.axis)},
                     {"height", c.height},
                     {"radius", c.radius}});
  }

  json lesions = json::array();
  for (const auto& f : report.lesions.findings)
  {
    const auto& feature = model.features()[f.feature_index];
    lesions.push_back({
      {"feature", f.feature_index},
      {"kind", to_string(f.kind)},
      {"center", vec_json(feature.center)},
      {"radius_sigma", feature.radius_sigma},
      {"visible", feature.visible},
      {"detected", f.detected},
      {"estimated_k", f.estimated_k ? json(*f.estimated_k) : json(nullptr)},
      {"episode", f.best_episode ? json(*f.best_episode) : json(nullptr)},
    });
  }

  return {
    {"schema", "palpreport/1"},
    {"scenario", to_string(report.scenario)},
    {"seed", report.seed},
    {"band", {report.band.low, report.band.high}},
    {"metrics", metrics},
    {"classification", to_string(report.classification)},
    {"episodes", episodes},
    {"cones", cones},
    {"lesions", lesions},
    {"false_detections", report.lesions.false_detections},
  };
}

std::string_view episode_csv_header()
{
  return "index,rig,t_start_ms,t_end_ms,t_peak_ms,peak_force_n,contact_x_mm,contact_y_mm,"
         "contact_z_mm,dir_x,dir_y,dir_z,patch_id,mean_tangential_speed_mm_s,"
         "penetration_at_peak_mm,estimated_k_n_per_m,in_band";
}

std::string episodes_csv(const AssessmentReport& report)
{
  std::ostringstream out;
  out << episode_csv_header() << '\n';
  for (std::size_t i = 0; i < report.episodes.size(); ++i)
  {
    const auto& e = report.episodes[i];
    const auto k = estimated_stiffness(e);
    out << i << ',' << e.rig << ',' << e.t_start << ',' << e.t_end << ',' << e.t_peak << ','
        << format_number(e.peak_force) << ',' << format_number(e.contact_point.x()) << ','
        << format_number(e.contact_point.y()) << ',' << format_number(e.contact_point.z()) << ','
        << format_number(e.direction_at_peak.x()) << ',' << format_number(e.direction_at_peak.y())
        << ',' << format_number(e.direction_at_peak.z()) << ','
        << (e.patch_id ? std::to_string(*e.patch_id) : std::string()) << ','
        << format_number(e.mean_tangential_speed) << ',' << format_number(e.penetration_at_peak)
        << ',' << (k ? format_number(*k) : std::string()) << ','
        << (report.band.contains(e.peak_force) ? 1 : 0) << '\n';
  }
  return out.str();
}

}  // namespace palpatron
