#include "palpatron/assess.hpp"
#include "palpatron/error.hpp"
#include "palpatron/rng.hpp"
#include "palpatron/synthetic.hpp"

#include "oracles.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace palpatron
{
namespace
{

using testing::force_tick;
using testing::model;

TEST(Gauge, ClosedBand)
{
  const ForceBand band;
  EXPECT_EQ(gauge_state(2.3, band), GaugeState::InBand);
  EXPECT_EQ(gauge_state(2.1, band), GaugeState::InBand);
  EXPECT_EQ(gauge_state(2.5, band), GaugeState::InBand);
  EXPECT_EQ(gauge_state(2.09, band), GaugeState::Below);
  EXPECT_EQ(gauge_state(2.51, band), GaugeState::Above);
  EXPECT_EQ(gauge_state(2.6, band), GaugeState::Above);
  EXPECT_EQ(gauge_state(0.0, band), GaugeState::Below);
}

TEST(Gauge, ScenarioBands)
{
  const Config config;
  const ForceBand healthy = force_band(config, Scenario::Healthy);
  EXPECT_EQ(healthy.low, 2.1);
  EXPECT_EQ(healthy.high, 2.5);
  const ForceBand hepatic = force_band(config, Scenario::Hepatic);
  EXPECT_EQ(hepatic.low, 2.6);
  EXPECT_EQ(hepatic.high, 3.2);
  Config bad;
  bad.set("assess.band.tumoral.lo", 3.0);
  EXPECT_THROW(force_band(bad, Scenario::Tumoral), ConfigError);
}

TEST(Segmentation, ZeroStreamHasNoTaps)
{
  std::vector<HapticTick> ticks;
  for (TimeMs t = 0; t < 1000; ++t)
  {
    ticks.push_back(force_tick(t, 0.0));
  }
  EXPECT_TRUE(segment_taps(ticks).empty());
}

TEST(Segmentation, SinglePulse)
{
  std::vector<HapticTick> ticks;
  double max = 0.0;
  for (TimeMs t = 0; t < 1000; ++t)
  {
    const double f = t >= 200 && t < 500 ? 2.4 * std::sin((t - 200) * std::numbers::pi / 300.0) : 0.0;
    max = std::max(max, f);
    ticks.push_back(force_tick(t, f));
  }
  const auto taps = segment_taps(ticks);
  ASSERT_EQ(taps.size(), 1U);
  EXPECT_EQ(taps[0].peak_force, max);
  EXPECT_EQ(taps[0].t_peak, 350);
}

TEST(Segmentation, GapRule)
{
  auto stream = [](TimeMs gap) {
    std::vector<HapticTick> ticks;
    TimeMs t = 0;
    for (int i = 0; i < 20; ++i) ticks.push_back(force_tick(t++, 1.0));
    for (TimeMs i = 0; i < gap; ++i) ticks.push_back(force_tick(t++, 0.1));
    for (int i = 0; i < 20; ++i) ticks.push_back(force_tick(t++, 1.0));
    for (int i = 0; i < 100; ++i) ticks.push_back(force_tick(t++, 0.0));
    return ticks;
  };
  EXPECT_EQ(segment_taps(stream(49)).size(), 1U);
  EXPECT_EQ(segment_taps(stream(50)).size(), 2U);
  const auto two = segment_taps(stream(50));
  EXPECT_EQ(two[0].t_start, 0);
  EXPECT_EQ(two[0].t_end, 20);
  EXPECT_EQ(two[1].t_start, 70);
}

TEST(Segmentation, ThresholdIsStrict)
{
  std::vector<HapticTick> ticks;
  for (TimeMs t = 0; t < 300; ++t)
  {
    ticks.push_back(force_tick(t, 0.3));
  }
  EXPECT_TRUE(segment_taps(ticks).empty());
}

TEST(Segmentation, OutOfOrderTicksRejected)
{
  TapSegmenter seg;
  seg.push(force_tick(5, 1.0));
  EXPECT_THROW(seg.push(force_tick(5, 1.0)), OrderError);
}

std::vector<HapticTick> fuzz_stream(Rng& rng)
{
  std::vector<HapticTick> ticks;
  const auto n = 200 + static_cast<TimeMs>(rng.below(3000));
  double level = 0.0;
  bool pressing = false;
  for (TimeMs t = 0; t < n; ++t)
  {
    if (rng.uniform() < 0.01)
    {
      pressing = !pressing;
    }
    level = pressing ? rng.uniform(0.0, 3.5) : (rng.uniform() < 0.05 ? rng.uniform(0.0, 0.6) : 0.0);
    HapticTick tick = force_tick(t, 0.0);
    const Vec3 dir = Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(0.2, 1)).normalized();
    tick.force = level * dir;
    tick.tip_velocity = Vec3(rng.uniform(-40, 40), rng.uniform(-40, 40), rng.uniform(-40, 40));
    tick.contact = level > 0.0;
    ticks.push_back(tick);
  }
  return ticks;
}

TEST(Segmentation, MatchesReferenceScannerOnFuzzedStreams)
{
  Rng rng(2024);
  for (int s = 0; s < 200; ++s)
  {
    const auto ticks = fuzz_stream(rng);
    const auto got = segment_taps(ticks);
    const auto want = oracle::scan_taps(ticks, 0.3, 50);
    ASSERT_EQ(got.size(), want.size()) << "stream " << s;
    for (std::size_t i = 0; i < got.size(); ++i)
    {
      EXPECT_EQ(got[i].t_start, want[i].t_start);
      EXPECT_EQ(got[i].t_end, want[i].t_end);
      EXPECT_EQ(got[i].t_peak, want[i].t_peak);
      EXPECT_EQ(got[i].peak_force, want[i].peak);
      EXPECT_NEAR(got[i].mean_tangential_speed, want[i].mean_tangential_speed, 1e-9);
    }
  }
}

TEST(Segmentation, AllRigsOrderedByStartThenRig)
{
  std::vector<HapticTick> ticks;
  for (TimeMs t = 0; t < 400; ++t)
  {
    ticks.push_back(force_tick(t, t >= 100 && t < 150 ? 1.0 : 0.0, 0));
    ticks.push_back(force_tick(t, (t >= 100 && t < 130) || (t >= 20 && t < 40) ? 1.0 : 0.0, 1));
  }
  const auto taps = segment_all_rigs(ticks);
  ASSERT_EQ(taps.size(), 3U);
  EXPECT_EQ(taps[0].rig, 1);
  EXPECT_EQ(taps[0].t_start, 20);
  EXPECT_EQ(taps[1].rig, 0);
  EXPECT_EQ(taps[1].t_start, 100);
  EXPECT_EQ(taps[2].rig, 1);
}

TEST(Metrics, CoefficientOfVariation)
{
  const std::vector<double> same{2.3, 2.3, 2.3};
  EXPECT_EQ(*coefficient_of_variation(same), 0.0);
  const std::vector<double> two{2.0, 3.0};
  EXPECT_NEAR(*coefficient_of_variation(two), 0.2, 1e-15);
  const std::vector<double> one{1.0};
  EXPECT_FALSE(coefficient_of_variation(one));
  const std::vector<double> zeros{0.0, 0.0};
  EXPECT_EQ(*coefficient_of_variation(zeros), 0.0);
}

TapEpisode episode(double peak, double speed, std::uint32_t patch)
{
  TapEpisode e;
  e.peak_force = peak;
  e.mean_tangential_speed = speed;
  e.patch_id = patch;
  e.penetration_at_peak = peak * 1000.0 / 600.0;
  e.direction_at_peak = Vec3(0, 0, -1);
  return e;
}

TEST(Metrics, CoverageCountsInBandPatches)
{
  const auto m = model(Scenario::Healthy);
  const std::vector<TapEpisode> taps{episode(2.3, 10, 4), episode(2.3, 10, 4), episode(1.0, 10, 9),
                                     episode(2.2, 10, 17)};
  const PalpationMetrics metrics = compute_metrics(taps, *m, ForceBand{});
  EXPECT_EQ(metrics.tap_count, 4U);
  EXPECT_EQ(metrics.covered_patches, 2U);
  EXPECT_EQ(metrics.palpable_patches, 200U);
  EXPECT_DOUBLE_EQ(metrics.coverage_fraction, 2.0 / 200.0);
  EXPECT_DOUBLE_EQ(metrics.in_band_fraction, 0.75);
}

TEST(Classify, Rules)
{
  PalpationMetrics steady;
  steady.tap_count = 20;
  steady.peak_force_cv = 0.03;
  steady.speed_cv = 0.05;
  steady.in_band_fraction = 1.0;
  EXPECT_EQ(classify(steady), Classification::Expert);

  PalpationMetrics jittery = steady;
  jittery.peak_force_cv = 0.4;
  EXPECT_EQ(classify(jittery), Classification::Novice);

  PalpationMetrics single;
  single.tap_count = 1;
  single.peak_force_cv = std::nullopt;
  EXPECT_EQ(classify(single), Classification::Unrated);
}

TEST(Cones, StatedConstants)
{
  const std::vector<TapEpisode> taps{episode(2.0, 1, 0)};
  const auto cones = cone_glyphs(taps);
  ASSERT_EQ(cones.size(), 1U);
  EXPECT_DOUBLE_EQ(cones[0].height, 12.0);
  EXPECT_DOUBLE_EQ(cones[0].radius, 5.0);
  EXPECT_TRUE(cone_glyphs({}).empty());
  EXPECT_THROW(cone_glyphs(taps, ConeScale{0.0, 1.0}), ConfigError);
}

TEST(Cones, ScalingIsProportional)
{
  Rng rng(4);
  std::vector<TapEpisode> taps;
  for (int i = 0; i < 50; ++i)
  {
    TapEpisode e = episode(rng.uniform(0.3, 4.0), 1, 0);
    e.contact_point = Vec3(rng.uniform(-50, 50), rng.uniform(-50, 50), rng.uniform(0, 60));
    e.direction_at_peak = Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), -1).normalized();
    taps.push_back(e);
  }
  const auto base = cone_glyphs(taps);
  const auto doubled = cone_glyphs(taps, ConeScale{12.0, 5.0});
  for (std::size_t i = 0; i < taps.size(); ++i)
  {
    EXPECT_NEAR(base[i].height / base[i].radius, 6.0 / 2.5, 1e-9);
    EXPECT_NEAR(doubled[i].height, 2.0 * base[i].height, 1e-12);
    EXPECT_NEAR(doubled[i].radius, 2.0 * base[i].radius, 1e-12);
    EXPECT_EQ(doubled[i].base, base[i].base);
    EXPECT_EQ(doubled[i].axis, base[i].axis);
  }
}

TEST(Lesions, QuasiStaticPressRecoversBaseline)
{
  Config config;
  config.set("tissue.damping", 0.0);
  const auto m = model(Scenario::Healthy, 1, config);
  const FulcrumRig rig = rig_from_config(config, 0);
  const ServoConfig servo = servo_config(config);
  const Script press = quasi_static_press(*m, rig, servo, 3.5, 2.0);
  std::vector<InputSample> samples;
  for (const auto& c : press.commands)
  {
    samples.push_back(std::get<InputSample>(c.command));
  }
  const auto ticks = run_servo(*m, rig, samples, press.effective_duration(), servo);
  const auto taps = segment_taps(ticks);
  ASSERT_EQ(taps.size(), 1U);
  const auto k = estimated_stiffness(taps[0]);
  ASSERT_TRUE(k);
  EXPECT_NEAR(*k, 600.0, 0.05 * 600.0);
}

TEST(Lesions, SkippedDeepCystIsNotDetected)
{
  const auto m = model(Scenario::Tumoral, 3);
  // Press only on patches far from every deep cyst.
  SweepOptions options;
  for (const auto& [patch, centroid] : patch_centroids(*m))
  {
    bool far = true;
    for (const auto& f : m->features())
    {
      far = far && (f.kind != FeatureKind::DeepCyst || (centroid - f.center).norm() > 4.0 * f.radius_sigma);
    }
    if (far && options.patches.size() < 12)
    {
      options.patches.push_back(patch);
    }
  }
  const FulcrumRig rig = rig_from_config(Config(), 0);
  const Script sweep = sweep_script(*m, rig, ServoConfig{}, options);
  std::vector<InputSample> samples;
  for (const auto& c : sweep.commands)
  {
    samples.push_back(std::get<InputSample>(c.command));
  }
  const auto ticks = run_servo(*m, rig, samples, sweep.effective_duration(), ServoConfig{});
  const AssessmentReport report = assess_session(*m, ticks, ForceBand{}, AssessConfig{});
  EXPECT_EQ(report.lesions.detected_count(FeatureKind::DeepCyst), 0U);
  EXPECT_GT(report.lesions.feature_count(FeatureKind::DeepCyst), 0U);
  EXPECT_LT(report.metrics.coverage_fraction, 1.0);
}

TEST(Report, JsonAndCsvShape)
{
  const auto m = model(Scenario::Healthy);
  std::vector<TapEpisode> taps{episode(2.3, 10, 4), episode(2.0, 12, 5)};
  taps[1].t_start = 100;
  const AssessmentReport report = assess_episodes(*m, taps, ForceBand{}, AssessConfig{});
  const auto j = to_json(report, *m);
  EXPECT_EQ(j["schema"], "palpreport/1");
  EXPECT_EQ(j["episodes"].size(), 2U);
  EXPECT_EQ(j["cones"].size(), 2U);
  EXPECT_EQ(j["metrics"]["tap_count"], 2);
  const std::string csv = episodes_csv(report);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), episode_csv_header());
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
  EXPECT_EQ(episode_csv_header(),
            "index,rig,t_start_ms,t_end_ms,t_peak_ms,peak_force_n,contact_x_mm,contact_y_mm,contact_z_mm,"
            "dir_x,dir_y,dir_z,patch_id,mean_tangential_speed_mm_s,penetration_at_peak_mm,"
            "estimated_k_n_per_m,in_band");
}

}  // namespace
}  // namespace palpatron
