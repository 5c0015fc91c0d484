#include "palpatron/synthetic.hpp"

#include "palpatron/error.hpp"
#include "palpatron/rng.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>

namespace palpatron
{
namespace
{

constexpr double kDt = static_cast<double>(kServoPeriodMs) / 1000.0;

// Fraction of a rate limit a scripted step may use.
constexpr double kRateMargin = 0.95;

Vec3 tangent_towards(const Vec3& hint, const Vec3& normal)
{
  Vec3 t = hint - hint.dot(normal) * normal;
  if (t.norm() < 1e-9)
  {
    const Vec3 alt = std::abs(normal.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
    t = alt - alt.dot(normal) * normal;
  }
  return t.normalized();
}

}  // namespace

ScriptBuilder::ScriptBuilder(const TissueModel& model, const FulcrumRig& rig,
                             const ServoConfig& servo, int rig_index)
  : model_(&model), rig_(rig), servo_(servo), rig_index_(rig_index), tip_(tip_pose(rig).tip)
{
}

void ScriptBuilder::emit(const Vec3& target)
{
  const auto state = solve_tip(rig_, target);
  if (!state)
  {
    throw ScriptError("scripted tip position is outside the instrument workspace", 0);
  }
  const double max_turn = kRateMargin * servo_.angular_rate * kDt;
  const double max_push = kRateMargin * servo_.insertion_rate * kDt;
  if (std::abs(state->yaw - rig_.state.yaw) > max_turn ||
      std::abs(state->pitch - rig_.state.pitch) > max_turn ||
      std::abs(state->insertion - rig_.state.insertion) > max_push)
  {
    throw ScriptError("scripted step exceeds the servo rate limits", 0);
  }
  rig_.state = *state;
  tip_ = target;
  script_.commands.push_back({t_, InputSample{t_, *state, rig_index_}});
  t_ += kServoPeriodMs;
}

void ScriptBuilder::move_to(const Vec3& target, double speed)
{
  const Vec3 start = tip_;
  const double length = (target - start).norm();
  if (length == 0.0)
  {
    return;
  }
  if (!(speed > 0.0))
  {
    throw ScriptError("move speed must be positive", 0);
  }
  const double max_turn = kRateMargin * servo_.angular_rate * kDt;
  const double max_push = kRateMargin * servo_.insertion_rate * kDt;

  auto steps = static_cast<std::size_t>(std::ceil(length / (speed * kDt)));
  for (int attempt = 0; attempt < 12; ++attempt, steps *= 2)
  {
    bool ok = true;
    RigState previous = rig_.state;
    for (std::size_t i = 1; i <= steps && ok; ++i)
    {
      const Vec3 p = start + (target - start) * (static_cast<double>(i) / static_cast<double>(steps));
      const auto s = solve_tip(rig_, p);
      if (!s)
      {
        throw ScriptError("scripted tip position is outside the instrument workspace", 0);
      }
      ok = std::abs(s->yaw - previous.yaw) <= max_turn && std::abs(s->pitch - previous.pitch) <= max_turn &&
           std::abs(s->insertion - previous.insertion) <= max_push;
      previous = *s;
    }
    if (ok)
    {
      for (std::size_t i = 1; i <= steps; ++i)
      {
        emit(start + (target - start) * (static_cast<double>(i) / static_cast<double>(steps)));
      }
      return;
    }
  }
  throw ScriptError("scripted move cannot satisfy the servo rate limits", 0);
}

bool ScriptBuilder::clear_path(const Vec3& from, const Vec3& to, double clearance) const
{
  const double length = (to - from).norm();
  const int samples = std::max(1, static_cast<int>(std::ceil(length / 0.5)));
  for (int i = 0; i <= samples; ++i)
  {
    const Vec3 p = from + (to - from) * (static_cast<double>(i) / samples);
    if (surface_query(*model_, p).signed_distance < clearance)
    {
      return false;
    }
  }
  return true;
}

void ScriptBuilder::travel_to(const Vec3& target, double speed)
{
  const double clearance = rig_.tip_radius + 0.5;
  if (clear_path(tip_, target, clearance))
  {
    move_to(target, speed);
    return;
  }
  const double high = model_->bounds().max().z() + rig_.tip_radius + 15.0;
  const Vec3 up(tip_.x(), tip_.y(), std::max(high, tip_.z()));
  const Vec3 across(target.x(), target.y(), std::max(high, target.z()));
  if (!clear_path(tip_, up, clearance) || !clear_path(up, across, clearance) ||
      !clear_path(across, target, clearance))
  {
    throw ScriptError("no collision-free path to the scripted target", 0);
  }
  move_to(up, speed);
  move_to(across, speed);
  move_to(target, speed);
}

void ScriptBuilder::hold(TimeMs duration)
{
  t_ += std::max<TimeMs>(0, duration);
}

void ScriptBuilder::command(Command command)
{
  script_.commands.push_back({t_, std::move(command)});
}

Script ScriptBuilder::finish(std::optional<TimeMs> duration) const
{
  Script s = script_;
  s.duration = duration.value_or(t_);
  if (duration)
  {
    std::erase_if(s.commands, [&](const TimedCommand& c) { return c.t >= *duration; });
  }
  return s;
}

double depth_for_force(const TissueModel& model, double force)
{
  return force * 1000.0 / model.baseline_stiffness();
}

void add_press(ScriptBuilder& builder, const Vec3& point, double depth, const PressProfile& profile,
               const Vec3& slide_hint)
{
  const TissueModel& model = builder.model();
  const double r = builder.rig().tip_radius;
  const SurfaceQuery q = surface_query(model, point);
  Vec3 p = q.nearest_point;
  Vec3 n = q.normal;

  builder.travel_to(p + n * (r + profile.standoff), profile.travel_speed);
  builder.move_to(p + n * (r + 2.0), profile.travel_speed);
  builder.move_to(p + n * (r - depth), profile.approach_speed);
  builder.hold(profile.dwell);

  if (profile.slide_length > 0.0 && profile.slide_speed > 0.0)
  {
    Vec3 t = tangent_towards(slide_hint, n);
    const double force_scale = depth * stiffness_at(model, q.base_point);
    const double step = profile.slide_speed * kDt;
    const auto steps = static_cast<int>(std::ceil(profile.slide_length / step));
    for (int i = 0; i < steps; ++i)
    {
      const SurfaceQuery s = surface_query(model, p + t * step);
      p = s.nearest_point;
      n = s.normal;
      t = tangent_towards(t, n);
      if (profile.constant_force)
      {
        depth = force_scale / stiffness_at(model, s.base_point);
      }
      builder.move_to(p + n * (r - depth), profile.slide_speed);
    }
  }

  builder.move_to(p + n * (r + 2.0), profile.approach_speed);
  builder.move_to(p + n * (r + profile.standoff), profile.travel_speed);
}

std::vector<PressTarget> press_targets(const TissueModel& model, int subdivisions)
{
  std::vector<PressTarget> targets;
  if (subdivisions <= 1)
  {
    for (const auto& [patch, centroid] : patch_centroids(model))
    {
      targets.push_back({patch, centroid});
    }
    return targets;
  }

  const SurfaceMesh& mesh = model.displaced_mesh();
  std::map<std::uint32_t, std::vector<std::size_t>> by_patch;
  for (std::size_t t = 0; t < mesh.triangle_count(); ++t)
  {
    by_patch[mesh.patch_ids[t]].push_back(t);
  }
  for (const auto& [patch, tris] : by_patch)
  {
    Vec3 centroid = Vec3::Zero();
    Vec3 normal = Vec3::Zero();
    double area = 0.0;
    for (const auto t : tris)
    {
      const double a = mesh.triangle_area(t);
      centroid += a * mesh.triangle_centroid(t);
      normal += a * mesh.triangle_normal(t);
      area += a;
    }
    if (area <= 0.0)
    {
      continue;
    }
    centroid /= area;
    normal.normalize();
    const Vec3 u = tangent_towards(Vec3::UnitX(), normal);
    const Vec3 v = normal.cross(u);

    std::array<Vec3, 4> sums{Vec3::Zero(), Vec3::Zero(), Vec3::Zero(), Vec3::Zero()};
    std::array<double, 4> areas{};
    for (const auto t : tris)
    {
      const Vec3 c = mesh.triangle_centroid(t);
      const int quadrant = ((c - centroid).dot(u) >= 0.0 ? 1 : 0) + ((c - centroid).dot(v) >= 0.0 ? 2 : 0);
      const double a = mesh.triangle_area(t);
      sums[static_cast<std::size_t>(quadrant)] += a * c;
      areas[static_cast<std::size_t>(quadrant)] += a;
    }
    for (std::size_t k = 0; k < 4; ++k)
    {
      if (areas[k] > 0.0)
      {
        targets.push_back({patch, sums[k] / areas[k]});
      }
    }
  }
  return targets;
}

Script sweep_script(const TissueModel& model, const FulcrumRig& rig, const ServoConfig& servo,
                    const SweepOptions& options)
{
  ScriptBuilder builder(model, rig, servo);
  const double fixed_depth = depth_for_force(model, options.target_force);
  for (const auto& target : press_targets(model, options.subdivisions))
  {
    if (!options.patches.empty() &&
        std::find(options.patches.begin(), options.patches.end(), target.patch) == options.patches.end())
    {
      continue;
    }
    double depth = fixed_depth;
    if (options.adaptive_depth)
    {
      const SurfaceQuery q = surface_query(model, target.point);
      depth = options.target_force * 1000.0 / stiffness_at(model, q.base_point);
    }
    add_press(builder, target.point, depth, options.profile);
  }
  builder.hold(100);
  return builder.finish();
}

Script tap_session(const TissueModel& model, const FulcrumRig& rig, const ServoConfig& servo,
                   const TapSessionParams& params)
{
  std::vector<PressTarget> candidates;
  for (const auto& target : press_targets(model, 1))
  {
    if (surface_query(model, target.point).normal.z() >= 0.8)
    {
      candidates.push_back(target);
    }
  }
  if (candidates.empty() || params.taps < 1)
  {
    throw ScriptError("no upper-surface patches to tap", 0);
  }

  Rng rng(derive_seed(params.seed, "taps"));
  std::vector<double> depth_noise;
  std::vector<double> speed_noise;
  for (int i = 0; i < params.taps; ++i)
  {
    depth_noise.push_back(rng.normal());
    speed_noise.push_back(rng.normal());
  }

  const std::size_t stride =
    std::max<std::size_t>(1, candidates.size() / static_cast<std::size_t>(params.taps));
  ScriptBuilder builder(model, rig, servo);
  for (int i = 0; i < params.taps; ++i)
  {
    const auto& target = candidates[(static_cast<std::size_t>(i) * stride) % candidates.size()];
    const SurfaceQuery q = surface_query(model, target.point);
    const double d0 = params.target_force * 1000.0 / stiffness_at(model, q.base_point);
    const auto k = static_cast<std::size_t>(i);
    PressProfile profile;
    profile.slide_length = params.slide_length;
    profile.constant_force = true;
    profile.slide_speed =
      std::clamp(params.slide_speed * (1.0 + params.jitter * speed_noise[k]), 0.1 * params.slide_speed,
                 4.0 * params.slide_speed);
    const double depth = std::clamp(d0 * (1.0 + params.jitter * depth_noise[k]), 0.1 * d0, 3.0 * d0);
    add_press(builder, target.point, depth, profile, i % 2 == 0 ? Vec3(Vec3::UnitX()) : Vec3(-Vec3::UnitX()));
  }
  builder.hold(100);
  return builder.finish();
}

Script quasi_static_press(const TissueModel& model, const FulcrumRig& rig, const ServoConfig& servo,
                          double max_depth, double speed)
{
  ScriptBuilder builder(model, rig, servo);
  const Vec3 above(rig.fulcrum.x(), rig.fulcrum.y(), model.bounds().max().z() + 20.0);
  const SurfaceQuery q = surface_query(model, above);
  const double r = rig.tip_radius;
  builder.travel_to(q.nearest_point + q.normal * (r + 5.0), 100.0);
  builder.move_to(q.nearest_point + q.normal * (r - max_depth), speed);
  builder.move_to(q.nearest_point + q.normal * (r + 5.0), speed);
  builder.hold(50);
  return builder.finish();
}

}  // namespace palpatron
