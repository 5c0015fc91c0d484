#include "palpatron/haptics.hpp"

#include "palpatron/error.hpp"

#include <algorithm>
#include <cmath>

namespace palpatron
{
namespace
{

double approach(double current, double target, double max_step)
{
  return current + std::clamp(target - current, -max_step, max_step);
}

Vec3 shaft_direction(const RigState& s)
{
  const double cp = std::cos(s.pitch);
  return {-std::sin(s.yaw) * cp, std::sin(s.pitch), -std::cos(s.yaw) * cp};
}

}  // namespace

bool RigState::is_finite() const
{
  return std::isfinite(yaw) && std::isfinite(pitch) && std::isfinite(insertion) &&
         std::isfinite(roll) && std::isfinite(grip);
}

RigState clamp_state(const FulcrumRig& rig, RigState state)
{
  state.yaw = std::clamp(state.yaw, -rig.angle_limit, rig.angle_limit);
  state.pitch = std::clamp(state.pitch, -rig.angle_limit, rig.angle_limit);
  state.insertion = std::clamp(state.insertion, 0.0, rig.tool_length);
  state.grip = std::clamp(state.grip, 0.0, 1.0);
  return state;
}

FulcrumRig rig_from_config(const Config& config, int index)
{
  FulcrumRig rig;
  rig.fulcrum = {config.get("rig.fulcrum.x"), config.get("rig.fulcrum.y"),
                 config.get("rig.fulcrum.z")};
  if (index > 0)
  {
    rig.fulcrum += Vec3(config.get("rig.second.offset.x"), config.get("rig.second.offset.y"),
                        config.get("rig.second.offset.z"));
  }
  rig.tool_length = config.get("rig.tool_length");
  rig.instrument = config.get_int("rig.instrument") == 0 ? Instrument::Maryland : Instrument::Babcock;
  rig.tip_radius = rig.instrument == Instrument::Babcock ? config.get("rig.tip_radius.babcock")
                                                         : config.get("rig.tip_radius.maryland");
  rig.angle_limit = config.get("rig.angle_limit");
  if (rig.tool_length <= 0.0 || rig.tip_radius <= 0.0 || rig.angle_limit <= 0.0)
  {
    throw ConfigError("rig tool length, tip radius and angle limit must be positive");
  }
  if (config.get("rig.tip_radius.babcock") <= config.get("rig.tip_radius.maryland"))
  {
    throw ConfigError("Babcock tip radius must exceed the Maryland tip radius");
  }
  rig.state = clamp_state(rig, RigState{config.get("rig.initial.yaw"), config.get("rig.initial.pitch"),
                                        config.get("rig.initial.insertion"), 0.0, 0.0});
  return rig;
}

TipPose tip_pose(const FulcrumRig& rig)
{
  const Vec3 dir = shaft_direction(rig.state);
  return {rig.fulcrum + rig.state.insertion * dir, dir};
}

Vec3 handle_point(const FulcrumRig& rig)
{
  return rig.fulcrum - (rig.tool_length - rig.state.insertion) * shaft_direction(rig.state);
}

std::optional<RigState> solve_tip(const FulcrumRig& rig, const Vec3& tip)
{
  constexpr double kAngleSlack = 1e-12;
  RigState state = rig.state;
  const Vec3 v = tip - rig.fulcrum;
  const double length = v.norm();
  if (length > rig.tool_length)
  {
    return std::nullopt;
  }
  state.insertion = length;
  if (length == 0.0)
  {
    return state;
  }
  const Vec3 d = v / length;
  state.pitch = std::asin(std::clamp(d.y(), -1.0, 1.0));
  state.yaw = std::atan2(-d.x(), -d.z());
  if (std::abs(state.pitch) > rig.angle_limit + kAngleSlack ||
      std::abs(state.yaw) > rig.angle_limit + kAngleSlack)
  {
    return std::nullopt;
  }
  return state;
}

double contact_force(double penetration_mm, double stiffness, double normal_velocity,
                     double damping, double force_clamp)
{
  if (penetration_mm <= 0.0)
  {
    return 0.0;
  }
  const double f = stiffness * penetration_mm / 1000.0 - damping * (normal_velocity / 1000.0);
  return std::clamp(f, 0.0, force_clamp);
}

ServoConfig servo_config(const Config& config)
{
  ServoConfig c;
  c.force_clamp = config.get("servo.force_clamp");
  c.angular_rate = config.get("rig.rate.angular");
  c.insertion_rate = config.get("rig.rate.insertion");
  c.dimple_scale = config.get("servo.dimple_scale");
  c.dimple_cap = config.get("servo.dimple_cap");
  if (c.force_clamp <= 0.0 || c.angular_rate <= 0.0 || c.insertion_rate <= 0.0)
  {
    throw ConfigError("servo clamp and rate limits must be positive");
  }
  return c;
}

ServoStep servo_step(const TissueModel& model, const FulcrumRig& rig, const RigState& target,
                     const Vec3& previous_tip, TimeMs t, const ServoConfig& config, int rig_index)
{
  constexpr double dt_s = static_cast<double>(kServoPeriodMs) / 1000.0;
  const RigState goal = clamp_state(rig, target);

  ServoStep out{rig, {}};
  RigState& s = out.rig.state;
  const double max_turn = config.angular_rate * dt_s;
  s.yaw = approach(s.yaw, goal.yaw, max_turn);
  s.pitch = approach(s.pitch, goal.pitch, max_turn);
  s.roll = approach(s.roll, goal.roll, max_turn);
  s.insertion = approach(s.insertion, goal.insertion, config.insertion_rate * dt_s);
  s.grip = goal.grip;

  const TipPose pose = tip_pose(out.rig);
  HapticTick& tick = out.tick;
  tick.t = t;
  tick.rig = rig_index;
  tick.state = s;
  tick.tip = pose.tip;
  tick.direction = pose.direction;
  tick.tip_velocity = (pose.tip - previous_tip) / dt_s;

  const SurfaceQuery q = surface_query(model, pose.tip);
  const double penetration = std::max(0.0, rig.tip_radius - q.signed_distance);
  if (penetration > 0.0)
  {
    const double k = stiffness_at(model, q.base_point);
    const double normal_velocity = tick.tip_velocity.dot(q.normal);
    const double f =
      contact_force(penetration, k, normal_velocity, model.damping(), config.force_clamp);
    tick.contact = true;
    tick.penetration = penetration;
    tick.force = f * q.normal;
    tick.contact_point = q.nearest_point;
    tick.patch_id = q.patch_id;
  }
  return out;
}

ServoChannel::ServoChannel(const TissueModel& model, FulcrumRig rig, ServoConfig config,
                           int rig_index)
  : model_(&model),
    rig_(rig),
    config_(config),
    target_(rig.state),
    previous_tip_(tip_pose(rig).tip),
    index_(rig_index)
{
}

bool ServoChannel::set_target(const RigState& target)
{
  if (!target.is_finite())
  {
    return false;
  }
  target_ = target;
  return true;
}

HapticTick ServoChannel::step()
{
  ServoStep s = servo_step(*model_, rig_, target_, previous_tip_, t_, config_, index_);
  rig_ = s.rig;
  previous_tip_ = s.tick.tip;
  t_ += kServoPeriodMs;
  return s.tick;
}

std::vector<HapticTick> run_servo(const TissueModel& model, const FulcrumRig& rig,
                                  std::span<const InputSample> samples, TimeMs duration,
                                  const ServoConfig& config)
{
  ServoChannel channel(model, rig, config);
  std::vector<HapticTick> ticks;
  ticks.reserve(static_cast<std::size_t>(std::max<TimeMs>(0, duration / kServoPeriodMs)));
  std::size_t next = 0;
  for (TimeMs t = 0; t + kServoPeriodMs <= duration; t += kServoPeriodMs)
  {
    while (next < samples.size() && samples[next].t <= t)
    {
      channel.set_target(samples[next].target);
      ++next;
    }
    ticks.push_back(channel.step());
  }
  return ticks;
}

std::optional<Dimple> display_dimple(const HapticTick& tick, const ServoConfig& config)
{
  if (!tick.contact || !tick.contact_point || tick.penetration <= 0.0)
  {
    return std::nullopt;
  }
  return Dimple{*tick.contact_point, tick.penetration,
                std::min(config.dimple_scale * tick.penetration, config.dimple_cap)};
}

}  // namespace palpatron
