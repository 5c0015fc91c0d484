#pragma once

#include "palpatron/config.hpp"
#include "palpatron/tissue.hpp"
#include "palpatron/types.hpp"

#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

namespace palpatron
{

/// Instrument configuration about the trocar pivot.
struct RigState
{
  double yaw = 0.0;        // rad, rotation about +y
  double pitch = 0.0;      // rad, rotation about +x
  double insertion = 0.0;  // mm of shaft beyond the fulcrum
  double roll = 0.0;       // rad about the shaft
  double grip = 0.0;       // jaw opening in [0, 1]; recorded, no haptic effect

  bool is_finite() const;
  friend bool operator==(const RigState&, const RigState&) = default;
};

struct FulcrumRig
{
  Vec3 fulcrum{0.0, 0.0, 200.0};
  double tool_length = 360.0;
  RigState state;
  Instrument instrument = Instrument::Babcock;
  double tip_radius = 5.0;
  double angle_limit = std::numbers::pi / 3.0;  // |yaw|, |pitch| workspace clamp
};

/// Clamps a state into the rig's workspace.
RigState clamp_state(const FulcrumRig& rig, RigState state);

/// Rig `index` (0 or 1) as configured by the `rig.*` keys.
FulcrumRig rig_from_config(const Config& config, int index = 0);

struct TipPose
{
  Vec3 tip;
  Vec3 direction;  // unit, fulcrum -> tip
};

/// Shaft direction is yaw(y) * pitch(x) applied to (0, 0, -1); tip = fulcrum + insertion * direction.
TipPose tip_pose(const FulcrumRig& rig);

/// Handle end of the shaft, on the far side of the fulcrum from the tip.
Vec3 handle_point(const FulcrumRig& rig);

/// Rig state placing the tip at `tip`, keeping roll and grip. Empty when the
/// point is outside the angular clamp or beyond the tool length.
std::optional<RigState> solve_tip(const FulcrumRig& rig, const Vec3& tip);

/// Penalty force along the outward normal: max(0, k*d/1000 - b*v_n/1000), clamped.
/// Penetration in mm, k in N/m, normal velocity in mm/s (positive outward), b in N*s/m.
double contact_force(double penetration_mm, double stiffness, double normal_velocity,
                     double damping, double force_clamp = 4.0);

struct ServoConfig
{
  double force_clamp = 4.0;        // N
  double angular_rate = 2.0;       // rad/s
  double insertion_rate = 200.0;   // mm/s
  double dimple_scale = 6.0;
  double dimple_cap = 25.0;        // mm
};

ServoConfig servo_config(const Config& config);

/// One servo-step record.
struct HapticTick
{
  TimeMs t = 0;
  int rig = 0;
  RigState state;
  Vec3 tip = Vec3::Zero();
  Vec3 tip_velocity = Vec3::Zero();  // mm/s
  Vec3 direction = -Vec3::UnitZ();
  Vec3 force = Vec3::Zero();         // N, reaction on the tool
  bool contact = false;
  std::optional<Vec3> contact_point;
  double penetration = 0.0;          // mm
  std::optional<std::uint32_t> patch_id;

  double force_magnitude() const { return force.norm(); }
  friend bool operator==(const HapticTick&, const HapticTick&) = default;
};

struct ServoStep
{
  FulcrumRig rig;
  HapticTick tick;
};

/// Advances the rig one fixed 1 ms step toward `target` and resolves contact.
/// `previous_tip` is the tip position of the prior tick (velocity is its first difference).
ServoStep servo_step(const TissueModel& model, const FulcrumRig& rig, const RigState& target,
                     const Vec3& previous_tip, TimeMs t, const ServoConfig& config,
                     int rig_index = 0);

/// Stateful wrapper around servo_step for one instrument.
class ServoChannel
{
public:
  ServoChannel(const TissueModel& model, FulcrumRig rig, ServoConfig config, int rig_index = 0);

  /// Returns false (and keeps the previous target) when `target` is not finite.
  bool set_target(const RigState& target);

  HapticTick step();

  const FulcrumRig& rig() const { return rig_; }
  const RigState& target() const { return target_; }
  TimeMs next_time() const { return t_; }
  int index() const { return index_; }

private:
  const TissueModel* model_;
  FulcrumRig rig_;
  ServoConfig config_;
  RigState target_;
  Vec3 previous_tip_;
  TimeMs t_ = 0;
  int index_ = 0;
};

struct InputSample
{
  TimeMs t = 0;
  RigState target;
  int rig = 0;

  friend bool operator==(const InputSample&, const InputSample&) = default;
};

/// Virtual-time servo run: exactly duration / 1 ms ticks, zero-order hold between samples.
/// Samples must be sorted by time.
std::vector<HapticTick> run_servo(const TissueModel& model, const FulcrumRig& rig,
                                  std::span<const InputSample> samples, TimeMs duration,
                                  const ServoConfig& config);

struct Dimple
{
  Vec3 center;
  double depth = 0.0;   // mm
  double radius = 0.0;  // mm
};

/// Visual-only surface indentation for a contact tick; empty without contact.
std::optional<Dimple> display_dimple(const HapticTick& tick, const ServoConfig& config);

}  // namespace palpatron
