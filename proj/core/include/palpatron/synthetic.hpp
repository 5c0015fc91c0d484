#pragma once

#include "palpatron/haptics.hpp"
#include "palpatron/script.hpp"
#include "palpatron/tissue.hpp"
#include "palpatron/types.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace palpatron
{

/// Scripted instrument motion. Cartesian tip paths are sampled every servo tick
/// and converted to rig targets, sub-stepped so the rate limits never bind: the
/// servo then tracks the commanded tip exactly.
class ScriptBuilder
{
public:
  ScriptBuilder(const TissueModel& model, const FulcrumRig& rig, const ServoConfig& servo,
                int rig_index = 0);

  TimeMs now() const { return t_; }
  const Vec3& tip() const { return tip_; }
  const FulcrumRig& rig() const { return rig_; }
  const TissueModel& model() const { return *model_; }

  /// Straight-line tip move at `speed` mm/s. Throws ScriptError when a point is unreachable.
  void move_to(const Vec3& target, double speed);

  /// Like move_to, but detours above the liver when the straight path would touch it.
  void travel_to(const Vec3& target, double speed);

  void hold(TimeMs duration);

  void command(Command command);

  Script finish(std::optional<TimeMs> duration = std::nullopt) const;

private:
  void emit(const Vec3& target);
  bool clear_path(const Vec3& from, const Vec3& to, double clearance) const;

  const TissueModel* model_;
  FulcrumRig rig_;
  ServoConfig servo_;
  int rig_index_;
  TimeMs t_ = 0;
  Vec3 tip_;
  Script script_;
};

struct PressProfile
{
  double standoff = 12.0;        // mm above contact where travel happens
  double travel_speed = 150.0;   // mm/s
  double approach_speed = 20.0;  // mm/s over the last 2 mm and inside the tissue
  TimeMs dwell = 40;             // ms held at full depth
  double slide_length = 0.0;     // mm slid along the surface at depth
  double slide_speed = 0.0;      // mm/s
  /// Rescale the slide depth by the local stiffness so the force stays put.
  bool constant_force = false;
};

/// Indentation that produces `force` on lesion-free tissue of the model.
double depth_for_force(const TissueModel& model, double force);

/// Press at the surface point nearest `point` along the local normal: travel to the
/// standoff, descend to `depth` mm of penetration, optionally slide, then retreat.
void add_press(ScriptBuilder& builder, const Vec3& point, double depth, const PressProfile& profile,
               const Vec3& slide_hint = Vec3::UnitX());

struct PressTarget
{
  std::uint32_t patch = 0;
  Vec3 point = Vec3::Zero();
};

/// Press targets per patch: the patch centroid (subdivisions = 1) or one point per
/// quadrant of the patch about its centroid (subdivisions = 2).
std::vector<PressTarget> press_targets(const TissueModel& model, int subdivisions = 1);

struct SweepOptions
{
  PressProfile profile;
  int subdivisions = 1;
  /// Force aimed for; the depth comes from the local stiffness when adaptive.
  double target_force = 2.3;
  bool adaptive_depth = true;
  /// Restrict to these patches (all when empty).
  std::vector<std::uint32_t> patches;
};

/// One press per target, in patch order.
Script sweep_script(const TissueModel& model, const FulcrumRig& rig, const ServoConfig& servo,
                    const SweepOptions& options = {});

struct TapSessionParams
{
  int taps = 24;
  /// Relative spread of depth and slide speed; 0 is a perfectly steady trainee.
  double jitter = 0.0;
  std::uint64_t seed = 1;
  double target_force = 2.3;
  double slide_length = 12.0;
  double slide_speed = 25.0;
};

/// Press-slide-release taps over distinct upper-surface patches. Jitter draws come
/// from one seeded stream independent of `jitter`, so varying it scales the same
/// deviations.
Script tap_session(const TissueModel& model, const FulcrumRig& rig, const ServoConfig& servo,
                   const TapSessionParams& params);

/// Slow descent along the shaft onto the top of the liver to `max_depth` mm of
/// penetration and back out.
Script quasi_static_press(const TissueModel& model, const FulcrumRig& rig, const ServoConfig& servo,
                          double max_depth, double speed);

}  // namespace palpatron
