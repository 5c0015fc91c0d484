#pragma once

#include "palpatron/assess.hpp"
#include "palpatron/config.hpp"
#include "palpatron/haptics.hpp"
#include "palpatron/quiz.hpp"
#include "palpatron/rng.hpp"
#include "palpatron/tissue.hpp"
#include "palpatron/types.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace palpatron
{

struct FamiliarizationTask
{
  double sphere_radius = 10.0;  // mm
  int required_touches = 5;
  double time_limit = 30.0;     // s
  int attempt = 1;
  int touches_done = 0;
  Vec3 current_center = Vec3::Zero();
  TimeMs attempt_start = 0;
  bool was_inside = false;
  bool passed = false;
};

FamiliarizationTask familiarization_task(const Config& config);

/// Places familiarization spheres uniformly in the part of the workspace the
/// instrument tip can reach without touching the liver.
class SpherePlacer
{
public:
  SpherePlacer(const TissueModel& model, std::vector<FulcrumRig> rigs, double sphere_radius);

  Vec3 place(Rng& rng) const;

  /// True when some rig can put its tip at `center` and the sphere clears the liver.
  bool admissible(const Vec3& center) const;

private:
  const TissueModel* model_;
  std::vector<FulcrumRig> rigs_;
  double clearance_;
  Eigen::AlignedBox3d region_;
};

enum class FamiliarizationOutcome : std::uint8_t
{
  Touch,
  Pass,
  Fail,
};

std::string_view to_string(FamiliarizationOutcome outcome);

struct FamiliarizationEvent
{
  FamiliarizationOutcome outcome = FamiliarizationOutcome::Touch;
  TimeMs t = 0;
  int attempt = 1;
  int touches_done = 0;
  std::optional<Vec3> new_center;  // set when the sphere moved
};

/// Advances the task by one tick of tip positions. A touch is a rising edge into
/// the sphere; the sphere then moves. Reaching the required count within the time
/// limit passes; running out of time starts a new attempt with the same sphere.
std::optional<FamiliarizationEvent> familiarization_step(FamiliarizationTask& task,
                                                         std::span<const HapticTick> ticks,
                                                         Rng& rng, const SpherePlacer& placer);

struct AnswerCommand
{
  std::string item;
  std::size_t choice = 0;

  friend bool operator==(const AnswerCommand&, const AnswerCommand&) = default;
};

struct FinishExploreCommand
{
  friend bool operator==(const FinishExploreCommand&, const FinishExploreCommand&) = default;
};

/// Something a trainee (or a script) asks of the session; applied before the next tick.
using Command = std::variant<InputSample, AnswerCommand, FinishExploreCommand>;

struct Event
{
  TimeMs t = 0;
  std::string kind;
  nlohmann::json payload = nlohmann::json::object();
};

/// Receives the engine's output in record order.
class SessionSink
{
public:
  virtual ~SessionSink() = default;
  virtual void on_event(const Event& event) = 0;
  virtual void on_tick(const HapticTick& tick) = 0;
};

/// Payloads of the recorded commands, shared by the recorder and replay.
nlohmann::json command_payload(const Command& command);
Event command_event(TimeMs t, const Command& command);

/// Inverse of command_event for `input` and `command` events; empty for other kinds.
std::optional<Command> command_from_event(const Event& event);

/// Deterministic session state machine: Familiarize -> Explore -> Quiz -> Report.
///
/// Commands are queued and applied at the start of the next step; each step then
/// advances every instrument by one servo tick and runs the phase logic. The
/// engine does no I/O, output goes to the sink.
class SessionEngine
{
public:
  SessionEngine(std::shared_ptr<const TissueModel> model, const Config& config, std::uint64_t seed);

  void submit(Command command);

  /// Runs one 1 ms tick.
  void step(SessionSink& sink);

  TimeMs now() const { return t_; }
  Phase phase() const { return phase_; }
  const TissueModel& model() const { return *model_; }
  std::shared_ptr<const TissueModel> model_ptr() const { return model_; }
  const Config& config() const { return config_; }
  std::uint64_t seed() const { return seed_; }
  const ServoConfig& servo() const { return servo_; }
  const ForceBand& band() const { return band_; }
  const AssessConfig& assessment() const { return assess_; }

  std::size_t rig_count() const { return channels_.size(); }
  const FulcrumRig& rig(std::size_t index) const { return channels_.at(index).rig(); }
  /// Most recent tick of each instrument (empty before the first step).
  const std::vector<HapticTick>& latest() const { return latest_; }

  const std::optional<FamiliarizationTask>& familiarization() const { return task_; }
  const Quiz& quiz() const { return quiz_; }

  /// Tap episodes closed so far plus any open one, across instruments.
  std::size_t episode_count() const;

  /// Episodes so far (open ones closed provisionally), ordered by (t_start, rig).
  std::vector<TapEpisode> episodes() const;

  /// Assessment of everything recorded so far.
  AssessmentReport report() const;

private:
  void apply(const Command& command, SessionSink& sink);
  void enter(Phase next, SessionSink& sink);
  void emit(SessionSink& sink, std::string kind, nlohmann::json payload);
  void error(SessionSink& sink, std::string_view code, const std::string& message);

  std::shared_ptr<const TissueModel> model_;
  Config config_;
  std::uint64_t seed_;
  ServoConfig servo_;
  ForceBand band_;
  AssessConfig assess_;
  std::vector<ServoChannel> channels_;
  std::vector<TapSegmenter> segmenters_;
  std::vector<TapEpisode> closed_;
  std::vector<HapticTick> latest_;
  std::deque<Command> pending_;
  Phase phase_ = Phase::Familiarize;
  bool started_ = false;
  TimeMs t_ = 0;
  TimeMs explore_start_ = 0;
  TimeMs explore_limit_ = 0;
  Rng rng_;
  std::optional<SpherePlacer> placer_;
  std::optional<FamiliarizationTask> task_;
  Quiz quiz_;
};

}  // namespace palpatron
