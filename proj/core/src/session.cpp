#include "palpatron/session.hpp"

#include "palpatron/error.hpp"

#include <algorithm>
#include <cmath>

namespace palpatron
{
namespace
{

nlohmann::json vec_json(const Vec3& v)
{
  return nlohmann::json::array({v.x(), v.y(), v.z()});
}

// Non-finite numbers have no JSON form; they are written as null and read back as NaN.
nlohmann::json number_json(double v)
{
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

double json_number(const nlohmann::json& v)
{
  return v.is_null() ? std::nan("") : v.get<double>();
}

template <class... Ts>
struct Overloaded : Ts...
{
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

TimeMs seconds_to_ms(double s)
{
  return static_cast<TimeMs>(std::llround(s * 1000.0));
}

}  // namespace

FamiliarizationTask familiarization_task(const Config& config)
{
  FamiliarizationTask task;
  task.sphere_radius = config.get("session.sphere_radius");
  task.required_touches = config.get_int("session.required_touches");
  task.time_limit = config.get("session.time_limit");
  if (task.sphere_radius <= 0.0 || task.required_touches < 1 || task.time_limit <= 0.0)
  {
    throw ConfigError("familiarization sphere radius, touch count and time limit must be positive");
  }
  return task;
}

SpherePlacer::SpherePlacer(const TissueModel& model, std::vector<FulcrumRig> rigs,
                           double sphere_radius)
  : model_(&model), rigs_(std::move(rigs))
{
  double tip = 0.0;
  for (const auto& rig : rigs_)
  {
    tip = std::max(tip, rig.tip_radius);
  }
  clearance_ = sphere_radius + tip;
  const auto& b = model.bounds();
  region_ = Eigen::AlignedBox3d(
    Vec3(0.8 * b.min().x(), 0.8 * b.min().y(), 0.5 * b.max().z()),
    Vec3(0.8 * b.max().x(), 0.8 * b.max().y(), b.max().z() + 80.0));
}

bool SpherePlacer::admissible(const Vec3& center) const
{
  if (surface_query(*model_, center).signed_distance <= clearance_)
  {
    return false;
  }
  return std::any_of(rigs_.begin(), rigs_.end(),
                     [&](const FulcrumRig& rig) { return solve_tip(rig, center).has_value(); });
}

Vec3 SpherePlacer::place(Rng& rng) const
{
  constexpr int kAttempts = 10000;
  for (int i = 0; i < kAttempts; ++i)
  {
    const Vec3 c(rng.uniform(region_.min().x(), region_.max().x()),
                 rng.uniform(region_.min().y(), region_.max().y()),
                 rng.uniform(region_.min().z(), region_.max().z()));
    if (admissible(c))
    {
      return c;
    }
  }
  // Straight above the top of the dome, on the first rig's axis.
  return Vec3(rigs_.front().fulcrum.x(), rigs_.front().fulcrum.y(),
              model_->bounds().max().z() + clearance_ + 20.0);
}

std::string_view to_string(FamiliarizationOutcome outcome)
{
  switch (outcome)
  {
    case FamiliarizationOutcome::Touch: return "touch";
    case FamiliarizationOutcome::Pass: return "pass";
    case FamiliarizationOutcome::Fail: return "fail";
  }
  return "touch";
}

std::optional<FamiliarizationEvent> familiarization_step(FamiliarizationTask& task,
                                                         std::span<const HapticTick> ticks,
                                                         Rng& rng, const SpherePlacer& placer)
{
  if (task.passed || ticks.empty())
  {
    return std::nullopt;
  }
  const TimeMs t = ticks.front().t;
  const TimeMs elapsed = t - task.attempt_start;
  const TimeMs limit = seconds_to_ms(task.time_limit);

  const bool inside = std::any_of(ticks.begin(), ticks.end(), [&](const HapticTick& tick) {
    return (tick.tip - task.current_center).norm() <= task.sphere_radius;
  });
  const bool rising = inside && !task.was_inside;
  task.was_inside = inside;

  if (rising && elapsed <= limit)
  {
    ++task.touches_done;
    FamiliarizationEvent event{FamiliarizationOutcome::Touch, t, task.attempt, task.touches_done, {}};
    if (task.touches_done >= task.required_touches)
    {
      task.passed = true;
      event.outcome = FamiliarizationOutcome::Pass;
      return event;
    }
    task.current_center = placer.place(rng);
    task.was_inside = false;
    event.new_center = task.current_center;
    return event;
  }

  if (elapsed >= limit)
  {
    FamiliarizationEvent event{FamiliarizationOutcome::Fail, t, task.attempt, task.touches_done, {}};
    ++task.attempt;
    task.touches_done = 0;
    task.attempt_start = t;
    return event;
  }
  return std::nullopt;
}

nlohmann::json command_payload(const Command& command)
{
  return std::visit(
    Overloaded{
      [](const InputSample& s) {
        return nlohmann::json{{"rig", s.rig},
                              {"yaw", number_json(s.target.yaw)},
                              {"pitch", number_json(s.target.pitch)},
                              {"insertion", number_json(s.target.insertion)},
                              {"roll", number_json(s.target.roll)},
                              {"grip", number_json(s.target.grip)}};
      },
      [](const AnswerCommand& a) {
        return nlohmann::json{{"cmd", "answer"}, {"item", a.item}, {"choice", a.choice}};
      },
      [](const FinishExploreCommand&) { return nlohmann::json{{"cmd", "finish_explore"}}; },
    },
    command);
}

Event command_event(TimeMs t, const Command& command)
{
  const bool input = std::holds_alternative<InputSample>(command);
  return Event{t, input ? "input" : "command", command_payload(command)};
}

std::optional<Command> command_from_event(const Event& event)
{
  const auto& p = event.payload;
  if (event.kind == "input")
  {
    InputSample s;
    s.t = event.t;
    s.rig = p.at("rig").get<int>();
    s.target.yaw = json_number(p.at("yaw"));
    s.target.pitch = json_number(p.at("pitch"));
    s.target.insertion = json_number(p.at("insertion"));
    s.target.roll = json_number(p.at("roll"));
    s.target.grip = json_number(p.at("grip"));
    return s;
  }
  if (event.kind == "command")
  {
    const auto cmd = p.at("cmd").get<std::string>();
    if (cmd == "answer")
    {
      return AnswerCommand{p.at("item").get<std::string>(), p.at("choice").get<std::size_t>()};
    }
    if (cmd == "finish_explore")
    {
      return FinishExploreCommand{};
    }
  }
  return std::nullopt;
}

SessionEngine::SessionEngine(std::shared_ptr<const TissueModel> model, const Config& config,
                             std::uint64_t seed)
  : model_(std::move(model)),
    config_(config),
    seed_(seed),
    servo_(servo_config(config)),
    band_(force_band(config, model_->scenario())),
    assess_(assess_config(config)),
    explore_limit_(seconds_to_ms(config.get("session.explore_limit"))),
    rng_(derive_seed(seed, "session")),
    quiz_(quiz_bank(model_->scenario()))
{
  const int count = config.get_int("rig.count");
  if (count < 1 || count > 2)
  {
    throw ConfigError("rig.count must be 1 or 2");
  }
  std::vector<FulcrumRig> rigs;
  for (int i = 0; i < count; ++i)
  {
    rigs.push_back(rig_from_config(config, i));
    channels_.emplace_back(*model_, rigs.back(), servo_, i);
    segmenters_.emplace_back(assess_.segmentation);
  }
  if (config.get_int("session.familiarize") != 0)
  {
    task_ = familiarization_task(config);
    placer_.emplace(*model_, rigs, task_->sphere_radius);
  }
  else
  {
    phase_ = Phase::Explore;
  }
}

void SessionEngine::submit(Command command)
{
  pending_.push_back(std::move(command));
}

void SessionEngine::emit(SessionSink& sink, std::string kind, nlohmann::json payload)
{
  sink.on_event(Event{t_, std::move(kind), std::move(payload)});
}

void SessionEngine::error(SessionSink& sink, std::string_view code, const std::string& message)
{
  emit(sink, "error", {{"code", code}, {"message", message}});
}

void SessionEngine::enter(Phase next, SessionSink& sink)
{
  const Phase previous = phase_;
  phase_ = next;
  nlohmann::json payload{{"from", to_string(previous)}, {"to", to_string(next)}};
  if (next == Phase::Report)
  {
    payload["score"] = quiz_.score();
    payload["correct"] = quiz_.correct_count();
    payload["total"] = quiz_.items().size();
  }
  if (next == Phase::Explore)
  {
    explore_start_ = t_;
  }
  emit(sink, "phase", std::move(payload));
}

void SessionEngine::apply(const Command& command, SessionSink& sink)
{
  sink.on_event(command_event(t_, command));
  std::visit(
    Overloaded{
      [&](const InputSample& s) {
        if (phase_ != Phase::Familiarize && phase_ != Phase::Explore)
        {
          error(sink, "wrong_phase", "input is not accepted during " + std::string(to_string(phase_)));
          return;
        }
        if (s.rig < 0 || static_cast<std::size_t>(s.rig) >= channels_.size())
        {
          error(sink, "invalid_input", "no instrument " + std::to_string(s.rig));
          return;
        }
        if (!channels_[static_cast<std::size_t>(s.rig)].set_target(s.target))
        {
          error(sink, "invalid_input", "non-finite input target rejected; previous target held");
        }
      },
      [&](const AnswerCommand& a) {
        if (phase_ != Phase::Quiz)
        {
          error(sink, "wrong_phase", "answers are accepted only during quiz");
          return;
        }
        try
        {
          const GradedAnswer graded = quiz_.submit(a.item, a.choice);
          emit(sink, "answer",
               {{"item", graded.item_id},
                {"choice", graded.choice_index},
                {"correct", graded.correct},
                {"attribute", to_string(graded.attribute)},
                {"score", quiz_.score()}});
          if (quiz_.complete())
          {
            enter(Phase::Report, sink);
          }
        }
        catch (const QuizError& e)
        {
          error(sink, to_string(e.code()), e.what());
        }
      },
      [&](const FinishExploreCommand&) {
        if (phase_ != Phase::Explore)
        {
          error(sink, "wrong_phase", "finish_explore is accepted only during explore");
          return;
        }
        enter(Phase::Quiz, sink);
      },
    },
    command);
}

void SessionEngine::step(SessionSink& sink)
{
  if (!started_)
  {
    started_ = true;
    emit(sink, "phase", {{"from", nullptr}, {"to", to_string(phase_)}});
    if (phase_ == Phase::Explore)
    {
      explore_start_ = t_;
    }
    if (task_)
    {
      task_->attempt_start = t_;
      task_->current_center = placer_->place(rng_);
      emit(sink, "sphere",
           {{"center", vec_json(task_->current_center)},
            {"radius", task_->sphere_radius},
            {"attempt", task_->attempt}});
    }
  }

  while (!pending_.empty())
  {
    const Command command = std::move(pending_.front());
    pending_.pop_front();
    apply(command, sink);
  }

  latest_.clear();
  for (std::size_t i = 0; i < channels_.size(); ++i)
  {
    const HapticTick tick = channels_[i].step();
    sink.on_tick(tick);
    latest_.push_back(tick);
    if (auto episode = segmenters_[i].push(tick))
    {
      closed_.push_back(*episode);
    }
  }

  if (phase_ == Phase::Familiarize && task_)
  {
    if (const auto event = familiarization_step(*task_, latest_, rng_, *placer_))
    {
      if (event->outcome == FamiliarizationOutcome::Touch)
      {
        emit(sink, "touch",
             {{"touches_done", event->touches_done},
              {"required", task_->required_touches},
              {"attempt", event->attempt}});
      }
      else
      {
        emit(sink, "familiarization",
             {{"result", to_string(event->outcome)},
              {"attempt", event->attempt},
              {"touches_done", event->touches_done}});
      }
      if (event->new_center)
      {
        emit(sink, "sphere",
             {{"center", vec_json(*event->new_center)},
              {"radius", task_->sphere_radius},
              {"attempt", task_->attempt}});
      }
      else if (event->outcome == FamiliarizationOutcome::Fail)
      {
        emit(sink, "sphere",
             {{"center", vec_json(task_->current_center)},
              {"radius", task_->sphere_radius},
              {"attempt", task_->attempt}});
      }
      if (event->outcome == FamiliarizationOutcome::Pass)
      {
        enter(Phase::Explore, sink);
      }
    }
  }
  else if (phase_ == Phase::Explore && explore_limit_ > 0 && t_ - explore_start_ + 1 >= explore_limit_)
  {
    enter(Phase::Quiz, sink);
  }

  t_ += kServoPeriodMs;
}

std::size_t SessionEngine::episode_count() const
{
  std::size_t open = 0;
  for (const auto& s : segmenters_)
  {
    open += s.in_episode() ? 1U : 0U;
  }
  return closed_.size() + open;
}

std::vector<TapEpisode> SessionEngine::episodes() const
{
  std::vector<TapEpisode> out = closed_;
  for (auto segmenter : segmenters_)
  {
    if (auto episode = segmenter.finish())
    {
      out.push_back(*episode);
    }
  }
  order_episodes(out);
  return out;
}

AssessmentReport SessionEngine::report() const
{
  return assess_episodes(*model_, episodes(), band_, assess_);
}

}  // namespace palpatron
