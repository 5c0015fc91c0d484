#include "wire.hpp"

#include "palpatron/error.hpp"

#include <cmath>
#include <limits>

namespace palpatron::server
{
namespace
{

nlohmann::json vec_json(const Vec3& v)
{
  return nlohmann::json::array({v.x(), v.y(), v.z()});
}

WireError malformed(std::string message)
{
  return WireError{"malformed", std::move(message), false};
}

bool is_number(const nlohmann::json& payload, const char* key)
{
  return payload.contains(key) && payload[key].is_number();
}

bool is_index(const nlohmann::json& v)
{
  return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
}

std::optional<WireError> check_payload(ClientKind kind, const nlohmann::json& p)
{
  switch (kind)
  {
    case ClientKind::Hello:
      if (p.contains("client") && !p["client"].is_string())
      {
        return malformed("hello.client must be a string");
      }
      return std::nullopt;

    case ClientKind::Start:
      if (!p.contains("scenario") || !p["scenario"].is_string() ||
          !parse_scenario(p["scenario"].get<std::string>()))
      {
        return malformed("start.scenario must be one of healthy, cirrhotic, tumoral, hepatic");
      }
      if (!p.contains("seed") || !is_index(p["seed"]))
      {
        return malformed("start.seed must be a non-negative integer");
      }
      if (p.contains("config"))
      {
        if (!p["config"].is_object())
        {
          return malformed("start.config must be an object of numbers");
        }
        for (const auto& [key, value] : p["config"].items())
        {
          if (!value.is_number())
          {
            return malformed("start.config." + key + " must be a number");
          }
        }
      }
      return std::nullopt;

    case ClientKind::Input:
      for (const char* key : {"yaw", "pitch", "insertion"})
      {
        if (!is_number(p, key))
        {
          return malformed(std::string("input.") + key + " must be a number");
        }
      }
      for (const char* key : {"roll", "grip"})
      {
        if (p.contains(key) && !p[key].is_number())
        {
          return malformed(std::string("input.") + key + " must be a number");
        }
      }
      if (p.contains("rig") && !(is_index(p["rig"]) && p["rig"].get<std::int64_t>() <= 1))
      {
        return malformed("input.rig must be 0 or 1");
      }
      return std::nullopt;

    case ClientKind::Answer:
      if (!p.contains("item") || !p["item"].is_string())
      {
        return malformed("answer.item must be a string");
      }
      if (!p.contains("choice") || !is_index(p["choice"]))
      {
        return malformed("answer.choice must be a non-negative integer");
      }
      return std::nullopt;

    case ClientKind::Event:
      if (!p.contains("kind") || !p["kind"].is_string() || p["kind"] != "finish_explore")
      {
        return malformed("client events support kind \"finish_explore\" only");
      }
      return std::nullopt;
  }
  return malformed("unknown message type");
}

nlohmann::json sphere_json(const FamiliarizationTask& task, TimeMs t)
{
  const auto limit = static_cast<TimeMs>(std::llround(task.time_limit * 1000.0));
  return {{"center", vec_json(task.current_center)},
          {"radius", task.sphere_radius},
          {"touches_done", task.touches_done},
          {"required", task.required_touches},
          {"attempt", task.attempt},
          {"remaining_ms", std::max<TimeMs>(0, limit - (t - task.attempt_start))}};
}

nlohmann::json dimple_json(const HapticTick& tick, const ServoConfig& servo)
{
  const auto d = display_dimple(tick, servo);
  if (!d)
  {
    return nullptr;
  }
  return {{"center", vec_json(d->center)}, {"depth", d->depth}, {"radius", d->radius}};
}

}  // namespace

std::variant<ClientMessage, WireError> parse_client(std::string_view text)
{
  nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded())
  {
    return malformed("message is not valid JSON");
  }
  if (!j.is_object())
  {
    return malformed("message must be a JSON object");
  }
  if (!j.contains("v") || !j["v"].is_string() || j["v"] != kWireVersion)
  {
    return WireError{"version", "unsupported protocol version; expected " + std::string(kWireVersion),
                     true};
  }
  if (!j.contains("type") || !j["type"].is_string())
  {
    return malformed("missing message type");
  }
  if (!j.contains("t") || !j["t"].is_number() || !std::isfinite(j["t"].get<double>()) ||
      j["t"].get<double>() < 0.0)
  {
    return malformed("t must be a non-negative number of milliseconds");
  }
  if (!j.contains("payload") || !j["payload"].is_object())
  {
    return malformed("payload must be an object");
  }

  static const std::pair<std::string_view, ClientKind> kTypes[] = {
    {"hello", ClientKind::Hello}, {"start", ClientKind::Start}, {"input", ClientKind::Input},
    {"answer", ClientKind::Answer}, {"event", ClientKind::Event}};
  const auto type = j["type"].get<std::string>();
  for (const auto& [name, kind] : kTypes)
  {
    if (name == type)
    {
      if (auto error = check_payload(kind, j["payload"]))
      {
        return *error;
      }
      const double t = j["t"].get<double>();
      const double max_t = static_cast<double>(std::numeric_limits<TimeMs>::max() / 2);
      return ClientMessage{kind, static_cast<TimeMs>(std::min(t, max_t)), j["payload"]};
    }
  }
  return malformed("unknown or server-only message type '" + type + "'");
}

StartRequest start_request(const nlohmann::json& payload)
{
  StartRequest r;
  r.scenario = *parse_scenario(payload.at("scenario").get<std::string>());
  r.seed = payload.at("seed").get<std::uint64_t>();
  if (payload.contains("config"))
  {
    for (const auto& [key, value] : payload["config"].items())
    {
      r.overrides[key] = value.get<double>();
    }
  }
  return r;
}

InputSample input_sample(const nlohmann::json& payload, TimeMs t)
{
  InputSample s;
  s.t = t;
  s.rig = payload.value("rig", 0);
  s.target.yaw = payload.at("yaw").get<double>();
  s.target.pitch = payload.at("pitch").get<double>();
  s.target.insertion = payload.at("insertion").get<double>();
  s.target.roll = payload.value("roll", 0.0);
  s.target.grip = payload.value("grip", 0.0);
  return s;
}

AnswerCommand answer_command(const nlohmann::json& payload)
{
  return {payload.at("item").get<std::string>(), payload.at("choice").get<std::size_t>()};
}

std::string envelope(std::string_view type, TimeMs t, const nlohmann::json& payload)
{
  nlohmann::ordered_json j;
  j["v"] = kWireVersion;
  j["type"] = type;
  j["t"] = t;
  j["payload"] = payload;
  return j.dump();
}

std::string error_message(TimeMs t, std::string_view code, std::string_view message)
{
  return envelope("error", t, {{"code", code}, {"message", message}});
}

nlohmann::json hello_payload()
{
  return {{"server", "palpatron"},
          {"version", kWireVersion},
          {"scenarios", {"healthy", "cirrhotic", "tumoral", "hepatic"}}};
}

FrameSnapshot snapshot(const SessionEngine& engine)
{
  FrameSnapshot f;
  f.t = engine.latest().empty() ? engine.now() : engine.latest().front().t;
  f.phase = engine.phase();
  f.band = engine.band();
  f.ticks = engine.latest();
  if (engine.phase() == Phase::Familiarize)
  {
    f.sphere = engine.familiarization();
  }
  const Quiz& quiz = engine.quiz();
  if (engine.phase() == Phase::Quiz)
  {
    for (const auto& id : quiz.pending_ids())
    {
      for (const auto& item : quiz.items())
      {
        if (item.id == id)
        {
          f.pending_items.push_back(item);
        }
      }
    }
  }
  f.answered = quiz.answered_count();
  f.total_items = quiz.items().size();
  f.score = quiz.score();
  f.cones = engine.episode_count();
  return f;
}

nlohmann::json frame_payload(const FrameSnapshot& frame, const ServoConfig& servo)
{
  nlohmann::json rigs = nlohmann::json::array();
  nlohmann::json dimples = nlohmann::json::array();
  for (const auto& tick : frame.ticks)
  {
    const double f = tick.force_magnitude();
    rigs.push_back({{"rig", tick.rig},
                    {"tip", vec_json(tick.tip)},
                    {"direction", vec_json(tick.direction)},
                    {"force", vec_json(tick.force)},
                    {"force_magnitude", f},
                    {"gauge", to_string(gauge_state(f, frame.band))},
                    {"contact", tick.contact},
                    {"state",
                     {{"yaw", tick.state.yaw},
                      {"pitch", tick.state.pitch},
                      {"insertion", tick.state.insertion},
                      {"roll", tick.state.roll},
                      {"grip", tick.state.grip}}}});
    auto d = dimple_json(tick, servo);
    if (!d.is_null())
    {
      dimples.push_back(std::move(d));
    }
  }

  nlohmann::json p;
  p["phase"] = to_string(frame.phase);
  if (frame.ticks.empty())
  {
    p["tip"] = vec_json(Vec3::Zero());
    p["direction"] = vec_json(-Vec3::UnitZ());
    p["force"] = vec_json(Vec3::Zero());
    p["force_magnitude"] = 0.0;
    p["gauge"] = to_string(gauge_state(0.0, frame.band));
    p["dimple"] = nullptr;
  }
  else
  {
    const auto& lead = frame.ticks.front();
    p["tip"] = vec_json(lead.tip);
    p["direction"] = vec_json(lead.direction);
    p["force"] = vec_json(lead.force);
    p["force_magnitude"] = lead.force_magnitude();
    p["gauge"] = to_string(gauge_state(lead.force_magnitude(), frame.band));
    p["dimple"] = dimple_json(lead, servo);
  }
  p["band"] = {frame.band.low, frame.band.high};
  p["dimples"] = std::move(dimples);
  p["rigs"] = std::move(rigs);
  p["sphere"] = frame.sphere ? sphere_json(*frame.sphere, frame.t) : nlohmann::json(nullptr);
  if (frame.phase == Phase::Quiz)
  {
    nlohmann::json pending = nlohmann::json::array();
    for (const auto& item : frame.pending_items)
    {
      pending.push_back({{"id", item.id},
                         {"attribute", to_string(item.attribute)},
                         {"prompt", item.prompt},
                         {"choices", item.choices}});
    }
    p["quiz"] = {{"pending", std::move(pending)},
                 {"answered", frame.answered},
                 {"total", frame.total_items},
                 {"score", frame.score}};
  }
  else
  {
    p["quiz"] = nullptr;
  }
  p["cones"] = frame.cones;
  return p;
}

nlohmann::json scene_payload(const SessionEngine& engine, std::string_view session_id)
{
  const TissueModel& model = engine.model();
  const SurfaceMesh& mesh = model.displaced_mesh();
  nlohmann::json vertices = nlohmann::json::array();
  nlohmann::json normals = nlohmann::json::array();
  for (std::size_t i = 0; i < mesh.vertex_count(); ++i)
  {
    for (int k = 0; k < 3; ++k)
    {
      vertices.push_back(mesh.vertices[i][k]);
      normals.push_back(mesh.vertex_normals[i][k]);
    }
  }
  nlohmann::json triangles = nlohmann::json::array();
  for (const auto& tri : mesh.triangles)
  {
    for (const auto v : tri)
    {
      triangles.push_back(v);
    }
  }

  // Surface tint spots: visible lesions only; deep cysts never reach the client.
  nlohmann::json spots = nlohmann::json::array();
  for (const auto& f : model.features())
  {
    if (f.visible && f.kind == FeatureKind::SurfaceCyst)
    {
      spots.push_back({{"center", vec_json(f.center)}, {"radius_sigma", f.radius_sigma}});
    }
  }

  nlohmann::json rigs = nlohmann::json::array();
  for (std::size_t i = 0; i < engine.rig_count(); ++i)
  {
    const FulcrumRig& rig = engine.rig(i);
    rigs.push_back({{"rig", i},
                    {"fulcrum", vec_json(rig.fulcrum)},
                    {"tool_length", rig.tool_length},
                    {"tip_radius", rig.tip_radius},
                    {"instrument", to_string(rig.instrument)},
                    {"angle_limit", rig.angle_limit}});
  }

  const auto& color = model.appearance().base_color;
  return {{"kind", "scene"},
          {"data",
           {{"session", session_id},
            {"scenario", to_string(model.scenario())},
            {"seed", model.seed()},
            {"mesh",
             {{"vertices", std::move(vertices)},
              {"normals", std::move(normals)},
              {"triangles", std::move(triangles)},
              {"patch_count", mesh.patch_count}}},
            {"appearance",
             {{"base_color", {color[0], color[1], color[2]}},
              {"pallor", model.appearance().pallor},
              {"spots", std::move(spots)}}},
            {"band", {engine.band().low, engine.band().high}},
            {"cone_scale",
             {{"height", engine.assessment().cones.height_per_newton},
              {"radius", engine.assessment().cones.radius_per_newton}}},
            {"rigs", std::move(rigs)}}}};
}

std::optional<std::string> event_message(const Event& event)
{
  if (event.kind == "input" || event.kind == "command")
  {
    return std::nullopt;
  }
  if (event.kind == "error")
  {
    return error_message(event.t, event.payload.value("code", "error"),
                         event.payload.value("message", ""));
  }
  return envelope("event", event.t, {{"kind", event.kind}, {"data", event.payload}});
}

nlohmann::json report_payload(const AssessmentReport& report, const TissueModel& model,
                              const QuizSummary& quiz)
{
  nlohmann::json p = to_json(report, model);
  p["quiz"] = {{"score", quiz.score}, {"correct", quiz.correct}, {"total", quiz.total}};
  return p;
}

}  // namespace palpatron::server
