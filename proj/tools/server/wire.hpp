#pragma once

#include "palpatron/assess.hpp"
#include "palpatron/haptics.hpp"
#include "palpatron/quiz.hpp"
#include "palpatron/session.hpp"
#include "palpatron/types.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace palpatron::server
{

inline constexpr std::string_view kWireVersion = "palpwire/1";

enum class ClientKind : std::uint8_t
{
  Hello,
  Start,
  Input,
  Answer,
  Event,
};

struct ClientMessage
{
  ClientKind kind = ClientKind::Hello;
  TimeMs t = 0;
  nlohmann::json payload = nlohmann::json::object();
};

/// Rejection of a client message. `fatal` errors close the connection.
struct WireError
{
  std::string code;
  std::string message;
  bool fatal = false;
};

/// Parses and validates one client text frame against the palpwire/1 contract.
std::variant<ClientMessage, WireError> parse_client(std::string_view text);

struct StartRequest
{
  Scenario scenario = Scenario::Healthy;
  std::uint64_t seed = 0;
  std::map<std::string, double> overrides;
};

/// Typed views of validated payloads.
StartRequest start_request(const nlohmann::json& payload);
InputSample input_sample(const nlohmann::json& payload, TimeMs t);
AnswerCommand answer_command(const nlohmann::json& payload);

/// `{"v":"palpwire/1","type":...,"t":...,"payload":...}`
std::string envelope(std::string_view type, TimeMs t, const nlohmann::json& payload);
std::string error_message(TimeMs t, std::string_view code, std::string_view message);

nlohmann::json hello_payload();

/// Everything a frame shows, copied out of the engine on the servo thread.
struct FrameSnapshot
{
  TimeMs t = 0;
  Phase phase = Phase::Familiarize;
  ForceBand band;
  std::vector<HapticTick> ticks;
  std::optional<FamiliarizationTask> sphere;
  std::vector<QuizItem> pending_items;
  std::size_t answered = 0;
  std::size_t total_items = 0;
  double score = 0.0;
  std::size_t cones = 0;
};

FrameSnapshot snapshot(const SessionEngine& engine);

nlohmann::json frame_payload(const FrameSnapshot& frame, const ServoConfig& servo);

/// Static scene sent once after `start`: displaced mesh, appearance, band and rigs.
nlohmann::json scene_payload(const SessionEngine& engine, std::string_view session_id);

/// Wire form of an engine event; empty for raw command records, which stay server-side.
/// Engine `error` events become `error` messages.
std::optional<std::string> event_message(const Event& event);

struct QuizSummary
{
  double score = 0.0;
  std::size_t correct = 0;
  std::size_t total = 0;
};

nlohmann::json report_payload(const AssessmentReport& report, const TissueModel& model,
                              const QuizSummary& quiz);

}  // namespace palpatron::server
