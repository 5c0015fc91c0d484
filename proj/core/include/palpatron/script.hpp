#pragma once

#include "palpatron/session.hpp"
#include "palpatron/types.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string_view>
#include <vector>

namespace palpatron
{

inline constexpr std::string_view kScriptSchema = "palpscript/1";

struct TimedCommand
{
  TimeMs t = 0;
  Command command;
};

/// Scripted trainee: input samples and quiz commands, sorted by time.
struct Script
{
  std::optional<TimeMs> duration;
  std::vector<TimedCommand> commands;

  /// Declared duration, else one tick past the last command.
  TimeMs effective_duration() const;
};

/// Parses palpscript JSONL. Throws ScriptError with the offending line.
Script parse_script(std::string_view text);

/// Throws FileError when the file cannot be read, ScriptError when malformed.
Script read_script(const std::filesystem::path& path);

void write_script(std::ostream& out, const Script& script);
void write_script(const std::filesystem::path& path, const Script& script);

/// Drives the engine through `duration` ticks, submitting each command at the
/// first tick whose time is not earlier than the command's (zero-order hold).
void run_script(SessionEngine& engine, const Script& script, TimeMs duration, SessionSink& sink);

}  // namespace palpatron
