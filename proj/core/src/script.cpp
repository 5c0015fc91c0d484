#include "palpatron/script.hpp"

#include "palpatron/error.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>

namespace palpatron
{
namespace
{

double number_or_nan(const nlohmann::json& j, const char* key, double fallback)
{
  if (!j.contains(key))
  {
    return fallback;
  }
  const auto& v = j[key];
  if (v.is_null())
  {
    return std::nan("");
  }
  return v.get<double>();
}

}  // namespace

TimeMs Script::effective_duration() const
{
  if (duration)
  {
    return *duration;
  }
  return commands.empty() ? 0 : commands.back().t + kServoPeriodMs;
}

Script parse_script(std::string_view text)
{
  Script script;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  std::map<int, TimeMs> last_input_t;
  while (pos < text.size())
  {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos)
    {
      nl = text.size();
    }
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r')
    {
      line.remove_suffix(1);
    }
    if (line.find_first_not_of(" \t") == std::string_view::npos)
    {
      continue;
    }
    try
    {
      const auto j = nlohmann::json::parse(line);
      if (!j.is_object())
      {
        throw ScriptError("line " + std::to_string(line_no) + ": expected a JSON object", line_no);
      }
      if (j.contains("script"))
      {
        if (j["script"].get<std::string>() != kScriptSchema)
        {
          throw ScriptError("line " + std::to_string(line_no) + ": unsupported script schema", line_no);
        }
        if (j.contains("duration_ms"))
        {
          script.duration = j["duration_ms"].get<TimeMs>();
        }
        continue;
      }
      const TimeMs t = j.at("t").get<TimeMs>();
      if (t < 0)
      {
        throw ScriptError("line " + std::to_string(line_no) + ": negative time", line_no);
      }
      if (!script.commands.empty() && t < script.commands.back().t)
      {
        throw ScriptError("line " + std::to_string(line_no) + ": time goes backwards", line_no);
      }
      if (j.contains("cmd"))
      {
        const auto cmd = j["cmd"].get<std::string>();
        if (cmd == "answer")
        {
          script.commands.push_back(
            {t, AnswerCommand{j.at("item").get<std::string>(), j.at("choice").get<std::size_t>()}});
        }
        else if (cmd == "finish_explore")
        {
          script.commands.push_back({t, FinishExploreCommand{}});
        }
        else
        {
          throw ScriptError("line " + std::to_string(line_no) + ": unknown command '" + cmd + "'",
                            line_no);
        }
        continue;
      }
      InputSample s;
      s.t = t;
      s.rig = j.value("rig", 0);
      s.target.yaw = number_or_nan(j, "yaw", 0.0);
      s.target.pitch = number_or_nan(j, "pitch", 0.0);
      s.target.insertion = number_or_nan(j, "insertion", 0.0);
      s.target.roll = number_or_nan(j, "roll", 0.0);
      s.target.grip = number_or_nan(j, "grip", 0.0);
      const auto last = last_input_t.find(s.rig);
      if (last != last_input_t.end() && t <= last->second)
      {
        throw ScriptError("line " + std::to_string(line_no) + ": input timestamps must increase",
                          line_no);
      }
      last_input_t[s.rig] = t;
      script.commands.push_back({t, s});
    }
    catch (const nlohmann::json::exception& e)
    {
      throw ScriptError("line " + std::to_string(line_no) + ": " + e.what(), line_no);
    }
  }
  return script;
}

Script read_script(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
  {
    throw FileError("cannot open script file '" + path.string() + "'", path.string());
  }
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_script(text);
}

void write_script(std::ostream& out, const Script& script)
{
  nlohmann::ordered_json header{{"script", kScriptSchema}};
  if (script.duration)
  {
    header["duration_ms"] = *script.duration;
  }
  out << header.dump() << '\n';
  for (const auto& c : script.commands)
  {
    nlohmann::ordered_json j{{"t", c.t}};
    if (const auto* s = std::get_if<InputSample>(&c.command))
    {
      if (s->rig != 0)
      {
        j["rig"] = s->rig;
      }
      j["yaw"] = s->target.yaw;
      j["pitch"] = s->target.pitch;
      j["insertion"] = s->target.insertion;
      j["roll"] = s->target.roll;
      j["grip"] = s->target.grip;
    }
    else if (const auto* a = std::get_if<AnswerCommand>(&c.command))
    {
      j["cmd"] = "answer";
      j["item"] = a->item;
      j["choice"] = a->choice;
    }
    else
    {
      j["cmd"] = "finish_explore";
    }
    out << j.dump() << '\n';
  }
}

void write_script(const std::filesystem::path& path, const Script& script)
{
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
  {
    throw FileError("cannot create script file '" + path.string() + "'", path.string());
  }
  write_script(out, script);
}

void run_script(SessionEngine& engine, const Script& script, TimeMs duration, SessionSink& sink)
{
  std::size_t next = 0;
  const auto& commands = script.commands;
  while (engine.now() < duration)
  {
    while (next < commands.size() && commands[next].t <= engine.now())
    {
      engine.submit(commands[next].command);
      ++next;
    }
    engine.step(sink);
  }
}

}  // namespace palpatron
