#include "palpatron/record.hpp"

#include "palpatron/error.hpp"

#include <nlohmann/json.hpp>

#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <iterator>
#include <sstream>

namespace palpatron
{
namespace
{

void put_number(std::string& out, double v)
{
  if (!std::isfinite(v))
  {
    out += "null";
    return;
  }
  if (v == 0.0 && std::signbit(v))
  {
    // A bare "-0" reads back as the integer 0.
    out += "-0.0";
    return;
  }
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, r.ptr);
}

void put_integer(std::string& out, std::int64_t v)
{
  char buf[24];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, r.ptr);
}

void put_vec(std::string& out, const Vec3& v)
{
  out += '[';
  put_number(out, v.x());
  out += ',';
  put_number(out, v.y());
  out += ',';
  put_number(out, v.z());
  out += ']';
}

Vec3 vec_from(const nlohmann::json& j)
{
  if (!j.is_array() || j.size() != 3)
  {
    throw nlohmann::json::type_error::create(302, "expected a 3-vector", nullptr);
  }
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

std::string read_file(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
  {
    throw FileError("cannot open '" + path.string() + "'", path.string());
  }
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

bool is_tick_line(std::string_view line)
{
  return line.starts_with(R"({"k":"tick")");
}

struct Line
{
  std::string_view text;
  std::size_t number;       // 1-based
  std::uint64_t end_offset; // just past the newline
};

/// Splits into complete lines; throws Truncated when the data does not end in a newline.
std::vector<Line> split_lines(std::string_view data)
{
  std::vector<Line> lines;
  std::size_t pos = 0;
  while (pos < data.size())
  {
    const auto nl = data.find('\n', pos);
    if (nl == std::string_view::npos)
    {
      const std::uint64_t valid = lines.empty() ? 0 : lines.back().end_offset;
      throw ReplayError(ReplayErrorKind::Truncated,
                        "truncated session file: line " + std::to_string(lines.size() + 1) +
                          " is incomplete; last valid offset is " + std::to_string(valid),
                        lines.size() + 1, valid);
    }
    lines.push_back({data.substr(pos, nl - pos), lines.size() + 1, nl + 1});
    pos = nl + 1;
  }
  return lines;
}

}  // namespace

RecordHeader make_header(Scenario scenario, std::uint64_t seed, const Config& config,
                         std::string mode, std::string created_at, std::optional<MeshRef> mesh)
{
  RecordHeader h;
  h.scenario = scenario;
  h.seed = seed;
  h.config = config;
  h.config_hash = config.hash();
  h.mode = std::move(mode);
  h.created_at = std::move(created_at);
  h.mesh = std::move(mesh);
  return h;
}

MeshRef mesh_ref(const std::filesystem::path& path)
{
  return {std::filesystem::absolute(path).string(), fnv1a64_hex(read_file(path))};
}

std::string utc_now()
{
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string header_line(const RecordHeader& header)
{
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
  for (const auto& [key, value] : header.config.values())
  {
    config[key] = value;
  }
  nlohmann::ordered_json j;
  j["schema"] = header.schema;
  j["scenario"] = to_string(header.scenario);
  j["seed"] = header.seed;
  j["config_hash"] = header.config_hash;
  j["created_at"] = header.created_at;
  j["mode"] = header.mode;
  j["config"] = std::move(config);
  if (header.mesh)
  {
    j["mesh"] = {{"path", header.mesh->path}, {"hash", header.mesh->hash}};
  }
  return j.dump();
}

std::string tick_line(const HapticTick& tick)
{
  std::string out;
  out.reserve(320);
  out += R"({"k":"tick","t":)";
  put_integer(out, tick.t);
  out += R"(,"r":)";
  put_integer(out, tick.rig);
  out += R"(,"q":[)";
  put_number(out, tick.state.yaw);
  out += ',';
  put_number(out, tick.state.pitch);
  out += ',';
  put_number(out, tick.state.insertion);
  out += ',';
  put_number(out, tick.state.roll);
  out += ',';
  put_number(out, tick.state.grip);
  out += R"(],"tip":)";
  put_vec(out, tick.tip);
  out += R"(,"v":)";
  put_vec(out, tick.tip_velocity);
  out += R"(,"dir":)";
  put_vec(out, tick.direction);
  out += R"(,"f":)";
  put_vec(out, tick.force);
  out += tick.contact ? R"(,"c":true,"cp":)" : R"(,"c":false,"cp":)";
  if (tick.contact_point)
  {
    put_vec(out, *tick.contact_point);
  }
  else
  {
    out += "null";
  }
  out += R"(,"pen":)";
  put_number(out, tick.penetration);
  out += R"(,"patch":)";
  if (tick.patch_id)
  {
    put_integer(out, *tick.patch_id);
  }
  else
  {
    out += "null";
  }
  out += '}';
  return out;
}

std::string event_line(const Event& event)
{
  std::string out = R"({"k":"event","t":)";
  put_integer(out, event.t);
  out += R"(,"kind":)";
  out += nlohmann::json(event.kind).dump();
  out += R"(,"payload":)";
  out += event.payload.dump();
  out += '}';
  return out;
}

std::string_view to_string(ReplayErrorKind kind)
{
  switch (kind)
  {
    case ReplayErrorKind::Io: return "io";
    case ReplayErrorKind::Schema: return "schema";
    case ReplayErrorKind::Truncated: return "truncated";
    case ReplayErrorKind::Parse: return "parse";
    case ReplayErrorKind::HashMismatch: return "hash_mismatch";
  }
  return "io";
}

RecordHeader parse_header(std::string_view line)
{
  nlohmann::json j;
  try
  {
    j = nlohmann::json::parse(line);
  }
  catch (const nlohmann::json::exception& e)
  {
    throw ReplayError(ReplayErrorKind::Parse, std::string("line 1: malformed header: ") + e.what(), 1);
  }
  if (!j.is_object() || !j.contains("schema") || !j["schema"].is_string())
  {
    throw ReplayError(ReplayErrorKind::Schema, "line 1: missing session header", 1);
  }
  if (j["schema"].get<std::string>() != kSessionSchema)
  {
    throw ReplayError(ReplayErrorKind::Schema,
                      "unsupported session schema '" + j["schema"].get<std::string>() +
                        "' (expected " + std::string(kSessionSchema) + ")",
                      1);
  }
  RecordHeader h;
  try
  {
    const auto scenario = parse_scenario(j.at("scenario").get<std::string>());
    if (!scenario)
    {
      throw ReplayError(ReplayErrorKind::Schema, "line 1: unknown scenario", 1);
    }
    h.scenario = *scenario;
    h.seed = j.at("seed").get<std::uint64_t>();
    h.config_hash = j.at("config_hash").get<std::string>();
    h.created_at = j.at("created_at").get<std::string>();
    h.mode = j.at("mode").get<std::string>();
    for (const auto& [key, value] : j.at("config").items())
    {
      h.config.set(key, value.get<double>());
    }
    if (j.contains("mesh"))
    {
      h.mesh = MeshRef{j["mesh"].at("path").get<std::string>(), j["mesh"].at("hash").get<std::string>()};
    }
  }
  catch (const nlohmann::json::exception& e)
  {
    throw ReplayError(ReplayErrorKind::Schema, std::string("line 1: invalid header: ") + e.what(), 1);
  }
  catch (const ConfigError& e)
  {
    throw ReplayError(ReplayErrorKind::Schema, std::string("line 1: invalid config snapshot: ") + e.what(), 1);
  }
  if (h.config.hash() != h.config_hash)
  {
    throw ReplayError(ReplayErrorKind::HashMismatch,
                      "config snapshot hashes to " + h.config.hash() + " but header records " +
                        h.config_hash,
                      1);
  }
  return h;
}

HapticTick parse_tick(std::string_view line)
{
  const auto j = nlohmann::json::parse(line);
  HapticTick tick;
  tick.t = j.at("t").get<TimeMs>();
  tick.rig = j.at("r").get<int>();
  const auto& q = j.at("q");
  if (!q.is_array() || q.size() != 5)
  {
    throw nlohmann::json::type_error::create(302, "q must hold 5 numbers", nullptr);
  }
  tick.state = {q[0].get<double>(), q[1].get<double>(), q[2].get<double>(), q[3].get<double>(),
                q[4].get<double>()};
  tick.tip = vec_from(j.at("tip"));
  tick.tip_velocity = vec_from(j.at("v"));
  tick.direction = vec_from(j.at("dir"));
  tick.force = vec_from(j.at("f"));
  tick.contact = j.at("c").get<bool>();
  if (!j.at("cp").is_null())
  {
    tick.contact_point = vec_from(j["cp"]);
  }
  tick.penetration = j.at("pen").get<double>();
  if (!j.at("patch").is_null())
  {
    tick.patch_id = j["patch"].get<std::uint32_t>();
  }
  return tick;
}

Event parse_event(std::string_view line)
{
  const auto j = nlohmann::json::parse(line);
  Event e;
  e.t = j.at("t").get<TimeMs>();
  e.kind = j.at("kind").get<std::string>();
  e.payload = j.at("payload");
  return e;
}

SessionRecord read_session(const std::filesystem::path& path, const ReadOptions& options)
{
  const std::string data = read_file(path);
  if (data.empty())
  {
    throw ReplayError(ReplayErrorKind::Schema, "empty session file: no header", 1, 0);
  }
  const auto lines = split_lines(data);

  SessionRecord record;
  record.header = parse_header(lines.front().text);

  TimeMs last_t = std::numeric_limits<TimeMs>::min();
  for (std::size_t i = 1; i < lines.size(); ++i)
  {
    const auto& line = lines[i];
    const std::uint64_t valid_offset = lines[i - 1].end_offset;
    try
    {
      TimeMs t = 0;
      if (is_tick_line(line.text))
      {
        if (options.parse_ticks)
        {
          record.ticks.push_back(parse_tick(line.text));
          t = record.ticks.back().t;
        }
        else
        {
          t = last_t;
        }
      }
      else
      {
        auto j = nlohmann::json::parse(line.text);
        if (!j.is_object() || j.value("k", "") != "event")
        {
          throw ReplayError(ReplayErrorKind::Parse,
                            "line " + std::to_string(line.number) + ": not a tick or event record",
                            line.number, valid_offset);
        }
        record.events.push_back(
          Event{j.at("t").get<TimeMs>(), j.at("kind").get<std::string>(), j.at("payload")});
        t = record.events.back().t;
      }
      if (t < last_t)
      {
        throw ReplayError(ReplayErrorKind::Schema,
                          "line " + std::to_string(line.number) + ": timestamp goes backwards",
                          line.number, valid_offset);
      }
      last_t = t;
    }
    catch (const nlohmann::json::exception& e)
    {
      throw ReplayError(ReplayErrorKind::Parse,
                        "line " + std::to_string(line.number) + ": " + e.what(), line.number,
                        valid_offset);
    }
    if (options.keep_body)
    {
      record.body.emplace_back(line.text);
    }
  }
  return record;
}

RecordWriter::RecordWriter(const std::filesystem::path& path, const RecordHeader& header,
                           std::size_t queue_batches)
  : path_(path), capacity_(std::max<std::size_t>(1, queue_batches))
{
  if (path.has_parent_path())
  {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  file_.open(path, std::ios::binary | std::ios::trunc);
  if (!file_)
  {
    throw FileError("cannot create session file '" + path.string() + "'", path.string());
  }
  file_ << header_line(header) << '\n';
  file_.flush();
  batch_.reserve(512);
  flusher_ = std::thread([this] { run(); });
}

RecordWriter::~RecordWriter()
{
  try
  {
    close();
  }
  catch (...)
  {
  }
}

void RecordWriter::on_event(const Event& event)
{
  push(event);
}

void RecordWriter::on_tick(const HapticTick& tick)
{
  ++ticks_;
  push(tick);
}

void RecordWriter::push(Item item)
{
  batch_.push_back(std::move(item));
  if (batch_.size() >= 512)
  {
    flush();
  }
}

void RecordWriter::flush()
{
  if (batch_.empty())
  {
    return;
  }
  std::unique_lock lock(mutex_);
  not_full_.wait(lock, [this] { return queue_.size() < capacity_ || closing_; });
  queue_.push_back(std::move(batch_));
  batch_ = {};
  batch_.reserve(512);
  not_empty_.notify_one();
}

void RecordWriter::run()
{
  std::string buffer;
  for (;;)
  {
    std::vector<Item> items;
    {
      std::unique_lock lock(mutex_);
      not_empty_.wait(lock, [this] { return !queue_.empty() || closing_; });
      if (queue_.empty())
      {
        break;
      }
      items = std::move(queue_.front());
      queue_.pop_front();
      not_full_.notify_one();
    }
    buffer.clear();
    for (const auto& item : items)
    {
      if (const auto* tick = std::get_if<HapticTick>(&item))
      {
        buffer += tick_line(*tick);
      }
      else
      {
        buffer += event_line(std::get<Event>(item));
      }
      buffer += '\n';
    }
    file_.write(buffer.data(), static_cast<std::streamsize>(buffer.size()));
    file_.flush();
    if (!file_)
    {
      std::lock_guard lock(mutex_);
      failed_ = true;
    }
  }
}

void RecordWriter::close()
{
  if (closed_)
  {
    return;
  }
  flush();
  {
    std::lock_guard lock(mutex_);
    closing_ = true;
  }
  not_empty_.notify_all();
  not_full_.notify_all();
  if (flusher_.joinable())
  {
    flusher_.join();
  }
  file_.close();
  closed_ = true;
  if (failed_)
  {
    throw FileError("failed writing session file '" + path_.string() + "'", path_.string());
  }
}

std::shared_ptr<const TissueModel> model_for(const RecordHeader& header)
{
  const TissueConfig tissue = tissue_config(header.config);
  if (!header.mesh)
  {
    return std::make_shared<const TissueModel>(build_scenario(header.scenario, header.seed, tissue));
  }
  const std::string bytes = read_file(header.mesh->path);
  const std::string hash = fnv1a64_hex(bytes);
  if (hash != header.mesh->hash)
  {
    throw ReplayError(ReplayErrorKind::HashMismatch,
                      "mesh '" + header.mesh->path + "' hashes to " + hash + " but header records " +
                        header.mesh->hash,
                      1);
  }
  const SurfaceMesh mesh = read_palpmesh(header.mesh->path);
  return std::make_shared<const TissueModel>(build_scenario(header.scenario, header.seed, tissue, &mesh));
}

VerifyResult replay_verify(const std::filesystem::path& path)
{
  const SessionRecord record = read_session(path, {false, true});
  const auto model = model_for(record.header);
  SessionEngine engine(model, record.header.config, record.header.seed);

  std::size_t tick_lines = 0;
  for (const auto& line : record.body)
  {
    tick_lines += is_tick_line(line) ? 1U : 0U;
  }
  const std::size_t steps = tick_lines / engine.rig_count();

  std::vector<std::pair<TimeMs, Command>> commands;
  for (const auto& event : record.events)
  {
    if (auto command = command_from_event(event))
    {
      commands.emplace_back(event.t, std::move(*command));
    }
  }

  VerifyResult result;
  std::size_t line_index = 0;
  std::size_t tick_index = 0;
  LineSink sink([&](std::string&& line, bool is_tick) {
    if (!result.identical)
    {
      return;
    }
    if (line_index >= record.body.size() || record.body[line_index] != line)
    {
      result.identical = false;
      result.first_divergent_line = line_index + 2;
      result.first_divergent_tick = tick_index;
      result.expected = line;
      result.actual = line_index < record.body.size() ? record.body[line_index] : std::string();
    }
    ++line_index;
    if (is_tick)
    {
      ++tick_index;
    }
  });

  std::size_t next = 0;
  for (std::size_t s = 0; s < steps && result.identical; ++s)
  {
    while (next < commands.size() && commands[next].first <= engine.now())
    {
      engine.submit(commands[next].second);
      ++next;
    }
    engine.step(sink);
  }
  if (result.identical && line_index != record.body.size())
  {
    result.identical = false;
    result.first_divergent_line = line_index + 2;
    result.first_divergent_tick = tick_index;
    result.actual = record.body[line_index];
  }
  result.ticks_checked = tick_index;
  return result;
}

PlaybackSummary playback(const SessionRecord& record, double frame_rate,
                         const std::function<void(const HapticTick&)>& on_frame)
{
  PlaybackSummary summary;
  summary.ticks = record.ticks.size();
  summary.events = record.events.size();
  if (frame_rate <= 0.0)
  {
    return summary;
  }
  const double period = 1000.0 / frame_rate;
  double next_frame = 0.0;
  for (const auto& tick : record.ticks)
  {
    if (tick.rig == 0 && static_cast<double>(tick.t) >= next_frame)
    {
      ++summary.frames;
      if (on_frame)
      {
        on_frame(tick);
      }
      next_frame += period;
      while (next_frame <= static_cast<double>(tick.t))
      {
        next_frame += period;
      }
    }
  }
  return summary;
}

}  // namespace palpatron
