#include "palpatron/error.hpp"
#include "palpatron/record.hpp"
#include "palpatron/script.hpp"
#include "palpatron/synthetic.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

namespace palpatron
{
namespace
{

using testing::TempDir;

std::string slurp(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void spit(const std::filesystem::path& path, const std::string& data)
{
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << data;
}

std::vector<std::string> lines_of(const std::string& data)
{
  std::vector<std::string> out;
  std::istringstream in(data);
  for (std::string line; std::getline(in, line);)
  {
    out.push_back(line);
  }
  return out;
}

std::string join(const std::vector<std::string>& lines)
{
  std::string out;
  for (const auto& l : lines)
  {
    out += l;
    out += '\n';
  }
  return out;
}

/// Records a short tap session and returns its path.
std::filesystem::path record_taps(const TempDir& dir, const std::string& name, Scenario scenario = Scenario::Healthy,
                                  std::uint64_t seed = 1)
{
  Config config;
  config.set("session.familiarize", 0);
  const auto tissue = testing::model(scenario, seed, config);
  const FulcrumRig rig = rig_from_config(config, 0);
  Script script = tap_session(*tissue, rig, servo_config(config), TapSessionParams{3, 0.1, 1});
  const auto path = dir / name;
  SessionEngine engine(tissue, config, seed);
  RecordWriter writer(path, make_header(scenario, seed, config, "simulate", std::string(kVirtualEpoch)));
  run_script(engine, script, script.effective_duration(), writer);
  writer.close();
  return path;
}

TEST(Record, TickLineRoundTrip)
{
  HapticTick tick = testing::force_tick(17, 2.25);
  tick.tip = Vec3(0.1, -1.0 / 3.0, 1e-17);
  tick.tip_velocity = Vec3(-0.0, 5e300, 1.0);
  tick.penetration = 0.7;
  tick.contact_point = Vec3(1, 2, 3);
  tick.patch_id = 41;
  const std::string line = tick_line(tick);
  const HapticTick back = parse_tick(line);
  EXPECT_EQ(tick_line(back), line);
  EXPECT_EQ(back.tip, tick.tip);
  EXPECT_EQ(back.force, tick.force);
  EXPECT_EQ(back.patch_id, tick.patch_id);
}

TEST(Record, HeaderRoundTrip)
{
  Config c;
  c.set("tissue.k0", 612.5);
  const RecordHeader h = make_header(Scenario::Tumoral, 99, c, "serve", "2026-01-02T03:04:05Z",
                                     MeshRef{"/x/y.palpmesh", "fnv1a64:0000000000000001"});
  EXPECT_EQ(h.config_hash, c.hash());
  EXPECT_EQ(parse_header(header_line(h)), h);
}

TEST(Record, WriteReadRoundTrip)
{
  TempDir dir("record");
  const auto path = record_taps(dir, "a.jsonl");
  const SessionRecord r = read_session(path, {true, true});
  EXPECT_EQ(r.header.scenario, Scenario::Healthy);
  EXPECT_EQ(r.header.seed, 1U);
  ASSERT_FALSE(r.ticks.empty());
  EXPECT_EQ(r.ticks.front().t, 0);
  for (std::size_t i = 1; i < r.ticks.size(); ++i)
  {
    EXPECT_EQ(r.ticks[i].t, r.ticks[i - 1].t + 1);
  }
  const auto file_lines = lines_of(slurp(path));
  ASSERT_EQ(file_lines.size(), r.body.size() + 1);
  std::size_t k = 0;
  for (std::size_t i = 0; i < r.body.size(); ++i)
  {
    if (r.body[i].starts_with(R"({"k":"tick")"))
    {
      EXPECT_EQ(tick_line(r.ticks[k++]), r.body[i]);
    }
  }
  EXPECT_EQ(k, r.ticks.size());
}

TEST(Record, SameInputsGiveIdenticalFiles)
{
  TempDir dir("record");
  const auto a = record_taps(dir, "a.jsonl", Scenario::Tumoral, 7);
  const auto b = record_taps(dir, "b.jsonl", Scenario::Tumoral, 7);
  EXPECT_EQ(slurp(a), slurp(b));
}

TEST(Record, VerifyIdentical)
{
  TempDir dir("record");
  const auto path = record_taps(dir, "a.jsonl");
  const VerifyResult v = replay_verify(path);
  EXPECT_TRUE(v.identical);
  EXPECT_EQ(v.ticks_checked, read_session(path).ticks.size());
}

TEST(Record, VerifyFindsAlteredTick)
{
  TempDir dir("record");
  const auto path = record_taps(dir, "a.jsonl");
  auto lines = lines_of(slurp(path));
  std::size_t tick_index = 0;
  std::size_t altered_line = 0;
  std::size_t altered_tick = 0;
  for (std::size_t i = 1; i < lines.size(); ++i)
  {
    if (!lines[i].starts_with(R"({"k":"tick")"))
    {
      continue;
    }
    HapticTick t = parse_tick(lines[i]);
    if (tick_index > 100 && t.force.norm() > 1.0)
    {
      t.force.x() = std::nextafter(t.force.x(), 10.0);
      lines[i] = tick_line(t);
      altered_line = i + 1;
      altered_tick = tick_index;
      break;
    }
    ++tick_index;
  }
  ASSERT_GT(altered_line, 0U);
  spit(path, join(lines));
  const VerifyResult v = replay_verify(path);
  EXPECT_FALSE(v.identical);
  EXPECT_EQ(v.first_divergent_line, altered_line);
  EXPECT_EQ(v.first_divergent_tick, altered_tick);
  EXPECT_EQ(v.actual, lines[altered_line - 1]);
  EXPECT_NE(v.expected, v.actual);
}

TEST(Record, VerifyFindsMissingTail)
{
  TempDir dir("record");
  const auto path = record_taps(dir, "a.jsonl");
  auto lines = lines_of(slurp(path));
  // Append one tick that the engine would never produce at that time.
  HapticTick extra = parse_tick(lines.back().starts_with(R"({"k":"tick")") ? lines.back() : lines[lines.size() - 2]);
  extra.t += 1;
  extra.tip.z() += 100.0;
  lines.push_back(tick_line(extra));
  spit(path, join(lines));
  EXPECT_FALSE(replay_verify(path).identical);
}

TEST(Record, HeaderOnlyIsValid)
{
  TempDir dir("record");
  const auto path = dir / "h.jsonl";
  spit(path, header_line(make_header(Scenario::Healthy, 1, Config(), "simulate", std::string(kVirtualEpoch))) + "\n");
  const SessionRecord r = read_session(path);
  EXPECT_TRUE(r.ticks.empty());
  EXPECT_TRUE(r.events.empty());
  EXPECT_TRUE(replay_verify(path).identical);
  EXPECT_EQ(playback(r, 60.0).frames, 0U);
}

ReplayErrorKind kind_of(const std::filesystem::path& path, std::size_t* line = nullptr,
                        std::uint64_t* offset = nullptr)
{
  try
  {
    read_session(path);
  }
  catch (const ReplayError& e)
  {
    if (line) *line = e.line();
    if (offset) *offset = e.offset();
    return e.kind();
  }
  ADD_FAILURE() << "no error for " << path;
  return ReplayErrorKind::Io;
}

TEST(Record, Errors)
{
  TempDir dir("record");
  const auto path = record_taps(dir, "a.jsonl");
  const std::string data = slurp(path);
  const auto lines = lines_of(data);

  spit(dir / "empty.jsonl", "");
  EXPECT_EQ(kind_of(dir / "empty.jsonl"), ReplayErrorKind::Schema);

  const std::string cut = data.substr(0, data.size() - 7);
  spit(dir / "cut.jsonl", cut);
  std::uint64_t offset = 0;
  EXPECT_EQ(kind_of(dir / "cut.jsonl", nullptr, &offset), ReplayErrorKind::Truncated);
  EXPECT_EQ(offset, cut.rfind('\n') + 1);

  auto corrupt = lines;
  corrupt[5] = corrupt[5].substr(0, corrupt[5].size() / 2) + "}";
  spit(dir / "corrupt.jsonl", join(corrupt));
  std::size_t line = 0;
  EXPECT_EQ(kind_of(dir / "corrupt.jsonl", &line), ReplayErrorKind::Parse);
  EXPECT_EQ(line, 6U);

  auto tampered = lines;
  auto header = nlohmann::json::parse(tampered[0]);
  header["config"]["tissue.k0"] = 601.0;
  tampered[0] = header.dump();
  spit(dir / "hash.jsonl", join(tampered));
  EXPECT_EQ(kind_of(dir / "hash.jsonl"), ReplayErrorKind::HashMismatch);

  auto schema = lines;
  header = nlohmann::json::parse(schema[0]);
  header["schema"] = "palpsession/9";
  schema[0] = header.dump();
  spit(dir / "schema.jsonl", join(schema));
  EXPECT_EQ(kind_of(dir / "schema.jsonl"), ReplayErrorKind::Schema);

  auto backwards = lines;
  std::swap(backwards[3], backwards[backwards.size() - 1]);
  spit(dir / "order.jsonl", join(backwards));
  EXPECT_EQ(kind_of(dir / "order.jsonl"), ReplayErrorKind::Schema);

  EXPECT_THROW(read_session(dir / "missing.jsonl"), FileError);
}

TEST(Record, WriterFailsOnUnwritablePath)
{
  TempDir dir("record");
  spit(dir / "file", "x");
  EXPECT_THROW(RecordWriter(dir / "file" / "sub" / "a.jsonl",
                            make_header(Scenario::Healthy, 1, Config(), "simulate", std::string(kVirtualEpoch))),
               FileError);
}

TEST(Record, PlaybackFrames)
{
  TempDir dir("record");
  const auto path = record_taps(dir, "a.jsonl");
  const SessionRecord r = read_session(path);
  std::size_t seen = 0;
  const PlaybackSummary s = playback(r, 60.0, [&](const HapticTick&) { ++seen; });
  EXPECT_EQ(s.ticks, r.ticks.size());
  EXPECT_EQ(s.events, r.events.size());
  EXPECT_EQ(s.frames, seen);
  const double expected = static_cast<double>(r.ticks.size()) * 60.0 / 1000.0;
  EXPECT_NEAR(static_cast<double>(s.frames), expected, 2.0);
}

}  // namespace
}  // namespace palpatron
