#pragma once

#include "palpatron/config.hpp"
#include "palpatron/haptics.hpp"
#include "palpatron/session.hpp"
#include "palpatron/tissue.hpp"

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

namespace palpatron::testing
{

inline std::shared_ptr<const TissueModel> model(Scenario scenario, std::uint64_t seed = 1,
                                                const Config& config = Config())
{
  return std::make_shared<const TissueModel>(build_scenario(scenario, seed, tissue_config(config)));
}

/// Collects everything the engine emits.
class CaptureSink : public SessionSink
{
public:
  void on_event(const Event& event) override { events.push_back(event); }
  void on_tick(const HapticTick& tick) override { ticks.push_back(tick); }

  std::vector<Event> of_kind(std::string_view kind) const
  {
    std::vector<Event> out;
    for (const auto& e : events)
    {
      if (e.kind == kind)
      {
        out.push_back(e);
      }
    }
    return out;
  }

  std::vector<Event> events;
  std::vector<HapticTick> ticks;
};

class NullSink : public SessionSink
{
public:
  void on_event(const Event&) override {}
  void on_tick(const HapticTick&) override {}
};

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir
{
public:
  explicit TempDir(const std::string& tag)
  {
    path_ = std::filesystem::temp_directory_path() /
            ("palpatron-" + tag + "-" + std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir()
  {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
  std::filesystem::path path_;
};

/// Contact tick with the force along +z.
inline HapticTick force_tick(TimeMs t, double force, int rig = 0)
{
  HapticTick tick;
  tick.t = t;
  tick.rig = rig;
  tick.force = Vec3(0.0, 0.0, force);
  tick.contact = force > 0.0;
  tick.tip = Vec3(static_cast<double>(t) * 0.01, 0.0, 0.0);
  return tick;
}

}  // namespace palpatron::testing
