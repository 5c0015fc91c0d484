#pragma once

#include "palpatron/config.hpp"
#include "palpatron/types.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace palpatron::cli
{

enum ExitCode : int
{
  kOk = 0,
  kDivergence = 1,
  kUsage = 2,  // bad arguments, missing file, invalid config or script
  kCorrupt = 3,  // malformed, truncated or inconsistent session file
};

/// Session storage root: $PALPATRON_DATA_DIR, else ./sessions.
std::filesystem::path data_dir();

/// Defaults, then the config file, then `key=value` overrides in order.
Config load_config(const std::optional<std::filesystem::path>& file, const std::vector<std::string>& overrides);

struct SimulateOptions
{
  Scenario scenario = Scenario::Healthy;
  std::uint64_t seed = 0;
  std::filesystem::path script;
  std::optional<std::filesystem::path> out;
  std::optional<std::filesystem::path> config_file;
  std::vector<std::string> overrides;
  /// Ticks to run; the script's duration when empty.
  std::optional<TimeMs> duration;
  /// Run the familiarization phase first (skipped by default for scripted runs).
  bool familiarize = false;
  std::optional<std::filesystem::path> mesh;
};

struct AssessOptions
{
  std::filesystem::path session;
  std::optional<std::string> band;  // "lo,hi"
  std::string format = "json";
  std::optional<std::filesystem::path> out;
};

struct ReplayOptions
{
  std::filesystem::path session;
  bool verify = false;
  std::optional<double> frame_rate;
};

struct ServeOptions
{
  std::string address = "127.0.0.1";
  std::uint16_t port = 8080;
  std::optional<std::filesystem::path> data_dir;
  std::optional<std::filesystem::path> web_root;
  std::optional<std::filesystem::path> mesh;
  std::optional<std::filesystem::path> config_file;
  std::vector<std::string> overrides;
  bool once = false;
};

struct ScriptOptions
{
  std::string kind = "sweep";  // sweep | dense | taps | press
  Scenario scenario = Scenario::Healthy;
  std::uint64_t seed = 0;
  std::optional<std::filesystem::path> config_file;
  std::vector<std::string> overrides;
  std::optional<std::filesystem::path> out;
  int taps = 24;
  double jitter = 0.0;
  std::uint64_t tap_seed = 1;
  double depth = 5.0;   // press
  double speed = 2.0;   // press, mm/s
  std::optional<std::string> answers;  // "item=choice,..." appended after the motion
};

struct CalibrateOptions
{
  Scenario scenario = Scenario::Healthy;
  std::uint64_t seed = 0;
  std::optional<std::filesystem::path> config_file;
  std::vector<std::string> overrides;
  std::string jitters = "0,0.02,0.05,0.1,0.2,0.3,0.4,0.6";
  int taps = 24;
  std::uint64_t tap_seed = 1;
};

// Each command reports to `out`/`err` and returns an ExitCode.
int simulate(const SimulateOptions& options, std::ostream& out, std::ostream& err);
int assess(const AssessOptions& options, std::ostream& out, std::ostream& err);
int replay(const ReplayOptions& options, std::ostream& out, std::ostream& err);
int serve(const ServeOptions& options, std::ostream& out, std::ostream& err);
int script(const ScriptOptions& options, std::ostream& out, std::ostream& err);
int calibrate(const CalibrateOptions& options, std::ostream& out, std::ostream& err);

}  // namespace palpatron::cli
