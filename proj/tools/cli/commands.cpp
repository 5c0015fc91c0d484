#include "commands.hpp"

#include "palpatron/assess.hpp"
#include "palpatron/error.hpp"
#include "palpatron/haptics.hpp"
#include "palpatron/mesh.hpp"
#include "palpatron/record.hpp"
#include "palpatron/script.hpp"
#include "palpatron/session.hpp"
#include "palpatron/synthetic.hpp"
#include "palpatron/tissue.hpp"

#include "../server/server.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace palpatron::cli
{
namespace
{

class NullSink : public SessionSink
{
public:
  void on_event(const Event&) override {}
  void on_tick(const HapticTick&) override {}
};

std::vector<std::string> split(std::string_view text, char sep)
{
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (start <= text.size())
  {
    const auto end = std::min(text.find(sep, start), text.size());
    parts.emplace_back(text.substr(start, end - start));
    start = end + 1;
  }
  return parts;
}

double parse_double(const std::string& text, std::string_view what)
{
  std::size_t used = 0;
  double value = 0.0;
  try
  {
    value = std::stod(text, &used);
  }
  catch (const std::exception&)
  {
    used = 0;
  }
  if (used == 0 || used != text.size())
  {
    throw ConfigError("invalid " + std::string(what) + " '" + text + "'");
  }
  return value;
}

ForceBand parse_band(const std::string& text)
{
  const auto parts = split(text, ',');
  if (parts.size() != 2)
  {
    throw ConfigError("--band expects lo,hi, got '" + text + "'");
  }
  ForceBand band{parse_double(parts[0], "band bound"), parse_double(parts[1], "band bound")};
  if (!(band.low > 0.0 && band.low < band.high))
  {
    throw ConfigError("--band needs 0 < lo < hi, got '" + text + "'");
  }
  return band;
}

/// Runs `body`, mapping library exceptions onto exit codes.
int guarded(std::ostream& err, const std::function<int()>& body)
{
  try
  {
    return body();
  }
  catch (const ReplayError& e)
  {
    err << "error: " << e.what() << '\n';
    return e.kind() == ReplayErrorKind::Io ? kUsage : kCorrupt;
  }
  catch (const OrderError& e)
  {
    err << "error: " << e.what() << '\n';
    return kCorrupt;
  }
  catch (const FileError& e)
  {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }
  catch (const ScriptError& e)
  {
    err << "error: script";
    if (e.line() > 0)
    {
      err << " line " << e.line();
    }
    err << ": " << e.what() << '\n';
    return kUsage;
  }
  catch (const ConfigError& e)
  {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }
  catch (const MeshError& e)
  {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }
}

void emit(const std::optional<std::filesystem::path>& path, std::ostream& out, const std::string& text)
{
  if (!path)
  {
    out << text;
    return;
  }
  if (path->has_parent_path())
  {
    std::filesystem::create_directories(path->parent_path());
  }
  std::ofstream file(*path, std::ios::binary);
  if (!file || !(file << text) || !file.flush())
  {
    throw FileError("cannot write '" + path->string() + "'", path->string());
  }
}

std::shared_ptr<const TissueModel> make_model(Scenario scenario, std::uint64_t seed, const Config& config,
                                              const std::optional<std::filesystem::path>& mesh)
{
  if (!mesh)
  {
    return std::make_shared<const TissueModel>(build_scenario(scenario, seed, tissue_config(config)));
  }
  const SurfaceMesh base = read_palpmesh(*mesh);
  return std::make_shared<const TissueModel>(build_scenario(scenario, seed, tissue_config(config), &base));
}

/// Appends finish_explore and the quiz answers after the end of the motion.
void append_answers(Script& script, const std::string& answers)
{
  TimeMs t = script.effective_duration();
  script.commands.push_back({t, FinishExploreCommand{}});
  for (const auto& entry : split(answers, ','))
  {
    const auto eq = entry.find('=');
    if (eq == std::string::npos)
    {
      throw ConfigError("--answers expects item=choice pairs, got '" + entry + "'");
    }
    const double choice = parse_double(entry.substr(eq + 1), "answer choice");
    if (choice < 0.0 || choice != static_cast<double>(static_cast<std::size_t>(choice)))
    {
      throw ConfigError("answer choice must be a non-negative integer, got '" + entry + "'");
    }
    script.commands.push_back({++t, AnswerCommand{entry.substr(0, eq), static_cast<std::size_t>(choice)}});
  }
  script.duration = t + 1;
}

}  // namespace

std::filesystem::path data_dir()
{
  if (const char* env = std::getenv("PALPATRON_DATA_DIR"); env != nullptr && *env != '\0')
  {
    return env;
  }
  return "sessions";
}

Config load_config(const std::optional<std::filesystem::path>& file, const std::vector<std::string>& overrides)
{
  Config config;
  if (file)
  {
    config.merge_file(*file);
  }
  for (const auto& assignment : overrides)
  {
    config.apply_override(assignment);
  }
  return config;
}

int simulate(const SimulateOptions& options, std::ostream& out, std::ostream& err)
{
  return guarded(err, [&] {
    const Script script = read_script(options.script);
    Config config = load_config(options.config_file, options.overrides);
    if (!options.familiarize)
    {
      config.set("session.familiarize", 0.0);
    }
    const auto model = make_model(options.scenario, options.seed, config, options.mesh);
    std::optional<MeshRef> mesh;
    if (options.mesh)
    {
      mesh = mesh_ref(*options.mesh);
    }
    const auto path = options.out.value_or(data_dir() / ("simulate-" + std::string(to_string(options.scenario)) +
                                                         "-" + std::to_string(options.seed) + ".jsonl"));
    const TimeMs duration = options.duration.value_or(script.effective_duration());

    SessionEngine engine(model, config, options.seed);
    RecordWriter writer(path, make_header(options.scenario, options.seed, config, "simulate",
                                          std::string(kVirtualEpoch), mesh));
    const auto start = std::chrono::steady_clock::now();
    run_script(engine, script, duration, writer);
    writer.close();
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out << "wrote " << path.string() << ": " << writer.ticks_written() << " ticks, phase "
        << to_string(engine.phase()) << ", " << std::fixed << std::setprecision(2) << seconds << " s\n";
    return static_cast<int>(kOk);
  });
}

int assess(const AssessOptions& options, std::ostream& out, std::ostream& err)
{
  return guarded(err, [&] {
    if (options.format != "json" && options.format != "csv")
    {
      throw ConfigError("--format must be json or csv, got '" + options.format + "'");
    }
    const std::optional<ForceBand> override_band =
      options.band ? std::optional<ForceBand>(parse_band(*options.band)) : std::nullopt;
    const SessionRecord record = read_session(options.session);
    const auto model = model_for(record.header);
    const ForceBand band = override_band.value_or(force_band(record.header.config, record.header.scenario));
    const AssessmentReport report =
      assess_session(*model, record.ticks, band, assess_config(record.header.config));
    if (options.format == "csv")
    {
      emit(options.out, out, episodes_csv(report));
    }
    else
    {
      emit(options.out, out, to_json(report, *model).dump(2) + "\n");
    }
    return static_cast<int>(kOk);
  });
}

int replay(const ReplayOptions& options, std::ostream& out, std::ostream& err)
{
  return guarded(err, [&] {
    if (options.verify)
    {
      const VerifyResult result = replay_verify(options.session);
      if (result.identical)
      {
        out << "identical: " << result.ticks_checked << " ticks\n";
        return static_cast<int>(kOk);
      }
      out << "divergent at tick " << result.first_divergent_tick.value_or(0) << " (line "
          << result.first_divergent_line.value_or(0) << ")\n"
          << "  regenerated: " << result.expected << '\n'
          << "  recorded:    " << result.actual << '\n';
      return static_cast<int>(kDivergence);
    }
    const SessionRecord record = read_session(options.session);
    const double rate = options.frame_rate.value_or(record.header.config.get("server.frame_rate"));
    const PlaybackSummary summary = playback(record, rate);
    out << "ticks " << summary.ticks << ", events " << summary.events << ", frames " << summary.frames
        << '\n';
    return static_cast<int>(kOk);
  });
}

int serve(const ServeOptions& options, std::ostream& out, std::ostream& err)
{
  return guarded(err, [&] {
    server::ServerOptions server_options;
    server_options.address = options.address;
    server_options.port = options.port;
    server_options.config = load_config(options.config_file, options.overrides);
    server_options.data_dir = options.data_dir.value_or(data_dir());
    server_options.web_root = options.web_root;
    server_options.mesh = options.mesh;
    server_options.once = options.once;
    server_options.log = &out;
    server::Server server(std::move(server_options));
    server.run();
    return static_cast<int>(kOk);
  });
}

namespace
{

/// Force a scripted trainee aims for: the middle of the scenario's band.
double band_center(const Config& config, Scenario scenario)
{
  const ForceBand band = force_band(config, scenario);
  return 0.5 * (band.low + band.high);
}

}  // namespace

int script(const ScriptOptions& options, std::ostream& out, std::ostream& err)
{
  return guarded(err, [&] {
    const Config config = load_config(options.config_file, options.overrides);
    const auto model = make_model(options.scenario, options.seed, config, std::nullopt);
    const FulcrumRig rig = rig_from_config(config, 0);
    const ServoConfig servo = servo_config(config);
    const double target_force = band_center(config, options.scenario);

    Script result;
    if (options.kind == "sweep" || options.kind == "dense")
    {
      SweepOptions sweep;
      if (options.kind == "dense")
      {
        sweep.subdivisions = 2;
        sweep.adaptive_depth = false;
      }
      sweep.target_force = target_force;
      result = sweep_script(*model, rig, servo, sweep);
    }
    else if (options.kind == "taps")
    {
      TapSessionParams params;
      params.taps = options.taps;
      params.jitter = options.jitter;
      params.seed = options.tap_seed;
      params.target_force = target_force;
      result = tap_session(*model, rig, servo, params);
    }
    else if (options.kind == "press")
    {
      result = quasi_static_press(*model, rig, servo, options.depth, options.speed);
    }
    else
    {
      throw ConfigError("unknown script kind '" + options.kind + "' (sweep, dense, taps, press)");
    }

    if (options.answers)
    {
      append_answers(result, *options.answers);
    }

    std::ostringstream text;
    write_script(text, result);
    emit(options.out, out, text.str());
    if (options.out)
    {
      out << "wrote " << options.out->string() << ": " << result.commands.size() << " commands, "
          << result.effective_duration() << " ms\n";
    }
    return static_cast<int>(kOk);
  });
}

int calibrate(const CalibrateOptions& options, std::ostream& out, std::ostream& err)
{
  return guarded(err, [&] {
    Config config = load_config(options.config_file, options.overrides);
    config.set("session.familiarize", 0.0);
    const auto model = make_model(options.scenario, options.seed, config, std::nullopt);
    const FulcrumRig rig = rig_from_config(config, 0);
    const ServoConfig servo = servo_config(config);

    out << "jitter  taps  peak_cv  speed_cv  in_band  coverage  class\n";
    for (const auto& item : split(options.jitters, ','))
    {
      TapSessionParams params;
      params.taps = options.taps;
      params.jitter = parse_double(item, "jitter");
      params.seed = options.tap_seed;
      params.target_force = band_center(config, options.scenario);
      const Script taps = tap_session(*model, rig, servo, params);

      SessionEngine engine(model, config, options.seed);
      NullSink sink;
      run_script(engine, taps, taps.effective_duration(), sink);
      const AssessmentReport report = engine.report();
      const auto& m = report.metrics;
      const auto cv = [](const std::optional<double>& v) {
        std::ostringstream s;
        if (v)
        {
          s << std::fixed << std::setprecision(4) << *v;
        }
        else
        {
          s << "-";
        }
        return s.str();
      };
      out << std::left << std::setw(8) << item << std::setw(6) << m.tap_count << std::setw(9)
          << cv(m.peak_force_cv) << std::setw(10) << cv(m.speed_cv) << std::setw(9) << std::fixed
          << std::setprecision(3) << m.in_band_fraction << std::setw(10) << m.coverage_fraction
          << to_string(report.classification) << '\n';
    }
    return static_cast<int>(kOk);
  });
}

}  // namespace palpatron::cli
