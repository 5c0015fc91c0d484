#include "commands.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace
{

using palpatron::Scenario;

const std::vector<std::string> kScenarioNames{"healthy", "cirrhotic", "tumoral", "hepatic"};

void add_config_flags(CLI::App& cmd, std::optional<std::filesystem::path>& file, std::vector<std::string>& overrides)
{
  cmd.add_option("--config", file, "Config file of key = value lines")->check(CLI::ExistingFile);
  cmd.add_option("-D,--set", overrides, "Config override key=value (repeatable)");
}

/// Scenario names are parsed after CLI11 is done; it does not convert small enums.
struct ScenarioFlag
{
  std::string name = "healthy";
  Scenario* target = nullptr;
};

void add_scenario_flags(CLI::App& cmd, ScenarioFlag& flag, Scenario& scenario, std::uint64_t& seed, bool required)
{
  flag.target = &scenario;
  auto* opt = cmd.add_option("--scenario", flag.name, "healthy | cirrhotic | tumoral | hepatic")
                ->transform(CLI::IsMember(kScenarioNames, CLI::ignore_case));
  if (required)
  {
    opt->required();
  }
  cmd.add_option("--seed", seed, "Scenario seed");
}

}  // namespace

int main(int argc, char** argv)
{
  namespace cli = palpatron::cli;

  CLI::App app{"Laparoscopic liver palpation trainer"};
  app.require_subcommand(1);

  ScenarioFlag sim_scenario;
  ScenarioFlag sc_scenario;
  ScenarioFlag cb_scenario;

  cli::SimulateOptions sim;
  auto* simulate = app.add_subcommand("simulate", "Run a scripted session in virtual time and record it");
  add_scenario_flags(*simulate, sim_scenario, sim.scenario, sim.seed, true);
  simulate->add_option("--script", sim.script, "Input script (palpscript JSONL)")->required();
  simulate->add_option("--out", sim.out, "Session file (default $PALPATRON_DATA_DIR/simulate-<scenario>-<seed>.jsonl)");
  simulate->add_option("--duration", sim.duration, "Ticks to run (default: script duration)");
  simulate->add_flag("--familiarize", sim.familiarize, "Start with the familiarization task");
  simulate->add_option("--mesh", sim.mesh, "palpmesh file replacing the generated liver");
  add_config_flags(*simulate, sim.config_file, sim.overrides);

  cli::AssessOptions as;
  auto* assess = app.add_subcommand("assess", "Assessment report of a recorded session");
  assess->add_option("session", as.session, "Session file")->required();
  assess->add_option("--band", as.band, "Force band lo,hi in N (default: scenario band)");
  assess->add_option("--format", as.format, "json | csv")->check(CLI::IsMember({"json", "csv"}));
  assess->add_option("--out", as.out, "Output file (default stdout)");

  cli::ReplayOptions rp;
  auto* replay = app.add_subcommand("replay", "Play back or verify a recorded session");
  replay->add_option("session", rp.session, "Session file")->required();
  replay->add_flag("--verify", rp.verify, "Re-simulate and compare every line");
  replay->add_option("--frame-rate", rp.frame_rate, "Playback frame rate (default: recorded server.frame_rate)");

  cli::ServeOptions sv;
  auto* serve = app.add_subcommand("serve", "Serve the palpwire/1 WebSocket and the web client");
  serve->add_option("--address", sv.address, "Bind address");
  serve->add_option("--port", sv.port, "TCP port (0 picks a free one)");
  serve->add_option("--data-dir", sv.data_dir, "Session storage (default $PALPATRON_DATA_DIR or ./sessions)");
  serve->add_option("--web-root", sv.web_root, "Directory of static web client files")->check(CLI::ExistingDirectory);
  serve->add_option("--mesh", sv.mesh, "palpmesh file replacing the generated liver");
  serve->add_flag("--once", sv.once, "Exit after the first session is finalized");
  add_config_flags(*serve, sv.config_file, sv.overrides);

  cli::ScriptOptions sc;
  auto* script = app.add_subcommand("script", "Generate a synthetic input script");
  script->add_option("kind", sc.kind, "sweep | dense | taps | press")
    ->check(CLI::IsMember({"sweep", "dense", "taps", "press"}));
  add_scenario_flags(*script, sc_scenario, sc.scenario, sc.seed, false);
  script->add_option("--out", sc.out, "Script file (default stdout)");
  script->add_option("--taps", sc.taps, "Number of taps (taps)");
  script->add_option("--jitter", sc.jitter, "Relative depth and speed spread (taps)");
  script->add_option("--tap-seed", sc.tap_seed, "Seed of the jitter draws (taps)");
  script->add_option("--depth", sc.depth, "Penetration in mm (press)");
  script->add_option("--speed", sc.speed, "Descent speed in mm/s (press)");
  script->add_option("--answers", sc.answers, "Quiz answers item=choice,... after finish_explore");
  add_config_flags(*script, sc.config_file, sc.overrides);

  cli::CalibrateOptions cb;
  auto* calibrate = app.add_subcommand("calibrate", "Classify synthetic tap sessions over a jitter sweep");
  add_scenario_flags(*calibrate, cb_scenario, cb.scenario, cb.seed, false);
  calibrate->add_option("--jitters", cb.jitters, "Comma-separated jitter levels");
  calibrate->add_option("--taps", cb.taps, "Taps per session");
  calibrate->add_option("--tap-seed", cb.tap_seed, "Seed of the jitter draws");
  add_config_flags(*calibrate, cb.config_file, cb.overrides);

  try
  {
    app.parse(argc, argv);
  }
  catch (const CLI::CallForHelp& e)
  {
    return app.exit(e);
  }
  catch (const CLI::CallForAllHelp& e)
  {
    return app.exit(e);
  }
  catch (const CLI::ParseError& e)
  {
    app.exit(e);
    return cli::kUsage;
  }

  for (const ScenarioFlag* flag : {&sim_scenario, &sc_scenario, &cb_scenario})
  {
    *flag->target = *palpatron::parse_scenario(flag->name);
  }

  if (*simulate) return cli::simulate(sim, std::cout, std::cerr);
  if (*assess) return cli::assess(as, std::cout, std::cerr);
  if (*replay) return cli::replay(rp, std::cout, std::cerr);
  if (*serve) return cli::serve(sv, std::cout, std::cerr);
  if (*script) return cli::script(sc, std::cout, std::cerr);
  return cli::calibrate(cb, std::cout, std::cerr);
}
