#include "palpatron/config.hpp"

#include "palpatron/error.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>
#include <utility>

namespace palpatron
{
namespace
{

struct KeyDefault
{
  std::string_view key;
  double value;
  bool integral;
};

// clang-format off
constexpr KeyDefault kDefaults[] = {
  {"tissue.k0", 600.0, false},
  {"tissue.damping", 2.0, false},
  {"tissue.axis.x", 140.0, false},
  {"tissue.axis.y", 80.0, false},
  {"tissue.axis.z", 60.0, false},
  {"tissue.mesh.u", 60, true},
  {"tissue.mesh.v", 40, true},
  {"tissue.patch.u", 20, true},
  {"tissue.patch.v", 10, true},
  {"tissue.d_atten", 6.0, false},
  {"tissue.feature_min_nz", 0.5, false},
  {"tissue.hepatic.multiplier", 2.5, false},
  {"tissue.hepatic.pallor", 0.5, false},
  {"tissue.cirrhotic.count", 40, true},
  {"tissue.cirrhotic.sigma_min", 4.0, false},
  {"tissue.cirrhotic.sigma_max", 8.0, false},
  {"tissue.cirrhotic.delta_k", 900.0, false},
  {"tissue.cirrhotic.bump", 1.5, false},
  {"tissue.tumoral.surface_count", 2, true},
  {"tissue.tumoral.surface_delta_k", 1200.0, false},
  {"tissue.tumoral.surface_sigma_min", 6.0, false},
  {"tissue.tumoral.surface_sigma_max", 9.0, false},
  {"tissue.tumoral.surface_bump", 1.0, false},
  {"tissue.tumoral.deep_count", 2, true},
  {"tissue.tumoral.deep_delta_k", 800.0, false},
  {"tissue.tumoral.deep_sigma_min", 8.0, false},
  {"tissue.tumoral.deep_sigma_max", 12.0, false},
  {"tissue.tumoral.burial_min", 5.0, false},
  {"tissue.tumoral.burial_max", 9.5, false},
  {"rig.count", 1, true},
  {"rig.fulcrum.x", 0.0, false},
  {"rig.fulcrum.y", 0.0, false},
  {"rig.fulcrum.z", 200.0, false},
  {"rig.second.offset.x", 70.0, false},
  {"rig.second.offset.y", 0.0, false},
  {"rig.second.offset.z", 0.0, false},
  {"rig.tool_length", 360.0, false},
  {"rig.instrument", 1, true},
  {"rig.tip_radius.maryland", 2.0, false},
  {"rig.tip_radius.babcock", 5.0, false},
  {"rig.initial.yaw", 0.0, false},
  {"rig.initial.pitch", 0.0, false},
  {"rig.initial.insertion", 40.0, false},
  {"rig.angle_limit", std::numbers::pi / 3.0, false},
  {"rig.rate.angular", 2.0, false},
  {"rig.rate.insertion", 200.0, false},
  {"servo.force_clamp", 4.0, false},
  {"servo.dimple_scale", 6.0, false},
  {"servo.dimple_cap", 25.0, false},
  {"session.familiarize", 1, true},
  {"session.sphere_radius", 10.0, false},
  {"session.required_touches", 5, true},
  {"session.time_limit", 30.0, false},
  {"session.explore_limit", 0.0, false},
  {"assess.threshold", 0.3, false},
  {"assess.min_gap", 50, true},
  {"assess.band.healthy.lo", 2.1, false},
  {"assess.band.healthy.hi", 2.5, false},
  {"assess.band.cirrhotic.lo", 2.1, false},
  {"assess.band.cirrhotic.hi", 2.5, false},
  {"assess.band.tumoral.lo", 2.1, false},
  {"assess.band.tumoral.hi", 2.5, false},
  {"assess.band.hepatic.lo", 2.6, false},
  {"assess.band.hepatic.hi", 3.2, false},
  {"assess.cone.height_scale", 6.0, false},
  {"assess.cone.radius_scale", 2.5, false},
  {"assess.expert.peak_cv", 0.15, false},
  {"assess.expert.speed_cv", 0.20, false},
  {"assess.expert.in_band", 0.8, false},
  {"assess.lesion.deviation", 0.2, false},
  {"assess.lesion.radius_sigmas", 1.5, false},
  {"assess.lesion.attribution_sigmas", 3.0, false},
  {"server.frame_rate", 60.0, false},
};
// clang-format on

const KeyDefault* find_default(std::string_view key)
{
  for (const auto& entry : kDefaults)
  {
    if (entry.key == key)
    {
      return &entry;
    }
  }
  return nullptr;
}

std::string_view trim(std::string_view s)
{
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos)
  {
    return {};
  }
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

double parse_value(std::string_view text, std::string_view key)
{
  double value = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end || !std::isfinite(value))
  {
    throw ConfigError("invalid numeric value '" + std::string(text) + "' for key '" +
                      std::string(key) + "'");
  }
  return value;
}

}  // namespace

Config::Config()
{
  for (const auto& entry : kDefaults)
  {
    values_.emplace(std::string(entry.key), entry.value);
  }
}

Config Config::from_file(const std::filesystem::path& path)
{
  Config config;
  config.merge_file(path);
  return config;
}

void Config::set(std::string_view key, double value)
{
  const KeyDefault* entry = find_default(key);
  if (entry == nullptr)
  {
    throw ConfigError("unknown config key '" + std::string(key) + "'");
  }
  if (!std::isfinite(value))
  {
    throw ConfigError("non-finite value for config key '" + std::string(key) + "'");
  }
  if (entry->integral && value != std::floor(value))
  {
    throw ConfigError("config key '" + std::string(key) + "' expects an integer");
  }
  values_.find(key)->second = value;
}

double Config::get(std::string_view key) const
{
  const auto it = values_.find(key);
  if (it == values_.end())
  {
    throw ConfigError("unknown config key '" + std::string(key) + "'");
  }
  return it->second;
}

int Config::get_int(std::string_view key) const
{
  return static_cast<int>(get(key));
}

bool Config::contains(std::string_view key) const
{
  return values_.find(key) != values_.end();
}

void Config::apply_override(std::string_view assignment)
{
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos)
  {
    throw ConfigError("override '" + std::string(assignment) + "' is not of the form key=value");
  }
  const auto key = trim(assignment.substr(0, eq));
  set(key, parse_value(trim(assignment.substr(eq + 1)), key));
}

void Config::merge_file(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in)
  {
    throw ConfigError("cannot open config file '" + path.string() + "'");
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  merge_text(buffer.str(), path.string());
}

void Config::merge_text(std::string_view text, std::string_view source)
{
  std::size_t line_no = 0;
  while (!text.empty())
  {
    const auto nl = text.find('\n');
    auto line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;

    if (const auto hash = line.find('#'); hash != std::string_view::npos)
    {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty())
    {
      continue;
    }
    try
    {
      apply_override(line);
    }
    catch (const ConfigError& e)
    {
      throw ConfigError(std::string(source) + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

std::string Config::canonical() const
{
  std::string out;
  for (const auto& [key, value] : values_)
  {
    out += key;
    out += '=';
    out += format_number(value);
    out += '\n';
  }
  return out;
}

std::string Config::hash() const
{
  return fnv1a64_hex(canonical());
}

std::string format_number(double value)
{
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

std::string fnv1a64_hex(std::string_view bytes)
{
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char c : bytes)
  {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "fnv1a64:%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace palpatron
