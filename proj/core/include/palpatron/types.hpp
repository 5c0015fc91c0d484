#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cstdint>
#include <optional>
#include <string_view>

namespace palpatron
{

/// Positions are in millimetres, forces in newtons, time in integer milliseconds.
using Vec3 = Eigen::Vector3d;

using TimeMs = std::int64_t;

/// The servo loop runs at a fixed 1 kHz.
inline constexpr TimeMs kServoPeriodMs = 1;

enum class Scenario : std::uint8_t
{
  Healthy,
  Cirrhotic,
  Tumoral,
  Hepatic,
};

inline constexpr Scenario kAllScenarios[] = {
  Scenario::Healthy, Scenario::Cirrhotic, Scenario::Tumoral, Scenario::Hepatic};

std::string_view to_string(Scenario scenario);
std::optional<Scenario> parse_scenario(std::string_view text);

enum class Instrument : std::uint8_t
{
  Maryland,
  Babcock,
};

std::string_view to_string(Instrument instrument);
std::optional<Instrument> parse_instrument(std::string_view text);

enum class Phase : std::uint8_t
{
  Familiarize,
  Explore,
  Quiz,
  Report,
};

std::string_view to_string(Phase phase);
std::optional<Phase> parse_phase(std::string_view text);

}  // namespace palpatron
