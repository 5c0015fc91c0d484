#include "palpatron/types.hpp"

#include <array>
#include <utility>

namespace palpatron
{
namespace
{

constexpr std::array<std::pair<Scenario, std::string_view>, 4> kScenarioNames{{
  {Scenario::Healthy, "healthy"},
  {Scenario::Cirrhotic, "cirrhotic"},
  {Scenario::Tumoral, "tumoral"},
  {Scenario::Hepatic, "hepatic"},
}};

constexpr std::array<std::pair<Phase, std::string_view>, 4> kPhaseNames{{
  {Phase::Familiarize, "familiarize"},
  {Phase::Explore, "explore"},
  {Phase::Quiz, "quiz"},
  {Phase::Report, "report"},
}};

template <typename Enum, std::size_t N>
std::string_view name_of(const std::array<std::pair<Enum, std::string_view>, N>& table, Enum value)
{
  for (const auto& [key, name] : table)
  {
    if (key == value)
    {
      return name;
    }
  }
  return "unknown";
}

template <typename Enum, std::size_t N>
std::optional<Enum> lookup(const std::array<std::pair<Enum, std::string_view>, N>& table,
                           std::string_view text)
{
  for (const auto& [key, name] : table)
  {
    if (name == text)
    {
      return key;
    }
  }
  return std::nullopt;
}

}  // namespace

std::string_view to_string(Scenario scenario)
{
  return name_of(kScenarioNames, scenario);
}

std::optional<Scenario> parse_scenario(std::string_view text)
{
  return lookup(kScenarioNames, text);
}

std::string_view to_string(Instrument instrument)
{
  return instrument == Instrument::Babcock ? "babcock" : "maryland";
}

std::optional<Instrument> parse_instrument(std::string_view text)
{
  if (text == "babcock")
  {
    return Instrument::Babcock;
  }
  if (text == "maryland")
  {
    return Instrument::Maryland;
  }
  return std::nullopt;
}

std::string_view to_string(Phase phase)
{
  return name_of(kPhaseNames, phase);
}

std::optional<Phase> parse_phase(std::string_view text)
{
  return lookup(kPhaseNames, text);
}

}  // namespace palpatron
