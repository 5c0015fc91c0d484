#pragma once

#include "palpatron/types.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

namespace palpatron
{

/// Flat numeric configuration keyed by dotted paths (`tissue.k0`, `assess.band.hepatic.lo`).
///
/// Every key has a default; setting an unknown key is a ConfigError. The same
/// keys are accepted in config files (`key = value`, `#` comments) and as CLI
/// overrides (`key=value`).
class Config
{
public:
  /// Configuration holding every default value.
  Config();

  static Config from_file(const std::filesystem::path& path);

  void set(std::string_view key, double value);
  double get(std::string_view key) const;
  int get_int(std::string_view key) const;
  bool contains(std::string_view key) const;

  /// Applies one `key=value` override.
  void apply_override(std::string_view assignment);

  /// Overlays the assignments of a config file.
  void merge_file(const std::filesystem::path& path);

  /// Overlays the assignments of config text; `source` names it in errors.
  void merge_text(std::string_view text, std::string_view source = "<text>");

  const std::map<std::string, double, std::less<>>& values() const { return values_; }

  /// Sorted `key=value` lines with shortest round-trip numbers.
  std::string canonical() const;

  /// `fnv1a64:<16 hex digits>` over canonical().
  std::string hash() const;

  friend bool operator==(const Config&, const Config&) = default;

private:
  std::map<std::string, double, std::less<>> values_;
};

/// Shortest round-trip decimal form of a double.
std::string format_number(double value);

/// FNV-1a 64-bit hash rendered as `fnv1a64:<hex>`.
std::string fnv1a64_hex(std::string_view bytes);

}  // namespace palpatron
