#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace palpatron
{

/// Invalid configuration value, unknown key, or malformed config file.
class ConfigError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Malformed `palpmesh v1` file or a mesh that breaks the shell invariants.
class MeshError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Malformed input script.
class ScriptError : public std::runtime_error
{
public:
  ScriptError(const std::string& message, std::size_t line)
    : std::runtime_error(message), line_(line)
  {
  }

  /// 1-based line number, 0 when not tied to a line.
  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

/// A file that cannot be opened, read or written.
class FileError : public std::runtime_error
{
public:
  FileError(const std::string& message, std::string path)
    : std::runtime_error(message), path_(std::move(path))
  {
  }

  const std::string& path() const noexcept { return path_; }

private:
  std::string path_;
};

/// Tick stream handed to the assessment out of time order.
class OrderError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

}  // namespace palpatron
