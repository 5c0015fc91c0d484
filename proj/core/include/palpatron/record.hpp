#pragma once

#include "palpatron/config.hpp"
#include "palpatron/haptics.hpp"
#include "palpatron/session.hpp"
#include "palpatron/types.hpp"

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <variant>
#include <vector>

namespace palpatron
{

inline constexpr std::string_view kSessionSchema = "palpsession/1";

/// Timestamp written by virtual-time runs so their files are reproducible.
inline constexpr std::string_view kVirtualEpoch = "1970-01-01T00:00:00Z";

struct MeshRef
{
  std::string path;
  std::string hash;  // fnv1a64 over the file bytes

  friend bool operator==(const MeshRef&, const MeshRef&) = default;
};

struct RecordHeader
{
  std::string schema{kSessionSchema};
  Scenario scenario = Scenario::Healthy;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::string created_at{kVirtualEpoch};
  std::string mode = "simulate";
  Config config;
  std::optional<MeshRef> mesh;

  friend bool operator==(const RecordHeader&, const RecordHeader&) = default;
};

RecordHeader make_header(Scenario scenario, std::uint64_t seed, const Config& config,
                         std::string mode, std::string created_at,
                         std::optional<MeshRef> mesh = std::nullopt);

/// Reference to a palpmesh file: absolute path and content hash.
MeshRef mesh_ref(const std::filesystem::path& path);

/// Current UTC time as an ISO-8601 string.
std::string utc_now();

std::string header_line(const RecordHeader& header);
std::string tick_line(const HapticTick& tick);
std::string event_line(const Event& event);

enum class ReplayErrorKind : std::uint8_t
{
  Io,
  Schema,
  Truncated,
  Parse,
  HashMismatch,
};

std::string_view to_string(ReplayErrorKind kind);

class ReplayError : public std::runtime_error
{
public:
  ReplayError(ReplayErrorKind kind, const std::string& message, std::size_t line = 0,
              std::uint64_t offset = 0)
    : std::runtime_error(message), kind_(kind), line_(line), offset_(offset)
  {
  }

  ReplayErrorKind kind() const noexcept { return kind_; }
  /// 1-based line number of the offending line (0 if not tied to a line).
  std::size_t line() const noexcept { return line_; }
  /// Byte offset just past the last valid line.
  std::uint64_t offset() const noexcept { return offset_; }

private:
  ReplayErrorKind kind_;
  std::size_t line_;
  std::uint64_t offset_;
};

struct SessionRecord
{
  RecordHeader header;
  std::vector<Event> events;
  std::vector<HapticTick> ticks;
  /// Raw body lines (without newline), kept when requested.
  std::vector<std::string> body;
};

struct ReadOptions
{
  bool parse_ticks = true;
  bool keep_body = false;
};

RecordHeader parse_header(std::string_view line);
HapticTick parse_tick(std::string_view line);
Event parse_event(std::string_view line);

/// Reads and validates a session file. Throws ReplayError.
SessionRecord read_session(const std::filesystem::path& path, const ReadOptions& options = {});

/// Formats engine output into record lines.
class LineSink : public SessionSink
{
public:
  explicit LineSink(std::function<void(std::string&&, bool is_tick)> out) : out_(std::move(out)) {}

  void on_event(const Event& event) override { out_(event_line(event), false); }
  void on_tick(const HapticTick& tick) override { out_(tick_line(tick), true); }

private:
  std::function<void(std::string&&, bool)> out_;
};

/// Session file writer. Lines are formatted and written on a flusher thread fed by
/// a bounded queue; a full queue blocks the producer, so no line is ever dropped.
class RecordWriter : public SessionSink
{
public:
  RecordWriter(const std::filesystem::path& path, const RecordHeader& header,
               std::size_t queue_batches = 256);
  ~RecordWriter() override;

  RecordWriter(const RecordWriter&) = delete;
  RecordWriter& operator=(const RecordWriter&) = delete;

  void on_event(const Event& event) override;
  void on_tick(const HapticTick& tick) override;

  /// Hands the partially filled batch to the flusher.
  void flush();

  /// Drains the queue, closes the file and rethrows any write failure.
  void close();

  std::uint64_t ticks_written() const { return ticks_; }
  const std::filesystem::path& path() const { return path_; }

private:
  using Item = std::variant<HapticTick, Event>;

  void push(Item item);
  void run();

  std::filesystem::path path_;
  std::ofstream file_;
  std::vector<Item> batch_;
  std::deque<std::vector<Item>> queue_;
  std::size_t capacity_;
  std::mutex mutex_;
  std::condition_variable not_empty_;
  std::condition_variable not_full_;
  bool closing_ = false;
  bool closed_ = false;
  bool failed_ = false;
  std::uint64_t ticks_ = 0;
  std::thread flusher_;
};

/// Rebuilds the tissue model a record was made with (imported mesh included).
std::shared_ptr<const TissueModel> model_for(const RecordHeader& header);

struct VerifyResult
{
  bool identical = true;
  std::size_t ticks_checked = 0;
  /// Index (0-based, over tick lines) of the first divergent or missing tick.
  std::optional<std::size_t> first_divergent_tick;
  /// 1-based file line of the first divergence.
  std::optional<std::size_t> first_divergent_line;
  std::string expected;  // regenerated line
  std::string actual;    // line in the file
};

/// Re-runs the session from its recorded inputs and commands and compares every
/// regenerated line with the file byte for byte. Throws ReplayError.
VerifyResult replay_verify(const std::filesystem::path& path);

/// Re-emits the stored ticks without simulating.
struct PlaybackSummary
{
  std::size_t ticks = 0;
  std::size_t events = 0;
  std::size_t frames = 0;
};

PlaybackSummary playback(const SessionRecord& record, double frame_rate,
                         const std::function<void(const HapticTick&)>& on_frame = {});

}  // namespace palpatron
