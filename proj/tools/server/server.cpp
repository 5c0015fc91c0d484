#include "server.hpp"

#include "wire.hpp"

#include "palpatron/error.hpp"
#include "palpatron/record.hpp"
#include "palpatron/session.hpp"
#include "palpatron/tissue.hpp"

#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/post.hpp>
#include <boost/asio/signal_set.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

namespace palpatron::server
{
namespace
{

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

constexpr std::size_t kInboundCapacity = 4096;
constexpr std::size_t kEventCapacity = 4096;
constexpr std::size_t kWriteBacklog = 8192;

std::string compact_utc()
{
  std::string s = utc_now();
  std::erase(s, '-');
  std::erase(s, ':');
  return s;
}

std::string_view mime_type(const std::filesystem::path& path)
{
  const auto ext = path.extension().string();
  if (ext == ".html") return "text/html";
  if (ext == ".js" || ext == ".mjs") return "application/javascript";
  if (ext == ".css") return "text/css";
  if (ext == ".json") return "application/json";
  if (ext == ".svg") return "image/svg+xml";
  if (ext == ".png") return "image/png";
  if (ext == ".wasm") return "application/wasm";
  return "application/octet-stream";
}

/// Engine, recorder and servo thread of one trainee session.
class LiveSession
{
public:
  struct ReportJob
  {
    std::vector<TapEpisode> episodes;
    QuizSummary quiz;
  };

  struct Outgoing
  {
    std::optional<FrameSnapshot> frame;
    std::vector<Event> events;
    std::optional<ReportJob> report;
    std::size_t dropped_events = 0;
  };

  LiveSession(std::shared_ptr<const TissueModel> model, const Config& config, std::uint64_t seed,
              const std::filesystem::path& file, std::optional<MeshRef> mesh,
              std::function<void()> notify)
    : engine_(model, config, seed),
      writer_(file, make_header(model->scenario(), seed, config, "serve", utc_now(), std::move(mesh))),
      notify_(std::move(notify)),
      frame_period_(1000.0 / std::max(1.0, config.get("server.frame_rate")))
  {
  }

  ~LiveSession() { stop(); }

  const SessionEngine& engine() const { return engine_; }
  const std::filesystem::path& path() const { return writer_.path(); }

  void start()
  {
    thread_ = std::thread([this] { run(); });
  }

  /// Joins the servo thread and finalizes the record. Idempotent.
  void stop()
  {
    stopping_ = true;
    if (thread_.joinable())
    {
      thread_.join();
    }
    if (!closed_)
    {
      closed_ = true;
      writer_.close();
    }
  }

  bool submit(Command command)
  {
    std::lock_guard lock(in_mutex_);
    if (inbound_.size() >= kInboundCapacity)
    {
      return false;
    }
    inbound_.push_back(std::move(command));
    return true;
  }

  Outgoing take()
  {
    std::lock_guard lock(out_mutex_);
    Outgoing out;
    out.frame = std::move(frame_);
    frame_.reset();
    out.events.assign(std::make_move_iterator(events_.begin()), std::make_move_iterator(events_.end()));
    events_.clear();
    out.report = std::move(report_);
    report_.reset();
    out.dropped_events = dropped_events_;
    dropped_events_ = 0;
    notified_ = false;
    return out;
  }

  std::uint64_t ticks() const { return ticks_.load(); }

private:
  class Sink : public SessionSink
  {
  public:
    Sink(RecordWriter& writer, std::vector<Event>& events) : writer_(writer), events_(events) {}
    void on_event(const Event& event) override
    {
      writer_.on_event(event);
      events_.push_back(event);
    }
    void on_tick(const HapticTick& tick) override { writer_.on_tick(tick); }

  private:
    RecordWriter& writer_;
    std::vector<Event>& events_;
  };

  void run()
  {
    using clock = std::chrono::steady_clock;
    std::vector<Event> events;
    Sink sink(writer_, events);
    std::vector<Command> commands;
    auto deadline = clock::now();
    double next_frame = 0.0;

    while (!stopping_)
    {
      {
        std::lock_guard lock(in_mutex_);
        commands.assign(std::make_move_iterator(inbound_.begin()), std::make_move_iterator(inbound_.end()));
        inbound_.clear();
      }
      for (auto& c : commands)
      {
        engine_.submit(std::move(c));
      }
      commands.clear();

      const Phase before = engine_.phase();
      engine_.step(sink);
      ticks_.fetch_add(1);

      std::optional<ReportJob> report;
      if (before != Phase::Report && engine_.phase() == Phase::Report)
      {
        const Quiz& quiz = engine_.quiz();
        report = ReportJob{engine_.episodes(), {quiz.score(), quiz.correct_count(), quiz.items().size()}};
      }

      const auto t = static_cast<double>(engine_.now() - kServoPeriodMs);
      std::optional<FrameSnapshot> frame;
      if (t >= next_frame)
      {
        frame = snapshot(engine_);
        next_frame += frame_period_;
        writer_.flush();
      }

      if (frame || !events.empty() || report)
      {
        bool wake = false;
        {
          std::lock_guard lock(out_mutex_);
          if (frame)
          {
            frame_ = std::move(frame);
          }
          for (auto& e : events)
          {
            if (events_.size() >= kEventCapacity)
            {
              events_.pop_front();
              ++dropped_events_;
            }
            events_.push_back(std::move(e));
          }
          if (report)
          {
            report_ = std::move(report);
          }
          wake = !notified_;
          notified_ = true;
        }
        events.clear();
        if (wake)
        {
          notify_();
        }
      }

      deadline += std::chrono::milliseconds(kServoPeriodMs);
      const auto now = clock::now();
      if (now > deadline + std::chrono::milliseconds(100))
      {
        deadline = now;  // fell far behind (suspended process); resume pacing from here
      }
      std::this_thread::sleep_until(deadline);
    }
    writer_.flush();
  }

  SessionEngine engine_;
  RecordWriter writer_;
  std::function<void()> notify_;
  double frame_period_;
  std::thread thread_;
  std::atomic<bool> stopping_{false};
  bool closed_ = false;
  std::atomic<std::uint64_t> ticks_{0};

  std::mutex in_mutex_;
  std::deque<Command> inbound_;

  std::mutex out_mutex_;
  std::optional<FrameSnapshot> frame_;
  std::deque<Event> events_;
  std::optional<ReportJob> report_;
  std::size_t dropped_events_ = 0;
  bool notified_ = false;
};

}  // namespace

struct Server::Impl : std::enable_shared_from_this<Server::Impl>
{
  class Connection;

  explicit Impl(ServerOptions o) : options(std::move(o)), acceptor(ioc), signals(ioc, SIGINT, SIGTERM)
  {
    const tcp::endpoint endpoint(net::ip::make_address(options.address), options.port);
    acceptor.open(endpoint.protocol());
    acceptor.set_option(net::socket_base::reuse_address(true));
    acceptor.bind(endpoint);
    acceptor.listen();
    bound_port = acceptor.local_endpoint().port();
    if (options.mesh)
    {
      mesh = read_palpmesh(*options.mesh);
      mesh_ref = palpatron::mesh_ref(*options.mesh);
    }
  }

  void log(const std::string& line)
  {
    if (options.log != nullptr)
    {
      *options.log << line << std::endl;
    }
  }

  void accept();
  void shutdown();

  ServerOptions options;
  net::io_context ioc{1};
  tcp::acceptor acceptor;
  net::signal_set signals;
  std::uint16_t bound_port = 0;
  std::optional<SurfaceMesh> mesh;
  std::optional<MeshRef> mesh_ref;
  std::weak_ptr<Connection> active;
  bool stopped = false;
};

class Server::Impl::Connection : public std::enable_shared_from_this<Connection>
{
public:
  Connection(std::shared_ptr<Impl> server, tcp::socket socket)
    : server_(std::move(server)), stream_(std::move(socket))
  {
  }

  ~Connection() { finish(); }

  void start()
  {
    stream_.expires_after(std::chrono::seconds(30));
    http::async_read(stream_, buffer_, request_,
                     [self = shared_from_this()](beast::error_code ec, std::size_t) {
                       self->on_request(ec);
                     });
  }

  /// Ends the session (if any) and finalizes its record.
  void finish()
  {
    if (session_)
    {
      const auto path = session_->path();
      const auto ticks = session_->ticks();
      try
      {
        session_->stop();
        server_->log("session finalized: " + path.string() + " (" + std::to_string(ticks) + " ticks)");
      }
      catch (const std::exception& e)
      {
        server_->log(std::string("session finalize failed: ") + e.what());
      }
      session_.reset();
      if (server_->options.once)
      {
        net::post(server_->ioc, [server = server_] { server->shutdown(); });
      }
    }
  }

  void close()
  {
    finish();
    if (ws_ && ws_->is_open())
    {
      beast::error_code ec;
      beast::get_lowest_layer(*ws_).socket().close(ec);
    }
  }

private:
  void on_request(beast::error_code ec)
  {
    if (ec)
    {
      return;
    }
    if (websocket::is_upgrade(request_))
    {
      stream_.expires_never();
      ws_.emplace(std::move(stream_));
      ws_->set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
      ws_->text(true);
      ws_->async_accept(request_, [self = shared_from_this()](beast::error_code e) { self->on_accept(e); });
      return;
    }
    serve_file();
  }

  void serve_file()
  {
    auto response = std::make_shared<http::response<http::string_body>>();
    response->version(request_.version());
    response->keep_alive(false);
    response->set(http::field::server, "palpatron");

    std::string target(request_.target());
    target = target.substr(0, target.find('?'));
    if (target.empty() || target == "/")
    {
      target = "/index.html";
    }
    const auto& root = server_->options.web_root;
    std::string body;
    bool found = false;
    if (root && request_.method() == http::verb::get && target.find("..") == std::string::npos)
    {
      const auto path = *root / target.substr(1);
      std::ifstream in(path, std::ios::binary);
      if (in)
      {
        std::ostringstream ss;
        ss << in.rdbuf();
        body = ss.str();
        found = true;
        response->set(http::field::content_type, std::string(mime_type(path)));
      }
    }
    if (found)
    {
      response->result(http::status::ok);
      response->body() = std::move(body);
    }
    else
    {
      response->result(http::status::not_found);
      response->set(http::field::content_type, "text/plain");
      response->body() = "not found\n";
    }
    response->prepare_payload();
    http::async_write(stream_, *response,
                      [self = shared_from_this(), response](beast::error_code, std::size_t) {
                        beast::error_code ignored;
                        self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
                      });
  }

  void on_accept(beast::error_code ec)
  {
    if (ec)
    {
      return;
    }
    if (auto other = server_->active.lock(); other && other.get() != this)
    {
      send(error_message(0, "busy", "another trainee session is active"));
      close_after_write_ = true;
      return;
    }
    server_->active = shared_from_this();
    read();
  }

  void read()
  {
    ws_->async_read(in_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      self->on_read(ec);
    });
  }

  void on_read(beast::error_code ec)
  {
    if (ec)
    {
      finish();
      return;
    }
    const std::string text = beast::buffers_to_string(in_.data());
    in_.consume(in_.size());
    handle(text);
    if (!close_after_write_)
    {
      read();
    }
  }

  TimeMs now() const { return session_ ? session_->engine().now() : 0; }

  void handle(const std::string& text)
  {
    auto parsed = parse_client(text);
    if (auto* error = std::get_if<WireError>(&parsed))
    {
      send(error_message(now(), error->code, error->message));
      if (error->fatal)
      {
        close_after_write_ = true;
      }
      return;
    }
    const auto& message = std::get<ClientMessage>(parsed);
    switch (message.kind)
    {
      case ClientKind::Hello:
        hello_ = true;
        send(envelope("hello", now(), hello_payload()));
        return;

      case ClientKind::Start:
        if (!hello_)
        {
          send(error_message(now(), "handshake", "send hello before start"));
          return;
        }
        if (session_)
        {
          send(error_message(now(), "handshake", "a session is already running on this connection"));
          return;
        }
        start_session(start_request(message.payload));
        return;

      case ClientKind::Input:
      case ClientKind::Answer:
      case ClientKind::Event:
      {
        if (!session_)
        {
          send(error_message(now(), "wrong_phase", "no session has been started"));
          return;
        }
        Command command = message.kind == ClientKind::Input ? Command(input_sample(message.payload, message.t))
                          : message.kind == ClientKind::Answer ? Command(answer_command(message.payload))
                                                               : Command(FinishExploreCommand{});
        if (!session_->submit(std::move(command)))
        {
          send(error_message(now(), "overload", "command queue full; message dropped"));
        }
        return;
      }
    }
  }

  void start_session(const StartRequest& request)
  {
    Config config = server_->options.config;
    try
    {
      for (const auto& [key, value] : request.overrides)
      {
        config.set(key, value);
      }
      const auto model = std::make_shared<const TissueModel>(build_scenario(
        request.scenario, request.seed, tissue_config(config), server_->mesh ? &*server_->mesh : nullptr));
      const std::string id = "session-" + compact_utc() + "-" + std::string(to_string(request.scenario)) +
                             "-" + std::to_string(request.seed);
      auto path = server_->options.data_dir / (id + ".jsonl");
      for (int n = 2; std::filesystem::exists(path); ++n)
      {
        path = server_->options.data_dir / (id + "-" + std::to_string(n) + ".jsonl");
      }
      std::weak_ptr<Connection> weak = shared_from_this();
      auto& ioc = server_->ioc;
      session_ = std::make_unique<LiveSession>(model, config, request.seed, path, server_->mesh_ref,
                                               [&ioc, weak] {
                                                 net::post(ioc, [weak] {
                                                   if (auto self = weak.lock())
                                                   {
                                                     self->drain();
                                                   }
                                                 });
                                               });
      server_->log("session file: " + path.string());
      send(envelope("event", 0, scene_payload(session_->engine(), path.stem().string())));
      session_->start();
    }
    catch (const ConfigError& e)
    {
      session_.reset();
      send(error_message(now(), "config", e.what()));
    }
    catch (const std::exception& e)
    {
      session_.reset();
      send(error_message(now(), "storage", e.what()));
    }
  }

  void drain()
  {
    if (!session_)
    {
      return;
    }
    auto out = session_->take();
    if (out.dropped_events > 0)
    {
      server_->log("dropped " + std::to_string(out.dropped_events) + " events for a slow client");
    }
    for (const auto& event : out.events)
    {
      if (auto message = event_message(event))
      {
        send(std::move(*message));
      }
    }
    if (out.report)
    {
      const auto& engine = session_->engine();
      const auto report =
        assess_episodes(engine.model(), std::move(out.report->episodes), engine.band(), engine.assessment());
      send(envelope("report", now(), report_payload(report, engine.model(), out.report->quiz)));
    }
    if (out.frame)
    {
      if (pending_frame_)
      {
        ++dropped_frames_;
      }
      pending_frame_ = envelope("frame", out.frame->t, frame_payload(*out.frame, session_->engine().servo()));
      pump();
    }
  }

  void send(std::string message)
  {
    if (backlog_.size() >= kWriteBacklog)
    {
      backlog_.pop_front();
    }
    backlog_.push_back(std::move(message));
    pump();
  }

  void pump()
  {
    if (writing_ || !ws_)
    {
      return;
    }
    if (!backlog_.empty())
    {
      current_ = std::move(backlog_.front());
      backlog_.pop_front();
    }
    else if (pending_frame_)
    {
      current_ = std::move(*pending_frame_);
      pending_frame_.reset();
    }
    else
    {
      if (close_after_write_)
      {
        ws_->async_close(websocket::close_code::policy_error,
                         [self = shared_from_this()](beast::error_code) { self->finish(); });
      }
      return;
    }
    writing_ = true;
    ws_->async_write(net::buffer(current_), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      self->writing_ = false;
      if (ec)
      {
        self->finish();
        return;
      }
      self->pump();
    });
  }

  std::shared_ptr<Impl> server_;
  beast::tcp_stream stream_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> request_;
  std::optional<websocket::stream<beast::tcp_stream>> ws_;
  beast::flat_buffer in_;
  std::deque<std::string> backlog_;
  std::optional<std::string> pending_frame_;
  std::string current_;
  bool writing_ = false;
  bool hello_ = false;
  bool close_after_write_ = false;
  std::size_t dropped_frames_ = 0;
  std::unique_ptr<LiveSession> session_;
};

void Server::Impl::accept()
{
  acceptor.async_accept([self = shared_from_this()](beast::error_code ec, tcp::socket socket) {
    if (ec)
    {
      return;
    }
    std::make_shared<Connection>(self, std::move(socket))->start();
    self->accept();
  });
}

void Server::Impl::shutdown()
{
  if (stopped)
  {
    return;
  }
  stopped = true;
  if (auto conn = active.lock())
  {
    conn->close();
  }
  beast::error_code ec;
  acceptor.close(ec);
  signals.cancel(ec);
  ioc.stop();
}

Server::Server(ServerOptions options) : impl_(std::make_shared<Impl>(std::move(options))) {}

Server::~Server()
{
  if (auto conn = impl_->active.lock())
  {
    conn->finish();
  }
}

std::uint16_t Server::port() const
{
  return impl_->bound_port;
}

void Server::run()
{
  impl_->signals.async_wait([impl = impl_](beast::error_code ec, int) {
    if (!ec)
    {
      impl->shutdown();
    }
  });
  impl_->accept();
  impl_->log("listening on " + impl_->options.address + ":" + std::to_string(impl_->bound_port));
  impl_->ioc.run();
}

void Server::stop()
{
  net::post(impl_->ioc, [impl = impl_] { impl->shutdown(); });
}

}  // namespace palpatron::server
