#include "emrs/teleop/server.hpp"

#include <chrono>
#include <condition_variable>
#include <fstream>
#include <map>
#include <sstream>

#include <boost/asio.hpp>
#include <boost/beast.hpp>
#include <boost/beast/websocket.hpp>

namespace emrs::teleop {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

namespace {

class Hub;

class WsSession : public std::enable_shared_from_this<WsSession> {
 public:
  WsSession(tcp::socket socket, TeleopCore& core, Hub& hub)
      : ws_(std::move(socket)), core_(core), hub_(hub), id_(core.connect()) {}

  template <typename Request>
  void start(Request req);
  void send(std::shared_ptr<const std::string> text);
  ClientId id() const { return id_; }

 private:
  void read();
  void on_read(beast::error_code ec, std::size_t);
  void write_next();

  websocket::stream<tcp::socket> ws_;
  TeleopCore& core_;
  Hub& hub_;
  ClientId id_;
  beast::flat_buffer buffer_;
  std::deque<std::shared_ptr<const std::string>> outbox_;
};

/// Registry of live WebSocket sessions; touched on the I/O thread only.
class Hub {
 public:
  void join(const std::shared_ptr<WsSession>& s) { sessions_[s->id()] = s; }
  void leave(ClientId id) { sessions_.erase(id); }

  void broadcast(const std::shared_ptr<const std::string>& text) {
    for (auto it = sessions_.begin(); it != sessions_.end();) {
      if (auto s = it->second.lock()) {
        s->send(text);
        ++it;
      } else {
        it = sessions_.erase(it);
      }
    }
  }

  void deliver(ClientId id, const std::shared_ptr<const std::string>& text) {
    const auto it = sessions_.find(id);
    if (it == sessions_.end()) return;
    if (auto s = it->second.lock()) s->send(text);
  }

 private:
  std::map<ClientId, std::weak_ptr<WsSession>> sessions_;
};

template <typename Request>
void WsSession::start(Request req) {
  ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
  ws_.text(true);
  ws_.async_accept(req, [self = shared_from_this()](beast::error_code ec) {
    if (ec) return;
    self->hub_.join(self);
    self->read();
  });
}

void WsSession::read() {
  ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t n) { self->on_read(ec, n); });
}

void WsSession::on_read(beast::error_code ec, std::size_t) {
  if (ec) {
    hub_.leave(id_);
    return;
  }
  const std::string text = beast::buffers_to_string(buffer_.data());
  buffer_.consume(buffer_.size());
  try {
    core_.submit(id_, decode_message(text));
  } catch (const MalformedMessage& e) {
    send(std::make_shared<const std::string>(encode_error(e.what())));
  }
  read();
}

void WsSession::send(std::shared_ptr<const std::string> text) {
  outbox_.push_back(std::move(text));
  if (outbox_.size() == 1) write_next();
}

void WsSession::write_next() {
  ws_.async_write(net::buffer(*outbox_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
    if (ec) {
      self->hub_.leave(self->id_);
      return;
    }
    self->outbox_.pop_front();
    if (!self->outbox_.empty()) self->write_next();
  });
}

std::string mime_type(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".html") return "text/html";
  if (ext == ".js") return "application/javascript";
  if (ext == ".css") return "text/css";
  if (ext == ".json") return "application/json";
  if (ext == ".svg") return "image/svg+xml";
  if (ext == ".png") return "image/png";
  return "application/octet-stream";
}

class HttpSession : public std::enable_shared_from_this<HttpSession> {
 public:
  HttpSession(tcp::socket socket, TeleopCore& core, Hub& hub, const std::filesystem::path& root)
      : stream_(std::move(socket)), core_(core), hub_(hub), root_(root) {}

  void start() { read(); }

 private:
  void read() {
    request_ = {};
    stream_.expires_after(std::chrono::seconds(30));
    http::async_read(stream_, buffer_, request_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return;
      self->handle();
    });
  }

  void handle() {
    if (websocket::is_upgrade(request_)) {
      if (request_.target() != "/ws") {
        reply(http::status::not_found, "text/plain", "no such endpoint\n");
        return;
      }
      stream_.expires_never();
      std::make_shared<WsSession>(stream_.release_socket(), core_, hub_)->start(std::move(request_));
      return;
    }
    if (request_.method() != http::verb::get && request_.method() != http::verb::head) {
      reply(http::status::method_not_allowed, "text/plain", "method not allowed\n");
      return;
    }
    std::string target(request_.target());
    if (const auto q = target.find('?'); q != std::string::npos) target.resize(q);
    if (target == "/healthz") {
      reply(http::status::ok, "application/json", core_.healthz_json() + "\n");
      return;
    }
    if (target == "/") target = "/index.html";
    if (target.find("..") != std::string::npos || root_.empty()) {
      reply(http::status::not_found, "text/plain", "not found\n");
      return;
    }
    const auto path = root_ / target.substr(1);
    std::ifstream in(path, std::ios::binary);
    if (!in) {
      reply(http::status::not_found, "text/plain", "not found\n");
      return;
    }
    std::stringstream body;
    body << in.rdbuf();
    reply(http::status::ok, mime_type(path), body.str());
  }

  void reply(http::status status, const std::string& type, std::string body) {
    auto res = std::make_shared<http::response<http::string_body>>(status, request_.version());
    res->set(http::field::server, "emrs");
    res->set(http::field::content_type, type);
    res->keep_alive(request_.keep_alive());
    res->body() = std::move(body);
    res->prepare_payload();
    http::async_write(stream_, *res, [self = shared_from_this(), res](beast::error_code ec, std::size_t) {
      if (ec) return;
      if (res->need_eof()) {
        beast::error_code ignored;
        self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
        return;
      }
      self->read();
    });
  }

  beast::tcp_stream stream_;
  TeleopCore& core_;
  Hub& hub_;
  const std::filesystem::path& root_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> request_;
};

}  // namespace

struct TeleopServer::Impl {
  Impl(TeleopCore& c, ServerOptions o) : core(c), options(std::move(o)), acceptor(ioc) {}

  void accept() {
    acceptor.async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
      if (!ec) std::make_shared<HttpSession>(std::move(socket), core, hub, options.static_dir)->start();
      if (acceptor.is_open()) accept();
    });
  }

  void step_loop() {
    using clock = std::chrono::steady_clock;
    const auto t0 = clock::now();
    const double base = core.time_s();
    auto next = t0;
    while (running) {
      next += std::chrono::milliseconds(10);
      std::this_thread::sleep_until(next);
      const double elapsed = std::chrono::duration<double>(clock::now() - t0).count();
      auto out = core.advance_to(base + elapsed * options.time_scale);
      net::post(ioc, [this, out = std::move(out)]() {
        for (const auto& [client, text] : out.replies) hub.deliver(client, std::make_shared<const std::string>(text));
        for (const auto& text : out.telemetry) hub.broadcast(std::make_shared<const std::string>(text));
      });
    }
  }

  TeleopCore& core;
  ServerOptions options;
  net::io_context ioc{1};
  tcp::acceptor acceptor;
  Hub hub;
  std::atomic<bool> running{false};
  std::thread io_thread;
  std::thread stepper;
  std::mutex done_mutex;
  std::condition_variable done_cv;
  bool done{false};
};

TeleopServer::TeleopServer(TeleopCore& core, ServerOptions options)
    : impl_(std::make_unique<Impl>(core, std::move(options))) {}

TeleopServer::~TeleopServer() { stop(); }

unsigned short TeleopServer::start() {
  auto& i = *impl_;
  const tcp::endpoint endpoint(net::ip::make_address(i.options.address), i.options.port);
  i.acceptor.open(endpoint.protocol());
  i.acceptor.set_option(net::socket_base::reuse_address(true));
  i.acceptor.bind(endpoint);
  i.acceptor.listen(net::socket_base::max_listen_connections);
  port_ = i.acceptor.local_endpoint().port();
  i.accept();
  i.running = true;
  i.io_thread = std::thread([&i] {
    auto guard = net::make_work_guard(i.ioc);
    i.ioc.run();
  });
  i.stepper = std::thread([&i] { i.step_loop(); });
  return port_;
}

void TeleopServer::stop() {
  auto& i = *impl_;
  if (!i.running.exchange(false)) return;
  if (i.stepper.joinable()) i.stepper.join();
  net::post(i.ioc, [&i] {
    beast::error_code ignored;
    i.acceptor.close(ignored);
    i.ioc.stop();
  });
  if (i.io_thread.joinable()) i.io_thread.join();
  {
    std::lock_guard lock(i.done_mutex);
    i.done = true;
  }
  i.done_cv.notify_all();
}

void TeleopServer::wait() {
  auto& i = *impl_;
  net::io_context signals_ioc;
  net::signal_set signals(signals_ioc, SIGINT, SIGTERM);
  signals.async_wait([this](beast::error_code, int) { stop(); });
  std::thread signal_thread([&] { signals_ioc.run(); });
  {
    std::unique_lock lock(i.done_mutex);
    i.done_cv.wait(lock, [&] { return i.done; });
  }
  signals_ioc.stop();
  signal_thread.join();
}

}  // namespace emrs::teleop
