#include "gic/teleop_server.hpp"

#include <chrono>
#include <deque>
#include <functional>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "gic/error.hpp"

namespace gic {

namespace {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

constexpr std::size_t kMaxOutbox = 1024;

// Lives on the io thread only.
class Connection : public std::enable_shared_from_this<Connection> {
 public:
  Connection(tcp::socket socket, SessionCore& core) : ws_(std::move(socket)), core_(core) {}

  void run() {
    http::async_read(ws_.next_layer(), buffer_, request_,
                     [self = shared_from_this()](beast::error_code ec, std::size_t) { self->on_request(ec); });
  }

  void send(std::string text) {
    if (!open_) return;
    if (outbox_.size() >= kMaxOutbox) return;
    outbox_.push_back(std::move(text));
    if (outbox_.size() == 1) write_next();
  }

  void close() {
    if (!open_) return;
    open_ = false;
    ws_.async_close(websocket::close_code::going_away, [self = shared_from_this()](beast::error_code) {});
  }

 private:
  void on_request(beast::error_code ec) {
    if (ec) return;
    if (!websocket::is_upgrade(request_) || request_.target() != "/session") {
      auto res = std::make_shared<http::response<http::string_body>>(http::status::not_found, request_.version());
      res->set(http::field::content_type, "text/plain");
      res->body() = "websocket endpoint is /session\n";
      res->prepare_payload();
      http::async_write(ws_.next_layer(), *res, [self = shared_from_this(), res](beast::error_code, std::size_t) {
        beast::error_code ignored;
        self->ws_.next_layer().socket().shutdown(tcp::socket::shutdown_both, ignored);
      });
      return;
    }
    ws_.async_accept(request_, [self = shared_from_this()](beast::error_code ec2) {
      if (ec2) return;
      self->open_ = true;
      self->ws_.text(true);
      self->read_next();
    });
  }

  void read_next() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) { self->on_read(ec); });
  }

  void on_read(beast::error_code ec) {
    if (ec) {
      open_ = false;
      return;
    }
    const std::string text = beast::buffers_to_string(buffer_.data());
    buffer_.consume(buffer_.size());
    nlohmann::json cmd = nlohmann::json::parse(text, nullptr, false);
    if (cmd.is_discarded()) {
      send(nlohmann::json{{"type", "error"}, {"tick", core_.tick_count()}, {"message", "frame is not valid JSON"}}.dump());
    } else {
      core_.enqueue(std::move(cmd));
    }
    read_next();
  }

  void write_next() {
    ws_.async_write(net::buffer(outbox_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) {
        self->open_ = false;
        self->outbox_.clear();
        return;
      }
      self->outbox_.pop_front();
      if (!self->outbox_.empty()) self->write_next();
    });
  }

  websocket::stream<beast::tcp_stream> ws_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> request_;
  std::deque<std::string> outbox_;
  bool open_ = false;
  SessionCore& core_;
};

}  // namespace

struct TeleopServer::Impl {
  Impl(ManipulatorModel model, SessionConfig session, ServerOptions opts)
      : core(std::move(model), std::move(session)), options(std::move(opts)), acceptor(ioc) {}

  void accept() {
    acceptor.async_accept([this](beast::error_code ec, tcp::socket socket) {
      if (ec) return;
      if (client) client->close();
      client = std::make_shared<Connection>(std::move(socket), core);
      client->run();
      accept();
    });
  }

  SessionCore core;
  ServerOptions options;
  net::io_context ioc;
  tcp::acceptor acceptor;
  std::shared_ptr<Connection> client;
  std::thread io_thread;
  std::thread control_thread;
  std::atomic<bool> running{false};
};

TeleopServer::TeleopServer(ManipulatorModel model, SessionConfig session, ServerOptions options)
    : impl_(std::make_unique<Impl>(std::move(model), std::move(session), std::move(options))) {}

TeleopServer::~TeleopServer() { stop(); }

std::uint16_t TeleopServer::port() const { return impl_->acceptor.local_endpoint().port(); }

void TeleopServer::start() {
  Impl& im = *impl_;
  try {
    const tcp::endpoint endpoint(net::ip::make_address(im.options.address), im.options.port);
    im.acceptor.open(endpoint.protocol());
    im.acceptor.set_option(net::socket_base::reuse_address(true));
    im.acceptor.bind(endpoint);
    im.acceptor.listen();
  } catch (const boost::system::system_error& e) {
    throw Error(ErrorCode::kBindFailure, im.options.address + ":" + std::to_string(im.options.port) + ": " + e.what());
  }
  im.running = true;
  im.accept();
  im.io_thread = std::thread([&im] {
    auto guard = net::make_work_guard(im.ioc);
    im.ioc.run();
  });
  im.control_thread = std::thread([this, &im] {
    using clock = std::chrono::steady_clock;
    const bool paced = im.options.tick_rate > 0.0;
    const auto period = std::chrono::duration_cast<clock::duration>(
        std::chrono::duration<double>(paced ? 1.0 / im.options.tick_rate : 0.0));
    auto next = clock::now();
    while (im.running) {
      std::vector<std::string> out;
      for (auto& frame : im.core.tick()) out.push_back(frame.dump());
      ++ticks_;
      if (!out.empty()) {
        net::post(im.ioc, [&im, out = std::move(out)]() mutable {
          if (!im.client) return;
          for (auto& text : out) im.client->send(std::move(text));
        });
      }
      if (paced) {
        next += period;
        const auto now = clock::now();
        if (next < now - std::chrono::milliseconds(100)) next = now;  // fell far behind, resync
        std::this_thread::sleep_until(next);
      }
    }
  });
}

void TeleopServer::stop() {
  if (!impl_) return;
  Impl& im = *impl_;
  const bool was_running = im.running.exchange(false);
  if (im.control_thread.joinable()) im.control_thread.join();
  if (was_running) {
    net::post(im.ioc, [&im] {
      beast::error_code ignored;
      im.acceptor.close(ignored);
      if (im.client) im.client->close();
    });
  }
  im.ioc.stop();
  if (im.io_thread.joinable()) im.io_thread.join();
}

}  // namespace gic
