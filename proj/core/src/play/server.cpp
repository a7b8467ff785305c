#include "mesh/play/server.hpp"

#include <chrono>
#include <deque>
#include <iostream>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

namespace mesh::play {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

namespace {

constexpr auto kTickPeriod = std::chrono::microseconds(static_cast<long>(1e6 / kTickRate));

class Connection : public std::enable_shared_from_this<Connection> {
 public:
  Connection(tcp::socket socket, std::shared_ptr<SessionManager> sessions, std::uint64_t default_seed)
      : ws_(std::move(socket)),
        timer_(ws_.get_executor()),
        sessions_(std::move(sessions)),
        default_seed_(default_seed) {}

  void start() {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept([self = shared_from_this()](beast::error_code ec) {
      if (!ec) self->read();
    });
  }

 private:
  void read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return self->shutdown();
      const std::string text = beast::buffers_to_string(self->buffer_.data());
      self->buffer_.consume(self->buffer_.size());
      self->handle(text);
      self->read();
    });
  }

  void handle(const std::string& text) {
    ClientMessage msg;
    try {
      msg = parse_client_message(text);
    } catch (const std::exception& e) {
      return send(error_message(e.what()), false);
    }
    if (msg.type == ClientMessage::Type::Join) {
      if (session_) return send(error_message("already joined session " + session_->id()), false);
      try {
        session_ = sessions_->open(msg.layout, msg.agent, msg.seed.value_or(default_seed_));
      } catch (const std::exception& e) {
        return send(error_message(e.what()), false);
      }
      send(session_->joined_message(), false);
      send(session_->state_message(), true);
      next_tick_ = std::chrono::steady_clock::now() + kTickPeriod;
      schedule();
      return;
    }
    if (!session_) return send(error_message("join a session before sending keys"), false);
    if (session_->closed()) return send(error_message("session closed"), false);
    session_->press(msg.action);
  }

  void schedule() {
    timer_.expires_at(next_tick_);
    timer_.async_wait([self = shared_from_this()](beast::error_code ec) {
      if (ec || !self->session_) return;
      self->next_tick_ += kTickPeriod;
      const auto messages = self->session_->tick();
      for (const auto& m : messages) self->send(m, m.find("\"type\":\"state\"") != std::string::npos);
      if (self->session_->closed()) {
        self->sessions_->close(self->session_->id());
        return;
      }
      self->schedule();
    });
  }

  // State frames may be replaced while still queued; everything else is kept.
  void send(std::string text, bool state_frame) {
    if (state_frame && outbox_.size() > 1 && outbox_.back().second) {
      outbox_.back().first = std::move(text);
    } else {
      outbox_.emplace_back(std::move(text), state_frame);
    }
    if (outbox_.size() == 1) write();
  }

  void write() {
    ws_.text(true);
    ws_.async_write(asio::buffer(outbox_.front().first),
                    [self = shared_from_this()](beast::error_code ec, std::size_t) {
                      if (ec) return self->shutdown();
                      self->outbox_.pop_front();
                      if (!self->outbox_.empty()) self->write();
                    });
  }

  void shutdown() {
    timer_.cancel();
    if (session_) sessions_->close(session_->id());
    session_.reset();
  }

  websocket::stream<beast::tcp_stream> ws_;
  asio::steady_timer timer_;
  beast::flat_buffer buffer_;
  std::shared_ptr<SessionManager> sessions_;
  std::uint64_t default_seed_;
  std::shared_ptr<Session> session_;
  std::chrono::steady_clock::time_point next_tick_;
  std::deque<std::pair<std::string, bool>> outbox_;  // front is being written
};

}  // namespace

struct PlayServer::Impl {
  asio::io_context io{1};
  tcp::acceptor acceptor{io};
  std::shared_ptr<SessionManager> sessions;
  ServerOptions options;

  void accept() {
    acceptor.async_accept(asio::make_strand(io), [this](beast::error_code ec, tcp::socket socket) {
      if (ec) {
        if (ec != asio::error::operation_aborted) std::cerr << "play server: accept failed: " << ec.message() << '\n';
      } else {
        std::make_shared<Connection>(std::move(socket), sessions, options.seed)->start();
      }
      if (acceptor.is_open()) accept();
    });
  }
};

PlayServer::PlayServer(std::shared_ptr<SessionManager> sessions, ServerOptions options)
    : impl_(std::make_unique<Impl>()) {
  impl_->sessions = std::move(sessions);
  impl_->options = std::move(options);
  const tcp::endpoint endpoint(asio::ip::make_address(impl_->options.address), impl_->options.port);
  impl_->acceptor.open(endpoint.protocol());
  impl_->acceptor.set_option(asio::socket_base::reuse_address(true));
  impl_->acceptor.bind(endpoint);
  impl_->acceptor.listen();
}

PlayServer::~PlayServer() = default;

unsigned short PlayServer::port() const { return impl_->acceptor.local_endpoint().port(); }

void PlayServer::run() {
  impl_->accept();
  impl_->io.run();
}

void PlayServer::stop() {
  asio::post(impl_->io, [this] {
    beast::error_code ec;
    impl_->acceptor.close(ec);
    impl_->io.stop();
  });
}

}  // namespace mesh::play
