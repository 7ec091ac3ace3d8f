#include "moglow/ws_server.hpp"

#include <deque>
#include <thread>
#include <vector>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

namespace moglow::service {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

namespace {

class Connection : public std::enable_shared_from_this<Connection> {
 public:
  Connection(tcp::socket socket, ServiceCore& core) : ws_(std::move(socket)), handler_(core) {}

  void start() {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(beast::bind_front_handler(&Connection::on_accept, shared_from_this()));
  }

 private:
  void on_accept(beast::error_code ec) {
    if (ec) return;
    read();
  }

  void read() {
    ws_.async_read(buffer_, beast::bind_front_handler(&Connection::on_read, shared_from_this()));
  }

  void on_read(beast::error_code ec, std::size_t) {
    if (ec) return;
    std::vector<std::string> replies;
    if (ws_.got_text()) {
      replies = handler_.handle(beast::buffers_to_string(buffer_.data()));
    } else {
      replies.push_back(error_message("binary frames are not supported"));
    }
    buffer_.consume(buffer_.size());
    for (std::string& r : replies) outbox_.push_back(std::move(r));
    // Reading resumes once the replies are flushed, which keeps one
    // connection's messages strictly ordered.
    write_next();
  }

  void write_next() {
    if (outbox_.empty()) {
      read();
      return;
    }
    ws_.text(true);
    ws_.async_write(asio::buffer(outbox_.front()),
                    beast::bind_front_handler(&Connection::on_write, shared_from_this()));
  }

  void on_write(beast::error_code ec, std::size_t) {
    if (ec) return;
    outbox_.pop_front();
    write_next();
  }

  websocket::stream<beast::tcp_stream> ws_;
  beast::flat_buffer buffer_;
  std::deque<std::string> outbox_;
  ProtocolHandler handler_;
};

}  // namespace

struct WsServer::Impl {
  ServiceCore& core;
  ServerOptions options;
  asio::io_context io;
  tcp::acceptor acceptor;
  asio::steady_timer reaper;
  std::vector<std::thread> workers;

  Impl(ServiceCore& c, ServerOptions o)
      : core(c), options(std::move(o)), acceptor(io), reaper(io) {
    const tcp::endpoint endpoint(asio::ip::make_address(options.address), options.port);
    acceptor.open(endpoint.protocol());
    acceptor.set_option(asio::socket_base::reuse_address(true));
    acceptor.bind(endpoint);
    acceptor.listen(asio::socket_base::max_listen_connections);
    accept();
    schedule_reap();
  }

  void accept() {
    acceptor.async_accept(asio::make_strand(io), [this](beast::error_code ec, tcp::socket socket) {
      if (ec == asio::error::operation_aborted) return;
      if (!ec) std::make_shared<Connection>(std::move(socket), core)->start();
      accept();
    });
  }

  void schedule_reap() {
    reaper.expires_after(options.reap_interval);
    reaper.async_wait([this](beast::error_code ec) {
      if (ec) return;
      core.reap_idle();
      schedule_reap();
    });
  }

  void spawn(unsigned count) {
    for (unsigned i = 0; i < count; ++i) workers.emplace_back([this] { io.run(); });
  }

  void join() {
    for (std::thread& t : workers) {
      if (t.joinable() && t.get_id() != std::this_thread::get_id()) t.join();
    }
    workers.clear();
  }
};

WsServer::WsServer(ServiceCore& core, ServerOptions options)
    : impl_(std::make_unique<Impl>(core, std::move(options))) {}

WsServer::~WsServer() {
  stop();
  impl_->join();
}

std::uint16_t WsServer::port() const noexcept { return impl_->acceptor.local_endpoint().port(); }

void WsServer::start() { impl_->spawn(std::max(1u, impl_->options.threads)); }

void WsServer::run() {
  impl_->spawn(impl_->options.threads > 1 ? impl_->options.threads - 1 : 0);
  impl_->io.run();
  impl_->join();
}

void WsServer::stop() {
  asio::post(impl_->io, [impl = impl_.get()] {
    beast::error_code ec;
    impl->acceptor.close(ec);
    impl->reaper.cancel();
  });
  impl_->io.stop();
}

}  // namespace moglow::service
