#include "serve.hpp"

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <deque>
#include <iostream>
#include <map>
#include <nlohmann/json.hpp>

#include "chemlambda/session.hpp"

namespace chemlambda::serve {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

namespace {

// Outgoing events queued per connection before ticking pauses to let the
// client catch up.
constexpr std::size_t kMaxQueued = 64;

}  // namespace

struct Server::Impl : std::enable_shared_from_this<Server::Impl> {
  asio::io_context ioc{1};
  tcp::acceptor acceptor{ioc};
  std::map<std::string, std::shared_ptr<Session>> sessions;
  std::size_t next_session = 1;

  std::shared_ptr<Session> new_session() {
    auto id = "s" + std::to_string(next_session++);
    auto s = std::make_shared<Session>(id);
    sessions.emplace(id, s);
    return s;
  }

  void accept();
};

namespace {

class Connection : public std::enable_shared_from_this<Connection> {
 public:
  Connection(tcp::socket socket, std::shared_ptr<Server::Impl> server)
      : ws_(std::move(socket)), server_(std::move(server)) {}

  void start() {
    http::async_read(ws_.next_layer(), buffer_, request_,
                     [self = shared_from_this()](beast::error_code ec, std::size_t) { self->on_request(ec); });
  }

 private:
  void on_request(beast::error_code ec) {
    if (ec || !websocket::is_upgrade(request_)) return;
    std::string target(request_.target());
    std::shared_ptr<Session> session;
    if (target == "/session" || target == "/") {
      session = server_->new_session();
    } else if (target.rfind("/session/", 0) == 0) {
      auto it = server_->sessions.find(target.substr(9));
      if (it != server_->sessions.end()) session = it->second;
    }
    if (!session) {
      http::response<http::string_body> res{http::status::not_found, request_.version()};
      res.set(http::field::content_type, "text/plain");
      res.body() = "no such session\n";
      res.prepare_payload();
      http::write(ws_.next_layer(), res, ec);
      return;
    }
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(request_, [self = shared_from_this(), session](beast::error_code ec2) {
      if (ec2) return;
      self->attach(session);
      self->read();
    });
  }

  void attach(const std::shared_ptr<Session>& s) {
    session_ = s;
    std::weak_ptr<Connection> weak = shared_from_this();
    session_->set_sink([weak](const std::string& ev) {
      if (auto c = weak.lock()) c->send(ev);
    });
    send(session_->snapshot());
  }

  void read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) { self->on_read(ec); });
  }

  void on_read(beast::error_code ec) {
    if (ec) {
      if (session_) session_->set_sink({});
      return;
    }
    auto text = beast::buffers_to_string(buffer_.data());
    buffer_.consume(buffer_.size());
    if (!switch_session(text)) session_->handle(text);
    schedule_tick();
    read();
  }

  // Handles the server-level "attach" command; false for anything else.
  bool switch_session(const std::string& text) {
    auto cmd = nlohmann::json::parse(text, nullptr, false);
    if (!cmd.is_object() || cmd.value("type", "") != "attach") return false;
    nlohmann::json rid = cmd.contains("request-id") ? cmd["request-id"] : nlohmann::json();
    std::string id;
    if (cmd.contains("payload") && cmd["payload"].is_object()) id = cmd["payload"].value("session", "");
    auto it = server_->sessions.find(id);
    if (it == server_->sessions.end()) {
      send(nlohmann::json{{"type", "error"}, {"request-id", rid}, {"message", "no such session " + id}}.dump());
      return true;
    }
    session_->set_sink({});
    send(nlohmann::json{{"type", "ack"}, {"request-id", rid}, {"command", "attach"}, {"cycle", it->second->cycle_index()}}
             .dump());
    attach(it->second);
    return true;
  }

  void schedule_tick() {
    if (tick_pending_ || !session_ || !session_->running() || queue_.size() >= kMaxQueued) return;
    tick_pending_ = true;
    asio::post(ws_.get_executor(), [self = shared_from_this()] {
      self->tick_pending_ = false;
      if (self->session_) self->session_->tick();
      self->schedule_tick();
    });
  }

  void send(std::string ev) {
    queue_.push_back(std::move(ev));
    if (queue_.size() == 1) write();
  }

  void write() {
    ws_.text(true);
    ws_.async_write(asio::buffer(queue_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) {
        self->queue_.clear();
        return;
      }
      self->queue_.pop_front();
      if (!self->queue_.empty()) self->write();
      self->schedule_tick();
    });
  }

  websocket::stream<beast::tcp_stream> ws_;
  std::shared_ptr<Server::Impl> server_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> request_;
  std::shared_ptr<Session> session_;
  std::deque<std::string> queue_;
  bool tick_pending_ = false;
};

}  // namespace

void Server::Impl::accept() {
  acceptor.async_accept(asio::make_strand(ioc), [self = shared_from_this()](beast::error_code ec, tcp::socket socket) {
    if (!ec) std::make_shared<Connection>(std::move(socket), self)->start();
    if (self->acceptor.is_open()) self->accept();
  });
}

Server::Server(const std::string& address, unsigned short port) : impl_(std::make_shared<Impl>()) {
  tcp::endpoint ep{asio::ip::make_address(address), port};
  impl_->acceptor.open(ep.protocol());
  impl_->acceptor.set_option(asio::socket_base::reuse_address(true));
  impl_->acceptor.bind(ep);
  impl_->acceptor.listen();
}

Server::~Server() { stop(); }

unsigned short Server::port() const { return impl_->acceptor.local_endpoint().port(); }

void Server::run() {
  impl_->accept();
  impl_->ioc.run();
}

void Server::stop() { impl_->ioc.stop(); }

}  // namespace chemlambda::serve
