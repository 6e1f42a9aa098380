#include "deckchase/ws_server.hpp"

#include "deckchase/errors.hpp"

#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/steady_timer.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <fmt/format.h>

#include <atomic>
#include <deque>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

namespace deckchase::server {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

std::string_view mime_type(std::string_view path) {
  const auto ext = std::filesystem::path(path).extension().string();
  if (ext == ".html" || ext == ".htm") return "text/html";
  if (ext == ".js" || ext == ".mjs") return "application/javascript";
  if (ext == ".css") return "text/css";
  if (ext == ".json" || ext == ".map") return "application/json";
  if (ext == ".svg") return "image/svg+xml";
  if (ext == ".png") return "image/png";
  if (ext == ".ico") return "image/x-icon";
  if (ext == ".wasm") return "application/wasm";
  return "application/octet-stream";
}

std::optional<std::filesystem::path> resolve_static(const std::filesystem::path& root, std::string_view target) {
  std::string_view path = target.substr(0, target.find_first_of("?#"));
  if (path.empty() || path.front() != '/') return std::nullopt;
  std::filesystem::path rel = std::filesystem::path(std::string(path.substr(1))).lexically_normal();
  if (rel.empty() || rel == ".") rel = "index.html";
  for (const auto& part : rel) {
    if (part == "..") return std::nullopt;
  }
  std::error_code ec;
  const auto canonical_root = std::filesystem::weakly_canonical(root, ec);
  if (ec) return std::nullopt;
  auto full = std::filesystem::weakly_canonical(canonical_root / rel, ec);
  if (ec) return std::nullopt;
  if (std::filesystem::is_directory(full, ec)) full /= "index.html";
  const auto [root_end, unused] = std::mismatch(canonical_root.begin(), canonical_root.end(), full.begin(), full.end());
  if (root_end != canonical_root.end()) return std::nullopt;
  if (!std::filesystem::is_regular_file(full, ec)) return std::nullopt;
  return full;
}

namespace {

class WsSession;

struct Registry {
  std::map<ClientId, std::weak_ptr<WsSession>> clients;
  ClientId next_id = 1;
};

class WsSession : public std::enable_shared_from_this<WsSession> {
 public:
  WsSession(tcp::socket socket, LiveSession& live, Registry& registry, std::size_t queue_limit)
      : ws_(std::move(socket)), live_(live), registry_(registry), queue_limit_(queue_limit) {}

  void run(http::request<http::string_body> req) {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(req, [self = shared_from_this()](beast::error_code ec) { self->on_accept(ec); });
  }

  void send(std::shared_ptr<const std::string> text) {
    if (closed_) return;
    // Keep the in-flight frame; drop the oldest queued ones from slow clients.
    while (queue_.size() >= queue_limit_ && queue_.size() > (writing_ ? 1u : 0u)) {
      queue_.erase(queue_.begin() + (writing_ ? 1 : 0));
    }
    queue_.push_back(std::move(text));
    if (!writing_) write_next();
  }

 private:
  void on_accept(beast::error_code ec) {
    if (ec) return;
    id_ = registry_.next_id++;
    registry_.clients[id_] = weak_from_this();
    live_.post(ClientEvent{id_, ClientConnected{}});
    ws_.text(true);
    read();
  }

  void read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) { self->on_read(ec); });
  }

  void on_read(beast::error_code ec) {
    if (ec) {
      close();
      return;
    }
    const std::string text = beast::buffers_to_string(buffer_.data());
    buffer_.consume(buffer_.size());
    try {
      if (!live_.post(ClientEvent{id_, wire::parse_client_message(text)})) {
        send(std::make_shared<const std::string>(wire::serialize(wire::ErrorMessage{"server busy; message dropped"})));
      }
    } catch (const Error& e) {
      send(std::make_shared<const std::string>(wire::serialize(wire::ErrorMessage{e.what()})));
    }
    read();
  }

  void write_next() {
    if (queue_.empty() || closed_) {
      writing_ = false;
      return;
    }
    writing_ = true;
    ws_.async_write(asio::buffer(*queue_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      self->queue_.pop_front();
      if (ec) {
        self->close();
        return;
      }
      self->write_next();
    });
  }

  void close() {
    if (closed_) return;
    closed_ = true;
    if (id_ != 0) {
      registry_.clients.erase(id_);
      live_.post(ClientEvent{id_, ClientDisconnected{}});
    }
  }

  websocket::stream<beast::tcp_stream> ws_;
  LiveSession& live_;
  Registry& registry_;
  std::size_t queue_limit_;
  beast::flat_buffer buffer_;
  std::deque<std::shared_ptr<const std::string>> queue_;
  bool writing_ = false;
  bool closed_ = false;
  ClientId id_ = 0;
};

class HttpSession : public std::enable_shared_from_this<HttpSession> {
 public:
  HttpSession(tcp::socket socket, LiveSession& live, Registry& registry, const ServerOptions& options)
      : stream_(std::move(socket)), live_(live), registry_(registry), options_(options) {}

  void run() { read(); }

 private:
  void read() {
    req_ = {};
    stream_.expires_after(std::chrono::seconds(30));
    http::async_read(stream_, buffer_, req_,
                     [self = shared_from_this()](beast::error_code ec, std::size_t) { self->on_read(ec); });
  }

  void on_read(beast::error_code ec) {
    if (ec) return;
    const std::string target(req_.target());
    if (websocket::is_upgrade(req_)) {
      if (target == "/ws") {
        stream_.expires_never();
        std::make_shared<WsSession>(stream_.release_socket(), live_, registry_, options_.client_queue)
            ->run(std::move(req_));
        return;
      }
      respond(http::status::not_found, "text/plain", "websocket endpoint is /ws\n");
      return;
    }
    if (req_.method() != http::verb::get && req_.method() != http::verb::head) {
      respond(http::status::method_not_allowed, "text/plain", "only GET is supported\n");
      return;
    }
    if (options_.static_root.empty()) {
      respond(http::status::not_found, "text/plain", "static serving is disabled\n");
      return;
    }
    const auto file = resolve_static(options_.static_root, target);
    if (!file) {
      respond(http::status::not_found, "text/plain", "not found\n");
      return;
    }
    std::ifstream in(*file, std::ios::binary);
    std::ostringstream body;
    body << in.rdbuf();
    respond(http::status::ok, mime_type(file->string()), body.str());
  }

  void respond(http::status status, std::string_view type, std::string body) {
    auto res = std::make_shared<http::response<http::string_body>>(status, req_.version());
    res->set(http::field::server, "deckchase");
    res->set(http::field::content_type, std::string(type));
    res->keep_alive(req_.keep_alive());
    if (req_.method() == http::verb::head) {
      res->content_length(body.size());
    } else {
      res->body() = std::move(body);
      res->prepare_payload();
    }
    http::async_write(stream_, *res, [self = shared_from_this(), res](beast::error_code ec, std::size_t) {
      if (ec) return;
      if (!res->keep_alive()) {
        beast::error_code ignored;
        self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
        return;
      }
      self->read();
    });
  }

  beast::tcp_stream stream_;
  LiveSession& live_;
  Registry& registry_;
  const ServerOptions& options_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> req_;
};

}  // namespace

struct WsServer::Impl {
  Impl(ServerOptions opts, LiveSession& s) : options(std::move(opts)), live(s), acceptor(ioc), pump(ioc) {}

  void accept() {
    acceptor.async_accept([this](beast::error_code ec, tcp::socket socket) {
      if (ec) return;
      std::make_shared<HttpSession>(std::move(socket), live, registry, options)->run();
      accept();
    });
  }

  void schedule_pump() {
    pump.expires_after(std::chrono::milliseconds(5));
    pump.async_wait([this](beast::error_code ec) {
      if (ec) return;
      for (auto& out : live.take_outgoing()) {
        auto text = std::make_shared<const std::string>(std::move(out.text));
        if (out.to) {
          if (auto it = registry.clients.find(*out.to); it != registry.clients.end()) {
            if (auto s = it->second.lock()) s->send(text);
          }
        } else {
          for (auto& [id, weak] : registry.clients) {
            if (auto s = weak.lock()) s->send(text);
          }
        }
      }
      schedule_pump();
    });
  }

  ServerOptions options;
  LiveSession& live;
  asio::io_context ioc;
  tcp::acceptor acceptor;
  asio::steady_timer pump;
  Registry registry;
  std::thread thread;
};

WsServer::WsServer(ServerOptions options, LiveSession& session)
    : impl_(std::make_unique<Impl>(std::move(options), session)) {
  beast::error_code ec;
  const auto address = asio::ip::make_address(impl_->options.address, ec);
  if (ec) throw InvalidArgument(fmt::format("invalid listen address '{}'", impl_->options.address));
  const tcp::endpoint endpoint(address, impl_->options.port);
  impl_->acceptor.open(endpoint.protocol(), ec);
  if (!ec) impl_->acceptor.set_option(asio::socket_base::reuse_address(true), ec);
  if (!ec) impl_->acceptor.bind(endpoint, ec);
  if (!ec) impl_->acceptor.listen(asio::socket_base::max_listen_connections, ec);
  if (ec) {
    throw Error(fmt::format("cannot listen on {}:{}: {}", impl_->options.address, impl_->options.port, ec.message()));
  }
  impl_->accept();
  impl_->schedule_pump();
}

WsServer::~WsServer() { stop(); }

unsigned short WsServer::port() const { return impl_->acceptor.local_endpoint().port(); }

void WsServer::run() { impl_->ioc.run(); }

void WsServer::start_background() {
  if (impl_->thread.joinable()) return;
  impl_->thread = std::thread([this] { impl_->ioc.run(); });
}

void WsServer::stop() {
  impl_->ioc.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace deckchase::server
