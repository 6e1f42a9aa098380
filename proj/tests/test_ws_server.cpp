#include "deckchase/errors.hpp"
#include "deckchase/ws_server.hpp"

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

using namespace deckchase;
using namespace deckchase::server;

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = boost::asio::ip::tcp;

namespace {

class ServerFixture : public ::testing::Test {
 protected:
  void SetUp() override {
    root_ = std::filesystem::temp_directory_path() / "deckchase_ws_test";
    std::filesystem::remove_all(root_);
    std::filesystem::create_directories(root_ / "assets");
    std::ofstream(root_ / "index.html") << "<html>cockpit</html>";
    std::ofstream(root_ / "assets" / "app.js") << "console.log(1);";
    std::ofstream(root_.parent_path() / "deckchase_secret.txt") << "secret";

    session_ = std::make_unique<LiveSession>(LiveOptions{});
    ServerOptions opts;
    opts.port = 0;
    opts.static_root = root_.string();
    server_ = std::make_unique<WsServer>(opts, *session_);
    session_->start();
    server_->start_background();
  }

  void TearDown() override {
    server_->stop();
    session_->stop();
    std::filesystem::remove_all(root_);
    std::filesystem::remove(root_.parent_path() / "deckchase_secret.txt");
  }

  http::response<http::string_body> get(const std::string& target) {
    tcp::resolver resolver(io_);
    beast::tcp_stream stream(io_);
    stream.connect(resolver.resolve("127.0.0.1", std::to_string(server_->port())));
    http::request<http::empty_body> req(http::verb::get, target, 11);
    req.set(http::field::host, "127.0.0.1");
    http::write(stream, req);
    beast::flat_buffer buf;
    http::response<http::string_body> res;
    http::read(stream, buf, res);
    beast::error_code ec;
    stream.socket().shutdown(tcp::socket::shutdown_both, ec);
    return res;
  }

  std::unique_ptr<websocket::stream<tcp::socket>> open_ws() {
    tcp::resolver resolver(io_);
    auto ws = std::make_unique<websocket::stream<tcp::socket>>(io_);
    boost::asio::connect(ws->next_layer(), resolver.resolve("127.0.0.1", std::to_string(server_->port())));
    ws->handshake("127.0.0.1", "/ws");
    return ws;
  }

  static wire::ServerMessage read_message(websocket::stream<tcp::socket>& ws) {
    beast::flat_buffer buf;
    ws.read(buf);
    return wire::parse_server_message(beast::buffers_to_string(buf.data()));
  }

  boost::asio::io_context io_;
  std::filesystem::path root_;
  std::unique_ptr<LiveSession> session_;
  std::unique_ptr<WsServer> server_;
};

}  // namespace

TEST_F(ServerFixture, BindsEphemeralPort) { EXPECT_NE(server_->port(), 0); }

TEST_F(ServerFixture, StreamsValidStateMessages) {
  auto ws = open_ws();
  for (int i = 0; i < 5; ++i) {
    const auto msg = read_message(*ws);  // throws on any schema violation
    ASSERT_TRUE(std::holds_alternative<wire::StateMessage>(msg));
  }
  ws->close(websocket::close_code::normal);
}

TEST_F(ServerFixture, SteerChangesYawRateWithinTwoFrames) {
  auto ws = open_ws();
  read_message(*ws);
  ws->write(boost::asio::buffer(wire::serialize(wire::ClientMessage{wire::SteerMessage{3.0, 0.5}})));
  // Frames already queued before the command may still arrive; allow a few
  // stale frames, then require the effect within two fresh ones.
  bool turned = false;
  for (int i = 0; i < 6 && !turned; ++i) {
    const auto msg = read_message(*ws);
    if (const auto* s = std::get_if<wire::StateMessage>(&msg)) turned = s->usv.yaw_rate != 0.0;
  }
  EXPECT_TRUE(turned);
  ws->close(websocket::close_code::normal);
}

TEST_F(ServerFixture, MalformedMessageGetsErrorAndStaysOpen) {
  auto ws = open_ws();
  ws->write(boost::asio::buffer(std::string(R"({"type":"fly"})")));
  bool got_error = false;
  int states_after = 0;
  for (int i = 0; i < 20 && states_after < 3; ++i) {
    const auto msg = read_message(*ws);
    if (std::holds_alternative<wire::ErrorMessage>(msg)) {
      got_error = true;
    } else if (got_error) {
      ++states_after;
    }
  }
  EXPECT_TRUE(got_error);
  EXPECT_EQ(states_after, 3);
  ws->close(websocket::close_code::normal);
}

TEST_F(ServerFixture, ServesStaticFiles) {
  const auto index = get("/");
  EXPECT_EQ(index.result(), http::status::ok);
  EXPECT_EQ(index.body(), "<html>cockpit</html>");
  EXPECT_EQ(index[http::field::content_type], "text/html");
  const auto js = get("/assets/app.js?v=2");
  EXPECT_EQ(js.result(), http::status::ok);
  EXPECT_EQ(js.body(), "console.log(1);");
  EXPECT_EQ(get("/missing.css").result(), http::status::not_found);
  EXPECT_EQ(get("/../deckchase_secret.txt").result(), http::status::not_found);
  EXPECT_EQ(get("/assets/../../deckchase_secret.txt").result(), http::status::not_found);
}

TEST(StaticFiles, ResolveAndMime) {
  const auto root = std::filesystem::temp_directory_path() / "deckchase_static_test";
  std::filesystem::create_directories(root);
  std::ofstream(root / "index.html") << "x";
  EXPECT_TRUE(resolve_static(root, "/").has_value());
  EXPECT_TRUE(resolve_static(root, "/index.html#top").has_value());
  EXPECT_FALSE(resolve_static(root, "/../etc/passwd").has_value());
  EXPECT_FALSE(resolve_static(root, "index.html").has_value());
  EXPECT_EQ(mime_type("a/b.js"), "application/javascript");
  EXPECT_EQ(mime_type("x.unknown"), "application/octet-stream");
  std::filesystem::remove_all(root);
}
