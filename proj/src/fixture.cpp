// SPDX-License-Identifier: Apache-2.0
#include "chronoalign/fixture.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <httplib.h>
#include <openssl/evp.h>

#include "chronoalign/errors.hpp"

namespace chronoalign {

namespace fs = std::filesystem;

namespace {

std::string exchange_name(std::size_t turn) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "exchange_%04zu.json", turn);
  return buf;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FixtureError("cannot read " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const fs::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FixtureError("cannot write " + path.string());
  out << bytes;
}

nlohmann::json make_manifest(const nlohmann::json& entries) {
  return {{"format", std::string(kFixtureFormat)}, {"exchanges", entries}};
}

}  // namespace

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw FixtureError("sha256 failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xf]);
  }
  return out;
}

nlohmann::json tool_call_response(const std::string& code, int turn) {
  const auto id = "call_" + std::to_string(turn);
  return {{"id", "fixture-" + std::to_string(turn)},
          {"object", "chat.completion"},
          {"choices",
           {{{"index", 0},
             {"message",
              {{"role", "assistant"},
               {"content", nullptr},
               {"tool_calls",
                {{{"id", id},
                  {"type", "function"},
                  {"function",
                   {{"name", std::string(kToolName)},
                    {"arguments", nlohmann::json{{"code", code}}.dump()}}}}}}}},
             {"finish_reason", "tool_calls"}}}}};
}

nlohmann::json text_response(const std::string& content, int turn) {
  return {{"id", "fixture-" + std::to_string(turn)},
          {"object", "chat.completion"},
          {"choices",
           {{{"index", 0},
             {"message", {{"role", "assistant"}, {"content", content}}},
             {"finish_reason", "stop"}}}}};
}

void write_fixture(const fs::path& dir, const std::vector<nlohmann::json>& responses) {
  fs::create_directories(dir);
  nlohmann::json entries = nlohmann::json::array();
  for (std::size_t i = 0; i < responses.size(); ++i) {
    const auto name = exchange_name(i + 1);
    const nlohmann::json exchange = {{"turn", i + 1}, {"response", responses[i]}};
    const auto bytes = exchange.dump(2) + "\n";
    write_file(dir / name, bytes);
    entries.push_back({{"file", name}, {"sha256", sha256_hex(bytes)}});
  }
  write_file(dir / "manifest.json", make_manifest(entries).dump(2) + "\n");
}

std::vector<FixtureExchange> load_fixture(const fs::path& dir) {
  const auto manifest = nlohmann::json::parse(read_file(dir / "manifest.json"), nullptr, false);
  if (manifest.is_discarded() || !manifest.is_object() ||
      manifest.value("format", "") != kFixtureFormat || !manifest.contains("exchanges") ||
      !manifest["exchanges"].is_array())
    throw FixtureError(dir.string() + ": malformed manifest.json");

  std::vector<FixtureExchange> out;
  for (const auto& entry : manifest["exchanges"]) {
    const auto file = entry.value("file", "");
    const auto expected = entry.value("sha256", "");
    if (file.empty() || file.find('/') != std::string::npos || file.find("..") != std::string::npos)
      throw FixtureError(dir.string() + ": bad exchange file name '" + file + "'");
    const auto bytes = read_file(dir / file);
    const auto actual = sha256_hex(bytes);
    if (actual != expected)
      throw FixtureError("checksum mismatch for " + (dir / file).string() + ": expected " +
                         expected + ", got " + actual);
    const auto j = nlohmann::json::parse(bytes, nullptr, false);
    if (j.is_discarded() || !j.contains("response"))
      throw FixtureError((dir / file).string() + ": not an exchange");
    FixtureExchange ex;
    ex.response = j["response"];
    if (j.contains("request")) ex.request = j["request"];
    out.push_back(std::move(ex));
  }
  return out;
}

FixtureServer::FixtureServer(const fs::path& dir, bool verify_requests)
    : exchanges_(load_fixture(dir)),
      verify_requests_(verify_requests),
      server_(std::make_unique<httplib::Server>()) {
  server_->Post(R"(.*/chat/completions)", [this](const httplib::Request& req,
                                                 httplib::Response& res) {
    std::lock_guard lock(mutex_);
    if (cursor_ >= exchanges_.size()) {
      res.status = 410;
      res.set_content(R"({"error":{"message":"fixture exhausted"}})", "application/json");
      return;
    }
    const auto& ex = exchanges_[cursor_];
    if (verify_requests_ && ex.request) {
      const auto incoming = nlohmann::json::parse(req.body, nullptr, false);
      if (incoming != *ex.request) {
        res.status = 409;
        res.set_content(nlohmann::json{{"error",
                                        {{"message", "request diverges from recording at turn " +
                                                         std::to_string(cursor_ + 1)}}}}
                            .dump(),
                        "application/json");
        return;
      }
    }
    ++cursor_;
    res.set_content(ex.response.dump(), "application/json");
  });
  port_ = server_->bind_to_any_port("127.0.0.1");
  if (port_ <= 0) throw FixtureError("fixture server could not bind a port");
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
}

FixtureServer::~FixtureServer() { stop(); }

void FixtureServer::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

std::string FixtureServer::base_url() const {
  return "http://127.0.0.1:" + std::to_string(port_) + "/v1";
}

std::size_t FixtureServer::served() const {
  std::lock_guard lock(mutex_);
  return cursor_;
}

RecordingChatClient::RecordingChatClient(ChatClient& inner, fs::path dir)
    : inner_(inner), dir_(std::move(dir)) {
  fs::create_directories(dir_);
}

RecordingChatClient::~RecordingChatClient() {
  try {
    if (!finalized_) finalize();
  } catch (...) {
  }
}

nlohmann::json RecordingChatClient::complete(const nlohmann::json& request) {
  auto response = inner_.complete(request);
  std::lock_guard lock(mutex_);
  const auto turn = manifest_entries_.size() + 1;
  const auto name = exchange_name(turn);
  const nlohmann::json exchange = {{"turn", turn}, {"request", request}, {"response", response}};
  const auto bytes = exchange.dump(2) + "\n";
  write_file(dir_ / name, bytes);
  manifest_entries_.push_back({{"file", name}, {"sha256", sha256_hex(bytes)}});
  return response;
}

void RecordingChatClient::finalize() {
  std::lock_guard lock(mutex_);
  write_file(dir_ / "manifest.json", make_manifest(manifest_entries_).dump(2) + "\n");
  finalized_ = true;
}

std::size_t RecordingChatClient::recorded() const {
  std::lock_guard lock(mutex_);
  return manifest_entries_.size();
}

}  // namespace chronoalign
