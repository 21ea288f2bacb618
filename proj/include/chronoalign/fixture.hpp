// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "chronoalign/llm_bridge.hpp"

namespace httplib {
class Server;
}

// Recorded chat exchanges and the local server that replays them.
//
// Fixture directory layout:
//   manifest.json        {"format": "chronoalign-fixture/1",
//                         "exchanges": [{"file": ..., "sha256": ...}, ...]}
//   exchange_0001.json   {"turn": 1, "request": {...}?, "response": {...}}
//   ...
// One exchange file per model turn. `request` is present for recordings and
// absent for hand-scripted fixtures.
namespace chronoalign {

inline constexpr std::string_view kFixtureFormat = "chronoalign-fixture/1";

std::string sha256_hex(std::string_view bytes);

/// Chat-completions response whose single tool call runs `code`.
nlohmann::json tool_call_response(const std::string& code, int turn = 1);

/// Chat-completions response with plain text and no tool call.
nlohmann::json text_response(const std::string& content, int turn = 1);

/// Writes a scripted fixture (responses only) plus its manifest.
void write_fixture(const std::filesystem::path& dir, const std::vector<nlohmann::json>& responses);

struct FixtureExchange {
  std::optional<nlohmann::json> request;
  nlohmann::json response;
};

/// Loads and checksum-verifies a fixture directory. Throws FixtureError on
/// a missing file, a malformed manifest or a checksum mismatch.
std::vector<FixtureExchange> load_fixture(const std::filesystem::path& dir);

/// Serves a fixture over HTTP on 127.0.0.1. The i-th POST to any path
/// ending in /chat/completions receives the i-th recorded response. When
/// the exchange carries a recorded request and `verify_requests` is set, a
/// differing request is answered with HTTP 409.
class FixtureServer {
 public:
  explicit FixtureServer(const std::filesystem::path& dir, bool verify_requests = true);
  ~FixtureServer();

  FixtureServer(const FixtureServer&) = delete;
  FixtureServer& operator=(const FixtureServer&) = delete;

  int port() const { return port_; }
  /// e.g. http://127.0.0.1:PORT/v1
  std::string base_url() const;
  std::size_t served() const;
  std::size_t size() const { return exchanges_.size(); }

  void stop();

 private:
  std::vector<FixtureExchange> exchanges_;
  bool verify_requests_;
  mutable std::mutex mutex_;
  std::size_t cursor_ = 0;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  int port_ = 0;
};

/// Forwards to another client and records every exchange into `dir`.
/// finalize() writes the manifest; the destructor calls it if needed.
class RecordingChatClient final : public ChatClient {
 public:
  RecordingChatClient(ChatClient& inner, std::filesystem::path dir);
  ~RecordingChatClient() override;

  nlohmann::json complete(const nlohmann::json& request) override;
  void finalize();
  std::size_t recorded() const;

 private:
  ChatClient& inner_;
  std::filesystem::path dir_;
  mutable std::mutex mutex_;
  nlohmann::json manifest_entries_ = nlohmann::json::array();
  bool finalized_ = false;
};

}  // namespace chronoalign
