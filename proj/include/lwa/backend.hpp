/* Copyright 2026 The LWA Toolkit Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "lwa/layer_spec.hpp"
#include "lwa/raster.hpp"

namespace lwa {

/// One `"op": "edit"` request of the newline-delimited JSON protocol.
struct EditRequest {
  std::string id;
  std::filesystem::path packed;
  std::filesystem::path mask;
  std::string instruction;
  double d_max = 80.0;
  PixelDomain panel;

  nlohmann::json to_json() const;
  static EditRequest from_json(const nlohmann::json& j);
};

struct EditResponse {
  std::optional<std::string> id;
  bool ok = false;
  std::filesystem::path packed_out;
  std::string message;

  nlohmann::json to_json() const;
  static EditResponse from_json(const nlohmann::json& j);
};

enum class Transport { kStdio, kHttp, kInProcess };

struct BackendConfig {
  Transport transport = Transport::kStdio;
  /// Shell command line for stdio, base URL (`http://host:port`) for HTTP.
  std::string endpoint;
  std::chrono::milliseconds timeout{30000};
};

/// Parses `stdio:<command>` or `http://host:port`; a bare string is treated
/// as a stdio command line.
BackendConfig parse_backend_spec(const std::string& spec,
                                 std::chrono::milliseconds timeout);

/// Moves one JSON line to a backend and returns its reply line.
class BackendTransport {
 public:
  virtual ~BackendTransport() = default;
  virtual std::string roundtrip(const std::string& line,
                                std::chrono::milliseconds timeout) = 0;
};

/// Connection to an editing backend. Requests on one handle are serialized;
/// separate handles may run concurrently.
class BackendHandle {
 public:
  explicit BackendHandle(BackendConfig config);
  /// Handle backed by a function, used by tests and the CLI's in-process mock.
  static BackendHandle in_process(std::function<std::string(const std::string&)> serve,
                                  std::string identity = "in-process");

  BackendHandle(BackendHandle&&) noexcept;
  BackendHandle& operator=(BackendHandle&&) noexcept;
  ~BackendHandle();

  /// Sends one request and validates the reply. Throws kTimeout, or
  /// kProtocol when the reply is malformed, carries another id, or reports
  /// an error.
  EditResponse edit(const EditRequest& request);

  const BackendConfig& config() const { return config_; }
  const std::string& identity() const { return identity_; }

 private:
  BackendHandle(BackendConfig config, std::unique_ptr<BackendTransport> transport,
                std::string identity);

  BackendConfig config_;
  std::unique_ptr<BackendTransport> transport_;
  std::string identity_;
  std::unique_ptr<std::mutex> mutex_;
};

enum class MockMode { kIdentity, kConstantFill };

struct MockBackendConfig {
  MockMode mode = MockMode::kIdentity;
  Rgb8 fill_color{70, 70, 70};
  double fill_depth = 40.0;
};

/// Handles one protocol line the way the reference mock backend does.
/// Never throws: malformed input produces an error reply, echoing the
/// request id when it can be recovered and `null` otherwise.
std::string mock_backend_reply(const std::string& line, const MockBackendConfig& config);

/// Serves requests from `in` until EOF, one reply line per request line.
void serve_mock_stdio(std::istream& in, std::ostream& out, const MockBackendConfig& config);
/// Serves `POST /edit` until the process is stopped.
void serve_mock_http(const std::string& host, int port, const MockBackendConfig& config);

}  // namespace lwa
