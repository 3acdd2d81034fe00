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

#include "lwa/log.hpp"

#include <cstdlib>
#include <iostream>
#include <mutex>
#include <optional>

namespace lwa {

namespace {

std::mutex& log_mutex() {
  static std::mutex m;
  return m;
}

std::function<void(const std::string&)>& sink() {
  static std::function<void(const std::string&)> s;
  return s;
}

std::optional<LogLevel>& threshold_override() {
  static std::optional<LogLevel> t;
  return t;
}

std::string_view level_name(LogLevel level) {
  switch (level) {
    case LogLevel::kDebug: return "debug";
    case LogLevel::kInfo: return "info";
    case LogLevel::kWarn: return "warn";
    case LogLevel::kError: return "error";
  }
  return "info";
}

}  // namespace

LogLevel log_threshold() {
  {
    std::lock_guard lock(log_mutex());
    if (threshold_override()) return *threshold_override();
  }
  const char* env = std::getenv("LWA_LOG_LEVEL");
  if (!env) return LogLevel::kInfo;
  const std::string_view v(env);
  if (v == "debug") return LogLevel::kDebug;
  if (v == "warn") return LogLevel::kWarn;
  if (v == "error") return LogLevel::kError;
  return LogLevel::kInfo;
}

void set_log_threshold(LogLevel level) {
  std::lock_guard lock(log_mutex());
  threshold_override() = level;
}

void log_event(LogLevel level, std::string_view event, nlohmann::json fields) {
  if (level < log_threshold()) return;
  nlohmann::json line = fields.is_object() ? std::move(fields) : nlohmann::json::object();
  line["level"] = level_name(level);
  line["event"] = event;
  const std::string text = line.dump();
  std::lock_guard lock(log_mutex());
  if (sink()) {
    sink()(text);
  } else {
    std::cerr << text << '\n';
  }
}

void set_log_sink(std::function<void(const std::string&)> s) {
  std::lock_guard lock(log_mutex());
  sink() = std::move(s);
}

}  // namespace lwa
