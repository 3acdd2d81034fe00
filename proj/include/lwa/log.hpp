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

#include <functional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace lwa {

enum class LogLevel { kDebug = 0, kInfo = 1, kWarn = 2, kError = 3 };

/// Threshold from LWA_LOG_LEVEL (debug|info|warn|error), default info.
LogLevel log_threshold();
void set_log_threshold(LogLevel level);

/// Emits one JSON object per line: {"level", "event", ...fields}. Goes to
/// stderr unless a sink is installed. Thread-safe.
void log_event(LogLevel level, std::string_view event, nlohmann::json fields = {});

/// Replaces the stderr sink; pass an empty function to restore it.
void set_log_sink(std::function<void(const std::string&)> sink);

}  // namespace lwa
