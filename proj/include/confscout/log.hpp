// Copyright 2026 The confscout Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdlib>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>
#include <string_view>

// Minimal stderr logger. Verbosity comes from CONFSCOUT_LOG
// (error, warn, info, debug; default warn).
namespace confscout::log {

enum class Level { error = 0, warn = 1, info = 2, debug = 3 };

inline Level level_from_env() {
  const char* env = std::getenv("CONFSCOUT_LOG");
  if (env == nullptr) return Level::warn;
  const std::string_view v(env);
  if (v == "error") return Level::error;
  if (v == "info") return Level::info;
  if (v == "debug") return Level::debug;
  return Level::warn;
}

inline Level& threshold() {
  static Level level = level_from_env();
  return level;
}

inline bool enabled(Level l) { return static_cast<int>(l) <= static_cast<int>(threshold()); }

template <typename... Args>
void write(Level l, const Args&... args) {
  if (!enabled(l)) return;
  static std::mutex mu;
  std::ostringstream os;
  constexpr const char* tags[] = {"error", "warn", "info", "debug"};
  os << "[confscout " << tags[static_cast<int>(l)] << "] ";
  (os << ... << args);
  os << '\n';
  std::lock_guard<std::mutex> lock(mu);
  std::cerr << os.str();
}

template <typename... Args>
void error(const Args&... args) { write(Level::error, args...); }
template <typename... Args>
void warn(const Args&... args) { write(Level::warn, args...); }
template <typename... Args>
void info(const Args&... args) { write(Level::info, args...); }
template <typename... Args>
void debug(const Args&... args) { write(Level::debug, args...); }

}  // namespace confscout::log
