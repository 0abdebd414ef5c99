// Copyright 2026 the covsim authors
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
#include <string>
#include <string_view>

namespace covsim::log {

enum class Level { Error = 0, Info = 1, Debug = 2 };

inline Level& threshold() {
  static Level level = [] {
    const char* env = std::getenv("COVSIM_LOG");
    if (!env) return Level::Error;
    const std::string_view s(env);
    if (s == "debug") return Level::Debug;
    if (s == "info") return Level::Info;
    return Level::Error;
  }();
  return level;
}

inline void write(Level level, std::string_view msg) {
  if (level > threshold()) return;
  const char* tag = level == Level::Error ? "error" : level == Level::Info ? "info" : "debug";
  std::cerr << "[covsim " << tag << "] " << msg << '\n';
}

inline void error(std::string_view msg) { write(Level::Error, msg); }
inline void info(std::string_view msg) { write(Level::Info, msg); }
inline void debug(std::string_view msg) { write(Level::Debug, msg); }

}  // namespace covsim::log
