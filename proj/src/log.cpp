#include "wsac/log.hpp"

#include <atomic>
#include <cstdlib>
#include <iostream>
#include <string_view>

namespace wsac::log {

namespace {

Level from_env() {
  const char* raw = std::getenv("WSAC_LOG");
  if (raw == nullptr) return Level::kError;
  const std::string_view v(raw);
  if (v == "debug") return Level::kDebug;
  if (v == "info") return Level::kInfo;
  return Level::kError;
}

std::atomic<int>& current() {
  static std::atomic<int> lvl{static_cast<int>(from_env())};
  return lvl;
}

class NullBuffer : public std::streambuf {
 protected:
  int overflow(int c) override { return c; }
};

std::ostream& sink(Level wanted) {
  static NullBuffer null_buffer;
  static std::ostream null_stream(&null_buffer);
  return current().load() >= static_cast<int>(wanted) ? std::cerr : null_stream;
}

}  // namespace

Level level() { return static_cast<Level>(current().load()); }
void set_level(Level lvl) { current().store(static_cast<int>(lvl)); }

std::ostream& error() { return sink(Level::kError); }
std::ostream& info() { return sink(Level::kInfo); }
std::ostream& debug() { return sink(Level::kDebug); }

}  // namespace wsac::log
