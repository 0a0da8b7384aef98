#include "asadg/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace asadg::log {

namespace {
std::atomic<Level> g_level{Level::warn};
std::mutex g_mutex;

const char* name(Level l) {
  switch (l) {
    case Level::debug: return "debug";
    case Level::info: return "info";
    case Level::warn: return "warn";
    case Level::error: return "error";
    case Level::off: break;
  }
  return "";
}
}  // namespace

void set_level(Level level) noexcept { g_level = level; }
Level level() noexcept { return g_level; }

void write(Level l, std::string_view message) {
  if (l < g_level.load() || l == Level::off) return;
  std::lock_guard lock(g_mutex);
  std::cerr << "[asadg " << name(l) << "] " << message << '\n';
}

}  // namespace asadg::log
