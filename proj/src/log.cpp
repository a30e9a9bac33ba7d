#include "rigscan/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace rigscan::log {
namespace {

std::atomic<Level> g_level{Level::Info};
std::mutex g_mutex;
Sink g_sink;

const char* tag(Level level) {
  switch (level) {
    case Level::Debug: return "debug";
    case Level::Info: return "info";
    case Level::Warning: return "warning";
    case Level::Error: return "error";
    case Level::Off: break;
  }
  return "";
}

}  // namespace

void set_level(Level level) { g_level.store(level); }

Level level() { return g_level.load(); }

void set_sink(Sink sink) {
  std::lock_guard lock(g_mutex);
  g_sink = std::move(sink);
}

void write(Level level, std::string_view message) {
  if (level < g_level.load() || level == Level::Off) return;
  std::lock_guard lock(g_mutex);
  if (g_sink) {
    g_sink(level, message);
    return;
  }
  std::cerr << "[" << tag(level) << "] " << message << '\n';
}

}  // namespace rigscan::log
