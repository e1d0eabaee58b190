#include "ags/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace ags::log {

namespace {
std::atomic<long> g_count{0};
std::mutex g_mutex;
std::function<void(const std::string&)> g_sink;
}  // namespace

void warn(const std::string& message) {
  ++g_count;
  std::lock_guard lock(g_mutex);
  if (g_sink) {
    g_sink(message);
  } else {
    std::cerr << "warning: " << message << '\n';
  }
}

long warning_count() { return g_count.load(); }

void set_sink(std::function<void(const std::string&)> sink) {
  std::lock_guard lock(g_mutex);
  g_sink = std::move(sink);
}

}  // namespace ags::log
