#include "dml/log.hpp"

#include <atomic>
#include <iostream>

namespace dml {

namespace {
std::atomic<std::size_t> g_warn_count{0};
std::atomic<bool> g_quiet{false};
}  // namespace

void warn(const std::string& message) {
  g_warn_count.fetch_add(1, std::memory_order_relaxed);
  if (!g_quiet.load(std::memory_order_relaxed)) {
    std::cerr << "[warn] " << message << "\n";
  }
}

std::size_t warn_count() { return g_warn_count.load(std::memory_order_relaxed); }

void reset_warn_count() { g_warn_count.store(0, std::memory_order_relaxed); }

void set_warn_quiet(bool quiet) { g_quiet.store(quiet, std::memory_order_relaxed); }

}  // namespace dml
