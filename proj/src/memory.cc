/* Copyright 2026 The hatkit Authors. All Rights Reserved.

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

#include "hatkit/memory.h"

#include <atomic>
#include <new>

namespace hatkit {
namespace {

std::atomic<std::size_t> g_current{0};
std::atomic<std::size_t> g_peak{0};
std::atomic<std::size_t> g_limit{0};

}  // namespace

std::size_t MemoryTracker::current_bytes() { return g_current.load(); }
std::size_t MemoryTracker::peak_bytes() { return g_peak.load(); }
void MemoryTracker::reset_peak() { g_peak.store(g_current.load()); }

void MemoryTracker::set_limit(std::size_t bytes) { g_limit.store(bytes); }
std::size_t MemoryTracker::limit() { return g_limit.load(); }

void MemoryTracker::on_allocate(std::size_t bytes) {
  const std::size_t now = g_current.fetch_add(bytes) + bytes;
  const std::size_t cap = g_limit.load();
  if (cap != 0 && now > cap) {
    g_current.fetch_sub(bytes);
    throw std::bad_alloc();
  }
  std::size_t peak = g_peak.load();
  while (now > peak && !g_peak.compare_exchange_weak(peak, now)) {
  }
}

void MemoryTracker::on_deallocate(std::size_t bytes) { g_current.fetch_sub(bytes); }

}  // namespace hatkit
