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

#ifndef HATKIT_MEMORY_H_
#define HATKIT_MEMORY_H_

#include <cstddef>
#include <new>

namespace hatkit {

// Process-wide accounting of tensor storage. Every Tensor buffer goes through
// TrackingAllocator, so peak_bytes() is the high-water mark of live tensor
// data since the last reset_peak().
class MemoryTracker {
 public:
  static std::size_t current_bytes();
  static std::size_t peak_bytes();
  static void reset_peak();
  // Allocations that would take current_bytes() above the limit throw
  // std::bad_alloc; 0 disables the limit.
  static void set_limit(std::size_t bytes);
  static std::size_t limit();

  static void on_allocate(std::size_t bytes);
  static void on_deallocate(std::size_t bytes);
};

// Buffers are 64-byte aligned so vectorized kernels take the same code path
// (and summation order) for every allocation.
inline constexpr std::size_t kBufferAlignment = 64;

template <typename T>
struct TrackingAllocator {
  using value_type = T;

  TrackingAllocator() noexcept = default;
  template <typename U>
  TrackingAllocator(const TrackingAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) {
    MemoryTracker::on_allocate(n * sizeof(T));
    try {
      return static_cast<T*>(::operator new(n * sizeof(T), std::align_val_t{kBufferAlignment}));
    } catch (...) {
      MemoryTracker::on_deallocate(n * sizeof(T));
      throw;
    }
  }
  void deallocate(T* p, std::size_t n) noexcept {
    MemoryTracker::on_deallocate(n * sizeof(T));
    ::operator delete(p, std::align_val_t{kBufferAlignment});
  }

  template <typename U>
  bool operator==(const TrackingAllocator<U>&) const noexcept {
    return true;
  }
};

}  // namespace hatkit

#endif  // HATKIT_MEMORY_H_
