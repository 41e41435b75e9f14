#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace w2s {

// Tracks live/peak bytes of Tensor4 payloads on the current thread while a
// tracker is installed. Used by the inference-memory check; zero overhead
// otherwise.
struct MemTracker {
  std::size_t live = 0;
  std::size_t peak = 0;

  static MemTracker*& active() {
    thread_local MemTracker* t = nullptr;
    return t;
  }
  static void on_alloc(std::size_t bytes) {
    if (MemTracker* t = active()) {
      t->live += bytes;
      if (t->live > t->peak) t->peak = t->live;
    }
  }
  static void on_free(std::size_t bytes) {
    if (MemTracker* t = active()) t->live -= (bytes <= t->live ? bytes : t->live);
  }
};

// Installs a tracker for the current scope.
class ScopedMemTracking {
 public:
  explicit ScopedMemTracking(MemTracker& t) : prev_(MemTracker::active()) {
    MemTracker::active() = &t;
  }
  ~ScopedMemTracking() { MemTracker::active() = prev_; }
  ScopedMemTracking(const ScopedMemTracking&) = delete;
  ScopedMemTracking& operator=(const ScopedMemTracking&) = delete;

 private:
  MemTracker* prev_;
};

// Dense 4-axis tensor, layout (batch, channel, height, width) with width
// fastest. Height carries time frames / tokens, width carries mel bins.
template <typename T>
struct Tensor4 {
  std::array<int, 4> shape{0, 0, 0, 0};
  std::vector<T> data;

  Tensor4() = default;
  Tensor4(int b, int c, int h, int w) : shape{b, c, h, w} {
    if (b < 1 || c < 1 || h < 1 || w < 1) throw std::invalid_argument("Tensor4: all dims must be >= 1");
    data.assign(static_cast<std::size_t>(numel()), T(0));
    MemTracker::on_alloc(bytes());
  }
  ~Tensor4() { MemTracker::on_free(bytes()); }

  Tensor4(const Tensor4& o) : shape(o.shape), data(o.data) { MemTracker::on_alloc(bytes()); }
  Tensor4(Tensor4&& o) noexcept : shape(o.shape), data(std::move(o.data)) {
    o.shape = {0, 0, 0, 0};
  }
  Tensor4& operator=(const Tensor4& o) {
    if (this != &o) {
      MemTracker::on_free(bytes());
      shape = o.shape;
      data = o.data;
      MemTracker::on_alloc(bytes());
    }
    return *this;
  }
  Tensor4& operator=(Tensor4&& o) noexcept {
    if (this != &o) {
      MemTracker::on_free(bytes());
      shape = o.shape;
      data = std::move(o.data);
      o.shape = {0, 0, 0, 0};
    }
    return *this;
  }

  std::int64_t numel() const {
    return static_cast<std::int64_t>(shape[0]) * shape[1] * shape[2] * shape[3];
  }
  std::size_t bytes() const { return data.size() * sizeof(T); }

  T& at(int b, int c, int h, int w) {
    return data[((static_cast<std::size_t>(b) * shape[1] + c) * shape[2] + h) * shape[3] + w];
  }
  const T& at(int b, int c, int h, int w) const {
    return data[((static_cast<std::size_t>(b) * shape[1] + c) * shape[2] + h) * shape[3] + w];
  }

  // Pointer to the (b, c) plane, h x w row-major.
  T* plane(int b, int c) {
    return data.data() + (static_cast<std::size_t>(b) * shape[1] + c) * shape[2] * shape[3];
  }
  const T* plane(int b, int c) const {
    return data.data() + (static_cast<std::size_t>(b) * shape[1] + c) * shape[2] * shape[3];
  }

  bool same_shape(const Tensor4& o) const { return shape == o.shape; }

  void fill(T v) { std::fill(data.begin(), data.end(), v); }
};

}  // namespace w2s
