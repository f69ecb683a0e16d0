#pragma once

#include <cstddef>
#include <vector>

namespace pidmrl::nn {

// Dense row-major matrix. Rows are samples in batched calls.
template <typename T>
struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<T> v;

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), v(static_cast<std::size_t>(r) * c) {}

  void resize(int r, int c) {
    rows = r;
    cols = c;
    v.assign(static_cast<std::size_t>(r) * c, T(0));
  }

  T* row(int i) { return v.data() + static_cast<std::size_t>(i) * cols; }
  const T* row(int i) const {
    return v.data() + static_cast<std::size_t>(i) * cols;
  }
  T& at(int r, int c) { return v[static_cast<std::size_t>(r) * cols + c]; }
  T at(int r, int c) const {
    return v[static_cast<std::size_t>(r) * cols + c];
  }
  T* data() { return v.data(); }
  const T* data() const { return v.data(); }
  std::size_t size() const { return v.size(); }
};

}  // namespace pidmrl::nn
