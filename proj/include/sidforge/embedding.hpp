#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "sidforge/error.hpp"

namespace sidforge {

// Dense n x d float matrix, row-major; row i is item i's vector.
struct EmbeddingMatrix {
  std::size_t n = 0;
  std::size_t d = 0;
  std::vector<float> data;

  EmbeddingMatrix() = default;
  EmbeddingMatrix(std::size_t rows, std::size_t cols) : n(rows), d(cols), data(rows * cols, 0.0f) {}
  EmbeddingMatrix(std::size_t rows, std::size_t cols, std::vector<float> values)
      : n(rows), d(cols), data(std::move(values)) {
    if (data.size() != n * d) {
      throw Error(ErrorCode::DimMismatch, "embedding buffer has " + std::to_string(data.size()) +
                                              " values, expected " + std::to_string(n * d));
    }
  }

  std::span<const float> row(std::size_t i) const {
    return std::span<const float>(data).subspan(i * d, d);
  }
  std::span<float> row(std::size_t i) { return std::span<float>(data).subspan(i * d, d); }

  void require_finite() const {
    for (std::size_t k = 0; k < data.size(); ++k) {
      if (!std::isfinite(data[k])) {
        throw Error(ErrorCode::BadInput, "non-finite value in row " + std::to_string(k / d));
      }
    }
  }
};

}  // namespace sidforge
