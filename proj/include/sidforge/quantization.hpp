#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "sidforge/error.hpp"

namespace sidforge {

// Residual-quantization state of a tokenizer: per-level codebooks and, for
// every item, the residual fed to the last level. Float32 storage.
struct QuantizationModel {
  std::size_t levels = 0;         // L
  std::size_t codebook_size = 0;  // V
  std::size_t dim = 0;            // d
  std::size_t n_items = 0;        // N
  std::vector<float> codebooks;   // L * V * d, level-major
  std::vector<float> residuals;   // N * d, row-major

  std::span<const float> codebook(std::size_t level) const {
    return std::span<const float>(codebooks).subspan(level * codebook_size * dim,
                                                     codebook_size * dim);
  }
  std::span<const float> codeword(std::size_t level, std::size_t code) const {
    return std::span<const float>(codebooks).subspan((level * codebook_size + code) * dim, dim);
  }
  std::span<const float> residual(std::size_t item) const {
    return std::span<const float>(residuals).subspan(item * dim, dim);
  }

  void validate() const {
    if (codebooks.size() != levels * codebook_size * dim) {
      throw Error(ErrorCode::ModelMismatch, "codebook buffer size does not match L*V*d");
    }
    if (residuals.size() != n_items * dim) {
      throw Error(ErrorCode::ModelMismatch, "residual buffer size does not match N*d");
    }
    for (float x : codebooks)
      if (!std::isfinite(x)) throw Error(ErrorCode::BadInput, "non-finite codebook entry");
    for (float x : residuals)
      if (!std::isfinite(x)) throw Error(ErrorCode::BadInput, "non-finite residual entry");
  }
};

}  // namespace sidforge
