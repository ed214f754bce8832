#pragma once

// Residual k-means tokenizer. Level 0 clusters the raw embeddings; level l
// clusters the residuals left after subtracting the level-(l-1) centroid.
// An item's SID is its per-level cluster labels.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include "sidforge/core.hpp"
#include "sidforge/detail/parallel.hpp"
#include "sidforge/embedding.hpp"
#include "sidforge/quantization.hpp"

namespace sidforge {

struct KMeansLevel {
  std::size_t k = 0;
  std::size_t dim = 0;
  std::vector<float> centroids;  // k x dim
  std::vector<Code> assignments;
  double inertia = 0.0;
  // Inertia after every assignment step: the seeding step, each Lloyd
  // iteration, and the final assignment (iters + 1 entries).
  std::vector<double> inertia_history;
};

namespace detail {

inline double squared_distance(const float* a, const float* b, std::size_t dim) {
  double acc = 0.0;
  for (std::size_t k = 0; k < dim; ++k) {
    const double diff = static_cast<double>(a[k]) - static_cast<double>(b[k]);
    acc += diff * diff;
  }
  return acc;
}

// Nearest centroid per point; equidistant centroids resolve to the lowest index.
inline double assign_points(std::span<const float> points, std::size_t n, std::size_t dim,
                            const std::vector<float>& centroids, std::size_t k,
                            std::vector<Code>& labels, std::vector<double>& dist,
                            std::size_t workers) {
  labels.resize(n);
  dist.resize(n);
  parallel_for(n, workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const float* x = points.data() + i * dim;
      double best = std::numeric_limits<double>::infinity();
      Code best_c = 0;
      for (std::size_t c = 0; c < k; ++c) {
        const double dd = squared_distance(x, centroids.data() + c * dim, dim);
        if (dd < best) {
          best = dd;
          best_c = static_cast<Code>(c);
        }
      }
      labels[i] = best_c;
      dist[i] = best;
    }
  });
  KahanSum total;
  for (double x : dist) total.add(x);
  return total.value();
}

inline std::vector<float> kmeanspp_seed(std::span<const float> points, std::size_t n,
                                        std::size_t dim, std::size_t k, std::mt19937_64& rng) {
  std::vector<float> centroids(k * dim);
  auto set_centroid = [&](std::size_t c, std::size_t i) {
    std::copy_n(points.data() + i * dim, dim, centroids.data() + c * dim);
  };
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  set_centroid(0, pick(rng));
  std::vector<double> closest(n);
  for (std::size_t i = 0; i < n; ++i) {
    closest[i] = squared_distance(points.data() + i * dim, centroids.data(), dim);
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (double x : closest) total += x;
    std::size_t chosen = 0;
    if (total > 0.0) {
      const double target = unit(rng) * total;
      double acc = 0.0;
      chosen = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        acc += closest[i];
        if (acc > target && closest[i] > 0.0) {
          chosen = i;
          break;
        }
      }
    }
    // With total == 0 every point already coincides with a centroid; the
    // duplicate stays empty because ties go to the lower index.
    set_centroid(c, chosen);
    const float* e = centroids.data() + c * dim;
    for (std::size_t i = 0; i < n; ++i) {
      closest[i] = std::min(closest[i], squared_distance(points.data() + i * dim, e, dim));
    }
  }
  return centroids;
}

}  // namespace detail

// Lloyd's algorithm with k-means++ seeding. Empty clusters are re-seeded to
// the points farthest from their current centroid. Centroids are stored in
// float32 and accumulated in float64. Deterministic for a fixed seed; the
// worker count only affects the (independent) assignment step.
inline KMeansLevel kmeans(std::span<const float> points, std::size_t n, std::size_t dim,
                          std::size_t k, std::size_t iters, std::uint64_t seed,
                          std::size_t workers = 1) {
  if (n == 0 || k == 0 || dim == 0) {
    throw Error(ErrorCode::BadInput, "k-means needs n >= 1, k >= 1, d >= 1");
  }
  if (points.size() != n * dim) throw Error(ErrorCode::DimMismatch, "point buffer is not n*d");
  for (float x : points)
    if (!std::isfinite(x)) throw Error(ErrorCode::BadInput, "non-finite k-means input");

  std::mt19937_64 rng(seed);
  KMeansLevel level;
  level.k = k;
  level.dim = dim;
  level.centroids = detail::kmeanspp_seed(points, n, dim, k, rng);

  std::vector<double> dist;
  std::vector<double> sums(k * dim);
  std::vector<std::size_t> counts(k);
  for (std::size_t it = 0; it < iters; ++it) {
    level.inertia_history.push_back(detail::assign_points(points, n, dim, level.centroids, k,
                                                          level.assignments, dist, workers));
    std::fill(sums.begin(), sums.end(), 0.0);
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      const Code c = level.assignments[i];
      ++counts[c];
      const float* x = points.data() + i * dim;
      for (std::size_t j = 0; j < dim; ++j) sums[c * dim + j] += x[j];
    }
    std::vector<std::size_t> far_order;  // built lazily, only if a cluster is empty
    std::size_t next_far = 0;
    for (std::size_t c = 0; c < k; ++c) {
      float* centroid = level.centroids.data() + c * dim;
      if (counts[c] > 0) {
        const double inv = 1.0 / static_cast<double>(counts[c]);
        for (std::size_t j = 0; j < dim; ++j) centroid[j] = static_cast<float>(sums[c * dim + j] * inv);
        continue;
      }
      if (far_order.empty()) {
        far_order.resize(n);
        std::iota(far_order.begin(), far_order.end(), std::size_t{0});
        std::stable_sort(far_order.begin(), far_order.end(),
                         [&](std::size_t a, std::size_t b) { return dist[a] > dist[b]; });
      }
      if (next_far < n && dist[far_order[next_far]] > 0.0) {
        std::copy_n(points.data() + far_order[next_far] * dim, dim, centroid);
        ++next_far;
      }
    }
  }
  level.inertia = detail::assign_points(points, n, dim, level.centroids, k, level.assignments,
                                        dist, workers);
  level.inertia_history.push_back(level.inertia);
  return level;
}

struct TokenizerResult {
  SidIndex index;
  QuantizationModel model;
  std::vector<KMeansLevel> levels;
};

// Residual k-means over `levels` levels of `codebook_size` codes each. The
// model's residuals are the inputs to the last level, which is what
// last-level reassignment scores against. Level l uses seed + l.
inline TokenizerResult tokenize(const EmbeddingMatrix& embeddings, std::size_t levels,
                                std::size_t codebook_size, std::size_t iters, std::uint64_t seed,
                                std::size_t workers = 1) {
  if (levels == 0) throw Error(ErrorCode::BadInput, "tokenizer needs L >= 1");
  embeddings.require_finite();
  const std::size_t n = embeddings.n, dim = embeddings.d;

  TokenizerResult out;
  out.model.levels = levels;
  out.model.codebook_size = codebook_size;
  out.model.dim = dim;
  out.model.n_items = n;
  out.model.codebooks.reserve(levels * codebook_size * dim);

  std::vector<SidSequence> sids(n, SidSequence(std::vector<Code>(levels, 0)));
  std::vector<float> residual = embeddings.data;
  for (std::size_t l = 0; l < levels; ++l) {
    auto level = kmeans(residual, n, dim, codebook_size, iters, seed + l, workers);
    if (l + 1 == levels) out.model.residuals = residual;
    out.model.codebooks.insert(out.model.codebooks.end(), level.centroids.begin(),
                               level.centroids.end());
    for (std::size_t i = 0; i < n; ++i) {
      const Code c = level.assignments[i];
      sids[i][l] = c;
      const float* e = level.centroids.data() + c * dim;
      for (std::size_t j = 0; j < dim; ++j) {
        residual[i * dim + j] = static_cast<float>(static_cast<double>(residual[i * dim + j]) -
                                                   static_cast<double>(e[j]));
      }
    }
    out.levels.push_back(std::move(level));
  }
  out.index = SidIndex(std::move(sids), levels, codebook_size);
  return out;
}

}  // namespace sidforge
