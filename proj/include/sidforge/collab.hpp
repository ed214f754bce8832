#pragma once

// Collaborative item embeddings from interaction sequences (PPMI of windowed
// co-occurrence, factorised by randomized truncated SVD) and PCA fusion with
// textual embeddings.

#include <Eigen/Dense>
#include <Eigen/QR>
#include <Eigen/SVD>
#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <random>
#include <utility>
#include <vector>

#include "sidforge/core.hpp"
#include "sidforge/embedding.hpp"

namespace sidforge {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, std::int64_t>;

// Symmetric co-occurrence counts. For each user the last `holdout_last`
// items are dropped; then every pair of positions at distance 1..window with
// distinct items adds 1 to (i, j) and to (j, i). The diagonal stays zero.
inline SparseMatrix cooccurrence_counts(const InteractionLog& log, std::size_t n_items,
                                        std::size_t window, std::size_t holdout_last) {
  if (window == 0) throw Error(ErrorCode::BadInput, "co-occurrence window must be >= 1");
  n_items = std::max(n_items, log.item_bound());
  std::map<std::pair<ItemId, ItemId>, double> counts;
  for (const auto& seq : log.sequences) {
    if (seq.size() <= holdout_last) continue;
    const std::size_t len = seq.size() - holdout_last;
    for (std::size_t a = 0; a < len; ++a) {
      for (std::size_t b = a + 1; b < len && b - a <= window; ++b) {
        const ItemId i = seq[a], j = seq[b];
        if (i == j) continue;
        counts[{i, j}] += 1.0;
        counts[{j, i}] += 1.0;
      }
    }
  }
  std::vector<Eigen::Triplet<double, std::int64_t>> triplets;
  triplets.reserve(counts.size());
  for (const auto& [ij, c] : counts) triplets.emplace_back(ij.first, ij.second, c);
  SparseMatrix m(static_cast<std::int64_t>(n_items), static_cast<std::int64_t>(n_items));
  m.setFromTriplets(triplets.begin(), triplets.end());
  return m;
}

// PPMI(i,j) = max(0, log(P(i,j) / (P(i) P(j)))) with P(i,j) = c(i,j)/T and
// P(i) = sum_j c(i,j) / T over the symmetric count matrix.
inline SparseMatrix build_ppmi(const InteractionLog& log, std::size_t n_items,
                               std::size_t window = 3, std::size_t holdout_last = 2) {
  SparseMatrix counts = cooccurrence_counts(log, n_items, window, holdout_last);
  if (counts.nonZeros() == 0) {
    throw Error(ErrorCode::EmptyCorpus, "no co-occurring pairs after holdout");
  }
  Eigen::VectorXd marginal = Eigen::VectorXd::Zero(counts.rows());
  double total = 0.0;
  for (std::int64_t col = 0; col < counts.outerSize(); ++col) {
    for (SparseMatrix::InnerIterator it(counts, col); it; ++it) {
      marginal[it.row()] += it.value();
      total += it.value();
    }
  }
  std::vector<Eigen::Triplet<double, std::int64_t>> triplets;
  for (std::int64_t col = 0; col < counts.outerSize(); ++col) {
    for (SparseMatrix::InnerIterator it(counts, col); it; ++it) {
      const double pmi = std::log(it.value() * total / (marginal[it.row()] * marginal[it.col()]));
      if (pmi > 0.0) triplets.emplace_back(it.row(), it.col(), pmi);
    }
  }
  SparseMatrix ppmi(counts.rows(), counts.cols());
  ppmi.setFromTriplets(triplets.begin(), triplets.end());
  return ppmi;
}

struct SvdOptions {
  std::size_t oversample = 8;
  std::size_t power_iters = 4;
  // Further power iterations run until the leading k singular values move by
  // less than `tolerance` (relative), capped at `max_power_iters`.
  std::size_t max_power_iters = 64;
  double tolerance = 1e-12;
};

struct TruncatedSvd {
  Eigen::MatrixXd u;  // rows x k, orthonormal columns
  Eigen::VectorXd singular_values;  // k, non-increasing
  Eigen::MatrixXd v;  // cols x k
};

namespace detail {

inline Eigen::MatrixXd orthonormal_basis(const Eigen::MatrixXd& m) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
  return qr.householderQ() * Eigen::MatrixXd::Identity(m.rows(), m.cols());
}

}  // namespace detail

// Rank-k SVD by randomized subspace iteration (Gaussian test matrix, QR
// re-orthonormalisation between every multiply). Deterministic per seed.
template <class Matrix>
TruncatedSvd randomized_svd(const Matrix& a, std::size_t k, std::uint64_t seed,
                            const SvdOptions& opts = {}) {
  const auto rows = static_cast<std::size_t>(a.rows());
  const auto cols = static_cast<std::size_t>(a.cols());
  if (k == 0 || k > std::min(rows, cols)) {
    throw Error(ErrorCode::RankTooHigh, "rank " + std::to_string(k) + " exceeds matrix size " +
                                            std::to_string(rows) + "x" + std::to_string(cols));
  }
  const auto width = static_cast<Eigen::Index>(std::min(k + opts.oversample, std::min(rows, cols)));
  const auto kk = static_cast<Eigen::Index>(k);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd omega(static_cast<Eigen::Index>(cols), width);
  for (Eigen::Index j = 0; j < omega.cols(); ++j)
    for (Eigen::Index i = 0; i < omega.rows(); ++i) omega(i, j) = normal(rng);

  Eigen::MatrixXd q = detail::orthonormal_basis(a * omega);
  Eigen::VectorXd previous;
  Eigen::JacobiSVD<Eigen::MatrixXd> small;
  for (std::size_t it = 0;; ++it) {
    small.compute(q.transpose() * a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Eigen::VectorXd current = small.singularValues().head(kk);
    if (it >= opts.power_iters) {
      const bool settled = previous.size() == current.size() &&
                           ((current - previous).cwiseAbs().array() <=
                            opts.tolerance * current.cwiseAbs().maxCoeff())
                               .all();
      if (settled || it >= opts.max_power_iters) break;
    }
    previous = std::move(current);
    const Eigen::MatrixXd z = detail::orthonormal_basis(a.transpose() * q);
    q = detail::orthonormal_basis(a * z);
  }

  TruncatedSvd out;
  out.u = q * small.matrixU().leftCols(kk);
  out.singular_values = small.singularValues().head(kk);
  out.v = small.matrixV().leftCols(kk);
  // Sign convention: the largest-magnitude entry of every left vector is positive.
  for (Eigen::Index c = 0; c < kk; ++c) {
    Eigen::Index arg = 0;
    out.u.col(c).cwiseAbs().maxCoeff(&arg);
    if (out.u(arg, c) < 0) {
      out.u.col(c) *= -1.0;
      out.v.col(c) *= -1.0;
    }
  }
  return out;
}

inline void l2_normalize_rows(EmbeddingMatrix& m) {
  for (std::size_t i = 0; i < m.n; ++i) {
    auto row = m.row(i);
    double norm = 0.0;
    for (float x : row) norm += static_cast<double>(x) * x;
    norm = std::sqrt(norm);
    if (norm == 0.0) continue;
    for (float& x : row) x = static_cast<float>(x / norm);
  }
}

// Rows of U_k * Sigma_k^{1/2}, L2-normalised. Items that never co-occur
// keep a zero row.
inline EmbeddingMatrix truncated_svd(const SparseMatrix& ppmi, std::size_t k, std::uint64_t seed,
                                     const SvdOptions& opts = {}) {
  const auto svd = randomized_svd(ppmi, k, seed, opts);
  EmbeddingMatrix out(static_cast<std::size_t>(ppmi.rows()), k);
  const Eigen::VectorXd scale = svd.singular_values.cwiseSqrt();
  for (std::size_t i = 0; i < out.n; ++i) {
    for (std::size_t c = 0; c < k; ++c) {
      out.data[i * k + c] = static_cast<float>(svd.u(static_cast<Eigen::Index>(i),
                                                     static_cast<Eigen::Index>(c)) *
                                               scale[static_cast<Eigen::Index>(c)]);
    }
  }
  l2_normalize_rows(out);
  return out;
}

struct PcaResult {
  Eigen::MatrixXd projected;        // n x d_out
  Eigen::VectorXd explained_variance;  // d_out, non-increasing, 1/(n-1) scaling
};

// Mean-centres `x` and projects it onto its top `d_out` principal
// components. Components beyond the data rank project to zero columns.
inline PcaResult pca_project(const Eigen::MatrixXd& x, std::size_t d_out) {
  const auto n = x.rows();
  const auto dout = static_cast<Eigen::Index>(d_out);
  if (dout > x.cols()) {
    throw Error(ErrorCode::DimMismatch, "cannot keep " + std::to_string(d_out) +
                                            " components of " + std::to_string(x.cols()) +
                                            "-dim data");
  }
  const Eigen::RowVectorXd mean = x.colwise().mean();
  const Eigen::MatrixXd centered = x.rowwise() - mean;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
  const Eigen::Index keep = std::min<Eigen::Index>(dout, svd.matrixV().cols());
  Eigen::MatrixXd basis = Eigen::MatrixXd::Zero(x.cols(), dout);
  basis.leftCols(keep) = svd.matrixV().leftCols(keep);
  for (Eigen::Index c = 0; c < keep; ++c) {
    Eigen::Index arg = 0;
    basis.col(c).cwiseAbs().maxCoeff(&arg);
    if (basis(arg, c) < 0) basis.col(c) *= -1.0;
  }
  PcaResult out;
  out.projected = centered * basis;
  out.explained_variance = Eigen::VectorXd::Zero(dout);
  const double denom = n > 1 ? static_cast<double>(n - 1) : 1.0;
  for (Eigen::Index c = 0; c < keep; ++c) {
    const double s = svd.singularValues()[c];
    out.explained_variance[c] = s * s / denom;
  }
  return out;
}

// L2-normalise the text rows, concatenate [text ; alpha * cf], and keep the
// top `d_out` principal components of the result.
inline EmbeddingMatrix fuse(const EmbeddingMatrix& text, const EmbeddingMatrix& cf, double alpha,
                            std::size_t d_out) {
  if (text.n != cf.n) {
    throw Error(ErrorCode::RowMismatch, "text has " + std::to_string(text.n) + " rows, cf has " +
                                            std::to_string(cf.n));
  }
  if (d_out == 0 || d_out > text.d + cf.d) {
    throw Error(ErrorCode::DimMismatch, "output dim must be in [1, d_text + d_cf]");
  }
  EmbeddingMatrix normalized = text;
  l2_normalize_rows(normalized);
  const auto n = static_cast<Eigen::Index>(text.n);
  Eigen::MatrixXd joint(n, static_cast<Eigen::Index>(text.d + cf.d));
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto ii = static_cast<std::size_t>(i);
    for (std::size_t j = 0; j < text.d; ++j) joint(i, static_cast<Eigen::Index>(j)) = normalized.data[ii * text.d + j];
    for (std::size_t j = 0; j < cf.d; ++j) {
      joint(i, static_cast<Eigen::Index>(text.d + j)) = alpha * cf.data[ii * cf.d + j];
    }
  }
  const auto pca = pca_project(joint, d_out);
  EmbeddingMatrix out(text.n, d_out);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(d_out); ++j) {
      out.data[static_cast<std::size_t>(i) * d_out + static_cast<std::size_t>(j)] =
          static_cast<float>(pca.projected(i, j));
    }
  }
  return out;
}

}  // namespace sidforge
