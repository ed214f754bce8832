#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "oracles.hpp"
#include "sidforge/collab.hpp"

namespace sidforge {
namespace {

double at(const SparseMatrix& m, std::int64_t i, std::int64_t j) { return m.coeff(i, j); }

Eigen::MatrixXd random_sparse(std::size_t n, double density, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      if (u(rng) < density) m(i, j) = u(rng) * 4.0;
  return m;
}

TEST(Ppmi, HandCountedCorpus) {
  // a=0 b=1 c=2 d=3 e=4
  const InteractionLog log{{{0, 1, 2}, {0, 1, 2}, {3, 4}}};
  const auto counts = cooccurrence_counts(log, 5, 3, 0);
  EXPECT_EQ(at(counts, 0, 1), 2.0);
  EXPECT_EQ(at(counts, 3, 4), 1.0);
  EXPECT_EQ(at(counts, 0, 0), 0.0);
  // T = 14, marginals a..c = 4, d = e = 1.
  const auto ppmi = build_ppmi(log, 5, 3, 0);
  EXPECT_NEAR(at(ppmi, 0, 1), std::log(1.75), 1e-12);
  EXPECT_NEAR(at(ppmi, 3, 4), std::log(14.0), 1e-12);
  EXPECT_EQ(at(ppmi, 0, 3), 0.0);
}

TEST(Ppmi, WindowLimitsPairs) {
  const InteractionLog log{{{0, 1, 2, 3}}};
  const auto counts = cooccurrence_counts(log, 4, 1, 0);
  EXPECT_EQ(at(counts, 0, 1), 1.0);
  EXPECT_EQ(at(counts, 0, 2), 0.0);
}

TEST(Ppmi, EverythingHeldOut) {
  const InteractionLog log{{{0, 1}}};
  try {
    build_ppmi(log, 2, 3, 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyCorpus);
  }
}

TEST(Ppmi, HoldoutExcludesFinalItems) {
  const InteractionLog log{{{0, 1, 2, 3}, {0, 1}}};
  const auto counts = cooccurrence_counts(log, 4, 3, 2);
  EXPECT_EQ(at(counts, 0, 1), 1.0);
  EXPECT_EQ(at(counts, 1, 2), 0.0);
  EXPECT_EQ(at(counts, 2, 3), 0.0);
}

TEST(Ppmi, RepeatedItemsSkipTheDiagonal) {
  const InteractionLog log{{{0, 0, 1}}};
  const auto counts = cooccurrence_counts(log, 2, 3, 0);
  EXPECT_EQ(at(counts, 0, 0), 0.0);
  EXPECT_EQ(at(counts, 0, 1), 2.0);
}

// With the diagonal excluded, a clique where every pair is equally frequent
// still has P(i,j) > P(i)P(j): PMI = log(n / (n-1)) for every pair.
TEST(Ppmi, UniformClique) {
  const std::size_t n = 5;
  InteractionLog log;
  for (ItemId i = 0; i < n; ++i)
    for (ItemId j = i + 1; j < n; ++j) log.sequences.push_back({i, j});
  const auto ppmi = build_ppmi(log, n, 1, 0);
  for (ItemId i = 0; i < n; ++i) {
    for (ItemId j = 0; j < n; ++j) {
      EXPECT_NEAR(at(ppmi, i, j), i == j ? 0.0 : std::log(double(n) / double(n - 1)), 1e-12);
    }
  }
}

TEST(Ppmi, NonNegativeAndSymmetric) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    InteractionLog log;
    const std::size_t items = 5 + rng() % 40;
    for (std::size_t u = 0; u < 30; ++u) {
      std::vector<ItemId> seq(2 + rng() % 15);
      for (auto& x : seq) x = static_cast<ItemId>(rng() % items);
      log.sequences.push_back(std::move(seq));
    }
    const auto ppmi = build_ppmi(log, items);
    const Eigen::MatrixXd dense(ppmi);
    EXPECT_GE(dense.minCoeff(), 0.0);
    EXPECT_TRUE(dense.allFinite());
    EXPECT_EQ((dense - dense.transpose()).cwiseAbs().maxCoeff(), 0.0);
  }
}

TEST(RandomizedSvd, RankOneIsExact) {
  Eigen::VectorXd a = Eigen::VectorXd::LinSpaced(30, 1.0, 3.0);
  Eigen::VectorXd b = Eigen::VectorXd::LinSpaced(30, -2.0, 5.0);
  const Eigen::MatrixXd m = a * b.transpose();
  const auto svd = randomized_svd(m, 1, 1);
  const Eigen::MatrixXd rebuilt = svd.u * svd.singular_values.asDiagonal() * svd.v.transpose();
  EXPECT_LE((rebuilt - m).norm(), 1e-6 * m.norm());
}

TEST(RandomizedSvd, DiagonalMatrix) {
  Eigen::VectorXd diag(6);
  diag << 1.0, -7.0, 3.0, 0.5, 5.0, -2.0;
  const Eigen::MatrixXd m = diag.asDiagonal();
  const auto svd = randomized_svd(m, 4, 3);
  const std::vector<double> expected = {7.0, 5.0, 3.0, 2.0};
  for (std::size_t c = 0; c < 4; ++c) EXPECT_NEAR(svd.singular_values[Eigen::Index(c)], expected[c], 1e-6);
}

TEST(RandomizedSvd, MatchesDenseDecomposition) {
  for (std::uint64_t seed : {1, 2, 3, 4}) {
    const auto m = random_sparse(50, 0.1, seed);
    const auto svd = randomized_svd(m, 10, seed);
    Eigen::JacobiSVD<Eigen::MatrixXd> dense(m);
    for (Eigen::Index c = 0; c < 10; ++c) {
      const double ref = dense.singularValues()[c];
      EXPECT_NEAR(svd.singular_values[c], ref, 1e-4 * ref);
    }
    const Eigen::MatrixXd gram = svd.u.transpose() * svd.u;
    EXPECT_LE((gram - Eigen::MatrixXd::Identity(10, 10)).cwiseAbs().maxCoeff(), 1e-6);
  }
}

TEST(RandomizedSvd, RankTooHigh) {
  const Eigen::MatrixXd m = Eigen::MatrixXd::Identity(4, 4);
  try {
    randomized_svd(m, 5, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::RankTooHigh);
  }
}

TEST(TruncatedSvd, RowsAreUnitOrZero) {
  const InteractionLog log{{{0, 1, 2, 3, 4, 5, 0, 2}, {1, 3, 5, 1, 3}, {6, 7, 6, 7}}};
  const auto emb = truncated_svd(build_ppmi(log, 10, 3, 0), 4, 42);
  ASSERT_EQ(emb.n, 10u);
  for (std::size_t i = 0; i < emb.n; ++i) {
    double norm = 0.0;
    for (float x : emb.row(i)) norm += double(x) * x;
    if (i >= 8) {
      EXPECT_EQ(norm, 0.0);  // never co-occurs
    } else {
      EXPECT_NEAR(std::sqrt(norm), 1.0, 1e-6);
    }
  }
  const auto again = truncated_svd(build_ppmi(log, 10, 3, 0), 4, 42);
  EXPECT_EQ(emb.data, again.data);
}

EmbeddingMatrix random_embedding(std::size_t n, std::size_t d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> g;
  EmbeddingMatrix m(n, d);
  for (auto& x : m.data) x = g(rng);
  return m;
}

TEST(Fuse, FullRankPreservesDistances) {
  const auto text = random_embedding(30, 8, 1), cf = random_embedding(30, 4, 2);
  const auto fused = fuse(text, cf, 0.5, 12);
  const auto joint = oracle::fusion_input(text, cf, 0.5);
  for (std::size_t a = 0; a < 30; ++a) {
    for (std::size_t b = a + 1; b < 30; ++b) {
      double out = 0.0;
      for (std::size_t j = 0; j < 12; ++j) {
        const double diff = double(fused.row(a)[j]) - double(fused.row(b)[j]);
        out += diff * diff;
      }
      const double ref = (joint.row(Eigen::Index(a)) - joint.row(Eigen::Index(b))).squaredNorm();
      EXPECT_NEAR(std::sqrt(out), std::sqrt(ref), 1e-5 * std::sqrt(ref));
    }
  }
}

TEST(Fuse, VarianceMatchesCovarianceEigenvalues) {
  const auto text = random_embedding(20, 8, 3), cf = random_embedding(20, 4, 4);
  const std::size_t d_out = 5;
  const auto fused = fuse(text, cf, 0.5, d_out);
  const auto joint = oracle::fusion_input(text, cf, 0.5);
  const Eigen::MatrixXd centered = joint.rowwise() - joint.colwise().mean();
  const Eigen::MatrixXd cov = centered.transpose() * centered / 19.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  const Eigen::VectorXd values = eig.eigenvalues().reverse();  // descending
  double expected = 0.0;
  for (std::size_t c = 0; c < d_out; ++c) expected += values[Eigen::Index(c)];

  double got = 0.0;
  std::vector<double> per_column(d_out, 0.0);
  for (std::size_t j = 0; j < d_out; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < 20; ++i) mean += fused.row(i)[j];
    mean /= 20.0;
    for (std::size_t i = 0; i < 20; ++i) per_column[j] += (fused.row(i)[j] - mean) * (fused.row(i)[j] - mean) / 19.0;
    got += per_column[j];
  }
  EXPECT_NEAR(got, expected, 1e-6);
  for (std::size_t j = 1; j < d_out; ++j) EXPECT_GE(per_column[j - 1], per_column[j] - 1e-9);
}

TEST(Fuse, ZeroAlphaKeepsOnlyText) {
  const auto text = random_embedding(25, 6, 5), cf = random_embedding(25, 3, 6);
  const auto fused = fuse(text, cf, 0.0, 6);
  EmbeddingMatrix normalized = text;
  l2_normalize_rows(normalized);
  Eigen::MatrixXd x(25, 6);
  for (std::size_t i = 0; i < 25; ++i)
    for (std::size_t j = 0; j < 6; ++j) x(Eigen::Index(i), Eigen::Index(j)) = normalized.row(i)[j];
  const auto pca = pca_project(x, 6);
  for (Eigen::Index j = 0; j < 6; ++j) {
    // Columns agree up to sign.
    double same = 0.0, flipped = 0.0;
    for (Eigen::Index i = 0; i < 25; ++i) {
      same = std::max(same, std::abs(fused.row(std::size_t(i))[std::size_t(j)] - pca.projected(i, j)));
      flipped = std::max(flipped, std::abs(fused.row(std::size_t(i))[std::size_t(j)] + pca.projected(i, j)));
    }
    EXPECT_LE(std::min(same, flipped), 1e-5);
  }
}

TEST(Fuse, Errors) {
  const auto text = random_embedding(5, 3, 1), cf = random_embedding(4, 2, 2);
  try {
    fuse(text, cf, 0.5, 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::RowMismatch);
  }
  const auto cf5 = random_embedding(5, 2, 2);
  EXPECT_THROW(fuse(text, cf5, 0.5, 6), Error);
}

}  // namespace
}  // namespace sidforge
