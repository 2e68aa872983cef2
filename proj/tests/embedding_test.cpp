#include "ldc/embedding.hpp"
#include "ldc/simulate.hpp"

#include "test_support.hpp"

#include <Eigen/QR>
#include <gtest/gtest.h>

#include <fstream>

namespace ldc {
namespace {

std::filesystem::path write_csv(const std::string& name, const std::string& text) {
  const auto dir = std::filesystem::temp_directory_path() / "ldc_test_embedding";
  std::filesystem::create_directories(dir);
  const auto path = dir / name;
  std::ofstream(path) << text;
  return path;
}

TEST(Ratings, SingleRowGivesOneByOneMatrix) {
  const auto path = write_csv("one.csv", "userId,movieId,rating,timestamp\n7,42,3.5,100\n");
  const RatingsMatrix m = load_ratings(path);
  ASSERT_EQ(m.ratings.rows(), 1);
  ASSERT_EQ(m.ratings.cols(), 1);
  EXPECT_DOUBLE_EQ(m.ratings.coeff(0, 0), 3.5);
  EXPECT_EQ(m.user_ids, (std::vector<std::int64_t>{7}));
  EXPECT_EQ(m.item_ids, (std::vector<std::int64_t>{42}));
  EXPECT_EQ(m.duplicates, 0u);
}

TEST(Ratings, LastDuplicateWins) {
  const auto path = write_csv("dup.csv",
                              "userId,movieId,rating,timestamp\r\n"
                              "1,10,4.0,1\r\n2,10,2.0,2\r\n1,10,1.5,3\r\n1,11,5.0,4\r\n");
  const RatingsMatrix m = load_ratings(path);
  EXPECT_EQ(m.duplicates, 1u);
  EXPECT_EQ(m.ratings.nonZeros(), 3);
  EXPECT_DOUBLE_EQ(m.ratings.coeff(0, 0), 1.5);
  EXPECT_DOUBLE_EQ(m.ratings.coeff(1, 0), 2.0);
  EXPECT_DOUBLE_EQ(m.ratings.coeff(0, 1), 5.0);
}

TEST(Ratings, MalformedInputIsRejected) {
  EXPECT_THROW(load_ratings(write_csv("nohead.csv", "1,10,4.0,1\n")), std::invalid_argument);
  EXPECT_THROW(load_ratings(write_csv("empty.csv", "")), std::invalid_argument);
  EXPECT_THROW(load_ratings(write_csv("header_only.csv", "userId,movieId,rating,timestamp\n")),
               std::invalid_argument);
  try {
    load_ratings(write_csv("bad.csv", "userId,movieId,rating,timestamp\n1,2,3,4\n1,x,3,4\n"));
    FAIL() << "expected an exception";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find(":3:"), std::string::npos) << e.what();
  }
}

TEST(TruncatedSvd, RecoversARankOneMatrix) {
  Eigen::VectorXd u(4), v(3);
  u << 1, -2, 0.5, 3;
  v << 2, 1, -1;
  const Eigen::MatrixXd m = u * v.transpose();
  const TruncatedSvd svd = truncated_svd(m, 1);
  const Eigen::MatrixXd back =
      svd.user_factors * svd.singular_values.asDiagonal() * svd.item_factors.transpose();
  EXPECT_LT((back - m).norm(), 1e-8);
}

TEST(TruncatedSvd, DiagonalMatrixSingularValues) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(3, 3);
  m.diagonal() << 3, 2, 1;
  const TruncatedSvd svd = truncated_svd(m, 2);
  EXPECT_NEAR(svd.singular_values[0], 3.0, 1e-6);
  EXPECT_NEAR(svd.singular_values[1], 2.0, 1e-6);
}

TEST(TruncatedSvd, RecoversKnownLowRankFactors) {
  Rng rng(3);
  Eigen::MatrixXd a(50, 5), b(40, 5);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = rng.normal();
  for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = rng.normal();
  const Eigen::MatrixXd m = a * b.transpose();
  const TruncatedSvd svd = truncated_svd(m, 5, 4, 9);
  const Eigen::MatrixXd back =
      svd.user_factors * svd.singular_values.asDiagonal() * svd.item_factors.transpose();
  EXPECT_LT((back - m).norm() / m.norm(), 1e-6);
  EXPECT_LT((svd.user_factors.transpose() * svd.user_factors - Eigen::MatrixXd::Identity(5, 5)).norm(),
            1e-8);
  EXPECT_LT((svd.item_factors.transpose() * svd.item_factors - Eigen::MatrixXd::Identity(5, 5)).norm(),
            1e-8);
  for (int i = 1; i < 5; ++i) EXPECT_GE(svd.singular_values[i - 1], svd.singular_values[i]);
}

TEST(TruncatedSvd, SparseAndDenseAgree) {
  const auto path = write_csv("small.csv",
                              "userId,movieId,rating,timestamp\n"
                              "1,1,5,0\n1,2,3,0\n2,2,4,0\n3,1,1,0\n3,3,2,0\n4,3,5,0\n");
  const RatingsMatrix r = load_ratings(path);
  const TruncatedSvd sparse = truncated_svd(r.ratings, 2, 4, 1);
  const TruncatedSvd dense = truncated_svd(Eigen::MatrixXd(r.ratings), 2, 4, 1);
  EXPECT_LT((sparse.singular_values - dense.singular_values).norm(), 1e-10);
}

TEST(TruncatedSvd, RejectsBadRank) {
  const Eigen::MatrixXd m = Eigen::MatrixXd::Identity(3, 4);
  EXPECT_THROW(truncated_svd(m, 4), std::invalid_argument);
  EXPECT_THROW(truncated_svd(m, 0), std::invalid_argument);
  EXPECT_THROW(truncated_svd(m, 2, 0), std::invalid_argument);
}

TEST(EmbeddingEnv, OrthogonalVectorsGiveZeroFeatures) {
  EmbeddingEnvSpec spec;
  spec.user_vectors = Eigen::MatrixXd::Zero(3, 4);
  spec.user_vectors(0, 0) = spec.user_vectors(1, 1) = spec.user_vectors(2, 0) = 1.0;
  spec.item_vectors = Eigen::MatrixXd::Zero(2, 4);
  spec.item_vectors(0, 2) = spec.item_vectors(1, 3) = 1.0;
  spec.sigma_diagonal = Eigen::VectorXd::Ones(4);
  spec.horizon = 5;
  std::vector<std::string> warnings;
  const LogisticDcmdp env = build_embedding_env(spec, &warnings);
  for (double f : env.latent_features.values()) EXPECT_EQ(f, 0.0);
  for (double r : env.rewards) EXPECT_EQ(r, 0.5);
  EXPECT_EQ(warnings.size(), 1u);
  const std::vector<Step> history{{0, 1, 2, 0.5}, {0, 0, 0, 0.5}};
  const Eigen::VectorXd z = context_distribution(env, history);
  for (int x = 0; x < 3; ++x) EXPECT_NEAR(z[x], 1.0 / 3.0, 1e-15);
}

TEST(EmbeddingEnv, NoveltyFlipsExactlyTheDiagonalCoordinate) {
  EmbeddingEnvSpec spec = synthetic_embedding_spec(4, 5, 8, EmbeddingMode::kAttraction, 0.9, 6, 2);
  const LogisticDcmdp attraction = build_embedding_env(spec);
  spec.mode = EmbeddingMode::kNovelty;
  const LogisticDcmdp novelty = build_embedding_env(spec);
  EXPECT_EQ(attraction.rewards, novelty.rewards);
  for (int h = 0; h < 6; ++h)
    for (int a = 0; a < 5; ++a)
      for (int x = 0; x <= 4; ++x)
        for (int i = 0; i < 4; ++i) {
          const double fa = attraction.latent_features.cell(h, 0, a, x)[i];
          const double fn = novelty.latent_features.cell(h, 0, a, x)[i];
          EXPECT_EQ(fn, i == x ? -fa : fa);
        }
}

TEST(EmbeddingEnv, FeaturesAndRewardsStayInRange) {
  EmbeddingEnvSpec spec = synthetic_embedding_spec(6, 6, 20, EmbeddingMode::kAttraction, 0.99, 10, 5);
  spec.mu_scale = 0.7;
  const LogisticDcmdp env = build_embedding_env(spec);
  for (double f : env.latent_features.values()) EXPECT_LE(std::abs(f), 0.7);
  double lo = 1.0, hi = 0.0;
  for (double r : env.rewards) {
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  EXPECT_EQ(lo, 0.0);
  EXPECT_EQ(hi, 1.0);
}

TEST(EmbeddingEnv, CacheRoundTripBuildsTheRequestedSizes) {
  const auto path = write_csv("cache.csv",
                              "userId,movieId,rating,timestamp\n"
                              "1,1,5,0\n1,2,3,0\n2,2,4,0\n3,1,1,0\n3,3,2,0\n4,3,5,0\n"
                              "4,1,2,0\n2,3,1,0\n");
  const RatingsMatrix r = load_ratings(path);
  const nlohmann::json cache = embedding_cache_json(r, truncated_svd(r.ratings, 2));
  const EmbeddingEnvSpec spec =
      spec_from_embeddings(cache, 2, 3, EmbeddingMode::kNovelty, 0.9, 4, 1);
  EXPECT_EQ(spec.user_vectors.rows(), 3);
  EXPECT_EQ(spec.item_vectors.rows(), 3);
  const LogisticDcmdp env = build_embedding_env(spec);
  EXPECT_EQ(env.num_free_contexts, 2);
  EXPECT_EQ(env.num_actions, 3);
  EXPECT_THROW(spec_from_embeddings(cache, 4, 3, EmbeddingMode::kNovelty, 0.9, 4, 1),
               std::invalid_argument);
}

}  // namespace
}  // namespace ldc
