#pragma once

#include "ldc/dcmdp.hpp"

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace ldc {

/// User x item ratings with ids remapped to dense indices in order of first
/// appearance.
struct RatingsMatrix {
  Eigen::SparseMatrix<double, Eigen::RowMajor> ratings;
  std::vector<std::int64_t> user_ids;
  std::vector<std::int64_t> item_ids;
  std::size_t duplicates = 0;  // (user, item) pairs seen more than once; last rating wins
};

/// Reads a MovieLens-style CSV with header `userId,movieId,rating,timestamp`.
/// Throws std::invalid_argument naming the line of a malformed row.
RatingsMatrix load_ratings(const std::filesystem::path& path);

struct TruncatedSvd {
  Eigen::MatrixXd user_factors;  // rows x d, orthonormal columns
  Eigen::MatrixXd item_factors;  // cols x d, orthonormal columns
  Eigen::VectorXd singular_values;  // nonincreasing
};

/// Rank-d factorization by randomized subspace iteration: a Gaussian sketch
/// with oversampling, `power_iters` orthonormalized power steps, then a dense
/// SVD of the small projected matrix.
TruncatedSvd truncated_svd(const Eigen::MatrixXd& matrix, int rank, int power_iters = 4,
                           std::uint64_t seed = 0);
TruncatedSvd truncated_svd(const Eigen::SparseMatrix<double, Eigen::RowMajor>& matrix, int rank,
                           int power_iters = 4, std::uint64_t seed = 0);

enum class EmbeddingMode { kAttraction, kNovelty };

/// Embedding recommender: M+1 user preference vectors (the contexts), A item
/// vectors (the actions), a diagonal weighting Sigma.
struct EmbeddingEnvSpec {
  Eigen::MatrixXd user_vectors;  // (M+1) x d
  Eigen::MatrixXd item_vectors;  // A x d
  Eigen::VectorXd sigma_diagonal;  // d
  double mu_scale = 1.0;
  EmbeddingMode mode = EmbeddingMode::kAttraction;
  double alpha = 0.99;
  int horizon = 300;
  double temperature = 0.0;  // 0 selects H_alpha^{-1/2}
  std::uint64_t seed = 0;
};

/// Tabular logistic DCMDP with a single state. f_i(x_j, v_a) = mu(x_j' Sigma v_a)
/// with mu(y) = mu_scale tanh(y); Novelty negates coordinate i = j. Rewards are
/// the same dot products mapped affinely onto [0, 1] over the (user, item) grid;
/// when they are all equal the rewards are 0.5 and a warning is appended.
LogisticDcmdp build_embedding_env(const EmbeddingEnvSpec& spec,
                                  std::vector<std::string>* warnings = nullptr);

/// Synthetic spec with i.i.d. Gaussian vectors (entries N(0, d^{-1/2})) and Sigma = I.
EmbeddingEnvSpec synthetic_embedding_spec(int num_free_contexts, int num_items, int dim,
                                          EmbeddingMode mode, double alpha, int horizon,
                                          std::uint64_t seed);

/// Spec drawn from cached embeddings: M+1 distinct users' vectors become the
/// preference vectors, A distinct items form the slate, Sigma = diag(singular values).
EmbeddingEnvSpec spec_from_embeddings(const nlohmann::json& cache, int num_free_contexts,
                                      int num_items, EmbeddingMode mode, double alpha,
                                      int horizon, std::uint64_t seed);

/// Embedding cache document: {"rank", "singular_values", "user_ids", "item_ids",
/// "user_vectors", "item_vectors"}.
nlohmann::json embedding_cache_json(const RatingsMatrix& ratings, const TruncatedSvd& svd);

}  // namespace ldc
