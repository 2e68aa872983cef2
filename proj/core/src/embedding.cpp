#include "ldc/embedding.hpp"

#include "ldc/rng.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>
#include <Eigen/SparseCore>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string_view>
#include <unordered_map>

namespace ldc {

namespace {

constexpr std::string_view kRatingsHeader = "userId,movieId,rating,timestamp";

[[noreturn]] void bad_row(const std::filesystem::path& path, std::size_t line, const std::string& why) {
  std::ostringstream msg;
  msg << path.string() << ":" << line << ": " << why;
  throw std::invalid_argument(msg.str());
}

template <typename T>
bool parse_field(std::string_view text, T& out) {
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, out);
  return ec == std::errc() && ptr == end;
}

std::string_view trim_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

Eigen::MatrixXd orthonormalize(const Eigen::MatrixXd& y) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(y);
  return qr.householderQ() * Eigen::MatrixXd::Identity(y.rows(), y.cols());
}

template <typename Matrix>
TruncatedSvd randomized_svd(const Matrix& a, int rank, int power_iters, std::uint64_t seed) {
  const Eigen::Index rows = a.rows(), cols = a.cols();
  if (rank < 1 || rank > std::min(rows, cols)) {
    std::ostringstream msg;
    msg << "truncated_svd: rank " << rank << " must lie in [1, " << std::min(rows, cols) << "]";
    throw std::invalid_argument(msg.str());
  }
  if (power_iters < 1) throw std::invalid_argument("truncated_svd: power_iters must be >= 1");
  const Eigen::Index width = std::min<Eigen::Index>(rank + 10, std::min(rows, cols));

  Rng rng(seed);
  Eigen::MatrixXd omega(cols, width);
  for (Eigen::Index j = 0; j < width; ++j)
    for (Eigen::Index i = 0; i < cols; ++i) omega(i, j) = rng.normal();

  Eigen::MatrixXd q = orthonormalize(a * omega);
  for (int it = 0; it < power_iters; ++it) {
    const Eigen::MatrixXd w = orthonormalize(a.transpose() * q);
    q = orthonormalize(a * w);
  }
  const Eigen::MatrixXd b = (a.transpose() * q).transpose();  // width x cols
  Eigen::BDCSVD<Eigen::MatrixXd> svd(b, Eigen::ComputeThinU | Eigen::ComputeThinV);

  TruncatedSvd out;
  out.user_factors = q * svd.matrixU().leftCols(rank);
  out.item_factors = svd.matrixV().leftCols(rank);
  out.singular_values = svd.singularValues().head(rank);
  return out;
}

}  // namespace

RatingsMatrix load_ratings(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument(path.string() + ": empty file");
  if (trim_cr(line) != kRatingsHeader) {
    bad_row(path, 1, "expected header '" + std::string(kRatingsHeader) + "'");
  }

  RatingsMatrix out;
  std::unordered_map<std::int64_t, int> user_index, item_index;
  std::map<std::pair<int, int>, double> entries;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view row = trim_cr(line);
    if (row.empty()) continue;
    std::string_view fields[4];
    std::size_t start = 0;
    int count = 0;
    for (std::size_t i = 0; i <= row.size(); ++i) {
      if (i == row.size() || row[i] == ',') {
        if (count == 4) bad_row(path, line_no, "expected 4 fields");
        fields[count++] = row.substr(start, i - start);
        start = i + 1;
      }
    }
    if (count != 4) bad_row(path, line_no, "expected 4 fields");
    std::int64_t user = 0, item = 0, timestamp = 0;
    double rating = 0.0;
    if (!parse_field(fields[0], user)) bad_row(path, line_no, "invalid userId");
    if (!parse_field(fields[1], item)) bad_row(path, line_no, "invalid movieId");
    if (!parse_field(fields[2], rating) || !std::isfinite(rating)) {
      bad_row(path, line_no, "invalid rating");
    }
    if (!parse_field(fields[3], timestamp)) bad_row(path, line_no, "invalid timestamp");

    auto [u, new_user] = user_index.try_emplace(user, static_cast<int>(out.user_ids.size()));
    if (new_user) out.user_ids.push_back(user);
    auto [v, new_item] = item_index.try_emplace(item, static_cast<int>(out.item_ids.size()));
    if (new_item) out.item_ids.push_back(item);
    auto [slot, inserted] = entries.insert_or_assign({u->second, v->second}, rating);
    if (!inserted) ++out.duplicates;
  }
  if (entries.empty()) throw std::invalid_argument(path.string() + ": no ratings");

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(entries.size());
  for (const auto& [key, rating] : entries) triplets.emplace_back(key.first, key.second, rating);
  out.ratings.resize(static_cast<Eigen::Index>(out.user_ids.size()),
                     static_cast<Eigen::Index>(out.item_ids.size()));
  out.ratings.setFromTriplets(triplets.begin(), triplets.end());
  return out;
}

TruncatedSvd truncated_svd(const Eigen::MatrixXd& matrix, int rank, int power_iters,
                           std::uint64_t seed) {
  return randomized_svd(matrix, rank, power_iters, seed);
}

TruncatedSvd truncated_svd(const Eigen::SparseMatrix<double, Eigen::RowMajor>& matrix, int rank,
                           int power_iters, std::uint64_t seed) {
  return randomized_svd(matrix, rank, power_iters, seed);
}

LogisticDcmdp build_embedding_env(const EmbeddingEnvSpec& spec, std::vector<std::string>* warnings) {
  const auto X = spec.user_vectors.rows();
  const auto A = spec.item_vectors.rows();
  const auto d = spec.user_vectors.cols();
  if (X < 2) throw std::invalid_argument("embedding env: need at least 2 user preference vectors");
  if (A < 1) throw std::invalid_argument("embedding env: need at least 1 item");
  if (spec.item_vectors.cols() != d || spec.sigma_diagonal.size() != d) {
    throw std::invalid_argument("embedding env: user, item and sigma dimensions differ");
  }
  if ((spec.sigma_diagonal.array() < 0.0).any()) {
    throw std::invalid_argument("embedding env: sigma must be nonnegative");
  }
  if (!(spec.mu_scale > 0.0)) throw std::invalid_argument("embedding env: mu_scale must be positive");

  const int M = static_cast<int>(X) - 1;
  LogisticDcmdp env = make_empty_dcmdp(1, static_cast<int>(A), M, spec.horizon, spec.alpha);
  if (spec.temperature > 0.0) env.temperature = spec.temperature;

  const Eigen::MatrixXd dots =
      spec.user_vectors * spec.sigma_diagonal.asDiagonal() * spec.item_vectors.transpose();
  const double lo = dots.minCoeff(), hi = dots.maxCoeff();
  const bool degenerate = !(hi - lo > 1e-12 * std::max(1.0, std::abs(hi)));
  if (degenerate && warnings) {
    warnings->push_back("embedding env: all dot products equal; rewards set to 0.5");
  }
  for (int x = 0; x <= M; ++x) {
    for (int a = 0; a < A; ++a) {
      env.reward(x, 0, a) = degenerate ? 0.5 : std::clamp((dots(x, a) - lo) / (hi - lo), 0.0, 1.0);
    }
  }
  for (int h = 0; h < spec.horizon; ++h) {
    for (int a = 0; a < A; ++a) {
      for (int x = 0; x <= M; ++x) {
        const double value = spec.mu_scale * std::tanh(dots(x, a));
        auto cell = env.latent_features.cell(h, 0, a, x);
        cell.setConstant(value);
        if (spec.mode == EmbeddingMode::kNovelty && x < M) cell[x] = -value;
      }
    }
  }
  std::fill(env.feature_bounds.begin(), env.feature_bounds.end(), spec.mu_scale);
  env.validate();
  return env;
}

EmbeddingEnvSpec synthetic_embedding_spec(int num_free_contexts, int num_items, int dim,
                                          EmbeddingMode mode, double alpha, int horizon,
                                          std::uint64_t seed) {
  if (num_free_contexts < 1 || num_items < 1 || dim < 1) {
    throw std::invalid_argument("synthetic embedding: sizes must be positive");
  }
  Rng rng(seed);
  const double scale = std::pow(static_cast<double>(dim), -0.25);
  EmbeddingEnvSpec spec;
  spec.user_vectors.resize(num_free_contexts + 1, dim);
  spec.item_vectors.resize(num_items, dim);
  for (Eigen::Index i = 0; i < spec.user_vectors.size(); ++i)
    spec.user_vectors.data()[i] = scale * rng.normal();
  for (Eigen::Index i = 0; i < spec.item_vectors.size(); ++i)
    spec.item_vectors.data()[i] = scale * rng.normal();
  spec.sigma_diagonal = Eigen::VectorXd::Ones(dim);
  spec.mode = mode;
  spec.alpha = alpha;
  spec.horizon = horizon;
  spec.seed = seed;
  return spec;
}

namespace {

std::vector<int> sample_distinct(int population, int count, Rng& rng) {
  std::vector<int> index(population);
  for (int i = 0; i < population; ++i) index[i] = i;
  for (int i = 0; i < count; ++i) std::swap(index[i], index[i + rng.uniform_int(population - i)]);
  index.resize(count);
  return index;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& rows, const char* what) {
  if (!rows.is_array() || rows.empty() || !rows[0].is_array()) {
    throw std::invalid_argument(std::string("embedding cache: '") + what + "' must be a matrix");
  }
  Eigen::MatrixXd out(rows.size(), rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows[0].size()) {
      throw std::invalid_argument(std::string("embedding cache: ragged '") + what + "'");
    }
    for (std::size_t j = 0; j < rows[i].size(); ++j) out(i, j) = rows[i][j].get<double>();
  }
  return out;
}

}  // namespace

EmbeddingEnvSpec spec_from_embeddings(const nlohmann::json& cache, int num_free_contexts,
                                      int num_items, EmbeddingMode mode, double alpha,
                                      int horizon, std::uint64_t seed) {
  for (const char* key : {"singular_values", "user_vectors", "item_vectors"}) {
    if (!cache.contains(key)) {
      throw std::invalid_argument(std::string("embedding cache is missing '") + key + "'");
    }
  }
  const Eigen::MatrixXd users = matrix_from_json(cache.at("user_vectors"), "user_vectors");
  const Eigen::MatrixXd items = matrix_from_json(cache.at("item_vectors"), "item_vectors");
  const auto sv = cache.at("singular_values").get<std::vector<double>>();
  if (users.cols() != items.cols() || static_cast<Eigen::Index>(sv.size()) != users.cols()) {
    throw std::invalid_argument("embedding cache: inconsistent rank");
  }
  if (users.rows() < num_free_contexts + 1 || items.rows() < num_items) {
    throw std::invalid_argument("embedding cache: not enough users or items for the requested sizes");
  }
  Rng rng(seed);
  EmbeddingEnvSpec spec;
  const auto picked_users = sample_distinct(static_cast<int>(users.rows()), num_free_contexts + 1, rng);
  const auto picked_items = sample_distinct(static_cast<int>(items.rows()), num_items, rng);
  spec.user_vectors.resize(num_free_contexts + 1, users.cols());
  spec.item_vectors.resize(num_items, items.cols());
  for (int j = 0; j <= num_free_contexts; ++j) spec.user_vectors.row(j) = users.row(picked_users[j]);
  for (int a = 0; a < num_items; ++a) spec.item_vectors.row(a) = items.row(picked_items[a]);
  spec.sigma_diagonal = Eigen::Map<const Eigen::VectorXd>(sv.data(), static_cast<Eigen::Index>(sv.size()));
  spec.mode = mode;
  spec.alpha = alpha;
  spec.horizon = horizon;
  spec.seed = seed;
  return spec;
}

nlohmann::json embedding_cache_json(const RatingsMatrix& ratings, const TruncatedSvd& svd) {
  auto rows_of = [](const Eigen::MatrixXd& m) {
    nlohmann::json out = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      std::vector<double> row(m.cols());
      for (Eigen::Index j = 0; j < m.cols(); ++j) row[j] = m(i, j);
      out.push_back(std::move(row));
    }
    return out;
  };
  nlohmann::json doc;
  doc["rank"] = svd.singular_values.size();
  doc["singular_values"] = std::vector<double>(svd.singular_values.data(),
                                               svd.singular_values.data() + svd.singular_values.size());
  doc["user_ids"] = ratings.user_ids;
  doc["item_ids"] = ratings.item_ids;
  doc["user_vectors"] = rows_of(svd.user_factors);
  doc["item_vectors"] = rows_of(svd.item_factors);
  return doc;
}

}  // namespace ldc
