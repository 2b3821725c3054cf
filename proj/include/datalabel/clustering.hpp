#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "datalabel/corpus.hpp"
#include "datalabel/error.hpp"
#include "datalabel/random.hpp"

namespace datalabel {

/// Token -> id map for bag-of-words vectors. Id 0 is reserved for tokens
/// not seen when the vocabulary was built.
class TokenVocabulary {
 public:
  static constexpr int kUnknown = 0;

  TokenVocabulary() : tokens_{"<unk>"} {}

  int add(const std::string& token);
  int lookup(const std::string& token) const;
  int size() const { return static_cast<int>(tokens_.size()); }
  const std::vector<std::string>& tokens() const { return tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
};

struct BowVector {
  /// (token id, count) sorted by id; counts >= 1.
  std::vector<std::pair<int, int>> entries;
  double norm = 0.0;

  bool operator==(const BowVector&) const = default;
};

BowVector vectorize(const LinearizedData& data, const TokenVocabulary& vocab);

/// Throws Error(kInvalidArgument) when either vector has zero norm.
double cosine(const BowVector& a, const BowVector& b);

/// Sorted, de-duplicated attribute names joined by "|".
std::string attribute_signature(const StructuredRecord& record, const DelimiterConfig& delim);

template <typename Scalar>
using DenseMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using DenseVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
struct KMeansResult {
  DenseMatrix<Scalar> centroids;  // k x dim
  std::vector<int> assignment;    // per point
  int iterations = 0;
  bool converged = false;
};

/// Lloyd's algorithm on the rows of `points` with Euclidean distance.
/// Seeding: the first centre is a seeded uniform draw, every further centre
/// is the point farthest from its nearest chosen centre. Empty clusters are
/// refilled with the point farthest from its own centroid (taken from a
/// cluster holding at least two points), so all k clusters stay non-empty.
template <typename Scalar>
KMeansResult<Scalar> kmeans(const DenseMatrix<Scalar>& points, int k, std::uint64_t seed,
                            int max_iterations = 100) {
  const Eigen::Index n = points.rows();
  if (k < 1) throw Error(ErrorCode::kInvalidArgument, "k must be >= 1");
  if (n == 0) throw Error(ErrorCode::kInvalidArgument, "kmeans on empty point set");
  if (k > n) throw Error(ErrorCode::kInvalidArgument, "k exceeds number of points");

  KMeansResult<Scalar> out;
  DenseMatrix<Scalar>& centroids = out.centroids;
  centroids.resize(k, points.cols());

  Rng rng(mix_seed(seed));
  std::vector<char> chosen(static_cast<std::size_t>(n), 0);
  Eigen::Index first = static_cast<Eigen::Index>(uniform_index(rng, static_cast<std::uint64_t>(n)));
  centroids.row(0) = points.row(first);
  chosen[static_cast<std::size_t>(first)] = 1;
  DenseVector<Scalar> nearest = (points.rowwise() - centroids.row(0)).rowwise().squaredNorm();
  for (int c = 1; c < k; ++c) {
    Eigen::Index best = -1;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (chosen[static_cast<std::size_t>(i)]) continue;
      if (best < 0 || nearest(i) > nearest(best)) best = i;
    }
    centroids.row(c) = points.row(best);
    chosen[static_cast<std::size_t>(best)] = 1;
    nearest = nearest.cwiseMin((points.rowwise() - centroids.row(c)).rowwise().squaredNorm());
  }

  auto assign = [&](const DenseMatrix<Scalar>& centres) {
    std::vector<int> a(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::Index best;
      (centres.rowwise() - points.row(i)).rowwise().squaredNorm().minCoeff(&best);
      a[static_cast<std::size_t>(i)] = static_cast<int>(best);
    }
    return a;
  };
  auto repair = [&](std::vector<int>& a, DenseMatrix<Scalar>& centres) {
    std::vector<int> sizes(static_cast<std::size_t>(k), 0);
    for (int c : a) ++sizes[static_cast<std::size_t>(c)];
    for (int c = 0; c < k; ++c) {
      if (sizes[static_cast<std::size_t>(c)] != 0) continue;
      Eigen::Index donor = -1;
      Scalar donor_distance = Scalar(-1);
      for (Eigen::Index i = 0; i < n; ++i) {
        const int own = a[static_cast<std::size_t>(i)];
        if (sizes[static_cast<std::size_t>(own)] < 2) continue;
        const Scalar d = (points.row(i) - centres.row(own)).squaredNorm();
        if (d > donor_distance) {
          donor = i;
          donor_distance = d;
        }
      }
      --sizes[static_cast<std::size_t>(a[static_cast<std::size_t>(donor)])];
      a[static_cast<std::size_t>(donor)] = c;
      sizes[static_cast<std::size_t>(c)] = 1;
      centres.row(c) = points.row(donor);
    }
  };
  auto update = [&](const std::vector<int>& a) {
    DenseMatrix<Scalar> centres = DenseMatrix<Scalar>::Zero(k, points.cols());
    std::vector<int> sizes(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      const int c = a[static_cast<std::size_t>(i)];
      centres.row(c) += points.row(i);
      ++sizes[static_cast<std::size_t>(c)];
    }
    for (int c = 0; c < k; ++c) centres.row(c) /= static_cast<Scalar>(sizes[static_cast<std::size_t>(c)]);
    return centres;
  };

  out.assignment = assign(centroids);
  repair(out.assignment, centroids);
  for (out.iterations = 1; out.iterations <= max_iterations; ++out.iterations) {
    centroids = update(out.assignment);
    std::vector<int> next = assign(centroids);
    repair(next, centroids);
    if (next == out.assignment) {
      out.converged = true;
      break;
    }
    out.assignment = std::move(next);
  }
  out.iterations = std::min(out.iterations, max_iterations);
  centroids = update(out.assignment);
  return out;
}

/// Sum over points of squared distance to their assigned centroid.
template <typename Scalar>
Scalar within_cluster_sum_of_squares(const DenseMatrix<Scalar>& points,
                                     const DenseMatrix<Scalar>& centroids,
                                     const std::vector<int>& assignment) {
  Scalar total = 0;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    total += (points.row(i) - centroids.row(assignment[static_cast<std::size_t>(i)])).squaredNorm();
  }
  return total;
}

struct SubCluster {
  Eigen::VectorXd centroid;  // dense over the BOW vocabulary
  std::vector<RecordId> member_ids;

  bool operator==(const SubCluster&) const = default;
};

/// First layer: attribute-type signature; second layer: k-means sub-types.
struct ClusterIndex {
  std::map<std::string, std::vector<SubCluster>> groups;
  int k = 1;
  std::uint64_t seed = 0;
  int dimension = 0;

  std::size_t subcluster_count() const;
  bool operator==(const ClusterIndex&) const = default;
};

struct IndexedRecord {
  RecordId id = 0;
  std::string signature;
  BowVector bow;
};

/// Groups records by signature and splits each group into min(k, |group|)
/// sub-clusters. Members keep input order within a sub-cluster.
ClusterIndex build_index(std::span<const IndexedRecord> records, int dimension, int k,
                         std::uint64_t seed);

Eigen::VectorXd to_dense(const BowVector& v, int dimension);

}  // namespace datalabel
