#include "datalabel/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace datalabel {

int TokenVocabulary::add(const std::string& token) {
  auto [it, inserted] = ids_.emplace(token, size());
  if (inserted) tokens_.push_back(token);
  return it->second;
}

int TokenVocabulary::lookup(const std::string& token) const {
  auto it = ids_.find(token);
  return it == ids_.end() ? kUnknown : it->second;
}

BowVector vectorize(const LinearizedData& data, const TokenVocabulary& vocab) {
  if (data.tokens.empty()) throw Error(ErrorCode::kInvalidArgument, "vectorize: empty token list");
  std::vector<int> ids;
  ids.reserve(data.tokens.size());
  for (const auto& t : data.tokens) ids.push_back(vocab.lookup(t));
  std::sort(ids.begin(), ids.end());

  BowVector v;
  double sq = 0.0;
  for (std::size_t i = 0; i < ids.size();) {
    std::size_t j = i;
    while (j < ids.size() && ids[j] == ids[i]) ++j;
    const int count = static_cast<int>(j - i);
    v.entries.emplace_back(ids[i], count);
    sq += static_cast<double>(count) * count;
    i = j;
  }
  v.norm = std::sqrt(sq);
  return v;
}

double cosine(const BowVector& a, const BowVector& b) {
  if (a.norm == 0.0 || b.norm == 0.0) throw Error(ErrorCode::kInvalidArgument, "cosine of zero vector");
  double dot = 0.0;
  auto i = a.entries.begin();
  auto j = b.entries.begin();
  while (i != a.entries.end() && j != b.entries.end()) {
    if (i->first < j->first) ++i;
    else if (j->first < i->first) ++j;
    else {
      dot += static_cast<double>(i->second) * j->second;
      ++i;
      ++j;
    }
  }
  return std::clamp(dot / (a.norm * b.norm), 0.0, 1.0);
}

std::string attribute_signature(const StructuredRecord& record, const DelimiterConfig& delim) {
  const auto attrs = record_attributes(record, delim);
  const std::set<std::string> unique(attrs.begin(), attrs.end());
  std::string out;
  for (const auto& a : unique) {
    if (!out.empty()) out += '|';
    out += a;
  }
  return out;
}

Eigen::VectorXd to_dense(const BowVector& v, int dimension) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(dimension);
  for (const auto& [id, count] : v.entries) out(id) = count;
  return out;
}

std::size_t ClusterIndex::subcluster_count() const {
  std::size_t n = 0;
  for (const auto& [signature, clusters] : groups) n += clusters.size();
  return n;
}

ClusterIndex build_index(std::span<const IndexedRecord> records, int dimension, int k,
                         std::uint64_t seed) {
  if (k < 1) throw Error(ErrorCode::kInvalidArgument, "k must be >= 1");
  if (records.empty()) throw Error(ErrorCode::kInvalidArgument, "cannot index an empty corpus");

  std::map<std::string, std::vector<const IndexedRecord*>> by_signature;
  for (const auto& r : records) by_signature[r.signature].push_back(&r);

  ClusterIndex index;
  index.k = k;
  index.seed = seed;
  index.dimension = dimension;
  std::uint64_t group_number = 0;
  for (const auto& [signature, members] : by_signature) {
    const int group_k = std::min<int>(k, static_cast<int>(members.size()));
    Eigen::MatrixXd points(static_cast<Eigen::Index>(members.size()), dimension);
    for (std::size_t i = 0; i < members.size(); ++i) {
      points.row(static_cast<Eigen::Index>(i)) = to_dense(members[i]->bow, dimension).transpose();
    }
    const auto result = kmeans<double>(points, group_k, mix_seed(seed, group_number++));

    std::vector<SubCluster> clusters(static_cast<std::size_t>(group_k));
    for (int c = 0; c < group_k; ++c) clusters[static_cast<std::size_t>(c)].centroid = result.centroids.row(c).transpose();
    for (std::size_t i = 0; i < members.size(); ++i) {
      clusters[static_cast<std::size_t>(result.assignment[i])].member_ids.push_back(members[i]->id);
    }
    index.groups.emplace(signature, std::move(clusters));
  }
  return index;
}

}  // namespace datalabel
