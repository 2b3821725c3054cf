#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <set>

#include "datalabel/clustering.hpp"
#include "oracles.hpp"

using namespace datalabel;

namespace {

LinearizedData data_of(TokenList tokens) { return {0, std::move(tokens)}; }

TokenVocabulary vocab_of(std::initializer_list<std::string> tokens) {
  TokenVocabulary v;
  for (const auto& t : tokens) v.add(t);
  return v;
}

IndexedRecord indexed(RecordId id, std::string signature, const TokenList& tokens, TokenVocabulary& vocab) {
  for (const auto& t : tokens) vocab.add(t);
  return {id, std::move(signature), vectorize(data_of(tokens), vocab)};
}

std::vector<RecordId> all_members(const ClusterIndex& index) {
  std::vector<RecordId> out;
  for (const auto& [_, subs] : index.groups) {
    for (const auto& s : subs) out.insert(out.end(), s.member_ids.begin(), s.member_ids.end());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST_CASE("bag-of-words vectors") {
  const auto vocab = vocab_of({"a", "b"});
  const auto v = vectorize(data_of({"a", "b", "a"}), vocab);
  CHECK(v.entries == std::vector<std::pair<int, int>>{{1, 2}, {2, 1}});
  CHECK(v.norm == doctest::Approx(std::sqrt(5.0)).epsilon(1e-15));
  CHECK(vectorize(data_of({"a"}), vocab).norm == 1.0);
  CHECK(vectorize(data_of({"b", "a", "a"}), vocab) == v);
  CHECK(vectorize(data_of({"zzz"}), vocab).entries == std::vector<std::pair<int, int>>{{TokenVocabulary::kUnknown, 1}});
}

TEST_CASE("cosine similarity") {
  const auto vocab = vocab_of({"a", "b", "c"});
  const auto ab = vectorize(data_of({"a", "b"}), vocab);
  const auto a = vectorize(data_of({"a"}), vocab);
  const auto c = vectorize(data_of({"c"}), vocab);
  CHECK(cosine(ab, ab) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(cosine(a, c) == 0.0);
  CHECK(cosine(ab, a) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-15));
  CHECK_THROWS_AS(cosine(BowVector{}, a), Error);
}

TEST_CASE("attribute signatures") {
  StructuredRecord r;
  r.pairs = {{"name", "A"}, {"eatType", "pub"}};
  CHECK(attribute_signature(r, DelimiterConfig{}) == "eatType|name");
  StructuredRecord same = r;
  same.pairs = {{"eatType", "cafe"}, {"name", "B"}};
  CHECK(attribute_signature(same, DelimiterConfig{}) == "eatType|name");
  StructuredRecord twice;
  twice.pairs = {{"name", "A"}, {"name", "B"}};
  CHECK(attribute_signature(twice, DelimiterConfig{}) == "name");
}

TEST_CASE("symmetric blobs split into two clusters") {
  TokenVocabulary vocab;
  std::vector<IndexedRecord> records{
      indexed(0, "s", {"a"}, vocab), indexed(1, "s", {"a"}, vocab),
      indexed(2, "s", {"b", "b", "b", "b", "b"}, vocab), indexed(3, "s", {"b", "b", "b", "b", "b"}, vocab)};
  const auto index = build_index(records, vocab.size(), 2, 1);
  REQUIRE(index.groups.size() == 1);
  std::set<std::vector<RecordId>> got;
  for (const auto& s : index.groups.at("s")) got.insert(s.member_ids);
  CHECK(got == std::set<std::vector<RecordId>>{{0, 1}, {2, 3}});

  const auto single = build_index(records, vocab.size(), 1, 1);
  REQUIRE(single.groups.at("s").size() == 1);
  CHECK(single.groups.at("s")[0].member_ids == std::vector<RecordId>{0, 1, 2, 3});
}

TEST_CASE("planted blobs match the exhaustive minimum-WCSS partition") {
  const std::vector<std::vector<double>> pts{{0.0, 0.1}, {0.2, -0.1}, {-0.1, 0.0},
                                             {5.0, 5.2}, {5.1, 4.9}, {4.8, 5.0}};
  Eigen::MatrixXd m(6, 2);
  for (int i = 0; i < 6; ++i) m.row(i) << pts[static_cast<std::size_t>(i)][0], pts[static_cast<std::size_t>(i)][1];
  const auto [best_cost, best_assignment] = oracle::min_wcss(pts, 2);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto km = kmeans<double>(m, 2, seed);
    CHECK(oracle::partition_of(km.assignment) == oracle::partition_of(best_assignment));
    CHECK(within_cluster_sum_of_squares<double>(m, km.centroids, km.assignment) ==
          doctest::Approx(best_cost).epsilon(1e-12));
  }
}

TEST_CASE("kmeans agrees with the exhaustive optimum on random small sets") {
  Rng rng(99);
  int optimal = 0;
  const int trials = 40;
  for (int t = 0; t < trials; ++t) {
    const int n = 5 + static_cast<int>(uniform_index(rng, 3));
    std::vector<std::vector<double>> pts;
    Eigen::MatrixXf m(n, 2);
    for (int i = 0; i < n; ++i) {
      const double cx = (i % 2 == 0) ? 0.0 : 4.0;
      pts.push_back({cx + standard_normal(rng) * 0.3, standard_normal(rng) * 0.3});
      m.row(i) << static_cast<float>(pts.back()[0]), static_cast<float>(pts.back()[1]);
    }
    const auto km = kmeans<float>(m, 2, static_cast<std::uint64_t>(t));
    const auto [best_cost, best_assignment] = oracle::min_wcss(pts, 2);
    if (oracle::partition_of(km.assignment) == oracle::partition_of(best_assignment)) ++optimal;
    std::vector<int> sizes(2, 0);
    for (int a : km.assignment) ++sizes[static_cast<std::size_t>(a)];
    CHECK(sizes[0] > 0);
    CHECK(sizes[1] > 0);
  }
  CHECK(optimal == trials);
}

TEST_CASE("kmeans input validation and empty-cluster repair") {
  Eigen::MatrixXd same = Eigen::MatrixXd::Zero(4, 3);
  const auto km = kmeans<double>(same, 3, 5);
  std::set<int> used(km.assignment.begin(), km.assignment.end());
  CHECK(used.size() == 3);
  CHECK_THROWS_AS(kmeans<double>(same, 0, 1), Error);
  CHECK_THROWS_AS(kmeans<double>(same, 5, 1), Error);
}

TEST_CASE("index partitions every record and is reproducible") {
  Rng rng(4);
  TokenVocabulary vocab;
  std::vector<IndexedRecord> records;
  const std::vector<std::string> sigs{"a|b", "a|c", "b|c|d"};
  for (RecordId id = 0; id < 100; ++id) {
    TokenList tokens;
    const auto len = 1 + uniform_index(rng, 6);
    for (std::uint64_t i = 0; i < len; ++i) tokens.push_back("t" + std::to_string(uniform_index(rng, 12)));
    records.push_back(indexed(id * 3 + 1, sigs[uniform_index(rng, sigs.size())], tokens, vocab));
  }
  const auto index = build_index(records, vocab.size(), 4, 17);
  std::vector<RecordId> expected;
  for (const auto& r : records) expected.push_back(r.id);
  std::sort(expected.begin(), expected.end());
  CHECK(all_members(index) == expected);
  for (const auto& [sig, subs] : index.groups) {
    for (const auto& s : subs) {
      CHECK_FALSE(s.member_ids.empty());
      for (auto id : s.member_ids) {
        const auto it = std::find_if(records.begin(), records.end(), [&](const auto& r) { return r.id == id; });
        CHECK(it->signature == sig);
      }
    }
  }
  CHECK(build_index(records, vocab.size(), 4, 17) == index);
}
