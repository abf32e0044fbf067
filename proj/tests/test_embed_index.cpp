#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <map>

#include "support.hpp"
#include "vatkg/hash.hpp"

using namespace vatkg;
using vatkg::test::random_vector;

namespace {

// Brute-force reference written against the raw floats, not the library.
std::vector<RetrievalHit> naive_search(const std::vector<IndexEntry>& entries, Metric metric,
                                       const EmbeddingVector& q, std::size_t k,
                                       std::optional<double> threshold) {
  std::vector<RetrievalHit> all;
  for (const auto& e : entries) {
    double d = 0, qq = 0, ee = 0, sq = 0;
    for (std::size_t i = 0; i < q.dim(); ++i) {
      const double a = q[i], b = e.vector[i];
      d += a * b;
      qq += a * a;
      ee += b * b;
      sq += (a - b) * (a - b);
    }
    double score = metric == Metric::L2 ? std::sqrt(sq)
                   : metric == Metric::InnerProduct ? d
                                                    : d / (std::sqrt(qq) * std::sqrt(ee));
    if (threshold) {
      const bool ok = metric == Metric::L2 ? score < *threshold : score > *threshold;
      if (!ok) continue;
    }
    all.push_back({e.id, score});
  }
  std::sort(all.begin(), all.end(), [&](const RetrievalHit& a, const RetrievalHit& b) {
    if (a.score != b.score) return metric == Metric::L2 ? a.score < b.score : a.score > b.score;
    return a.entry_id < b.entry_id;
  });
  if (all.size() > k) all.resize(k);
  return all;
}

std::vector<IndexEntry> random_entries(std::mt19937_64& rng, std::size_t n, std::size_t dim) {
  std::vector<IndexEntry> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back({"e" + std::to_string(i), random_vector(rng, dim)});
  return out;
}

}  // namespace

TEST(EmbeddingVector, RejectsEmptyAndNonFinite) {
  EXPECT_ERRC(EmbeddingVector({}), Errc::ZeroDim);
  EXPECT_ERRC(EmbeddingVector({1.0f, std::numeric_limits<float>::quiet_NaN()}), Errc::NonFinite);
  EXPECT_ERRC(EmbeddingVector({std::numeric_limits<float>::infinity()}), Errc::NonFinite);
  EXPECT_TRUE(EmbeddingVector({0.0f, 0.0f}).is_zero());
}

TEST(Similarity, CosineBoundaryIsExact) {
  // |b| = 5, so the cosine with the first axis is exactly 1/5.
  const EmbeddingVector a({1, 0, 0, 0}), b({1, 2, 4, 2});
  EXPECT_EQ(cosine(a, b), 0.2);
  EXPECT_EQ(dot(a, b), 1.0);
  EXPECT_DOUBLE_EQ(l2_distance(a, b), std::sqrt(24.0));
}

TEST(Similarity, CosineErrorsAndClamp) {
  EXPECT_ERRC(cosine(EmbeddingVector({0, 0}), EmbeddingVector({1, 0})), Errc::ZeroVector);
  EXPECT_ERRC(cosine(EmbeddingVector({1, 0}), EmbeddingVector({1, 0, 0})), Errc::DimMismatch);
  const EmbeddingVector v({0.1f, 0.7f, -0.3f});
  EXPECT_LE(cosine(v, v), 1.0);
  EXPECT_GE(cosine(v, EmbeddingVector({-0.1f, -0.7f, 0.3f})), -1.0);
}

TEST(Similarity, JointEmbeddingNormalizesEachBlock) {
  const auto j = joint_embedding(EmbeddingVector({3, 4}), EmbeddingVector({0, 0, 2}));
  EXPECT_EQ(j.dim_audio(), 2u);
  EXPECT_EQ(j.dim_video(), 3u);
  const auto v = j.vector().values();
  EXPECT_FLOAT_EQ(v[0], 0.6f);
  EXPECT_FLOAT_EQ(v[1], 0.8f);
  EXPECT_FLOAT_EQ(v[4], 1.0f);
  EXPECT_ERRC(joint_embedding(EmbeddingVector({0, 0}), EmbeddingVector({1})), Errc::ZeroVector);
}

TEST(BuildIndex, Errors) {
  EXPECT_ERRC(build_index({}, Metric::L2), Errc::EmptyEntries);
  EXPECT_ERRC(build_index({{"a", EmbeddingVector({1, 0})}, {"a", EmbeddingVector({0, 1})}}, Metric::L2),
              Errc::DuplicateId);
  EXPECT_ERRC(build_index({{"a", EmbeddingVector({1, 0})}, {"b", EmbeddingVector({0, 1, 0})}}, Metric::L2),
              Errc::DimMismatch);
  EXPECT_ERRC(build_index({{"a", EmbeddingVector({0, 0})}}, Metric::Cosine), Errc::ZeroVector);
  EXPECT_NO_THROW(build_index({{"a", EmbeddingVector({0, 0})}}, Metric::L2));
}

TEST(Search, KAndDimValidation) {
  const auto idx = build_index({{"a", EmbeddingVector({1, 0})}}, Metric::L2);
  EXPECT_ERRC(idx.search(EmbeddingVector({1, 0}), 0), Errc::InvalidK);
  EXPECT_ERRC(idx.search(EmbeddingVector({1, 0, 0}), 1), Errc::DimMismatch);
  EXPECT_EQ(idx.search(EmbeddingVector({1, 0}), 10).size(), 1u);
}

TEST(Search, EmptyIndexReturnsNothing) {
  const FlatIndex idx(Metric::L2, 3);
  EXPECT_TRUE(idx.search(EmbeddingVector({1, 0, 0}), 5).empty());
  EXPECT_ERRC(idx.search(EmbeddingVector({1, 0}), 5), Errc::DimMismatch);
}

TEST(Search, TiesBreakByAscendingId) {
  const auto idx = build_index({{"c", EmbeddingVector({1, 0})},
                                {"a", EmbeddingVector({0, 1})},
                                {"b", EmbeddingVector({-1, 0})}},
                               Metric::L2);
  // Every entry lies at distance 1 from the origin.
  const auto hits = idx.search(EmbeddingVector({0, 0}), 3);
  ASSERT_EQ(hits.size(), 3u);
  EXPECT_EQ(hits[0].entry_id, "a");
  EXPECT_EQ(hits[1].entry_id, "b");
  EXPECT_EQ(hits[2].entry_id, "c");
}

TEST(Search, ThresholdIsStrict) {
  const auto idx = build_index({{"a", EmbeddingVector({1, 0})}, {"b", EmbeddingVector({2, 0})}},
                               Metric::L2);
  const EmbeddingVector q({0, 0});
  EXPECT_EQ(idx.search(q, 5, 1.0).size(), 0u);  // distance 1 is not < 1
  EXPECT_EQ(idx.search(q, 5, 1.5).size(), 1u);
  const auto ip = build_index({{"a", EmbeddingVector({1, 0})}}, Metric::InnerProduct);
  EXPECT_EQ(ip.search(EmbeddingVector({1, 0}), 5, 1.0).size(), 0u);  // 1 is not > 1
  EXPECT_EQ(ip.search(EmbeddingVector({1, 0}), 5, 0.5).size(), 1u);
}

TEST(Search, MatchesNaiveScan) {
  std::mt19937_64 rng(7);
  const auto entries = random_entries(rng, 200, 8);
  for (Metric m : {Metric::L2, Metric::InnerProduct, Metric::Cosine}) {
    const auto idx = build_index(entries, m);
    for (int qi = 0; qi < 20; ++qi) {
      const auto q = random_vector(rng, 8);
      for (std::size_t k : {1u, 7u, 300u}) {
        const auto got = idx.search(q, k);
        const auto want = naive_search(entries, m, q, k, std::nullopt);
        ASSERT_EQ(got.size(), want.size());
        for (std::size_t i = 0; i < got.size(); ++i) {
          EXPECT_EQ(got[i].entry_id, want[i].entry_id);
          EXPECT_NEAR(got[i].score, want[i].score, 1e-9);
        }
      }
    }
  }
}

TEST(Persistence, RoundTripIsBitwise) {
  std::mt19937_64 rng(11);
  test::TempDir dir;
  for (Metric m : {Metric::L2, Metric::InnerProduct, Metric::Cosine}) {
    const auto idx = build_index(random_entries(rng, 30, 5), m);
    save_index(idx, dir / "i.vkgidx");
    const auto back = load_index(dir / "i.vkgidx");
    EXPECT_EQ(back, idx);
    EXPECT_EQ(serialize_index(back), serialize_index(idx));
  }
  const FlatIndex empty(Metric::L2, 4);
  save_index(empty, dir / "e.vkgidx");
  EXPECT_EQ(load_index(dir / "e.vkgidx"), empty);
}

TEST(Persistence, CorruptionIsRejected) {
  test::TempDir dir;
  const auto idx = build_index({{"a", EmbeddingVector({1, 2})}, {"b", EmbeddingVector({3, 4})}}, Metric::L2);
  auto bytes = serialize_index(idx);
  auto write = [&](const std::vector<unsigned char>& b) {
    test::write_text(dir / "x", std::string(b.begin(), b.end()));
    return dir / "x";
  };

  auto flipped = bytes;
  flipped[flipped.size() / 2] ^= 0x01;
  EXPECT_ERRC(load_index(write(flipped)), Errc::ChecksumMismatch);

  auto magic = bytes;
  magic[0] = 'X';
  EXPECT_ERRC(load_index(write(magic)), Errc::BadMagic);

  auto truncated = bytes;
  truncated.resize(truncated.size() - 3);
  EXPECT_ERRC(load_index(write(truncated)), Errc::ChecksumMismatch);

  // A future version with a valid checksum is a version error, not corruption.
  std::vector<unsigned char> body(bytes.begin(), bytes.end() - 8);
  body[8] = 2;
  Fnv1a64 h;
  h.update(body);
  std::uint64_t sum = h.digest();
  for (int i = 0; i < 8; ++i) body.push_back(static_cast<unsigned char>(sum >> (8 * i)));
  EXPECT_ERRC(load_index(write(body)), Errc::SchemaVersionMismatch);

  EXPECT_ERRC(load_index(dir / "missing"), Errc::IoError);
  EXPECT_ERRC(save_index(idx, ""), Errc::IoError);
}
