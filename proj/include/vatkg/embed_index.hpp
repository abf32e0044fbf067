#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace vatkg {

/// Fixed-dimension float vector. Construction rejects empty or non-finite
/// input, so every live instance satisfies |values| = dim > 0.
class EmbeddingVector {
 public:
  explicit EmbeddingVector(std::vector<float> values);

  std::size_t dim() const noexcept { return values_.size(); }
  std::span<const float> values() const noexcept { return values_; }
  float operator[](std::size_t i) const noexcept { return values_[i]; }

  /// Euclidean norm accumulated in double.
  double norm() const noexcept;
  bool is_zero() const noexcept;

  friend bool operator==(const EmbeddingVector&, const EmbeddingVector&) = default;

 private:
  std::vector<float> values_;
};

/// Audio block first, then video block; each block unit-normalized.
class JointEmbedding {
 public:
  JointEmbedding(EmbeddingVector values, std::size_t dim_audio, std::size_t dim_video);

  const EmbeddingVector& vector() const noexcept { return values_; }
  std::size_t dim_audio() const noexcept { return dim_audio_; }
  std::size_t dim_video() const noexcept { return dim_video_; }
  std::size_t dim() const noexcept { return dim_audio_ + dim_video_; }

 private:
  EmbeddingVector values_;
  std::size_t dim_audio_;
  std::size_t dim_video_;
};

enum class Metric : std::uint8_t { L2 = 0, InnerProduct = 1, Cosine = 2 };

std::string_view metric_name(Metric m) noexcept;
Metric parse_metric(std::string_view name);

double dot(const EmbeddingVector& a, const EmbeddingVector& b);
/// a·b / (‖a‖‖b‖) clamped to [-1, 1]. Throws ZeroVector if either is all-zero.
double cosine(const EmbeddingVector& a, const EmbeddingVector& b);
double l2_distance(const EmbeddingVector& a, const EmbeddingVector& b);
EmbeddingVector normalize(const EmbeddingVector& v);
JointEmbedding joint_embedding(const EmbeddingVector& audio, const EmbeddingVector& video);

struct RetrievalHit {
  std::string entry_id;
  /// Distance for L2, similarity for InnerProduct and Cosine.
  double score = 0.0;

  friend bool operator==(const RetrievalHit&, const RetrievalHit&) = default;
};

struct IndexEntry {
  std::string id;
  EmbeddingVector vector;
};

/// Exact linear-scan index. Immutable once constructed.
class FlatIndex {
 public:
  /// Empty index of a known shape; searches return nothing.
  FlatIndex(Metric metric, std::size_t dim);

  Metric metric() const noexcept { return metric_; }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return ids_.size(); }
  bool empty() const noexcept { return ids_.empty(); }

  const std::string& id(std::size_t row) const { return ids_[row]; }
  std::span<const float> row(std::size_t row) const {
    return {data_.data() + row * dim_, dim_};
  }

  /// Best-first, at most k hits, strict threshold, ties by ascending id.
  std::vector<RetrievalHit> search(const EmbeddingVector& query, std::size_t k,
                                   std::optional<double> threshold = std::nullopt) const;

  friend bool operator==(const FlatIndex&, const FlatIndex&) = default;

 private:
  friend FlatIndex build_index(std::vector<IndexEntry> entries, Metric metric);
  friend FlatIndex load_index(const std::filesystem::path& path);

  FlatIndex(Metric metric, std::size_t dim, std::vector<std::string> ids,
            std::vector<float> data);
  void finalize();

  Metric metric_;
  std::size_t dim_;
  std::vector<std::string> ids_;
  std::vector<float> data_;     // row-major, size() * dim_
  std::vector<double> norms_;   // cached for Cosine
};

/// True when `candidate` ranks ahead of `incumbent` under `metric`,
/// comparing score first and entry id second.
bool ranks_before(Metric metric, const RetrievalHit& candidate, const RetrievalHit& incumbent);
/// Strict acceptance test of a score against a threshold.
bool passes_threshold(Metric metric, double score, double threshold);

FlatIndex build_index(std::vector<IndexEntry> entries, Metric metric);

void save_index(const FlatIndex& index, const std::filesystem::path& path);
FlatIndex load_index(const std::filesystem::path& path);
/// Serialized bytes; save_index writes exactly this.
std::vector<unsigned char> serialize_index(const FlatIndex& index);

}  // namespace vatkg
