#include "vatkg/embed_index.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <unordered_set>

#include "vatkg/error.hpp"
#include "vatkg/hash.hpp"

namespace vatkg {

namespace {

void require_same_dim(std::size_t a, std::size_t b) {
  if (a != b) {
    throw Error(Errc::DimMismatch, std::to_string(a) + " vs " + std::to_string(b));
  }
}

double dot_span(std::span<const float> a, std::span<const float> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  }
  return acc;
}

double l2_span(std::span<const float> a, std::span<const float> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    acc += d * d;
  }
  return std::sqrt(acc);
}

double norm_span(std::span<const float> a) { return std::sqrt(dot_span(a, a)); }

constexpr char kMagic[8] = {'V', 'K', 'G', 'I', 'D', 'X', '1', '\0'};
constexpr std::uint32_t kSchemaVersion = 1;

class ByteWriter {
 public:
  void bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    out_.insert(out_.end(), p, p + n);
  }
  template <typename T>
  void le(T value) {
    using U = std::make_unsigned_t<T>;
    auto u = static_cast<U>(value);
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      out_.push_back(static_cast<unsigned char>(u & 0xFFu));
      u = static_cast<U>(u >> 8);
    }
  }
  std::vector<unsigned char> take() { return std::move(out_); }
  const std::vector<unsigned char>& data() const { return out_; }

 private:
  std::vector<unsigned char> out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const unsigned char> in) : in_(in) {}

  template <typename T>
  T le() {
    need(sizeof(T));
    std::make_unsigned_t<T> u = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      u |= static_cast<std::make_unsigned_t<T>>(in_[pos_ + i]) << (8 * i);
    }
    pos_ += sizeof(T);
    return static_cast<T>(u);
  }
  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(in_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) {
      throw Error(Errc::ChecksumMismatch, "index payload ends early");
    }
  }
  std::span<const unsigned char> in_;
  std::size_t pos_ = 0;
};

}  // namespace

EmbeddingVector::EmbeddingVector(std::vector<float> values) : values_(std::move(values)) {
  if (values_.empty()) throw Error(Errc::ZeroDim, "embedding has no components");
  for (float v : values_) {
    if (!std::isfinite(v)) throw Error(Errc::NonFinite, "embedding component is not finite");
  }
}

double EmbeddingVector::norm() const noexcept { return norm_span(values_); }

bool EmbeddingVector::is_zero() const noexcept {
  return std::all_of(values_.begin(), values_.end(), [](float v) { return v == 0.0f; });
}

JointEmbedding::JointEmbedding(EmbeddingVector values, std::size_t dim_audio,
                               std::size_t dim_video)
    : values_(std::move(values)), dim_audio_(dim_audio), dim_video_(dim_video) {
  require_same_dim(values_.dim(), dim_audio + dim_video);
}

std::string_view metric_name(Metric m) noexcept {
  switch (m) {
    case Metric::L2: return "l2";
    case Metric::InnerProduct: return "ip";
    case Metric::Cosine: return "cosine";
  }
  return "?";
}

Metric parse_metric(std::string_view name) {
  if (name == "l2" || name == "L2") return Metric::L2;
  if (name == "ip" || name == "inner_product" || name == "InnerProduct") return Metric::InnerProduct;
  if (name == "cosine" || name == "Cosine") return Metric::Cosine;
  throw Error(Errc::InvalidArgument, "unknown metric '" + std::string(name) + "'");
}

double dot(const EmbeddingVector& a, const EmbeddingVector& b) {
  require_same_dim(a.dim(), b.dim());
  return dot_span(a.values(), b.values());
}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
  require_same_dim(a.dim(), b.dim());
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) throw Error(Errc::ZeroVector, "cosine of a zero vector");
  return std::clamp(dot_span(a.values(), b.values()) / (na * nb), -1.0, 1.0);
}

double l2_distance(const EmbeddingVector& a, const EmbeddingVector& b) {
  require_same_dim(a.dim(), b.dim());
  return l2_span(a.values(), b.values());
}

EmbeddingVector normalize(const EmbeddingVector& v) {
  const double n = v.norm();
  if (n == 0.0) throw Error(Errc::ZeroVector, "cannot normalize a zero vector");
  std::vector<float> out(v.dim());
  for (std::size_t i = 0; i < v.dim(); ++i) {
    out[i] = static_cast<float>(static_cast<double>(v[i]) / n);
  }
  return EmbeddingVector(std::move(out));
}

JointEmbedding joint_embedding(const EmbeddingVector& audio, const EmbeddingVector& video) {
  const EmbeddingVector a = normalize(audio);
  const EmbeddingVector v = normalize(video);
  std::vector<float> values;
  values.reserve(a.dim() + v.dim());
  values.insert(values.end(), a.values().begin(), a.values().end());
  values.insert(values.end(), v.values().begin(), v.values().end());
  return JointEmbedding(EmbeddingVector(std::move(values)), a.dim(), v.dim());
}

bool ranks_before(Metric metric, const RetrievalHit& candidate, const RetrievalHit& incumbent) {
  if (candidate.score != incumbent.score) {
    return metric == Metric::L2 ? candidate.score < incumbent.score
                                : candidate.score > incumbent.score;
  }
  return candidate.entry_id < incumbent.entry_id;
}

bool passes_threshold(Metric metric, double score, double threshold) {
  return metric == Metric::L2 ? score < threshold : score > threshold;
}

FlatIndex::FlatIndex(Metric metric, std::size_t dim) : metric_(metric), dim_(dim) {
  if (dim == 0) throw Error(Errc::ZeroDim, "index dimension must be positive");
}

FlatIndex::FlatIndex(Metric metric, std::size_t dim, std::vector<std::string> ids,
                     std::vector<float> data)
    : metric_(metric), dim_(dim), ids_(std::move(ids)), data_(std::move(data)) {
  finalize();
}

void FlatIndex::finalize() {
  norms_.clear();
  if (metric_ != Metric::Cosine) return;
  norms_.reserve(ids_.size());
  for (std::size_t r = 0; r < ids_.size(); ++r) {
    const double n = norm_span(row(r));
    if (n == 0.0) throw Error(Errc::ZeroVector, "cosine index entry '" + ids_[r] + "' is zero");
    norms_.push_back(n);
  }
}

std::vector<RetrievalHit> FlatIndex::search(const EmbeddingVector& query, std::size_t k,
                                            std::optional<double> threshold) const {
  require_same_dim(query.dim(), dim_);
  if (k == 0) throw Error(Errc::InvalidK, "k must be at least 1");

  double query_norm = 1.0;
  if (metric_ == Metric::Cosine) {
    query_norm = query.norm();
    if (query_norm == 0.0) throw Error(Errc::ZeroVector, "cosine query is zero");
  }

  std::vector<RetrievalHit> hits;
  hits.reserve(ids_.size());
  const auto q = query.values();
  for (std::size_t r = 0; r < ids_.size(); ++r) {
    double score = 0.0;
    switch (metric_) {
      case Metric::L2: score = l2_span(q, row(r)); break;
      case Metric::InnerProduct: score = dot_span(q, row(r)); break;
      case Metric::Cosine:
        score = std::clamp(dot_span(q, row(r)) / (query_norm * norms_[r]), -1.0, 1.0);
        break;
    }
    if (threshold && !passes_threshold(metric_, score, *threshold)) continue;
    hits.push_back({ids_[r], score});
  }

  const auto better = [this](const RetrievalHit& a, const RetrievalHit& b) {
    return ranks_before(metric_, a, b);
  };
  const std::size_t keep = std::min(k, hits.size());
  std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(keep), hits.end(),
                    better);
  hits.resize(keep);
  return hits;
}

FlatIndex build_index(std::vector<IndexEntry> entries, Metric metric) {
  if (entries.empty()) throw Error(Errc::EmptyEntries, "cannot build an index from no entries");
  const std::size_t dim = entries.front().vector.dim();
  std::unordered_set<std::string> seen;
  std::vector<std::string> ids;
  std::vector<float> data;
  ids.reserve(entries.size());
  data.reserve(entries.size() * dim);
  for (auto& e : entries) {
    require_same_dim(e.vector.dim(), dim);
    if (!seen.insert(e.id).second) throw Error(Errc::DuplicateId, "duplicate entry id '" + e.id + "'");
    data.insert(data.end(), e.vector.values().begin(), e.vector.values().end());
    ids.push_back(std::move(e.id));
  }
  return FlatIndex(metric, dim, std::move(ids), std::move(data));
}

std::vector<unsigned char> serialize_index(const FlatIndex& index) {
  ByteWriter w;
  w.bytes(kMagic, sizeof kMagic);
  w.le<std::uint32_t>(kSchemaVersion);
  w.le<std::uint8_t>(static_cast<std::uint8_t>(index.metric()));
  w.le<std::uint32_t>(static_cast<std::uint32_t>(index.dim()));
  w.le<std::uint64_t>(index.size());
  for (std::size_t r = 0; r < index.size(); ++r) {
    const auto& id = index.id(r);
    w.le<std::uint32_t>(static_cast<std::uint32_t>(id.size()));
    w.bytes(id.data(), id.size());
    for (float v : index.row(r)) w.le<std::uint32_t>(std::bit_cast<std::uint32_t>(v));
  }
  Fnv1a64 h;
  h.update(w.data());
  w.le<std::uint64_t>(h.digest());
  return w.take();
}

void save_index(const FlatIndex& index, const std::filesystem::path& path) {
  if (path.empty()) throw Error(Errc::IoError, "empty index path");
  const auto bytes = serialize_index(index);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoError, "cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(Errc::IoError, "short write to '" + path.string() + "'");
}

FlatIndex load_index(const std::filesystem::path& path) {
  if (path.empty()) throw Error(Errc::IoError, "empty index path");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open '" + path.string() + "'");
  const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                         std::istreambuf_iterator<char>());

  if (bytes.size() < sizeof kMagic || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
    throw Error(Errc::BadMagic, "'" + path.string() + "' is not a vatkg index");
  }
  if (bytes.size() < sizeof kMagic + 8) {
    throw Error(Errc::ChecksumMismatch, "index file truncated");
  }
  const std::span<const unsigned char> body(bytes.data(), bytes.size() - 8);
  Fnv1a64 h;
  h.update(body);
  ByteReader tail(std::span<const unsigned char>(bytes).subspan(bytes.size() - 8));
  if (tail.le<std::uint64_t>() != h.digest()) {
    throw Error(Errc::ChecksumMismatch, "index checksum does not match");
  }

  ByteReader r(body.subspan(sizeof kMagic));
  const auto version = r.le<std::uint32_t>();
  if (version != kSchemaVersion) {
    throw Error(Errc::SchemaVersionMismatch, "index schema version " + std::to_string(version));
  }
  const auto tag = r.le<std::uint8_t>();
  if (tag > 2) throw Error(Errc::SchemaError, "unknown metric tag " + std::to_string(tag));
  const auto metric = static_cast<Metric>(tag);
  const auto dim = r.le<std::uint32_t>();
  if (dim == 0) throw Error(Errc::SchemaError, "index dimension is zero");
  const auto count = r.le<std::uint64_t>();

  std::vector<std::string> ids;
  std::vector<float> data;
  std::unordered_set<std::string> seen;
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto len = r.le<std::uint32_t>();
    auto id = r.str(len);
    if (!seen.insert(id).second) throw Error(Errc::DuplicateId, "duplicate entry id '" + id + "'");
    for (std::uint32_t d = 0; d < dim; ++d) {
      const float v = std::bit_cast<float>(r.le<std::uint32_t>());
      if (!std::isfinite(v)) throw Error(Errc::NonFinite, "non-finite value in '" + id + "'");
      data.push_back(v);
    }
    ids.push_back(std::move(id));
  }
  if (!r.done()) throw Error(Errc::SchemaError, "trailing bytes after index records");
  return FlatIndex(metric, dim, std::move(ids), std::move(data));
}

}  // namespace vatkg
