#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace vatkg {

inline constexpr std::size_t kMaxCandidates = 5;
inline constexpr std::string_view kGraphSchema = "vatkg-graph/1";

/// Opaque corpus-unique sample identifier.
class SampleId {
 public:
  SampleId() = default;
  explicit SampleId(std::string value);

  const std::string& str() const noexcept { return value_; }

  friend auto operator<=>(const SampleId&, const SampleId&) = default;
  friend bool operator==(const SampleId&, const SampleId&) = default;

 private:
  std::string value_;
};

struct MultimodalSample {
  SampleId id;
  std::string video_uri;
  std::string audio_uri;
  std::string caption;
  std::optional<std::string> title;
  std::optional<std::string> description_meta;
  std::optional<std::uint32_t> frame_count;
  std::optional<std::string> category;
  /// Set by the pipeline once the sample survives alignment filtering.
  std::optional<std::uint32_t> center_frame;
  /// Knowledge-intensive caption produced by recaptioning.
  std::optional<std::string> recaption;

  bool has_metadata() const noexcept { return title.has_value() && description_meta.has_value(); }

  friend bool operator==(const MultimodalSample&, const MultimodalSample&) = default;
};

enum class DescriptionSource { Wikipedia, Wiktionary, Llm };

std::string_view source_name(DescriptionSource s) noexcept;
DescriptionSource parse_source(std::string_view name);

struct ConceptDescription {
  std::string text;
  DescriptionSource source = DescriptionSource::Llm;

  friend bool operator==(const ConceptDescription&, const ConceptDescription&) = default;
};

struct Concept {
  std::string surface;
  std::vector<ConceptDescription> candidates;

  friend bool operator==(const Concept&, const Concept&) = default;
};

struct MultimodalTriplet {
  std::string triplet_id;
  std::string head;
  std::string relation;
  std::string tail;
  SampleId sample;
  std::size_t head_desc_idx = 0;
  std::size_t tail_desc_idx = 0;

  friend bool operator==(const MultimodalTriplet&, const MultimodalTriplet&) = default;
};

/// Trim, collapse internal whitespace runs to one space, keep case.
std::string normalize_surface(std::string_view raw);

/// "{head} {relation} {tail}".
std::string triplet_to_sentence(std::string_view head, std::string_view relation,
                                std::string_view tail);
std::string triplet_to_sentence(const MultimodalTriplet& triplet);

/// Lowercase hex FNV-1a-64 of sample, head, relation, tail joined by 0x1F.
std::string make_triplet_id(const SampleId& sample, std::string_view head,
                            std::string_view relation, std::string_view tail);

class KnowledgeGraph {
 public:
  const std::map<std::string, Concept>& concepts() const noexcept { return concepts_; }
  const std::vector<MultimodalTriplet>& triplets() const noexcept { return triplets_; }
  const std::map<SampleId, MultimodalSample>& samples() const noexcept { return samples_; }

  const Concept* find_concept(std::string_view surface) const;
  const MultimodalSample* find_sample(const SampleId& id) const;
  const MultimodalTriplet* find_triplet(std::string_view triplet_id) const;

  /// Inserts or replaces a sample record.
  void put_sample(MultimodalSample sample);

  /// Inserts a concept, or replaces its candidates when the new list is a
  /// superset-by-text of the old one. Indices held by existing triplets are
  /// remapped to the new positions.
  const Concept& upsert_concept(std::string_view surface,
                                std::vector<ConceptDescription> candidates);

  const std::string& add_triplet(std::string_view head, std::string_view relation,
                                 std::string_view tail, const SampleId& sample,
                                 std::size_t head_desc_idx, std::size_t tail_desc_idx);

  /// Throws InvariantViolation on the first broken invariant.
  void validate() const;

  friend bool operator==(const KnowledgeGraph&, const KnowledgeGraph&) = default;

 private:
  std::map<std::string, Concept> concepts_;
  std::vector<MultimodalTriplet> triplets_;
  std::map<SampleId, MultimodalSample> samples_;
  std::map<std::string, std::size_t, std::less<>> triplet_rows_;

  friend KnowledgeGraph graph_from_json_text(std::string_view text);
};

std::string graph_to_json_text(const KnowledgeGraph& graph);
KnowledgeGraph graph_from_json_text(std::string_view text);
void save_graph(const KnowledgeGraph& graph, const std::filesystem::path& path);
KnowledgeGraph load_graph(const std::filesystem::path& path);

struct StatsReport {
  std::size_t concepts = 0;
  std::size_t triplets = 0;
  std::size_t samples = 0;
  std::size_t descriptions = 0;
  /// grounding triplet count -> number of concepts with that count
  std::map<std::size_t, std::size_t> data_per_concept;
  /// description word count -> number of descriptions
  std::map<std::size_t, std::size_t> description_words;
  /// sample category -> number of triplets grounded in a sample of it
  std::map<std::string, std::size_t> categories;
  std::map<DescriptionSource, std::size_t> description_sources;

  friend bool operator==(const StatsReport&, const StatsReport&) = default;
};

StatsReport graph_stats(const KnowledgeGraph& graph);
std::size_t word_count(std::string_view text);

}  // namespace vatkg
