#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "vatkg/clients.hpp"
#include "vatkg/json.hpp"
#include "vatkg/kg.hpp"
#include "vatkg/triplet_indexes.hpp"

namespace vatkg {

enum class Stage { VoiceOver, AudioText, VideoText, Recaption, Grounding, Alignment };

inline constexpr std::array<Stage, 6> kStages = {Stage::VoiceOver, Stage::AudioText,
                                                 Stage::VideoText, Stage::Recaption,
                                                 Stage::Grounding, Stage::Alignment};

std::string_view stage_name(Stage s) noexcept;
Stage parse_stage(std::string_view name);

struct StageError {
  SampleId id;
  std::string reason;

  friend bool operator==(const StageError&, const StageError&) = default;
};

/// Invariant: kept_count + dropped_ids.size() == input_count.
struct StageReport {
  Stage stage = Stage::VoiceOver;
  std::size_t input_count = 0;
  std::size_t kept_count = 0;
  std::vector<SampleId> dropped_ids;
  /// Drops caused by a client or content failure rather than a filter rule.
  std::vector<StageError> errors;

  bool conserved() const noexcept { return kept_count + dropped_ids.size() == input_count; }

  friend bool operator==(const StageReport&, const StageReport&) = default;
};

struct PipelineConfig {
  double audio_text_min_cos = 0.2;
  double video_text_drop_fraction = 0.10;
  std::set<std::string> voice_over_labels = {"speech", "audio"};
  std::size_t max_descriptions = 5;
  std::size_t candidate_count_hint = 5;
  /// Worker threads for per-sample work; results are committed in id order.
  std::size_t threads = 1;
  /// Abort on the first per-sample failure instead of dropping the sample.
  bool strict = false;

  void validate() const;
};

enum class FilterDecision { Keep, Drop };

/// Drops iff every label appears (case-insensitively) among the 5 tags.
FilterDecision voice_over_filter(std::span<const std::string> top5_tags,
                                 const std::set<std::string>& labels);

/// Drops iff cosine(audio, text) < min_cos.
FilterDecision audio_text_filter(const EmbeddingVector& audio_emb, const EmbeddingVector& text_emb,
                                 double min_cos);

struct PercentileResult {
  std::vector<SampleId> kept;  // ascending id
  StageReport report;
};

/// Drops exactly floor(drop_fraction * n) lowest scores; among equal scores
/// the lower id goes first.
PercentileResult video_text_percentile_filter(std::vector<std::pair<SampleId, double>> scores,
                                              double drop_fraction);

/// floor(frame_count / 2).
std::uint32_t center_frame_index(std::uint32_t frame_count);

/// nullopt when title or description metadata is missing.
std::optional<std::string> recaption(const MultimodalSample& sample, const LlmClient& llm);

struct CandidateTriplet {
  std::string head;
  std::string relation;
  std::string tail;
  std::size_t ordinal = 0;

  friend bool operator==(const CandidateTriplet&, const CandidateTriplet&) = default;
};

struct ParsedCandidates {
  std::vector<CandidateTriplet> candidates;
  std::size_t skipped_lines = 0;
};

/// One triplet per line, "(h; r; t)" or "h | r | t". Fields are
/// whitespace-normalized; lines matching neither form are skipped.
ParsedCandidates parse_candidate_triplets(std::string_view llm_output);

/// Index of the largest score; ties go to the lowest index.
std::size_t argmax_first(std::span<const double> scores);

struct GroundingResult {
  std::vector<CandidateTriplet> candidates;
  std::vector<double> scores;  // inner product with the video embedding
  std::size_t selected = 0;
  EmbeddingVector sentence_embedding;
  std::size_t skipped_lines = 0;

  const CandidateTriplet& triplet() const { return candidates[selected]; }
};

GroundingResult ground_triplets(std::string_view caption, const EmbeddingVector& video_emb,
                                const LlmClient& llm, const Encoder& video_encoder,
                                std::size_t candidate_hint = 5);

/// Wikipedia, then Wiktionary, then the LLM, until `max` unique texts.
std::vector<ConceptDescription> collect_descriptions(std::string_view term,
                                                     const KnowledgeBase& kb,
                                                     const LlmClient& llm, std::size_t max = 5);

struct AlignmentResult {
  std::vector<ConceptDescription> candidates;
  std::vector<double> scores;  // inner product with the concept-conditioned video
  std::size_t selected = 0;
};

/// Picks the candidate whose text embedding best matches the video
/// conditioned on `term`.
AlignmentResult select_description(std::string_view term, std::string_view video_uri,
                                   std::vector<ConceptDescription> candidates,
                                   const Encoder& video_encoder);

AlignmentResult align_descriptions(std::string_view term, const MultimodalSample& grounding,
                                   const KnowledgeBase& kb, const Encoder& video_encoder,
                                   const LlmClient& llm, std::size_t max = 5);

std::vector<MultimodalSample> parse_manifest(std::string_view jsonl);
std::vector<MultimodalSample> load_manifest(const std::filesystem::path& path);

struct PipelineResult {
  KnowledgeGraph graph;
  TripletIndexes indexes;
  std::vector<StageReport> reports;
};

PipelineResult run_pipeline(std::vector<MultimodalSample> samples, const PipelineConfig& config,
                            const Clients& clients);
PipelineResult run_pipeline(const std::filesystem::path& manifest, const PipelineConfig& config,
                            const Clients& clients);

Json reports_to_json(std::span<const StageReport> reports);
std::vector<StageReport> reports_from_json(const Json& root);

}  // namespace vatkg
