#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vatkg/clients.hpp"
#include "vatkg/json.hpp"
#include "vatkg/kg.hpp"
#include "vatkg/triplet_indexes.hpp"

namespace vatkg {

struct RagConfig {
  std::size_t top_k = 5;
  /// Unset means pure top-k.
  std::optional<double> l2_threshold;
  double checker_min_cos = 0.2;
  /// Per-modality override of checker_min_cos.
  std::map<Modality, double> checker_min_cos_by_modality;
  /// Encoder family whose text tower checks AudioVideo queries.
  EncoderFamily checker_encoder = EncoderFamily::Video;

  double checker_threshold(Modality m) const;
  void validate() const;
};

/// Applies {"top_k","l2_threshold","checker_min_cos","checker_encoder"} on top of `base`.
RagConfig rag_config_from_json(const Json& j, RagConfig base = {});

struct ConceptPair {
  std::string triplet_id;
  std::string head;
  std::string head_description;
  std::string tail;
  std::string tail_description;

  friend bool operator==(const ConceptPair&, const ConceptPair&) = default;
};

struct PromptBundle {
  std::string question;
  std::vector<ConceptPair> pairs;
  std::string rendered;
};

/// Same-modality L2 search. AudioVideo queries must go through retrieve_joint.
std::vector<RetrievalHit> retrieve(const TripletIndexes& indexes, const EmbeddingVector& query,
                                   Modality modality, const RagConfig& config);

std::vector<RetrievalHit> retrieve_joint(const TripletIndexes& indexes,
                                         const EmbeddingVector& audio_emb,
                                         const EmbeddingVector& video_emb, const RagConfig& config);

/// Keeps hits whose serialized triplet, embedded by `text_encoder`, has
/// cosine >= min_cos with the query. Output preserves input order.
std::vector<RetrievalHit> check_retrieval(const EmbeddingVector& query_emb,
                                          const std::vector<RetrievalHit>& hits,
                                          const KnowledgeGraph& graph, const Encoder& text_encoder,
                                          double min_cos);

PromptBundle assemble_prompt(std::string_view question, const std::vector<RetrievalHit>& hits,
                             const KnowledgeGraph& graph);

/// Question plus whatever the caller already has for the query. Embeddings
/// take precedence; otherwise text or media uris are encoded.
struct QueryPayload {
  Modality modality = Modality::Text;
  std::optional<std::vector<float>> audio_emb;
  std::optional<std::vector<float>> video_emb;
  std::optional<std::string> text;
  std::optional<std::string> audio_uri;
  std::optional<std::string> video_uri;
};

struct QueryRequest {
  std::string question;
  QueryPayload payload;
  Json config_overrides = Json::object();
};

QueryRequest parse_query_request(const Json& j);

struct RagTrace {
  std::vector<RetrievalHit> retrieved;
  std::vector<RetrievalHit> checked;
  PromptBundle prompt;
  std::optional<std::string> answer;  // unset on dry runs
};

struct RagEngine {
  const KnowledgeGraph& graph;
  const TripletIndexes& indexes;
  const Clients& clients;

  /// encode → retrieve → check → assemble; generation is skipped when dry_run.
  RagTrace run(std::string_view question, const QueryPayload& payload, const RagConfig& config,
               bool dry_run = false) const;
  std::string answer(std::string_view question, const QueryPayload& payload,
                     const RagConfig& config) const;
};

Json trace_to_json(const RagTrace& trace);

}  // namespace vatkg
