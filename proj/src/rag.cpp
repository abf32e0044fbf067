#include "vatkg/rag.hpp"

#include <set>

#include "vatkg/error.hpp"

namespace vatkg {

namespace {

constexpr std::string_view kKnowledgePreamble =
    "Use the following concept-description pairs, retrieved from a multimodal knowledge graph,\n"
    "as background knowledge for the question about the given audio and video. Some pairs may be\n"
    "irrelevant; trust the audio and video when they disagree.\n";

constexpr std::string_view kNoKnowledgePreamble =
    "No background knowledge was retrieved for this question. Answer from the audio and video\n"
    "alone.\n";

template <typename Fn>
auto staged(std::string_view stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    throw e.annotated(std::string(stage));
  }
}

std::optional<EmbeddingVector> as_vector(const std::optional<std::vector<float>>& v) {
  if (!v) return std::nullopt;
  return EmbeddingVector(*v);
}

const Encoder& require(const std::shared_ptr<const Encoder>& e, std::string_view which) {
  if (!e) throw Error(Errc::ConfigError, "no " + std::string(which) + " encoder configured");
  return *e;
}

}  // namespace

double RagConfig::checker_threshold(Modality m) const {
  auto it = checker_min_cos_by_modality.find(m);
  return it == checker_min_cos_by_modality.end() ? checker_min_cos : it->second;
}

void RagConfig::validate() const {
  if (top_k < 1) throw Error(Errc::ConfigError, "top_k must be at least 1");
  if (l2_threshold && !(*l2_threshold >= 0.0)) {
    throw Error(Errc::ConfigError, "l2_threshold must be non-negative");
  }
  if (checker_encoder == EncoderFamily::Text) {
    throw Error(Errc::ConfigError, "checker_encoder must be audio or video");
  }
}

RagConfig rag_config_from_json(const Json& j, RagConfig base) {
  try {
    check_keys(j, {}, {"top_k", "l2_threshold", "checker_min_cos", "checker_encoder"}, "query config");
  } catch (const Error& e) {
    throw Error(Errc::ConfigError, e.message());
  }
  try {
    if (j.contains("top_k")) {
      if (!j["top_k"].is_number_unsigned()) throw Error(Errc::ConfigError, "top_k must be a positive integer");
      base.top_k = j["top_k"].get<std::size_t>();
    }
    if (j.contains("l2_threshold")) {
      if (j["l2_threshold"].is_null()) {
        base.l2_threshold.reset();
      } else {
        base.l2_threshold = j["l2_threshold"].get<double>();
      }
    }
    if (j.contains("checker_min_cos")) {
      const auto& c = j["checker_min_cos"];
      if (c.is_object()) {
        for (const auto& [m, v] : c.items()) {
          Modality mod{};
          try {
            mod = parse_modality(m);
          } catch (const Error& e) {
            throw Error(Errc::ConfigError, e.message());
          }
          base.checker_min_cos_by_modality[mod] = v.get<double>();
        }
      } else {
        base.checker_min_cos = c.get<double>();
      }
    }
    if (j.contains("checker_encoder")) {
      try {
        base.checker_encoder = parse_family(j["checker_encoder"].get<std::string>());
      } catch (const Error& e) {
        throw Error(Errc::ConfigError, e.message());
      }
    }
  } catch (const Json::exception& e) {
    throw Error(Errc::ConfigError, std::string("query config: ") + e.what());
  }
  base.validate();
  return base;
}

std::vector<RetrievalHit> retrieve(const TripletIndexes& indexes, const EmbeddingVector& query,
                                   Modality modality, const RagConfig& config) {
  if (modality == Modality::AudioVideo) {
    throw Error(Errc::UnknownModality, "audio_video queries need retrieve_joint");
  }
  return indexes.search(modality, query, config.top_k, config.l2_threshold);
}

std::vector<RetrievalHit> retrieve_joint(const TripletIndexes& indexes,
                                         const EmbeddingVector& audio_emb,
                                         const EmbeddingVector& video_emb, const RagConfig& config) {
  const auto& joint_index = indexes.get(Modality::AudioVideo);
  const auto& audio_index = indexes.get(Modality::Audio);
  if (audio_emb.dim() != audio_index.dim() || audio_emb.dim() + video_emb.dim() != joint_index.dim()) {
    throw Error(Errc::DimMismatch, "joint query of dims (" + std::to_string(audio_emb.dim()) + ", " +
                                       std::to_string(video_emb.dim()) + ") against joint index of dim " +
                                       std::to_string(joint_index.dim()));
  }
  const auto joint = joint_embedding(audio_emb, video_emb);
  return indexes.search(Modality::AudioVideo, joint.vector(), config.top_k, config.l2_threshold);
}

std::vector<RetrievalHit> check_retrieval(const EmbeddingVector& query_emb,
                                          const std::vector<RetrievalHit>& hits,
                                          const KnowledgeGraph& graph, const Encoder& text_encoder,
                                          double min_cos) {
  std::vector<RetrievalHit> kept;
  for (const auto& hit : hits) {
    const auto* t = graph.find_triplet(hit.entry_id);
    if (t == nullptr) throw Error(Errc::UnknownTriplet, hit.entry_id);
    const auto sentence = text_encoder.embed_text(triplet_to_sentence(*t));
    if (cosine(query_emb, sentence) >= min_cos) kept.push_back(hit);
  }
  return kept;
}

PromptBundle assemble_prompt(std::string_view question, const std::vector<RetrievalHit>& hits,
                             const KnowledgeGraph& graph) {
  PromptBundle bundle;
  bundle.question = std::string(question);
  auto description = [&](const std::string& surface, std::size_t idx) -> const std::string& {
    const auto* c = graph.find_concept(surface);
    if (c == nullptr || idx >= c->candidates.size()) {
      throw Error(Errc::MissingDescription, "concept '" + surface + "'");
    }
    return c->candidates[idx].text;
  };
  for (const auto& hit : hits) {
    const auto* t = graph.find_triplet(hit.entry_id);
    if (t == nullptr) throw Error(Errc::UnknownTriplet, hit.entry_id);
    bundle.pairs.push_back({t->triplet_id, t->head, description(t->head, t->head_desc_idx), t->tail,
                            description(t->tail, t->tail_desc_idx)});
  }

  std::string& out = bundle.rendered;
  if (bundle.pairs.empty()) {
    out += kNoKnowledgePreamble;
  } else {
    out += kKnowledgePreamble;
    out += "\n";
    std::set<std::pair<std::string_view, std::string_view>> written;
    auto line = [&](const std::string& surface, const std::string& desc) {
      if (!written.emplace(surface, desc).second) return;
      out += "Concept: " + surface + " - " + desc + "\n";
    };
    for (const auto& p : bundle.pairs) {
      line(p.head, p.head_description);
      line(p.tail, p.tail_description);
    }
  }
  out += "\nQuestion: " + bundle.question + "\nAnswer:";
  return bundle;
}

QueryRequest parse_query_request(const Json& j) {
  check_keys(j, {"question", "modality"},
             {"audio_emb", "video_emb", "text", "audio_uri", "video_uri", "config"}, "query request");
  QueryRequest r;
  r.question = json_string(j, "question", "query request");
  r.payload.modality = parse_modality(json_string(j, "modality", "query request"));
  try {
    if (j.contains("audio_emb")) r.payload.audio_emb = j["audio_emb"].get<std::vector<float>>();
    if (j.contains("video_emb")) r.payload.video_emb = j["video_emb"].get<std::vector<float>>();
  } catch (const Json::exception& e) {
    throw Error(Errc::SchemaError, std::string("query embedding: ") + e.what());
  }
  if (j.contains("text")) r.payload.text = json_string(j, "text", "query request");
  if (j.contains("audio_uri")) r.payload.audio_uri = json_string(j, "audio_uri", "query request");
  if (j.contains("video_uri")) r.payload.video_uri = json_string(j, "video_uri", "query request");
  if (j.contains("config")) r.config_overrides = j["config"];
  return r;
}

RagTrace RagEngine::run(std::string_view question, const QueryPayload& payload,
                        const RagConfig& config, bool dry_run) const {
  config.validate();
  const Modality m = payload.modality;

  auto encode_audio = [&] {
    if (auto v = as_vector(payload.audio_emb)) return *v;
    if (!payload.audio_uri) throw Error(Errc::InvalidArgument, "query has no audio embedding or uri");
    return require(clients.audio_encoder, "audio").embed_audio(*payload.audio_uri);
  };
  auto encode_video = [&] {
    if (auto v = as_vector(payload.video_emb)) return *v;
    if (!payload.video_uri) throw Error(Errc::InvalidArgument, "query has no video embedding or uri");
    return require(clients.video_encoder, "video").embed_video(*payload.video_uri);
  };

  // The query vector the checker compares against, and the encoder whose
  // text tower shares its space.
  struct Encoded {
    std::optional<EmbeddingVector> primary;
    std::optional<EmbeddingVector> audio;
    std::optional<EmbeddingVector> video;
  };
  const Encoded q = staged("encode", [&] {
    Encoded e;
    switch (m) {
      case Modality::Audio: e.primary = encode_audio(); break;
      case Modality::Video: e.primary = encode_video(); break;
      case Modality::Text:
        if (!payload.text) throw Error(Errc::InvalidArgument, "text query has no text");
        e.primary = require(clients.video_encoder, "video").embed_text(*payload.text);
        break;
      case Modality::AudioVideo:
        e.audio = encode_audio();
        e.video = encode_video();
        break;
    }
    return e;
  });

  RagTrace trace;
  trace.retrieved = staged("retrieve", [&] {
    return m == Modality::AudioVideo ? retrieve_joint(indexes, *q.audio, *q.video, config)
                                     : retrieve(indexes, *q.primary, m, config);
  });

  trace.checked = staged("check", [&] {
    const bool audio_side = m == Modality::Audio ||
                            (m == Modality::AudioVideo && config.checker_encoder == EncoderFamily::Audio);
    const Encoder& text_encoder =
        audio_side ? require(clients.audio_encoder, "audio") : require(clients.video_encoder, "video");
    const EmbeddingVector& query = m == Modality::AudioVideo ? (audio_side ? *q.audio : *q.video) : *q.primary;
    return check_retrieval(query, trace.retrieved, graph, text_encoder, config.checker_threshold(m));
  });

  trace.prompt = staged("assemble", [&] { return assemble_prompt(question, trace.checked, graph); });

  if (!dry_run) {
    trace.answer = staged("generate", [&] {
      if (!clients.generator) throw Error(Errc::ConfigError, "no generation client configured");
      return clients.generator->complete(trace.prompt.rendered);
    });
  }
  return trace;
}

std::string RagEngine::answer(std::string_view question, const QueryPayload& payload,
                              const RagConfig& config) const {
  return *run(question, payload, config, false).answer;
}

Json trace_to_json(const RagTrace& trace) {
  auto hits = [](const std::vector<RetrievalHit>& list) {
    Json out = Json::array();
    for (const auto& h : list) out.push_back({{"triplet_id", h.entry_id}, {"score", h.score}});
    return out;
  };
  Json pairs = Json::array();
  for (const auto& p : trace.prompt.pairs) {
    pairs.push_back({{"triplet_id", p.triplet_id},
                     {"head", p.head},
                     {"head_description", p.head_description},
                     {"tail", p.tail},
                     {"tail_description", p.tail_description}});
  }
  Json out = {{"question", trace.prompt.question},
              {"pairs", std::move(pairs)},
              {"hits", hits(trace.checked)},
              {"retrieved", hits(trace.retrieved)},
              {"prompt", trace.prompt.rendered}};
  if (trace.answer) out["answer"] = *trace.answer;
  return out;
}

}  // namespace vatkg
