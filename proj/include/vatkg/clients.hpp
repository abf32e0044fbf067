#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "vatkg/embed_index.hpp"

namespace vatkg {

enum class EmbedKind { Text, Audio, Video, Image, VideoConditioned };

std::string_view embed_kind_name(EmbedKind kind) noexcept;
EmbedKind parse_embed_kind(std::string_view name);

/// Which foundation model an encoder wraps. Text embeddings are only
/// comparable with media embeddings of the same family.
enum class EncoderFamily { Audio, Video, Text };

std::string_view family_name(EncoderFamily f) noexcept;
EncoderFamily parse_family(std::string_view name);

struct EncoderMeta {
  EncoderFamily family = EncoderFamily::Text;
  std::map<EmbedKind, std::size_t> dims;

  std::size_t dim(EmbedKind kind) const;
};

using AudioTags = std::array<std::string, 5>;

/// Encoder contract. Implementations must be safe for concurrent calls.
/// Endpoints a family does not serve throw Errc::Unsupported.
class Encoder {
 public:
  virtual ~Encoder() = default;

  virtual EncoderMeta meta() const = 0;
  virtual EmbeddingVector embed_text(std::string_view text) const = 0;
  virtual EmbeddingVector embed_audio(std::string_view uri) const = 0;
  virtual EmbeddingVector embed_video(std::string_view uri) const = 0;
  virtual EmbeddingVector embed_image(std::string_view uri, std::uint32_t frame_index) const = 0;
  /// Video embedding pooled with weights relevant to `term`.
  virtual EmbeddingVector embed_video_conditioned(std::string_view uri,
                                                  std::string_view term) const = 0;
  virtual AudioTags tag_audio(std::string_view uri) const = 0;
};

/// Single non-streaming completion.
class LlmClient {
 public:
  virtual ~LlmClient() = default;
  virtual std::string complete(std::string_view prompt) const = 0;
};

enum class KbSource { Wikipedia, Wiktionary };

std::string_view kb_source_name(KbSource s) noexcept;

/// Curated knowledge base lookup; returns an empty list when the concept is
/// not covered. Order is stable per (concept, source).
class KnowledgeBase {
 public:
  virtual ~KnowledgeBase() = default;
  virtual std::vector<std::string> fetch(std::string_view term, KbSource source) const = 0;
};

/// Everything the pipeline and RAG layer talk to.
struct Clients {
  std::shared_ptr<const Encoder> audio_encoder;   // audio-text family (tags too)
  std::shared_ptr<const Encoder> video_encoder;   // video-text family
  std::shared_ptr<const LlmClient> llm;           // construction-time LLM
  std::shared_ptr<const LlmClient> description_llm;  // falls back to llm when null
  std::shared_ptr<const LlmClient> generator;     // answer generation
  std::shared_ptr<const KnowledgeBase> kb;
};

}  // namespace vatkg
