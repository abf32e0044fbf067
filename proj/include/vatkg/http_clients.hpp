#pragma once

#include <chrono>
#include <mutex>
#include <optional>
#include <string>

#include "vatkg/clients.hpp"

namespace vatkg {

struct HttpOptions {
  std::chrono::milliseconds timeout{30000};
  int retries = 3;
  std::chrono::milliseconds backoff{200};  // doubled after every failed attempt
};

/// scheme://host[:port][/prefix], split for cpp-httplib.
struct BaseUrl {
  std::string origin;  // scheme://host[:port]
  std::string prefix;  // "" or "/path" without trailing slash

  static BaseUrl parse(std::string_view url);
};

/// Encoder contract over JSON/HTTP: GET /meta, POST /embed, POST /tags.
class HttpEncoder final : public Encoder {
 public:
  explicit HttpEncoder(std::string_view base_url, HttpOptions options = {});

  EncoderMeta meta() const override;
  EmbeddingVector embed_text(std::string_view text) const override;
  EmbeddingVector embed_audio(std::string_view uri) const override;
  EmbeddingVector embed_video(std::string_view uri) const override;
  EmbeddingVector embed_image(std::string_view uri, std::uint32_t frame_index) const override;
  EmbeddingVector embed_video_conditioned(std::string_view uri,
                                          std::string_view term) const override;
  AudioTags tag_audio(std::string_view uri) const override;

 private:
  EmbeddingVector embed(EmbedKind kind, std::string_view payload,
                        std::optional<std::uint32_t> frame_index,
                        std::optional<std::string_view> term) const;

  BaseUrl base_;
  HttpOptions options_;
  mutable std::mutex meta_mutex_;
  mutable std::optional<EncoderMeta> meta_;
};

/// POST /complete {"prompt"} -> {"text"}.
class HttpLlm final : public LlmClient {
 public:
  explicit HttpLlm(std::string_view base_url, HttpOptions options = {});
  std::string complete(std::string_view prompt) const override;

 private:
  BaseUrl base_;
  HttpOptions options_;
};

/// Best-effort live lookup against the MediaWiki REST APIs: page summaries
/// for Wikipedia, definition lists for Wiktionary. 404 means "not covered".
class HttpKnowledgeBase final : public KnowledgeBase {
 public:
  HttpKnowledgeBase(std::string_view wikipedia_base, std::string_view wiktionary_base,
                    HttpOptions options = {});
  std::vector<std::string> fetch(std::string_view term, KbSource source) const override;

 private:
  BaseUrl wikipedia_;
  BaseUrl wiktionary_;
  HttpOptions options_;
};

/// Percent-encodes a page title, mapping spaces to underscores.
std::string encode_title(std::string_view title);
/// Drops HTML tags and collapses whitespace.
std::string strip_html(std::string_view html);

}  // namespace vatkg
