#pragma once

#include <atomic>
#include <filesystem>
#include <map>
#include <mutex>
#include <regex>
#include <string>
#include <utility>
#include <vector>

#include "vatkg/clients.hpp"

namespace vatkg {

/// Deterministic unit vector derived from (kind, payload). Seeded with
/// FNV-1a-64 over "{kind}\x1f{payload}", expanded with splitmix64; each word
/// maps to [-1, 1) before normalization in double precision.
EmbeddingVector mock_embed(std::string_view kind, std::string_view payload, std::size_t dim);

/// Payload strings the mock encoder hashes for the composite endpoints.
std::string image_payload(std::string_view uri, std::uint32_t frame_index);
std::string conditioned_payload(std::string_view uri, std::string_view term);

/// Hash-backed encoder. Vectors and tag lists can be pinned per
/// (kind, payload) to script fixtures; everything else falls back to
/// mock_embed.
class MockEncoder final : public Encoder {
 public:
  MockEncoder(EncoderFamily family, std::map<EmbedKind, std::size_t> dims);

  void pin(EmbedKind kind, std::string payload, std::vector<float> values);
  void pin_tags(std::string uri, AudioTags tags);
  /// Loads {"vectors":[{"kind","payload","values"}], "tags":{"uri":[5]}}.
  void load_fixture(const std::filesystem::path& path);
  void set_unavailable(bool down) { unavailable_ = down; }
  std::uint64_t calls() const noexcept { return calls_.load(); }

  EncoderMeta meta() const override;
  EmbeddingVector embed_text(std::string_view text) const override;
  EmbeddingVector embed_audio(std::string_view uri) const override;
  EmbeddingVector embed_video(std::string_view uri) const override;
  EmbeddingVector embed_image(std::string_view uri, std::uint32_t frame_index) const override;
  EmbeddingVector embed_video_conditioned(std::string_view uri,
                                          std::string_view term) const override;
  AudioTags tag_audio(std::string_view uri) const override;

  /// The tag vocabulary used for unpinned uris.
  static const std::vector<std::string>& tag_vocabulary();

 private:
  EmbeddingVector embed(EmbedKind kind, std::string_view payload) const;
  void enter() const;

  EncoderFamily family_;
  std::map<EmbedKind, std::size_t> dims_;
  std::map<std::pair<EmbedKind, std::string>, std::vector<float>, std::less<>> pinned_;
  std::map<std::string, AudioTags, std::less<>> pinned_tags_;
  std::atomic<bool> unavailable_ = false;
  mutable std::atomic<std::uint64_t> calls_ = 0;
};

/// Regex-scripted LLM. The first rule whose pattern is found in the prompt
/// wins; its response is expanded with std::match_results::format, so "$1"
/// and "$&" refer to capture groups of that match.
class MockLlm final : public LlmClient {
 public:
  struct Rule {
    std::string pattern;
    std::string response;
  };

  explicit MockLlm(std::vector<Rule> script);
  /// Reads [{"pattern","response"}...].
  static std::vector<Rule> load_script(const std::filesystem::path& path);
  /// A script that returns the prompt verbatim.
  static std::vector<Rule> echo_script();

  void set_unavailable(bool down) { unavailable_ = down; }
  std::string complete(std::string_view prompt) const override;

  std::vector<std::string> prompts() const;
  std::size_t call_count() const;

 private:
  std::vector<Rule> rules_;
  std::vector<std::regex> compiled_;
  std::atomic<bool> unavailable_ = false;
  mutable std::mutex log_mutex_;
  mutable std::vector<std::string> log_;
};

/// In-memory knowledge base; also backs the fixture-directory mode.
class FixtureKnowledgeBase final : public KnowledgeBase {
 public:
  FixtureKnowledgeBase() = default;
  /// Reads wikipedia.json and wiktionary.json ({"concept":[...]}) when present.
  explicit FixtureKnowledgeBase(const std::filesystem::path& dir);

  void add(KbSource source, std::string term, std::vector<std::string> descriptions);
  std::vector<std::string> fetch(std::string_view term, KbSource source) const override;
  std::size_t call_count(KbSource source) const;

 private:
  std::map<KbSource, std::map<std::string, std::vector<std::string>, std::less<>>> entries_;
  mutable std::array<std::atomic<std::size_t>, 2> calls_{};
};

}  // namespace vatkg
