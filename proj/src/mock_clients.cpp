#include "vatkg/mock_clients.hpp"

#include <cmath>
#include <fstream>

#include "vatkg/error.hpp"
#include "vatkg/hash.hpp"
#include "vatkg/json.hpp"

namespace vatkg {

namespace {

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot open '" + path.string() + "'");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw Error(Errc::SchemaError, "'" + path.string() + "': " + e.what());
  }
}

}  // namespace

std::string_view embed_kind_name(EmbedKind kind) noexcept {
  switch (kind) {
    case EmbedKind::Text: return "text";
    case EmbedKind::Audio: return "audio";
    case EmbedKind::Video: return "video";
    case EmbedKind::Image: return "image";
    case EmbedKind::VideoConditioned: return "video_conditioned";
  }
  return "?";
}

EmbedKind parse_embed_kind(std::string_view name) {
  for (auto k : {EmbedKind::Text, EmbedKind::Audio, EmbedKind::Video, EmbedKind::Image,
                 EmbedKind::VideoConditioned}) {
    if (embed_kind_name(k) == name) return k;
  }
  throw Error(Errc::SchemaError, "unknown embed kind '" + std::string(name) + "'");
}

std::string_view family_name(EncoderFamily f) noexcept {
  switch (f) {
    case EncoderFamily::Audio: return "audio";
    case EncoderFamily::Video: return "video";
    case EncoderFamily::Text: return "text";
  }
  return "?";
}

EncoderFamily parse_family(std::string_view name) {
  if (name == "audio") return EncoderFamily::Audio;
  if (name == "video") return EncoderFamily::Video;
  if (name == "text") return EncoderFamily::Text;
  throw Error(Errc::SchemaError, "unknown encoder family '" + std::string(name) + "'");
}

std::size_t EncoderMeta::dim(EmbedKind kind) const {
  auto it = dims.find(kind);
  if (it == dims.end()) {
    throw Error(Errc::Unsupported, std::string(family_name(family)) + " encoder has no " +
                                       std::string(embed_kind_name(kind)) + " endpoint");
  }
  return it->second;
}

std::string_view kb_source_name(KbSource s) noexcept {
  return s == KbSource::Wikipedia ? "wikipedia" : "wiktionary";
}

EmbeddingVector mock_embed(std::string_view kind, std::string_view payload, std::size_t dim) {
  if (dim < 2) throw Error(Errc::ZeroDim, "mock embedding dim must be at least 2");
  Fnv1a64 h;
  h.update(kind);
  h.update("\x1f");
  h.update(payload);
  SplitMix64 rng(h.digest());

  std::vector<double> raw(dim);
  double sq = 0.0;
  for (auto& x : raw) {
    const double unit = static_cast<double>(rng.next() >> 11) * 0x1.0p-53;
    x = 2.0 * unit - 1.0;
    sq += x * x;
  }
  const double norm = std::sqrt(sq);
  if (norm == 0.0) throw Error(Errc::ZeroVector, "degenerate mock embedding");
  std::vector<float> out(dim);
  for (std::size_t i = 0; i < dim; ++i) out[i] = static_cast<float>(raw[i] / norm);
  return EmbeddingVector(std::move(out));
}

std::string image_payload(std::string_view uri, std::uint32_t frame_index) {
  return std::string(uri) + "#" + std::to_string(frame_index);
}

std::string conditioned_payload(std::string_view uri, std::string_view term) {
  return std::string(uri) + "\x1f" + std::string(term);
}

// ---- MockEncoder ------------------------------------------------------------

MockEncoder::MockEncoder(EncoderFamily family, std::map<EmbedKind, std::size_t> dims)
    : family_(family), dims_(std::move(dims)) {
  for (const auto& [kind, dim] : dims_) {
    if (dim < 2) {
      throw Error(Errc::ZeroDim, std::string(embed_kind_name(kind)) + " dim must be at least 2");
    }
  }
}

void MockEncoder::pin(EmbedKind kind, std::string payload, std::vector<float> values) {
  const std::size_t dim = meta().dim(kind);
  if (values.size() != dim) {
    throw Error(Errc::DimMismatch, "pinned " + std::string(embed_kind_name(kind)) + " vector for '" +
                                       payload + "' has dim " + std::to_string(values.size()));
  }
  EmbeddingVector check(values);  // validates finiteness
  pinned_.insert_or_assign({kind, std::move(payload)}, std::move(values));
}

void MockEncoder::pin_tags(std::string uri, AudioTags tags) {
  pinned_tags_.insert_or_assign(std::move(uri), std::move(tags));
}

void MockEncoder::load_fixture(const std::filesystem::path& path) {
  const Json root = read_json_file(path);
  check_keys(root, {}, {"vectors", "tags"}, "encoder fixture");
  if (root.contains("vectors")) {
    for (const auto& jv : root["vectors"]) {
      check_keys(jv, {"kind", "payload", "values"}, {"family"}, "pinned vector");
      if (jv.contains("family") &&
          parse_family(json_string(jv, "family", "pinned vector")) != family_) {
        continue;
      }
      const auto kind = parse_embed_kind(json_string(jv, "kind", "pinned vector"));
      if (!dims_.contains(kind)) continue;
      pin(kind, json_string(jv, "payload", "pinned vector"), jv["values"].get<std::vector<float>>());
    }
  }
  if (root.contains("tags")) {
    for (const auto& [uri, jt] : root["tags"].items()) {
      const auto list = jt.get<std::vector<std::string>>();
      if (list.size() != 5) throw Error(Errc::WrongTagCount, "pinned tags for '" + uri + "'");
      pin_tags(uri, {list[0], list[1], list[2], list[3], list[4]});
    }
  }
}

EncoderMeta MockEncoder::meta() const { return {family_, dims_}; }

void MockEncoder::enter() const {
  calls_.fetch_add(1);
  if (unavailable_.load()) {
    throw Error(Errc::EncoderUnavailable,
                "mock " + std::string(family_name(family_)) + " encoder is down");
  }
}

EmbeddingVector MockEncoder::embed(EmbedKind kind, std::string_view payload) const {
  enter();
  const std::size_t dim = meta().dim(kind);
  if (auto it = pinned_.find(std::pair{kind, std::string(payload)}); it != pinned_.end()) {
    return EmbeddingVector(it->second);
  }
  return mock_embed(embed_kind_name(kind), payload, dim);
}

EmbeddingVector MockEncoder::embed_text(std::string_view text) const {
  return embed(EmbedKind::Text, text);
}
EmbeddingVector MockEncoder::embed_audio(std::string_view uri) const {
  return embed(EmbedKind::Audio, uri);
}
EmbeddingVector MockEncoder::embed_video(std::string_view uri) const {
  return embed(EmbedKind::Video, uri);
}
EmbeddingVector MockEncoder::embed_image(std::string_view uri, std::uint32_t frame_index) const {
  return embed(EmbedKind::Image, image_payload(uri, frame_index));
}
EmbeddingVector MockEncoder::embed_video_conditioned(std::string_view uri,
                                                     std::string_view term) const {
  return embed(EmbedKind::VideoConditioned, conditioned_payload(uri, term));
}

const std::vector<std::string>& MockEncoder::tag_vocabulary() {
  static const std::vector<std::string> vocab = {
      "speech", "music",  "audio",   "dog",     "bird",   "water",   "vehicle", "wind",
      "animal", "crowd",  "engine",  "rain",    "singing", "guitar", "applause", "insect"};
  return vocab;
}

AudioTags MockEncoder::tag_audio(std::string_view uri) const {
  enter();
  if (family_ != EncoderFamily::Audio) {
    throw Error(Errc::Unsupported, std::string(family_name(family_)) + " encoder cannot tag audio");
  }
  if (auto it = pinned_tags_.find(uri); it != pinned_tags_.end()) return it->second;

  auto pool = tag_vocabulary();
  SplitMix64 rng(fnv1a64("tags\x1f" + std::string(uri)));
  AudioTags out;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.next() % (pool.size() - i));
    std::swap(pool[i], pool[j]);
    out[i] = pool[i];
  }
  return out;
}

// ---- MockLlm ------------------------------------------------------------------

MockLlm::MockLlm(std::vector<Rule> script) : rules_(std::move(script)) {
  if (rules_.empty()) throw Error(Errc::InvalidArgument, "mock LLM script is empty");
  compiled_.reserve(rules_.size());
  for (const auto& r : rules_) {
    try {
      compiled_.emplace_back(r.pattern, std::regex::ECMAScript);
    } catch (const std::regex_error& e) {
      throw Error(Errc::InvalidArgument, "bad mock LLM pattern '" + r.pattern + "': " + e.what());
    }
  }
}

std::vector<MockLlm::Rule> MockLlm::load_script(const std::filesystem::path& path) {
  const Json root = read_json_file(path);
  if (!root.is_array()) throw Error(Errc::SchemaError, "mock LLM script must be an array");
  std::vector<Rule> rules;
  for (const auto& jr : root) {
    check_keys(jr, {"pattern", "response"}, {}, "mock LLM rule");
    rules.push_back({json_string(jr, "pattern", "rule"), json_string(jr, "response", "rule")});
  }
  return rules;
}

std::vector<MockLlm::Rule> MockLlm::echo_script() { return {{"^[\\s\\S]*$", "$&"}}; }

std::string MockLlm::complete(std::string_view prompt) const {
  {
    std::lock_guard lock(log_mutex_);
    log_.emplace_back(prompt);
  }
  if (unavailable_.load()) throw Error(Errc::LlmUnavailable, "mock LLM is down");
  const std::string text(prompt);
  std::smatch match;
  for (std::size_t i = 0; i < rules_.size(); ++i) {
    if (std::regex_search(text, match, compiled_[i])) return match.format(rules_[i].response);
  }
  const auto head = text.substr(0, 80);
  throw Error(Errc::UnscriptedPrompt, "no rule matches prompt starting \"" + head + "\"");
}

std::vector<std::string> MockLlm::prompts() const {
  std::lock_guard lock(log_mutex_);
  return log_;
}

std::size_t MockLlm::call_count() const {
  std::lock_guard lock(log_mutex_);
  return log_.size();
}

// ---- FixtureKnowledgeBase ----------------------------------------------------

FixtureKnowledgeBase::FixtureKnowledgeBase(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw Error(Errc::IoError, "knowledge-base fixture dir '" + dir.string() + "' not found");
  }
  for (auto source : {KbSource::Wikipedia, KbSource::Wiktionary}) {
    const auto file = dir / (std::string(kb_source_name(source)) + ".json");
    if (!std::filesystem::exists(file)) continue;
    const Json root = read_json_file(file);
    if (!root.is_object()) throw Error(Errc::SchemaError, "'" + file.string() + "' must be an object");
    for (const auto& [term, list] : root.items()) {
      add(source, term, list.get<std::vector<std::string>>());
    }
  }
}

void FixtureKnowledgeBase::add(KbSource source, std::string term,
                               std::vector<std::string> descriptions) {
  entries_[source].insert_or_assign(std::move(term), std::move(descriptions));
}

std::vector<std::string> FixtureKnowledgeBase::fetch(std::string_view term,
                                                     KbSource source) const {
  calls_[static_cast<std::size_t>(source)].fetch_add(1);
  auto src = entries_.find(source);
  if (src == entries_.end()) return {};
  auto it = src->second.find(term);
  return it == src->second.end() ? std::vector<std::string>{} : it->second;
}

std::size_t FixtureKnowledgeBase::call_count(KbSource source) const {
  return calls_[static_cast<std::size_t>(source)].load();
}

}  // namespace vatkg
