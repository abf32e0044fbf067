#include "vatkg/http_clients.hpp"

#include <cctype>
#include <thread>

#include <httplib.h>

#include "vatkg/error.hpp"
#include "vatkg/json.hpp"
#include "vatkg/kg.hpp"

namespace vatkg {

namespace {

struct Response {
  int status = 0;
  std::string body;
};

/// One logical request with retry on transport failure and 5xx.
/// 404 is returned to the caller when `allow_not_found` is set.
Response send(const BaseUrl& base, const HttpOptions& options, const std::string& method,
              const std::string& path, const std::string& body, bool allow_not_found = false) {
  const std::string endpoint = method + " " + path;
  const std::string target = base.prefix + path;
  auto delay = options.backoff;
  std::string last_failure;
  int last_status = 0;

  for (int attempt = 0; attempt <= options.retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(delay);
      delay *= 2;
    }
    httplib::Client client(base.origin);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(options.timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(options.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());
    client.set_follow_location(true);

    httplib::Result res = method == "GET"
                              ? client.Get(target)
                              : client.Post(target, body, "application/json");
    if (!res) {
      last_status = 0;
      last_failure = httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 500) {
      last_status = res->status;
      last_failure = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status == 404 && allow_not_found) return {404, {}};
    if (res->status < 200 || res->status >= 300) {
      throw Error(Errc::BadStatus, "HTTP " + std::to_string(res->status)).annotated(endpoint);
    }
    return {res->status, res->body};
  }
  if (last_status == 0) throw Error(Errc::Unreachable, last_failure).annotated(endpoint);
  throw Error(Errc::BadStatus, last_failure + " after retries").annotated(endpoint);
}

Json parse_body(const std::string& body, const std::string& endpoint) {
  try {
    return Json::parse(body);
  } catch (const Json::parse_error& e) {
    throw Error(Errc::SchemaError, std::string("malformed JSON: ") + e.what()).annotated(endpoint);
  }
}

}  // namespace

BaseUrl BaseUrl::parse(std::string_view url) {
  const auto bad = [&](const char* why) {
    return Error(Errc::InvalidArgument, "base url '" + std::string(url) + "' " + why);
  };
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string_view::npos) throw bad("has no scheme");
  const auto scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") throw bad("must use http or https");
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
  if (scheme == "https") throw bad("needs TLS support, which this build lacks");
#endif
  const auto rest = url.substr(scheme_end + 3);
  const auto slash = rest.find('/');
  const auto host = rest.substr(0, slash);
  if (host.empty() || host.front() == ':') throw bad("has no host");
  BaseUrl out;
  out.origin = std::string(scheme) + "://" + std::string(host);
  if (slash != std::string_view::npos) {
    out.prefix = std::string(rest.substr(slash));
    while (!out.prefix.empty() && out.prefix.back() == '/') out.prefix.pop_back();
  }
  return out;
}

// ---- HttpEncoder -------------------------------------------------------------

HttpEncoder::HttpEncoder(std::string_view base_url, HttpOptions options)
    : base_(BaseUrl::parse(base_url)), options_(options) {}

EncoderMeta HttpEncoder::meta() const {
  std::lock_guard lock(meta_mutex_);
  if (meta_) return *meta_;
  {
    const std::string endpoint = "GET /meta";
    const auto res = send(base_, options_, "GET", "/meta", {});
    const Json j = parse_body(res.body, endpoint);
    try {
      check_keys(j, {"dims", "family"}, {}, "meta response");
      if (!j["dims"].is_object()) throw Error(Errc::SchemaError, "dims must be an object");
      EncoderMeta m;
      m.family = parse_family(json_string(j, "family", "meta response"));
      for (const auto& [kind, dim] : j["dims"].items()) {
        if (!dim.is_number_unsigned() || dim.get<std::size_t>() == 0) {
          throw Error(Errc::SchemaError, "dim for '" + kind + "' must be a positive integer");
        }
        m.dims.emplace(parse_embed_kind(kind), dim.get<std::size_t>());
      }
      meta_ = std::move(m);
    } catch (const Error& e) {
      throw e.annotated(endpoint);
    }
  }
  return *meta_;
}

EmbeddingVector HttpEncoder::embed(EmbedKind kind, std::string_view payload,
                                   std::optional<std::uint32_t> frame_index,
                                   std::optional<std::string_view> term) const {
  const std::string endpoint = "POST /embed";
  const std::size_t expected = meta().dim(kind);
  Json req = {{"kind", std::string(embed_kind_name(kind))}, {"payload", std::string(payload)}};
  if (frame_index) req["frame_index"] = *frame_index;
  if (term) req["concept"] = std::string(*term);
  const auto res = send(base_, options_, "POST", "/embed", req.dump());
  const Json j = parse_body(res.body, endpoint);
  try {
    check_keys(j, {"dim", "values"}, {}, "embed response");
    if (!j["values"].is_array() || !j["dim"].is_number_unsigned()) {
      throw Error(Errc::SchemaError, "embed response has wrong field types");
    }
    std::vector<float> values;
    values.reserve(j["values"].size());
    for (const auto& v : j["values"]) {
      if (!v.is_number()) throw Error(Errc::SchemaError, "embedding component is not a number");
      values.push_back(v.get<float>());
    }
    if (values.size() != j["dim"].get<std::size_t>() || values.size() != expected) {
      throw Error(Errc::SchemaError, "embedding dim " + std::to_string(values.size()) +
                                         " disagrees with advertised " + std::to_string(expected));
    }
    return EmbeddingVector(std::move(values));
  } catch (const Error& e) {
    throw e.annotated(endpoint);
  }
}

EmbeddingVector HttpEncoder::embed_text(std::string_view text) const {
  return embed(EmbedKind::Text, text, std::nullopt, std::nullopt);
}
EmbeddingVector HttpEncoder::embed_audio(std::string_view uri) const {
  return embed(EmbedKind::Audio, uri, std::nullopt, std::nullopt);
}
EmbeddingVector HttpEncoder::embed_video(std::string_view uri) const {
  return embed(EmbedKind::Video, uri, std::nullopt, std::nullopt);
}
EmbeddingVector HttpEncoder::embed_image(std::string_view uri, std::uint32_t frame_index) const {
  return embed(EmbedKind::Image, uri, frame_index, std::nullopt);
}
EmbeddingVector HttpEncoder::embed_video_conditioned(std::string_view uri,
                                                     std::string_view term) const {
  return embed(EmbedKind::VideoConditioned, uri, std::nullopt, term);
}

AudioTags HttpEncoder::tag_audio(std::string_view uri) const {
  const std::string endpoint = "POST /tags";
  const Json req = {{"uri", std::string(uri)}};
  const auto res = send(base_, options_, "POST", "/tags", req.dump());
  const Json j = parse_body(res.body, endpoint);
  try {
    check_keys(j, {"tags"}, {}, "tags response");
    const auto& tags = j["tags"];
    if (!tags.is_array() || tags.size() != 5) {
      throw Error(Errc::SchemaError, "tags response must hold exactly 5 tags");
    }
    AudioTags out;
    for (std::size_t i = 0; i < 5; ++i) {
      if (!tags[i].is_string()) throw Error(Errc::SchemaError, "tag is not a string");
      out[i] = tags[i].get<std::string>();
    }
    return out;
  } catch (const Error& e) {
    throw e.annotated(endpoint);
  }
}

// ---- HttpLlm -----------------------------------------------------------------

HttpLlm::HttpLlm(std::string_view base_url, HttpOptions options)
    : base_(BaseUrl::parse(base_url)), options_(options) {}

std::string HttpLlm::complete(std::string_view prompt) const {
  const std::string endpoint = "POST /complete";
  const Json req = {{"prompt", std::string(prompt)}};
  const auto res = send(base_, options_, "POST", "/complete", req.dump());
  const Json j = parse_body(res.body, endpoint);
  try {
    check_keys(j, {"text"}, {}, "complete response");
    return json_string(j, "text", "complete response");
  } catch (const Error& e) {
    throw e.annotated(endpoint);
  }
}

// ---- HttpKnowledgeBase ---------------------------------------------------------

std::string encode_title(std::string_view title) {
  static constexpr char kHex[] = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : normalize_surface(title)) {
    if (c == ' ') {
      out.push_back('_');
    } else if (std::isalnum(c) || c == '-' || c == '.' || c == '_' || c == '~') {
      out.push_back(static_cast<char>(c));
    } else {
      out.push_back('%');
      out.push_back(kHex[c >> 4]);
      out.push_back(kHex[c & 0xF]);
    }
  }
  return out;
}

std::string strip_html(std::string_view html) {
  std::string text;
  bool in_tag = false;
  for (char c : html) {
    if (c == '<') {
      in_tag = true;
    } else if (c == '>') {
      in_tag = false;
      text.push_back(' ');
    } else if (!in_tag) {
      text.push_back(c);
    }
  }
  return normalize_surface(text);
}

HttpKnowledgeBase::HttpKnowledgeBase(std::string_view wikipedia_base,
                                     std::string_view wiktionary_base, HttpOptions options)
    : wikipedia_(BaseUrl::parse(wikipedia_base)),
      wiktionary_(BaseUrl::parse(wiktionary_base)),
      options_(options) {}

std::vector<std::string> HttpKnowledgeBase::fetch(std::string_view term, KbSource source) const {
  std::vector<std::string> out;
  if (source == KbSource::Wikipedia) {
    const std::string path = "/page/summary/" + encode_title(term);
    const auto res = send(wikipedia_, options_, "GET", path, {}, true);
    if (res.status == 404) return out;
    const Json j = parse_body(res.body, "GET " + path);
    if (j.contains("type") && j["type"] == "disambiguation") return out;
    if (j.contains("extract") && j["extract"].is_string()) {
      auto text = normalize_surface(j["extract"].get<std::string>());
      if (!text.empty()) out.push_back(std::move(text));
    }
    return out;
  }

  const std::string path = "/page/definition/" + encode_title(term);
  const auto res = send(wiktionary_, options_, "GET", path, {}, true);
  if (res.status == 404) return out;
  const Json j = parse_body(res.body, "GET " + path);
  if (!j.contains("en") || !j["en"].is_array()) return out;
  for (const auto& usage : j["en"]) {
    if (!usage.contains("definitions") || !usage["definitions"].is_array()) continue;
    for (const auto& d : usage["definitions"]) {
      if (!d.contains("definition") || !d["definition"].is_string()) continue;
      auto text = strip_html(d["definition"].get<std::string>());
      if (!text.empty()) out.push_back(std::move(text));
    }
  }
  return out;
}

}  // namespace vatkg
