#include "vatkg/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>

#include "parallel.hpp"
#include "vatkg/error.hpp"
#include "vatkg/prompts.hpp"

namespace vatkg {

namespace {

std::string lowercase(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

/// Strips "-", "*", "1.", "2)" style list markers.
std::string_view strip_list_marker(std::string_view line) {
  line = trim(line);
  if (!line.empty() && (line.front() == '-' || line.front() == '*')) return trim(line.substr(1));
  std::size_t digits = 0;
  while (digits < line.size() && std::isdigit(static_cast<unsigned char>(line[digits]))) ++digits;
  if (digits > 0 && digits < line.size() && (line[digits] == '.' || line[digits] == ')')) {
    return trim(line.substr(digits + 1));
  }
  return line;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == sep) {
      parts.push_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  return parts;
}

std::vector<std::string_view> lines_of(std::string_view text) { return split(text, '\n'); }

/// Errors that cost one sample rather than the whole run.
bool is_sample_local(Errc code) {
  return is_unavailable(code) || code == Errc::SchemaError || code == Errc::EmptyCompletion ||
         code == Errc::NoCandidatesParsed || code == Errc::AllSourcesFailed;
}

template <typename T>
struct Outcome {
  std::optional<T> value;
  std::optional<Error> error;
};

/// Runs fn on every listed row; sample-local errors are captured per row.
template <typename T, typename Fn>
std::vector<Outcome<T>> map_rows(const std::vector<std::size_t>& rows, std::size_t threads, Fn fn) {
  std::vector<Outcome<T>> out(rows.size());
  detail::parallel_for(rows.size(), threads, [&](std::size_t i) {
    try {
      out[i].value.emplace(fn(rows[i]));
    } catch (const Error& e) {
      if (!is_sample_local(e.code())) throw;
      out[i].error.emplace(e);
    }
  });
  return out;
}

}  // namespace

std::string_view stage_name(Stage s) noexcept {
  switch (s) {
    case Stage::VoiceOver: return "VoiceOver";
    case Stage::AudioText: return "AudioText";
    case Stage::VideoText: return "VideoText";
    case Stage::Recaption: return "Recaption";
    case Stage::Grounding: return "Grounding";
    case Stage::Alignment: return "Alignment";
  }
  return "?";
}

Stage parse_stage(std::string_view name) {
  for (auto s : kStages) {
    if (stage_name(s) == name) return s;
  }
  throw Error(Errc::SchemaError, "unknown stage '" + std::string(name) + "'");
}

void PipelineConfig::validate() const {
  auto bad = [](const std::string& what) { throw Error(Errc::ConfigError, what); };
  if (!(audio_text_min_cos > 0.0 && audio_text_min_cos < 1.0)) {
    bad("audio_text_min_cos must lie in (0, 1)");
  }
  if (!(video_text_drop_fraction >= 0.0 && video_text_drop_fraction < 1.0)) {
    bad("video_text_drop_fraction must lie in [0, 1)");
  }
  if (max_descriptions < 1 || max_descriptions > kMaxCandidates) {
    bad("max_descriptions must lie in [1, " + std::to_string(kMaxCandidates) + "]");
  }
  if (candidate_count_hint < 1) bad("candidate_count_hint must be at least 1");
  if (threads < 1) bad("threads must be at least 1");
}

// ---- Stage 1 -----------------------------------------------------------------

FilterDecision voice_over_filter(std::span<const std::string> top5_tags,
                                 const std::set<std::string>& labels) {
  if (top5_tags.size() != 5) {
    throw Error(Errc::WrongTagCount, "expected 5 tags, got " + std::to_string(top5_tags.size()));
  }
  std::set<std::string> present;
  for (const auto& t : top5_tags) present.insert(lowercase(trim(t)));
  for (const auto& label : labels) {
    if (!present.contains(lowercase(trim(label)))) return FilterDecision::Keep;
  }
  return FilterDecision::Drop;
}

FilterDecision audio_text_filter(const EmbeddingVector& audio_emb, const EmbeddingVector& text_emb,
                                 double min_cos) {
  return cosine(audio_emb, text_emb) < min_cos ? FilterDecision::Drop : FilterDecision::Keep;
}

PercentileResult video_text_percentile_filter(std::vector<std::pair<SampleId, double>> scores,
                                              double drop_fraction) {
  if (!(drop_fraction >= 0.0 && drop_fraction < 1.0)) {
    throw Error(Errc::InvalidArgument, "drop fraction must lie in [0, 1)");
  }
  for (const auto& [id, score] : scores) {
    if (!std::isfinite(score)) throw Error(Errc::NonFinite, "score of '" + id.str() + "'");
  }
  const std::size_t n = scores.size();
  const auto drop = static_cast<std::size_t>(std::floor(drop_fraction * static_cast<double>(n)));

  std::sort(scores.begin(), scores.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second < b.second : a.first < b.first;
  });

  PercentileResult r;
  r.report.stage = Stage::VideoText;
  r.report.input_count = n;
  for (std::size_t i = 0; i < n; ++i) {
    (i < drop ? r.report.dropped_ids : r.kept).push_back(scores[i].first);
  }
  std::sort(r.kept.begin(), r.kept.end());
  std::sort(r.report.dropped_ids.begin(), r.report.dropped_ids.end());
  r.report.kept_count = r.kept.size();
  return r;
}

std::uint32_t center_frame_index(std::uint32_t frame_count) {
  if (frame_count == 0) throw Error(Errc::ZeroFrames, "video has no frames");
  return frame_count / 2;
}

// ---- Stage 2 -----------------------------------------------------------------

std::optional<std::string> recaption(const MultimodalSample& sample, const LlmClient& llm) {
  if (!sample.has_metadata()) return std::nullopt;
  const auto prompt = prompts::recaption(sample.caption, *sample.title, *sample.description_meta);
  auto text = normalize_surface(llm.complete(prompt));
  if (text.empty()) throw Error(Errc::EmptyCompletion, "recaption of '" + sample.id.str() + "'");
  return text;
}

// ---- Stage 3 -----------------------------------------------------------------

ParsedCandidates parse_candidate_triplets(std::string_view llm_output) {
  ParsedCandidates out;
  for (auto raw : lines_of(llm_output)) {
    auto line = strip_list_marker(raw);
    if (line.empty()) continue;

    std::vector<std::string_view> parts;
    if (line.front() == '(') {
      auto close = line.rfind(')');
      const auto rest = close == std::string_view::npos ? line : trim(line.substr(close + 1));
      if (close != std::string_view::npos && (rest.empty() || rest == "." || rest == ",")) {
        parts = split(line.substr(1, close - 1), ';');
      }
    } else if (line.find('|') != std::string_view::npos) {
      parts = split(line, '|');
    }

    if (parts.size() == 3) {
      CandidateTriplet c{normalize_surface(parts[0]), normalize_surface(parts[1]),
                         normalize_surface(parts[2]), out.candidates.size()};
      if (!c.head.empty() && !c.relation.empty() && !c.tail.empty()) {
        out.candidates.push_back(std::move(c));
        continue;
      }
    }
    ++out.skipped_lines;
  }
  return out;
}

std::size_t argmax_first(std::span<const double> scores) {
  if (scores.empty()) throw Error(Errc::InvalidArgument, "argmax of an empty list");
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  return best;
}

GroundingResult ground_triplets(std::string_view caption, const EmbeddingVector& video_emb,
                                const LlmClient& llm, const Encoder& video_encoder,
                                std::size_t candidate_hint) {
  if (trim(caption).empty()) throw Error(Errc::InvalidArgument, "caption is empty");
  auto parsed = parse_candidate_triplets(llm.complete(prompts::triplet_grounding(caption, candidate_hint)));
  if (parsed.candidates.empty()) {
    throw Error(Errc::NoCandidatesParsed,
                std::to_string(parsed.skipped_lines) + " unparseable lines");
  }

  std::vector<EmbeddingVector> sentence_embs;
  std::vector<double> scores;
  for (const auto& c : parsed.candidates) {
    sentence_embs.push_back(video_encoder.embed_text(triplet_to_sentence(c.head, c.relation, c.tail)));
    scores.push_back(dot(sentence_embs.back(), video_emb));
  }
  const std::size_t best = argmax_first(scores);
  return GroundingResult{std::move(parsed.candidates), std::move(scores), best,
                         std::move(sentence_embs[best]), parsed.skipped_lines};
}

// ---- Stage 4 -----------------------------------------------------------------

std::vector<ConceptDescription> collect_descriptions(std::string_view term,
                                                     const KnowledgeBase& kb,
                                                     const LlmClient& llm, std::size_t max) {
  const std::string surface = normalize_surface(term);
  if (surface.empty()) throw Error(Errc::InvalidArgument, "concept is empty");
  max = std::min(max, kMaxCandidates);

  std::vector<ConceptDescription> out;
  auto take = [&](std::string_view text, DescriptionSource source) {
    auto clean = normalize_surface(text);
    if (clean.empty() || out.size() >= max) return;
    const bool dup = std::any_of(out.begin(), out.end(),
                                 [&](const ConceptDescription& d) { return d.text == clean; });
    if (!dup) out.push_back({std::move(clean), source});
  };

  std::string failures;
  for (auto [source, tag] : {std::pair{KbSource::Wikipedia, DescriptionSource::Wikipedia},
                             std::pair{KbSource::Wiktionary, DescriptionSource::Wiktionary}}) {
    if (out.size() >= max) break;
    try {
      for (const auto& text : kb.fetch(surface, source)) take(text, tag);
    } catch (const Error& e) {
      // Curated sources are best-effort; the LLM covers the gap.
      if (!is_sample_local(e.code())) throw;
      failures += std::string(kb_source_name(source)) + ": " + e.what() + "; ";
    }
  }

  if (out.size() < max) {
    try {
      const auto reply = llm.complete(prompts::description_crawl(surface, max - out.size()));
      for (auto line : lines_of(reply)) take(strip_list_marker(line), DescriptionSource::Llm);
    } catch (const Error& e) {
      if (!is_sample_local(e.code())) throw;
      failures += std::string("llm: ") + e.what();
    }
  }
  if (out.empty()) {
    throw Error(Errc::AllSourcesFailed, "no description for '" + surface + "'" +
                                            (failures.empty() ? "" : " (" + failures + ")"));
  }
  return out;
}

AlignmentResult select_description(std::string_view term, std::string_view video_uri,
                                   std::vector<ConceptDescription> candidates,
                                   const Encoder& video_encoder) {
  if (candidates.empty()) throw Error(Errc::EmptyCandidateList, std::string(term));
  const auto conditioned = video_encoder.embed_video_conditioned(video_uri, normalize_surface(term));
  AlignmentResult r;
  r.scores.reserve(candidates.size());
  for (const auto& c : candidates) {
    r.scores.push_back(dot(conditioned, video_encoder.embed_text(c.text)));
  }
  r.selected = argmax_first(r.scores);
  r.candidates = std::move(candidates);
  return r;
}

AlignmentResult align_descriptions(std::string_view term, const MultimodalSample& grounding,
                                   const KnowledgeBase& kb, const Encoder& video_encoder,
                                   const LlmClient& llm, std::size_t max) {
  return select_description(term, grounding.video_uri, collect_descriptions(term, kb, llm, max),
                            video_encoder);
}

// ---- manifest ----------------------------------------------------------------

std::vector<MultimodalSample> parse_manifest(std::string_view jsonl) {
  std::vector<MultimodalSample> out;
  std::set<SampleId> seen;
  std::size_t line_no = 0;
  for (auto raw : lines_of(jsonl)) {
    ++line_no;
    const auto line = trim(raw);
    if (line.empty()) continue;
    const std::string where = "manifest line " + std::to_string(line_no);
    try {
      const Json j = Json::parse(line);
      check_keys(j, {"id", "video_uri", "audio_uri", "caption"},
                 {"title", "description", "frame_count", "category"}, where);
      MultimodalSample s;
      const auto id = json_string(j, "id", where);
      if (id.empty()) throw Error(Errc::SchemaError, where + ": empty id");
      s.id = SampleId(id);
      s.video_uri = json_string(j, "video_uri", where);
      s.audio_uri = json_string(j, "audio_uri", where);
      s.caption = json_string(j, "caption", where);
      if (trim(s.caption).empty()) throw Error(Errc::SchemaError, where + ": empty caption");
      if (j.contains("title")) s.title = json_string(j, "title", where);
      if (j.contains("description")) s.description_meta = json_string(j, "description", where);
      if (j.contains("category")) s.category = json_string(j, "category", where);
      if (j.contains("frame_count")) {
        const auto& fc = j["frame_count"];
        if (!fc.is_number_unsigned() || fc.get<std::uint64_t>() == 0 ||
            fc.get<std::uint64_t>() > UINT32_MAX) {
          throw Error(Errc::SchemaError, where + ": frame_count must be a positive integer");
        }
        s.frame_count = fc.get<std::uint32_t>();
      }
      if (!seen.insert(s.id).second) throw Error(Errc::SchemaError, where + ": duplicate id " + id);
      out.push_back(std::move(s));
    } catch (const Json::exception& e) {
      throw Error(Errc::ManifestParseError, where + ": " + e.what());
    } catch (const Error& e) {
      throw Error(Errc::ManifestParseError, e.what());
    }
  }
  return out;
}

std::vector<MultimodalSample> load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::ManifestParseError, "cannot open manifest '" + path.string() + "'");
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_manifest(text);
}

// ---- orchestration -------------------------------------------------------------

namespace {

struct SampleState {
  MultimodalSample sample;
  std::optional<EmbeddingVector> audio_emb{};
  std::optional<EmbeddingVector> video_emb{};
  std::optional<GroundingResult> grounding{};
  std::size_t head_desc = 0;
  std::size_t tail_desc = 0;
};

class Run {
 public:
  Run(std::vector<MultimodalSample> samples, const PipelineConfig& config, const Clients& clients)
      : config_(config), clients_(clients) {
    std::sort(samples.begin(), samples.end(),
              [](const auto& a, const auto& b) { return a.id < b.id; });
    for (auto& s : samples) state_.push_back({std::move(s)});
    for (std::size_t i = 0; i < state_.size(); ++i) alive_.push_back(i);
  }

  PipelineResult execute() {
    voice_over();
    audio_text();
    video_text();
    recaption_stage();
    grounding();
    alignment();
    return commit();
  }

 private:
  const SampleId& id_of(std::size_t row) const { return state_[row].sample.id; }

  /// Folds per-row outcomes into a report; `keep(row, value)` decides rule drops.
  template <typename T, typename Keep>
  void settle(Stage stage, std::vector<Outcome<T>>& outcomes, Keep keep) {
    StageReport report{stage, alive_.size(), 0, {}, {}};
    std::vector<std::size_t> survivors;
    for (std::size_t i = 0; i < alive_.size(); ++i) {
      const std::size_t row = alive_[i];
      auto& o = outcomes[i];
      if (o.error) {
        if (config_.strict) {
          throw o.error->annotated("sample " + id_of(row).str()).annotated(std::string(stage_name(stage)));
        }
        report.dropped_ids.push_back(id_of(row));
        report.errors.push_back({id_of(row), o.error->what()});
      } else if (keep(row, *o.value)) {
        survivors.push_back(row);
      } else {
        report.dropped_ids.push_back(id_of(row));
      }
    }
    report.kept_count = survivors.size();
    alive_ = std::move(survivors);
    reports_.push_back(std::move(report));
  }

  void voice_over() {
    auto outcomes = map_rows<FilterDecision>(alive_, config_.threads, [&](std::size_t row) {
      const auto tags = clients_.audio_encoder->tag_audio(state_[row].sample.audio_uri);
      return voice_over_filter(tags, config_.voice_over_labels);
    });
    settle(Stage::VoiceOver, outcomes,
           [](std::size_t, FilterDecision d) { return d == FilterDecision::Keep; });
  }

  void audio_text() {
    auto outcomes = map_rows<FilterDecision>(alive_, config_.threads, [&](std::size_t row) {
      auto& s = state_[row];
      auto audio = clients_.audio_encoder->embed_audio(s.sample.audio_uri);
      const auto text = clients_.audio_encoder->embed_text(s.sample.caption);
      const auto decision = audio_text_filter(audio, text, config_.audio_text_min_cos);
      s.audio_emb.emplace(std::move(audio));
      return decision;
    });
    settle(Stage::AudioText, outcomes,
           [](std::size_t, FilterDecision d) { return d == FilterDecision::Keep; });
  }

  void video_text() {
    auto outcomes = map_rows<double>(alive_, config_.threads, [&](std::size_t row) {
      auto& s = state_[row];
      auto video = clients_.video_encoder->embed_video(s.sample.video_uri);
      const auto text = clients_.video_encoder->embed_text(s.sample.caption);
      const double score = cosine(video, text);
      s.video_emb.emplace(std::move(video));
      return score;
    });

    std::vector<std::pair<SampleId, double>> scores;
    for (std::size_t i = 0; i < alive_.size(); ++i) {
      if (outcomes[i].value) scores.emplace_back(id_of(alive_[i]), *outcomes[i].value);
    }
    const auto ranked = video_text_percentile_filter(std::move(scores), config_.video_text_drop_fraction);
    const std::set<SampleId> dropped(ranked.report.dropped_ids.begin(), ranked.report.dropped_ids.end());
    settle(Stage::VideoText, outcomes,
           [&](std::size_t row, double) { return !dropped.contains(id_of(row)); });

    for (std::size_t row : alive_) {
      auto& s = state_[row].sample;
      if (s.frame_count) s.center_frame = center_frame_index(*s.frame_count);
    }
  }

  void recaption_stage() {
    auto outcomes = map_rows<std::optional<std::string>>(alive_, config_.threads, [&](std::size_t row) {
      return recaption(state_[row].sample, *clients_.llm);
    });
    settle(Stage::Recaption, outcomes, [&](std::size_t row, std::optional<std::string>& text) {
      if (!text) return false;
      state_[row].sample.recaption = std::move(*text);
      return true;
    });
  }

  void grounding() {
    auto outcomes = map_rows<GroundingResult>(alive_, config_.threads, [&](std::size_t row) {
      const auto& s = state_[row];
      return ground_triplets(*s.sample.recaption, *s.video_emb, *clients_.llm,
                             *clients_.video_encoder, config_.candidate_count_hint);
    });
    settle(Stage::Grounding, outcomes, [&](std::size_t row, GroundingResult& g) {
      state_[row].grounding.emplace(std::move(g));
      return true;
    });
  }

  void alignment() {
    const LlmClient& description_llm =
        clients_.description_llm ? *clients_.description_llm : *clients_.llm;

    std::vector<std::string> terms;
    for (std::size_t row : alive_) {
      const auto& t = state_[row].grounding->triplet();
      terms.push_back(t.head);
      terms.push_back(t.tail);
    }
    std::sort(terms.begin(), terms.end());
    terms.erase(std::unique(terms.begin(), terms.end()), terms.end());

    std::vector<Outcome<std::vector<ConceptDescription>>> fetched(terms.size());
    detail::parallel_for(terms.size(), config_.threads, [&](std::size_t i) {
      try {
        fetched[i].value.emplace(
            collect_descriptions(terms[i], *clients_.kb, description_llm, config_.max_descriptions));
      } catch (const Error& e) {
        if (!is_sample_local(e.code())) throw;
        fetched[i].error.emplace(e.annotated("concept '" + terms[i] + "'"));
      }
    });
    for (std::size_t i = 0; i < terms.size(); ++i) candidates_.emplace(terms[i], std::move(fetched[i]));

    struct Selection {
      std::size_t head;
      std::size_t tail;
    };
    auto outcomes = map_rows<Selection>(alive_, config_.threads, [&](std::size_t row) {
      const auto& s = state_[row];
      const auto& t = s.grounding->triplet();
      auto pick = [&](const std::string& term) {
        const auto& c = candidates_.at(term);
        if (c.error) throw *c.error;
        return select_description(term, s.sample.video_uri, *c.value, *clients_.video_encoder).selected;
      };
      const std::size_t head = pick(t.head);
      const std::size_t tail = t.tail == t.head ? head : pick(t.tail);
      return Selection{head, tail};
    });
    settle(Stage::Alignment, outcomes, [&](std::size_t row, const Selection& sel) {
      state_[row].head_desc = sel.head;
      state_[row].tail_desc = sel.tail;
      return true;
    });
  }

  PipelineResult commit() {
    KnowledgeGraph graph;
    std::vector<IndexEntry> audio, video, text, joint;
    for (std::size_t row : alive_) {
      auto& s = state_[row];
      const auto& t = s.grounding->triplet();
      graph.put_sample(s.sample);
      graph.upsert_concept(t.head, *candidates_.at(t.head).value);
      graph.upsert_concept(t.tail, *candidates_.at(t.tail).value);
      const std::string id =
          graph.add_triplet(t.head, t.relation, t.tail, s.sample.id, s.head_desc, s.tail_desc);

      audio.push_back({id, *s.audio_emb});
      video.push_back({id, *s.video_emb});
      text.push_back({id, s.grounding->sentence_embedding});
      joint.push_back({id, joint_embedding(*s.audio_emb, *s.video_emb).vector()});
    }
    graph.validate();

    const auto audio_meta = clients_.audio_encoder->meta();
    const auto video_meta = clients_.video_encoder->meta();
    const std::size_t audio_dim = audio_meta.dim(EmbedKind::Audio);
    const std::size_t video_dim = video_meta.dim(EmbedKind::Video);
    const std::size_t text_dim = video_meta.dim(EmbedKind::Text);
    auto make = [](std::vector<IndexEntry> entries, std::size_t dim) {
      return entries.empty() ? FlatIndex(Metric::L2, dim) : build_index(std::move(entries), Metric::L2);
    };
    TripletIndexes indexes(make(std::move(audio), audio_dim), make(std::move(video), video_dim),
                           make(std::move(text), text_dim),
                           make(std::move(joint), audio_dim + video_dim));
    return PipelineResult{std::move(graph), std::move(indexes), std::move(reports_)};
  }

  const PipelineConfig& config_;
  const Clients& clients_;
  std::vector<SampleState> state_;
  std::vector<std::size_t> alive_;  // rows still in play, ascending id
  std::vector<StageReport> reports_;
  std::map<std::string, Outcome<std::vector<ConceptDescription>>> candidates_;
};

}  // namespace

PipelineResult run_pipeline(std::vector<MultimodalSample> samples, const PipelineConfig& config,
                            const Clients& clients) {
  config.validate();
  if (!clients.audio_encoder || !clients.video_encoder || !clients.llm || !clients.kb) {
    throw Error(Errc::ConfigError, "pipeline needs audio and video encoders, an LLM and a KB");
  }
  return Run(std::move(samples), config, clients).execute();
}

PipelineResult run_pipeline(const std::filesystem::path& manifest, const PipelineConfig& config,
                            const Clients& clients) {
  return run_pipeline(load_manifest(manifest), config, clients);
}

Json reports_to_json(std::span<const StageReport> reports) {
  Json stages = Json::array();
  for (const auto& r : reports) {
    Json dropped = Json::array();
    for (const auto& id : r.dropped_ids) dropped.push_back(id.str());
    Json errors = Json::array();
    for (const auto& e : r.errors) errors.push_back({{"id", e.id.str()}, {"reason", e.reason}});
    stages.push_back({{"stage", std::string(stage_name(r.stage))},
                      {"input", r.input_count},
                      {"kept", r.kept_count},
                      {"dropped_ids", std::move(dropped)},
                      {"errors", std::move(errors)}});
  }
  return {{"stages", std::move(stages)}};
}

std::vector<StageReport> reports_from_json(const Json& root) {
  check_keys(root, {"stages"}, {}, "stage report");
  if (!root["stages"].is_array()) throw Error(Errc::SchemaError, "stages must be an array");
  std::vector<StageReport> out;
  for (const auto& js : root["stages"]) {
    check_keys(js, {"stage", "input", "kept", "dropped_ids"}, {"errors"}, "stage");
    StageReport r;
    r.stage = parse_stage(json_string(js, "stage", "stage"));
    if (!js["input"].is_number_unsigned() || !js["kept"].is_number_unsigned()) {
      throw Error(Errc::SchemaError, "stage counts must be non-negative integers");
    }
    r.input_count = js["input"].get<std::size_t>();
    r.kept_count = js["kept"].get<std::size_t>();
    for (const auto& id : js["dropped_ids"]) r.dropped_ids.emplace_back(id.get<std::string>());
    if (js.contains("errors")) {
      for (const auto& je : js["errors"]) {
        check_keys(je, {"id", "reason"}, {}, "stage error");
        r.errors.push_back({SampleId(json_string(je, "id", "stage error")),
                            json_string(je, "reason", "stage error")});
      }
    }
    if (!r.conserved()) throw Error(Errc::InvariantViolation, "stage counts are not conserved");
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace vatkg
