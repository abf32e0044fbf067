#include "vatkg/kg.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

#include "vatkg/error.hpp"
#include "vatkg/hash.hpp"
#include "vatkg/json.hpp"

namespace vatkg {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

void require_nonempty(std::string_view value, std::string_view what) {
  if (value.empty()) throw Error(Errc::InvalidArgument, std::string(what) + " is empty");
}

void check_candidates(const std::vector<ConceptDescription>& candidates, std::string_view surface) {
  if (candidates.empty()) {
    throw Error(Errc::EmptyCandidateList, "concept '" + std::string(surface) + "'");
  }
  if (candidates.size() > kMaxCandidates) {
    throw Error(Errc::TooManyCandidates, "concept '" + std::string(surface) + "' has " +
                                             std::to_string(candidates.size()) + " candidates");
  }
  std::set<std::string_view> seen;
  for (const auto& c : candidates) {
    if (c.text.empty()) {
      throw Error(Errc::InvalidArgument, "empty description for '" + std::string(surface) + "'");
    }
    if (!seen.insert(c.text).second) {
      throw Error(Errc::InvalidArgument, "repeated description for '" + std::string(surface) + "'");
    }
  }
}

std::optional<std::size_t> position_of(const std::vector<ConceptDescription>& list,
                                       std::string_view text) {
  for (std::size_t i = 0; i < list.size(); ++i) {
    if (list[i].text == text) return i;
  }
  return std::nullopt;
}

}  // namespace

SampleId::SampleId(std::string value) : value_(std::move(value)) {
  if (value_.empty()) throw Error(Errc::InvalidArgument, "sample id is empty");
}

std::string_view source_name(DescriptionSource s) noexcept {
  switch (s) {
    case DescriptionSource::Wikipedia: return "wikipedia";
    case DescriptionSource::Wiktionary: return "wiktionary";
    case DescriptionSource::Llm: return "llm";
  }
  return "?";
}

DescriptionSource parse_source(std::string_view name) {
  if (name == "wikipedia") return DescriptionSource::Wikipedia;
  if (name == "wiktionary") return DescriptionSource::Wiktionary;
  if (name == "llm") return DescriptionSource::Llm;
  throw Error(Errc::SchemaError, "unknown description source '" + std::string(name) + "'");
}

std::string normalize_surface(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  bool pending_space = false;
  for (char c : raw) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

std::string triplet_to_sentence(std::string_view head, std::string_view relation,
                                std::string_view tail) {
  std::string out;
  out.reserve(head.size() + relation.size() + tail.size() + 2);
  out.append(head).append(" ").append(relation).append(" ").append(tail);
  return out;
}

std::string triplet_to_sentence(const MultimodalTriplet& t) {
  return triplet_to_sentence(t.head, t.relation, t.tail);
}

std::string make_triplet_id(const SampleId& sample, std::string_view head,
                            std::string_view relation, std::string_view tail) {
  Fnv1a64 h;
  h.update(sample.str());
  h.update("\x1f");
  h.update(head);
  h.update("\x1f");
  h.update(relation);
  h.update("\x1f");
  h.update(tail);
  return to_hex16(h.digest());
}

const Concept* KnowledgeGraph::find_concept(std::string_view surface) const {
  auto it = concepts_.find(std::string(surface));
  return it == concepts_.end() ? nullptr : &it->second;
}

const MultimodalSample* KnowledgeGraph::find_sample(const SampleId& id) const {
  auto it = samples_.find(id);
  return it == samples_.end() ? nullptr : &it->second;
}

const MultimodalTriplet* KnowledgeGraph::find_triplet(std::string_view triplet_id) const {
  auto it = triplet_rows_.find(triplet_id);
  return it == triplet_rows_.end() ? nullptr : &triplets_[it->second];
}

void KnowledgeGraph::put_sample(MultimodalSample sample) {
  require_nonempty(sample.caption, "caption of sample '" + sample.id.str() + "'");
  auto id = sample.id;
  samples_.insert_or_assign(std::move(id), std::move(sample));
}

const Concept& KnowledgeGraph::upsert_concept(std::string_view surface,
                                              std::vector<ConceptDescription> candidates) {
  const std::string key = normalize_surface(surface);
  require_nonempty(key, "concept surface");
  check_candidates(candidates, key);

  auto it = concepts_.find(key);
  if (it == concepts_.end()) {
    return concepts_.emplace(key, Concept{key, std::move(candidates)}).first->second;
  }

  Concept& existing = it->second;
  std::vector<std::size_t> remap(existing.candidates.size());
  for (std::size_t i = 0; i < existing.candidates.size(); ++i) {
    auto pos = position_of(candidates, existing.candidates[i].text);
    if (!pos) {
      throw Error(Errc::CandidateConflict, "re-upsert of '" + key + "' drops description \"" +
                                               existing.candidates[i].text + "\"");
    }
    remap[i] = *pos;
  }
  for (auto& t : triplets_) {
    if (t.head == key) t.head_desc_idx = remap[t.head_desc_idx];
    if (t.tail == key) t.tail_desc_idx = remap[t.tail_desc_idx];
  }
  existing.candidates = std::move(candidates);
  return existing;
}

const std::string& KnowledgeGraph::add_triplet(std::string_view head, std::string_view relation,
                                               std::string_view tail, const SampleId& sample,
                                               std::size_t head_desc_idx,
                                               std::size_t tail_desc_idx) {
  const std::string h = normalize_surface(head);
  const std::string r = normalize_surface(relation);
  const std::string t = normalize_surface(tail);
  require_nonempty(r, "relation");

  const Concept* hc = find_concept(h);
  if (hc == nullptr) throw Error(Errc::UnknownConcept, "head '" + h + "'");
  const Concept* tc = find_concept(t);
  if (tc == nullptr) throw Error(Errc::UnknownConcept, "tail '" + t + "'");
  if (find_sample(sample) == nullptr) throw Error(Errc::UnknownSample, sample.str());
  if (head_desc_idx >= hc->candidates.size()) {
    throw Error(Errc::DescriptionIndexOutOfRange,
                "head '" + h + "' index " + std::to_string(head_desc_idx));
  }
  if (tail_desc_idx >= tc->candidates.size()) {
    throw Error(Errc::DescriptionIndexOutOfRange,
                "tail '" + t + "' index " + std::to_string(tail_desc_idx));
  }

  std::string id = make_triplet_id(sample, h, r, t);
  if (triplet_rows_.contains(id)) throw Error(Errc::DuplicateTriplet, id);
  triplet_rows_.emplace(id, triplets_.size());
  triplets_.push_back({std::move(id), h, r, t, sample, head_desc_idx, tail_desc_idx});
  return triplets_.back().triplet_id;
}

void KnowledgeGraph::validate() const {
  auto fail = [](const std::string& what) { throw Error(Errc::InvariantViolation, what); };

  for (const auto& [surface, entry] : concepts_) {
    if (surface.empty() || surface != entry.surface) fail("concept key mismatch '" + surface + "'");
    if (normalize_surface(surface) != surface) fail("concept '" + surface + "' is not normalized");
    if (entry.candidates.empty() || entry.candidates.size() > kMaxCandidates) {
      fail("concept '" + surface + "' has " + std::to_string(entry.candidates.size()) +
           " candidates");
    }
    std::set<std::string_view> texts;
    for (const auto& c : entry.candidates) {
      if (c.text.empty()) fail("concept '" + surface + "' has an empty description");
      if (!texts.insert(c.text).second) fail("concept '" + surface + "' repeats a description");
    }
  }
  for (const auto& [id, sample] : samples_) {
    if (id != sample.id) fail("sample key mismatch '" + id.str() + "'");
    if (sample.caption.empty()) fail("sample '" + id.str() + "' has an empty caption");
    if (sample.frame_count && *sample.frame_count == 0) {
      fail("sample '" + id.str() + "' has zero frames");
    }
    if (sample.center_frame && (!sample.frame_count || *sample.center_frame >= *sample.frame_count)) {
      fail("sample '" + id.str() + "' center frame out of range");
    }
  }
  std::set<std::string_view> ids;
  for (const auto& t : triplets_) {
    if (t.head.empty() || t.relation.empty() || t.tail.empty()) {
      fail("triplet '" + t.triplet_id + "' has an empty field");
    }
    if (!ids.insert(t.triplet_id).second) fail("duplicate triplet id '" + t.triplet_id + "'");
    if (t.triplet_id != make_triplet_id(t.sample, t.head, t.relation, t.tail)) {
      fail("triplet id '" + t.triplet_id + "' does not match its fields");
    }
    const Concept* h = find_concept(t.head);
    const Concept* tl = find_concept(t.tail);
    if (h == nullptr) fail("triplet '" + t.triplet_id + "' head '" + t.head + "' is dangling");
    if (tl == nullptr) fail("triplet '" + t.triplet_id + "' tail '" + t.tail + "' is dangling");
    if (find_sample(t.sample) == nullptr) {
      fail("triplet '" + t.triplet_id + "' sample '" + t.sample.str() + "' is dangling");
    }
    if (t.head_desc_idx >= h->candidates.size() || t.tail_desc_idx >= tl->candidates.size()) {
      fail("triplet '" + t.triplet_id + "' description index out of range");
    }
  }
}

// ---- JSON -----------------------------------------------------------------

void check_keys(const Json& obj, std::initializer_list<std::string_view> required,
                std::initializer_list<std::string_view> optional, std::string_view where) {
  if (!obj.is_object()) throw Error(Errc::SchemaError, std::string(where) + " is not an object");
  for (auto key : required) {
    if (!obj.contains(std::string(key))) {
      throw Error(Errc::SchemaError, std::string(where) + " lacks \"" + std::string(key) + "\"");
    }
  }
  for (const auto& [key, _] : obj.items()) {
    const bool known = std::find(required.begin(), required.end(), key) != required.end() ||
                       std::find(optional.begin(), optional.end(), key) != optional.end();
    if (!known) throw Error(Errc::SchemaError, std::string(where) + " has unknown key \"" + key + "\"");
  }
}

std::string json_string(const Json& obj, std::string_view key, std::string_view where) {
  auto it = obj.find(std::string(key));
  if (it == obj.end() || !it->is_string()) {
    throw Error(Errc::SchemaError,
                std::string(where) + " field \"" + std::string(key) + "\" must be a string");
  }
  return it->get<std::string>();
}

namespace {

std::size_t json_index(const Json& obj, std::string_view key, std::string_view where) {
  auto it = obj.find(std::string(key));
  if (it == obj.end() || !it->is_number_unsigned()) {
    throw Error(Errc::SchemaError, std::string(where) + " field \"" + std::string(key) +
                                       "\" must be a non-negative integer");
  }
  return it->get<std::size_t>();
}

std::optional<std::string> opt_string(const Json& obj, std::string_view key, std::string_view where) {
  if (!obj.contains(std::string(key))) return std::nullopt;
  return json_string(obj, key, where);
}

std::optional<std::uint32_t> opt_u32(const Json& obj, std::string_view key, std::string_view where) {
  if (!obj.contains(std::string(key))) return std::nullopt;
  const auto v = json_index(obj, key, where);
  if (v > UINT32_MAX) throw Error(Errc::SchemaError, std::string(where) + " value too large");
  return static_cast<std::uint32_t>(v);
}

MultimodalSample sample_from_json(const Json& j) {
  check_keys(j, {"id", "video_uri", "audio_uri", "caption"},
             {"title", "description", "frame_count", "category", "center_frame", "recaption"},
             "sample");
  MultimodalSample s;
  s.id = SampleId(json_string(j, "id", "sample"));
  s.video_uri = json_string(j, "video_uri", "sample");
  s.audio_uri = json_string(j, "audio_uri", "sample");
  s.caption = json_string(j, "caption", "sample");
  s.title = opt_string(j, "title", "sample");
  s.description_meta = opt_string(j, "description", "sample");
  s.frame_count = opt_u32(j, "frame_count", "sample");
  s.category = opt_string(j, "category", "sample");
  s.center_frame = opt_u32(j, "center_frame", "sample");
  s.recaption = opt_string(j, "recaption", "sample");
  return s;
}

}  // namespace

Json sample_to_json(const MultimodalSample& s) {
  Json j = {{"id", s.id.str()},
            {"video_uri", s.video_uri},
            {"audio_uri", s.audio_uri},
            {"caption", s.caption}};
  if (s.title) j["title"] = *s.title;
  if (s.description_meta) j["description"] = *s.description_meta;
  if (s.frame_count) j["frame_count"] = *s.frame_count;
  if (s.category) j["category"] = *s.category;
  if (s.center_frame) j["center_frame"] = *s.center_frame;
  if (s.recaption) j["recaption"] = *s.recaption;
  return j;
}

Json triplet_to_json(const MultimodalTriplet& t) {
  return {{"triplet_id", t.triplet_id},       {"head", t.head},
          {"relation", t.relation},           {"tail", t.tail},
          {"sample", t.sample.str()},         {"head_desc_idx", t.head_desc_idx},
          {"tail_desc_idx", t.tail_desc_idx}};
}

Json concept_to_json(const Concept& c) {
  Json candidates = Json::array();
  for (const auto& d : c.candidates) {
    candidates.push_back({{"text", d.text}, {"source", std::string(source_name(d.source))}});
  }
  return {{"surface", c.surface}, {"candidates", std::move(candidates)}};
}

Json graph_to_json(const KnowledgeGraph& graph) {
  Json concepts = Json::array();
  for (const auto& [_, c] : graph.concepts()) concepts.push_back(concept_to_json(c));
  Json triplets = Json::array();
  for (const auto& t : graph.triplets()) triplets.push_back(triplet_to_json(t));
  Json samples = Json::array();
  for (const auto& [_, s] : graph.samples()) samples.push_back(sample_to_json(s));
  return {{"schema", std::string(kGraphSchema)},
          {"concepts", std::move(concepts)},
          {"triplets", std::move(triplets)},
          {"samples", std::move(samples)}};
}

std::string dump_json(const Json& value) { return value.dump(2) + "\n"; }

std::string graph_to_json_text(const KnowledgeGraph& graph) {
  return dump_json(graph_to_json(graph));
}

KnowledgeGraph graph_from_json_text(std::string_view text) {
  Json root;
  try {
    root = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw Error(Errc::SchemaError, std::string("graph file is not JSON: ") + e.what());
  }
  if (!root.is_object() || !root.contains("schema")) {
    throw Error(Errc::SchemaError, "graph file lacks a schema tag");
  }
  const auto schema = json_string(root, "schema", "graph");
  if (schema != kGraphSchema) {
    throw Error(Errc::SchemaVersionMismatch, "expected " + std::string(kGraphSchema) + ", got " + schema);
  }
  check_keys(root, {"schema", "concepts", "triplets", "samples"}, {}, "graph");
  for (auto key : {"concepts", "triplets", "samples"}) {
    if (!root[key].is_array()) throw Error(Errc::SchemaError, std::string(key) + " must be an array");
  }

  KnowledgeGraph g;
  for (const auto& jc : root["concepts"]) {
    check_keys(jc, {"surface", "candidates"}, {}, "concept");
    Concept c;
    c.surface = json_string(jc, "surface", "concept");
    if (!jc["candidates"].is_array()) throw Error(Errc::SchemaError, "candidates must be an array");
    for (const auto& jd : jc["candidates"]) {
      check_keys(jd, {"text", "source"}, {}, "description");
      c.candidates.push_back(
          {json_string(jd, "text", "description"), parse_source(json_string(jd, "source", "description"))});
    }
    auto surface = c.surface;
    if (!g.concepts_.emplace(surface, std::move(c)).second) {
      throw Error(Errc::InvariantViolation, "duplicate concept '" + surface + "'");
    }
  }
  for (const auto& js : root["samples"]) {
    auto s = sample_from_json(js);
    auto id = s.id;
    if (!g.samples_.emplace(std::move(id), std::move(s)).second) {
      throw Error(Errc::InvariantViolation, "duplicate sample '" + js["id"].get<std::string>() + "'");
    }
  }
  for (const auto& jt : root["triplets"]) {
    check_keys(jt, {"triplet_id", "head", "relation", "tail", "sample", "head_desc_idx", "tail_desc_idx"},
               {}, "triplet");
    MultimodalTriplet t;
    t.triplet_id = json_string(jt, "triplet_id", "triplet");
    t.head = json_string(jt, "head", "triplet");
    t.relation = json_string(jt, "relation", "triplet");
    t.tail = json_string(jt, "tail", "triplet");
    const auto sample = json_string(jt, "sample", "triplet");
    if (sample.empty()) throw Error(Errc::InvariantViolation, "triplet with empty sample id");
    t.sample = SampleId(sample);
    t.head_desc_idx = json_index(jt, "head_desc_idx", "triplet");
    t.tail_desc_idx = json_index(jt, "tail_desc_idx", "triplet");
    g.triplet_rows_.emplace(t.triplet_id, g.triplets_.size());
    g.triplets_.push_back(std::move(t));
  }
  g.validate();
  return g;
}

void save_graph(const KnowledgeGraph& graph, const std::filesystem::path& path) {
  if (path.empty()) throw Error(Errc::IoError, "empty graph path");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoError, "cannot open '" + path.string() + "' for writing");
  out << graph_to_json_text(graph);
  if (!out) throw Error(Errc::IoError, "short write to '" + path.string() + "'");
}

KnowledgeGraph load_graph(const std::filesystem::path& path) {
  if (path.empty()) throw Error(Errc::IoError, "empty graph path");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open '" + path.string() + "'");
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return graph_from_json_text(text);
}

// ---- statistics -------------------------------------------------------------

std::size_t word_count(std::string_view text) {
  std::size_t words = 0;
  bool in_word = false;
  for (char c : text) {
    if (is_space(c)) {
      in_word = false;
    } else if (!in_word) {
      in_word = true;
      ++words;
    }
  }
  return words;
}

StatsReport graph_stats(const KnowledgeGraph& graph) {
  StatsReport r;
  r.concepts = graph.concepts().size();
  r.triplets = graph.triplets().size();
  r.samples = graph.samples().size();

  std::map<std::string_view, std::size_t> refs;
  for (const auto& [surface, _] : graph.concepts()) refs[surface] = 0;
  for (const auto& t : graph.triplets()) {
    ++refs[t.head];
    if (t.tail != t.head) ++refs[t.tail];
    if (const auto* s = graph.find_sample(t.sample); s != nullptr && s->category) {
      ++r.categories[*s->category];
    }
  }
  for (const auto& [_, n] : refs) ++r.data_per_concept[n];

  for (const auto& [_, c] : graph.concepts()) {
    for (const auto& d : c.candidates) {
      ++r.descriptions;
      ++r.description_words[word_count(d.text)];
      ++r.description_sources[d.source];
    }
  }
  return r;
}

Json stats_to_json(const StatsReport& s) {
  auto histogram = [](const std::map<std::size_t, std::size_t>& m) {
    Json out = Json::object();
    for (const auto& [k, v] : m) out[std::to_string(k)] = v;
    return out;
  };
  Json sources = Json::object();
  for (const auto& [k, v] : s.description_sources) sources[std::string(source_name(k))] = v;
  Json categories = Json::object();
  for (const auto& [k, v] : s.categories) categories[k] = v;
  return {{"concepts", s.concepts},
          {"triplets", s.triplets},
          {"samples", s.samples},
          {"descriptions", s.descriptions},
          {"data_per_concept", histogram(s.data_per_concept)},
          {"description_words", histogram(s.description_words)},
          {"description_sources", std::move(sources)},
          {"categories", std::move(categories)}};
}

}  // namespace vatkg
