#include <gtest/gtest.h>

#include <cstdio>
#include <functional>

#include "support.hpp"
#include "vatkg/json.hpp"
#include "vatkg/kg.hpp"

using namespace vatkg;

namespace {

ConceptDescription wiki(std::string text) { return {std::move(text), DescriptionSource::Wikipedia}; }
ConceptDescription llm(std::string text) { return {std::move(text), DescriptionSource::Llm}; }

MultimodalSample sample(std::string id, std::optional<std::string> category = std::nullopt) {
  MultimodalSample s;
  s.id = SampleId(id);
  s.video_uri = "video://" + id;
  s.audio_uri = "audio://" + id;
  s.caption = "caption of " + id;
  s.category = std::move(category);
  return s;
}

KnowledgeGraph small_graph() {
  KnowledgeGraph g;
  g.put_sample(sample("s1", "Animal"));
  g.put_sample(sample("s2", "Animal"));
  g.put_sample(sample("s3", "Music"));
  g.upsert_concept("quokka", {wiki("A small macropod."), llm("An animal from Australia.")});
  g.upsert_concept("mammal", {wiki("A warm-blooded vertebrate.")});
  g.upsert_concept("island", {wiki("Land surrounded by water."), llm("A piece of land in the sea.")});
  g.add_triplet("quokka", "IsA", "mammal", SampleId("s1"), 1, 0);
  g.add_triplet("quokka", "lives on", "island", SampleId("s2"), 0, 1);
  g.add_triplet("island", "is", "island", SampleId("s3"), 0, 0);
  return g;
}

}  // namespace

TEST(Surface, NormalizationKeepsCase) {
  EXPECT_EQ(normalize_surface("  Rottnest \t  Island\n"), "Rottnest Island");
  EXPECT_EQ(normalize_surface(""), "");
  EXPECT_EQ(triplet_to_sentence("quokka", "IsA", "mammal"), "quokka IsA mammal");
}

TEST(TripletId, IsFnvOfJoinedFields) {
  // Recomputed here byte by byte rather than through the library hash.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : std::string("s1\x1f" "a\x1f" "b\x1f" "c")) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  EXPECT_EQ(make_triplet_id(SampleId("s1"), "a", "b", "c"), buf);
}

TEST(Graph, AddTripletNormalizesAndChecksReferences) {
  KnowledgeGraph g;
  g.put_sample(sample("s1"));
  g.upsert_concept(" desert  owl ", {wiki("An owl.")});
  EXPECT_NE(g.find_concept("desert owl"), nullptr);

  EXPECT_ERRC(g.add_triplet("desert owl", "eats", "mouse", SampleId("s1"), 0, 0), Errc::UnknownConcept);
  g.upsert_concept("mouse", {wiki("A rodent.")});
  EXPECT_ERRC(g.add_triplet("desert owl", "eats", "mouse", SampleId("nope"), 0, 0), Errc::UnknownSample);
  EXPECT_ERRC(g.add_triplet("desert owl", "eats", "mouse", SampleId("s1"), 1, 0),
              Errc::DescriptionIndexOutOfRange);
  EXPECT_ERRC(g.add_triplet("desert owl", "", "mouse", SampleId("s1"), 0, 0), Errc::InvalidArgument);

  const auto id = g.add_triplet("desert   owl", " eats", "mouse ", SampleId("s1"), 0, 0);
  const auto* t = g.find_triplet(id);
  ASSERT_NE(t, nullptr);
  EXPECT_EQ(t->head, "desert owl");
  EXPECT_EQ(t->relation, "eats");
  EXPECT_EQ(id, make_triplet_id(SampleId("s1"), "desert owl", "eats", "mouse"));
  EXPECT_ERRC(g.add_triplet("desert owl", "eats", "mouse", SampleId("s1"), 0, 0), Errc::DuplicateTriplet);
  EXPECT_NO_THROW(g.validate());
}

TEST(Graph, CandidateListLimits) {
  KnowledgeGraph g;
  EXPECT_ERRC(g.upsert_concept("x", {}), Errc::EmptyCandidateList);
  std::vector<ConceptDescription> six;
  for (int i = 0; i < 6; ++i) six.push_back(llm("d" + std::to_string(i)));
  EXPECT_ERRC(g.upsert_concept("x", six), Errc::TooManyCandidates);
  six.pop_back();
  EXPECT_NO_THROW(g.upsert_concept("x", six));
  EXPECT_ERRC(g.upsert_concept("y", {llm("same"), llm("same")}), Errc::InvalidArgument);
}

TEST(Graph, UpsertSupersetRemapsIndices) {
  KnowledgeGraph g;
  g.put_sample(sample("s1"));
  g.upsert_concept("a", {wiki("first"), wiki("second")});
  g.upsert_concept("b", {wiki("only")});
  const auto id = g.add_triplet("a", "r", "b", SampleId("s1"), 1, 0);

  // Superset with a new entry in front: "second" moves from 1 to 2.
  g.upsert_concept("a", {llm("new"), wiki("first"), wiki("second")});
  EXPECT_EQ(g.find_triplet(id)->head_desc_idx, 2u);
  EXPECT_EQ(g.find_concept("a")->candidates[2].text, "second");

  EXPECT_ERRC(g.upsert_concept("a", {wiki("first")}), Errc::CandidateConflict);
  EXPECT_EQ(g.find_concept("a")->candidates.size(), 3u);
}

TEST(Persistence, GraphRoundTripIsStructuralAndByteStable) {
  const auto g = small_graph();
  test::TempDir dir;
  save_graph(g, dir / "g.json");
  const auto back = load_graph(dir / "g.json");
  EXPECT_EQ(back, g);
  EXPECT_EQ(graph_to_json_text(back), test::read_text(dir / "g.json"));
}

TEST(Persistence, GraphRejectsBadFiles) {
  const auto text = graph_to_json_text(small_graph());
  auto with = [&](const std::function<void(Json&)>& edit) {
    Json j = Json::parse(text);
    edit(j);
    return j.dump();
  };
  EXPECT_ERRC(graph_from_json_text("{not json"), Errc::SchemaError);
  EXPECT_ERRC(graph_from_json_text(with([](Json& j) { j["schema"] = "vatkg-graph/2"; })),
              Errc::SchemaVersionMismatch);
  EXPECT_ERRC(graph_from_json_text(with([](Json& j) { j["extra"] = 1; })), Errc::SchemaError);
  EXPECT_ERRC(graph_from_json_text(with([](Json& j) { j["triplets"][0]["head"] = "ghost"; })),
              Errc::InvariantViolation);
  EXPECT_ERRC(graph_from_json_text(with([](Json& j) { j["triplets"][0]["head_desc_idx"] = 9; })),
              Errc::InvariantViolation);
  EXPECT_ERRC(graph_from_json_text(with([](Json& j) { j["triplets"][1]["relation"] = "edited"; })),
              Errc::InvariantViolation);
  EXPECT_ERRC(graph_from_json_text(with([](Json& j) { j["concepts"][0]["candidates"] = Json::array(); })),
              Errc::InvariantViolation);
  EXPECT_ERRC(load_graph("/nonexistent/graph.json"), Errc::IoError);
}

TEST(Stats, CountsAndHistograms) {
  const auto s = graph_stats(small_graph());
  EXPECT_EQ(s.concepts, 3u);
  EXPECT_EQ(s.triplets, 3u);
  EXPECT_EQ(s.samples, 3u);
  EXPECT_EQ(s.descriptions, 5u);
  // quokka: 2 triplets, mammal: 1, island: 2 (the self-loop counts once).
  EXPECT_EQ(s.data_per_concept, (std::map<std::size_t, std::size_t>{{1, 1}, {2, 2}}));
  EXPECT_EQ(s.categories, (std::map<std::string, std::size_t>{{"Animal", 2}, {"Music", 1}}));
  EXPECT_EQ(s.description_words,
            (std::map<std::size_t, std::size_t>{{3, 2}, {4, 2}, {7, 1}}));
  EXPECT_EQ(s.description_sources.at(DescriptionSource::Wikipedia), 3u);
  EXPECT_EQ(s.description_sources.at(DescriptionSource::Llm), 2u);
}

TEST(Stats, EmptyGraphIsAllZero) {
  const auto s = graph_stats(KnowledgeGraph{});
  EXPECT_EQ(s, StatsReport{});
  const auto j = stats_to_json(s);
  EXPECT_EQ(j["concepts"], 0);
  EXPECT_TRUE(j["data_per_concept"].empty());
}
