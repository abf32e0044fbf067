#include "vatkg/cli.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>

#include "vatkg/http_clients.hpp"
#include "vatkg/json.hpp"
#include "vatkg/kg.hpp"
#include "vatkg/triplet_indexes.hpp"

namespace vatkg::cli {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kGraphFile = "graph.json";
constexpr std::string_view kReportFile = "stage_report.json";

/// An error whose exit code is already decided.
struct Failure {
  int code;
  std::string message;
};

template <typename Fn>
auto in_phase(int code, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Failure&) {
    throw;
  } catch (const std::exception& e) {
    throw Failure{code, e.what()};
  }
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

// ---- key=value config -----------------------------------------------------

struct ConfigValue {
  std::string text;
  std::size_t line;
};

std::string unquote(std::string_view raw, std::size_t line) {
  auto fail = [&](const std::string& why) {
    throw Error(Errc::ConfigError, "config line " + std::to_string(line) + ": " + why);
  };
  if (raw.empty() || raw.front() != '"') {
    const auto hash = raw.find('#');
    return trim(raw.substr(0, hash));
  }
  std::string out;
  std::size_t i = 1;
  for (; i < raw.size() && raw[i] != '"'; ++i) {
    if (raw[i] == '\\') {
      if (++i == raw.size()) fail("dangling escape");
      switch (raw[i]) {
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        case '"': out += '"'; break;
        case '\\': out += '\\'; break;
        default: fail(std::string("unknown escape \\") + raw[i]);
      }
    } else {
      out += raw[i];
    }
  }
  if (i == raw.size()) fail("unterminated string");
  const auto rest = trim(raw.substr(i + 1));
  if (!rest.empty() && rest.front() != '#') fail("text after closing quote");
  return out;
}

std::map<std::string, ConfigValue> parse_key_values(std::string_view text) {
  std::map<std::string, ConfigValue> out;
  std::string section;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  for (std::string raw; std::getline(in, raw);) {
    ++line_no;
    const auto line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    auto fail = [&](const std::string& why) {
      throw Error(Errc::ConfigError, "config line " + std::to_string(line_no) + ": " + why);
    };
    if (line.front() == '[') {
      if (line.back() != ']') fail("malformed section header");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      if (section.empty()) fail("empty section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail("expected key = value");
    const auto key = trim(std::string_view(line).substr(0, eq));
    if (key.empty()) fail("empty key");
    const auto full = section.empty() ? key : section + "." + key;
    const auto value = unquote(trim(std::string_view(line).substr(eq + 1)), line_no);
    if (!out.emplace(full, ConfigValue{value, line_no}).second) fail("duplicate key '" + full + "'");
  }
  return out;
}

class ConfigReader {
 public:
  ConfigReader(std::string key, const ConfigValue& v) : key_(std::move(key)), v_(v) {}

  [[noreturn]] void fail(const std::string& why) const {
    throw Error(Errc::ConfigError,
                "config line " + std::to_string(v_.line) + ": " + key_ + ": " + why);
  }

  std::string str() const { return v_.text; }

  double real() const {
    double out = 0;
    const auto* end = v_.text.data() + v_.text.size();
    auto [p, ec] = std::from_chars(v_.text.data(), end, out);
    if (ec != std::errc{} || p != end) fail("expected a number, got '" + v_.text + "'");
    return out;
  }

  template <typename Int>
  Int integer() const {
    Int out{};
    const auto* end = v_.text.data() + v_.text.size();
    auto [p, ec] = std::from_chars(v_.text.data(), end, out);
    if (ec != std::errc{} || p != end) fail("expected an integer, got '" + v_.text + "'");
    return out;
  }

  bool boolean() const {
    if (v_.text == "true") return true;
    if (v_.text == "false") return false;
    fail("expected true or false, got '" + v_.text + "'");
  }

  fs::path path(const fs::path& base) const {
    if (v_.text.empty()) fail("empty path");
    fs::path p(v_.text);
    return p.is_relative() ? base / p : p;
  }

  std::set<std::string> list() const {
    std::set<std::string> out;
    std::size_t start = 0;
    while (start <= v_.text.size()) {
      const auto comma = std::min(v_.text.find(',', start), v_.text.size());
      auto item = trim(std::string_view(v_.text).substr(start, comma - start));
      if (!item.empty()) out.insert(std::move(item));
      start = comma + 1;
    }
    return out;
  }

 private:
  std::string key_;
  const ConfigValue& v_;
};

// ---- clients ------------------------------------------------------------------

HttpOptions http_options(const ClientSettings& s) {
  HttpOptions o;
  o.timeout = std::chrono::milliseconds(s.timeout_ms);
  o.retries = s.retries;
  return o;
}

// ---- commands -------------------------------------------------------------------

struct GlobalFlags {
  std::string config_path;
  bool mock_clients = false;
  std::string encoder_url;
  std::string llm_url;
};

CliConfig resolve_config(const GlobalFlags& flags) {
  return in_phase(kExitConfig, [&] {
    std::string path = flags.config_path;
    if (path.empty()) {
      if (const char* env = std::getenv("VATKG_CONFIG"); env != nullptr) path = env;
    }
    CliConfig config = path.empty() ? CliConfig{} : load_config(path);
    if (flags.mock_clients) config.clients.mock = true;
    if (!flags.encoder_url.empty()) {
      config.clients.audio_encoder_url = flags.encoder_url;
      config.clients.video_encoder_url = flags.encoder_url;
    }
    if (!flags.llm_url.empty()) config.clients.llm_url = flags.llm_url;
    return config;
  });
}

void write_file(const fs::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoError, "cannot write '" + path.string() + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(Errc::IoError, "short write to '" + path.string() + "'");
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot read '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Json parse_json(std::string_view text, std::string_view what) {
  try {
    return Json::parse(text);
  } catch (const Json::exception& e) {
    throw Error(Errc::SchemaError, std::string(what) + ": " + e.what());
  }
}

int cmd_build(const CliConfig& config, const fs::path& manifest, const fs::path& out_dir,
              std::ostream& out) {
  auto samples = in_phase(kExitManifest, [&] { return load_manifest(manifest); });
  const Clients clients = in_phase(kExitConfig, [&] { return make_clients(config.clients); });
  const auto input_count = samples.size();
  const auto result = run_pipeline(std::move(samples), config.pipeline, clients);

  in_phase(kExitIo, [&] {
    fs::create_directories(out_dir);
    save_graph(result.graph, out_dir / kGraphFile);
    save_indexes(result.indexes, out_dir);
    write_file(out_dir / kReportFile, dump_json(reports_to_json(result.reports)));
  });

  Json files = Json::array({std::string(kGraphFile)});
  for (Modality m : kModalities) files.push_back(std::string(index_file_name(m)));
  files.push_back(std::string(kReportFile));
  out << dump_json({{"out_dir", out_dir.string()},
                    {"files", std::move(files)},
                    {"samples", input_count},
                    {"concepts", result.graph.concepts().size()},
                    {"triplets", result.graph.triplets().size()}});
  return kExitOk;
}

struct QueryFlags {
  std::string request = "-";
  std::optional<std::size_t> top_k;
  std::optional<double> l2_threshold;
  std::optional<double> checker_min_cos;
  bool dry_run = false;
};

int cmd_query(const CliConfig& config, const fs::path& out_dir, const QueryFlags& flags,
              std::istream& in, std::ostream& out) {
  const auto [graph, indexes] = in_phase(kExitIo, [&] {
    return std::pair{load_graph(out_dir / kGraphFile), load_indexes(out_dir)};
  });

  const auto [request, rag] = in_phase(kExitConfig, [&] {
    const std::string text = flags.request == "-"
                                 ? std::string(std::istreambuf_iterator<char>(in), {})
                                 : read_file(flags.request);
    auto req = parse_query_request(parse_json(text, "query request"));
    RagConfig rc = rag_config_from_json(req.config_overrides, config.rag);
    if (flags.top_k) rc.top_k = *flags.top_k;
    if (flags.l2_threshold) rc.l2_threshold = *flags.l2_threshold;
    if (flags.checker_min_cos) {
      rc.checker_min_cos = *flags.checker_min_cos;
      rc.checker_min_cos_by_modality.clear();
    }
    rc.validate();
    return std::pair{std::move(req), rc};
  });

  const Clients clients = in_phase(kExitConfig, [&] { return make_clients(config.clients); });
  const RagEngine engine{graph, indexes, clients};
  const auto trace = engine.run(request.question, request.payload, rag, flags.dry_run);
  out << dump_json(trace_to_json(trace));
  return kExitOk;
}

int cmd_stats(const fs::path& out_dir, std::ostream& out) {
  const auto graph = in_phase(kExitIo, [&] { return load_graph(out_dir / kGraphFile); });
  const Json report = in_phase(kExitIo, [&]() -> Json {
    const auto path = out_dir / kReportFile;
    if (!fs::exists(path)) return nullptr;
    const auto parsed = parse_json(read_file(path), "stage report");
    reports_from_json(parsed);
    return parsed;
  });
  out << dump_json({{"stats", stats_to_json(graph_stats(graph))}, {"stage_report", report}});
  return kExitOk;
}

int cmd_inspect(const fs::path& out_dir, const std::string& id, std::ostream& out) {
  const auto graph = in_phase(kExitIo, [&] { return load_graph(out_dir / kGraphFile); });
  const auto* t = graph.find_triplet(id);
  if (t == nullptr) throw Error(Errc::UnknownTriplet, "no triplet '" + id + "'");
  Json doc = {{"triplet", triplet_to_json(*t)},
              {"sentence", triplet_to_sentence(*t)},
              {"head", concept_to_json(*graph.find_concept(t->head))},
              {"tail", concept_to_json(*graph.find_concept(t->tail))}};
  if (const auto* s = graph.find_sample(t->sample)) doc["sample"] = sample_to_json(*s);
  out << dump_json(doc);
  return kExitOk;
}

}  // namespace

int exit_code_for(Errc code) noexcept {
  switch (code) {
    case Errc::ConfigError:
    case Errc::InvalidArgument:
    case Errc::UnknownModality:
      return kExitConfig;
    case Errc::ManifestParseError:
      return kExitManifest;
    case Errc::LlmUnavailable:
    case Errc::EncoderUnavailable:
    case Errc::Unreachable:
    case Errc::BadStatus:
    case Errc::UnscriptedPrompt:
    case Errc::EmptyCompletion:
    case Errc::NoCandidatesParsed:
    case Errc::AllSourcesFailed:
    case Errc::Unsupported:
    case Errc::SchemaError:
      return kExitClient;
    case Errc::IoError:
    case Errc::BadMagic:
    case Errc::ChecksumMismatch:
    case Errc::SchemaVersionMismatch:
      return kExitIo;
    default:
      return kExitFailure;
  }
}

void CliConfig::validate() const {
  pipeline.validate();
  rag.validate();
  if (clients.timeout_ms <= 0) throw Error(Errc::ConfigError, "clients.timeout_ms must be positive");
  if (clients.retries < 0) throw Error(Errc::ConfigError, "clients.retries must be non-negative");
  if (clients.mock_audio_dim < 2 || clients.mock_video_dim < 2) {
    throw Error(Errc::ConfigError, "mock dims must be at least 2");
  }
}

CliConfig parse_config(std::string_view text, const fs::path& base_dir, CliConfig c) {
  for (const auto& [key, value] : parse_key_values(text)) {
    const ConfigReader r(key, value);
    auto& p = c.pipeline;
    auto& g = c.rag;
    auto& s = c.clients;
    if (key == "pipeline.audio_text_min_cos") p.audio_text_min_cos = r.real();
    else if (key == "pipeline.video_text_drop_fraction") p.video_text_drop_fraction = r.real();
    else if (key == "pipeline.voice_over_labels") p.voice_over_labels = r.list();
    else if (key == "pipeline.max_descriptions") p.max_descriptions = r.integer<std::size_t>();
    else if (key == "pipeline.candidate_count_hint") p.candidate_count_hint = r.integer<std::size_t>();
    else if (key == "pipeline.threads") p.threads = r.integer<std::size_t>();
    else if (key == "pipeline.strict") p.strict = r.boolean();
    else if (key == "rag.top_k") g.top_k = r.integer<std::size_t>();
    else if (key == "rag.l2_threshold") g.l2_threshold = r.real();
    else if (key == "rag.checker_min_cos") g.checker_min_cos = r.real();
    else if (key.rfind("rag.checker_min_cos.", 0) == 0) {
      Modality m{};
      try {
        m = parse_modality(key.substr(std::string_view("rag.checker_min_cos.").size()));
      } catch (const Error& e) {
        r.fail(e.message());
      }
      g.checker_min_cos_by_modality[m] = r.real();
    } else if (key == "rag.checker_encoder") {
      try {
        g.checker_encoder = parse_family(r.str());
      } catch (const Error& e) {
        r.fail(e.message());
      }
    }
    else if (key == "clients.mock") s.mock = r.boolean();
    else if (key == "clients.encoder_url") s.audio_encoder_url = s.video_encoder_url = r.str();
    else if (key == "clients.audio_encoder_url") s.audio_encoder_url = r.str();
    else if (key == "clients.video_encoder_url") s.video_encoder_url = r.str();
    else if (key == "clients.llm_url") s.llm_url = r.str();
    else if (key == "clients.generator_url") s.generator_url = r.str();
    else if (key == "clients.wikipedia_url") s.wikipedia_url = r.str();
    else if (key == "clients.wiktionary_url") s.wiktionary_url = r.str();
    else if (key == "clients.kb_fixture_dir") s.kb_fixture_dir = r.path(base_dir);
    else if (key == "clients.timeout_ms") s.timeout_ms = r.integer<int>();
    else if (key == "clients.retries") s.retries = r.integer<int>();
    else if (key == "mock.llm_script") s.mock_llm_script = r.path(base_dir);
    else if (key == "mock.generator_script") s.mock_generator_script = r.path(base_dir);
    else if (key == "mock.encoder_fixture") s.mock_encoder_fixture = r.path(base_dir);
    else if (key == "mock.audio_dim") s.mock_audio_dim = r.integer<std::size_t>();
    else if (key == "mock.video_dim") s.mock_video_dim = r.integer<std::size_t>();
    else r.fail("unknown key");
  }
  c.validate();
  return c;
}

CliConfig load_config(const fs::path& path, CliConfig base) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::ConfigError, "cannot open config '" + path.string() + "'");
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return parse_config(text, path.parent_path(), std::move(base));
  } catch (const Error& e) {
    throw e.annotated(path.string());
  }
}

std::vector<MockLlm::Rule> default_mock_script() {
  return {
      {R"(Caption: ([^\n]*)\nTitle: [^\n]*\nDescription: [^\n]*\n\nRefined caption:$)", "$1"},
      {R"(\nCaption: \W*(\w+)\b[^\n]*?\b(\w+)\W*\nTriplets:$)", "($1; appears with; $2)"},
      {R"(\nCaption: ([^\n]+)\nTriplets:$)", "(clip; shows; $1)"},
      {R"(\nConcept: ([^\n]*)\nDescriptions:$)", "$1, a concept that appears in the clip."},
  };
}

Clients make_clients(const ClientSettings& s) {
  Clients c;
  if (s.mock) {
    auto audio = std::make_shared<MockEncoder>(
        EncoderFamily::Audio,
        std::map<EmbedKind, std::size_t>{{EmbedKind::Text, s.mock_audio_dim},
                                         {EmbedKind::Audio, s.mock_audio_dim}});
    auto video = std::make_shared<MockEncoder>(
        EncoderFamily::Video, std::map<EmbedKind, std::size_t>{
                                  {EmbedKind::Text, s.mock_video_dim},
                                  {EmbedKind::Video, s.mock_video_dim},
                                  {EmbedKind::Image, s.mock_video_dim},
                                  {EmbedKind::VideoConditioned, s.mock_video_dim}});
    if (s.mock_encoder_fixture) {
      audio->load_fixture(*s.mock_encoder_fixture);
      video->load_fixture(*s.mock_encoder_fixture);
    }
    c.audio_encoder = audio;
    c.video_encoder = video;
    c.llm = std::make_shared<MockLlm>(s.mock_llm_script ? MockLlm::load_script(*s.mock_llm_script)
                                                        : default_mock_script());
    c.generator = std::make_shared<MockLlm>(s.mock_generator_script
                                                ? MockLlm::load_script(*s.mock_generator_script)
                                                : MockLlm::echo_script());
    c.kb = s.kb_fixture_dir ? std::make_shared<FixtureKnowledgeBase>(*s.kb_fixture_dir)
                            : std::make_shared<FixtureKnowledgeBase>();
    return c;
  }

  // Live mode leaves unconfigured clients null; the consumer reports which
  // one it needed.
  const auto opts = http_options(s);
  if (!s.audio_encoder_url.empty()) c.audio_encoder = std::make_shared<HttpEncoder>(s.audio_encoder_url, opts);
  if (!s.video_encoder_url.empty()) c.video_encoder = std::make_shared<HttpEncoder>(s.video_encoder_url, opts);
  if (!s.llm_url.empty()) c.llm = std::make_shared<HttpLlm>(s.llm_url, opts);
  const auto& gen = s.generator_url.empty() ? s.llm_url : s.generator_url;
  if (!gen.empty()) c.generator = std::make_shared<HttpLlm>(gen, opts);
  if (s.kb_fixture_dir) {
    c.kb = std::make_shared<FixtureKnowledgeBase>(*s.kb_fixture_dir);
  } else {
    c.kb = std::make_shared<HttpKnowledgeBase>(s.wikipedia_url, s.wiktionary_url, opts);
  }
  return c;
}

int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Build and query an audio-video-text knowledge graph.", "vatkg"};
  app.require_subcommand(1);

  GlobalFlags global;
  app.add_option("--config", global.config_path, "key=value config file (else $VATKG_CONFIG)");
  app.add_flag("--mock-clients", global.mock_clients, "use deterministic offline clients");
  app.add_option("--encoder-url", global.encoder_url, "encoder service base URL (both families)");
  app.add_option("--llm-url", global.llm_url, "LLM service base URL");

  std::string manifest, out_dir, triplet_id;
  auto* build = app.add_subcommand("build", "run the construction pipeline");
  build->add_option("--manifest", manifest, "JSONL sample manifest")->required();
  build->add_option("--out", out_dir, "output directory")->required();

  QueryFlags qf;
  std::size_t top_k = 0;
  double l2 = 0, min_cos = 0;
  auto* query = app.add_subcommand("query", "answer a question with retrieved knowledge");
  query->add_option("--out", out_dir, "build output directory")->required();
  query->add_option("--request", qf.request, "query request JSON file, or - for stdin");
  auto* top_k_opt = query->add_option("--top-k", top_k, "hits retrieved per query");
  auto* l2_opt = query->add_option("--l2-threshold", l2, "keep hits with distance below this");
  auto* cos_opt = query->add_option("--checker-min-cos", min_cos, "retrieval checker cutoff");
  query->add_flag("--dry-run", qf.dry_run, "stop after prompt assembly");

  auto* stats = app.add_subcommand("stats", "print graph statistics");
  stats->add_option("--out", out_dir, "build output directory")->required();

  auto* inspect = app.add_subcommand("inspect-triplet", "print one triplet with its concepts");
  inspect->add_option("--out", out_dir, "build output directory")->required();
  inspect->add_option("--id", triplet_id, "triplet id")->required();

  for (auto* sub : {build, query, stats, inspect}) sub->fallthrough();

  try {
    app.parse(std::vector<std::string>(args.rbegin(), args.rend()));
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitConfig;
  }

  try {
    const CliConfig config = resolve_config(global);
    if (build->parsed()) return cmd_build(config, manifest, out_dir, out);
    if (query->parsed()) {
      if (*top_k_opt) qf.top_k = top_k;
      if (*l2_opt) qf.l2_threshold = l2;
      if (*cos_opt) qf.checker_min_cos = min_cos;
      return cmd_query(config, out_dir, qf, in, out);
    }
    if (stats->parsed()) return cmd_stats(out_dir, out);
    return cmd_inspect(out_dir, triplet_id, out);
  } catch (const Failure& f) {
    err << "vatkg: " << f.message << "\n";
    return f.code;
  } catch (const Error& e) {
    err << "vatkg: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "vatkg: " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace vatkg::cli
