#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vatkg/clients.hpp"
#include "vatkg/error.hpp"
#include "vatkg/mock_clients.hpp"
#include "vatkg/pipeline.hpp"
#include "vatkg/rag.hpp"

namespace vatkg::cli {

/// Stable process exit codes.
enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitConfig = 2,
  kExitManifest = 3,
  kExitClient = 4,
  kExitIo = 5,
};

/// Exit code for an error raised outside a phase with a fixed mapping.
int exit_code_for(Errc code) noexcept;

struct ClientSettings {
  bool mock = false;
  std::string audio_encoder_url;
  std::string video_encoder_url;
  std::string llm_url;
  std::string generator_url;  // defaults to llm_url
  std::string wikipedia_url = "https://en.wikipedia.org/api/rest_v1";
  std::string wiktionary_url = "https://en.wiktionary.org/api/rest_v1";
  std::optional<std::filesystem::path> kb_fixture_dir;
  int timeout_ms = 30000;
  int retries = 3;

  std::optional<std::filesystem::path> mock_llm_script;
  std::optional<std::filesystem::path> mock_generator_script;
  std::optional<std::filesystem::path> mock_encoder_fixture;
  std::size_t mock_audio_dim = 32;
  std::size_t mock_video_dim = 32;
};

struct CliConfig {
  PipelineConfig pipeline;
  RagConfig rag;
  ClientSettings clients;

  void validate() const;
};

/// Parses the key=value config format. `[section]` lines prefix the keys
/// that follow with "section."; relative paths resolve against base_dir.
CliConfig parse_config(std::string_view text, const std::filesystem::path& base_dir,
                       CliConfig base = {});
CliConfig load_config(const std::filesystem::path& path, CliConfig base = {});

/// The rules behind --mock-clients when no script is configured: echo the
/// caption as its recaption, link its first and last words, and describe
/// every concept with one generic sentence.
std::vector<MockLlm::Rule> default_mock_script();

Clients make_clients(const ClientSettings& settings);

/// Entry point behind the vatkg executable. args excludes argv[0].
int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out,
        std::ostream& err);

}  // namespace vatkg::cli
