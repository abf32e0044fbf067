#pragma once

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>
#include <vector>

#include "vatkg/cli.hpp"
#include "vatkg/embed_index.hpp"
#include "vatkg/error.hpp"

namespace vatkg::test {

inline std::filesystem::path fixtures() { return VATKG_FIXTURES; }
inline std::filesystem::path e2e() { return fixtures() / "e2e"; }

/// Fresh directory removed on scope exit.
class TempDir {
 public:
  TempDir() {
    static std::mt19937_64 rng{std::random_device{}()};
    path_ = std::filesystem::temp_directory_path() / ("vatkg-test-" + std::to_string(rng()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
}

inline std::vector<float> random_values(std::mt19937_64& rng, std::size_t dim) {
  std::normal_distribution<float> dist(0.0f, 1.0f);
  std::vector<float> v(dim);
  for (auto& x : v) x = dist(rng);
  return v;
}

inline EmbeddingVector random_vector(std::mt19937_64& rng, std::size_t dim) {
  return EmbeddingVector(random_values(rng, dim));
}

/// Mock clients scripted by the end-to-end fixture.
inline cli::CliConfig e2e_config() { return cli::load_config(e2e() / "vatkg.conf"); }
inline Clients e2e_clients() { return cli::make_clients(e2e_config().clients); }

/// A loopback port with nothing listening, so connects are refused at once.
inline int closed_port() {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  socklen_t len = sizeof addr;
  ::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr);
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  ::close(fd);
  return ntohs(addr.sin_port);
}

template <typename Fn>
Errc error_code_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  throw std::logic_error("expected a vatkg::Error");
}

}  // namespace vatkg::test

#define EXPECT_ERRC(expr, errc) EXPECT_EQ(::vatkg::test::error_code_of([&] { (void)(expr); }), (errc))
