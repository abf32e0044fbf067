#pragma once

#include <array>
#include <atomic>
#include <filesystem>
#include <string_view>

#include "vatkg/embed_index.hpp"

namespace vatkg {

enum class Modality { Audio = 0, Video = 1, Text = 2, AudioVideo = 3 };

inline constexpr std::array<Modality, 4> kModalities = {Modality::Audio, Modality::Video,
                                                        Modality::Text, Modality::AudioVideo};

std::string_view modality_name(Modality m) noexcept;
/// Accepts audio | video | text | audio_video (also "av", "joint").
Modality parse_modality(std::string_view name);
/// File name of a modality's index inside a build directory.
std::string_view index_file_name(Modality m) noexcept;

/// One triplet index per modality, keyed by triplet id. Search goes through
/// search(), which counts accesses per modality so routing is observable.
class TripletIndexes {
 public:
  TripletIndexes(FlatIndex audio, FlatIndex video, FlatIndex text, FlatIndex joint);
  TripletIndexes(const TripletIndexes& other);
  TripletIndexes& operator=(const TripletIndexes& other);

  const FlatIndex& get(Modality m) const noexcept;

  std::vector<RetrievalHit> search(Modality m, const EmbeddingVector& query, std::size_t k,
                                   std::optional<double> threshold) const;

  std::uint64_t accesses(Modality m) const noexcept;
  void reset_accesses() noexcept;

 private:
  std::array<FlatIndex, 4> indexes_;
  mutable std::array<std::atomic<std::uint64_t>, 4> accesses_{};
};

void save_indexes(const TripletIndexes& indexes, const std::filesystem::path& dir);
TripletIndexes load_indexes(const std::filesystem::path& dir);

}  // namespace vatkg
