#include "vatkg/triplet_indexes.hpp"

#include "vatkg/error.hpp"

namespace vatkg {

std::string_view modality_name(Modality m) noexcept {
  switch (m) {
    case Modality::Audio: return "audio";
    case Modality::Video: return "video";
    case Modality::Text: return "text";
    case Modality::AudioVideo: return "audio_video";
  }
  return "?";
}

Modality parse_modality(std::string_view name) {
  if (name == "audio") return Modality::Audio;
  if (name == "video") return Modality::Video;
  if (name == "text") return Modality::Text;
  if (name == "audio_video" || name == "av" || name == "joint") return Modality::AudioVideo;
  throw Error(Errc::UnknownModality, "'" + std::string(name) + "'");
}

std::string_view index_file_name(Modality m) noexcept {
  switch (m) {
    case Modality::Audio: return "index_audio.vkgidx";
    case Modality::Video: return "index_video.vkgidx";
    case Modality::Text: return "index_text.vkgidx";
    case Modality::AudioVideo: return "index_joint.vkgidx";
  }
  return "";
}

TripletIndexes::TripletIndexes(FlatIndex audio, FlatIndex video, FlatIndex text, FlatIndex joint)
    : indexes_{std::move(audio), std::move(video), std::move(text), std::move(joint)} {}

TripletIndexes::TripletIndexes(const TripletIndexes& other) : indexes_(other.indexes_) {}

TripletIndexes& TripletIndexes::operator=(const TripletIndexes& other) {
  indexes_ = other.indexes_;
  reset_accesses();
  return *this;
}

const FlatIndex& TripletIndexes::get(Modality m) const noexcept {
  return indexes_[static_cast<std::size_t>(m)];
}

std::vector<RetrievalHit> TripletIndexes::search(Modality m, const EmbeddingVector& query,
                                                 std::size_t k,
                                                 std::optional<double> threshold) const {
  accesses_[static_cast<std::size_t>(m)].fetch_add(1);
  return get(m).search(query, k, threshold);
}

std::uint64_t TripletIndexes::accesses(Modality m) const noexcept {
  return accesses_[static_cast<std::size_t>(m)].load();
}

void TripletIndexes::reset_accesses() noexcept {
  for (auto& a : accesses_) a.store(0);
}

void save_indexes(const TripletIndexes& indexes, const std::filesystem::path& dir) {
  for (auto m : kModalities) save_index(indexes.get(m), dir / index_file_name(m));
}

TripletIndexes load_indexes(const std::filesystem::path& dir) {
  auto load = [&](Modality m) {
    try {
      return load_index(dir / index_file_name(m));
    } catch (const Error& e) {
      throw e.annotated(std::string(modality_name(m)) + " index");
    }
  };
  return TripletIndexes(load(Modality::Audio), load(Modality::Video), load(Modality::Text),
                        load(Modality::AudioVideo));
}

}  // namespace vatkg
