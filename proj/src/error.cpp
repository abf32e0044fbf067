#include "vatkg/error.hpp"

namespace vatkg {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::ConfigError: return "ConfigError";
    case Errc::DimMismatch: return "DimMismatch";
    case Errc::ZeroVector: return "ZeroVector";
    case Errc::ZeroDim: return "ZeroDim";
    case Errc::NonFinite: return "NonFinite";
    case Errc::DuplicateId: return "DuplicateId";
    case Errc::EmptyEntries: return "EmptyEntries";
    case Errc::InvalidK: return "InvalidK";
    case Errc::IoError: return "IoError";
    case Errc::BadMagic: return "BadMagic";
    case Errc::ChecksumMismatch: return "ChecksumMismatch";
    case Errc::SchemaVersionMismatch: return "SchemaVersionMismatch";
    case Errc::SchemaError: return "SchemaError";
    case Errc::InvariantViolation: return "InvariantViolation";
    case Errc::EmptyCandidateList: return "EmptyCandidateList";
    case Errc::TooManyCandidates: return "TooManyCandidates";
    case Errc::CandidateConflict: return "CandidateConflict";
    case Errc::UnknownConcept: return "UnknownConcept";
    case Errc::UnknownSample: return "UnknownSample";
    case Errc::UnknownTriplet: return "UnknownTriplet";
    case Errc::DuplicateTriplet: return "DuplicateTriplet";
    case Errc::DescriptionIndexOutOfRange: return "DescriptionIndexOutOfRange";
    case Errc::WrongTagCount: return "WrongTagCount";
    case Errc::ZeroFrames: return "ZeroFrames";
    case Errc::ManifestParseError: return "ManifestParseError";
    case Errc::EmptyCompletion: return "EmptyCompletion";
    case Errc::NoCandidatesParsed: return "NoCandidatesParsed";
    case Errc::AllSourcesFailed: return "AllSourcesFailed";
    case Errc::LlmUnavailable: return "LlmUnavailable";
    case Errc::EncoderUnavailable: return "EncoderUnavailable";
    case Errc::UnscriptedPrompt: return "UnscriptedPrompt";
    case Errc::Unreachable: return "Unreachable";
    case Errc::BadStatus: return "BadStatus";
    case Errc::Unsupported: return "Unsupported";
    case Errc::UnknownModality: return "UnknownModality";
    case Errc::MissingDescription: return "MissingDescription";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string& message)
    : std::runtime_error(render(code, {}, message)), code_(code), message_(message) {}

Error Error::annotated(std::string tag) const {
  Error copy(code_, message_);
  copy.context_.reserve(context_.size() + 1);
  copy.context_.push_back(std::move(tag));
  copy.context_.insert(copy.context_.end(), context_.begin(), context_.end());
  static_cast<std::runtime_error&>(copy) =
      std::runtime_error(render(code_, copy.context_, message_));
  return copy;
}

std::string Error::render(Errc code, const std::vector<std::string>& context,
                          const std::string& message) {
  std::string out;
  for (const auto& tag : context) {
    out += tag;
    out += ": ";
  }
  out += errc_name(code);
  if (!message.empty()) {
    out += ": ";
    out += message;
  }
  return out;
}

bool is_unavailable(Errc code) noexcept {
  return code == Errc::LlmUnavailable || code == Errc::EncoderUnavailable ||
         code == Errc::Unreachable || code == Errc::BadStatus;
}

}  // namespace vatkg
