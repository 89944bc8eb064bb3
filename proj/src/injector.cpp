#include "rrm/injector.hpp"

#include "rrm/error.hpp"
#include "rrm/random.hpp"

namespace rrm::injector {

ArtifactSpec preset(const std::string& name, double probability) {
  ArtifactSpec spec;
  spec.probability = probability;
  spec.name = name;
  if (name == "sure-prefix") {
    spec.kind = ArtifactKind::Prefix;
    spec.text = "Sure, here is the response: ";
  } else if (name == "emoji-append") {
    spec.kind = ArtifactKind::Suffix;
    spec.text = " \xF0\x9F\x98\x8A";  // U+1F60A
  } else if (name == "bold-wrap") {
    spec.kind = ArtifactKind::Wrap;
    spec.text = "**";
    spec.close = "**";
  } else {
    throw UsageError("unknown artifact preset: " + name +
                     " (valid: sure-prefix, emoji-append, bold-wrap)");
  }
  return spec;
}

std::string apply(const std::string& response, const ArtifactSpec& spec) {
  switch (spec.kind) {
    case ArtifactKind::Prefix:
      return spec.text + response;
    case ArtifactKind::Suffix:
      return response + spec.text;
    case ArtifactKind::Wrap:
      if (spec.text.empty() || spec.close.empty())
        throw UsageError("wrap markers must be non-empty");
      return spec.text + response + spec.close;
  }
  return response;
}

std::string inject(const std::string& response, const ArtifactSpec& spec,
                   double coin) {
  if (coin < spec.probability) return apply(response, spec);
  return response;
}

CorruptionResult corrupt_dataset(const std::vector<PreferenceExample>& data,
                                 const ArtifactSpec& spec, Side side,
                                 std::uint64_t seed) {
  CorruptionResult result;
  result.data = data;
  for (auto& ex : result.data) {
    bool hit = false;
    if (side == Side::Chosen || side == Side::Both) {
      double coin = coin_from_hash(hash_str(ex.id, hash_combine(seed, 1)));
      if (coin < spec.probability) {
        ex.chosen = apply(ex.chosen, spec);
        hit = true;
      }
    }
    if (side == Side::Rejected || side == Side::Both) {
      double coin = coin_from_hash(hash_str(ex.id, hash_combine(seed, 2)));
      if (coin < spec.probability) {
        ex.rejected = apply(ex.rejected, spec);
        hit = true;
      }
    }
    if (hit) ++result.affected;
  }
  return result;
}

bool detect(const std::string& response, const ArtifactSpec& spec) {
  switch (spec.kind) {
    case ArtifactKind::Prefix:
      return response.size() >= spec.text.size() &&
             response.compare(0, spec.text.size(), spec.text) == 0;
    case ArtifactKind::Suffix:
      return response.size() >= spec.text.size() &&
             response.compare(response.size() - spec.text.size(),
                              spec.text.size(), spec.text) == 0;
    case ArtifactKind::Wrap:
      return response.size() >= spec.text.size() + spec.close.size() &&
             response.compare(0, spec.text.size(), spec.text) == 0 &&
             response.compare(response.size() - spec.close.size(),
                              spec.close.size(), spec.close) == 0;
  }
  return false;
}

Side side_from_string(const std::string& s) {
  if (s == "chosen") return Side::Chosen;
  if (s == "rejected") return Side::Rejected;
  if (s == "both") return Side::Both;
  throw UsageError("unknown side: " + s + " (valid: chosen, rejected, both)");
}

}  // namespace rrm::injector
