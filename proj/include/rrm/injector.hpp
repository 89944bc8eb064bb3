#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rrm/types.hpp"

namespace rrm::injector {

enum class ArtifactKind { Prefix, Suffix, Wrap };

// A declarative context-free artifact: a stock prefix, an appended token, or
// a wrapping marker pair, applied with the given probability.
struct ArtifactSpec {
  ArtifactKind kind = ArtifactKind::Prefix;
  std::string text;   // prefix text, suffix text, or wrap opening marker
  std::string close;  // wrap closing marker (Wrap only)
  double probability = 1.0;
  std::string name;
};

// Built-in presets: "sure-prefix", "emoji-append", "bold-wrap".
ArtifactSpec preset(const std::string& name, double probability = 1.0);

// Applies the transformation unconditionally.
std::string apply(const std::string& response, const ArtifactSpec& spec);

// Applies the transformation when coin < spec.probability; coin in [0,1).
// Repeated injection stacks.
std::string inject(const std::string& response, const ArtifactSpec& spec,
                   double coin);

enum class Side { Chosen, Rejected, Both };

struct CorruptionResult {
  std::vector<PreferenceExample> data;
  std::size_t affected = 0;
};

// Injects into the selected side of each example. Coins are drawn from a
// per-example hash of (seed, example id) so the corruption pattern is stable
// under dataset reordering.
CorruptionResult corrupt_dataset(const std::vector<PreferenceExample>& data,
                                 const ArtifactSpec& spec, Side side,
                                 std::uint64_t seed);

// Anchored signature match: prefix at position 0, suffix at the end, wrap
// markers at both ends.
bool detect(const std::string& response, const ArtifactSpec& spec);

Side side_from_string(const std::string& s);

}  // namespace rrm::injector
