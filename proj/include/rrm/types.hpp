#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace rrm {

// One record of a pairwise human-feedback dataset.
struct PreferenceExample {
  std::string id;
  std::string prompt;    // serialized field name: "context"
  std::string chosen;    // serialized field name: "response_w"
  std::string rejected;  // serialized field name: "response_l"
};

// Two permutations of [0, n) with no fixed points and no pointwise agreement.
struct PermutationPair {
  std::vector<std::size_t> sigma1;
  std::vector<std::size_t> sigma2;
  std::uint64_t seed = 0;
};

// A dataset record together with its two permuted peers.
struct ExampleTriple {
  PreferenceExample base;
  PreferenceExample peer1;
  PreferenceExample peer2;
};

enum class Provenance { Original, NonContextual, Neutral };

std::string to_string(Provenance p);
Provenance provenance_from_string(const std::string& s);

// Soft preference target, restricted to {0, 0.5, 1}. 0.5 encodes a tie.
struct PrefLabel {
  double p_first_wins = 0.5;
};

// Pair-level observable signals attached to candidates built from the
// synthetic generator: the contextual signal s and the artifact signal a.
struct SyntheticSignals {
  double s = 0.0;
  double a = 0.0;
};

// A pair-comparison training instance: prompt, two responses, soft label.
struct CandidateTriplet {
  std::string id;
  std::string prompt;
  std::string response_a;
  std::string response_b;
  PrefLabel label;
  Provenance provenance = Provenance::Original;
  std::vector<std::string> source_ids;
  std::optional<SyntheticSignals> signals;
};

}  // namespace rrm
