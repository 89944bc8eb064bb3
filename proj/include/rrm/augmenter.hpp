#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "rrm/types.hpp"

namespace rrm::augmenter {

// Where a response in a candidate came from: the source example and whether
// it was that example's winning or losing response.
struct Origin {
  enum class Role { Winner, Loser };
  std::string example_id;
  Role role = Role::Winner;
};

// Contextual labeling rules:
//   both responses contextual to the prompt -> original winner wins;
//   exactly one contextual                  -> the contextual one wins;
//   neither contextual                      -> tie (0.5).
PrefLabel label_triplet(const std::string& prompt_example_id, const Origin& a,
                        const Origin& b);

// The 14 augmented candidates for the base prompt: 8 non-contextuals (the
// contextual response labeled winner) and 6 neutrals (tie). Response order
// within each candidate is randomized by a per-triple coin derived from
// (seed, base id), with the label adjusted.
std::vector<CandidateTriplet> augment_example(const ExampleTriple& triple,
                                              std::uint64_t seed);

// All 45 unordered candidates over the triple's 3 prompts and 6 responses.
// The 15 under the base prompt are the original plus augment_example's 14.
std::vector<CandidateTriplet> enumerate_all(const ExampleTriple& triple,
                                            std::uint64_t seed);

// The original record as a candidate, with a positional coin flip applied.
CandidateTriplet original_candidate(const PreferenceExample& ex,
                                    std::uint64_t seed);

using Scorer = std::function<double(const CandidateTriplet&)>;

// Scores a seed-deterministic fraction of the candidates and keeps the ones
// where |scored - target| >= threshold. Unscored candidates are dropped.
// Input order is preserved among the kept.
std::vector<CandidateTriplet> filter_by_difficulty(
    const std::vector<CandidateTriplet>& candidates, const Scorer& scorer,
    double threshold, double sample_fraction, std::uint64_t seed);

// Originals followed by kept augmented candidates.
std::vector<CandidateTriplet> merge(std::vector<CandidateTriplet> originals,
                                    const std::vector<CandidateTriplet>& kept);

// Seed-deterministic global shuffle applied before training.
void shuffle_training(std::vector<CandidateTriplet>& candidates,
                      std::uint64_t seed);

void save_candidates(const std::vector<CandidateTriplet>& candidates,
                     const std::string& path);
std::vector<CandidateTriplet> load_candidates(const std::string& path);

}  // namespace rrm::augmenter
