#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rrm/types.hpp"

namespace rrm::corpus {

// Reads a line-delimited dataset. Each line is one JSON object with fields
// "context", "response_w", "response_l" and an optional "id" (synthesized
// from the line number when absent). Throws DataError on malformed lines
// (message carries the line number) and on duplicate ids.
std::vector<PreferenceExample> load_preferences(const std::string& path);

void save_preferences(const std::vector<PreferenceExample>& data,
                      const std::string& path);

// Samples two permutations of [0, n) such that neither has a fixed point and
// they disagree at every index. Deterministic in (n, seed). Requires n >= 3.
PermutationPair sample_permutations(std::size_t n, std::uint64_t seed);

// Aligns each record with its two permuted peers: triple i is
// (data[i], data[sigma1(i)], data[sigma2(i)]). Requires perms sampled for
// this dataset's size.
std::vector<ExampleTriple> expand(const std::vector<PreferenceExample>& data,
                                  const PermutationPair& perms);

}  // namespace rrm::corpus
