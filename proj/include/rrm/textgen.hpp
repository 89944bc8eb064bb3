#pragma once

#include <cstdint>
#include <vector>

#include "rrm/policyeval.hpp"
#include "rrm/types.hpp"

namespace rrm::textgen {

// Synthetic word-salad corpus generator. Response quality is the fraction of
// tokens drawn from the prompt's vocabulary, so prompt-overlap is the
// genuine contextual signal.
struct TextGenConfig {
  std::size_t n_examples = 1000;
  std::size_t vocab = 200;
  std::size_t prompt_len = 8;
  std::size_t min_response_len = 8;
  std::size_t max_response_len = 16;
  double label_noise = 0.25;  // P(lower-quality response marked chosen)
  std::uint64_t seed = 0;
};

std::vector<PreferenceExample> generate_corpus(const TextGenConfig& config);

// Fresh prompts, each with n_candidates responses of independent random
// quality.
std::vector<policyeval::CandidateSet> generate_candidate_sets(
    std::size_t n_prompts, std::size_t n_candidates,
    const TextGenConfig& config);

}  // namespace rrm::textgen
