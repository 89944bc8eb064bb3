#include "rrm/textgen.hpp"

#include <random>

#include "rrm/random.hpp"

namespace rrm::textgen {

namespace {

std::string word(std::size_t index) { return "w" + std::to_string(index); }

std::vector<std::string> make_prompt_words(const TextGenConfig& config,
                                           std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, config.vocab - 1);
  std::vector<std::string> words;
  for (std::size_t i = 0; i < config.prompt_len; ++i)
    words.push_back(word(pick(rng)));
  return words;
}

std::string join(const std::vector<std::string>& words) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out += ' ';
    out += words[i];
  }
  return out;
}

// A response of the given quality: each token comes from the prompt with
// probability `quality`, else from the whole vocabulary.
std::string make_response(const std::vector<std::string>& prompt_words,
                          double quality, const TextGenConfig& config,
                          std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> len(config.min_response_len,
                                                 config.max_response_len);
  std::uniform_int_distribution<std::size_t> vocab_pick(0, config.vocab - 1);
  std::uniform_int_distribution<std::size_t> prompt_pick(
      0, prompt_words.size() - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const std::size_t n = len(rng);
  std::vector<std::string> tokens;
  tokens.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (unit(rng) < quality)
      tokens.push_back(prompt_words[prompt_pick(rng)]);
    else
      tokens.push_back(word(vocab_pick(rng)));
  }
  return join(tokens);
}

}  // namespace

std::vector<PreferenceExample> generate_corpus(const TextGenConfig& config) {
  auto rng = make_rng(hash_combine(config.seed, 0x74657874ULL));
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<PreferenceExample> out;
  out.reserve(config.n_examples);
  for (std::size_t i = 0; i < config.n_examples; ++i) {
    const auto prompt_words = make_prompt_words(config, rng);
    const double q1 = unit(rng);
    const double q2 = unit(rng);
    std::string r1 = make_response(prompt_words, q1, config, rng);
    std::string r2 = make_response(prompt_words, q2, config, rng);
    bool first_better = q1 >= q2;
    if (unit(rng) < config.label_noise) first_better = !first_better;

    PreferenceExample ex;
    ex.id = "txt-" + std::to_string(i);
    ex.prompt = join(prompt_words);
    ex.chosen = first_better ? std::move(r1) : std::move(r2);
    ex.rejected = first_better ? std::move(r2) : std::move(r1);
    out.push_back(std::move(ex));
  }
  return out;
}

std::vector<policyeval::CandidateSet> generate_candidate_sets(
    std::size_t n_prompts, std::size_t n_candidates,
    const TextGenConfig& config) {
  auto rng = make_rng(hash_combine(config.seed, 0x63616e64ULL));
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<policyeval::CandidateSet> out;
  out.reserve(n_prompts);
  for (std::size_t i = 0; i < n_prompts; ++i) {
    const auto prompt_words = make_prompt_words(config, rng);
    policyeval::CandidateSet set;
    set.prompt = join(prompt_words);
    for (std::size_t j = 0; j < n_candidates; ++j)
      set.candidates.push_back(
          make_response(prompt_words, unit(rng), config, rng));
    out.push_back(std::move(set));
  }
  return out;
}

}  // namespace rrm::textgen
