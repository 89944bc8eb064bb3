#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "rrm/injector.hpp"
#include "rrm/types.hpp"

namespace rrm::rewardnet {

// Explicit text features: log token length, prompt-overlap ratio, one
// indicator per registered artifact, hashed bag-of-words buckets, bias.
struct TextSchema {
  std::vector<injector::ArtifactSpec> artifacts;
  std::size_t hash_buckets = 16;
  std::uint64_t hash_seed = 0;
};

// Features for synthetic pair instances: the contextual signal s, the
// artifact signal a, and a bias term. Candidates carrying stored signals use
// them directly; otherwise s and a are recomputed from the serialized
// vectors via s_fn / a_fn (noise-free).
struct SyntheticSchema {
  std::size_t dim = 4;
};

using Schema = std::variant<TextSchema, SyntheticSchema>;

// Index of the artifact signal inside synthetic pair features.
inline constexpr std::size_t kSyntheticArtifactIndex = 1;

std::size_t pointwise_dim(const Schema& schema);
std::size_t pair_dim(const Schema& schema);

// Deterministic per-response features (Bradley-Terry path).
std::vector<double> featurize(const Schema& schema, const std::string& prompt,
                              const std::string& response);

// Directional pair features (pairwise-ranker path). For text, this is the
// concatenation of the two pointwise vectors; reversing swaps the halves.
std::vector<double> featurize_pair(const Schema& schema,
                                   const CandidateTriplet& c, bool reversed);

std::size_t token_count(const std::string& text);

// Serialization of numeric vectors used by the synthetic corpus; lossless
// round trip.
std::string vec_to_string(const std::vector<double>& v);
std::vector<double> parse_vec(const std::string& s);

// Fixed nonlinear signal functions of the synthetic generator.
double s_fn(const std::vector<double>& x, const std::vector<double>& y1,
            const std::vector<double>& y2);
double a_fn(const std::vector<double>& y1, const std::vector<double>& y2);

}  // namespace rrm::rewardnet
