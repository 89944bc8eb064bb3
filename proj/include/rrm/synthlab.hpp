#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rrm/rewardnet.hpp"
#include "rrm/types.hpp"

namespace rrm::synthlab {

// Perfectly correlated artifact: a = beta_as * s + alpha_a exactly.
struct PerfectCorr {
  double beta_as = 1.0;  // must be positive
  double alpha_a = 0.0;
};

struct CausalConfig {
  double beta_s = 1.0;
  double beta_a = 0.0;
  double alpha = 0.0;
  double sigma_s = 0.0;
  double sigma_a = 0.0;
  std::optional<PerfectCorr> coupling;  // nullopt = independent artifact noise
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::size_t dim = 4;
};

// One draw from the causal generator: prompt and response vectors, the
// observable pair signals (s, a), and the preference label c for (y1, y2).
struct SyntheticInstance {
  std::vector<double> x;
  std::vector<double> y1;
  std::vector<double> y2;
  double s = 0.0;
  double a = 0.0;
  int c = 0;  // 1 iff y1 preferred
};

// Seed-deterministic sampler. s = s_fn(x,y1,y2) + N(0, sigma_s);
// a = a_fn(y1,y2) + N(0, sigma_a) or the exact affine function of s under
// PerfectCorr; c ~ Bernoulli(sigmoid(beta_s*s + beta_a*a + alpha)).
std::vector<SyntheticInstance> generate(const CausalConfig& config);

// P(c=1 | instance) under the config's coefficients, using the instance's
// observed (s, a).
double predict_prob(const CausalConfig& config, const SyntheticInstance& inst);

// The exactly equivalent beta_a = 0 parameterization of a PerfectCorr model:
// absorbing a = beta_as*s + alpha_a gives beta_s' = beta_s + beta_a*beta_as
// and alpha' = alpha + beta_a*alpha_a.
CausalConfig reparametrize_to_h0(const CausalConfig& h1);

// Max over instances of |P_h0(c=1) - P_h1(c=1)|. The two configs must share
// the same coupling.
double likelihood_equivalence(const CausalConfig& h0, const CausalConfig& h1,
                              const std::vector<SyntheticInstance>& data);

// Instances as preference records: responses serialized as numeric vectors,
// chosen/rejected by the label c.
std::vector<PreferenceExample> to_preferences(
    const std::vector<SyntheticInstance>& data);

// Instances as training candidates in generator order (y1 first), with
// target c and the observed signals attached.
std::vector<CandidateTriplet> original_candidates(
    const std::vector<SyntheticInstance>& data);

// Draws fresh observation noise for candidates that lack stored signals
// (augmented combinations), from the candidate's serialized vectors.
void assign_signals(std::vector<CandidateTriplet>& candidates,
                    const CausalConfig& config, std::uint64_t seed);

// Mean |p_hat(a + delta) - p_hat(a - delta)| over probes, holding the
// contextual signal fixed. Requires a synthetic-schema model.
double artifact_sensitivity(const rewardnet::RewardModel& model,
                            const std::vector<SyntheticInstance>& probes,
                            double delta);

// Mean over strata of |corr(prediction, artifact value)| within the stratum.
// Strata with constant predictions contribute 0; strata with fewer than two
// distinct artifact values are an error.
double conditional_independence_stat(const std::vector<double>& predictions,
                                     const std::vector<double>& artifact_values,
                                     const std::vector<int>& strata);

void save_instances(const std::vector<SyntheticInstance>& data,
                    const CausalConfig& config, const std::string& path);
std::vector<SyntheticInstance> load_instances(const std::string& path);

}  // namespace rrm::synthlab
