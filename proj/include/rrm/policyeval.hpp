#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "rrm/injector.hpp"
#include "rrm/rewardnet.hpp"

namespace rrm::policyeval {

struct CandidateSet {
  std::string prompt;
  std::vector<std::string> candidates;  // size >= 2
};

// Symmetrized P(y1 beats y2 | prompt).
using PairScorer = std::function<double(
    const std::string& prompt, const std::string& y1, const std::string& y2)>;

PairScorer make_scorer(const rewardnet::RewardModel& model);

// Each candidate's total win probability over all C(N,2) pairings.
std::vector<double> total_win_scores(const PairScorer& scorer,
                                     const CandidateSet& set);

// Argmax of total win probability; ties broken by lowest index.
std::size_t bon_select(const PairScorer& scorer, const CandidateSet& set);

// Single-elimination alternative to all-pairs aggregation, for ablation.
std::size_t bon_select_bracket(const PairScorer& scorer,
                               const CandidateSet& set);

// (argmax, argmin) of total win scores; errors when all scores are equal.
std::pair<std::size_t, std::size_t> best_worst_pair(const PairScorer& scorer,
                                                    const CandidateSet& set);

// Categorical policy over each prompt's finite candidate list, with a frozen
// reference copy taken at construction.
struct ToyPolicy {
  std::map<std::string, std::vector<double>> logits;
  std::map<std::string, std::vector<double>> ref_logits;
};

ToyPolicy make_policy(const std::vector<CandidateSet>& sets);

struct DpoPair {
  std::string prompt;
  std::size_t chosen = 0;
  std::size_t rejected = 0;
};

// -log sigmoid(beta * (log-ratio(chosen) - log-ratio(rejected))), computed
// with a numerically stable log-softmax.
double dpo_loss(const ToyPolicy& policy, const DpoPair& pair, double beta);

// Analytic gradient of mean dpo_loss with respect to the policy logits.
std::map<std::string, std::vector<double>> dpo_grad(
    const ToyPolicy& policy, const std::vector<DpoPair>& pairs, double beta);

struct DpoTrainResult {
  ToyPolicy policy;
  std::vector<double> loss_trace;  // mean loss after each epoch
};

DpoTrainResult dpo_train(ToyPolicy policy, const std::vector<DpoPair>& pairs,
                         const rewardnet::TrainConfig& config, double beta);

struct CurvePoint {
  double rate = 0.0;
  double proportion = 0.0;
  std::size_t count = 0;
  double half_width = 0.0;  // 95% normal-approximation half width
};

// For each rate, injects the artifact into each of the first N candidates
// independently, runs best-of-N selection, and reports the fraction of
// winners where the artifact is detected.
std::vector<CurvePoint> artifact_rate_curve(
    const PairScorer& scorer, const std::vector<CandidateSet>& prompt_sets,
    const injector::ArtifactSpec& spec, const std::vector<double>& rates,
    std::size_t n, std::uint64_t seed);

void save_candidate_sets(const std::vector<CandidateSet>& sets,
                         const std::string& path);
std::vector<CandidateSet> load_candidate_sets(const std::string& path);

}  // namespace rrm::policyeval
