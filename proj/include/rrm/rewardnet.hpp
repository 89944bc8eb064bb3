#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rrm/featurize.hpp"
#include "rrm/types.hpp"

namespace rrm::rewardnet {

enum class ModelKind { BradleyTerry, PairwiseRanker };

std::string to_string(ModelKind k);
ModelKind model_kind_from_string(const std::string& s);

// Linear-in-features logistic preference model. BradleyTerry scores a single
// (prompt, response); PairwiseRanker scores a directional pair and is
// symmetrized at prediction time.
struct RewardModel {
  ModelKind kind = ModelKind::BradleyTerry;
  Schema schema;
  std::vector<double> params;
};

RewardModel make_model(ModelKind kind, Schema schema);

double reward(const RewardModel& model, const std::string& prompt,
              const std::string& response);

// sigmoid(r(x,y1) - r(x,y2)); BradleyTerry only.
double bt_prob(const RewardModel& model, const std::string& prompt,
               const std::string& y1, const std::string& y2);

// Symmetrized estimate (q(x,y1,y2) + 1 - q(x,y2,y1)) / 2; PairwiseRanker
// only. Forward and reverse sum to 1 by construction.
double pairwise_prob(const RewardModel& model, const std::string& prompt,
                     const std::string& y1, const std::string& y2);

// P(first response wins), dispatching on the model kind. Candidates carrying
// synthetic signals are scored from those signals.
double candidate_prob(const RewardModel& model, const CandidateTriplet& c);

// Internal training representation: featurized directional pair.
struct PairExample {
  std::vector<double> fwd;
  std::vector<double> rev;
  double target = 0.5;
};

PairExample featurize_example(const RewardModel& model,
                              const CandidateTriplet& c);
double example_prob(const RewardModel& model, const PairExample& ex);

// Mean soft-target cross-entropy over the batch, plus l2/2 * |params|^2.
// Probabilities are clamped away from {0,1} by 1e-12.
double loss(const RewardModel& model, std::span<const PairExample> batch,
            double l2 = 0.0);
double loss(const RewardModel& model,
            const std::vector<CandidateTriplet>& batch, double l2 = 0.0);

// Analytic gradient of loss with respect to params.
std::vector<double> grad(const RewardModel& model,
                         std::span<const PairExample> batch, double l2 = 0.0);
std::vector<double> grad(const RewardModel& model,
                         const std::vector<CandidateTriplet>& batch,
                         double l2 = 0.0);

struct TrainConfig {
  double learning_rate = 0.1;
  int epochs = 200;
  int batch_size = 64;
  std::uint64_t seed = 0;
  double l2 = 1e-4;
};

struct TrainResult {
  RewardModel model;
  std::vector<double> epoch_loss;  // full-dataset loss after each epoch
  double initial_loss = 0.0;
};

// Seed-deterministic mini-batch gradient descent.
TrainResult train(RewardModel model, const std::vector<CandidateTriplet>& data,
                  const TrainConfig& config);

struct EvalMetrics {
  double accuracy = 0.0;   // over decisive labels only
  double tie_gap = 0.0;    // mean |p_hat - 0.5| over ties
  double mean_loss = 0.0;
  std::size_t decisive = 0;
  std::size_t ties = 0;
};

EvalMetrics evaluate(const RewardModel& model,
                     const std::vector<CandidateTriplet>& data);

// Versioned self-describing checkpoint.
void save_model(const RewardModel& model, const TrainConfig& config,
                const std::string& path);
RewardModel load_model(const std::string& path);

}  // namespace rrm::rewardnet
