#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "rrm/augmenter.hpp"
#include "rrm/injector.hpp"
#include "rrm/policyeval.hpp"
#include "rrm/rewardnet.hpp"
#include "rrm/synthlab.hpp"
#include "rrm/textgen.hpp"
#include "rrm/types.hpp"

namespace rrm::experiment {

struct FilterSettings {
  bool enabled = false;
  double threshold = 0.2;
  double sample_fraction = 0.5;
};

struct AugmentSettings {
  bool include_neutrals = true;
  FilterSettings filter;
};

struct ExperimentConfig {
  nlohmann::json raw;  // the full config document, used for hashing
  std::string output_dir = "out";
  std::uint64_t master_seed = 1;
  AugmentSettings augment;
  rewardnet::TrainConfig train;
  synthlab::CausalConfig causal;
  std::vector<injector::ArtifactSpec> artifacts;
  std::vector<double> rates = {0.05, 0.1, 0.2, 0.5};
  std::size_t bon_n = 8;
  double dpo_beta = 0.1;
  textgen::TextGenConfig textgen;
  std::size_t eval_prompts = 1200;
  std::size_t sensitivity_probes = 4000;
  double sensitivity_delta = 1.0;
  std::size_t ci_strata = 60;
  std::size_t ci_probes_per_stratum = 50;
};

nlohmann::json default_config_json();
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);

// Stable hex hash of the canonical (sorted-key) config document.
std::string config_hash(const nlohmann::json& j);

// Applies a dotted-path override, e.g. "train.epochs=50". The value is
// parsed as JSON when possible, else taken as a string.
void apply_override(nlohmann::json& config, const std::string& assignment);

// ---- Pipeline building blocks -------------------------------------------

// corpus -> expand -> per-triple augmentation (neutrals optional).
std::vector<CandidateTriplet> augment_dataset(
    const std::vector<PreferenceExample>& data, bool include_neutrals,
    std::uint64_t seed);

// Originals (with positional coin flips) for a preference dataset.
std::vector<CandidateTriplet> original_candidates(
    const std::vector<PreferenceExample>& data, std::uint64_t seed);

// ---- Protocol results ----------------------------------------------------

struct Prop1Result {
  double gap_perfect_corr = 0.0;
  double gap_independent = 0.0;
  std::size_t n = 0;
};

struct Prop2Result {
  double sens_rm = 0.0;
  double sens_rrm = 0.0;
  double ci_rm = 0.0;
  double ci_rrm = 0.0;
  std::size_t n_train_rm = 0;
  std::size_t n_train_rrm = 0;
  rewardnet::RewardModel rm;
  rewardnet::RewardModel rrm;
};

struct CurveResult {
  std::vector<policyeval::CurvePoint> rm;
  std::vector<policyeval::CurvePoint> rrm;
  std::size_t bon_n = 0;
  std::string artifact;
};

struct DpoToyResult {
  std::vector<double> loss_trace;
  double mean_margin = 0.0;  // chosen-vs-rejected logit margin after training
  std::size_t pairs = 0;
};

Prop1Result run_prop1(const ExperimentConfig& config);
Prop2Result run_prop2(const ExperimentConfig& config);

// Trains RM on the artifact-corrupted text corpus and RRM on its augmented
// expansion, then sweeps injection rates through best-of-N selection.
// `train_specs` are injected into the chosen responses in sequence;
// `eval_spec` is injected and detected at evaluation time.
CurveResult run_artifact_curve(const ExperimentConfig& config,
                               const std::vector<injector::ArtifactSpec>& train_specs,
                               const injector::ArtifactSpec& eval_spec,
                               std::size_t bon_n);

DpoToyResult run_dpo_toy(const ExperimentConfig& config);

// Builds a corpus with an exact 60/35/5 longer/shorter/equal split of chosen
// response lengths, for length-bias diagnostics.
std::vector<PreferenceExample> biased_length_corpus(std::size_t n,
                                                    std::uint64_t seed);

// Runs a named protocol ("prop1", "prop2", "artifact-curve",
// "mixed-artifact", "length-analysis", "dpo-toy") and writes its report
// files and manifest under out_dir.
void run_protocol(const std::string& name, const ExperimentConfig& config,
                  const std::string& out_dir);

std::vector<std::string> protocol_names();

}  // namespace rrm::experiment
