#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rrm/augmenter.hpp"
#include "rrm/corpus.hpp"
#include "rrm/error.hpp"
#include "rrm/experiment.hpp"
#include "rrm/injector.hpp"
#include "rrm/metrics.hpp"
#include "rrm/policyeval.hpp"
#include "rrm/random.hpp"
#include "rrm/rewardnet.hpp"
#include "rrm/synthlab.hpp"

namespace {

using nlohmann::json;
using namespace rrm;

rewardnet::Schema make_schema(const std::string& kind,
                              const std::vector<std::string>& artifact_names,
                              std::size_t dim) {
  if (kind == "synthetic") return rewardnet::SyntheticSchema{dim};
  if (kind != "text") throw UsageError("unknown schema: " + kind);
  rewardnet::TextSchema schema;
  for (const auto& name : artifact_names)
    schema.artifacts.push_back(injector::preset(name));
  return schema;
}

int run(int argc, char** argv) {
  CLI::App app{"Robust reward model training and evaluation toolkit"};
  app.require_subcommand(1);

  // ---- augment ----
  auto* augment = app.add_subcommand(
      "augment", "Expand a preference dataset into augmented candidates");
  std::string aug_input, aug_output;
  std::uint64_t aug_seed = 0;
  bool aug_no_neutrals = false;
  bool aug_enumerate = false;
  augment->add_option("--input", aug_input, "input JSONL dataset")->required();
  augment->add_option("--output", aug_output, "output JSONL candidates")
      ->required();
  augment->add_option("--seed", aug_seed, "random seed");
  augment->add_flag("--no-neutrals", aug_no_neutrals,
                    "drop tie-labeled augmented candidates");
  augment->add_flag("--enumerate-all", aug_enumerate,
                    "emit all 45 combinations per triple instead of 1+14");

  // ---- filter ----
  auto* filter = app.add_subcommand(
      "filter", "Difficulty-filter candidates with a trained model");
  std::string flt_input, flt_output, flt_model;
  double flt_threshold = 0.2, flt_fraction = 0.5;
  std::uint64_t flt_seed = 0;
  filter->add_option("--input", flt_input)->required();
  filter->add_option("--output", flt_output)->required();
  filter->add_option("--model", flt_model, "model checkpoint")->required();
  filter->add_option("--threshold", flt_threshold, "probability gap");
  filter->add_option("--sample-fraction", flt_fraction);
  filter->add_option("--seed", flt_seed);

  // ---- train-rm ----
  auto* train_cmd =
      app.add_subcommand("train-rm", "Train a reward model on candidates");
  std::string trn_input, trn_output;
  std::string trn_schema = "text", trn_kind = "pairwise";
  std::vector<std::string> trn_artifacts;
  std::size_t trn_dim = 4;
  rewardnet::TrainConfig trn_cfg;
  train_cmd->add_option("--input", trn_input)->required();
  train_cmd->add_option("--output", trn_output, "checkpoint path")->required();
  train_cmd->add_option("--schema", trn_schema, "text|synthetic");
  train_cmd->add_option("--kind", trn_kind, "bt|pairwise");
  train_cmd->add_option("--artifact", trn_artifacts,
                        "artifact preset to expose as a feature");
  train_cmd->add_option("--dim", trn_dim, "synthetic feature dimension");
  train_cmd->add_option("--learning-rate", trn_cfg.learning_rate);
  train_cmd->add_option("--epochs", trn_cfg.epochs);
  train_cmd->add_option("--batch-size", trn_cfg.batch_size);
  train_cmd->add_option("--l2", trn_cfg.l2);
  train_cmd->add_option("--seed", trn_cfg.seed);

  // ---- eval-rm ----
  auto* eval_cmd =
      app.add_subcommand("eval-rm", "Evaluate a reward model on candidates");
  std::string evl_input, evl_model, evl_output;
  eval_cmd->add_option("--input", evl_input)->required();
  eval_cmd->add_option("--model", evl_model)->required();
  eval_cmd->add_option("--output", evl_output, "optional report path");

  // ---- synth ----
  auto* synth = app.add_subcommand(
      "synth", "Sample a synthetic dataset from the causal generator");
  std::string syn_output;
  synthlab::CausalConfig syn_cfg;
  syn_cfg.n = 1000;
  double syn_beta_as = 0.0, syn_alpha_a = 0.0;
  bool syn_perfect = false;
  synth->add_option("--output", syn_output)->required();
  synth->add_option("--n", syn_cfg.n);
  synth->add_option("--beta-s", syn_cfg.beta_s);
  synth->add_option("--beta-a", syn_cfg.beta_a);
  synth->add_option("--alpha", syn_cfg.alpha);
  synth->add_option("--sigma-s", syn_cfg.sigma_s);
  synth->add_option("--sigma-a", syn_cfg.sigma_a);
  synth->add_option("--dim", syn_cfg.dim);
  synth->add_option("--seed", syn_cfg.seed);
  synth->add_flag("--perfect-corr", syn_perfect,
                  "couple the artifact perfectly to the contextual signal");
  synth->add_option("--beta-as", syn_beta_as);
  synth->add_option("--alpha-a", syn_alpha_a);

  // ---- inject ----
  auto* inject = app.add_subcommand(
      "inject", "Inject a context-free artifact into a dataset");
  std::string inj_input, inj_output, inj_artifact = "sure-prefix";
  std::string inj_side = "chosen";
  double inj_prob = 0.1;
  std::uint64_t inj_seed = 0;
  inject->add_option("--input", inj_input)->required();
  inject->add_option("--output", inj_output)->required();
  inject->add_option("--artifact", inj_artifact,
                     "sure-prefix|emoji-append|bold-wrap");
  inject->add_option("--probability", inj_prob);
  inject->add_option("--side", inj_side, "chosen|rejected|both");
  inject->add_option("--seed", inj_seed);

  // ---- bon ----
  auto* bon = app.add_subcommand(
      "bon", "Best-of-N selection over candidate sets");
  std::string bon_input, bon_model, bon_output;
  bon->add_option("--input", bon_input, "candidate sets JSONL")->required();
  bon->add_option("--model", bon_model)->required();
  bon->add_option("--output", bon_output, "winners report")->required();

  // ---- dpo ----
  auto* dpo = app.add_subcommand(
      "dpo", "Train a toy DPO policy on best-worst pairs");
  std::string dpo_input, dpo_model, dpo_output;
  double dpo_beta = 0.1;
  rewardnet::TrainConfig dpo_cfg;
  dpo_cfg.learning_rate = 0.5;
  dpo_cfg.epochs = 200;
  dpo->add_option("--input", dpo_input, "candidate sets JSONL")->required();
  dpo->add_option("--model", dpo_model)->required();
  dpo->add_option("--output", dpo_output, "training report")->required();
  dpo->add_option("--beta", dpo_beta);
  dpo->add_option("--learning-rate", dpo_cfg.learning_rate);
  dpo->add_option("--epochs", dpo_cfg.epochs);
  dpo->add_option("--seed", dpo_cfg.seed);

  // ---- curve ----
  auto* curve = app.add_subcommand(
      "curve", "Artifact injection-rate curve through best-of-N");
  std::string crv_input, crv_model, crv_output, crv_artifact = "sure-prefix";
  std::vector<double> crv_rates = {0.05, 0.1, 0.2, 0.5};
  std::size_t crv_n = 8;
  std::uint64_t crv_seed = 0;
  curve->add_option("--input", crv_input, "candidate sets JSONL")->required();
  curve->add_option("--model", crv_model)->required();
  curve->add_option("--output", crv_output)->required();
  curve->add_option("--artifact", crv_artifact);
  curve->add_option("--rates", crv_rates);
  curve->add_option("--n", crv_n);
  curve->add_option("--seed", crv_seed);

  // ---- stats ----
  auto* stats =
      app.add_subcommand("stats", "Length diagnostics for a dataset");
  std::string sts_input, sts_output;
  stats->add_option("--input", sts_input)->required();
  stats->add_option("--output", sts_output, "optional report path");

  // ---- run ----
  auto* run_cmd = app.add_subcommand("run", "Run a named experiment protocol");
  std::string run_config, run_protocol_name, run_outdir;
  std::vector<std::string> run_sets;
  run_cmd->add_option("--config", run_config, "JSON config file");
  run_cmd->add_option("--protocol", run_protocol_name)->required();
  run_cmd->add_option("--output-dir", run_outdir, "overrides config output_dir");
  run_cmd->add_option("--set", run_sets, "dotted-path override key=value");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // --help and --version exit 0; every other parse failure is a usage error.
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (*augment) {
    const auto data = corpus::load_preferences(aug_input);
    const auto perms = corpus::sample_permutations(data.size(), aug_seed);
    const auto triples = corpus::expand(data, perms);
    std::vector<CandidateTriplet> originals;
    std::vector<CandidateTriplet> augmented;
    for (const auto& ex : data)
      originals.push_back(augmenter::original_candidate(ex, aug_seed));
    std::size_t non_ctx = 0, neutral = 0;
    for (const auto& triple : triples) {
      auto rows = aug_enumerate ? augmenter::enumerate_all(triple, aug_seed)
                                : augmenter::augment_example(triple, aug_seed);
      for (auto& c : rows) {
        if (c.provenance == Provenance::Neutral) {
          if (aug_no_neutrals) continue;
          ++neutral;
        } else if (c.provenance == Provenance::NonContextual) {
          ++non_ctx;
        }
        augmented.push_back(std::move(c));
      }
    }
    auto merged = augmenter::merge(originals, augmented);
    augmenter::shuffle_training(merged, aug_seed);
    augmenter::save_candidates(merged, aug_output);
    std::cout << "originals=" << originals.size()
              << " non_contextual=" << non_ctx << " neutral=" << neutral
              << " total=" << merged.size() << '\n';
  } else if (*filter) {
    const auto candidates = augmenter::load_candidates(flt_input);
    const auto model = rewardnet::load_model(flt_model);
    auto scorer = [&model](const CandidateTriplet& c) {
      return rewardnet::candidate_prob(model, c);
    };
    const auto kept = augmenter::filter_by_difficulty(
        candidates, scorer, flt_threshold, flt_fraction, flt_seed);
    augmenter::save_candidates(kept, flt_output);
    std::cout << "scored=" << candidates.size() << " kept=" << kept.size()
              << '\n';
  } else if (*train_cmd) {
    const auto candidates = augmenter::load_candidates(trn_input);
    auto model =
        rewardnet::make_model(rewardnet::model_kind_from_string(trn_kind),
                              make_schema(trn_schema, trn_artifacts, trn_dim));
    const auto result = rewardnet::train(std::move(model), candidates, trn_cfg);
    rewardnet::save_model(result.model, trn_cfg, trn_output);
    std::cout << "initial_loss=" << result.initial_loss
              << " final_loss=" << result.epoch_loss.back() << '\n';
  } else if (*eval_cmd) {
    const auto candidates = augmenter::load_candidates(evl_input);
    const auto model = rewardnet::load_model(evl_model);
    const auto m = rewardnet::evaluate(model, candidates);
    json report{{"accuracy", m.accuracy},
                {"tie_gap", m.tie_gap},
                {"mean_loss", m.mean_loss},
                {"decisive", m.decisive},
                {"ties", m.ties}};
    if (!evl_output.empty())
      metrics::emit_report(report, evl_output, metrics::ReportFormat::Records);
    std::cout << report.dump() << '\n';
  } else if (*synth) {
    if (syn_perfect) {
      if (syn_beta_as <= 0.0)
        throw UsageError("--perfect-corr requires --beta-as > 0");
      syn_cfg.coupling = synthlab::PerfectCorr{syn_beta_as, syn_alpha_a};
    }
    const auto data = synthlab::generate(syn_cfg);
    synthlab::save_instances(data, syn_cfg, syn_output);
    std::cout << "generated=" << data.size() << '\n';
  } else if (*inject) {
    const auto data = corpus::load_preferences(inj_input);
    const auto spec = injector::preset(inj_artifact, inj_prob);
    const auto result = injector::corrupt_dataset(
        data, spec, injector::side_from_string(inj_side), inj_seed);
    corpus::save_preferences(result.data, inj_output);
    std::cout << "affected=" << result.affected << " of " << data.size()
              << '\n';
  } else if (*bon) {
    const auto sets = policyeval::load_candidate_sets(bon_input);
    const auto model = rewardnet::load_model(bon_model);
    const auto scorer = policyeval::make_scorer(model);
    json rows = json::array();
    for (const auto& set : sets) {
      const auto winner = policyeval::bon_select(scorer, set);
      rows.push_back({{"prompt", set.prompt},
                      {"winner_index", winner},
                      {"winner", set.candidates[winner]}});
    }
    metrics::emit_report(rows, bon_output, metrics::ReportFormat::Records);
    std::cout << "prompts=" << sets.size() << '\n';
  } else if (*dpo) {
    const auto sets = policyeval::load_candidate_sets(dpo_input);
    const auto model = rewardnet::load_model(dpo_model);
    const auto scorer = policyeval::make_scorer(model);
    std::vector<policyeval::DpoPair> pairs;
    for (const auto& set : sets) {
      const auto [best, worst] = policyeval::best_worst_pair(scorer, set);
      pairs.push_back({set.prompt, best, worst});
    }
    const auto result = policyeval::dpo_train(policyeval::make_policy(sets),
                                              pairs, dpo_cfg, dpo_beta);
    metrics::emit_report(json{{"loss_trace", result.loss_trace},
                              {"pairs", pairs.size()}},
                         dpo_output, metrics::ReportFormat::Records);
    std::cout << "final_loss=" << result.loss_trace.back() << '\n';
  } else if (*curve) {
    const auto sets = policyeval::load_candidate_sets(crv_input);
    const auto model = rewardnet::load_model(crv_model);
    const auto spec = injector::preset(crv_artifact);
    const auto points = policyeval::artifact_rate_curve(
        policyeval::make_scorer(model), sets, spec, crv_rates, crv_n, crv_seed);
    json rows = json::array();
    for (const auto& pt : points)
      rows.push_back({{"rate", pt.rate},
                      {"proportion", pt.proportion},
                      {"count", pt.count},
                      {"half_width", pt.half_width}});
    metrics::emit_report(rows, crv_output, metrics::ReportFormat::Table);
  } else if (*stats) {
    const auto data = corpus::load_preferences(sts_input);
    const auto report = metrics::length_report(data);
    const auto j = metrics::to_json(report);
    if (!sts_output.empty())
      metrics::emit_report(j, sts_output, metrics::ReportFormat::Records);
    std::cout << j.dump() << '\n';
  } else if (*run_cmd) {
    json raw = experiment::default_config_json();
    if (!run_config.empty()) {
      std::ifstream f(run_config);
      if (!f) throw UsageError("cannot open config file: " + run_config);
      json user;
      f >> user;
      raw.merge_patch(user);
    }
    for (const auto& assignment : run_sets)
      experiment::apply_override(raw, assignment);
    const auto config = experiment::parse_config(raw);
    const std::string out_dir =
        run_outdir.empty() ? config.output_dir + "/" + run_protocol_name
                           : run_outdir;
    experiment::run_protocol(run_protocol_name, config, out_dir);
    std::cout << "wrote " << out_dir << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const rrm::UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const rrm::DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const rrm::NumericalError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
