#include "rrm/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "rrm/corpus.hpp"
#include "rrm/error.hpp"
#include "rrm/metrics.hpp"
#include "rrm/random.hpp"

namespace rrm::experiment {

using nlohmann::json;

json default_config_json() {
  return json{
      {"output_dir", "out"},
      {"seeds", {{"master", 1}}},
      {"augment",
       {{"include_neutrals", true},
        {"filter",
         {{"enabled", false}, {"threshold", 0.2}, {"sample_fraction", 0.5}}}}},
      {"train",
       {{"learning_rate", 0.2},
        {"epochs", 40},
        {"batch_size", 64},
        {"l2", 1e-4}}},
      {"causal",
       {{"beta_s", 2.0},
        {"beta_a", 2.0},
        {"alpha", 0.0},
        {"sigma_s", 0.2},
        {"sigma_a", 1.0},
        {"coupling", {{"type", "independent"}}},
        {"n", 20000},
        {"dim", 4}}},
      {"artifacts", json::array({json{{"preset", "sure-prefix"}, {"probability", 0.1}}})},
      {"rates", {0.05, 0.1, 0.2, 0.5}},
      {"bon_n", 8},
      {"dpo_beta", 0.1},
      {"textgen",
       {{"n_examples", 3000},
        {"vocab", 200},
        {"prompt_len", 8},
        {"min_response_len", 8},
        {"max_response_len", 16},
        {"label_noise", 0.12}}},
      {"eval_prompts", 1200},
      {"sensitivity_probes", 4000},
      {"sensitivity_delta", 1.0},
      {"ci_strata", 60},
      {"ci_probes_per_stratum", 200}};
}

ExperimentConfig parse_config(const json& input) {
  json j = default_config_json();
  j.merge_patch(input);

  ExperimentConfig cfg;
  cfg.raw = j;
  cfg.output_dir = j.at("output_dir").get<std::string>();
  cfg.master_seed = j.at("seeds").at("master").get<std::uint64_t>();

  const auto& aug = j.at("augment");
  cfg.augment.include_neutrals = aug.at("include_neutrals").get<bool>();
  cfg.augment.filter.enabled = aug.at("filter").at("enabled").get<bool>();
  cfg.augment.filter.threshold = aug.at("filter").at("threshold").get<double>();
  cfg.augment.filter.sample_fraction =
      aug.at("filter").at("sample_fraction").get<double>();

  const auto& tr = j.at("train");
  cfg.train.learning_rate = tr.at("learning_rate").get<double>();
  cfg.train.epochs = tr.at("epochs").get<int>();
  cfg.train.batch_size = tr.at("batch_size").get<int>();
  cfg.train.l2 = tr.at("l2").get<double>();
  cfg.train.seed = cfg.master_seed;

  const auto& ca = j.at("causal");
  cfg.causal.beta_s = ca.at("beta_s").get<double>();
  cfg.causal.beta_a = ca.at("beta_a").get<double>();
  cfg.causal.alpha = ca.at("alpha").get<double>();
  cfg.causal.sigma_s = ca.at("sigma_s").get<double>();
  cfg.causal.sigma_a = ca.at("sigma_a").get<double>();
  cfg.causal.n = ca.at("n").get<std::size_t>();
  cfg.causal.dim = ca.at("dim").get<std::size_t>();
  cfg.causal.seed = cfg.master_seed;
  const auto& coupling = ca.at("coupling");
  const auto type = coupling.at("type").get<std::string>();
  if (type == "perfect_corr") {
    cfg.causal.coupling =
        synthlab::PerfectCorr{coupling.value("beta_as", 1.0),
                              coupling.value("alpha_a", 0.0)};
  } else if (type != "independent") {
    throw UsageError("unknown coupling type: " + type);
  }

  for (const auto& a : j.at("artifacts")) {
    auto spec = injector::preset(a.at("preset").get<std::string>(),
                                 a.value("probability", 1.0));
    cfg.artifacts.push_back(std::move(spec));
  }
  if (cfg.artifacts.empty())
    throw UsageError("config requires at least one artifact");

  cfg.rates = j.at("rates").get<std::vector<double>>();
  cfg.bon_n = j.at("bon_n").get<std::size_t>();
  cfg.dpo_beta = j.at("dpo_beta").get<double>();

  const auto& tg = j.at("textgen");
  cfg.textgen.n_examples = tg.at("n_examples").get<std::size_t>();
  cfg.textgen.vocab = tg.at("vocab").get<std::size_t>();
  cfg.textgen.prompt_len = tg.at("prompt_len").get<std::size_t>();
  cfg.textgen.min_response_len = tg.at("min_response_len").get<std::size_t>();
  cfg.textgen.max_response_len = tg.at("max_response_len").get<std::size_t>();
  cfg.textgen.label_noise = tg.at("label_noise").get<double>();
  cfg.textgen.seed = cfg.master_seed;

  cfg.eval_prompts = j.at("eval_prompts").get<std::size_t>();
  cfg.sensitivity_probes = j.at("sensitivity_probes").get<std::size_t>();
  cfg.sensitivity_delta = j.at("sensitivity_delta").get<double>();
  cfg.ci_strata = j.at("ci_strata").get<std::size_t>();
  cfg.ci_probes_per_stratum = j.at("ci_probes_per_stratum").get<std::size_t>();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw UsageError("cannot open config file: " + path);
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    throw UsageError("malformed config " + path + ": " + e.what());
  }
  return parse_config(j);
}

std::string config_hash(const json& j) {
  const auto h = hash_str(j.dump());
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

void apply_override(json& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos)
    throw UsageError("override must be key.path=value: " + assignment);
  const std::string path = assignment.substr(0, eq);
  const std::string value = assignment.substr(eq + 1);

  json* node = &config;
  std::size_t start = 0;
  for (;;) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot - start);
    if (key.empty()) throw UsageError("bad override path: " + path);
    if (dot == std::string::npos) {
      json parsed;
      try {
        parsed = json::parse(value);
      } catch (const json::exception&) {
        parsed = value;
      }
      (*node)[key] = parsed;
      return;
    }
    node = &(*node)[key];
    start = dot + 1;
  }
}

// ---- Pipeline building blocks -------------------------------------------

std::vector<CandidateTriplet> augment_dataset(
    const std::vector<PreferenceExample>& data, bool include_neutrals,
    std::uint64_t seed) {
  const auto perms = corpus::sample_permutations(data.size(), seed);
  const auto triples = corpus::expand(data, perms);
  std::vector<CandidateTriplet> out;
  out.reserve(triples.size() * 14);
  for (const auto& triple : triples) {
    for (auto& c : augmenter::augment_example(triple, seed)) {
      if (!include_neutrals && c.provenance == Provenance::Neutral) continue;
      out.push_back(std::move(c));
    }
  }
  return out;
}

std::vector<CandidateTriplet> original_candidates(
    const std::vector<PreferenceExample>& data, std::uint64_t seed) {
  std::vector<CandidateTriplet> out;
  out.reserve(data.size());
  for (const auto& ex : data)
    out.push_back(augmenter::original_candidate(ex, seed));
  return out;
}

// ---- Protocols ------------------------------------------------------------

Prop1Result run_prop1(const ExperimentConfig& config) {
  Prop1Result result;
  result.n = std::max<std::size_t>(config.causal.n, 100000);

  // Perfectly correlated artifact: the beta_a = 1 model and its
  // reparametrized beta_a = 0 twin are indistinguishable.
  synthlab::CausalConfig h1 = config.causal;
  h1.n = result.n;
  h1.beta_a = 1.0;
  h1.coupling = synthlab::PerfectCorr{2.0, 1.0};
  h1.seed = hash_combine(config.master_seed, 0x70313aULL);
  const auto data_pc = synthlab::generate(h1);
  const auto h0 = synthlab::reparametrize_to_h0(h1);
  result.gap_perfect_corr = synthlab::likelihood_equivalence(h0, h1, data_pc);

  // Independent artifact noise: the same two parameterizations separate.
  synthlab::CausalConfig h1_ind = h1;
  h1_ind.coupling.reset();
  h1_ind.sigma_a = std::max(1.0, config.causal.sigma_a);
  h1_ind.seed = hash_combine(config.master_seed, 0x70313bULL);
  synthlab::CausalConfig h0_ind = h1_ind;
  h0_ind.beta_s = h0.beta_s;
  h0_ind.alpha = h0.alpha;
  h0_ind.beta_a = 0.0;
  const auto data_ind = synthlab::generate(h1_ind);
  result.gap_independent =
      synthlab::likelihood_equivalence(h0_ind, h1_ind, data_ind);
  return result;
}

namespace {

rewardnet::RewardModel train_synthetic_model(
    const std::vector<CandidateTriplet>& data,
    const rewardnet::TrainConfig& train, std::size_t dim) {
  auto model = rewardnet::make_model(rewardnet::ModelKind::PairwiseRanker,
                                     rewardnet::SyntheticSchema{dim});
  return rewardnet::train(std::move(model), data, train).model;
}

// Conditional-independence probes: fixed (y1, y2) strata with fresh prompts
// and fresh observation noise per probe.
void ci_probe_stats(const rewardnet::RewardModel& model,
                    const std::vector<synthlab::SyntheticInstance>& held_out,
                    const ExperimentConfig& config, std::uint64_t seed,
                    double* stat) {
  std::vector<double> preds, artifacts;
  std::vector<int> strata;
  auto rng = make_rng(hash_combine(seed, 0x6369ULL));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::normal_distribution<double> s_noise(0.0, config.causal.sigma_s);
  std::normal_distribution<double> a_noise(0.0, config.causal.sigma_a);

  const std::size_t n_strata =
      std::min(config.ci_strata, held_out.size());
  for (std::size_t k = 0; k < n_strata; ++k) {
    const auto& inst = held_out[k];
    for (std::size_t m = 0; m < config.ci_probes_per_stratum; ++m) {
      std::vector<double> x(config.causal.dim);
      for (auto& v : x) v = normal(rng);
      const double s =
          rewardnet::s_fn(x, inst.y1, inst.y2) +
          (config.causal.sigma_s > 0 ? s_noise(rng) : 0.0);
      const double a = rewardnet::a_fn(inst.y1, inst.y2) +
                       (config.causal.sigma_a > 0 ? a_noise(rng) : 0.0);
      CandidateTriplet c;
      c.signals = SyntheticSignals{s, a};
      preds.push_back(rewardnet::candidate_prob(model, c));
      artifacts.push_back(a);
      strata.push_back(static_cast<int>(k));
    }
  }
  *stat = synthlab::conditional_independence_stat(preds, artifacts, strata);
}

}  // namespace

Prop2Result run_prop2(const ExperimentConfig& config) {
  synthlab::CausalConfig causal = config.causal;
  causal.seed = hash_combine(config.master_seed, 0x703261ULL);
  const auto instances = synthlab::generate(causal);

  auto originals = synthlab::original_candidates(instances);

  // RM: originals only.
  Prop2Result result;
  result.n_train_rm = originals.size();
  result.rm = train_synthetic_model(originals, config.train, causal.dim);

  // RRM: originals plus the augmented expansion, with fresh observation
  // noise assigned to the augmented combinations.
  const auto prefs = synthlab::to_preferences(instances);
  auto augmented = augment_dataset(prefs, config.augment.include_neutrals,
                                   hash_combine(config.master_seed, 0x703262ULL));
  synthlab::assign_signals(augmented, causal,
                           hash_combine(config.master_seed, 0x703263ULL));
  auto merged = augmenter::merge(originals, augmented);
  augmenter::shuffle_training(merged, config.master_seed);
  result.n_train_rrm = merged.size();
  result.rrm = train_synthetic_model(merged, config.train, causal.dim);

  // Held-out probes from the same generator.
  synthlab::CausalConfig probe_cfg = causal;
  probe_cfg.n = std::max(config.sensitivity_probes,
                         config.ci_strata);
  probe_cfg.seed = hash_combine(config.master_seed, 0x703264ULL);
  const auto probes = synthlab::generate(probe_cfg);

  result.sens_rm =
      synthlab::artifact_sensitivity(result.rm, probes, config.sensitivity_delta);
  result.sens_rrm =
      synthlab::artifact_sensitivity(result.rrm, probes, config.sensitivity_delta);

  ci_probe_stats(result.rm, probes, config,
                 hash_combine(config.master_seed, 0x703265ULL), &result.ci_rm);
  ci_probe_stats(result.rrm, probes, config,
                 hash_combine(config.master_seed, 0x703265ULL), &result.ci_rrm);
  return result;
}

CurveResult run_artifact_curve(
    const ExperimentConfig& config,
    const std::vector<injector::ArtifactSpec>& train_specs,
    const injector::ArtifactSpec& eval_spec, std::size_t bon_n) {
  auto corpus_data = textgen::generate_corpus(config.textgen);

  // Corrupt the chosen side with each training artifact in sequence.
  std::size_t spec_index = 0;
  for (const auto& spec : train_specs) {
    auto corrupted = injector::corrupt_dataset(
        corpus_data, spec, injector::Side::Chosen,
        hash_combine(config.master_seed, 0xc0ULL + spec_index++));
    corpus_data = std::move(corrupted.data);
  }

  rewardnet::TextSchema schema;
  schema.artifacts = train_specs;
  if (std::none_of(train_specs.begin(), train_specs.end(),
                   [&](const auto& s) { return s.name == eval_spec.name; }))
    schema.artifacts.push_back(eval_spec);

  const auto seed = hash_combine(config.master_seed, 0x637576ULL);
  auto originals = original_candidates(corpus_data, seed);

  auto rm = rewardnet::make_model(rewardnet::ModelKind::PairwiseRanker, schema);
  rm = rewardnet::train(std::move(rm), originals, config.train).model;

  auto augmented =
      augment_dataset(corpus_data, config.augment.include_neutrals, seed);
  if (config.augment.filter.enabled) {
    auto scorer = [&rm](const CandidateTriplet& c) {
      return rewardnet::candidate_prob(rm, c);
    };
    augmented = augmenter::filter_by_difficulty(
        augmented, scorer, config.augment.filter.threshold,
        config.augment.filter.sample_fraction, config.master_seed);
  }
  auto merged = augmenter::merge(originals, augmented);
  augmenter::shuffle_training(merged, config.master_seed);
  auto rrm = rewardnet::make_model(rewardnet::ModelKind::PairwiseRanker, schema);
  rrm = rewardnet::train(std::move(rrm), merged, config.train).model;

  textgen::TextGenConfig eval_gen = config.textgen;
  eval_gen.seed = hash_combine(config.master_seed, 0x657667ULL);
  const auto sets =
      textgen::generate_candidate_sets(config.eval_prompts, bon_n, eval_gen);

  CurveResult result;
  result.bon_n = bon_n;
  result.artifact = eval_spec.name;
  result.rm = policyeval::artifact_rate_curve(
      policyeval::make_scorer(rm), sets, eval_spec, config.rates, bon_n,
      hash_combine(config.master_seed, 0x72ULL));
  result.rrm = policyeval::artifact_rate_curve(
      policyeval::make_scorer(rrm), sets, eval_spec, config.rates, bon_n,
      hash_combine(config.master_seed, 0x72ULL));
  return result;
}

DpoToyResult run_dpo_toy(const ExperimentConfig& config) {
  auto corpus_data = textgen::generate_corpus(config.textgen);
  rewardnet::TextSchema schema;
  schema.artifacts = config.artifacts;
  const auto seed = hash_combine(config.master_seed, 0x64706fULL);
  auto originals = original_candidates(corpus_data, seed);
  auto rm = rewardnet::make_model(rewardnet::ModelKind::PairwiseRanker, schema);
  rm = rewardnet::train(std::move(rm), originals, config.train).model;

  textgen::TextGenConfig eval_gen = config.textgen;
  eval_gen.seed = hash_combine(config.master_seed, 0x64706f32ULL);
  const std::size_t n_prompts = std::min<std::size_t>(config.eval_prompts, 200);
  const auto sets =
      textgen::generate_candidate_sets(n_prompts, config.bon_n, eval_gen);

  const auto scorer = policyeval::make_scorer(rm);
  std::vector<policyeval::DpoPair> pairs;
  for (const auto& set : sets) {
    const auto [best, worst] = policyeval::best_worst_pair(scorer, set);
    pairs.push_back({set.prompt, best, worst});
  }

  rewardnet::TrainConfig dpo_cfg = config.train;
  dpo_cfg.learning_rate = 0.5;
  dpo_cfg.epochs = std::max(config.train.epochs, 100);
  auto trained = policyeval::dpo_train(policyeval::make_policy(sets), pairs,
                                       dpo_cfg, config.dpo_beta);

  DpoToyResult result;
  result.loss_trace = std::move(trained.loss_trace);
  result.pairs = pairs.size();
  double margin = 0.0;
  for (const auto& pair : pairs) {
    const auto& logits = trained.policy.logits.at(pair.prompt);
    margin += logits[pair.chosen] - logits[pair.rejected];
  }
  result.mean_margin = margin / static_cast<double>(pairs.size());
  return result;
}

std::vector<PreferenceExample> biased_length_corpus(std::size_t n,
                                                    std::uint64_t seed) {
  auto rng = make_rng(hash_combine(seed, 0x6c656eULL));
  std::uniform_int_distribution<std::size_t> base_len(6, 20);
  std::uniform_int_distribution<std::size_t> extra(1, 6);
  std::uniform_int_distribution<std::size_t> word_pick(0, 99);

  auto make_text = [&](std::size_t len) {
    std::string out;
    for (std::size_t i = 0; i < len; ++i) {
      if (i) out += ' ';
      out += "w" + std::to_string(word_pick(rng));
    }
    return out;
  };

  std::vector<PreferenceExample> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t rej = base_len(rng);
    std::size_t cho;
    const double frac = static_cast<double>(i) / static_cast<double>(n);
    if (frac < 0.60)
      cho = rej + extra(rng);  // chosen longer
    else if (frac < 0.95)
      cho = std::max<std::size_t>(1, rej - extra(rng));  // chosen shorter
    else
      cho = rej;  // equal length
    if (cho == rej && frac < 0.95) cho = rej > 1 ? rej - 1 : rej + 1;
    PreferenceExample ex;
    ex.id = "len-" + std::to_string(i);
    ex.prompt = make_text(6);
    ex.chosen = make_text(cho);
    ex.rejected = make_text(rej);
    out.push_back(std::move(ex));
  }
  // Deterministic shuffle so the split is not positional.
  auto shuffle_rng = make_rng(hash_combine(seed, 0x6c656e32ULL));
  std::shuffle(out.begin(), out.end(), shuffle_rng);
  return out;
}

// ---- Protocol runner -------------------------------------------------------

namespace {

json curve_to_json(const std::vector<policyeval::CurvePoint>& curve,
                   const std::string& model) {
  json rows = json::array();
  for (const auto& pt : curve) {
    rows.push_back({{"model", model},
                    {"rate", pt.rate},
                    {"proportion", pt.proportion},
                    {"count", pt.count},
                    {"half_width", pt.half_width}});
  }
  return rows;
}

void write_manifest(const std::string& protocol,
                    const ExperimentConfig& config,
                    const std::vector<std::string>& outputs,
                    const std::string& out_dir) {
  json manifest;
  manifest["protocol"] = protocol;
  manifest["config_hash"] = config_hash(config.raw);
  manifest["seeds"] = config.raw.at("seeds");
  manifest["config"] = config.raw;
  json files = json::array();
  for (const auto& f : outputs) files.push_back(f);
  manifest["outputs"] = files;
  metrics::emit_report(manifest, out_dir + "/manifest.json",
                       metrics::ReportFormat::Records);
}

}  // namespace

std::vector<std::string> protocol_names() {
  return {"prop1",          "prop2",           "artifact-curve",
          "mixed-artifact", "length-analysis", "dpo-toy"};
}

void run_protocol(const std::string& name, const ExperimentConfig& config,
                  const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  std::vector<std::string> outputs;

  if (name == "prop1") {
    const auto r = run_prop1(config);
    metrics::emit_report(json{{"gap_perfect_corr", r.gap_perfect_corr},
                              {"gap_independent", r.gap_independent},
                              {"n", r.n}},
                         out_dir + "/prop1.json",
                         metrics::ReportFormat::Records);
    outputs.push_back("prop1.json");
  } else if (name == "prop2") {
    const auto r = run_prop2(config);
    metrics::emit_report(
        json{{"sens_rm", r.sens_rm},
             {"sens_rrm", r.sens_rrm},
             {"sens_ratio", r.sens_rm > 0 ? r.sens_rrm / r.sens_rm : 0.0},
             {"ci_rm", r.ci_rm},
             {"ci_rrm", r.ci_rrm},
             {"n_train_rm", r.n_train_rm},
             {"n_train_rrm", r.n_train_rrm},
             {"rm_params", r.rm.params},
             {"rrm_params", r.rrm.params}},
        out_dir + "/prop2.json", metrics::ReportFormat::Records);
    outputs.push_back("prop2.json");
  } else if (name == "artifact-curve") {
    const auto spec = config.artifacts.front();
    const auto r = run_artifact_curve(config, {spec}, spec, config.bon_n);
    json rows = curve_to_json(r.rm, "rm");
    for (auto& row : curve_to_json(r.rrm, "rrm")) rows.push_back(row);
    metrics::emit_report(rows, out_dir + "/artifact_curve.tsv",
                         metrics::ReportFormat::Table);
    outputs.push_back("artifact_curve.tsv");
  } else if (name == "mixed-artifact") {
    const auto bold = injector::preset("bold-wrap", 0.1);
    const auto emoji = injector::preset("emoji-append", 0.1);
    for (std::size_t n : {std::size_t{8}, std::size_t{64}}) {
      const auto r = run_artifact_curve(config, {bold, emoji}, emoji, n);
      json rows = curve_to_json(r.rm, "rm");
      for (auto& row : curve_to_json(r.rrm, "rrm")) rows.push_back(row);
      const std::string file =
          "mixed_artifact_n" + std::to_string(n) + ".tsv";
      metrics::emit_report(rows, out_dir + "/" + file,
                           metrics::ReportFormat::Table);
      outputs.push_back(file);
    }
  } else if (name == "length-analysis") {
    const auto data = biased_length_corpus(
        std::max<std::size_t>(config.textgen.n_examples, 1000),
        config.master_seed);
    const auto report = metrics::length_report(data);
    metrics::emit_report(metrics::to_json(report),
                         out_dir + "/length_report.json",
                         metrics::ReportFormat::Records);
    outputs.push_back("length_report.json");
  } else if (name == "dpo-toy") {
    const auto r = run_dpo_toy(config);
    metrics::emit_report(json{{"loss_trace", r.loss_trace},
                              {"mean_margin", r.mean_margin},
                              {"pairs", r.pairs}},
                         out_dir + "/dpo_toy.json",
                         metrics::ReportFormat::Records);
    outputs.push_back("dpo_toy.json");
  } else {
    std::string valid;
    for (const auto& p : protocol_names()) valid += " " + p;
    throw UsageError("unknown protocol: " + name + " (valid:" + valid + ")");
  }

  write_manifest(name, config, outputs, out_dir);
}

}  // namespace rrm::experiment
