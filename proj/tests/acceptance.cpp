// Acceptance harness: one pass/fail line per criterion, nonzero exit when
// any criterion fails.

#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "rrm/augmenter.hpp"
#include "rrm/corpus.hpp"
#include "rrm/experiment.hpp"
#include "rrm/injector.hpp"
#include "rrm/metrics.hpp"
#include "rrm/policyeval.hpp"
#include "rrm/rewardnet.hpp"
#include "rrm/synthlab.hpp"
#include "rrm/textgen.hpp"

using namespace rrm;
using nlohmann::json;

namespace {

int g_failures = 0;

void report(int criterion, bool ok, const std::string& detail) {
  std::printf("criterion %d: %s — %s\n", criterion, ok ? "PASS" : "FAIL",
              detail.c_str());
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                       start)
      .count();
}

std::string fmt(const char* format, ...) {
  char buf[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof(buf), format, args);
  va_end(args);
  return buf;
}

// Canonical candidate form, invariant to the positional coin flip.
using Canon = std::tuple<std::string, std::string, std::string, double>;
Canon canonical(const CandidateTriplet& c) {
  if (c.response_a <= c.response_b)
    return {c.prompt, c.response_a, c.response_b, c.label.p_first_wins};
  return {c.prompt, c.response_b, c.response_a, 1.0 - c.label.p_first_wins};
}

// ---- Criterion 1: augmentation cardinality and labels ---------------------

void criterion_1() {
  textgen::TextGenConfig gen;
  gen.n_examples = 1000;
  gen.seed = 17;
  const auto data = textgen::generate_corpus(gen);
  const auto perms = corpus::sample_permutations(data.size(), 17);
  const auto triples = corpus::expand(data, perms);

  bool ok = true;
  std::string why = "1000 triples: 14 rows (8+6), 45 enumerated, slice equal";
  double elapsed = 0.0;

  for (const auto& triple : triples) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto aug = augmenter::augment_example(triple, 17);
    const auto all = augmenter::enumerate_all(triple, 17);
    const auto orig = augmenter::original_candidate(triple.base, 17);
    elapsed += seconds_since(t0);

    if (aug.size() != 14 || all.size() != 45) {
      ok = false;
      why = fmt("wrong cardinality: augment=%zu enumerate=%zu", aug.size(),
                all.size());
      break;
    }

    // Row-for-row origin pairs: contextual-vs-peer rows, then the six
    // peer-pair rows, with contextual responses labeled winners.
    const std::string i = triple.base.id, j = triple.peer1.id,
                      k = triple.peer2.id;
    const std::pair<std::string, std::string> rows[] = {
        {i + ":w", j + ":w"}, {i + ":w", k + ":w"}, {i + ":w", j + ":l"},
        {i + ":w", k + ":l"}, {i + ":l", j + ":w"}, {i + ":l", k + ":w"},
        {i + ":l", j + ":l"}, {i + ":l", k + ":l"}, {j + ":w", j + ":l"},
        {k + ":w", k + ":l"}, {j + ":w", k + ":w"}, {j + ":w", k + ":l"},
        {k + ":w", j + ":l"}, {j + ":l", k + ":l"}};
    for (std::size_t row = 0; row < 14 && ok; ++row) {
      const auto& c = aug[row];
      const std::set<std::string> got{c.source_ids[1], c.source_ids[2]};
      const std::set<std::string> want{rows[row].first, rows[row].second};
      if (got != want) {
        ok = false;
        why = fmt("row %zu origin mismatch in triple %s", row, i.c_str());
      } else if (row < 8) {
        const bool first_ctx = c.source_ids[1].rfind(i + ":", 0) == 0;
        if (c.provenance != Provenance::NonContextual ||
            c.label.p_first_wins != (first_ctx ? 1.0 : 0.0)) {
          ok = false;
          why = fmt("row %zu label/provenance wrong in triple %s", row,
                    i.c_str());
        }
      } else if (c.provenance != Provenance::Neutral ||
                 c.label.p_first_wins != 0.5) {
        ok = false;
        why = fmt("row %zu should be a 0.5 tie in triple %s", row, i.c_str());
      }
    }
    if (!ok) break;

    // The base-prompt slice of the enumeration equals {original} + augmented.
    std::set<Canon> slice;
    for (const auto& c : all)
      if (c.prompt == triple.base.prompt && c.source_ids[0] == i)
        slice.insert(canonical(c));
    std::set<Canon> expected;
    expected.insert(canonical(orig));
    for (const auto& c : aug) expected.insert(canonical(c));
    if (slice != expected) {
      ok = false;
      why = fmt("enumeration slice differs from original+augmented at %s",
                i.c_str());
      break;
    }
  }

  if (ok && elapsed >= 1.0) {
    ok = false;
    why = fmt("too slow: %.3f s", elapsed);
  }
  report(1, ok, ok ? fmt("%s (%.3f s)", why.c_str(), elapsed) : why);
}

// ---- Criterion 2: coupled vs independent artifact separability ------------

void criterion_2() {
  const auto config = experiment::parse_config(json::object());
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = experiment::run_prop1(config);
  const double elapsed = seconds_since(t0);
  const bool ok =
      r.gap_perfect_corr <= 1e-12 && r.gap_independent > 0.01 && elapsed < 10.0;
  report(2, ok,
         fmt("coupled gap %.3e (<=1e-12), independent gap %.4f (>0.01), "
             "n=%zu, %.1f s (<10)",
             r.gap_perfect_corr, r.gap_independent, r.n, elapsed));
}

// ---- Criteria 3 and 8: augmentation severs the artifact pathway ----------

experiment::Prop2Result g_prop2;  // reused by criterion 8's baseline ratio

void criterion_3() {
  const auto config = experiment::parse_config(json::object());
  const auto t0 = std::chrono::steady_clock::now();
  g_prop2 = experiment::run_prop2(config);
  const double elapsed = seconds_since(t0);
  const auto& r = g_prop2;
  const bool ok = r.sens_rrm < 0.20 * r.sens_rm && r.ci_rrm < 0.1 &&
                  r.ci_rm > 0.3 && elapsed < 120.0;
  report(3, ok,
         fmt("sensitivity %.4f -> %.4f (ratio %.3f < 0.20), cond-indep "
             "%.3f -> %.3f (RM > 0.3, RRM < 0.1), %.1f s (<120)",
             r.sens_rm, r.sens_rrm,
             r.sens_rm > 0 ? r.sens_rrm / r.sens_rm : 0.0, r.ci_rm, r.ci_rrm,
             elapsed));
}

void criterion_8() {
  auto raw = json{{"augment", {{"include_neutrals", false}}}};
  const auto config = experiment::parse_config(raw);

  // Cardinality: n originals + 8n non-contextuals = 9n training candidates.
  textgen::TextGenConfig gen;
  gen.n_examples = 200;
  gen.seed = 23;
  const auto data = textgen::generate_corpus(gen);
  const auto augmented = experiment::augment_dataset(data, false, 23);
  const auto merged = augmenter::merge(
      experiment::original_candidates(data, 23), augmented);
  const bool count_ok = merged.size() == 9 * data.size();

  const auto t0 = std::chrono::steady_clock::now();
  const auto r = experiment::run_prop2(config);
  const double elapsed = seconds_since(t0);
  const bool size_ok = r.n_train_rrm == 9 * config.causal.n;
  const bool ratio_ok = r.sens_rrm < 0.35 * r.sens_rm;
  report(8, count_ok && size_ok && ratio_ok,
         fmt("no-neutrals training size %zu (=9n: %s), sensitivity ratio "
             "%.3f (<0.35), %.1f s",
             r.n_train_rrm, size_ok ? "yes" : "no",
             r.sens_rm > 0 ? r.sens_rrm / r.sens_rm : 0.0, elapsed));
}

// ---- Criterion 4: best-of-N artifact selection curves ---------------------

bool check_curve(const experiment::CurveResult& r,
                 const std::vector<double>& rates, std::string* why) {
  bool bands = true;
  for (const auto& pt : r.rm)
    if (!(pt.count > 0) || pt.half_width < 0) bands = false;
  double rm_at_01 = -1.0;
  for (const auto& pt : r.rm)
    if (pt.rate == 0.1) rm_at_01 = pt.proportion;
  const bool rm_ok = rm_at_01 >= 0.1 + 0.15;
  bool rrm_ok = true;
  double worst = 0.0;
  for (std::size_t idx = 0; idx < rates.size(); ++idx) {
    const double dev = std::abs(r.rrm[idx].proportion - rates[idx]);
    worst = std::max(worst, dev);
    if (dev > 0.05) rrm_ok = false;
  }
  *why = fmt("N=%zu %s: RM@0.1=%.3f (>=0.25), RRM max dev %.3f (<=0.05)",
             r.bon_n, r.artifact.c_str(), rm_at_01, worst);
  return rm_ok && rrm_ok && bands;
}

void criterion_4() {
  const auto config = experiment::parse_config(json::object());
  const auto prefix = injector::preset("sure-prefix", 0.1);
  const auto bold = injector::preset("bold-wrap", 0.1);
  const auto emoji = injector::preset("emoji-append", 0.1);

  bool ok = true;
  std::string detail;

  {
    const auto t0 = std::chrono::steady_clock::now();
    const auto r = experiment::run_artifact_curve(config, {prefix}, prefix, 8);
    const double elapsed = seconds_since(t0);
    std::string why;
    const bool part = check_curve(r, config.rates, &why) && elapsed < 120.0;
    ok = ok && part;
    detail += fmt("[prefix %s %.0f s] ", why.c_str(), elapsed);
  }
  for (std::size_t n : {std::size_t{8}, std::size_t{64}}) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto r =
        experiment::run_artifact_curve(config, {bold, emoji}, emoji, n);
    const double elapsed = seconds_since(t0);
    std::string why;
    const bool part = check_curve(r, config.rates, &why) && elapsed < 120.0;
    ok = ok && part;
    detail += fmt("[mixed %s %.0f s] ", why.c_str(), elapsed);
  }
  report(4, ok, detail);
}

// ---- Criterion 5: gradient oracles -----------------------------------------

void criterion_5() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(29);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<int> lab(0, 2);
  const double h = 1e-6;

  double worst_rm = 0.0;
  for (int draw = 0; draw < 100; ++draw) {
    const auto kind = draw % 2 ? rewardnet::ModelKind::BradleyTerry
                               : rewardnet::ModelKind::PairwiseRanker;
    auto model = rewardnet::make_model(kind, rewardnet::SyntheticSchema{4});
    for (auto& w : model.params) w = normal(rng);

    std::vector<CandidateTriplet> batch;
    const int batch_size = 1 + draw % 4;
    for (int b = 0; b < batch_size; ++b) {
      CandidateTriplet c;
      std::vector<double> x(4), y1(4), y2(4);
      for (auto& v : x) v = normal(rng);
      for (auto& v : y1) v = normal(rng);
      for (auto& v : y2) v = normal(rng);
      c.prompt = rewardnet::vec_to_string(x);
      c.response_a = rewardnet::vec_to_string(y1);
      c.response_b = rewardnet::vec_to_string(y2);
      c.signals = SyntheticSignals{normal(rng), normal(rng)};
      c.label.p_first_wins = 0.5 * lab(rng);
      batch.push_back(std::move(c));
    }

    const double l2 = 1e-3;
    const auto g = rewardnet::grad(model, batch, l2);
    for (std::size_t p = 0; p < model.params.size(); ++p) {
      auto up = model;
      auto dn = model;
      up.params[p] += h;
      dn.params[p] -= h;
      const double fd =
          (rewardnet::loss(up, batch, l2) - rewardnet::loss(dn, batch, l2)) /
          (2 * h);
      worst_rm = std::max(
          worst_rm, std::abs(g[p] - fd) / std::max(std::abs(fd), 1e-8));
    }
  }

  double worst_dpo = 0.0;
  for (int draw = 0; draw < 100; ++draw) {
    std::vector<policyeval::CandidateSet> sets = {
        {"p1", {"a", "b", "c"}}, {"p2", {"d", "e", "f", "g"}}};
    auto policy = policyeval::make_policy(sets);
    for (auto& [prompt, logits] : policy.logits)
      for (auto& l : logits) l = normal(rng);
    const double beta = 0.1 + 0.5 * (draw % 5);
    std::vector<policyeval::DpoPair> pairs = {
        {"p1", static_cast<std::size_t>(draw % 3),
         static_cast<std::size_t>((draw + 1) % 3)},
        {"p2", static_cast<std::size_t>(draw % 4),
         static_cast<std::size_t>((draw + 2) % 4)}};
    const auto g = policyeval::dpo_grad(policy, pairs, beta);
    auto mean_loss = [&](const policyeval::ToyPolicy& p) {
      double total = 0.0;
      for (const auto& pr : pairs) total += policyeval::dpo_loss(p, pr, beta);
      return total / static_cast<double>(pairs.size());
    };
    for (const auto& [prompt, logits] : policy.logits) {
      for (std::size_t idx = 0; idx < logits.size(); ++idx) {
        auto up = policy;
        auto dn = policy;
        up.logits.at(prompt)[idx] += h;
        dn.logits.at(prompt)[idx] -= h;
        const double fd = (mean_loss(up) - mean_loss(dn)) / (2 * h);
        // Logits outside every pair have an exactly-zero analytic gradient
        // (softmax normalizers cancel in the loss); central differences there
        // return pure cancellation noise near 1e-10, so the relative-error
        // denominator is floored at 1e-4 to compare against a meaningful
        // scale instead of that noise.
        const double denom = std::max(
            {std::abs(fd), std::abs(g.at(prompt)[idx]), 1e-4});
        worst_dpo = std::max(worst_dpo, std::abs(g.at(prompt)[idx] - fd) / denom);
      }
    }
  }

  const double elapsed = seconds_since(t0);
  const bool ok = worst_rm < 1e-5 && worst_dpo < 1e-5 && elapsed < 10.0;
  report(5, ok,
         fmt("100 draws each: reward-loss rel err %.2e, dpo rel err %.2e "
             "(<1e-5), %.1f s (<10)",
             worst_rm, worst_dpo, elapsed));
}

// ---- Criterion 6: DPO sanity ------------------------------------------------

void criterion_6() {
  bool ok = true;
  std::string why = "init ln 2, single-pair margin > 0, trace nonincreasing";

  std::vector<policyeval::CandidateSet> sets = {
      {"q1", {"r1", "r2", "r3", "r4"}}, {"q2", {"s1", "s2"}}};
  const auto policy = policyeval::make_policy(sets);
  for (const auto& set : sets) {
    for (std::size_t c = 0; c < set.candidates.size() && ok; ++c) {
      for (std::size_t rj = 0; rj < set.candidates.size() && ok; ++rj) {
        if (c == rj) continue;
        const double l =
            policyeval::dpo_loss(policy, {set.prompt, c, rj}, 0.1);
        if (std::abs(l - std::log(2.0)) > 1e-12) {
          ok = false;
          why = fmt("init loss %.17g != ln 2 at (%s, %zu, %zu)", l,
                    set.prompt.c_str(), c, rj);
        }
      }
    }
  }

  rewardnet::TrainConfig cfg;
  cfg.learning_rate = 0.4;
  cfg.epochs = 120;
  for (std::size_t c = 0; c < 4 && ok; ++c) {
    for (std::size_t rj = 0; rj < 4 && ok; ++rj) {
      if (c == rj) continue;
      std::vector<policyeval::DpoPair> single = {{"q1", c, rj}};
      const auto r =
          policyeval::dpo_train(policyeval::make_policy(sets), single, cfg,
                                0.1);
      const auto& logits = r.policy.logits.at("q1");
      if (!(logits[c] - logits[rj] > 0.0)) {
        ok = false;
        why = fmt("nonpositive margin after training pair (%zu, %zu)", c, rj);
      }
      for (std::size_t e = r.loss_trace.size() / 2 + 1;
           e < r.loss_trace.size() && ok; ++e) {
        if (r.loss_trace[e] > r.loss_trace[e - 1] + 1e-12) {
          ok = false;
          why = fmt("loss increased at epoch %zu for pair (%zu, %zu)", e, c,
                    rj);
        }
      }
    }
  }
  report(6, ok, why);
}

// ---- Criterion 7: length diagnostics ---------------------------------------

void criterion_7() {
  const std::size_t n = 3000;
  const auto data = experiment::biased_length_corpus(n, 31);
  const auto report_data = metrics::length_report(data);

  const double sigma = std::sqrt(0.6 * 0.4 / static_cast<double>(n));
  const bool longer_ok = std::abs(report_data.longer_fraction - 0.6) <=
                         3.0 * sigma;

  // Fractions recover integer counts that sum to n exactly.
  const auto count = [&](double f) {
    return static_cast<std::size_t>(
        std::llround(f * static_cast<double>(n)));
  };
  const bool norm_ok = count(report_data.longer_fraction) +
                           count(report_data.shorter_fraction) +
                           count(report_data.equal_fraction) ==
                       n;

  std::size_t chosen_mass = 0, rejected_mass = 0;
  for (auto c : report_data.chosen_hist) chosen_mass += c;
  for (auto c : report_data.rejected_hist) rejected_mass += c;
  const bool mass_ok = chosen_mass == n && rejected_mass == n;

  report(7, longer_ok && norm_ok && mass_ok,
         fmt("longer fraction %.4f (0.6 ± %.4f), normalization %s, histogram "
             "mass %zu/%zu of %zu",
             report_data.longer_fraction, 3.0 * sigma,
             norm_ok ? "exact" : "broken", chosen_mass, rejected_mass, n));
}

// ---- Criterion 9: byte-identical report bundles -----------------------------

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void criterion_9() {
  // Scaled-down config: byte-level determinism is size-independent.
  const auto config = experiment::parse_config(json{
      {"seeds", {{"master", 5}}},
      {"causal", {{"n", 1500}}},
      {"sensitivity_probes", 400},
      {"ci_strata", 15},
      {"ci_probes_per_stratum", 20},
      {"textgen", {{"n_examples", 300}}},
      {"eval_prompts", 80},
      {"train", {{"epochs", 6}}},
  });

  const auto base = std::filesystem::temp_directory_path() /
                    ("acceptance-det-" + std::to_string(::getpid()));
  bool ok = true;
  std::string why = "all six protocols byte-identical across reruns";

  for (const auto& name : experiment::protocol_names()) {
    const auto dir_a = base / (name + "-a");
    const auto dir_b = base / (name + "-b");
    experiment::run_protocol(name, config, dir_a.string());
    experiment::run_protocol(name, config, dir_b.string());

    std::set<std::string> files_a, files_b;
    for (const auto& e : std::filesystem::directory_iterator(dir_a))
      files_a.insert(e.path().filename().string());
    for (const auto& e : std::filesystem::directory_iterator(dir_b))
      files_b.insert(e.path().filename().string());
    if (files_a != files_b || files_a.empty()) {
      ok = false;
      why = fmt("%s: bundle file lists differ", name.c_str());
      break;
    }
    for (const auto& f : files_a) {
      if (slurp(dir_a / f) != slurp(dir_b / f)) {
        ok = false;
        why = fmt("%s: %s differs between reruns", name.c_str(), f.c_str());
        break;
      }
    }
    if (!ok) break;
  }
  std::error_code ec;
  std::filesystem::remove_all(base, ec);
  report(9, ok, why);
}

}  // namespace

int main() {
  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_6();
  criterion_7();
  criterion_8();
  criterion_9();
  if (g_failures) {
    std::printf("%d criterion(s) failed\n", g_failures);
    return 1;
  }
  std::printf("all 9 criteria passed\n");
  return 0;
}
