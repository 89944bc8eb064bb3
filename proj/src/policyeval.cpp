#include "rrm/policyeval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <numeric>
#include <unordered_map>
#include <variant>

#include <json.hpp>

#include "rrm/error.hpp"
#include "rrm/featurize.hpp"
#include "rrm/random.hpp"

namespace rrm::policyeval {

using nlohmann::json;

namespace {

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// -log sigmoid(z), stable for large |z|.
double softplus_neg(double z) {
  if (z > 0) return std::log1p(std::exp(-z));
  return -z + std::log1p(std::exp(z));
}

void check_set(const CandidateSet& set) {
  if (set.candidates.size() < 2)
    throw DataError("candidate set requires N >= 2");
  for (const auto& c : set.candidates)
    if (c.empty()) throw DataError("candidate set contains empty response");
}

std::vector<double> log_softmax(const std::vector<double>& logits) {
  const double m = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double l : logits) sum += std::exp(l - m);
  const double lse = m + std::log(sum);
  std::vector<double> out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - lse;
  return out;
}

double pair_margin(const ToyPolicy& policy, const DpoPair& pair, double beta) {
  const auto it = policy.logits.find(pair.prompt);
  const auto rit = policy.ref_logits.find(pair.prompt);
  if (it == policy.logits.end() || rit == policy.ref_logits.end())
    throw DataError("dpo: unknown prompt: " + pair.prompt);
  const auto& lp = it->second;
  const auto& lr = rit->second;
  if (pair.chosen >= lp.size() || pair.rejected >= lp.size())
    throw DataError("dpo: candidate index out of range for prompt");
  const auto theta = log_softmax(lp);
  const auto ref = log_softmax(lr);
  return beta * ((theta[pair.chosen] - ref[pair.chosen]) -
                 (theta[pair.rejected] - ref[pair.rejected]));
}

}  // namespace

PairScorer make_scorer(const rewardnet::RewardModel& model) {
  // Text features decompose per response: a BradleyTerry reward is a single
  // dot product, and a pairwise-ranker logit splits into first-slot and
  // second-slot partial dots. Caching those per (prompt, response) makes
  // all-pairs scoring over a candidate set linear in N featurizations
  // instead of quadratic.
  if (std::holds_alternative<rewardnet::TextSchema>(model.schema)) {
    using Parts = std::pair<double, double>;
    auto cache = std::make_shared<std::unordered_map<std::string, Parts>>();
    const std::size_t d = rewardnet::pointwise_dim(model.schema);
    auto parts = [model, cache, d](const std::string& x,
                                   const std::string& y) -> Parts {
      std::string key;
      key.reserve(x.size() + y.size() + 1);
      key.append(x).push_back('\x1f');
      key.append(y);
      const auto it = cache->find(key);
      if (it != cache->end()) return it->second;
      const auto f = rewardnet::featurize(model.schema, x, y);
      double u = 0.0;
      double v = 0.0;
      for (std::size_t i = 0; i < d; ++i) {
        u += model.params[i] * f[i];
        if (model.kind == rewardnet::ModelKind::PairwiseRanker)
          v += model.params[d + i] * f[i];
      }
      return cache->emplace(std::move(key), Parts{u, v}).first->second;
    };
    if (model.kind == rewardnet::ModelKind::BradleyTerry) {
      return [parts](const std::string& x, const std::string& y1,
                     const std::string& y2) {
        return sigmoid(parts(x, y1).first - parts(x, y2).first);
      };
    }
    return [parts](const std::string& x, const std::string& y1,
                   const std::string& y2) {
      const auto [u1, v1] = parts(x, y1);
      const auto [u2, v2] = parts(x, y2);
      const double qf = sigmoid(u1 + v2);
      const double qr = sigmoid(u2 + v1);
      return (qf + 1.0 - qr) / 2.0;
    };
  }
  if (model.kind == rewardnet::ModelKind::BradleyTerry) {
    return [model](const std::string& x, const std::string& y1,
                   const std::string& y2) {
      return rewardnet::bt_prob(model, x, y1, y2);
    };
  }
  return [model](const std::string& x, const std::string& y1,
                 const std::string& y2) {
    return rewardnet::pairwise_prob(model, x, y1, y2);
  };
}

std::vector<double> total_win_scores(const PairScorer& scorer,
                                     const CandidateSet& set) {
  check_set(set);
  const std::size_t n = set.candidates.size();
  std::vector<double> scores(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double p = scorer(set.prompt, set.candidates[i], set.candidates[j]);
      scores[i] += p;
      scores[j] += 1.0 - p;
    }
  }
  return scores;
}

std::size_t bon_select(const PairScorer& scorer, const CandidateSet& set) {
  const auto scores = total_win_scores(scorer, set);
  return static_cast<std::size_t>(std::distance(
      scores.begin(), std::max_element(scores.begin(), scores.end())));
}

std::size_t bon_select_bracket(const PairScorer& scorer,
                               const CandidateSet& set) {
  check_set(set);
  std::vector<std::size_t> alive(set.candidates.size());
  std::iota(alive.begin(), alive.end(), std::size_t{0});
  while (alive.size() > 1) {
    std::vector<std::size_t> next;
    for (std::size_t i = 0; i + 1 < alive.size(); i += 2) {
      const double p = scorer(set.prompt, set.candidates[alive[i]],
                              set.candidates[alive[i + 1]]);
      next.push_back(p >= 0.5 ? alive[i] : alive[i + 1]);
    }
    if (alive.size() % 2 == 1) next.push_back(alive.back());
    alive = std::move(next);
  }
  return alive.front();
}

std::pair<std::size_t, std::size_t> best_worst_pair(const PairScorer& scorer,
                                                    const CandidateSet& set) {
  const auto scores = total_win_scores(scorer, set);
  const auto [mn, mx] = std::minmax_element(scores.begin(), scores.end());
  if (*mn == *mx)
    throw DataError("best_worst_pair: all candidates score equally");
  return {static_cast<std::size_t>(std::distance(scores.begin(), mx)),
          static_cast<std::size_t>(std::distance(scores.begin(), mn))};
}

ToyPolicy make_policy(const std::vector<CandidateSet>& sets) {
  ToyPolicy policy;
  for (const auto& set : sets) {
    check_set(set);
    policy.logits[set.prompt] = std::vector<double>(set.candidates.size(), 0.0);
  }
  policy.ref_logits = policy.logits;
  return policy;
}

double dpo_loss(const ToyPolicy& policy, const DpoPair& pair, double beta) {
  return softplus_neg(pair_margin(policy, pair, beta));
}

std::map<std::string, std::vector<double>> dpo_grad(
    const ToyPolicy& policy, const std::vector<DpoPair>& pairs, double beta) {
  if (pairs.empty()) throw DataError("dpo_grad: empty batch");
  std::map<std::string, std::vector<double>> g;
  for (const auto& [prompt, logits] : policy.logits)
    g[prompt] = std::vector<double>(logits.size(), 0.0);

  const double inv_n = 1.0 / static_cast<double>(pairs.size());
  for (const auto& pair : pairs) {
    const double z = pair_margin(policy, pair, beta);
    // d(-log sigmoid(z))/dz = sigmoid(z) - 1; the log-softmax normalizer
    // cancels between chosen and rejected.
    const double coef = (sigmoid(z) - 1.0) * beta * inv_n;
    auto& gp = g.at(pair.prompt);
    gp[pair.chosen] += coef;
    gp[pair.rejected] -= coef;
  }
  return g;
}

DpoTrainResult dpo_train(ToyPolicy policy, const std::vector<DpoPair>& pairs,
                         const rewardnet::TrainConfig& config, double beta) {
  if (pairs.empty()) throw DataError("dpo_train: empty pair list");
  if (beta < 0.0) throw UsageError("dpo_train: beta must be nonnegative");

  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto rng = make_rng(hash_combine(config.seed, 0x64706fULL));

  DpoTrainResult result;
  std::size_t step = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end =
          std::min(order.size(),
                   start + static_cast<std::size_t>(config.batch_size));
      std::vector<DpoPair> batch;
      batch.reserve(end - start);
      for (std::size_t i = start; i < end; ++i) batch.push_back(pairs[order[i]]);
      const auto g = dpo_grad(policy, batch, beta);
      for (auto& [prompt, logits] : policy.logits) {
        const auto& gp = g.at(prompt);
        for (std::size_t i = 0; i < logits.size(); ++i)
          logits[i] -= config.learning_rate * gp[i];
      }
      ++step;
    }
    double mean_loss = 0.0;
    for (const auto& pair : pairs) mean_loss += dpo_loss(policy, pair, beta);
    mean_loss /= static_cast<double>(pairs.size());
    if (!std::isfinite(mean_loss))
      throw NumericalError("dpo_train: non-finite loss at step " +
                           std::to_string(step));
    result.loss_trace.push_back(mean_loss);
  }
  result.policy = std::move(policy);
  return result;
}

std::vector<CurvePoint> artifact_rate_curve(
    const PairScorer& scorer, const std::vector<CandidateSet>& prompt_sets,
    const injector::ArtifactSpec& spec, const std::vector<double>& rates,
    std::size_t n, std::uint64_t seed) {
  for (double r : rates)
    if (r < 0.0 || r >= 1.0)
      throw UsageError("artifact_rate_curve: rates must lie in [0,1)");

  std::vector<CurvePoint> out;
  for (std::size_t ri = 0; ri < rates.size(); ++ri) {
    const double rate = rates[ri];
    std::size_t hits = 0;
    std::size_t count = 0;
    for (std::size_t si = 0; si < prompt_sets.size(); ++si) {
      const auto& base = prompt_sets[si];
      if (base.candidates.size() < n)
        throw DataError("artifact_rate_curve: candidate set smaller than N");
      CandidateSet set;
      set.prompt = base.prompt;
      set.candidates.assign(base.candidates.begin(),
                            base.candidates.begin() + n);
      auto rng = make_rng(hash_combine(hash_combine(seed, ri), si));
      std::uniform_real_distribution<double> unit(0.0, 1.0);
      injector::ArtifactSpec at_rate = spec;
      at_rate.probability = rate;
      for (auto& cand : set.candidates)
        cand = injector::inject(cand, at_rate, unit(rng));
      const std::size_t winner = bon_select(scorer, set);
      if (injector::detect(set.candidates[winner], spec)) ++hits;
      ++count;
    }
    CurvePoint pt;
    pt.rate = rate;
    pt.count = count;
    pt.proportion =
        count ? static_cast<double>(hits) / static_cast<double>(count) : 0.0;
    pt.half_width =
        count ? 1.96 * std::sqrt(pt.proportion * (1.0 - pt.proportion) /
                                 static_cast<double>(count))
              : 0.0;
    out.push_back(pt);
  }
  return out;
}

void save_candidate_sets(const std::vector<CandidateSet>& sets,
                         const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write candidate sets: " + path);
  for (const auto& set : sets) {
    json rec;
    rec["prompt"] = set.prompt;
    rec["candidates"] = set.candidates;
    out << rec.dump() << '\n';
  }
}

std::vector<CandidateSet> load_candidate_sets(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open candidate sets: " + path);
  std::vector<CandidateSet> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const json rec = json::parse(line);
      CandidateSet set;
      set.prompt = rec.at("prompt").get<std::string>();
      set.candidates = rec.at("candidates").get<std::vector<std::string>>();
      out.push_back(std::move(set));
    } catch (const json::exception& e) {
      throw DataError(path + ":" + std::to_string(lineno) +
                      ": malformed candidate set: " + e.what());
    }
  }
  return out;
}

}  // namespace rrm::policyeval
