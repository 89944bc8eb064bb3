#include "rrm/synthlab.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>

#include <json.hpp>

#include "rrm/error.hpp"
#include "rrm/random.hpp"

namespace rrm::synthlab {

using nlohmann::json;
using rewardnet::a_fn;
using rewardnet::parse_vec;
using rewardnet::s_fn;
using rewardnet::vec_to_string;

namespace {

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

std::vector<double> gaussian_vec(std::size_t d, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(d);
  for (auto& x : v) x = normal(rng);
  return v;
}

// Responses carry a prompt-aligned quality component plus isotropic noise,
// so contextual responses genuinely score higher under their own prompt.
std::vector<double> response_vec(const std::vector<double>& x,
                                 std::mt19937_64& rng) {
  std::uniform_real_distribution<double> quality(0.2, 2.0);
  std::normal_distribution<double> normal(0.0, 0.5);
  double norm = 0.0;
  for (double xi : x) norm += xi * xi;
  norm = std::sqrt(std::max(norm, 1e-12));
  const double q = quality(rng);
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    y[i] = q * x[i] / norm + normal(rng);
  return y;
}

void validate(const CausalConfig& config) {
  if (config.sigma_s < 0.0 || config.sigma_a < 0.0)
    throw UsageError("sigma_s and sigma_a must be nonnegative");
  if (config.coupling && config.coupling->beta_as <= 0.0)
    throw UsageError("PerfectCorr requires beta_as > 0");
}

double couple_artifact(const CausalConfig& config, double s, double raw_a,
                       std::mt19937_64& rng) {
  if (config.coupling)
    return config.coupling->beta_as * s + config.coupling->alpha_a;
  std::normal_distribution<double> noise(0.0, config.sigma_a);
  return raw_a + (config.sigma_a > 0.0 ? noise(rng) : 0.0);
}

}  // namespace

std::vector<SyntheticInstance> generate(const CausalConfig& config) {
  validate(config);
  auto rng = make_rng(hash_combine(config.seed, 0x73796e7468ULL));
  std::normal_distribution<double> s_noise(0.0, config.sigma_s);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<SyntheticInstance> out;
  out.reserve(config.n);
  for (std::size_t i = 0; i < config.n; ++i) {
    SyntheticInstance inst;
    inst.x = gaussian_vec(config.dim, rng);
    inst.y1 = response_vec(inst.x, rng);
    inst.y2 = response_vec(inst.x, rng);
    inst.s = s_fn(inst.x, inst.y1, inst.y2) +
             (config.sigma_s > 0.0 ? s_noise(rng) : 0.0);
    inst.a = couple_artifact(config, inst.s, a_fn(inst.y1, inst.y2), rng);
    const double p = sigmoid(config.beta_s * inst.s + config.beta_a * inst.a +
                             config.alpha);
    inst.c = unit(rng) < p ? 1 : 0;
    out.push_back(std::move(inst));
  }
  return out;
}

double predict_prob(const CausalConfig& config,
                    const SyntheticInstance& inst) {
  return sigmoid(config.beta_s * inst.s + config.beta_a * inst.a +
                 config.alpha);
}

CausalConfig reparametrize_to_h0(const CausalConfig& h1) {
  if (!h1.coupling)
    throw DataError(
        "reparametrize_to_h0 requires PerfectCorr coupling; under independent "
        "noise the two hypotheses are distinguishable");
  CausalConfig h0 = h1;
  h0.beta_s = h1.beta_s + h1.beta_a * h1.coupling->beta_as;
  h0.alpha = h1.alpha + h1.beta_a * h1.coupling->alpha_a;
  h0.beta_a = 0.0;
  return h0;
}

namespace {

bool same_coupling(const CausalConfig& a, const CausalConfig& b) {
  if (a.coupling.has_value() != b.coupling.has_value()) return false;
  if (!a.coupling) return true;
  return a.coupling->beta_as == b.coupling->beta_as &&
         a.coupling->alpha_a == b.coupling->alpha_a;
}

}  // namespace

double likelihood_equivalence(const CausalConfig& h0, const CausalConfig& h1,
                              const std::vector<SyntheticInstance>& data) {
  if (!same_coupling(h0, h1))
    throw DataError("likelihood_equivalence: coupling mismatch between configs");
  double gap = 0.0;
  for (const auto& inst : data)
    gap = std::max(gap,
                   std::abs(predict_prob(h0, inst) - predict_prob(h1, inst)));
  return gap;
}

std::vector<PreferenceExample> to_preferences(
    const std::vector<SyntheticInstance>& data) {
  std::vector<PreferenceExample> out;
  out.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& inst = data[i];
    PreferenceExample ex;
    ex.id = "syn-" + std::to_string(i);
    ex.prompt = vec_to_string(inst.x);
    ex.chosen = vec_to_string(inst.c ? inst.y1 : inst.y2);
    ex.rejected = vec_to_string(inst.c ? inst.y2 : inst.y1);
    out.push_back(std::move(ex));
  }
  return out;
}

std::vector<CandidateTriplet> original_candidates(
    const std::vector<SyntheticInstance>& data) {
  std::vector<CandidateTriplet> out;
  out.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& inst = data[i];
    CandidateTriplet c;
    c.id = "syn-" + std::to_string(i) + "-orig";
    c.prompt = vec_to_string(inst.x);
    c.response_a = vec_to_string(inst.y1);
    c.response_b = vec_to_string(inst.y2);
    c.label.p_first_wins = inst.c ? 1.0 : 0.0;
    c.provenance = Provenance::Original;
    c.source_ids = {"syn-" + std::to_string(i)};
    c.signals = SyntheticSignals{inst.s, inst.a};
    out.push_back(std::move(c));
  }
  return out;
}

void assign_signals(std::vector<CandidateTriplet>& candidates,
                    const CausalConfig& config, std::uint64_t seed) {
  validate(config);
  for (auto& c : candidates) {
    if (c.signals) continue;
    auto rng = make_rng(hash_str(c.id, hash_combine(seed, 0x7369676eULL)));
    std::normal_distribution<double> s_noise(0.0, config.sigma_s);
    const auto x = parse_vec(c.prompt);
    const auto y1 = parse_vec(c.response_a);
    const auto y2 = parse_vec(c.response_b);
    const double s =
        s_fn(x, y1, y2) + (config.sigma_s > 0.0 ? s_noise(rng) : 0.0);
    const double a = couple_artifact(config, s, a_fn(y1, y2), rng);
    c.signals = SyntheticSignals{s, a};
  }
}

double artifact_sensitivity(const rewardnet::RewardModel& model,
                            const std::vector<SyntheticInstance>& probes,
                            double delta) {
  if (!std::holds_alternative<rewardnet::SyntheticSchema>(model.schema))
    throw DataError(
        "artifact_sensitivity: model schema does not expose an artifact "
        "feature");
  if (probes.empty()) throw DataError("artifact_sensitivity: no probes");

  auto prob_at = [&](const SyntheticInstance& inst, double a) {
    rewardnet::PairExample ex;
    if (model.kind == rewardnet::ModelKind::PairwiseRanker) {
      ex.fwd = {inst.s, a, 1.0};
      ex.rev = {-inst.s, -a, 1.0};
    } else {
      const double t = std::tanh(std::inner_product(
                           inst.x.begin(), inst.x.end(), inst.y1.begin(), 0.0)) -
                       std::tanh(std::inner_product(
                           inst.x.begin(), inst.x.end(), inst.y2.begin(), 0.0));
      ex.fwd = {t, a, 0.0};
      ex.rev = {-t, -a, 0.0};
    }
    return rewardnet::example_prob(model, ex);
  };

  double total = 0.0;
  for (const auto& inst : probes) {
    total += std::abs(prob_at(inst, inst.a + delta) -
                      prob_at(inst, inst.a - delta));
  }
  return total / static_cast<double>(probes.size());
}

double conditional_independence_stat(
    const std::vector<double>& predictions,
    const std::vector<double>& artifact_values,
    const std::vector<int>& strata) {
  if (predictions.size() != artifact_values.size() ||
      predictions.size() != strata.size())
    throw DataError("conditional_independence_stat: size mismatch");

  std::map<int, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < strata.size(); ++i)
    groups[strata[i]].push_back(i);
  if (groups.size() < 2)
    throw DataError("conditional_independence_stat: need at least 2 strata");

  std::vector<int> degenerate;
  double total = 0.0;
  for (const auto& [key, idx] : groups) {
    std::set<double> distinct;
    for (auto i : idx) distinct.insert(artifact_values[i]);
    if (distinct.size() < 2) {
      degenerate.push_back(key);
      continue;
    }
    const double n = static_cast<double>(idx.size());
    double mp = 0.0, ma = 0.0;
    for (auto i : idx) {
      mp += predictions[i];
      ma += artifact_values[i];
    }
    mp /= n;
    ma /= n;
    double spa = 0.0, spp = 0.0, saa = 0.0;
    for (auto i : idx) {
      const double dp = predictions[i] - mp;
      const double da = artifact_values[i] - ma;
      spa += dp * da;
      spp += dp * dp;
      saa += da * da;
    }
    if (spp == 0.0) continue;  // constant predictions: zero correlation
    total += std::abs(spa / std::sqrt(spp * saa));
  }
  if (!degenerate.empty()) {
    std::string msg =
        "conditional_independence_stat: degenerate strata (single artifact "
        "value):";
    for (int k : degenerate) msg += " " + std::to_string(k);
    throw DataError(msg);
  }
  return total / static_cast<double>(groups.size());
}

void save_instances(const std::vector<SyntheticInstance>& data,
                    const CausalConfig& config, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write synthetic dataset: " + path);
  const std::string coupling = config.coupling ? "perfect_corr" : "independent";
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& inst = data[i];
    const double sign = inst.c ? 1.0 : -1.0;
    json rec;
    rec["id"] = "syn-" + std::to_string(i);
    rec["context"] = vec_to_string(inst.x);
    rec["response_w"] = vec_to_string(inst.c ? inst.y1 : inst.y2);
    rec["response_l"] = vec_to_string(inst.c ? inst.y2 : inst.y1);
    rec["latent"] = {{"s", sign * inst.s},
                     {"a", sign * inst.a},
                     {"coupling", coupling}};
    out << rec.dump() << '\n';
  }
}

std::vector<SyntheticInstance> load_instances(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open synthetic dataset: " + path);
  std::vector<SyntheticInstance> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const json rec = json::parse(line);
      SyntheticInstance inst;
      inst.x = parse_vec(rec.at("context").get<std::string>());
      inst.y1 = parse_vec(rec.at("response_w").get<std::string>());
      inst.y2 = parse_vec(rec.at("response_l").get<std::string>());
      inst.s = rec.at("latent").at("s").get<double>();
      inst.a = rec.at("latent").at("a").get<double>();
      inst.c = 1;  // stored in (chosen, rejected) order
      out.push_back(std::move(inst));
    } catch (const json::exception& e) {
      throw DataError(path + ":" + std::to_string(lineno) +
                      ": malformed synthetic record: " + e.what());
    }
  }
  return out;
}

}  // namespace rrm::synthlab
