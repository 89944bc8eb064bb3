#include "rrm/rewardnet.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "rrm/error.hpp"
#include "rrm/random.hpp"

namespace rrm::rewardnet {

using nlohmann::json;

namespace {

constexpr double kProbEps = 1e-12;

double sigmoid(double z) {
  if (z >= 0) {
    const double e = std::exp(-z);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double clamp_prob(double p) {
  return std::min(1.0 - kProbEps, std::max(kProbEps, p));
}

double xent(double target, double p) {
  p = clamp_prob(p);
  double l = 0.0;
  if (target > 0.0) l -= target * std::log(p);
  if (target < 1.0) l -= (1.0 - target) * std::log(1.0 - p);
  return l;
}

}  // namespace

std::string to_string(ModelKind k) {
  return k == ModelKind::BradleyTerry ? "bradley_terry" : "pairwise_ranker";
}

ModelKind model_kind_from_string(const std::string& s) {
  if (s == "bradley_terry" || s == "bt") return ModelKind::BradleyTerry;
  if (s == "pairwise_ranker" || s == "pairwise")
    return ModelKind::PairwiseRanker;
  throw UsageError("unknown model kind: " + s);
}

RewardModel make_model(ModelKind kind, Schema schema) {
  RewardModel model;
  model.kind = kind;
  model.params.assign(kind == ModelKind::BradleyTerry ? pointwise_dim(schema)
                                                      : pair_dim(schema),
                      0.0);
  model.schema = std::move(schema);
  return model;
}

double reward(const RewardModel& model, const std::string& prompt,
              const std::string& response) {
  if (model.kind != ModelKind::BradleyTerry)
    throw UsageError("reward is defined for BradleyTerry models only");
  const auto f = featurize(model.schema, prompt, response);
  return dot(model.params, f);
}

double bt_prob(const RewardModel& model, const std::string& prompt,
               const std::string& y1, const std::string& y2) {
  if (model.kind != ModelKind::BradleyTerry)
    throw UsageError("bt_prob requires a BradleyTerry model");
  return sigmoid(reward(model, prompt, y1) - reward(model, prompt, y2));
}

double pairwise_prob(const RewardModel& model, const std::string& prompt,
                     const std::string& y1, const std::string& y2) {
  if (model.kind != ModelKind::PairwiseRanker)
    throw UsageError("pairwise_prob requires a PairwiseRanker model");
  CandidateTriplet c;
  c.prompt = prompt;
  c.response_a = y1;
  c.response_b = y2;
  const auto fwd = featurize_pair(model.schema, c, false);
  const auto rev = featurize_pair(model.schema, c, true);
  const double qf = sigmoid(dot(model.params, fwd));
  const double qr = sigmoid(dot(model.params, rev));
  return (qf + 1.0 - qr) / 2.0;
}

PairExample featurize_example(const RewardModel& model,
                              const CandidateTriplet& c) {
  PairExample ex;
  ex.target = c.label.p_first_wins;
  if (model.kind == ModelKind::BradleyTerry) {
    auto f1 = featurize(model.schema, c.prompt, c.response_a);
    const auto f2 = featurize(model.schema, c.prompt, c.response_b);
    for (std::size_t i = 0; i < f1.size(); ++i) f1[i] -= f2[i];
    ex.rev.resize(f1.size());
    for (std::size_t i = 0; i < f1.size(); ++i) ex.rev[i] = -f1[i];
    ex.fwd = std::move(f1);
  } else {
    ex.fwd = featurize_pair(model.schema, c, false);
    ex.rev = featurize_pair(model.schema, c, true);
  }
  return ex;
}

double example_prob(const RewardModel& model, const PairExample& ex) {
  if (model.kind == ModelKind::BradleyTerry)
    return sigmoid(dot(model.params, ex.fwd));
  const double qf = sigmoid(dot(model.params, ex.fwd));
  const double qr = sigmoid(dot(model.params, ex.rev));
  return (qf + 1.0 - qr) / 2.0;
}

double candidate_prob(const RewardModel& model, const CandidateTriplet& c) {
  return example_prob(model, featurize_example(model, c));
}

double loss(const RewardModel& model, std::span<const PairExample> batch,
            double l2) {
  if (batch.empty()) throw DataError("loss: empty batch");
  double total = 0.0;
  for (const auto& ex : batch) total += xent(ex.target, example_prob(model, ex));
  total /= static_cast<double>(batch.size());
  if (l2 > 0.0) {
    double sq = 0.0;
    for (double w : model.params) sq += w * w;
    total += 0.5 * l2 * sq;
  }
  return total;
}

double loss(const RewardModel& model,
            const std::vector<CandidateTriplet>& batch, double l2) {
  std::vector<PairExample> featurized;
  featurized.reserve(batch.size());
  for (const auto& c : batch) featurized.push_back(featurize_example(model, c));
  return loss(model, featurized, l2);
}

std::vector<double> grad(const RewardModel& model,
                         std::span<const PairExample> batch, double l2) {
  if (batch.empty()) throw DataError("grad: empty batch");
  std::vector<double> g(model.params.size(), 0.0);
  const double inv_n = 1.0 / static_cast<double>(batch.size());

  for (const auto& ex : batch) {
    if (model.kind == ModelKind::BradleyTerry) {
      const double p = sigmoid(dot(model.params, ex.fwd));
      const double coef = (p - ex.target) * inv_n;
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += coef * ex.fwd[i];
    } else {
      const double qf = sigmoid(dot(model.params, ex.fwd));
      const double qr = sigmoid(dot(model.params, ex.rev));
      const double p = clamp_prob((qf + 1.0 - qr) / 2.0);
      const double dldp = (p - ex.target) / (p * (1.0 - p));
      const double cf = 0.5 * dldp * qf * (1.0 - qf) * inv_n;
      const double cr = -0.5 * dldp * qr * (1.0 - qr) * inv_n;
      for (std::size_t i = 0; i < g.size(); ++i)
        g[i] += cf * ex.fwd[i] + cr * ex.rev[i];
    }
  }
  if (l2 > 0.0)
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += l2 * model.params[i];
  return g;
}

std::vector<double> grad(const RewardModel& model,
                         const std::vector<CandidateTriplet>& batch,
                         double l2) {
  std::vector<PairExample> featurized;
  featurized.reserve(batch.size());
  for (const auto& c : batch) featurized.push_back(featurize_example(model, c));
  return grad(model, featurized, l2);
}

TrainResult train(RewardModel model, const std::vector<CandidateTriplet>& data,
                  const TrainConfig& config) {
  if (data.empty()) throw DataError("train: empty dataset");
  if (config.learning_rate < 0.0 || config.epochs <= 0 ||
      config.batch_size <= 0 || config.l2 < 0.0)
    throw UsageError("train: invalid TrainConfig");

  std::vector<PairExample> examples;
  examples.reserve(data.size());
  for (const auto& c : data) examples.push_back(featurize_example(model, c));

  TrainResult result;
  result.initial_loss = loss(model, examples, config.l2);

  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto rng = make_rng(hash_combine(config.seed, 0x747261696eULL));

  std::vector<PairExample> batch;
  std::size_t step = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end =
          std::min(order.size(),
                   start + static_cast<std::size_t>(config.batch_size));
      batch.clear();
      for (std::size_t i = start; i < end; ++i)
        batch.push_back(examples[order[i]]);
      const auto g = grad(model, batch, config.l2);
      for (std::size_t i = 0; i < model.params.size(); ++i)
        model.params[i] -= config.learning_rate * g[i];
      ++step;
    }
    const double epoch_loss = loss(model, examples, config.l2);
    if (!std::isfinite(epoch_loss))
      throw NumericalError("train: non-finite loss at step " +
                           std::to_string(step));
    result.epoch_loss.push_back(epoch_loss);
  }
  result.model = std::move(model);
  return result;
}

EvalMetrics evaluate(const RewardModel& model,
                     const std::vector<CandidateTriplet>& data) {
  if (data.empty()) throw DataError("evaluate: empty dataset");
  EvalMetrics m;
  double total_loss = 0.0;
  std::size_t correct = 0;
  double tie_gap = 0.0;
  for (const auto& c : data) {
    const double p = candidate_prob(model, c);
    total_loss += xent(c.label.p_first_wins, p);
    if (c.label.p_first_wins == 0.5) {
      tie_gap += std::abs(p - 0.5);
      ++m.ties;
    } else {
      if ((p > 0.5) == (c.label.p_first_wins == 1.0)) ++correct;
      ++m.decisive;
    }
  }
  m.mean_loss = total_loss / static_cast<double>(data.size());
  m.accuracy = m.decisive ? static_cast<double>(correct) /
                                static_cast<double>(m.decisive)
                          : 0.0;
  m.tie_gap = m.ties ? tie_gap / static_cast<double>(m.ties) : 0.0;
  return m;
}

namespace {

json schema_to_json(const Schema& schema) {
  json out;
  if (const auto* text = std::get_if<TextSchema>(&schema)) {
    out["type"] = "text";
    out["hash_buckets"] = text->hash_buckets;
    out["hash_seed"] = text->hash_seed;
    json arts = json::array();
    for (const auto& a : text->artifacts) {
      arts.push_back({{"kind", static_cast<int>(a.kind)},
                      {"text", a.text},
                      {"close", a.close},
                      {"probability", a.probability},
                      {"name", a.name}});
    }
    out["artifacts"] = arts;
  } else {
    out["type"] = "synthetic";
    out["dim"] = std::get<SyntheticSchema>(schema).dim;
  }
  return out;
}

Schema schema_from_json(const json& j) {
  const auto type = j.at("type").get<std::string>();
  if (type == "text") {
    TextSchema schema;
    schema.hash_buckets = j.at("hash_buckets").get<std::size_t>();
    schema.hash_seed = j.at("hash_seed").get<std::uint64_t>();
    for (const auto& a : j.at("artifacts")) {
      injector::ArtifactSpec spec;
      spec.kind = static_cast<injector::ArtifactKind>(a.at("kind").get<int>());
      spec.text = a.at("text").get<std::string>();
      spec.close = a.at("close").get<std::string>();
      spec.probability = a.at("probability").get<double>();
      spec.name = a.at("name").get<std::string>();
      schema.artifacts.push_back(std::move(spec));
    }
    return schema;
  }
  if (type == "synthetic") {
    SyntheticSchema schema;
    schema.dim = j.at("dim").get<std::size_t>();
    return schema;
  }
  throw DataError("unknown schema type in checkpoint: " + type);
}

}  // namespace

void save_model(const RewardModel& model, const TrainConfig& config,
                const std::string& path) {
  json out;
  out["version"] = 1;
  out["kind"] = to_string(model.kind);
  out["schema"] = schema_to_json(model.schema);
  out["params"] = model.params;
  out["train_config"] = {{"learning_rate", config.learning_rate},
                         {"epochs", config.epochs},
                         {"batch_size", config.batch_size},
                         {"seed", config.seed},
                         {"l2", config.l2}};
  std::ofstream f(path);
  if (!f) throw DataError("cannot write checkpoint: " + path);
  f << out.dump(2) << '\n';
}

RewardModel load_model(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open checkpoint: " + path);
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    throw DataError("malformed checkpoint " + path + ": " + e.what());
  }
  if (j.value("version", 0) != 1)
    throw DataError("unsupported checkpoint version in " + path);
  RewardModel model;
  model.kind = model_kind_from_string(j.at("kind").get<std::string>());
  model.schema = schema_from_json(j.at("schema"));
  model.params = j.at("params").get<std::vector<double>>();
  const std::size_t expected = model.kind == ModelKind::BradleyTerry
                                   ? pointwise_dim(model.schema)
                                   : pair_dim(model.schema);
  if (model.params.size() != expected)
    throw DataError("checkpoint parameter size does not match schema");
  return model;
}

}  // namespace rrm::rewardnet
