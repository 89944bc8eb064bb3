#include "rrm/augmenter.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "rrm/error.hpp"
#include "rrm/random.hpp"

namespace rrm::augmenter {

using nlohmann::json;

PrefLabel label_triplet(const std::string& prompt_example_id, const Origin& a,
                        const Origin& b) {
  const bool a_ctx = a.example_id == prompt_example_id;
  const bool b_ctx = b.example_id == prompt_example_id;
  if (a_ctx && b_ctx) {
    // Both from the prompt's own record: the dataset winner wins.
    return {a.role == Origin::Role::Winner ? 1.0 : 0.0};
  }
  if (a_ctx) return {1.0};
  if (b_ctx) return {0.0};
  return {0.5};
}

namespace {

struct Response {
  const std::string* text;
  Origin origin;
};

void check_distinct(const ExampleTriple& t) {
  if (t.base.id == t.peer1.id || t.base.id == t.peer2.id ||
      t.peer1.id == t.peer2.id) {
    throw DataError("degenerate triple: ids not pairwise distinct (" +
                    t.base.id + ", " + t.peer1.id + ", " + t.peer2.id + ")");
  }
}

std::string role_tag(Origin::Role r) {
  return r == Origin::Role::Winner ? "w" : "l";
}

CandidateTriplet make_candidate(const std::string& prompt,
                                const std::string& prompt_id,
                                const Response& first, const Response& second,
                                Provenance prov, std::string id, double coin) {
  PrefLabel label =
      label_triplet(prompt_id, first.origin, second.origin);
  CandidateTriplet c;
  c.id = std::move(id);
  c.prompt = prompt;
  c.provenance = prov;
  const Response* a = &first;
  const Response* b = &second;
  if (coin < 0.5) {
    std::swap(a, b);
    label.p_first_wins = 1.0 - label.p_first_wins;
  }
  c.response_a = *a->text;
  c.response_b = *b->text;
  c.label = label;
  c.source_ids = {prompt_id, a->origin.example_id + ":" + role_tag(a->origin.role),
                  b->origin.example_id + ":" + role_tag(b->origin.role)};
  return c;
}

double order_coin(std::uint64_t seed, const std::string& base_id,
                  std::size_t row) {
  return coin_from_hash(
      hash_combine(hash_str(base_id, seed), 0x6f726472ULL + row));
}

}  // namespace

std::vector<CandidateTriplet> augment_example(const ExampleTriple& t,
                                              std::uint64_t seed) {
  check_distinct(t);
  const Response wi{&t.base.chosen, {t.base.id, Origin::Role::Winner}};
  const Response li{&t.base.rejected, {t.base.id, Origin::Role::Loser}};
  const Response wj{&t.peer1.chosen, {t.peer1.id, Origin::Role::Winner}};
  const Response lj{&t.peer1.rejected, {t.peer1.id, Origin::Role::Loser}};
  const Response wk{&t.peer2.chosen, {t.peer2.id, Origin::Role::Winner}};
  const Response lk{&t.peer2.rejected, {t.peer2.id, Origin::Role::Loser}};

  // Non-contextuals: contextual response vs each permuted peer response.
  const std::pair<Response, Response> non_contextuals[] = {
      {wi, wj}, {wi, wk}, {wi, lj}, {wi, lk},
      {li, wj}, {li, wk}, {li, lj}, {li, lk}};
  // Neutrals: pairs of non-contextual responses.
  const std::pair<Response, Response> neutrals[] = {
      {wj, lj}, {wk, lk}, {wj, wk}, {wj, lk}, {wk, lj}, {lj, lk}};

  std::vector<CandidateTriplet> out;
  out.reserve(14);
  std::size_t row = 0;
  for (const auto& [a, b] : non_contextuals) {
    out.push_back(make_candidate(t.base.prompt, t.base.id, a, b,
                                 Provenance::NonContextual,
                                 t.base.id + "-aug-" + std::to_string(row),
                                 order_coin(seed, t.base.id, row)));
    ++row;
  }
  for (const auto& [a, b] : neutrals) {
    out.push_back(make_candidate(t.base.prompt, t.base.id, a, b,
                                 Provenance::Neutral,
                                 t.base.id + "-aug-" + std::to_string(row),
                                 order_coin(seed, t.base.id, row)));
    ++row;
  }
  return out;
}

std::vector<CandidateTriplet> enumerate_all(const ExampleTriple& t,
                                            std::uint64_t seed) {
  check_distinct(t);
  const PreferenceExample* examples[] = {&t.base, &t.peer1, &t.peer2};
  std::vector<Response> responses;
  for (const auto* ex : examples) {
    responses.push_back({&ex->chosen, {ex->id, Origin::Role::Winner}});
    responses.push_back({&ex->rejected, {ex->id, Origin::Role::Loser}});
  }

  std::vector<CandidateTriplet> out;
  out.reserve(45);
  std::size_t row = 0;
  for (const auto* ex : examples) {
    for (std::size_t u = 0; u < responses.size(); ++u) {
      for (std::size_t v = u + 1; v < responses.size(); ++v) {
        const bool u_ctx = responses[u].origin.example_id == ex->id;
        const bool v_ctx = responses[v].origin.example_id == ex->id;
        Provenance prov = Provenance::Neutral;
        if (u_ctx && v_ctx)
          prov = Provenance::Original;
        else if (u_ctx || v_ctx)
          prov = Provenance::NonContextual;
        out.push_back(make_candidate(
            ex->prompt, ex->id, responses[u], responses[v], prov,
            t.base.id + "-enum-" + std::to_string(row),
            order_coin(seed, t.base.id, 0x1000 + row)));
        ++row;
      }
    }
  }
  return out;
}

CandidateTriplet original_candidate(const PreferenceExample& ex,
                                    std::uint64_t seed) {
  const Response w{&ex.chosen, {ex.id, Origin::Role::Winner}};
  const Response l{&ex.rejected, {ex.id, Origin::Role::Loser}};
  return make_candidate(ex.prompt, ex.id, w, l, Provenance::Original,
                        ex.id + "-orig", order_coin(seed, ex.id, 0x2000));
}

std::vector<CandidateTriplet> filter_by_difficulty(
    const std::vector<CandidateTriplet>& candidates, const Scorer& scorer,
    double threshold, double sample_fraction, std::uint64_t seed) {
  if (threshold <= 0.0 || threshold >= 1.0)
    throw UsageError("filter threshold must lie in (0,1)");
  if (sample_fraction <= 0.0 || sample_fraction > 1.0)
    throw UsageError("sample_fraction must lie in (0,1]");

  const std::size_t n = candidates.size();
  const auto k = static_cast<std::size_t>(
      std::llround(sample_fraction * static_cast<double>(n)));
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  auto rng = make_rng(hash_combine(seed, 0x66696c74ULL));
  std::shuffle(idx.begin(), idx.end(), rng);

  std::vector<char> sampled(n, 0);
  for (std::size_t i = 0; i < k; ++i) sampled[idx[i]] = 1;

  std::vector<CandidateTriplet> kept;
  for (std::size_t i = 0; i < n; ++i) {
    if (!sampled[i]) continue;
    double p_hat;
    try {
      p_hat = scorer(candidates[i]);
    } catch (const std::exception& e) {
      throw DataError("scorer failed on candidate " + candidates[i].id + ": " +
                      e.what());
    }
    if (std::abs(p_hat - candidates[i].label.p_first_wins) >= threshold)
      kept.push_back(candidates[i]);
  }
  return kept;
}

std::vector<CandidateTriplet> merge(
    std::vector<CandidateTriplet> originals,
    const std::vector<CandidateTriplet>& kept) {
  originals.insert(originals.end(), kept.begin(), kept.end());
  return originals;
}

void shuffle_training(std::vector<CandidateTriplet>& candidates,
                      std::uint64_t seed) {
  auto rng = make_rng(hash_combine(seed, 0x73687566ULL));
  std::shuffle(candidates.begin(), candidates.end(), rng);
}

void save_candidates(const std::vector<CandidateTriplet>& candidates,
                     const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write candidate file: " + path);
  for (const auto& c : candidates) {
    json rec;
    rec["id"] = c.id;
    rec["context"] = c.prompt;
    rec["response_w"] = c.response_a;
    rec["response_l"] = c.response_b;
    rec["p_first_wins"] = c.label.p_first_wins;
    rec["neutral"] = c.provenance == Provenance::Neutral;
    rec["provenance"] = to_string(c.provenance);
    rec["source_ids"] = c.source_ids;
    if (c.signals) {
      rec["features"] = {{"s", c.signals->s}, {"a", c.signals->a}};
    }
    out << rec.dump() << '\n';
  }
}

std::vector<CandidateTriplet> load_candidates(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open candidate file: " + path);
  std::vector<CandidateTriplet> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
      CandidateTriplet c;
      c.id = rec.value("id", "line-" + std::to_string(lineno));
      c.prompt = rec.at("context").get<std::string>();
      c.response_a = rec.at("response_w").get<std::string>();
      c.response_b = rec.at("response_l").get<std::string>();
      c.label.p_first_wins = rec.value("p_first_wins", 1.0);
      c.provenance = provenance_from_string(rec.value("provenance", "original"));
      if (rec.contains("source_ids"))
        c.source_ids = rec["source_ids"].get<std::vector<std::string>>();
      if (rec.contains("features")) {
        c.signals = SyntheticSignals{rec["features"].at("s").get<double>(),
                                     rec["features"].at("a").get<double>()};
      }
      out.push_back(std::move(c));
    } catch (const json::exception& e) {
      throw DataError(path + ":" + std::to_string(lineno) +
                      ": malformed candidate record: " + e.what());
    }
  }
  return out;
}

}  // namespace rrm::augmenter
