#include "rrm/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <unordered_set>

#include <json.hpp>

#include "rrm/error.hpp"
#include "rrm/random.hpp"

namespace rrm {

std::string to_string(Provenance p) {
  switch (p) {
    case Provenance::Original: return "original";
    case Provenance::NonContextual: return "non_contextual";
    case Provenance::Neutral: return "neutral";
  }
  return "original";
}

Provenance provenance_from_string(const std::string& s) {
  if (s == "original") return Provenance::Original;
  if (s == "non_contextual") return Provenance::NonContextual;
  if (s == "neutral") return Provenance::Neutral;
  throw DataError("unknown provenance: " + s);
}

}  // namespace rrm

namespace rrm::corpus {

using nlohmann::json;

std::vector<PreferenceExample> load_preferences(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset file: " + path);

  std::vector<PreferenceExample> out;
  std::unordered_set<std::string> seen_ids;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw DataError(path + ":" + std::to_string(lineno) +
                      ": malformed record: " + e.what());
    }
    PreferenceExample ex;
    try {
      ex.prompt = rec.at("context").get<std::string>();
      ex.chosen = rec.at("response_w").get<std::string>();
      ex.rejected = rec.at("response_l").get<std::string>();
    } catch (const json::exception& e) {
      throw DataError(path + ":" + std::to_string(lineno) +
                      ": missing or invalid field: " + e.what());
    }
    if (rec.contains("id")) {
      ex.id = rec["id"].is_string() ? rec["id"].get<std::string>()
                                    : rec["id"].dump();
    } else {
      ex.id = "line-" + std::to_string(lineno);
    }
    if (ex.prompt.empty() || ex.chosen.empty() || ex.rejected.empty()) {
      throw DataError(path + ":" + std::to_string(lineno) +
                      ": empty prompt or response");
    }
    if (!seen_ids.insert(ex.id).second) {
      throw DataError(path + ":" + std::to_string(lineno) +
                      ": duplicate id: " + ex.id);
    }
    out.push_back(std::move(ex));
  }
  return out;
}

void save_preferences(const std::vector<PreferenceExample>& data,
                      const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write dataset file: " + path);
  for (const auto& ex : data) {
    json rec;
    rec["id"] = ex.id;
    rec["context"] = ex.prompt;
    rec["response_w"] = ex.chosen;
    rec["response_l"] = ex.rejected;
    out << rec.dump() << '\n';
  }
}

namespace {

std::vector<std::size_t> random_permutation(std::size_t n,
                                            std::mt19937_64& rng) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), std::size_t{0});
  std::shuffle(p.begin(), p.end(), rng);
  return p;
}

bool is_derangement(const std::vector<std::size_t>& p) {
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p[i] == i) return false;
  return true;
}

}  // namespace

PermutationPair sample_permutations(std::size_t n, std::uint64_t seed) {
  if (n < 3) {
    throw DataError(
        "sample_permutations requires n >= 3: two derangements that disagree "
        "everywhere do not exist for n = " + std::to_string(n));
  }
  constexpr int kMaxRetries = 100000;
  auto rng = make_rng(hash_combine(seed, 0x7065726dULL));

  PermutationPair pair;
  pair.seed = seed;

  int tries = 0;
  do {
    if (++tries > kMaxRetries)
      throw NumericalError("sample_permutations: retry budget exhausted");
    pair.sigma1 = random_permutation(n, rng);
  } while (!is_derangement(pair.sigma1));

  tries = 0;
  for (;;) {
    if (++tries > kMaxRetries)
      throw NumericalError("sample_permutations: retry budget exhausted");
    pair.sigma2 = random_permutation(n, rng);
    if (!is_derangement(pair.sigma2)) continue;
    bool disjoint = true;
    for (std::size_t i = 0; i < n; ++i) {
      if (pair.sigma2[i] == pair.sigma1[i]) {
        disjoint = false;
        break;
      }
    }
    if (disjoint) break;
  }
  return pair;
}

std::vector<ExampleTriple> expand(const std::vector<PreferenceExample>& data,
                                  const PermutationPair& perms) {
  if (perms.sigma1.size() != data.size() ||
      perms.sigma2.size() != data.size()) {
    throw DataError("expand: permutation size " +
                    std::to_string(perms.sigma1.size()) +
                    " does not match dataset size " +
                    std::to_string(data.size()));
  }
  std::vector<ExampleTriple> out;
  out.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    out.push_back({data[i], data[perms.sigma1[i]], data[perms.sigma2[i]]});
  }
  return out;
}

}  // namespace rrm::corpus
