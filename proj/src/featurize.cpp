#include "rrm/featurize.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "rrm/error.hpp"
#include "rrm/random.hpp"

namespace rrm::rewardnet {

namespace {

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> tokens;
  std::istringstream in(text);
  std::string tok;
  while (in >> tok) tokens.push_back(std::move(tok));
  return tokens;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0.0;
  const std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) /
         static_cast<double>(v.size());
}

}  // namespace

std::size_t token_count(const std::string& text) {
  std::size_t count = 0;
  bool in_token = false;
  for (char c : text) {
    const bool ws = c == ' ' || c == '\t' || c == '\n' || c == '\r';
    if (!ws && !in_token) ++count;
    in_token = !ws;
  }
  return count;
}

std::size_t pointwise_dim(const Schema& schema) {
  if (const auto* text = std::get_if<TextSchema>(&schema)) {
    return 2 + text->artifacts.size() + text->hash_buckets + 1;
  }
  return 3;  // synthetic: [tanh(<x,y>), mean(y), 1]
}

std::size_t pair_dim(const Schema& schema) {
  if (std::holds_alternative<TextSchema>(schema))
    return 2 * pointwise_dim(schema);
  return 3;  // synthetic: [s, a, 1]
}

std::vector<double> featurize(const Schema& schema, const std::string& prompt,
                              const std::string& response) {
  if (const auto* text = std::get_if<TextSchema>(&schema)) {
    std::vector<double> f;
    f.reserve(pointwise_dim(schema));

    const auto resp_tokens = tokenize(response);
    const auto prompt_tokens = tokenize(prompt);
    std::unordered_set<std::string> prompt_set(prompt_tokens.begin(),
                                               prompt_tokens.end());

    f.push_back(std::log1p(static_cast<double>(resp_tokens.size())));

    std::size_t overlap = 0;
    for (const auto& t : resp_tokens)
      if (prompt_set.count(t)) ++overlap;
    f.push_back(prompt_set.empty()
                    ? 0.0
                    : static_cast<double>(overlap) /
                          static_cast<double>(prompt_set.size()));

    for (const auto& spec : text->artifacts)
      f.push_back(injector::detect(response, spec) ? 1.0 : 0.0);

    std::vector<double> buckets(text->hash_buckets, 0.0);
    if (!resp_tokens.empty() && text->hash_buckets > 0) {
      for (const auto& t : resp_tokens) {
        const auto h = hash_str(t, text->hash_seed);
        // Interaction-weighted bag of words: tokens shared with the prompt
        // count double in their bucket.
        buckets[h % text->hash_buckets] += prompt_set.count(t) ? 2.0 : 1.0;
      }
      for (auto& b : buckets) b /= static_cast<double>(resp_tokens.size());
    }
    f.insert(f.end(), buckets.begin(), buckets.end());

    f.push_back(1.0);
    return f;
  }

  const auto x = parse_vec(prompt);
  const auto y = parse_vec(response);
  return {std::tanh(dot(x, y)), mean(y), 1.0};
}

std::vector<double> featurize_pair(const Schema& schema,
                                   const CandidateTriplet& c, bool reversed) {
  const std::string& first = reversed ? c.response_b : c.response_a;
  const std::string& second = reversed ? c.response_a : c.response_b;

  if (std::holds_alternative<TextSchema>(schema)) {
    auto f = featurize(schema, c.prompt, first);
    const auto g = featurize(schema, c.prompt, second);
    f.insert(f.end(), g.begin(), g.end());
    return f;
  }

  const double sign = reversed ? -1.0 : 1.0;
  if (c.signals) {
    return {sign * c.signals->s, sign * c.signals->a, 1.0};
  }
  const auto x = parse_vec(c.prompt);
  const auto y1 = parse_vec(first);
  const auto y2 = parse_vec(second);
  return {s_fn(x, y1, y2), a_fn(y1, y2), 1.0};
}

std::string vec_to_string(const std::vector<double>& v) {
  std::string out;
  char buf[40];
  for (std::size_t i = 0; i < v.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", v[i]);
    if (i) out += ' ';
    out += buf;
  }
  return out;
}

std::vector<double> parse_vec(const std::string& s) {
  std::vector<double> v;
  std::istringstream in(s);
  double x;
  while (in >> x) v.push_back(x);
  return v;
}

double s_fn(const std::vector<double>& x, const std::vector<double>& y1,
            const std::vector<double>& y2) {
  return std::tanh(dot(x, y1) - dot(x, y2));
}

double a_fn(const std::vector<double>& y1, const std::vector<double>& y2) {
  return mean(y1) - mean(y2);
}

}  // namespace rrm::rewardnet
