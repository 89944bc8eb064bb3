#include "rrm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "rrm/error.hpp"
#include "rrm/featurize.hpp"

namespace rrm::metrics {

using nlohmann::json;

namespace {

std::vector<double> default_bins(const std::vector<std::size_t>& counts) {
  std::vector<std::size_t> sorted = counts;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t p99_idx =
      std::min(sorted.size() - 1,
               static_cast<std::size_t>(0.99 * static_cast<double>(sorted.size())));
  const double hi = std::max<double>(1.0, static_cast<double>(sorted[p99_idx]));
  std::vector<double> edges;
  for (int i = 0; i <= 8; ++i) edges.push_back(hi * static_cast<double>(i) / 8.0);
  return edges;
}

std::vector<std::size_t> histogram(const std::vector<std::size_t>& counts,
                                   const std::vector<double>& edges) {
  // edges define |edges|-1 interior bins plus one overflow bin.
  std::vector<std::size_t> hist(edges.size(), 0);
  for (auto c : counts) {
    const double v = static_cast<double>(c);
    std::size_t bin = edges.size() - 1;  // overflow
    for (std::size_t b = 0; b + 1 < edges.size(); ++b) {
      if (v >= edges[b] && v < edges[b + 1]) {
        bin = b;
        break;
      }
    }
    ++hist[bin];
  }
  return hist;
}

LengthReport build_report(const std::vector<std::size_t>& chosen,
                          const std::vector<std::size_t>& rejected,
                          std::vector<double> edges) {
  if (chosen.empty()) throw DataError("length_report: empty dataset");
  for (std::size_t i = 1; i < edges.size(); ++i)
    if (edges[i] <= edges[i - 1])
      throw UsageError("length_report: bin edges must be strictly increasing");

  LengthReport report;
  report.n = chosen.size();
  if (edges.empty()) {
    std::vector<std::size_t> all = chosen;
    all.insert(all.end(), rejected.begin(), rejected.end());
    edges = default_bins(all);
  }
  report.bin_edges = edges;
  report.chosen_hist = histogram(chosen, edges);
  report.rejected_hist = histogram(rejected, edges);

  std::size_t longer = 0, shorter = 0, equal = 0;
  double sum_c = 0.0, sum_r = 0.0;
  for (std::size_t i = 0; i < chosen.size(); ++i) {
    sum_c += static_cast<double>(chosen[i]);
    sum_r += static_cast<double>(rejected[i]);
    if (chosen[i] > rejected[i])
      ++longer;
    else if (chosen[i] < rejected[i])
      ++shorter;
    else
      ++equal;
  }
  const double n = static_cast<double>(report.n);
  report.mean_chosen = sum_c / n;
  report.mean_rejected = sum_r / n;
  report.longer_fraction = static_cast<double>(longer) / n;
  report.shorter_fraction = static_cast<double>(shorter) / n;
  report.equal_fraction = static_cast<double>(equal) / n;
  return report;
}

}  // namespace

LengthReport length_report(const std::vector<PreferenceExample>& data,
                           std::vector<double> bin_edges) {
  std::vector<std::size_t> chosen, rejected;
  chosen.reserve(data.size());
  rejected.reserve(data.size());
  for (const auto& ex : data) {
    chosen.push_back(rewardnet::token_count(ex.chosen));
    rejected.push_back(rewardnet::token_count(ex.rejected));
  }
  return build_report(chosen, rejected, std::move(bin_edges));
}

LengthReport length_report(const std::vector<CandidateTriplet>& data,
                           std::vector<double> bin_edges) {
  std::vector<std::size_t> chosen, rejected;
  chosen.reserve(data.size());
  rejected.reserve(data.size());
  for (const auto& c : data) {
    // Tie-labeled candidates count response_a as the chosen side.
    const bool a_wins = c.label.p_first_wins >= 0.5;
    chosen.push_back(rewardnet::token_count(a_wins ? c.response_a : c.response_b));
    rejected.push_back(
        rewardnet::token_count(a_wins ? c.response_b : c.response_a));
  }
  return build_report(chosen, rejected, std::move(bin_edges));
}

json to_json(const LengthReport& report) {
  return {{"bin_edges", report.bin_edges},
          {"chosen_hist", report.chosen_hist},
          {"rejected_hist", report.rejected_hist},
          {"mean_chosen", report.mean_chosen},
          {"mean_rejected", report.mean_rejected},
          {"longer_fraction", report.longer_fraction},
          {"shorter_fraction", report.shorter_fraction},
          {"equal_fraction", report.equal_fraction},
          {"n", report.n}};
}

namespace {

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace

json normalize_numbers(const json& value) {
  if (value.is_number_float()) {
    return json::parse(format_number(value.get<double>()));
  }
  if (value.is_object()) {
    json out = json::object();
    for (const auto& [k, v] : value.items()) out[k] = normalize_numbers(v);
    return out;
  }
  if (value.is_array()) {
    json out = json::array();
    for (const auto& v : value) out.push_back(normalize_numbers(v));
    return out;
  }
  return value;
}

void emit_report(const json& results, const std::string& path,
                 ReportFormat format) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write report: " + path);
  const json normalized = normalize_numbers(results);

  if (format == ReportFormat::Records) {
    out << normalized.dump(2) << '\n';
    return;
  }

  // Delimited table: array of flat objects with a shared sorted header.
  std::vector<std::string> keys;
  if (normalized.is_array() && !normalized.empty()) {
    for (const auto& [k, v] : normalized.front().items()) keys.push_back(k);
    std::sort(keys.begin(), keys.end());
  }
  for (std::size_t i = 0; i < keys.size(); ++i)
    out << (i ? "\t" : "") << keys[i];
  out << '\n';
  if (!normalized.is_array()) return;
  for (const auto& row : normalized) {
    for (std::size_t i = 0; i < keys.size(); ++i) {
      if (i) out << '\t';
      const auto& cell = row.at(keys[i]);
      if (cell.is_string())
        out << cell.get<std::string>();
      else
        out << cell.dump();
    }
    out << '\n';
  }
}

}  // namespace rrm::metrics
