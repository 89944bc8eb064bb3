#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "rrm/types.hpp"

namespace rrm::metrics {

// Length diagnostics for a preference dataset. Token counts use whitespace
// tokenization as the length proxy throughout.
struct LengthReport {
  std::vector<double> bin_edges;  // strictly increasing; overflow bin above
  std::vector<std::size_t> chosen_hist;
  std::vector<std::size_t> rejected_hist;
  double mean_chosen = 0.0;
  double mean_rejected = 0.0;
  double longer_fraction = 0.0;
  double shorter_fraction = 0.0;
  double equal_fraction = 0.0;
  std::size_t n = 0;
};

// Default bins: 8 equal-width bins over [0, 99th percentile], overflow above.
LengthReport length_report(const std::vector<PreferenceExample>& data,
                           std::vector<double> bin_edges = {});
LengthReport length_report(const std::vector<CandidateTriplet>& data,
                           std::vector<double> bin_edges = {});

nlohmann::json to_json(const LengthReport& report);

enum class ReportFormat { Records, Table };

// Writes results with fixed float formatting (6 significant digits) and
// sorted keys; byte-stable for fixed inputs. Table format expects an array
// of flat objects.
void emit_report(const nlohmann::json& results, const std::string& path,
                 ReportFormat format);

// Normalizes every number in the tree to 6 significant digits, matching what
// emit_report writes.
nlohmann::json normalize_numbers(const nlohmann::json& value);

}  // namespace rrm::metrics
