// CSV ingestion and the `test`, `power` and `cif` commands.

#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "crindep/core_model.hpp"

namespace crindep {

class IngestionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class CensorPolicy { extra_cause, drop };

std::string to_string(CensorPolicy policy);
CensorPolicy parse_censor_policy(const std::string& text);

struct IngestionPolicy {
  std::string time_column = "time";
  std::string cause_column = "cause";
  /// Rows whose status cell is in `censored_values` are censored.
  std::optional<std::string> status_column;
  /// Cause (or status) cells marking a censored row.
  std::set<std::string> censored_values{"0"};
  CensorPolicy censor_policy = CensorPolicy::extra_cause;
  /// Text labels to cause numbers; numeric labels are used as they are.
  std::map<std::string, Cause> cause_label_map;
  /// Number of event causes; inferred from the labels when unset.
  std::optional<int> k;
};

struct IngestionSummary {
  std::size_t rows = 0;
  std::size_t censored = 0;
  std::size_t dropped = 0;
  int event_causes = 0;  // k before any censoring cause is added
  std::vector<std::size_t> counts;  // per final cause label 1..k
};

struct Ingested {
  Sample sample;
  IngestionSummary summary;
};

/// One CSV record split on commas; double quotes group and "" escapes.
std::vector<std::string> split_csv_line(const std::string& line);

Ingested read_csv(std::istream& in, const IngestionPolicy& policy);
Ingested read_csv(const std::string& path, const IngestionPolicy& policy);

/// header `time,cause`; re-reading with the default policy recovers the sample.
void write_sample_csv(std::ostream& out, const Sample& sample);

std::string describe(const IngestionSummary& summary);

/// Entry point shared by the crindep executable and the tests. Returns the
/// process exit status: 0 on success whatever the statistical decision, 1 on
/// input or computation errors, 2 on usage errors.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Environment variable consulted for the default --seed.
inline constexpr const char* kSeedEnvVar = "CRINDEP_SEED";

}  // namespace crindep
