#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rumourbench/corpus.hpp"
#include "rumourbench/pipeline.hpp"

namespace rumourbench::scoring {

class ScoringError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ClassStats {
  int gold = 0;      // examples with this gold class
  int predicted = 0; // examples whose top prediction is this class
  int correct = 0;   // gold examples of this class predicted correctly
};

struct Metrics {
  int total = 0;     // scored examples (for stance3 this is the S/D/Q subset)
  int correct = 0;   // top-1 hits
  int abstained = 0;
  int failed = 0;
  double accuracy = 0;
  // Confidence error: e_i = 1 - confidence when correct, 1 otherwise;
  // rmse = sqrt(mean e_i^2). Reported for the binary veracity scheme only.
  std::optional<double> confidence_rmse;
  std::optional<double> combined; // (1 - rmse) * accuracy
  std::optional<double> hit_any;  // multi-label only: any predicted label matches
  std::map<std::string, ClassStats> per_class;
};

struct ScoredExample {
  std::string example_id;
  std::string gold;
  std::vector<std::string> predicted;
  double confidence = 0;
  bool correct = false;
  std::string status;
};

struct ScoreReport {
  pipeline::RunConfig config;
  std::string run_id;
  Metrics metrics;
  std::vector<ScoredExample> examples;
};

// Exact rounded-metric helpers, kept tiny so tests can pin them down.
double accuracy(int correct, int total); // throws on total == 0
double combined_score(double acc, double rmse);

// Scores records against a gold map. Assumes the caller already checked
// completeness; still rejects duplicates, unknown example ids, and records
// whose shape is inconsistent with their status.
Metrics score_records(const std::vector<pipeline::RunRecord>& records,
                      const std::map<std::string, std::string>& gold,
                      pipeline::RunScheme scheme,
                      std::vector<ScoredExample>* out_examples = nullptr);

// Full scoring path for a run log: builds the gold map for the config's
// task/scheme from the split, verifies the log covers exactly that scope
// (unless allow_partial), then scores.
ScoreReport score_run(const pipeline::RunLog& log, const corpus::Split& split,
                      bool allow_partial = false);

struct BaselineResult {
  std::string label; // majority class
  int correct = 0;
  int total = 0;
  double accuracy = 0;
};

// Majority-class baselines: veracity over threads, stance over all replies
// (4-way) or the support/deny/query subset.
BaselineResult majority_baseline(const corpus::Split& split, corpus::Task task);
BaselineResult majority_baseline_sdq(const corpus::Split& split);

// Published scores this harness can be compared against (RumourEval-2017
// leaderboard systems, majority baselines, and prior LLM results).
struct ReferenceRow {
  std::string table;  // "veracity" | "stance"
  std::string system; // display name
  std::string model;  // matchable model family ("gpt-4", "gpt-3.5-turbo"), "" for non-LLM rows
  std::string scheme; // run scheme name, "" when not scheme-specific
  std::string shots;  // zero | one | few | ""
  double accuracy = 0;
  std::optional<double> confidence_rmse;
  bool deterministic = true; // false for sampled LLM results: expect drift
};

const std::vector<ReferenceRow>& reference_rows();

// Rows relevant to a run (matching LLM row, baseline, leaderboard) with
// deltas against the observed metrics, rendered as a fixed-width table.
std::string render_comparison(const pipeline::RunConfig& config, const Metrics& metrics);

std::string render_metrics(const ScoreReport& report);

} // namespace rumourbench::scoring
