#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "rumourbench/corpus.hpp"
#include "rumourbench/prompts.hpp"
#include "rumourbench/provider.hpp"

namespace rumourbench::pipeline {

class PipelineError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Experiment-level schemes. two_step covers both stages; the per-stage
// prompt schemes stay an implementation detail of the classifier.
enum class RunScheme { binary, ternary, two_step, stance3, stance4, stance_multi };

std::string to_string(RunScheme s);
RunScheme run_scheme_from_string(const std::string& s);
bool run_scheme_is_stance(RunScheme s);

struct RunConfig {
  corpus::Task task = corpus::Task::veracity;
  RunScheme scheme = RunScheme::ternary;
  prompts::ShotSetting shot;
  std::string model = "gpt-4";
  double temperature = 0.8;
  std::uint64_t seed = 13;
  std::string split = "test"; // dev | test (train is the shot pool, never evaluated)
  int parallelism = 4;
  bool use_tools = true;
  std::string run_id; // empty => "run-" + digest prefix

  void validate() const; // throws PipelineError
  // Canonical identity of the experiment: hash of everything that changes
  // results (including the prompt catalog), excluding run_id/parallelism.
  std::string digest(const std::string& catalog_digest) const;
  std::string effective_run_id(const std::string& catalog_digest) const;

  nlohmann::ordered_json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);
};

struct StageResult {
  std::string label;
  double confidence = 0;
};

struct RunRecord {
  std::string run_id;
  std::string example_id; // tweet_id (veracity) or reply_id (stance)
  std::string prompt_sha;
  std::string status;     // ok | abstained | failed
  std::vector<std::string> labels;
  std::vector<double> confidences;
  std::string justification;
  std::string error;      // parse/build failure detail when not ok
  int attempts = 0;       // transport attempts across all calls (0 = all cached)
  double latency_ms = 0;
  std::int64_t ts_ms = 0;
  std::optional<StageResult> stage1; // two-step only

  nlohmann::ordered_json to_json() const;
  static RunRecord from_json(const nlohmann::json& j);
};

struct RunLogHeader {
  int run_log_version = 1;
  std::string run_id;
  std::string config_digest;
  std::string catalog_digest;
  RunConfig config;
  std::int64_t created_ms = 0;
};

struct RunLog {
  RunLogHeader header;
  std::vector<RunRecord> records;
};

RunLog read_run_log(const std::string& path); // throws PipelineError

// One example end to end: prompt build, completion, parse-retry policy,
// normalization into a RunRecord. Parse failures get exactly one stricter
// retry, then the record abstains (empty labels, confidence [0]).
class Classifier {
 public:
  Classifier(provider::Provider& provider, const prompts::PromptBuilder& builder,
             const RunConfig& config);

  RunRecord classify_veracity(const corpus::VeracityExample& target,
                              const std::vector<corpus::VeracityExample>& shots) const;
  RunRecord classify_veracity_two_step(
      const corpus::VeracityExample& target,
      const std::vector<corpus::VeracityExample>& stage1_shots,
      const std::vector<corpus::VeracityExample>& stage2_shots) const;
  RunRecord classify_stance(const corpus::StanceExample& target) const;

 private:
  provider::Provider& provider_;
  const prompts::PromptBuilder& builder_;
  const RunConfig& config_;
};

struct RunOptions {
  std::string log_dir = "runs";
  bool resume = false;
  int limit = 0; // 0 = every example in the split
};

struct RunSummary {
  std::string run_id;
  std::string config_digest;
  std::string log_path;
  int total = 0;            // examples in scope for this run
  int completed_before = 0; // records already in the log (resume)
  int processed = 0;        // records written this invocation
  int ok = 0;
  int abstained = 0;
  int failed = 0;
};

// Drives a full run: shot selection, a worker pool of `parallelism`
// threads, and an append-only JSONL log written strictly in corpus order
// (fsync per line) so interrupted runs resume cleanly.
class Runner {
 public:
  Runner(provider::Provider& provider, prompts::PromptBuilder& builder);

  RunSummary run(const RunConfig& config, const corpus::Split& eval_split,
                 const corpus::Split& train_split, const RunOptions& options);

 private:
  provider::Provider& provider_;
  prompts::PromptBuilder& builder_;
};

} // namespace rumourbench::pipeline
