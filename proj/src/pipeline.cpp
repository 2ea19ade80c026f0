#include "rumourbench/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>
#include <thread>

#include "rumourbench/parse.hpp"
#include "rumourbench/util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace rumourbench::pipeline {

namespace {

constexpr const char* kStrictRetrySuffix =
    "\nYour previous reply could not be parsed. Respond with only a JSON object with the keys "
    "\"prediction\", \"confidence\" and \"justification\", and no other text.";

prompts::SchemeId prompt_scheme(RunScheme s) {
  switch (s) {
    case RunScheme::binary: return prompts::SchemeId::binary;
    case RunScheme::ternary: return prompts::SchemeId::ternary;
    case RunScheme::stance3: return prompts::SchemeId::stance3;
    case RunScheme::stance4: return prompts::SchemeId::stance4;
    case RunScheme::stance_multi: return prompts::SchemeId::stance_multi;
    case RunScheme::two_step:
      throw PipelineError("two_step has no single prompt scheme");
  }
  throw PipelineError("unknown run scheme");
}

struct CompletionTally {
  int attempts = 0;
  double latency_ms = 0;
};

// One completion plus the single stricter-format retry on parse failure.
struct ParsedCompletion {
  std::optional<parse::Prediction> prediction;
  parse::ParseError last_error;
  CompletionTally tally;
};

} // namespace

std::string to_string(RunScheme s) {
  switch (s) {
    case RunScheme::binary: return "binary";
    case RunScheme::ternary: return "ternary";
    case RunScheme::two_step: return "two_step";
    case RunScheme::stance3: return "stance3";
    case RunScheme::stance4: return "stance4";
    case RunScheme::stance_multi: return "stance_multi";
  }
  throw PipelineError("unknown run scheme");
}

RunScheme run_scheme_from_string(const std::string& s) {
  if (s == "binary") return RunScheme::binary;
  if (s == "ternary") return RunScheme::ternary;
  if (s == "two_step") return RunScheme::two_step;
  if (s == "stance3") return RunScheme::stance3;
  if (s == "stance4") return RunScheme::stance4;
  if (s == "stance_multi") return RunScheme::stance_multi;
  throw PipelineError("unknown run scheme: '" + s + "'");
}

bool run_scheme_is_stance(RunScheme s) {
  return s == RunScheme::stance3 || s == RunScheme::stance4 || s == RunScheme::stance_multi;
}

void RunConfig::validate() const {
  if (model.empty()) throw PipelineError("model must not be empty");
  if (!(temperature >= 0.0 && temperature <= 1.0))
    throw PipelineError("temperature must be within [0, 1], got " +
                        util::format_temperature(temperature));
  if (parallelism < 1)
    throw PipelineError("parallelism must be >= 1, got " + std::to_string(parallelism));
  if (split == "train")
    throw PipelineError("the train split is the shot pool; runs evaluate dev or test");
  if (split != "dev" && split != "test")
    throw PipelineError("unknown split '" + split + "' (expected dev or test)");
  bool stance_scheme = run_scheme_is_stance(scheme);
  if (stance_scheme != (task == corpus::Task::stance))
    throw PipelineError("scheme '" + to_string(scheme) + "' does not fit task '" +
                        corpus::to_string(task) + "'");
  if (stance_scheme && shot.kind != prompts::ShotKind::zero)
    throw PipelineError("stance runs are zero-shot only");
  try {
    shot.validate();
  } catch (const prompts::PromptError& e) {
    throw PipelineError(e.what()); // config errors surface under one type
  }
}

std::string RunConfig::digest(const std::string& catalog_digest) const {
  ordered_json j;
  j["task"] = corpus::to_string(task);
  j["scheme"] = to_string(scheme);
  j["shot_kind"] = prompts::to_string(shot.kind);
  j["shot_k"] = shot.k;
  j["model"] = model;
  j["temperature"] = util::format_temperature(temperature);
  j["seed"] = seed;
  j["split"] = split;
  j["use_tools"] = use_tools;
  j["catalog_digest"] = catalog_digest;
  return util::sha256_hex(j.dump());
}

std::string RunConfig::effective_run_id(const std::string& catalog_digest) const {
  if (!run_id.empty()) return run_id;
  return "run-" + digest(catalog_digest).substr(0, 12);
}

ordered_json RunConfig::to_json() const {
  ordered_json j;
  j["task"] = corpus::to_string(task);
  j["scheme"] = to_string(scheme);
  j["shot_kind"] = prompts::to_string(shot.kind);
  j["shot_k"] = shot.k;
  j["model"] = model;
  j["temperature"] = temperature;
  j["seed"] = seed;
  j["split"] = split;
  j["parallelism"] = parallelism;
  j["use_tools"] = use_tools;
  return j;
}

RunConfig RunConfig::from_json(const json& j) {
  RunConfig c;
  c.task = corpus::task_from_string(j.at("task").get<std::string>());
  c.scheme = run_scheme_from_string(j.at("scheme").get<std::string>());
  c.shot.kind = prompts::shot_kind_from_string(j.at("shot_kind").get<std::string>());
  c.shot.k = j.at("shot_k").get<int>();
  c.model = j.at("model").get<std::string>();
  c.temperature = j.at("temperature").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.split = j.at("split").get<std::string>();
  c.parallelism = j.value("parallelism", 4);
  c.use_tools = j.value("use_tools", true);
  return c;
}

ordered_json RunRecord::to_json() const {
  ordered_json j;
  j["kind"] = "record";
  j["run_id"] = run_id;
  j["example_id"] = example_id;
  j["prompt_sha"] = prompt_sha;
  j["status"] = status;
  j["labels"] = labels;
  j["confidences"] = confidences;
  j["justification"] = justification;
  j["error"] = error;
  j["attempts"] = attempts;
  j["latency_ms"] = latency_ms;
  j["ts_ms"] = ts_ms;
  if (stage1) j["stage1"] = ordered_json{{"label", stage1->label}, {"confidence", stage1->confidence}};
  return j;
}

RunRecord RunRecord::from_json(const json& j) {
  RunRecord r;
  r.run_id = j.at("run_id").get<std::string>();
  r.example_id = j.at("example_id").get<std::string>();
  r.prompt_sha = j.value("prompt_sha", "");
  r.status = j.at("status").get<std::string>();
  r.labels = j.at("labels").get<std::vector<std::string>>();
  r.confidences = j.at("confidences").get<std::vector<double>>();
  r.justification = j.value("justification", "");
  r.error = j.value("error", "");
  r.attempts = j.value("attempts", 0);
  r.latency_ms = j.value("latency_ms", 0.0);
  r.ts_ms = j.value("ts_ms", static_cast<std::int64_t>(0));
  if (j.contains("stage1") && j["stage1"].is_object()) {
    StageResult s;
    s.label = j["stage1"].value("label", "");
    s.confidence = j["stage1"].value("confidence", 0.0);
    r.stage1 = s;
  }
  return r;
}

RunLog read_run_log(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PipelineError("cannot open run log: " + path);
  RunLog log;
  std::string line;
  bool have_header = false;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (util::trim(line).empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object())
      throw PipelineError(path + ":" + std::to_string(line_no) + ": run log line is not JSON");
    std::string kind = j.value("kind", "");
    if (!have_header) {
      if (kind != "header")
        throw PipelineError(path + ": first line must be the run-log header");
      log.header.run_log_version = j.value("run_log_version", 0);
      if (log.header.run_log_version != 1)
        throw PipelineError(path + ": unsupported run_log_version " +
                            std::to_string(log.header.run_log_version));
      log.header.run_id = j.at("run_id").get<std::string>();
      log.header.config_digest = j.at("config_digest").get<std::string>();
      log.header.catalog_digest = j.value("catalog_digest", "");
      log.header.config = RunConfig::from_json(j.at("config"));
      log.header.created_ms = j.value("created_ms", static_cast<std::int64_t>(0));
      have_header = true;
      continue;
    }
    if (kind != "record")
      throw PipelineError(path + ":" + std::to_string(line_no) + ": unknown line kind '" + kind +
                          "'");
    log.records.push_back(RunRecord::from_json(j));
  }
  if (!have_header) throw PipelineError(path + ": run log is empty");
  return log;
}

// ---- Classifier ----

Classifier::Classifier(provider::Provider& provider, const prompts::PromptBuilder& builder,
                       const RunConfig& config)
    : provider_(provider), builder_(builder), config_(config) {}

namespace {

ParsedCompletion complete_and_parse(provider::Provider& provider, const RunConfig& config,
                                    const std::string& prompt, const parse::ParseSpec& spec) {
  ParsedCompletion out;
  provider::CompletionRequest req;
  req.model = config.model;
  req.temperature = config.temperature;
  req.multi_label = spec.multi_label;
  req.use_tools = config.use_tools;
  req.prompt = prompt;

  for (int round = 0; round < 2; ++round) {
    provider::CompletionOutcome outcome = provider.complete(req);
    out.tally.attempts += outcome.attempts;
    out.tally.latency_ms += outcome.latency_ms;
    parse::ParseResult parsed = parse::parse_prediction(outcome.raw, spec);
    if (std::holds_alternative<parse::Prediction>(parsed)) {
      out.prediction = std::get<parse::Prediction>(std::move(parsed));
      return out;
    }
    out.last_error = std::get<parse::ParseError>(parsed);
    req.prompt = prompt + kStrictRetrySuffix; // one stricter retry, then abstain
  }
  return out;
}

RunRecord base_record(const RunConfig& config, const std::string& example_id) {
  RunRecord r;
  r.example_id = example_id;
  r.ts_ms = static_cast<std::int64_t>(util::now_ms());
  (void)config;
  return r;
}

void mark_abstained(RunRecord& r, const parse::ParseError& err) {
  r.status = "abstained";
  r.labels.clear();
  r.confidences = {0.0};
  r.error = parse::to_string(err.kind) + ": " + err.detail;
}

parse::ParseSpec spec_for(prompts::SchemeId scheme) {
  parse::ParseSpec spec;
  spec.labels = prompts::scheme_labels(scheme);
  spec.multi_label = prompts::scheme_is_multi_label(scheme);
  return spec;
}

} // namespace

RunRecord Classifier::classify_veracity(const corpus::VeracityExample& target,
                                        const std::vector<corpus::VeracityExample>& shots) const {
  RunRecord record = base_record(config_, target.tweet_id);
  if (util::trim(target.tweet_text).empty()) {
    record.status = "failed";
    record.confidences = {0.0};
    record.error = "tweet " + target.tweet_id + " has empty text";
    return record;
  }
  auto scheme = prompt_scheme(config_.scheme);
  prompts::PromptText prompt = builder_.build_veracity(scheme, config_.shot, target, shots);
  record.prompt_sha = util::sha256_hex(prompt.text);

  ParsedCompletion done = complete_and_parse(provider_, config_, prompt.text, spec_for(scheme));
  record.attempts = done.tally.attempts;
  record.latency_ms = done.tally.latency_ms;
  if (!done.prediction) {
    mark_abstained(record, done.last_error);
    return record;
  }
  record.status = "ok";
  record.labels = done.prediction->labels;
  record.confidences = done.prediction->confidences;
  record.justification = done.prediction->justification;
  // An unverifiable call carries no usable confidence.
  if (config_.scheme == RunScheme::ternary && record.labels[0] == "unverified")
    record.confidences = {0.0};
  return record;
}

RunRecord Classifier::classify_veracity_two_step(
    const corpus::VeracityExample& target, const std::vector<corpus::VeracityExample>& stage1_shots,
    const std::vector<corpus::VeracityExample>& stage2_shots) const {
  RunRecord record = base_record(config_, target.tweet_id);
  if (util::trim(target.tweet_text).empty()) {
    record.status = "failed";
    record.confidences = {0.0};
    record.error = "tweet " + target.tweet_id + " has empty text";
    return record;
  }

  prompts::PromptText stage1_prompt = builder_.build_veracity(
      prompts::SchemeId::two_step_stage1, config_.shot, target, stage1_shots);
  ParsedCompletion stage1 = complete_and_parse(provider_, config_, stage1_prompt.text,
                                               spec_for(prompts::SchemeId::two_step_stage1));
  record.attempts = stage1.tally.attempts;
  record.latency_ms = stage1.tally.latency_ms;
  if (!stage1.prediction) {
    record.prompt_sha = util::sha256_hex({stage1_prompt.text, std::string_view{}});
    mark_abstained(record, stage1.last_error);
    return record;
  }
  record.stage1 = StageResult{stage1.prediction->labels[0], stage1.prediction->confidences[0]};

  if (record.stage1->label == "unverified") {
    // Stage 2 is skipped: the final call is unverified with zero confidence.
    record.prompt_sha = util::sha256_hex({stage1_prompt.text, std::string_view{}});
    record.status = "ok";
    record.labels = {"unverified"};
    record.confidences = {0.0};
    record.justification = stage1.prediction->justification;
    return record;
  }

  prompts::PromptText stage2_prompt = builder_.build_veracity(
      prompts::SchemeId::two_step_stage2, config_.shot, target, stage2_shots);
  record.prompt_sha =
      util::sha256_hex({std::string_view(stage1_prompt.text), std::string_view(stage2_prompt.text)});
  ParsedCompletion stage2 = complete_and_parse(provider_, config_, stage2_prompt.text,
                                               spec_for(prompts::SchemeId::two_step_stage2));
  record.attempts += stage2.tally.attempts;
  record.latency_ms += stage2.tally.latency_ms;
  if (!stage2.prediction) {
    mark_abstained(record, stage2.last_error);
    return record;
  }
  record.status = "ok";
  record.labels = stage2.prediction->labels;
  record.confidences = stage2.prediction->confidences;
  record.justification = stage2.prediction->justification;
  return record;
}

RunRecord Classifier::classify_stance(const corpus::StanceExample& target) const {
  RunRecord record = base_record(config_, target.reply_id);
  if (util::trim(target.reply_text).empty()) {
    record.status = "failed";
    record.confidences = {0.0};
    record.error = "reply " + target.reply_id + " has empty text";
    return record;
  }
  auto scheme = prompt_scheme(config_.scheme);
  prompts::PromptText prompt = builder_.build_stance(scheme, target);
  record.prompt_sha = util::sha256_hex(prompt.text);

  ParsedCompletion done = complete_and_parse(provider_, config_, prompt.text, spec_for(scheme));
  record.attempts = done.tally.attempts;
  record.latency_ms = done.tally.latency_ms;
  if (!done.prediction) {
    mark_abstained(record, done.last_error);
    return record;
  }
  record.status = "ok";
  record.labels = done.prediction->labels;
  record.confidences = done.prediction->confidences;
  record.justification = done.prediction->justification;
  return record;
}

// ---- Runner ----

Runner::Runner(provider::Provider& provider, prompts::PromptBuilder& builder)
    : provider_(provider), builder_(builder) {}

namespace {

std::string dump_line(const ordered_json& j) {
  return j.dump(-1, ' ', false, json::error_handler_t::replace);
}

} // namespace

RunSummary Runner::run(const RunConfig& config, const corpus::Split& eval_split,
                       const corpus::Split& train_split, const RunOptions& options) {
  config.validate();
  if (corpus::to_string(eval_split.name) != config.split)
    throw PipelineError("config evaluates split '" + config.split + "' but split '" +
                        corpus::to_string(eval_split.name) + "' was loaded");
  if (train_split.name != corpus::SplitName::train)
    throw PipelineError("shot pool must be the train split");

  const std::string catalog_digest = builder_.catalog().digest();
  const std::string digest = config.digest(catalog_digest);
  const std::string run_id = config.effective_run_id(catalog_digest);

  // Leakage guard: shot examples must come from train, targets must not.
  std::set<std::string> train_ids;
  for (const auto& ex : train_split.veracity) train_ids.insert(ex.tweet_id);
  builder_.set_train_ids(train_ids);

  // Shots are fixed once per run so every example sees the same context.
  std::vector<corpus::VeracityExample> shots, stage2_shots;
  if (config.task == corpus::Task::veracity) {
    if (config.scheme == RunScheme::two_step) {
      shots = prompts::select_shots(train_split.veracity, config.shot.k, config.seed,
                                    [](const corpus::VeracityExample& ex) {
                                      return prompts::PromptBuilder::shot_label(
                                          prompts::SchemeId::two_step_stage1, ex.tweet_class);
                                    });
      std::vector<corpus::VeracityExample> pool;
      for (const auto& ex : train_split.veracity)
        if (ex.tweet_class == "true" || ex.tweet_class == "false") pool.push_back(ex);
      stage2_shots = prompts::select_shots(pool, config.shot.k, config.seed + 1);
    } else if (config.scheme == RunScheme::binary) {
      std::vector<corpus::VeracityExample> pool;
      for (const auto& ex : train_split.veracity)
        if (ex.tweet_class == "true" || ex.tweet_class == "false") pool.push_back(ex);
      shots = prompts::select_shots(pool, config.shot.k, config.seed);
    } else {
      shots = prompts::select_shots(train_split.veracity, config.shot.k, config.seed);
    }
  }

  fs::create_directories(options.log_dir);
  fs::path log_path = fs::path(options.log_dir) / (run_id + ".jsonl");

  std::set<std::string> done;
  int completed_before = 0;
  bool log_exists = fs::exists(log_path);
  if (log_exists && !options.resume)
    throw PipelineError("run log already exists: " + log_path.string() +
                        " (resume it or choose another run id)");
  if (log_exists) {
    RunLog existing = read_run_log(log_path.string());
    if (existing.header.config_digest != digest)
      throw PipelineError("config drift: run log " + log_path.string() + " was created with digest " +
                          existing.header.config_digest + " but the current config digest is " +
                          digest);
    for (const auto& r : existing.records) done.insert(r.example_id);
  }

  // Work list in corpus order; records land in the log in this order.
  struct WorkItem {
    const corpus::VeracityExample* veracity = nullptr;
    const corpus::StanceExample* stance = nullptr;
  };
  std::vector<WorkItem> pending;
  int total = 0;
  auto consider = [&](WorkItem item, const std::string& id) {
    ++total;
    if (done.count(id)) {
      ++completed_before;
      return;
    }
    pending.push_back(item);
  };
  if (config.task == corpus::Task::veracity) {
    for (const auto& ex : eval_split.veracity) {
      if (options.limit > 0 && total >= options.limit) break;
      consider(WorkItem{&ex, nullptr}, ex.tweet_id);
    }
  } else {
    for (const auto& ex : eval_split.stance) {
      // 3-way classification scores support/deny/query only, so comment
      // replies are out of scope for the run as well.
      if (config.scheme == RunScheme::stance3 && ex.reply_class == "comment") continue;
      if (options.limit > 0 && total >= options.limit) break;
      consider(WorkItem{nullptr, &ex}, ex.reply_id);
    }
  }

  util::AppendFile log_file(log_path.string());
  if (!log_exists) {
    ordered_json header;
    header["kind"] = "header";
    header["run_log_version"] = 1;
    header["run_id"] = run_id;
    header["config_digest"] = digest;
    header["catalog_digest"] = catalog_digest;
    header["config"] = config.to_json();
    header["created_ms"] = static_cast<std::int64_t>(util::now_ms());
    log_file.write_line(dump_line(header));
  }

  RunSummary summary;
  summary.run_id = run_id;
  summary.config_digest = digest;
  summary.log_path = log_path.string();
  summary.total = total;
  summary.completed_before = completed_before;

  Classifier classifier(provider_, builder_, config);

  std::vector<std::optional<RunRecord>> slots(pending.size());
  std::vector<std::exception_ptr> errors(pending.size());
  std::mutex mu;
  std::condition_variable cv;
  std::atomic<std::size_t> next_item{0};
  std::atomic<bool> stop{false};

  auto process = [&](const WorkItem& item) -> RunRecord {
    RunRecord r;
    if (item.veracity) {
      r = config.scheme == RunScheme::two_step
              ? classifier.classify_veracity_two_step(*item.veracity, shots, stage2_shots)
              : classifier.classify_veracity(*item.veracity, shots);
    } else {
      r = classifier.classify_stance(*item.stance);
    }
    r.run_id = run_id;
    return r;
  };

  auto worker = [&] {
    while (!stop.load()) {
      std::size_t i = next_item.fetch_add(1);
      if (i >= pending.size()) return;
      try {
        RunRecord r = process(pending[i]);
        std::lock_guard<std::mutex> lock(mu);
        slots[i] = std::move(r);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        errors[i] = std::current_exception();
        stop.store(true);
      }
      cv.notify_all();
    }
  };

  int thread_count = std::min<std::size_t>(config.parallelism, pending.size());
  std::vector<std::thread> threads;
  threads.reserve(thread_count);
  for (int i = 0; i < thread_count; ++i) threads.emplace_back(worker);

  auto write_record = [&](const RunRecord& r) {
    log_file.write_line(dump_line(r.to_json()));
    ++summary.processed;
    if (r.status == "ok") ++summary.ok;
    else if (r.status == "abstained") ++summary.abstained;
    else ++summary.failed;
  };

  std::size_t write_idx = 0;
  {
    std::unique_lock<std::mutex> lock(mu);
    while (write_idx < pending.size()) {
      cv.wait(lock, [&] {
        return slots[write_idx].has_value() || errors[write_idx] != nullptr || stop.load();
      });
      if (slots[write_idx].has_value()) {
        RunRecord r = std::move(*slots[write_idx]);
        lock.unlock();
        write_record(r);
        lock.lock();
        ++write_idx;
        continue;
      }
      break; // an error stopped the run; settle after joining
    }
  }
  for (auto& t : threads) t.join();

  // Flush the contiguous completed prefix so a later resume restarts here.
  while (write_idx < pending.size() && slots[write_idx].has_value()) {
    write_record(*slots[write_idx]);
    ++write_idx;
  }
  for (std::size_t i = write_idx; i < pending.size(); ++i)
    if (errors[i]) std::rethrow_exception(errors[i]);

  return summary;
}

} // namespace rumourbench::pipeline
