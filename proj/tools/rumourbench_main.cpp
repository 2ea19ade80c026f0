#include <cstdio>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rumourbench/corpus.hpp"
#include "rumourbench/pipeline.hpp"
#include "rumourbench/prompts.hpp"
#include "rumourbench/provider.hpp"
#include "rumourbench/scoring.hpp"
#include "rumourbench/util.hpp"

namespace fs = std::filesystem;
using namespace rumourbench;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;
constexpr int kExitGate = 3;

struct ProviderOpts {
  std::string provider = "http"; // http | mock
  std::string base_url = "https://api.openai.com/v1";
  std::string api_key_env = "OPENAI_API_KEY";
  std::string script_path; // mock transport script (JSON)
  std::string cache_dir;   // empty = no response cache
  double rpm = 30;
  double burst = 5;
  int max_attempts = 4;
  int timeout_ms = 30000;
};

void add_provider_options(CLI::App* cmd, ProviderOpts& opts) {
  cmd->add_option("--provider", opts.provider, "Completion provider")
      ->check(CLI::IsMember({"http", "mock"}))
      ->capture_default_str();
  cmd->add_option("--base-url", opts.base_url, "Chat-completions endpoint base URL")
      ->capture_default_str();
  cmd->add_option("--api-key-env", opts.api_key_env,
                  "Environment variable holding the API key")
      ->capture_default_str();
  cmd->add_option("--script", opts.script_path,
                  "Scripted responses for --provider mock (JSON file)");
  cmd->add_option("--cache", opts.cache_dir, "Response cache directory (reused across runs)");
  cmd->add_option("--rpm", opts.rpm, "Requests per minute (http provider)")
      ->capture_default_str();
  cmd->add_option("--burst", opts.burst, "Rate-limit burst size (http provider)")
      ->capture_default_str();
  cmd->add_option("--max-attempts", opts.max_attempts, "Transport attempts per request")
      ->check(CLI::Range(1, 10))
      ->capture_default_str();
  cmd->add_option("--timeout-ms", opts.timeout_ms, "HTTP timeout per request")
      ->capture_default_str();
}

struct BuiltProvider {
  std::shared_ptr<provider::Transport> transport;
  std::shared_ptr<provider::MockTransport> mock; // set when provider == mock
  std::unique_ptr<provider::Provider> provider;
};

BuiltProvider build_provider(const ProviderOpts& opts) {
  BuiltProvider built;
  provider::ProviderOptions popts;
  popts.retry.max_attempts = opts.max_attempts;
  std::shared_ptr<provider::RateLimiter> limiter;

  if (opts.provider == "mock") {
    if (opts.script_path.empty())
      throw CLI::ValidationError("--script", "mock provider needs a script file");
    auto script = provider::MockTransport::script_from_json(util::read_file(opts.script_path));
    built.mock = std::make_shared<provider::MockTransport>(std::move(script));
    built.transport = built.mock;
    popts.sleeper = [](double) {}; // scripted world: no real backoff waits
  } else {
    provider::HttpOptions hopts;
    hopts.base_url = opts.base_url;
    hopts.api_key_env = opts.api_key_env;
    hopts.timeout_ms = opts.timeout_ms;
    built.transport = std::make_shared<provider::HttpTransport>(hopts);
    limiter = std::make_shared<provider::RateLimiter>(opts.rpm, opts.burst);
  }

  std::shared_ptr<provider::DiskCache> cache;
  if (!opts.cache_dir.empty()) cache = std::make_shared<provider::DiskCache>(opts.cache_dir);

  built.provider =
      std::make_unique<provider::Provider>(built.transport, cache, limiter, std::move(popts));
  return built;
}

prompts::PromptCatalog load_catalog(const std::string& templates_dir) {
  if (templates_dir.empty()) return prompts::PromptCatalog::builtin();
  return prompts::PromptCatalog::load(templates_dir);
}

int default_k(const std::string& shots) {
  if (shots == "zero") return 0;
  if (shots == "one") return 1;
  return 4;
}

void print_summary(const pipeline::RunSummary& s) {
  std::printf("run %s: %d example(s) in scope, %d already logged, %d processed "
              "(%d ok, %d abstained, %d failed)\n",
              s.run_id.c_str(), s.total, s.completed_before, s.processed, s.ok, s.abstained,
              s.failed);
  std::printf("log: %s\n", s.log_path.c_str());
}

corpus::Split load_named_split(const std::string& data_root, const std::string& name) {
  return corpus::load_split(data_root, corpus::split_from_string(name));
}

pipeline::RunLog open_run_log(const std::string& log_dir, const std::string& run_id,
                              const std::string& log_path) {
  std::string path = log_path;
  if (path.empty()) {
    if (run_id.empty())
      throw CLI::ValidationError("--run-id", "pass --run-id or --log to locate the run log");
    path = (fs::path(log_dir) / (run_id + ".jsonl")).string();
  }
  return pipeline::read_run_log(path);
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Batch LLM evaluation harness for RumourEval-2017 rumour veracity and "
               "SDQC stance classification"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Read options from a TOML/INI file (flags win)");
  app.allow_config_extras(CLI::config_extras_mode::error);

  std::string data_root = "data";
  std::string log_dir = "runs";
  std::string templates_dir;
  app.add_option("--data-root", data_root, "Corpus root directory")
      ->capture_default_str()
      ->envname("RUMOURBENCH_DATA");
  app.add_option("--log-dir", log_dir, "Directory for run logs")->capture_default_str();
  app.add_option("--templates", templates_dir,
                 "Prompt template directory (default: built-in catalog)");

  // ---- prepare ----
  auto* prepare = app.add_subcommand("prepare", "Validate the corpus and export working files");
  std::string templates_out, flat_out;
  prepare->add_option("--templates-out", templates_out, "Write the prompt templates here");
  prepare->add_option("--export-flat", flat_out, "Write flat JSONL views of every split here");

  // ---- run / resume ----
  auto* run = app.add_subcommand("run", "Execute one experiment cell");
  ProviderOpts run_provider;
  add_provider_options(run, run_provider);
  std::string task = "veracity", scheme = "ternary", shots = "zero", split = "test";
  std::string model = "gpt-4", run_id;
  int shot_k = -1, parallelism = 4, limit = 0;
  double temperature = 0.8;
  std::uint64_t seed = 13;
  bool no_tools = false;
  run->add_option("--task", task, "veracity | stance")
      ->check(CLI::IsMember({"veracity", "stance"}))
      ->capture_default_str();
  run->add_option("--scheme", scheme, "Label scheme")
      ->check(CLI::IsMember({"binary", "ternary", "two_step", "stance3", "stance4",
                             "stance_multi"}))
      ->capture_default_str();
  run->add_option("--shots", shots, "In-context example setting")
      ->check(CLI::IsMember({"zero", "one", "few"}))
      ->capture_default_str();
  run->add_option("--k", shot_k, "Shot count (zero: 0, one: 1, few: 2/4/6; default by kind)");
  run->add_option("--model", model, "Model name sent to the provider")->capture_default_str();
  run->add_option("--temperature", temperature, "Sampling temperature")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  run->add_option("--seed", seed, "Seed for shot selection and retry jitter")
      ->capture_default_str();
  run->add_option("--split", split, "Split to evaluate (train is refused)")
      ->check(CLI::IsMember({"dev", "test"}))
      ->capture_default_str();
  run->add_option("--parallelism", parallelism, "Concurrent requests")
      ->check(CLI::Range(1, 64))
      ->capture_default_str();
  run->add_option("--run-id", run_id, "Run identifier (default: derived from the config digest)");
  run->add_option("--limit", limit, "Evaluate only the first N examples (0 = all)");
  run->add_flag("--no-tools", no_tools, "Ask for prose instead of a function call");

  auto* resume = app.add_subcommand("resume", "Continue an interrupted run from its log");
  ProviderOpts resume_provider;
  add_provider_options(resume, resume_provider);
  std::string resume_run_id, resume_log;
  int resume_limit = 0;
  resume->add_option("--run-id", resume_run_id, "Run id whose log sits in --log-dir");
  resume->add_option("--log", resume_log, "Explicit run-log path");
  resume->add_option("--limit", resume_limit, "Evaluate only the first N examples (0 = all)");

  // ---- grid ----
  auto* grid = app.add_subcommand("grid", "Temperature grid search on the dev split");
  ProviderOpts grid_provider;
  add_provider_options(grid, grid_provider);
  std::string g_task = "veracity", g_scheme = "ternary", g_shots = "zero", g_model = "gpt-4";
  std::string g_split = "dev";
  int g_k = -1, g_parallelism = 4, g_limit = 0;
  std::uint64_t g_seed = 13;
  double g_from = 0.0, g_to = 1.0, g_step = 0.1;
  bool g_no_tools = false;
  grid->add_option("--task", g_task)->check(CLI::IsMember({"veracity", "stance"}))
      ->capture_default_str();
  grid->add_option("--scheme", g_scheme)
      ->check(CLI::IsMember({"binary", "ternary", "two_step", "stance3", "stance4",
                             "stance_multi"}))
      ->capture_default_str();
  grid->add_option("--shots", g_shots)->check(CLI::IsMember({"zero", "one", "few"}))
      ->capture_default_str();
  grid->add_option("--k", g_k, "Shot count (default by kind)");
  grid->add_option("--model", g_model)->capture_default_str();
  grid->add_option("--seed", g_seed)->capture_default_str();
  grid->add_option("--split", g_split, "Grid search runs on dev only")
      ->check(CLI::IsMember({"dev"}))
      ->capture_default_str();
  grid->add_option("--parallelism", g_parallelism)->check(CLI::Range(1, 64))
      ->capture_default_str();
  grid->add_option("--limit", g_limit, "Evaluate only the first N examples per point (0 = all)");
  grid->add_option("--from", g_from, "First temperature")->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  grid->add_option("--to", g_to, "Last temperature")->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  grid->add_option("--step", g_step, "Temperature increment")
      ->check(CLI::Range(0.01, 1.0))
      ->capture_default_str();
  grid->add_flag("--no-tools", g_no_tools);

  // ---- score / baseline / compare ----
  auto* score = app.add_subcommand("score", "Score a completed run log against gold labels");
  std::string score_run_id, score_log, score_json_out;
  bool allow_partial = false, require_beat_baseline = false;
  score->add_option("--run-id", score_run_id, "Run id whose log sits in --log-dir");
  score->add_option("--log", score_log, "Explicit run-log path");
  score->add_option("--json", score_json_out, "Also write the report as JSON to this path");
  score->add_flag("--allow-partial", allow_partial,
                  "Score logs that do not yet cover the whole split");
  score->add_flag("--require-beat-baseline", require_beat_baseline,
                  "Exit 3 unless accuracy beats the majority-class baseline");

  auto* baseline = app.add_subcommand("baseline", "Majority-class baselines for a split");
  std::string b_split = "test", b_task;
  baseline->add_option("--split", b_split)
      ->check(CLI::IsMember({"train", "dev", "test"}))
      ->capture_default_str();
  baseline->add_option("--task", b_task, "Limit to one task (default: both)")
      ->check(CLI::IsMember({"veracity", "stance"}));

  auto* compare = app.add_subcommand("compare", "Compare a scored run against published results");
  std::string cmp_run_id, cmp_log;
  bool cmp_allow_partial = false;
  compare->add_option("--run-id", cmp_run_id, "Run id whose log sits in --log-dir");
  compare->add_option("--log", cmp_log, "Explicit run-log path");
  compare->add_flag("--allow-partial", cmp_allow_partial,
                    "Compare even if the log does not cover the whole split");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (prepare->parsed()) {
      for (auto name : {corpus::SplitName::train, corpus::SplitName::dev, corpus::SplitName::test}) {
        corpus::Split s = corpus::load_split(data_root, name);
        std::map<std::string, int> vc, sc;
        for (const auto& ex : s.veracity) ++vc[ex.tweet_class];
        for (const auto& ex : s.stance) ++sc[ex.reply_class];
        std::printf("%s: %zu threads, %zu replies\n", corpus::to_string(name).c_str(),
                    s.veracity.size(), s.stance.size());
        for (const auto& [label, n] : vc) std::printf("  veracity %-10s %5d\n", label.c_str(), n);
        for (const auto& [label, n] : sc) std::printf("  stance   %-10s %5d\n", label.c_str(), n);
        if (!flat_out.empty()) {
          fs::create_directories(flat_out);
          for (auto t : {corpus::Task::veracity, corpus::Task::stance}) {
            fs::path out = fs::path(flat_out) / (corpus::to_string(t) + "-" +
                                                 corpus::to_string(name) + ".jsonl");
            std::size_t n = corpus::export_flat(s, t, out);
            std::printf("  wrote %zu records to %s\n", n, out.string().c_str());
          }
        }
      }
      if (!templates_out.empty()) {
        load_catalog(templates_dir).save(templates_out);
        std::printf("templates written to %s\n", templates_out.c_str());
      }
      std::printf("corpus ok\n");
      return kExitOk;
    }

    if (run->parsed() || resume->parsed()) {
      const bool is_resume = resume->parsed();
      const ProviderOpts& popts = is_resume ? resume_provider : run_provider;
      pipeline::RunConfig config;
      pipeline::RunOptions options;
      options.log_dir = log_dir;
      options.resume = is_resume;
      if (is_resume) {
        pipeline::RunLog log = open_run_log(log_dir, resume_run_id, resume_log);
        config = log.header.config;
        config.run_id = log.header.run_id;
        options.limit = resume_limit;
        if (!resume_log.empty())
          options.log_dir = fs::path(resume_log).parent_path().string();
      } else {
        config.task = corpus::task_from_string(task);
        config.scheme = pipeline::run_scheme_from_string(scheme);
        config.shot.kind = prompts::shot_kind_from_string(shots);
        config.shot.k = shot_k >= 0 ? shot_k : default_k(shots);
        config.model = model;
        config.temperature = temperature;
        config.seed = seed;
        config.split = split;
        config.parallelism = parallelism;
        config.use_tools = !no_tools;
        config.run_id = run_id;
        options.limit = limit;
      }
      config.validate();

      prompts::PromptBuilder builder(load_catalog(templates_dir));
      BuiltProvider built = build_provider(popts);
      corpus::Split eval_split = load_named_split(data_root, config.split);
      corpus::Split train_split = corpus::load_split(data_root, corpus::SplitName::train);
      pipeline::Runner runner(*built.provider, builder);
      print_summary(runner.run(config, eval_split, train_split, options));
      return kExitOk;
    }

    if (grid->parsed()) {
      pipeline::RunConfig base;
      base.task = corpus::task_from_string(g_task);
      base.scheme = pipeline::run_scheme_from_string(g_scheme);
      base.shot.kind = prompts::shot_kind_from_string(g_shots);
      base.shot.k = g_k >= 0 ? g_k : default_k(g_shots);
      base.model = g_model;
      base.seed = g_seed;
      base.split = g_split; // constrained to dev above
      base.parallelism = g_parallelism;
      base.use_tools = !g_no_tools;
      if (g_to < g_from) throw CLI::ValidationError("--to", "grid end below grid start");

      prompts::PromptBuilder builder(load_catalog(templates_dir));
      BuiltProvider built = build_provider(grid_provider);
      corpus::Split eval_split = load_named_split(data_root, base.split);
      corpus::Split train_split = corpus::load_split(data_root, corpus::SplitName::train);
      pipeline::Runner runner(*built.provider, builder);

      int points = static_cast<int>((g_to - g_from) / g_step + 1e-9) + 1;
      std::printf("%-12s %-18s %9s %9s\n", "temperature", "run id", "accuracy", "rmse");
      for (int i = 0; i < points; ++i) {
        pipeline::RunConfig config = base;
        config.temperature = g_from + g_step * i;
        config.validate();
        pipeline::RunOptions options;
        options.log_dir = log_dir;
        options.resume = true; // cached points are picked up, not re-run
        options.limit = g_limit;
        pipeline::RunSummary summary = runner.run(config, eval_split, train_split, options);
        pipeline::RunLog log = pipeline::read_run_log(summary.log_path);
        scoring::ScoreReport report = scoring::score_run(log, eval_split, g_limit > 0);
        char rmse[16] = "-";
        if (report.metrics.confidence_rmse)
          std::snprintf(rmse, sizeof(rmse), "%.3f", *report.metrics.confidence_rmse);
        std::printf("%-12s %-18s %9.3f %9s\n",
                    util::format_temperature(config.temperature).c_str(), summary.run_id.c_str(),
                    report.metrics.accuracy, rmse);
      }
      return kExitOk;
    }

    if (score->parsed() || compare->parsed()) {
      const bool is_compare = compare->parsed();
      pipeline::RunLog log = open_run_log(log_dir, is_compare ? cmp_run_id : score_run_id,
                                          is_compare ? cmp_log : score_log);
      corpus::Split eval_split = load_named_split(data_root, log.header.config.split);
      scoring::ScoreReport report =
          scoring::score_run(log, eval_split, is_compare ? cmp_allow_partial : allow_partial);

      if (is_compare) {
        std::fputs(scoring::render_comparison(report.config, report.metrics).c_str(), stdout);
        return kExitOk;
      }

      std::fputs(scoring::render_metrics(report).c_str(), stdout);
      if (!score_json_out.empty()) {
        nlohmann::ordered_json j;
        j["run_id"] = report.run_id;
        j["config"] = report.config.to_json();
        j["total"] = report.metrics.total;
        j["correct"] = report.metrics.correct;
        j["abstained"] = report.metrics.abstained;
        j["failed"] = report.metrics.failed;
        j["accuracy"] = report.metrics.accuracy;
        if (report.metrics.confidence_rmse) j["confidence_rmse"] = *report.metrics.confidence_rmse;
        if (report.metrics.combined) j["combined"] = *report.metrics.combined;
        if (report.metrics.hit_any) j["hit_any"] = *report.metrics.hit_any;
        util::write_file_atomic(score_json_out, j.dump(2));
        std::printf("report written to %s\n", score_json_out.c_str());
      }
      if (require_beat_baseline) {
        scoring::BaselineResult base =
            report.config.scheme == pipeline::RunScheme::stance3
                ? scoring::majority_baseline_sdq(eval_split)
                : scoring::majority_baseline(eval_split, report.config.task);
        if (report.metrics.accuracy <= base.accuracy) {
          std::printf("gate: accuracy %.3f does not beat the majority baseline %.3f\n",
                      report.metrics.accuracy, base.accuracy);
          return kExitGate;
        }
        std::printf("gate: accuracy %.3f beats the majority baseline %.3f\n",
                    report.metrics.accuracy, base.accuracy);
      }
      return kExitOk;
    }

    if (baseline->parsed()) {
      corpus::Split s = load_named_split(data_root, b_split);
      std::printf("split %s majority baselines\n", b_split.c_str());
      if (b_task.empty() || b_task == "veracity") {
        scoring::BaselineResult v = scoring::majority_baseline(s, corpus::Task::veracity);
        std::printf("  veracity      %-10s %4d/%-4d accuracy %.6f\n", v.label.c_str(), v.correct,
                    v.total, v.accuracy);
      }
      if (b_task.empty() || b_task == "stance") {
        scoring::BaselineResult st = scoring::majority_baseline(s, corpus::Task::stance);
        scoring::BaselineResult sdq = scoring::majority_baseline_sdq(s);
        std::printf("  stance 4-way  %-10s %4d/%-4d accuracy %.6f\n", st.label.c_str(), st.correct,
                    st.total, st.accuracy);
        std::printf("  stance S/D/Q  %-10s %4d/%-4d accuracy %.6f\n", sdq.label.c_str(),
                    sdq.correct, sdq.total, sdq.accuracy);
      }
      return kExitOk;
    }
  } catch (const CLI::Error& e) {
    app.exit(e);
    return kExitUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
  return kExitUsage;
}
