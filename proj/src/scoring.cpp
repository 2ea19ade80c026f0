#include "rumourbench/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "rumourbench/util.hpp"

namespace rumourbench::scoring {

namespace {

std::string join_ids(const std::vector<std::string>& ids, std::size_t cap = 8) {
  std::ostringstream out;
  for (std::size_t i = 0; i < ids.size() && i < cap; ++i) {
    if (i) out << ", ";
    out << ids[i];
  }
  if (ids.size() > cap) out << ", and " << ids.size() - cap << " more";
  return out.str();
}

std::string fmt3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

std::string fmt_delta(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%+.3f", v);
  return buf;
}

} // namespace

double accuracy(int correct, int total) {
  if (total <= 0) throw ScoringError("cannot compute accuracy over zero examples");
  if (correct < 0 || correct > total)
    throw ScoringError("correct count " + std::to_string(correct) + " outside [0, " +
                       std::to_string(total) + "]");
  return static_cast<double>(correct) / static_cast<double>(total);
}

double combined_score(double acc, double rmse) { return (1.0 - rmse) * acc; }

Metrics score_records(const std::vector<pipeline::RunRecord>& records,
                      const std::map<std::string, std::string>& gold,
                      pipeline::RunScheme scheme, std::vector<ScoredExample>* out_examples) {
  if (records.empty()) throw ScoringError("no records to score");

  const bool multi = scheme == pipeline::RunScheme::stance_multi;
  Metrics m;
  std::set<std::string> seen;
  double sq_error_sum = 0;
  int hit_any_count = 0;

  for (const auto& r : records) {
    auto it = gold.find(r.example_id);
    if (it == gold.end())
      throw ScoringError("record for example " + r.example_id + " has no gold label in scope");
    if (!seen.insert(r.example_id).second)
      throw ScoringError("example " + r.example_id + " appears more than once in the run log");
    const std::string& gold_label = it->second;

    ScoredExample ex;
    ex.example_id = r.example_id;
    ex.gold = gold_label;
    ex.predicted = r.labels;
    ex.status = r.status;

    if (r.status == "ok") {
      if (r.labels.empty())
        throw ScoringError("record " + r.example_id + " is ok but has no labels");
      if (r.confidences.size() != r.labels.size())
        throw ScoringError("record " + r.example_id + " has " + std::to_string(r.labels.size()) +
                           " labels but " + std::to_string(r.confidences.size()) + " confidences");
      ex.correct = r.labels[0] == gold_label;
      ex.confidence = r.confidences[0];
      m.per_class[r.labels[0]].predicted += 1;
      if (multi &&
          std::find(r.labels.begin(), r.labels.end(), gold_label) != r.labels.end())
        ++hit_any_count;
    } else if (r.status == "abstained" || r.status == "failed") {
      ex.correct = false;
      ex.confidence = 0;
      if (r.status == "abstained") ++m.abstained;
      else ++m.failed;
    } else {
      throw ScoringError("record " + r.example_id + " has unknown status '" + r.status + "'");
    }

    double e = ex.correct ? 1.0 - ex.confidence : 1.0;
    sq_error_sum += e * e;

    m.total += 1;
    if (ex.correct) m.correct += 1;
    m.per_class[gold_label].gold += 1;
    if (ex.correct) m.per_class[gold_label].correct += 1;
    if (out_examples) out_examples->push_back(std::move(ex));
  }

  m.accuracy = accuracy(m.correct, m.total);
  if (scheme == pipeline::RunScheme::binary) {
    double rmse = std::sqrt(sq_error_sum / static_cast<double>(m.total));
    m.confidence_rmse = rmse;
    m.combined = combined_score(m.accuracy, rmse);
  }
  if (multi) m.hit_any = accuracy(hit_any_count, m.total);
  return m;
}

ScoreReport score_run(const pipeline::RunLog& log, const corpus::Split& split,
                      bool allow_partial) {
  const pipeline::RunConfig& config = log.header.config;
  config.validate();
  if (config.split != corpus::to_string(split.name))
    throw ScoringError("run evaluated split '" + config.split + "' but split '" +
                       corpus::to_string(split.name) + "' was loaded");

  std::map<std::string, std::string> gold;
  if (config.task == corpus::Task::veracity) {
    for (const auto& ex : split.veracity) gold[ex.tweet_id] = ex.tweet_class;
  } else {
    for (const auto& ex : split.stance) {
      // The three-way scheme evaluates only replies whose gold stance is
      // support, deny, or query (the scope the run itself used).
      if (config.scheme == pipeline::RunScheme::stance3 && ex.reply_class == "comment") continue;
      gold[ex.reply_id] = ex.reply_class;
    }
  }

  std::set<std::string> covered;
  for (const auto& r : log.records) covered.insert(r.example_id);
  std::vector<std::string> missing;
  for (const auto& [id, label] : gold) {
    (void)label;
    if (!covered.count(id)) missing.push_back(id);
  }
  if (!missing.empty() && !allow_partial)
    throw ScoringError("run log is missing " + std::to_string(missing.size()) +
                       " examples from the " + config.split + " split: " + join_ids(missing));

  std::map<std::string, std::string> in_scope_gold;
  if (allow_partial) {
    for (const auto& r : log.records) {
      auto it = gold.find(r.example_id);
      if (it != gold.end()) in_scope_gold.insert(*it);
    }
  }

  ScoreReport report;
  report.config = config;
  report.run_id = log.header.run_id;
  report.metrics = score_records(log.records, allow_partial ? in_scope_gold : gold, config.scheme,
                                 &report.examples);
  return report;
}

BaselineResult majority_baseline(const corpus::Split& split, corpus::Task task) {
  std::map<std::string, int> counts;
  int total = 0;
  if (task == corpus::Task::veracity) {
    for (const auto& ex : split.veracity) {
      ++counts[ex.tweet_class];
      ++total;
    }
  } else {
    for (const auto& ex : split.stance) {
      ++counts[ex.reply_class];
      ++total;
    }
  }
  if (total == 0)
    throw ScoringError("split has no examples for task '" + corpus::to_string(task) + "'");
  BaselineResult b;
  for (const auto& [label, n] : counts) {
    if (n > b.correct) { // map iteration is ascending: ties keep the first
      b.correct = n;
      b.label = label;
    }
  }
  b.total = total;
  b.accuracy = accuracy(b.correct, b.total);
  return b;
}

BaselineResult majority_baseline_sdq(const corpus::Split& split) {
  std::map<std::string, int> counts;
  int total = 0;
  for (const auto& ex : split.stance) {
    if (ex.reply_class == "comment") continue;
    ++counts[ex.reply_class];
    ++total;
  }
  if (total == 0) throw ScoringError("split has no support/deny/query replies");
  BaselineResult b;
  for (const auto& [label, n] : counts) {
    if (n > b.correct) {
      b.correct = n;
      b.label = label;
    }
  }
  b.total = total;
  b.accuracy = accuracy(b.correct, b.total);
  return b;
}

const std::vector<ReferenceRow>& reference_rows() {
  static const std::vector<ReferenceRow> rows = {
      // RumourEval-2017 subtask B (veracity): accuracy and confidence RMSE.
      {"veracity", "ITP", "", "", "", 0.393, 0.746, true},
      {"veracity", "DFKI DKT", "", "", "", 0.393, 0.845, true},
      {"veracity", "ECNU", "", "", "", 0.464, 0.736, true},
      {"veracity", "IITP", "", "", "", 0.286, 0.807, true},
      {"veracity", "IKM", "", "", "", 0.536, 0.763, true},
      {"veracity", "NileTMRG", "", "", "", 0.536, 0.672, true},
      {"veracity", "Baseline (majority class)", "", "", "", 0.571, std::nullopt, true},
      {"veracity", "GPT-3.5-turbo 2-way", "gpt-3.5-turbo", "binary", "zero", 0.679, 0.513, false},
      {"veracity", "GPT-3.5-turbo 2-way", "gpt-3.5-turbo", "binary", "one", 0.607, 0.311, false},
      {"veracity", "GPT-3.5-turbo 2-way", "gpt-3.5-turbo", "binary", "few", 0.538, 0.398, false},
      {"veracity", "GPT-3.5-turbo 3-way", "gpt-3.5-turbo", "ternary", "zero", 0.643, std::nullopt, false},
      {"veracity", "GPT-3.5-turbo 3-way", "gpt-3.5-turbo", "ternary", "one", 0.679, std::nullopt, false},
      {"veracity", "GPT-3.5-turbo 3-way", "gpt-3.5-turbo", "ternary", "few", 0.571, std::nullopt, false},
      {"veracity", "GPT-3.5-turbo 2-step", "gpt-3.5-turbo", "two_step", "zero", 0.429, std::nullopt, false},
      {"veracity", "GPT-3.5-turbo 2-step", "gpt-3.5-turbo", "two_step", "one", 0.464, std::nullopt, false},
      {"veracity", "GPT-3.5-turbo 2-step", "gpt-3.5-turbo", "two_step", "few", 0.500, std::nullopt, false},
      {"veracity", "GPT-4 2-way", "gpt-4", "binary", "zero", 0.714, 0.178, false},
      {"veracity", "GPT-4 2-way", "gpt-4", "binary", "one", 0.643, 0.220, false},
      {"veracity", "GPT-4 2-way", "gpt-4", "binary", "few", 0.607, 0.292, false},
      {"veracity", "GPT-4 3-way", "gpt-4", "ternary", "zero", 0.393, std::nullopt, false},
      {"veracity", "GPT-4 3-way", "gpt-4", "ternary", "one", 0.357, std::nullopt, false},
      {"veracity", "GPT-4 3-way", "gpt-4", "ternary", "few", 0.357, std::nullopt, false},
      {"veracity", "GPT-4 2-step", "gpt-4", "two_step", "zero", 0.357, std::nullopt, false},
      {"veracity", "GPT-4 2-step", "gpt-4", "two_step", "one", 0.429, std::nullopt, false},
      {"veracity", "GPT-4 2-step", "gpt-4", "two_step", "few", 0.429, std::nullopt, false},
      // RumourEval-2017 subtask A (stance): accuracy.
      {"stance", "DFKI DKT", "", "", "", 0.635, std::nullopt, true},
      {"stance", "ECNU", "", "", "", 0.778, std::nullopt, true},
      {"stance", "IITP", "", "", "", 0.641, std::nullopt, true},
      {"stance", "IKM", "", "", "", 0.701, std::nullopt, true},
      {"stance", "Mama Edha", "", "", "", 0.749, std::nullopt, true},
      {"stance", "NileTMRG", "", "", "", 0.709, std::nullopt, true},
      {"stance", "Turing", "", "", "", 0.784, std::nullopt, true},
      {"stance", "UWaterloo", "", "", "", 0.780, std::nullopt, true},
      {"stance", "Baseline (majority class, 4-way)", "", "stance4", "", 0.741, std::nullopt, true},
      {"stance", "Baseline (majority class, S/D/Q)", "", "stance3", "", 0.391, std::nullopt, true},
      {"stance", "GPT-4 4-way", "gpt-4", "stance4", "zero", 0.580, std::nullopt, false},
      {"stance", "GPT-3.5-turbo 4-way", "gpt-3.5-turbo", "stance4", "zero", 0.620, std::nullopt, false},
      {"stance", "GPT-4 S/D/Q", "gpt-4", "stance3", "zero", 0.774, std::nullopt, false},
      {"stance", "GPT-3.5-turbo S/D/Q", "gpt-3.5-turbo", "stance3", "zero", 0.650, std::nullopt, false},
  };
  return rows;
}

namespace {

std::string model_family(const std::string& model) {
  std::string m = util::to_lower(model);
  if (m.find("gpt-4") != std::string::npos) return "gpt-4";
  if (m.find("gpt-3.5") != std::string::npos) return "gpt-3.5-turbo";
  return m;
}

// The one-or-more-labels scheme is scored top-1, so it shares the 4-way
// reference rows.
std::string reference_scheme(pipeline::RunScheme scheme) {
  if (scheme == pipeline::RunScheme::stance_multi) return "stance4";
  return pipeline::to_string(scheme);
}

} // namespace

std::string render_comparison(const pipeline::RunConfig& config, const Metrics& metrics) {
  const std::string table = config.task == corpus::Task::veracity ? "veracity" : "stance";
  const std::string family = model_family(config.model);
  const std::string scheme = reference_scheme(config.scheme);
  const std::string shots = prompts::to_string(config.shot.kind);

  std::ostringstream out;
  out << "observed: accuracy " << fmt3(metrics.accuracy);
  if (metrics.confidence_rmse) out << ", confidence rmse " << fmt3(*metrics.confidence_rmse);
  if (metrics.combined) out << ", combined " << fmt3(*metrics.combined);
  out << " (" << metrics.total << " examples, " << config.model << ", " << pipeline::to_string(config.scheme)
      << ", " << shots << "-shot)\n\n";

  char line[256];
  std::snprintf(line, sizeof(line), "%-38s %9s %9s %9s %9s  %s\n", "reference", "acc", "d-acc",
                "rmse", "d-rmse", "notes");
  out << line;
  bool matched_llm = false;
  for (const auto& row : reference_rows()) {
    if (row.table != table) continue;
    bool is_llm = !row.model.empty();
    bool scheme_specific = !row.scheme.empty();
    if (is_llm && (row.model != family || row.scheme != scheme || row.shots != shots)) continue;
    if (!is_llm && scheme_specific && row.scheme != scheme) continue;
    if (is_llm) matched_llm = true;

    std::string d_acc = fmt_delta(metrics.accuracy - row.accuracy);
    std::string rmse = row.confidence_rmse ? fmt3(*row.confidence_rmse) : "-";
    std::string d_rmse = (row.confidence_rmse && metrics.confidence_rmse)
                             ? fmt_delta(*metrics.confidence_rmse - *row.confidence_rmse)
                             : "-";
    std::string notes = row.deterministic ? "" : "sampled decoding; expect drift";
    std::snprintf(line, sizeof(line), "%-38s %9s %9s %9s %9s  %s\n", row.system.c_str(),
                  fmt3(row.accuracy).c_str(), d_acc.c_str(), rmse.c_str(), d_rmse.c_str(),
                  notes.c_str());
    out << line;
  }
  if (!matched_llm)
    out << "(no published LLM reference for " << config.model << " / " << pipeline::to_string(config.scheme)
        << " / " << shots << "-shot)\n";
  return out.str();
}

std::string render_metrics(const ScoreReport& report) {
  std::ostringstream out;
  const Metrics& m = report.metrics;
  out << "run " << report.run_id << ": " << pipeline::to_string(report.config.scheme) << ", "
      << prompts::to_string(report.config.shot.kind) << "-shot, model " << report.config.model
      << ", split " << report.config.split << "\n";
  out << "examples scored: " << m.total << " (ok " << m.total - m.abstained - m.failed
      << ", abstained " << m.abstained << ", failed " << m.failed << ")\n";
  out << "accuracy: " << fmt3(m.accuracy) << " (" << m.correct << "/" << m.total << ")\n";
  if (m.confidence_rmse) out << "confidence rmse: " << fmt3(*m.confidence_rmse) << "\n";
  if (m.combined) out << "combined score: " << fmt3(*m.combined) << "\n";
  if (m.hit_any) out << "any-label hit rate: " << fmt3(*m.hit_any) << "\n";
  out << "per class (gold/predicted/correct):\n";
  for (const auto& [label, stats] : m.per_class) {
    char line[128];
    std::snprintf(line, sizeof(line), "  %-12s %5d %9d %8d\n", label.c_str(), stats.gold,
                  stats.predicted, stats.correct);
    out << line;
  }
  return out.str();
}

} // namespace rumourbench::scoring
