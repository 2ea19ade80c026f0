#include "rumourbench/prompts.hpp"

#include <algorithm>
#include <filesystem>
#include <random>
#include <sstream>

#include "rumourbench/prompt_templates.hpp"
#include "rumourbench/util.hpp"

namespace fs = std::filesystem;

namespace rumourbench::prompts {

namespace {

const std::vector<SchemeId> kAllSchemes = {
    SchemeId::binary,          SchemeId::ternary, SchemeId::two_step_stage1,
    SchemeId::two_step_stage2, SchemeId::stance3, SchemeId::stance4,
    SchemeId::stance_multi,
};

std::vector<ShotKind> scheme_shot_kinds(SchemeId s) {
  if (scheme_is_stance(s)) return {ShotKind::zero};
  return {ShotKind::zero, ShotKind::one, ShotKind::few};
}

const char* builtin_template(SchemeId s, ShotKind k) {
  using namespace templates;
  switch (s) {
    case SchemeId::binary:
      return k == ShotKind::zero ? kBinaryZero : k == ShotKind::one ? kBinaryOne : kBinaryFew;
    case SchemeId::ternary:
      return k == ShotKind::zero ? kTernaryZero : k == ShotKind::one ? kTernaryOne : kTernaryFew;
    case SchemeId::two_step_stage1:
      return k == ShotKind::zero   ? kTwoStepStage1Zero
             : k == ShotKind::one ? kTwoStepStage1One
                                  : kTwoStepStage1Few;
    case SchemeId::two_step_stage2:
      return k == ShotKind::zero   ? kTwoStepStage2Zero
             : k == ShotKind::one ? kTwoStepStage2One
                                  : kTwoStepStage2Few;
    case SchemeId::stance3:
      return kStance3Zero;
    case SchemeId::stance4:
      return kStance4Zero;
    case SchemeId::stance_multi:
      return kStanceMultiZero;
  }
  throw PromptError("unknown scheme id");
}

// Replace every {name} placeholder in one pass so substituted values are
// never re-scanned (a tweet containing "{examples}" must stay literal).
std::string render(const std::string& tmpl, const std::map<std::string, std::string>& values) {
  std::string out;
  out.reserve(tmpl.size() + 256);
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    auto open = tmpl.find('{', pos);
    if (open == std::string::npos) {
      out.append(tmpl, pos, std::string::npos);
      break;
    }
    auto close = tmpl.find('}', open + 1);
    if (close == std::string::npos) {
      out.append(tmpl, pos, std::string::npos);
      break;
    }
    std::string name = tmpl.substr(open + 1, close - open - 1);
    auto it = values.find(name);
    if (it == values.end()) {
      out.append(tmpl, pos, open + 1 - pos);
      pos = open + 1;
      continue;
    }
    out.append(tmpl, pos, open - pos);
    out.append(it->second);
    pos = close + 1;
  }
  return out;
}

bool has_definition_line(const std::string& tmpl, const std::string& label) {
  std::string needle = label + ":";
  std::size_t pos = 0;
  while ((pos = tmpl.find(needle, pos)) != std::string::npos) {
    if (pos == 0 || tmpl[pos - 1] == '\n') return true;
    pos += 1;
  }
  return false;
}

} // namespace

std::string to_string(SchemeId s) {
  switch (s) {
    case SchemeId::binary: return "binary";
    case SchemeId::ternary: return "ternary";
    case SchemeId::two_step_stage1: return "two_step_stage1";
    case SchemeId::two_step_stage2: return "two_step_stage2";
    case SchemeId::stance3: return "stance3";
    case SchemeId::stance4: return "stance4";
    case SchemeId::stance_multi: return "stance_multi";
  }
  throw PromptError("unknown scheme id");
}

SchemeId scheme_from_string(const std::string& s) {
  for (auto id : kAllSchemes)
    if (to_string(id) == s) return id;
  throw PromptError("unknown prompt scheme: '" + s + "'");
}

std::string to_string(ShotKind k) {
  switch (k) {
    case ShotKind::zero: return "zero";
    case ShotKind::one: return "one";
    case ShotKind::few: return "few";
  }
  throw PromptError("unknown shot kind");
}

ShotKind shot_kind_from_string(const std::string& s) {
  if (s == "zero") return ShotKind::zero;
  if (s == "one") return ShotKind::one;
  if (s == "few") return ShotKind::few;
  throw PromptError("unknown shot kind: '" + s + "'");
}

void ShotSetting::validate() const {
  switch (kind) {
    case ShotKind::zero:
      if (k != 0) throw PromptError("zero-shot requires k=0, got k=" + std::to_string(k));
      return;
    case ShotKind::one:
      if (k != 1) throw PromptError("one-shot requires k=1, got k=" + std::to_string(k));
      return;
    case ShotKind::few:
      if (k != 2 && k != 4 && k != 6)
        throw PromptError("few-shot requires k in {2, 4, 6}, got k=" + std::to_string(k));
      return;
  }
  throw PromptError("unknown shot kind");
}

std::vector<std::string> scheme_labels(SchemeId s) {
  switch (s) {
    case SchemeId::binary:
    case SchemeId::two_step_stage2: return {"false", "true"};
    case SchemeId::ternary: return {"false", "true", "unverified"};
    case SchemeId::two_step_stage1: return {"unverified", "verified"};
    case SchemeId::stance3: return {"deny", "query", "support"};
    case SchemeId::stance4:
    case SchemeId::stance_multi: return {"comment", "deny", "query", "support"};
  }
  throw PromptError("unknown scheme id");
}

bool scheme_is_stance(SchemeId s) {
  return s == SchemeId::stance3 || s == SchemeId::stance4 || s == SchemeId::stance_multi;
}

bool scheme_is_multi_label(SchemeId s) { return s == SchemeId::stance_multi; }

std::string PromptCatalog::cell_name(SchemeId scheme, ShotKind kind) {
  return to_string(scheme) + "-" + to_string(kind);
}

PromptCatalog PromptCatalog::builtin() {
  PromptCatalog cat;
  for (auto scheme : kAllSchemes)
    for (auto kind : scheme_shot_kinds(scheme))
      cat.cells_[cell_name(scheme, kind)] = builtin_template(scheme, kind);
  cat.validate();
  return cat;
}

PromptCatalog PromptCatalog::load(const std::string& dir) {
  PromptCatalog cat;
  for (auto scheme : kAllSchemes) {
    for (auto kind : scheme_shot_kinds(scheme)) {
      fs::path path = fs::path(dir) / (cell_name(scheme, kind) + ".txt");
      if (!fs::exists(path))
        throw PromptError("prompt catalog is missing template file: " + path.string());
      cat.cells_[cell_name(scheme, kind)] = util::read_file(path.string());
    }
  }
  cat.validate();
  return cat;
}

void PromptCatalog::save(const std::string& dir) const {
  fs::create_directories(dir);
  for (const auto& [name, text] : cells_)
    util::write_file_atomic((fs::path(dir) / (name + ".txt")).string(), text);
}

const std::string& PromptCatalog::get(SchemeId scheme, ShotKind kind) const {
  auto it = cells_.find(cell_name(scheme, kind));
  if (it == cells_.end())
    throw PromptError("no template for cell '" + cell_name(scheme, kind) + "'");
  return it->second;
}

std::string PromptCatalog::digest() const {
  std::vector<std::string_view> parts;
  parts.reserve(cells_.size() * 2);
  for (const auto& [name, text] : cells_) {
    parts.push_back(name);
    parts.push_back(text);
  }
  return util::sha256_hex(parts);
}

void PromptCatalog::validate() const {
  for (auto scheme : kAllSchemes) {
    for (auto kind : scheme_shot_kinds(scheme)) {
      auto it = cells_.find(cell_name(scheme, kind));
      if (it == cells_.end())
        throw PromptError("catalog is missing cell '" + cell_name(scheme, kind) + "'");
      const std::string& tmpl = it->second;
      const std::string cell = cell_name(scheme, kind);
      auto require = [&](const std::string& token) {
        if (tmpl.find(token) == std::string::npos)
          throw PromptError("template '" + cell + "' lacks required " + token);
      };
      if (scheme_is_stance(scheme)) {
        require("{reply_text}");
        require("{source_text}");
      } else {
        require("{tweet_text}");
      }
      if (kind != ShotKind::zero) require("{examples}");
      for (const auto& label : scheme_labels(scheme)) {
        if (!has_definition_line(tmpl, label))
          throw PromptError("template '" + cell + "' lacks a definition line for class '" +
                            label + "'");
      }
    }
  }
}

std::vector<corpus::VeracityExample> select_shots(
    const std::vector<corpus::VeracityExample>& train, int k, std::uint64_t seed,
    const std::function<std::string(const corpus::VeracityExample&)>& strat_label) {
  if (k < 0) throw PromptError("shot count must be non-negative, got " + std::to_string(k));
  if (k == 0) return {};
  if (static_cast<std::size_t>(k) > train.size())
    throw PromptError("requested " + std::to_string(k) + " shots but the pool has only " +
                      std::to_string(train.size()) + " examples");

  auto label_of = [&](const corpus::VeracityExample& ex) {
    return strat_label ? strat_label(ex) : ex.tweet_class;
  };

  std::map<std::string, std::vector<corpus::VeracityExample>> groups;
  for (const auto& ex : train) groups[label_of(ex)].push_back(ex);

  std::mt19937_64 rng(seed);
  for (auto& [label, group] : groups) {
    std::sort(group.begin(), group.end(),
              [](const auto& a, const auto& b) { return util::id_less(a.tweet_id, b.tweet_id); });
    for (std::size_t i = group.size(); i > 1; --i) {
      std::size_t j = rng() % i;
      std::swap(group[i - 1], group[j]);
    }
  }

  std::vector<corpus::VeracityExample> picked;
  picked.reserve(static_cast<std::size_t>(k));
  std::map<std::string, std::size_t> cursor;
  while (picked.size() < static_cast<std::size_t>(k)) {
    bool advanced = false;
    for (auto& [label, group] : groups) {
      auto& at = cursor[label];
      if (at >= group.size()) continue;
      picked.push_back(group[at++]);
      advanced = true;
      if (picked.size() == static_cast<std::size_t>(k)) break;
    }
    if (!advanced) throw PromptError("shot pool exhausted before k examples were drawn");
  }
  return picked;
}

PromptBuilder::PromptBuilder(PromptCatalog catalog) : catalog_(std::move(catalog)) {}

void PromptBuilder::set_train_ids(std::set<std::string> ids) { train_ids_ = std::move(ids); }

std::string PromptBuilder::shot_label(SchemeId scheme, const std::string& gold) {
  if (scheme == SchemeId::two_step_stage1) {
    if (gold == "unverified") return "unverified";
    if (gold == "true" || gold == "false") return "verified";
    throw PromptError("cannot map class '" + gold + "' into verified/unverified");
  }
  return gold;
}

PromptText PromptBuilder::build_veracity(SchemeId scheme, const ShotSetting& shot,
                                         const corpus::VeracityExample& target,
                                         const std::vector<corpus::VeracityExample>& shots) const {
  if (scheme_is_stance(scheme))
    throw PromptError("scheme '" + to_string(scheme) + "' is a stance scheme");
  shot.validate();
  if (static_cast<int>(shots.size()) != shot.k)
    throw PromptError("expected " + std::to_string(shot.k) + " shot examples, got " +
                      std::to_string(shots.size()));

  auto labels = scheme_labels(scheme);
  std::set<std::string> seen_ids;
  std::ostringstream examples;
  for (std::size_t i = 0; i < shots.size(); ++i) {
    const auto& ex = shots[i];
    if (ex.tweet_id == target.tweet_id)
      throw PromptError("target tweet " + target.tweet_id + " leaked into its own shot examples");
    if (!seen_ids.insert(ex.tweet_id).second)
      throw PromptError("duplicate shot example " + ex.tweet_id);
    if (train_ids_ && !train_ids_->count(ex.tweet_id))
      throw PromptError("shot example " + ex.tweet_id + " is not in the training split");
    std::string mapped = shot_label(scheme, ex.tweet_class);
    if (std::find(labels.begin(), labels.end(), mapped) == labels.end())
      throw PromptError("shot example " + ex.tweet_id + " has class '" + mapped +
                        "' outside the scheme vocabulary");
    if (i > 0) examples << "\n";
    examples << "tweet: " << ex.tweet_text << "\n" << "prediction: " << mapped;
  }
  if (train_ids_ && train_ids_->count(target.tweet_id))
    throw PromptError("target tweet " + target.tweet_id + " belongs to the training split");

  PromptText out;
  out.scheme = scheme;
  out.shot_kind = shot.kind;
  out.shot_count = shot.k;
  out.text = render(catalog_.get(scheme, shot.kind),
                    {{"tweet_text", target.tweet_text}, {"examples", examples.str()}});
  return out;
}

PromptText PromptBuilder::build_stance(SchemeId scheme, const corpus::StanceExample& target) const {
  if (!scheme_is_stance(scheme))
    throw PromptError("scheme '" + to_string(scheme) + "' is not a stance scheme");
  PromptText out;
  out.scheme = scheme;
  out.shot_kind = ShotKind::zero;
  out.shot_count = 0;
  out.text = render(catalog_.get(scheme, ShotKind::zero),
                    {{"reply_text", target.reply_text}, {"source_text", target.tweet_text}});
  return out;
}

} // namespace rumourbench::prompts
