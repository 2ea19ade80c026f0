#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "rumourbench/corpus.hpp"

namespace rumourbench::prompts {

class PromptError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Prompt-level schemes. two_step expands to two scheme ids because each
// stage has its own template and label vocabulary.
enum class SchemeId {
  binary,
  ternary,
  two_step_stage1,
  two_step_stage2,
  stance3,
  stance4,
  stance_multi,
};

std::string to_string(SchemeId s);
SchemeId scheme_from_string(const std::string& s);

enum class ShotKind { zero, one, few };

std::string to_string(ShotKind k);
ShotKind shot_kind_from_string(const std::string& s);

struct ShotSetting {
  ShotKind kind = ShotKind::zero;
  int k = 0; // zero => 0, one => 1, few => one of {2, 4, 6}

  void validate() const; // throws PromptError on kind/k mismatch
};

// Label vocabulary a scheme's answers are drawn from, lexicographic.
std::vector<std::string> scheme_labels(SchemeId s);
bool scheme_is_stance(SchemeId s);
bool scheme_is_multi_label(SchemeId s);

// A rendered prompt plus the metadata scoring and logging need.
struct PromptText {
  std::string text;
  SchemeId scheme = SchemeId::ternary;
  ShotKind shot_kind = ShotKind::zero;
  int shot_count = 0;
};

// Holds one template per (scheme, shot-kind) cell. Built-in templates can
// be exported with save() and an edited copy read back with load(); every
// template is validated on construction (placeholders present, one
// definition line per scheme label).
class PromptCatalog {
 public:
  static PromptCatalog builtin();
  static PromptCatalog load(const std::string& dir); // throws PromptError
  void save(const std::string& dir) const;

  const std::string& get(SchemeId scheme, ShotKind kind) const;
  // SHA-256 over the full template set; folded into run config digests so
  // an edited catalog produces a different run identity.
  std::string digest() const;

  static std::string cell_name(SchemeId scheme, ShotKind kind); // e.g. "ternary-one"

 private:
  PromptCatalog() = default;
  void validate() const;
  std::map<std::string, std::string> cells_; // cell_name -> template text
};

// Deterministic, class-stratified k-shot selection. Groups `train` by
// strat_label (defaults to the gold class), shuffles each group with a
// seeded RNG, then takes round-robin over labels in lexicographic order.
std::vector<corpus::VeracityExample> select_shots(
    const std::vector<corpus::VeracityExample>& train, int k, std::uint64_t seed,
    const std::function<std::string(const corpus::VeracityExample&)>& strat_label = {});

class PromptBuilder {
 public:
  explicit PromptBuilder(PromptCatalog catalog);

  // When set, every shot example must come from this id set and the target
  // must not; violations throw PromptError (leakage guard).
  void set_train_ids(std::set<std::string> ids);

  PromptText build_veracity(SchemeId scheme, const ShotSetting& shot,
                            const corpus::VeracityExample& target,
                            const std::vector<corpus::VeracityExample>& shots) const;

  PromptText build_stance(SchemeId scheme, const corpus::StanceExample& target) const;

  // Label a shot example carries inside a given scheme's prompt
  // (two_step_stage1 maps true/false -> verified).
  static std::string shot_label(SchemeId scheme, const std::string& gold);

  const PromptCatalog& catalog() const { return catalog_; }

 private:
  PromptCatalog catalog_;
  std::optional<std::set<std::string>> train_ids_;
};

} // namespace rumourbench::prompts
