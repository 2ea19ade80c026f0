#pragma once

#include <string>
#include <variant>
#include <vector>

namespace rumourbench::parse {

// A structured model answer. Invariants (enforced by parse_prediction):
//   - labels.size() == confidences.size(), labels non-empty and unique
//   - every label is in the allowed vocabulary, every confidence in [0, 1]
//   - multi-label predictions are ordered by confidence, non-increasing
struct Prediction {
  std::vector<std::string> labels;
  std::vector<double> confidences;
  std::string justification;

  bool operator==(const Prediction&) const = default;
};

enum class ParseErrorKind {
  unparseable,      // no recoverable structure anywhere in the text
  missing_field,    // structure found but a required field is absent/empty
  unknown_label,    // label outside the allowed vocabulary
  duplicate_label,  // same label listed twice
  label_count,      // wrong number of labels for the scheme
  confidence_range, // confidence outside [0, 1]
  length_mismatch,  // labels and confidences disagree in length
};

std::string to_string(ParseErrorKind k);

struct ParseError {
  ParseErrorKind kind = ParseErrorKind::unparseable;
  std::string detail;
};

struct ParseSpec {
  std::vector<std::string> labels; // allowed vocabulary, lowercase
  bool multi_label = false;        // false => exactly one label required
};

using ParseResult = std::variant<Prediction, ParseError>;

// Total function over arbitrary bytes; never throws. Recovery phases:
//   1. the whole payload as a JSON object
//   2. a fenced code block containing a JSON object
//   3. the first balanced {...} region that parses as a JSON object
//   4. key-pattern scan for quoted key/value lines (handles Python-style
//      single-quoted reprs with no enclosing braces)
ParseResult parse_prediction(const std::string& raw, const ParseSpec& spec);

// Lowercases, trims whitespace, and strips edge punctuation: "TRUE." -> "true".
std::string normalize_label(const std::string& s);

} // namespace rumourbench::parse
