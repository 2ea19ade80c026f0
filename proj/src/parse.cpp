#include "rumourbench/parse.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <numeric>
#include <optional>

#include <json.hpp>

#include "rumourbench/util.hpp"

using nlohmann::json;

namespace rumourbench::parse {

namespace {

const std::vector<std::string> kLabelKeys = {"predictions", "prediction", "labels", "label"};
const std::vector<std::string> kConfidenceKeys = {"confidence_scores", "confidence_score",
                                                  "confidences", "confidence", "score"};
const std::vector<std::string> kJustificationKeys = {"justification", "explanation", "reasoning",
                                                     "reason"};

bool is_word_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

std::optional<double> parse_number(const std::string& s) {
  std::string t = util::trim(s);
  if (t.empty()) return std::nullopt;
  char* end = nullptr;
  double v = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size()) return std::nullopt;
  return v;
}

// ---- structured extraction shared by every phase ----

struct RawFields {
  std::vector<std::string> labels;     // as written, pre-normalization
  std::vector<double> confidences;
  bool have_labels = false;
  bool have_confidences = false;
  std::string justification;
  bool have_justification = false;
};

struct FieldError {
  ParseError err;
};

// Either fields or a field-level error discovered during extraction.
using Extracted = std::variant<RawFields, FieldError>;

bool key_matches(const std::string& key, const std::vector<std::string>& synonyms) {
  std::string k = util::to_lower(util::trim(key));
  return std::find(synonyms.begin(), synonyms.end(), k) != synonyms.end();
}

std::optional<ParseError> take_label_value(const json& v, RawFields& out) {
  auto one = [&](const json& item) -> std::optional<ParseError> {
    if (item.is_string()) {
      out.labels.push_back(item.get<std::string>());
      return std::nullopt;
    }
    if (item.is_boolean()) {
      out.labels.push_back(item.get<bool>() ? "true" : "false");
      return std::nullopt;
    }
    return ParseError{ParseErrorKind::unknown_label,
                      "label value is not a string: " + item.dump()};
  };
  if (v.is_array()) {
    for (const auto& item : v)
      if (auto err = one(item)) return err;
  } else if (auto err = one(v)) {
    return err;
  }
  out.have_labels = true;
  return std::nullopt;
}

std::optional<ParseError> take_confidence_value(const json& v, RawFields& out) {
  auto one = [&](const json& item) -> std::optional<ParseError> {
    if (item.is_number()) {
      out.confidences.push_back(item.get<double>());
      return std::nullopt;
    }
    if (item.is_string()) {
      if (auto n = parse_number(item.get<std::string>())) {
        out.confidences.push_back(*n);
        return std::nullopt;
      }
    }
    return ParseError{ParseErrorKind::missing_field,
                      "confidence value is not numeric: " + item.dump()};
  };
  if (v.is_array()) {
    for (const auto& item : v)
      if (auto err = one(item)) return err;
  } else if (auto err = one(v)) {
    return err;
  }
  out.have_confidences = true;
  return std::nullopt;
}

Extracted extract_from_json(const json& obj) {
  RawFields out;
  for (const auto& [key, value] : obj.items()) {
    if (!out.have_labels && key_matches(key, kLabelKeys)) {
      if (auto err = take_label_value(value, out)) return FieldError{*err};
    } else if (!out.have_confidences && key_matches(key, kConfidenceKeys)) {
      if (auto err = take_confidence_value(value, out)) return FieldError{*err};
    } else if (!out.have_justification && key_matches(key, kJustificationKeys)) {
      if (value.is_string()) {
        out.justification = value.get<std::string>();
        out.have_justification = true;
      }
    }
  }
  return out;
}

bool json_has_label_key(const json& obj) {
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    if (key_matches(key, kLabelKeys)) return true;
  }
  return false;
}

// ---- phase 1-3 helpers: locating a JSON object in the payload ----

std::optional<json> try_parse_object(const std::string& text) {
  json j = json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object()) return std::nullopt;
  return j;
}

std::optional<std::string> fenced_block(const std::string& raw) {
  auto open = raw.find("```");
  if (open == std::string::npos) return std::nullopt;
  auto body_start = raw.find('\n', open);
  if (body_start == std::string::npos) return std::nullopt;
  auto close = raw.find("```", body_start);
  if (close == std::string::npos) return std::nullopt;
  return raw.substr(body_start + 1, close - body_start - 1);
}

// First balanced {...} region (double-quote aware) that parses as an object
// holding a label key. Scans at most a handful of candidate starts so
// adversarial inputs stay cheap.
std::optional<json> balanced_region_object(const std::string& raw) {
  int starts_tried = 0;
  for (std::size_t i = 0; i < raw.size() && starts_tried < 32; ++i) {
    if (raw[i] != '{') continue;
    ++starts_tried;
    int depth = 0;
    bool in_string = false;
    for (std::size_t j = i; j < raw.size(); ++j) {
      char c = raw[j];
      if (in_string) {
        if (c == '\\') {
          ++j;
        } else if (c == '"') {
          in_string = false;
        }
        continue;
      }
      if (c == '"') {
        in_string = true;
      } else if (c == '{') {
        ++depth;
      } else if (c == '}') {
        if (--depth == 0) {
          if (auto obj = try_parse_object(raw.substr(i, j - i + 1));
              obj && json_has_label_key(*obj))
            return obj;
          break;
        }
      }
    }
  }
  return std::nullopt;
}

// ---- phase 4: byte-level key-pattern scan ----

struct ScanValue {
  enum Kind { str, num, list } kind = str;
  std::string s;
  double n = 0;
  std::vector<ScanValue> items;
};

std::optional<ScanValue> scan_scalar(const std::string& raw, std::size_t& pos) {
  while (pos < raw.size() && std::isspace(static_cast<unsigned char>(raw[pos]))) ++pos;
  if (pos >= raw.size()) return std::nullopt;
  char c = raw[pos];
  if (c == '\'' || c == '"') {
    char quote = c;
    std::string out;
    for (std::size_t j = pos + 1; j < raw.size(); ++j) {
      if (raw[j] == '\\' && j + 1 < raw.size()) {
        out.push_back(raw[j + 1]);
        ++j;
        continue;
      }
      if (raw[j] == quote) {
        pos = j + 1;
        ScanValue v;
        v.kind = ScanValue::str;
        v.s = out;
        return v;
      }
      out.push_back(raw[j]);
    }
    return std::nullopt; // unterminated string
  }
  if (c == '-' || c == '+' || c == '.' || std::isdigit(static_cast<unsigned char>(c))) {
    std::size_t j = pos;
    while (j < raw.size() && (std::isdigit(static_cast<unsigned char>(raw[j])) || raw[j] == '.' ||
                              raw[j] == '-' || raw[j] == '+' || raw[j] == 'e' || raw[j] == 'E'))
      ++j;
    if (auto n = parse_number(raw.substr(pos, j - pos))) {
      pos = j;
      ScanValue v;
      v.kind = ScanValue::num;
      v.n = *n;
      return v;
    }
    return std::nullopt;
  }
  if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
    std::size_t j = pos;
    while (j < raw.size() && is_word_char(raw[j])) ++j;
    ScanValue v;
    v.kind = ScanValue::str;
    v.s = raw.substr(pos, j - pos);
    pos = j;
    return v;
  }
  return std::nullopt;
}

std::optional<ScanValue> scan_value(const std::string& raw, std::size_t& pos) {
  while (pos < raw.size() && (raw[pos] == ' ' || raw[pos] == '\t')) ++pos;
  if (pos >= raw.size()) return std::nullopt;
  if (raw[pos] == '[') {
    ScanValue list;
    list.kind = ScanValue::list;
    ++pos;
    while (true) {
      while (pos < raw.size() && std::isspace(static_cast<unsigned char>(raw[pos]))) ++pos;
      if (pos >= raw.size()) return std::nullopt;
      if (raw[pos] == ']') {
        ++pos;
        return list;
      }
      auto item = scan_scalar(raw, pos);
      if (!item) return std::nullopt;
      list.items.push_back(std::move(*item));
      while (pos < raw.size() && std::isspace(static_cast<unsigned char>(raw[pos]))) ++pos;
      if (pos < raw.size() && raw[pos] == ',') {
        ++pos;
        continue;
      }
      if (pos < raw.size() && raw[pos] == ']') {
        ++pos;
        return list;
      }
      return std::nullopt;
    }
  }
  return scan_scalar(raw, pos);
}

// Finds `key` (case-insensitive, word-bounded, optionally quoted) followed by
// a colon, and scans the value after it.
std::optional<ScanValue> scan_key_value(const std::string& raw, const std::string& lowered,
                                        const std::string& key) {
  std::size_t pos = 0;
  while ((pos = lowered.find(key, pos)) != std::string::npos) {
    std::size_t start = pos;
    pos += 1;
    if (start > 0 && (is_word_char(lowered[start - 1]))) continue;
    std::size_t after = start + key.size();
    if (after < raw.size() && is_word_char(raw[after])) continue;
    std::size_t p = after;
    if (p < raw.size() && (raw[p] == '\'' || raw[p] == '"')) {
      // closing quote of a quoted key; require a matching opener just before
      char quote = raw[p];
      if (start == 0 || raw[start - 1] != quote) continue;
      ++p;
    }
    while (p < raw.size() && (raw[p] == ' ' || raw[p] == '\t')) ++p;
    if (p >= raw.size() || raw[p] != ':') continue;
    ++p;
    if (auto v = scan_value(raw, p)) return v;
  }
  return std::nullopt;
}

std::optional<RawFields> extract_by_scan(const std::string& raw) {
  std::string lowered = util::to_lower(raw);
  RawFields out;
  for (const auto& key : kLabelKeys) {
    if (auto v = scan_key_value(raw, lowered, key)) {
      if (v->kind == ScanValue::list) {
        for (const auto& item : v->items)
          if (item.kind == ScanValue::str) out.labels.push_back(item.s);
      } else if (v->kind == ScanValue::str) {
        out.labels.push_back(v->s);
      }
      if (!out.labels.empty()) {
        out.have_labels = true;
        break;
      }
    }
  }
  if (!out.have_labels) return std::nullopt;
  for (const auto& key : kConfidenceKeys) {
    if (auto v = scan_key_value(raw, lowered, key)) {
      if (v->kind == ScanValue::list) {
        for (const auto& item : v->items)
          if (item.kind == ScanValue::num) out.confidences.push_back(item.n);
      } else if (v->kind == ScanValue::num) {
        out.confidences.push_back(v->n);
      } else if (v->kind == ScanValue::str) {
        if (auto n = parse_number(v->s)) out.confidences.push_back(*n);
      }
      if (!out.confidences.empty()) {
        out.have_confidences = true;
        break;
      }
    }
  }
  for (const auto& key : kJustificationKeys) {
    if (auto v = scan_key_value(raw, lowered, key)) {
      if (v->kind == ScanValue::str && !util::trim(v->s).empty()) {
        out.justification = v->s;
        out.have_justification = true;
        break;
      }
    }
  }
  return out;
}

// ---- final validation shared by all phases ----

ParseResult validate(RawFields fields, const ParseSpec& spec) {
  if (!fields.have_labels || fields.labels.empty())
    return ParseError{ParseErrorKind::missing_field, "no prediction label found"};
  if (!fields.have_confidences || fields.confidences.empty())
    return ParseError{ParseErrorKind::missing_field, "no confidence score found"};
  if (!fields.have_justification || util::trim(fields.justification).empty())
    return ParseError{ParseErrorKind::missing_field, "no justification found"};

  std::vector<std::string> labels;
  for (const auto& raw_label : fields.labels) {
    std::string norm = normalize_label(raw_label);
    if (norm.empty())
      return ParseError{ParseErrorKind::unknown_label, "label normalizes to empty: '" +
                                                           raw_label + "'"};
    if (std::find(spec.labels.begin(), spec.labels.end(), norm) == spec.labels.end())
      return ParseError{ParseErrorKind::unknown_label, "label '" + norm + "' not in vocabulary"};
    if (std::find(labels.begin(), labels.end(), norm) != labels.end())
      return ParseError{ParseErrorKind::duplicate_label, "label '" + norm + "' listed twice"};
    labels.push_back(norm);
  }

  if (!spec.multi_label && labels.size() != 1)
    return ParseError{ParseErrorKind::label_count,
                      "expected exactly one label, got " + std::to_string(labels.size())};
  if (spec.multi_label && labels.size() > spec.labels.size())
    return ParseError{ParseErrorKind::label_count,
                      "more labels than the vocabulary allows: " + std::to_string(labels.size())};

  std::vector<double> confs = fields.confidences;
  if (confs.size() != labels.size())
    return ParseError{ParseErrorKind::length_mismatch,
                      std::to_string(labels.size()) + " labels vs " +
                          std::to_string(confs.size()) + " confidences"};
  for (double c : confs)
    if (!(c >= 0.0 && c <= 1.0))
      return ParseError{ParseErrorKind::confidence_range,
                        "confidence " + std::to_string(c) + " outside [0, 1]"};

  if (spec.multi_label && labels.size() > 1) {
    std::vector<std::size_t> order(labels.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return confs[a] > confs[b]; });
    std::vector<std::string> l2;
    std::vector<double> c2;
    for (auto idx : order) {
      l2.push_back(labels[idx]);
      c2.push_back(confs[idx]);
    }
    labels = std::move(l2);
    confs = std::move(c2);
  }

  Prediction p;
  p.labels = std::move(labels);
  p.confidences = std::move(confs);
  p.justification = fields.justification;
  return p;
}

} // namespace

std::string to_string(ParseErrorKind k) {
  switch (k) {
    case ParseErrorKind::unparseable: return "unparseable";
    case ParseErrorKind::missing_field: return "missing_field";
    case ParseErrorKind::unknown_label: return "unknown_label";
    case ParseErrorKind::duplicate_label: return "duplicate_label";
    case ParseErrorKind::label_count: return "label_count";
    case ParseErrorKind::confidence_range: return "confidence_range";
    case ParseErrorKind::length_mismatch: return "length_mismatch";
  }
  return "unknown";
}

std::string normalize_label(const std::string& s) {
  std::string t = util::trim(s);
  auto is_edge_punct = [](char c) {
    switch (c) {
      case '.': case ',': case '!': case '?': case ':': case ';':
      case '"': case '\'': case '`': case ')': case '(': case '[':
      case ']': case '*':
        return true;
      default:
        return false;
    }
  };
  std::size_t begin = 0, end = t.size();
  while (begin < end && is_edge_punct(t[begin])) ++begin;
  while (end > begin && is_edge_punct(t[end - 1])) --end;
  return util::to_lower(util::trim(t.substr(begin, end - begin)));
}

ParseResult parse_prediction(const std::string& raw, const ParseSpec& spec) {
  std::optional<ParseError> field_error;

  auto try_object = [&](const json& obj) -> std::optional<ParseResult> {
    Extracted ex = extract_from_json(obj);
    if (std::holds_alternative<FieldError>(ex)) {
      if (!field_error) field_error = std::get<FieldError>(ex).err;
      return std::nullopt;
    }
    RawFields fields = std::get<RawFields>(std::move(ex));
    if (!fields.have_labels) return std::nullopt; // keep looking in later phases
    return validate(std::move(fields), spec);
  };

  // 1. whole payload
  if (auto obj = try_parse_object(util::trim(raw)))
    if (auto r = try_object(*obj)) return *r;

  // 2. fenced code block
  if (auto body = fenced_block(raw))
    if (auto obj = try_parse_object(util::trim(*body)))
      if (auto r = try_object(*obj)) return *r;

  // 3. first balanced {...} region with a label key
  if (auto obj = balanced_region_object(raw))
    if (auto r = try_object(*obj)) return *r;

  // 4. key-pattern scan over raw bytes
  if (auto fields = extract_by_scan(raw)) return validate(std::move(*fields), spec);

  if (field_error) return *field_error;
  return ParseError{ParseErrorKind::unparseable, "no prediction structure found in response"};
}

} // namespace rumourbench::parse
