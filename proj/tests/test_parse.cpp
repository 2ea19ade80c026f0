#include <doctest.h>

#include <random>
#include <string>

#include "rumourbench/parse.hpp"

using namespace rumourbench;
using parse::ParseError;
using parse::ParseErrorKind;
using parse::ParseResult;
using parse::ParseSpec;
using parse::Prediction;

namespace {

const ParseSpec kBinary{{"false", "true"}, false};
const ParseSpec kTernary{{"false", "true", "unverified"}, false};
const ParseSpec kStance4{{"comment", "deny", "query", "support"}, false};
const ParseSpec kStanceMulti{{"comment", "deny", "query", "support"}, true};

Prediction expect_ok(const ParseResult& r) {
  if (const auto* err = std::get_if<ParseError>(&r)) {
    FAIL("expected a prediction, got error ", parse::to_string(err->kind), ": ", err->detail);
  }
  return std::get<Prediction>(r);
}

ParseError expect_err(const ParseResult& r, ParseErrorKind kind) {
  if (const auto* p = std::get_if<Prediction>(&r)) {
    FAIL("expected an error, got prediction with top label ", p->labels.at(0));
  }
  const auto& err = std::get<ParseError>(r);
  CHECK(parse::to_string(err.kind) == parse::to_string(kind));
  return err;
}

// Verbatim model output for the multiclass stance example: a Python-style
// record with single-quoted keys and no enclosing braces.
const std::string kMulticlassPayload =
    "'tweet_id': 524948206023880704,\n"
    "'tweet_text': 'The latest @CBCNews on #Ottawa shootings. Gunman killed inside Parliament, "
    "soldier shot at War Memorial. http://t.co/kngapKTSCe #cdnpoli',\n"
    "'tweet_class': 'true',\n"
    "'reply_id': 524999801973506048,\n"
    "'reply_text': \"@Trial_Watcher1 @CBCAlerts @CBCNews And the  news I'm watching right now are "
    "saying so much different than what you're posting in here LOL\",\n"
    "'ground_truth': 'deny',\n"
    "'prediction': ['deny', 'comment'],\n"
    "'confidence': [0.8, 0.2],\n"
    "'justification': \"The reply includes phrases like 'so much different' and 'LOL', indicating "
    "disagreement and a mocking tone. This suggests a denial of the information in the source "
    "tweet and a comment on the discrepancy between the news being watched and the information "
    "in the tweet.\"";

} // namespace

TEST_SUITE("parse") {

TEST_CASE("whole-payload JSON object parses directly") {
  auto p = expect_ok(parse::parse_prediction(
      R"({"prediction": "true", "confidence": 0.9, "justification": "matches the reports"})",
      kBinary));
  CHECK(p.labels == std::vector<std::string>{"true"});
  CHECK(p.confidences == std::vector<double>{0.9});
  CHECK(p.justification == "matches the reports");
}

TEST_CASE("the multiclass record example parses via the key scan") {
  auto p = expect_ok(parse::parse_prediction(kMulticlassPayload, kStanceMulti));
  CHECK(p.labels == std::vector<std::string>{"deny", "comment"});
  CHECK(p.confidences == std::vector<double>{0.8, 0.2});
  CHECK(p.justification.rfind("The reply includes phrases like", 0) == 0);
  CHECK(p.justification.find("mocking tone") != std::string::npos);
}

TEST_CASE("labels are normalized: trimmed, lowercased, edge punctuation stripped") {
  CHECK(parse::normalize_label(" 'Support'. ") == "support");
  CHECK(parse::normalize_label("TRUE.") == "true");
  CHECK(parse::normalize_label("[query]") == "query");
  CHECK(parse::normalize_label("**Deny**") == "deny");
  CHECK(parse::normalize_label("unverified") == "unverified");
  CHECK(parse::normalize_label(" .,! ") == "");

  auto p = expect_ok(parse::parse_prediction(
      R"({"prediction": "TRUE.", "confidence": 1.0, "justification": "sure"})", kBinary));
  CHECK(p.labels == std::vector<std::string>{"true"});
  CHECK(p.confidences == std::vector<double>{1.0});
}

TEST_CASE("boolean labels and numeric-string confidences are coerced") {
  auto p = expect_ok(parse::parse_prediction(
      R"({"prediction": true, "confidence": "0.75", "justification": "x"})", kBinary));
  CHECK(p.labels == std::vector<std::string>{"true"});
  CHECK(p.confidences == std::vector<double>{0.75});

  auto q = expect_ok(parse::parse_prediction(
      R"({"prediction": false, "confidence": 1, "justification": "x"})", kBinary));
  CHECK(q.labels == std::vector<std::string>{"false"});
}

TEST_CASE("fenced code blocks are unwrapped") {
  const std::string raw =
      "Sure, here is the classification:\n"
      "```json\n"
      "{\"prediction\": \"unverified\", \"confidence\": 0.6, \"justification\": \"no source "
      "confirms it\"}\n"
      "```\n"
      "Let me know if you need anything else.";
  auto p = expect_ok(parse::parse_prediction(raw, kTernary));
  CHECK(p.labels == std::vector<std::string>{"unverified"});
  CHECK(p.confidences == std::vector<double>{0.6});
}

TEST_CASE("a balanced object embedded in prose is recovered") {
  const std::string raw =
      "Happy to help! {\"prediction\": \"query\", \"confidence\": 0.55, "
      "\"justification\": \"asks for {more} evidence\"} — anything else?";
  auto p = expect_ok(parse::parse_prediction(raw, kStance4));
  CHECK(p.labels == std::vector<std::string>{"query"});
  CHECK(p.justification == "asks for {more} evidence");
}

TEST_CASE("bare key/value prose lines are scanned") {
  auto p = expect_ok(parse::parse_prediction(
      "Prediction: true\nConfidence: 0.9\nJustification: \"It seems plausible.\"", kBinary));
  CHECK(p.labels == std::vector<std::string>{"true"});
  CHECK(p.confidences == std::vector<double>{0.9});
  CHECK(p.justification == "It seems plausible.");
}

TEST_CASE("field-name synonyms are accepted") {
  auto p = expect_ok(parse::parse_prediction(
      R"({"labels": ["deny"], "confidence_scores": [0.7], "explanation": "contradicts"})",
      kStance4));
  CHECK(p.labels == std::vector<std::string>{"deny"});
  CHECK(p.confidences == std::vector<double>{0.7});
  CHECK(p.justification == "contradicts");

  auto q = expect_ok(parse::parse_prediction(
      R"({"label": "support", "score": 0.8, "reasoning": "agrees with the source"})", kStance4));
  CHECK(q.labels == std::vector<std::string>{"support"});

  auto r = expect_ok(parse::parse_prediction(
      R"({"predictions": ["comment"], "confidences": [0.5], "reason": "chit-chat"})", kStance4));
  CHECK(r.labels == std::vector<std::string>{"comment"});
}

TEST_CASE("multi-label predictions are ordered by confidence, non-increasing") {
  auto p = expect_ok(parse::parse_prediction(
      R"({"prediction": ["comment", "deny"], "confidence": [0.2, 0.8], "justification": "x"})",
      kStanceMulti));
  CHECK(p.labels == std::vector<std::string>{"deny", "comment"});
  CHECK(p.confidences == std::vector<double>{0.8, 0.2});

  // Ties keep the written order (stable sort).
  auto q = expect_ok(parse::parse_prediction(
      R"({"prediction": ["query", "support"], "confidence": [0.5, 0.5], "justification": "x"})",
      kStanceMulti));
  CHECK(q.labels == std::vector<std::string>{"query", "support"});

  // A single label is legal under the multi-label spec.
  auto r = expect_ok(parse::parse_prediction(
      R"({"prediction": "deny", "confidence": 0.9, "justification": "x"})", kStanceMulti));
  CHECK(r.labels == std::vector<std::string>{"deny"});
}

TEST_CASE("each failure mode maps to its own error kind") {
  expect_err(parse::parse_prediction("I cannot help with that.", kBinary),
             ParseErrorKind::unparseable);
  expect_err(parse::parse_prediction("", kBinary), ParseErrorKind::unparseable);
  expect_err(parse::parse_prediction(
                 R"({"prediction": "true", "justification": "missing confidence"})", kBinary),
             ParseErrorKind::missing_field);
  expect_err(parse::parse_prediction(
                 R"({"prediction": "true", "confidence": 0.8})", kBinary),
             ParseErrorKind::missing_field);
  auto unknown = expect_err(
      parse::parse_prediction(
          R"({"prediction": "maybe", "confidence": 0.5, "justification": "x"})", kBinary),
      ParseErrorKind::unknown_label);
  CHECK(unknown.detail.find("maybe") != std::string::npos);
  expect_err(parse::parse_prediction(
                 R"({"prediction": "  ", "confidence": 0.5, "justification": "x"})", kBinary),
             ParseErrorKind::unknown_label);
  expect_err(
      parse::parse_prediction(
          R"({"prediction": ["deny", "deny"], "confidence": [0.6, 0.4], "justification": "x"})",
          kStanceMulti),
      ParseErrorKind::duplicate_label);
  expect_err(
      parse::parse_prediction(
          R"({"prediction": ["deny", "comment"], "confidence": [0.6, 0.4], "justification": "x"})",
          kStance4),
      ParseErrorKind::label_count);
  expect_err(parse::parse_prediction(
                 R"({"prediction": "true", "confidence": 1.5, "justification": "x"})", kBinary),
             ParseErrorKind::confidence_range);
  expect_err(parse::parse_prediction(
                 R"({"prediction": "true", "confidence": -0.1, "justification": "x"})", kBinary),
             ParseErrorKind::confidence_range);
  expect_err(
      parse::parse_prediction(
          R"({"prediction": ["deny", "comment"], "confidence": [0.8], "justification": "x"})",
          kStanceMulti),
      ParseErrorKind::length_mismatch);
}

TEST_CASE("a structured field error is preserved when later phases find nothing") {
  // The object names a label key but its value is a number; the byte scan
  // cannot recover a string label either, so the field-level error surfaces.
  auto err = expect_err(parse::parse_prediction(
                            R"({"prediction": 42, "confidence": 0.9, "justification": "x"})",
                            kBinary),
                        ParseErrorKind::unknown_label);
  CHECK(err.detail.find("not a string") != std::string::npos);
}

TEST_CASE("error kinds have stable names") {
  CHECK(parse::to_string(ParseErrorKind::unparseable) == "unparseable");
  CHECK(parse::to_string(ParseErrorKind::missing_field) == "missing_field");
  CHECK(parse::to_string(ParseErrorKind::unknown_label) == "unknown_label");
  CHECK(parse::to_string(ParseErrorKind::duplicate_label) == "duplicate_label");
  CHECK(parse::to_string(ParseErrorKind::label_count) == "label_count");
  CHECK(parse::to_string(ParseErrorKind::confidence_range) == "confidence_range");
  CHECK(parse::to_string(ParseErrorKind::length_mismatch) == "length_mismatch");
}

TEST_CASE("random byte soup never crashes the parser") {
  std::mt19937 rng(20170417);
  std::uniform_int_distribution<int> len_dist(0, 300);
  std::uniform_int_distribution<int> byte_dist(0, 255);
  for (int i = 0; i < 2000; ++i) {
    std::string raw(static_cast<std::size_t>(len_dist(rng)), '\0');
    for (auto& c : raw) c = static_cast<char>(byte_dist(rng));
    auto r = parse::parse_prediction(raw, kStanceMulti);
    if (const auto* p = std::get_if<Prediction>(&r)) {
      CHECK_FALSE(p->labels.empty());
      CHECK(p->labels.size() == p->confidences.size());
    }
  }

  // Every prefix of a known-good payload parses or fails cleanly too.
  for (std::size_t cut = 0; cut <= kMulticlassPayload.size(); cut += 7) {
    auto r = parse::parse_prediction(kMulticlassPayload.substr(0, cut), kStanceMulti);
    (void)r;
  }
}

} // TEST_SUITE("parse")
