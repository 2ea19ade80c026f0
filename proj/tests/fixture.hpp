#pragma once

#include <string>

namespace testfix {

// Writes a deterministic corpus in the on-disk thread layout under `root`.
// The test split mirrors the real RumourEval-2017 class balance:
//   veracity: 28 threads  = 16 false + 8 true + 4 unverified
//   stance:   1049 replies = 778 comment + 94 support + 71 deny + 106 query
// so majority baselines land at 16/28 (0.5714), 778/1049 (0.7417) and, on
// the support/deny/query subset, 106/271 (0.3911). Four known examples are
// embedded verbatim: the Essien Ebola rumour and the Ottawa-shooting
// deny-reply in test, a Putin-missing thread with a support-reply in dev,
// and the "Putin has died" rumour in train.
void write_corpus(const std::string& root);

// Ids of the embedded examples, handy for goldens.
inline constexpr const char* kEbolaThreadId = "521346721226711040";
inline constexpr const char* kOttawaThreadId = "524948206023880704";
inline constexpr const char* kOttawaReplyId = "524999801973506048";
inline constexpr const char* kPutinMissingThreadId = "576323086888361984";
inline constexpr const char* kPutinMissingReplyId = "576327374628917248";
inline constexpr const char* kPutinDiedThreadId = "544388259413590016";

inline constexpr const char* kEbolaText =
    "Unconfirmed reports claim that Michael Essien has contracted Ebola. http://t.co/VASQrZdLhH";
inline constexpr const char* kPutinDiedText =
    "Unformed Russian Embassy staff in London have left for Russia Rumours Putin HAS DIED! "
    "http://t.co/zSIV8w6FJ2 via @ShaunyNews #PutinDead?";
inline constexpr const char* kPutinMissingReplyText =
    "@BBCDanielS @EllenBarryNYT Well, Blick is a tabloid, so I wouldn't necessarily believe "
    "everything they say :-)";

} // namespace testfix
