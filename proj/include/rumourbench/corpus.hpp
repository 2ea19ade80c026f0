#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rumourbench::corpus {

enum class SplitName { train, dev, test };
enum class Task { veracity, stance };

std::string to_string(SplitName name);
SplitName split_from_string(const std::string& s);
std::string to_string(Task task);
Task task_from_string(const std::string& s);

/// Gold label vocabularies, lowercase, in lexicographic order.
const std::vector<std::string>& veracity_labels(); // false, true, unverified
const std::vector<std::string>& stance_labels();   // comment, deny, query, support

/// One flattened rumour source tweet with its gold veracity label.
struct VeracityExample {
    std::string journal;    // event name, e.g. "ebola-essien"
    std::string tweet_id;   // decimal-string identifier
    std::string tweet_text; // raw text, preserved verbatim
    std::string tweet_class; // true | false | unverified

    bool operator==(const VeracityExample&) const = default;
};

/// One flattened (source tweet, reply) pair with the reply's gold stance.
struct StanceExample {
    std::string journal;
    std::string tweet_id;
    std::string tweet_text;
    std::string tweet_class;
    std::string reply_id;
    std::string reply_text;
    std::string reply_class; // support | deny | query | comment

    bool operator==(const StanceExample&) const = default;
};

/// All examples of one split. Both lists are sorted by identifier so that
/// loads, exports and runs are reproducible.
struct Split {
    SplitName name = SplitName::train;
    std::vector<VeracityExample> veracity;
    std::vector<StanceExample> stance;
};

class CorpusError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Load one split from the on-disk thread layout:
///
///   <root>/rumoureval-data/<event>/<thread_id>/source-tweet/<thread_id>.json
///                                             /replies/<reply_id>.json
///                                             /structure.json
///   <root>/splits.json                  {"train": [ids], "dev": [...], "test": [...]}
///   <root>/gold/veracity-<split>.json   {"<thread_id>": "false", ...}
///   <root>/gold/stance-<split>.json     {"<reply_id>": "comment", ...}
///
/// Every loaded record must carry a gold label; every gold entry must
/// resolve to a record on disk. Raw tweet text is passed through untouched.
Split load_split(const std::filesystem::path& data_root, SplitName name);

/// Modal label and its proportion. Ties break toward the lexicographically
/// smaller label. Throws CorpusError on an empty list.
std::pair<std::string, double> majority_class(const std::vector<std::string>& labels);
std::pair<std::string, double> majority_class(const Split& split, Task task);

/// Write one line-delimited record per example, keys as in the flat schema
/// (Journal, tweet_id, tweet_text, tweet_class [, reply_id, reply_text,
/// reply_class]). Deterministic: re-export is byte-identical. Returns the
/// record count.
size_t export_flat(const Split& split, Task task, const std::filesystem::path& out_path);

std::vector<VeracityExample> import_flat_veracity(const std::filesystem::path& path);
std::vector<StanceExample> import_flat_stance(const std::filesystem::path& path);

} // namespace rumourbench::corpus
