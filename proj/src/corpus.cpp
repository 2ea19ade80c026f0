#include "rumourbench/corpus.hpp"

#include "rumourbench/util.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <map>
#include <set>

namespace rumourbench::corpus {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

std::string to_string(SplitName name) {
    switch (name) {
        case SplitName::train: return "train";
        case SplitName::dev: return "dev";
        case SplitName::test: return "test";
    }
    return "?";
}

SplitName split_from_string(const std::string& s) {
    if (s == "train") return SplitName::train;
    if (s == "dev") return SplitName::dev;
    if (s == "test") return SplitName::test;
    throw CorpusError("unknown split name: " + s);
}

std::string to_string(Task task) {
    return task == Task::veracity ? "veracity" : "stance";
}

Task task_from_string(const std::string& s) {
    if (s == "veracity") return Task::veracity;
    if (s == "stance") return Task::stance;
    throw CorpusError("unknown task: " + s);
}

const std::vector<std::string>& veracity_labels() {
    static const std::vector<std::string> labels{"false", "true", "unverified"};
    return labels;
}

const std::vector<std::string>& stance_labels() {
    static const std::vector<std::string> labels{"comment", "deny", "query", "support"};
    return labels;
}

namespace {

bool in_vocab(const std::vector<std::string>& vocab, const std::string& label) {
    return std::find(vocab.begin(), vocab.end(), label) != vocab.end();
}

json parse_json_file(const fs::path& path) {
    std::string text;
    try {
        text = util::read_file(path);
    } catch (const std::exception& e) {
        throw CorpusError(e.what());
    }
    json parsed = json::parse(text, nullptr, false);
    if (parsed.is_discarded()) {
        throw CorpusError("unreadable record (invalid JSON): " + path.string());
    }
    return parsed;
}

std::string tweet_text_of(const json& record, const fs::path& path) {
    auto it = record.find("text");
    if (it == record.end() || !it->is_string()) {
        throw CorpusError("record has no \"text\" field: " + path.string());
    }
    return it->get<std::string>();
}

std::map<std::string, std::string> load_label_file(const fs::path& path) {
    if (!fs::exists(path)) {
        throw CorpusError("gold label file missing: " + path.string());
    }
    json parsed = parse_json_file(path);
    if (!parsed.is_object()) {
        throw CorpusError("gold label file must be an object of id -> label: " + path.string());
    }
    std::map<std::string, std::string> out;
    for (const auto& [id, label] : parsed.items()) {
        if (!label.is_string()) {
            throw CorpusError("label for id " + id + " is not a string: " + path.string());
        }
        out[id] = label.get<std::string>();
    }
    return out;
}

struct ThreadDir {
    std::string event;
    fs::path dir;
};

} // namespace

Split load_split(const fs::path& data_root, SplitName name) {
    if (!fs::exists(data_root)) {
        throw CorpusError("data root does not exist: " + data_root.string());
    }

    // Index every thread directory under rumoureval-data/<event>/<id>.
    std::map<std::string, ThreadDir> threads;
    const fs::path data_dir = data_root / "rumoureval-data";
    if (fs::exists(data_dir)) {
        for (const auto& event_entry : fs::directory_iterator(data_dir)) {
            if (!event_entry.is_directory()) continue;
            const std::string event = event_entry.path().filename().string();
            for (const auto& thread_entry : fs::directory_iterator(event_entry.path())) {
                if (!thread_entry.is_directory()) continue;
                const std::string tid = thread_entry.path().filename().string();
                if (threads.count(tid)) {
                    throw CorpusError("thread id " + tid + " appears under more than one event");
                }
                threads[tid] = ThreadDir{event, thread_entry.path()};
            }
        }
    }
    if (threads.empty()) {
        throw CorpusError("no threads found under " + data_root.string());
    }

    const fs::path manifest_path = data_root / "splits.json";
    if (!fs::exists(manifest_path)) {
        throw CorpusError("split manifest missing: " + manifest_path.string() +
                          " (required; train/dev membership is never guessed)");
    }
    json manifest = parse_json_file(manifest_path);

    std::set<std::string> seen_anywhere;
    std::vector<std::string> split_ids;
    for (const char* split_key : {"train", "dev", "test"}) {
        auto it = manifest.find(split_key);
        if (it == manifest.end() || !it->is_array()) {
            throw CorpusError(std::string("split manifest lacks an array for \"") + split_key + "\"");
        }
        for (const auto& id : *it) {
            if (!id.is_string()) {
                throw CorpusError(std::string("non-string thread id in manifest split ") + split_key);
            }
            const std::string tid = id.get<std::string>();
            if (!seen_anywhere.insert(tid).second) {
                throw CorpusError("thread " + tid + " appears in more than one split");
            }
            if (split_key == to_string(name)) {
                split_ids.push_back(tid);
            }
        }
    }

    const std::string split_str = to_string(name);
    auto veracity_gold = load_label_file(data_root / "gold" / ("veracity-" + split_str + ".json"));
    auto stance_gold = load_label_file(data_root / "gold" / ("stance-" + split_str + ".json"));

    Split split;
    split.name = name;
    std::set<std::string> split_thread_ids(split_ids.begin(), split_ids.end());
    std::set<std::string> seen_reply_ids;

    for (const auto& tid : split_ids) {
        auto found = threads.find(tid);
        if (found == threads.end()) {
            throw CorpusError("thread " + tid + " listed in manifest but not found on disk");
        }
        const auto& [event, dir] = found->second;

        const fs::path source_path = dir / "source-tweet" / (tid + ".json");
        if (!fs::exists(source_path)) {
            throw CorpusError("missing source tweet record: " + source_path.string());
        }
        json source = parse_json_file(source_path);
        const std::string text = tweet_text_of(source, source_path);

        if (!fs::exists(dir / "structure.json")) {
            throw CorpusError("missing thread structure record: " + (dir / "structure.json").string());
        }

        auto label_it = veracity_gold.find(tid);
        if (label_it == veracity_gold.end()) {
            throw CorpusError("no veracity label for tweet " + tid);
        }
        if (!in_vocab(veracity_labels(), label_it->second)) {
            throw CorpusError("veracity label \"" + label_it->second + "\" for tweet " + tid +
                              " outside vocabulary");
        }

        VeracityExample ve{event, tid, text, label_it->second};

        const fs::path replies_dir = dir / "replies";
        if (fs::exists(replies_dir)) {
            for (const auto& reply_entry : fs::directory_iterator(replies_dir)) {
                if (reply_entry.path().extension() != ".json") continue;
                const std::string rid = reply_entry.path().stem().string();
                if (!seen_reply_ids.insert(rid).second) {
                    throw CorpusError("reply id " + rid + " appears in more than one thread");
                }
                json reply = parse_json_file(reply_entry.path());
                const std::string reply_text = tweet_text_of(reply, reply_entry.path());

                auto stance_it = stance_gold.find(rid);
                if (stance_it == stance_gold.end()) {
                    throw CorpusError("no stance label for reply " + rid);
                }
                if (!in_vocab(stance_labels(), stance_it->second)) {
                    throw CorpusError("stance label \"" + stance_it->second + "\" for reply " + rid +
                                      " outside vocabulary");
                }
                split.stance.push_back(StanceExample{event, tid, text, ve.tweet_class, rid,
                                                     reply_text, stance_it->second});
            }
        }

        split.veracity.push_back(std::move(ve));
    }

    // Gold entries must all resolve to records we actually loaded.
    for (const auto& [id, label] : veracity_gold) {
        (void)label;
        if (!split_thread_ids.count(id)) {
            throw CorpusError("veracity gold references absent tweet id " + id);
        }
    }
    for (const auto& [id, label] : stance_gold) {
        (void)label;
        if (!seen_reply_ids.count(id)) {
            throw CorpusError("stance gold references absent reply id " + id);
        }
    }

    std::sort(split.veracity.begin(), split.veracity.end(),
              [](const auto& a, const auto& b) { return util::id_less(a.tweet_id, b.tweet_id); });
    std::sort(split.stance.begin(), split.stance.end(),
              [](const auto& a, const auto& b) { return util::id_less(a.reply_id, b.reply_id); });
    return split;
}

std::pair<std::string, double> majority_class(const std::vector<std::string>& labels) {
    if (labels.empty()) {
        throw CorpusError("majority_class: empty label list");
    }
    std::map<std::string, size_t> counts;
    for (const auto& label : labels) ++counts[label];
    // std::map iterates labels in ascending order, so keeping strict > on the
    // count resolves ties toward the lexicographically smaller label.
    std::string best;
    size_t best_count = 0;
    for (const auto& [label, count] : counts) {
        if (count > best_count) {
            best = label;
            best_count = count;
        }
    }
    return {best, static_cast<double>(best_count) / static_cast<double>(labels.size())};
}

std::pair<std::string, double> majority_class(const Split& split, Task task) {
    std::vector<std::string> labels;
    if (task == Task::veracity) {
        labels.reserve(split.veracity.size());
        for (const auto& ex : split.veracity) labels.push_back(ex.tweet_class);
    } else {
        labels.reserve(split.stance.size());
        for (const auto& ex : split.stance) labels.push_back(ex.reply_class);
    }
    return majority_class(labels);
}

size_t export_flat(const Split& split, Task task, const fs::path& out_path) {
    std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw CorpusError("cannot write flat file: " + out_path.string());
    }
    size_t count = 0;
    if (task == Task::veracity) {
        for (const auto& ex : split.veracity) {
            ordered_json row;
            row["Journal"] = ex.journal;
            row["tweet_id"] = ex.tweet_id;
            row["tweet_text"] = ex.tweet_text;
            row["tweet_class"] = ex.tweet_class;
            out << row.dump() << '\n';
            ++count;
        }
    } else {
        for (const auto& ex : split.stance) {
            ordered_json row;
            row["Journal"] = ex.journal;
            row["tweet_id"] = ex.tweet_id;
            row["tweet_text"] = ex.tweet_text;
            row["tweet_class"] = ex.tweet_class;
            row["reply_id"] = ex.reply_id;
            row["reply_text"] = ex.reply_text;
            row["reply_class"] = ex.reply_class;
            out << row.dump() << '\n';
            ++count;
        }
    }
    if (!out) {
        throw CorpusError("write failed: " + out_path.string());
    }
    return count;
}

namespace {

std::string required_string(const ordered_json& row, const char* key, const fs::path& path) {
    auto it = row.find(key);
    if (it == row.end() || !it->is_string()) {
        throw CorpusError(std::string("flat record missing string field \"") + key + "\": " +
                          path.string());
    }
    return it->get<std::string>();
}

std::vector<ordered_json> read_flat_rows(const fs::path& path) {
    std::string text = [&] {
        try {
            return util::read_file(path);
        } catch (const std::exception& e) {
            throw CorpusError(e.what());
        }
    }();
    std::vector<ordered_json> rows;
    size_t pos = 0;
    while (pos < text.size()) {
        size_t end = text.find('\n', pos);
        if (end == std::string::npos) end = text.size();
        std::string_view line(text.data() + pos, end - pos);
        pos = end + 1;
        if (util::trim(line).empty()) continue;
        ordered_json row = ordered_json::parse(line, nullptr, false);
        if (row.is_discarded() || !row.is_object()) {
            throw CorpusError("invalid flat record line in " + path.string());
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace

std::vector<VeracityExample> import_flat_veracity(const fs::path& path) {
    std::vector<VeracityExample> out;
    for (const auto& row : read_flat_rows(path)) {
        out.push_back(VeracityExample{
            required_string(row, "Journal", path),
            required_string(row, "tweet_id", path),
            required_string(row, "tweet_text", path),
            required_string(row, "tweet_class", path),
        });
    }
    return out;
}

std::vector<StanceExample> import_flat_stance(const fs::path& path) {
    std::vector<StanceExample> out;
    for (const auto& row : read_flat_rows(path)) {
        out.push_back(StanceExample{
            required_string(row, "Journal", path),
            required_string(row, "tweet_id", path),
            required_string(row, "tweet_text", path),
            required_string(row, "tweet_class", path),
            required_string(row, "reply_id", path),
            required_string(row, "reply_text", path),
            required_string(row, "reply_class", path),
        });
    }
    return out;
}

} // namespace rumourbench::corpus
