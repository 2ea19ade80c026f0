#include "fixture.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace testfix {

namespace {

const char* kEvents[] = {"charliehebdo", "ebola-essien",  "ferguson",     "germanwings-crash",
                         "ottawashooting", "prince-toronto", "putinmissing", "sydneysiege"};

struct Reply {
  std::string id;
  std::string text;
  std::string stance;
};

struct Thread {
  std::string event;
  std::string id;
  std::string text;
  std::string veracity;
  std::vector<Reply> replies;
};

void write_json(const fs::path& path, const ordered_json& j) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << j.dump(2) << "\n";
}

void write_thread(const fs::path& root, const Thread& t) {
  fs::path dir = root / "rumoureval-data" / t.event / t.id;
  ordered_json source;
  source["id_str"] = t.id;
  source["text"] = t.text;
  source["user"] = ordered_json{{"screen_name", "witness_" + t.id.substr(t.id.size() - 4)}};
  write_json(dir / "source-tweet" / (t.id + ".json"), source);

  ordered_json structure;
  ordered_json children = ordered_json::object();
  for (const auto& r : t.replies) children[r.id] = ordered_json::array();
  structure[t.id] = children;
  write_json(dir / "structure.json", structure);

  if (!t.replies.empty()) {
    for (const auto& r : t.replies) {
      ordered_json reply;
      reply["id_str"] = r.id;
      reply["text"] = r.text;
      reply["in_reply_to_status_id_str"] = t.id;
      write_json(dir / "replies" / (r.id + ".json"), reply);
    }
  } else {
    fs::create_directories(dir / "replies");
  }
}

std::string source_text(const std::string& event, int i) {
  static const char* shapes[] = {
      "Breaking: reports from %s say emergency services are responding, details unconfirmed (%d)",
      "Unverified claim circulating about %s right now, several accounts repeating it (%d)",
      "Witnesses near %s describe a major incident; no official confirmation yet (%d)",
      "Officials have not commented on the %s rumour spreading on social media (%d)",
  };
  char buf[256];
  std::snprintf(buf, sizeof(buf), shapes[i % 4], event.c_str(), i);
  return buf;
}

std::string reply_text(const std::string& stance, int i) {
  char buf[256];
  if (stance == "support")
    std::snprintf(buf, sizeof(buf), "Confirmed by a friend on the ground, this is real (%d)", i);
  else if (stance == "deny")
    std::snprintf(buf, sizeof(buf), "This is nonsense, the photo is from years ago (%d)", i);
  else if (stance == "query")
    std::snprintf(buf, sizeof(buf), "Source? Has any outlet actually verified this? (%d)", i);
  else
    std::snprintf(buf, sizeof(buf), "Thoughts with everyone involved out there today (%d)", i);
  return buf;
}

class IdGen {
 public:
  explicit IdGen(std::uint64_t base) : next_(base) {}
  std::string operator()() { return std::to_string(next_ += 997); }

 private:
  std::uint64_t next_;
};

// Appends replies to the thread list with the given class counts, spread
// round-robin over the threads.
void add_replies(std::vector<Thread>& threads, IdGen& ids,
                 const std::map<std::string, int>& counts) {
  std::vector<std::string> pool;
  // Interleave classes so every thread sees a realistic mixture.
  std::map<std::string, int> left = counts;
  int total = 0;
  for (const auto& [label, n] : counts) total += n;
  std::string biggest;
  for (int i = 0; i < total; ++i) {
    // take from the class with the most remaining
    int best = -1;
    for (const auto& [label, n] : left) {
      if (n > best) {
        best = n;
        biggest = label;
      }
    }
    --left[biggest];
    pool.push_back(biggest);
  }
  for (std::size_t i = 0; i < pool.size(); ++i) {
    Thread& t = threads[i % threads.size()];
    t.replies.push_back(
        Reply{ids(), reply_text(pool[i], static_cast<int>(i)), pool[i]});
  }
}

std::vector<Thread> make_threads(IdGen& ids, const std::map<std::string, int>& class_counts,
                                 int event_offset, int text_salt) {
  std::vector<Thread> threads;
  int i = 0;
  for (const auto& [veracity, n] : class_counts) {
    for (int k = 0; k < n; ++k, ++i) {
      Thread t;
      t.event = kEvents[(i + event_offset) % 8];
      t.id = ids();
      t.text = source_text(t.event, text_salt + i);
      t.veracity = veracity;
      threads.push_back(std::move(t));
    }
  }
  return threads;
}

} // namespace

void write_corpus(const std::string& root_str) {
  fs::path root(root_str);

  // ---- train: 12 threads (5 false, 4 true, 3 unverified), 24 replies ----
  IdGen train_ids(500100000000000000ULL);
  std::vector<Thread> train =
      make_threads(train_ids, {{"false", 4}, {"true", 4}, {"unverified", 3}}, 0, 1000);
  Thread putin_died;
  putin_died.event = "putinmissing";
  putin_died.id = kPutinDiedThreadId;
  putin_died.text = kPutinDiedText;
  putin_died.veracity = "false";
  train.push_back(std::move(putin_died));
  add_replies(train, train_ids, {{"comment", 16}, {"support", 3}, {"deny", 2}, {"query", 3}});

  // ---- dev: 8 threads (4 false, 2 true, 2 unverified), 30 replies ----
  IdGen dev_ids(500200000000000000ULL);
  std::vector<Thread> dev =
      make_threads(dev_ids, {{"false", 4}, {"true", 2}, {"unverified", 1}}, 3, 2000);
  Thread putin_missing;
  putin_missing.event = "putinmissing";
  putin_missing.id = kPutinMissingThreadId;
  putin_missing.text = "Vladimir Putin has not been seen in public for days, Swiss press claims "
                       "he is away from the Kremlin";
  putin_missing.veracity = "unverified";
  putin_missing.replies.push_back(Reply{kPutinMissingReplyId, kPutinMissingReplyText, "support"});
  dev.push_back(std::move(putin_missing));
  add_replies(dev, dev_ids, {{"comment", 18}, {"support", 4}, {"deny", 3}, {"query", 4}});

  // ---- test: 28 threads (16 false, 8 true, 4 unverified), 1049 replies ----
  IdGen test_ids(500300000000000000ULL);
  std::vector<Thread> test =
      make_threads(test_ids, {{"false", 15}, {"true", 7}, {"unverified", 4}}, 5, 3000);
  Thread ebola;
  ebola.event = "ebola-essien";
  ebola.id = kEbolaThreadId;
  ebola.text = kEbolaText;
  ebola.veracity = "false";
  test.push_back(std::move(ebola));
  Thread ottawa;
  ottawa.event = "ottawashooting";
  ottawa.id = kOttawaThreadId;
  ottawa.text = "Shots fired at the National War Memorial in Ottawa, soldier down according to "
                "multiple reports";
  ottawa.veracity = "true";
  ottawa.replies.push_back(
      Reply{kOttawaReplyId,
            "@CTVNews so much different from early reports LOL, nobody checks anything anymore",
            "deny"});
  test.push_back(std::move(ottawa));
  add_replies(test, test_ids, {{"comment", 778}, {"support", 94}, {"deny", 70}, {"query", 106}});

  // ---- write threads, manifest, gold ----
  struct SplitOut {
    const char* name;
    std::vector<Thread>* threads;
  };
  SplitOut splits[] = {{"train", &train}, {"dev", &dev}, {"test", &test}};

  ordered_json manifest;
  for (const auto& s : splits) {
    ordered_json ids = ordered_json::array();
    ordered_json veracity_gold = ordered_json::object();
    ordered_json stance_gold = ordered_json::object();
    for (const auto& t : *s.threads) {
      write_thread(root, t);
      ids.push_back(t.id);
      veracity_gold[t.id] = t.veracity;
      for (const auto& r : t.replies) stance_gold[r.id] = r.stance;
    }
    manifest[s.name] = ids;
    write_json(root / "gold" / (std::string("veracity-") + s.name + ".json"), veracity_gold);
    write_json(root / "gold" / (std::string("stance-") + s.name + ".json"), stance_gold);
  }
  write_json(root / "splits.json", manifest);
}

} // namespace testfix
