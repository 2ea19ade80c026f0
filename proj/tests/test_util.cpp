#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <vector>

#include "rumourbench/util.hpp"

namespace fs = std::filesystem;
using namespace rumourbench;

TEST_SUITE("util") {

TEST_CASE("sha256 matches known vectors") {
  // Frozen reference digests (FIPS 180-4 test vectors).
  CHECK(util::sha256_hex("") ==
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(util::sha256_hex("abc") ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(util::sha256_hex("The quick brown fox jumps over the lazy dog") ==
        "d7a8fbb307d7809469ca9abcb0082e4f8d5651e46d3cdb762d02d0bf37c9e592");
}

TEST_CASE("part-wise sha256 is injective over field boundaries") {
  auto digest = [](std::vector<std::string_view> parts) { return util::sha256_hex(parts); };
  CHECK(digest({"ab", "c"}) != digest({"a", "bc"}));
  CHECK(digest({"ab"}) != digest({"ab", ""}));
  CHECK(digest({}) != digest({""}));
  CHECK(digest({"x", "y"}) == digest({"x", "y"}));
}

TEST_CASE("id ordering is numeric for decimal strings") {
  CHECK(util::id_less("9", "10"));
  CHECK(!util::id_less("100", "99"));
  CHECK(util::id_less("524948206023880704", "524999801973506048"));
  CHECK(!util::id_less("5", "5"));

  std::vector<std::string> ids = {"100", "2", "30", "1000", "3"};
  std::sort(ids.begin(), ids.end(), [](auto& a, auto& b) { return util::id_less(a, b); });
  CHECK(ids == std::vector<std::string>{"2", "3", "30", "100", "1000"});
}

TEST_CASE("string helpers") {
  CHECK(util::to_lower("TRUE") == "true");
  CHECK(util::trim("  x \n\t") == "x");
  CHECK(util::trim("") == "");
  CHECK(util::format_temperature(0.8) == util::format_temperature(0.80));
  CHECK(util::format_temperature(0.8) == "0.8000");
  CHECK(util::format_temperature(0.0) == "0.0000");
}

TEST_CASE("append file writes durable lines") {
  fs::path dir = fs::temp_directory_path() / "rb-util-test";
  fs::create_directories(dir);
  fs::path path = dir / "log.jsonl";
  fs::remove(path);
  {
    util::AppendFile f(path);
    f.write_line("one");
    f.write_line("two");
  }
  {
    util::AppendFile f(path); // reopening appends, never truncates
    f.write_line("three");
  }
  CHECK(util::read_file(path) == "one\ntwo\nthree\n");
  fs::remove_all(dir);
}

TEST_CASE("atomic write replaces contents") {
  fs::path dir = fs::temp_directory_path() / "rb-util-test2";
  fs::create_directories(dir);
  fs::path path = dir / "f.txt";
  util::write_file_atomic(path, "first");
  util::write_file_atomic(path, "second");
  CHECK(util::read_file(path) == "second");
  fs::remove_all(dir);
}

} // TEST_SUITE
