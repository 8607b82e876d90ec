#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "mvtp/corpus_io.hpp"
#include "mvtp/error.hpp"
#include "synthetic.hpp"
#include "temp_dir.hpp"

using namespace mvtp;
using mvtp::testing::TempDir;

namespace {

Corpus two_docs() {
  std::mt19937_64 gen(11);
  Corpus c(4);
  c.add("a", testing::random_unit_matrix(3, 4, gen));
  c.add("b", testing::random_unit_matrix(5, 4, gen));
  return c;
}

std::string bytes_of(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("binary round trip is bit identical") {
  TempDir dir;
  const Corpus c = two_docs();
  write_corpus(c, dir / "c.mvec");
  const Corpus back = read_corpus(dir / "c.mvec");
  REQUIRE(back.size() == 2);
  CHECK(back[0].id == "a");
  CHECK(back[0].matrix.rows() == 3);
  CHECK(back[1].matrix.rows() == 5);
  CHECK(back == c);

  write_corpus(back, dir / "d.mvec");
  CHECK(bytes_of(dir / "c.mvec") == bytes_of(dir / "d.mvec"));
}

TEST_CASE("jsonl round trip within 1e-6") {
  TempDir dir;
  const Corpus c = testing::ragged_corpus(7, 1, 9, 6, 5);
  write_corpus(c, dir / "c.jsonl");
  const Corpus back = read_corpus(dir / "c.jsonl");
  REQUIRE(back.size() == c.size());
  for (std::size_t d = 0; d < c.size(); ++d) {
    CHECK(back[d].id == c[d].id);
    REQUIRE(back[d].matrix.rows() == c[d].matrix.rows());
    for (std::size_t i = 0; i < c[d].matrix.values().size(); ++i) {
      CHECK(std::abs(back[d].matrix.values()[i] - c[d].matrix.values()[i]) <= 1e-6);
    }
  }
}

TEST_CASE("ingestion normalizes rows") {
  std::istringstream in(R"({"doc_id":"x","vectors":[[2,0,0,0],[0,3,4,0]]})");
  const Corpus c = read_corpus(in, CorpusFormat::jsonl);
  CHECK(c[0].matrix.row(0)[0] == 1.0F);
  CHECK(c[0].matrix.row(1)[1] == doctest::Approx(0.6));
  CHECK(c[0].matrix.row(1)[2] == doctest::Approx(0.8));

  std::istringstream keep(R"({"doc_id":"x","vectors":[[2,0,0,0]]})");
  CHECK(read_corpus(keep, CorpusFormat::jsonl, RowNormalization::keep)[0].matrix.row(0)[0] == 2.0F);
}

TEST_CASE("normalization is idempotent on normalized data") {
  TempDir dir;
  const Corpus c = testing::random_corpus(5, 8, 16, 2);
  write_corpus(c, dir / "c.mvec");
  CHECK(read_corpus(dir / "c.mvec") == c);
}

TEST_CASE("zero rows are rejected") {
  std::istringstream in(R"({"doc_id":"x","vectors":[[0,0]]})");
  CHECK_THROWS_AS(read_corpus(in, CorpusFormat::jsonl), FormatError);
}

TEST_CASE("dim mismatch against the header") {
  std::istringstream in("{\"dim\":4}\n"
                        "{\"doc_id\":\"a\",\"vectors\":[[1,0,0,0]]}\n"
                        "{\"doc_id\":\"b\",\"vectors\":[[1,0,0,0,0,0,0,0]]}\n");
  try {
    read_corpus(in, CorpusFormat::jsonl);
    FAIL("expected an error");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("dim mismatch") != std::string::npos);
    CHECK(e.line() == 3);
  }
}

TEST_CASE("duplicate ids are an error") {
  Corpus c(2);
  c.add("a", TokenMatrix::from_rows({{1, 0}}));
  CHECK_THROWS_AS(c.add("a", TokenMatrix::from_rows({{0, 1}})), InvalidArgument);
  CHECK_THROWS_AS(c.add("b", TokenMatrix::from_rows({{0, 1, 0}})), DimensionMismatch);
  CHECK(c.find("a") == 0);
  CHECK(c.find("zz") == -1);
}

TEST_CASE("empty corpus writes a valid file") {
  TempDir dir;
  Corpus c(8);
  write_corpus(c, dir / "e.mvec");
  CHECK(std::filesystem::file_size(dir / "e.mvec") == 4 + 4 + 4 + 8);
  CHECK(read_corpus(dir / "e.mvec").size() == 0);
}

TEST_CASE("file size of a one-token document") {
  TempDir dir;
  Corpus c(3);
  c.add("doc", TokenMatrix::from_rows({{1, 0, 0}}));
  write_corpus(c, dir / "one.mvec");
  const std::uint64_t header = 4 + 4 + 4 + 8;
  const std::uint64_t expected = header + 2 + 3 + 4 + 4 * 3;
  CHECK(std::filesystem::file_size(dir / "one.mvec") == expected);
  CHECK(binary_corpus_size(c) == expected);
}

TEST_CASE("binary layout") {
  Corpus c(2);
  c.add("q", TokenMatrix::from_rows({{1, 0}}));
  std::ostringstream out;
  write_corpus(c, out, CorpusFormat::binary);
  const std::string s = out.str();
  REQUIRE(s.size() == 20 + 2 + 1 + 4 + 8);
  CHECK(s.substr(0, 4) == "MVEC");
  CHECK(static_cast<unsigned char>(s[4]) == 1);
  CHECK(static_cast<unsigned char>(s[8]) == 2);
  CHECK(static_cast<unsigned char>(s[12]) == 1);
  CHECK(static_cast<unsigned char>(s[20]) == 1);
  CHECK(s[22] == 'q');
  float first = 0;
  std::memcpy(&first, s.data() + 27, 4);
  CHECK(first == 1.0F);
}

TEST_CASE("truncated binary input") {
  Corpus c = two_docs();
  std::ostringstream out;
  write_corpus(c, out, CorpusFormat::binary);
  std::string s = out.str();
  s.resize(s.size() - 3);
  std::istringstream in(s);
  CHECK_THROWS_AS(read_corpus(in, CorpusFormat::binary), FormatError);

  std::istringstream bad_magic("XXXX");
  CHECK_THROWS_AS(read_corpus(bad_magic, CorpusFormat::binary), FormatError);
}

TEST_CASE("checksum depends on content") {
  const Corpus a = testing::random_corpus(3, 4, 4, 1);
  const Corpus b = testing::random_corpus(3, 4, 4, 2);
  CHECK(corpus_checksum(a) == corpus_checksum(a));
  CHECK(corpus_checksum(a) != corpus_checksum(b));
}

TEST_CASE("qrels parsing") {
  std::istringstream in("q1 0 d7 2\nq1 0 d8 0\n\nq2 0 d1 1\n");
  const Qrels q = read_qrels(in);
  CHECK(q.grade("q1", "d7") == 2);
  CHECK(q.grade("q1", "d8") == 0);
  CHECK(q.grade("q1", "nope") == 0);
  CHECK(q.has_query("q2"));
  CHECK_FALSE(q.has_query("q3"));
  CHECK(q.size() == 3);
}

TEST_CASE("qrels errors report the line") {
  std::istringstream in("q1 0 d7 2\nq1 d7 2\n");
  try {
    read_qrels(in);
    FAIL("expected an error");
  } catch (const FormatError& e) {
    CHECK(e.line() == 2);
  }
  std::istringstream neg("q1 0 d7 -1\n");
  CHECK_THROWS_AS(read_qrels(neg), FormatError);
}

TEST_CASE("run write and read") {
  RunList run;
  run["q1"] = {{"d3", 0.9}, {"d1", 0.5}};
  run["q2"] = {{"d9", 1.25}};
  std::ostringstream out;
  write_run(run, out, "sys");
  CHECK(out.str() ==
        "q1 Q0 d3 1 0.900000 sys\n"
        "q1 Q0 d1 2 0.500000 sys\n"
        "q2 Q0 d9 1 1.250000 sys\n");
  std::istringstream in(out.str());
  CHECK(read_run(in) == run);
}

TEST_CASE("run reading sorts by score and rejects duplicates") {
  std::istringstream in("q1 Q0 a 2 0.1 t\nq1 Q0 b 1 0.7 t\n");
  const RunList r = read_run(in);
  CHECK(r.at("q1")[0].doc_id == "b");

  std::istringstream dup("q1 Q0 a 1 0.5 t\nq1 Q0 a 2 0.4 t\n");
  CHECK_THROWS_AS(read_run(dup), FormatError);
  std::istringstream short_line("q1 Q0 a 1 0.5\n");
  CHECK_THROWS_AS(read_run(short_line), FormatError);
}

TEST_CASE("validate_run") {
  RunList r;
  r["q"] = {{"a", 0.5}, {"b", 0.6}};
  CHECK_THROWS_AS(validate_run(r), InvalidArgument);
  r["q"] = {{"a", 0.6}, {"a", 0.5}};
  CHECK_THROWS_AS(validate_run(r), InvalidArgument);
  r["q"] = {{"a", 0.6}, {"b", 0.6}};
  CHECK_NOTHROW(validate_run(r));
}
