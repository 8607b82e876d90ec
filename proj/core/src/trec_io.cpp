#include <algorithm>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "mvtp/corpus_io.hpp"
#include "mvtp/error.hpp"

namespace mvtp {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::istringstream ss(line);
  std::string f;
  while (ss >> f) fields.push_back(std::move(f));
  return fields;
}

long parse_int(const std::string& s, const char* what, std::size_t line_no) {
  long value = 0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, value);
  if (ec != std::errc{} || ptr != end) {
    throw FormatError(std::string("invalid ") + what + " \"" + s + "\"", line_no);
  }
  return value;
}

double parse_double(const std::string& s, const char* what, std::size_t line_no) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw FormatError(std::string("invalid ") + what + " \"" + s + "\"", line_no);
  }
}

}  // namespace

void Qrels::set(const std::string& query_id, const std::string& doc_id, int grade) {
  if (grade < 0) {
    throw InvalidArgument("negative relevance grade for (" + query_id + ", " + doc_id + ")");
  }
  judgments_[query_id][doc_id] = grade;
}

int Qrels::grade(const std::string& query_id, const std::string& doc_id) const {
  const auto q = judgments_.find(query_id);
  if (q == judgments_.end()) return 0;
  const auto d = q->second.find(doc_id);
  return d == q->second.end() ? 0 : d->second;
}

bool Qrels::has_query(const std::string& query_id) const {
  return judgments_.contains(query_id);
}

const std::map<std::string, int>* Qrels::judgments(const std::string& query_id) const {
  const auto q = judgments_.find(query_id);
  return q == judgments_.end() ? nullptr : &q->second;
}

std::size_t Qrels::size() const noexcept {
  std::size_t n = 0;
  for (const auto& [q, docs] : judgments_) n += docs.size();
  return n;
}

void validate_run(const RunList& run) {
  for (const auto& [qid, ranking] : run) {
    std::set<std::string> seen;
    for (std::size_t i = 0; i < ranking.size(); ++i) {
      if (!seen.insert(ranking[i].doc_id).second) {
        throw InvalidArgument("query " + qid + ": duplicate doc_id " + ranking[i].doc_id);
      }
      if (i > 0 && ranking[i].score > ranking[i - 1].score) {
        throw InvalidArgument("query " + qid + ": scores must be non-increasing");
      }
    }
  }
}

Qrels read_qrels(std::istream& in) {
  Qrels qrels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto f = split_fields(line);
    if (f.empty()) continue;
    if (f.size() != 4) {
      throw FormatError("expected \"query_id iteration doc_id grade\", got " +
                            std::to_string(f.size()) + " fields",
                        line_no);
    }
    const long grade = parse_int(f[3], "relevance grade", line_no);
    if (grade < 0) throw FormatError("negative relevance grade", line_no);
    qrels.set(f[0], f[2], static_cast<int>(grade));
  }
  return qrels;
}

Qrels read_qrels(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open qrels " + path.string());
  return read_qrels(in);
}

RunList read_run(std::istream& in) {
  struct Row {
    RunEntry entry;
    long rank;
  };
  std::map<std::string, std::vector<Row>> rows;
  std::map<std::string, std::set<std::string>> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto f = split_fields(line);
    if (f.empty()) continue;
    if (f.size() != 6) {
      throw FormatError("expected \"query_id Q0 doc_id rank score tag\", got " +
                            std::to_string(f.size()) + " fields",
                        line_no);
    }
    const long rank = parse_int(f[3], "rank", line_no);
    const double score = parse_double(f[4], "score", line_no);
    if (!seen[f[0]].insert(f[2]).second) {
      throw FormatError("duplicate doc_id " + f[2] + " for query " + f[0], line_no);
    }
    rows[f[0]].push_back(Row{RunEntry{f[2], score}, rank});
  }

  RunList run;
  for (auto& [qid, list] : rows) {
    std::stable_sort(list.begin(), list.end(), [](const Row& a, const Row& b) {
      if (a.entry.score != b.entry.score) return a.entry.score > b.entry.score;
      return a.rank < b.rank;
    });
    auto& ranking = run[qid];
    ranking.reserve(list.size());
    for (auto& r : list) ranking.push_back(std::move(r.entry));
  }
  return run;
}

RunList read_run(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open run " + path.string());
  return read_run(in);
}

void write_run(const RunList& run, std::ostream& out, const std::string& tag) {
  validate_run(run);
  const std::string t = tag.empty() ? "mvtp" : tag;
  for (const auto& [qid, ranking] : run) {
    for (std::size_t i = 0; i < ranking.size(); ++i) {
      out << qid << " Q0 " << ranking[i].doc_id << ' ' << (i + 1) << ' ' << std::fixed
          << std::setprecision(6) << ranking[i].score << ' ' << t << '\n';
    }
  }
}

void write_run(const RunList& run, const std::filesystem::path& path, const std::string& tag) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  write_run(run, out, tag);
  out.flush();
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace mvtp
