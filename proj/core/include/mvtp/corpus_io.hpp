#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "mvtp/token_matrix.hpp"

namespace mvtp {

enum class CorpusFormat { binary, jsonl };

/// ".jsonl" / ".json" select jsonl, anything else the binary ".mvec" format.
CorpusFormat format_for_path(const std::filesystem::path& path);

struct Document {
  std::string id;
  TokenMatrix matrix;

  bool operator==(const Document&) const = default;
};

/// Ordered collection of documents sharing one embedding dimensionality.
class Corpus {
 public:
  Corpus() = default;
  explicit Corpus(std::size_t dim) : dim_(dim) {}

  /// Appends a document. Throws InvalidArgument on a duplicate id or an
  /// empty matrix, DimensionMismatch when the matrix dim differs from the
  /// corpus dim. A corpus created without a dim adopts the first document's.
  void add(std::string id, TokenMatrix matrix);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return docs_.size(); }
  bool empty() const noexcept { return docs_.empty(); }
  std::size_t total_tokens() const noexcept;

  const std::vector<Document>& docs() const noexcept { return docs_; }
  const Document& operator[](std::size_t i) const { return docs_[i]; }

  /// Ordinal of the document with this id, or -1.
  std::ptrdiff_t find(const std::string& id) const;

  bool operator==(const Corpus& other) const {
    return dim_ == other.dim_ && docs_ == other.docs_;
  }

 private:
  std::size_t dim_ = 0;
  std::vector<Document> docs_;
  std::unordered_map<std::string, std::size_t> index_;
};

enum class RowNormalization {
  /// L2-normalize every row; zero-norm rows are rejected.
  unit,
  /// Keep stored values verbatim (for pooled or decoded vectors).
  keep,
};

/// Reads a corpus, by default L2-normalizing every row.
Corpus read_corpus(const std::filesystem::path& path, CorpusFormat format,
                   RowNormalization rows = RowNormalization::unit);
Corpus read_corpus(const std::filesystem::path& path);
Corpus read_corpus(std::istream& in, CorpusFormat format,
                   RowNormalization rows = RowNormalization::unit);

void write_corpus(const Corpus& corpus, const std::filesystem::path& path,
                  CorpusFormat format);
void write_corpus(const Corpus& corpus, const std::filesystem::path& path);
void write_corpus(const Corpus& corpus, std::ostream& out, CorpusFormat format);

/// Exact size in bytes of the binary serialization of a corpus.
std::uint64_t binary_corpus_size(const Corpus& corpus);

/// 64-bit FNV-1a over the binary serialization; stable across platforms.
std::uint64_t corpus_checksum(const Corpus& corpus);

// ---------------------------------------------------------------------------
// TREC-style relevance judgments and run files.

class Qrels {
 public:
  /// Throws InvalidArgument for a negative grade.
  void set(const std::string& query_id, const std::string& doc_id, int grade);

  /// Grade of (query, doc); 0 when unjudged.
  int grade(const std::string& query_id, const std::string& doc_id) const;

  bool has_query(const std::string& query_id) const;
  const std::map<std::string, int>* judgments(const std::string& query_id) const;
  const std::map<std::string, std::map<std::string, int>>& all() const noexcept {
    return judgments_;
  }
  std::size_t size() const noexcept;

 private:
  std::map<std::string, std::map<std::string, int>> judgments_;
};

struct RunEntry {
  std::string doc_id;
  double score = 0.0;

  bool operator==(const RunEntry&) const = default;
};

/// Ranked documents per query, best first.
using Ranking = std::vector<RunEntry>;
using RunList = std::map<std::string, Ranking>;

/// Throws InvalidArgument if a ranking has duplicate doc ids or increasing
/// scores.
void validate_run(const RunList& run);

Qrels read_qrels(const std::filesystem::path& path);
Qrels read_qrels(std::istream& in);

RunList read_run(const std::filesystem::path& path);
RunList read_run(std::istream& in);

void write_run(const RunList& run, const std::filesystem::path& path,
               const std::string& tag);
void write_run(const RunList& run, std::ostream& out, const std::string& tag);

}  // namespace mvtp
