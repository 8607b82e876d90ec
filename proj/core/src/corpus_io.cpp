#include "mvtp/corpus_io.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <streambuf>

#include <json.hpp>

#include "binary_io.hpp"
#include "mvtp/error.hpp"

namespace mvtp {

namespace {

constexpr std::string_view kCorpusMagic = "MVEC";
constexpr std::uint32_t kCorpusVersion = 1;

// Streambuf that hashes everything written to it (64-bit FNV-1a).
class Fnv1aBuf : public std::streambuf {
 public:
  std::uint64_t hash() const noexcept { return hash_; }

 protected:
  int_type overflow(int_type ch) override {
    if (ch != traits_type::eof()) mix(static_cast<unsigned char>(ch));
    return ch;
  }
  std::streamsize xsputn(const char* s, std::streamsize n) override {
    for (std::streamsize i = 0; i < n; ++i) mix(static_cast<unsigned char>(s[i]));
    return n;
  }

 private:
  void mix(unsigned char c) noexcept {
    hash_ ^= c;
    hash_ *= 0x100000001B3ULL;
  }
  std::uint64_t hash_ = 0xCBF29CE484222325ULL;
};

Corpus read_binary(std::istream& in, RowNormalization rows) {
  binio::expect_magic(in, kCorpusMagic);
  const auto version = binio::read_le<std::uint32_t>(in, "version");
  if (version != kCorpusVersion) {
    throw FormatError("unsupported corpus version " + std::to_string(version));
  }
  const auto dim = binio::read_le<std::uint32_t>(in, "dim");
  const auto count = binio::read_le<std::uint64_t>(in, "doc count");
  if (dim == 0 && count > 0) throw FormatError("corpus header has dim 0");

  Corpus corpus(dim);
  for (std::uint64_t d = 0; d < count; ++d) {
    std::string id = binio::read_id(in);
    const auto tokens = binio::read_le<std::uint32_t>(in, "token count");
    if (tokens == 0) throw FormatError("document \"" + id + "\" has no tokens");
    std::vector<float> values(static_cast<std::size_t>(tokens) * dim);
    binio::read_floats(in, values, "token vectors");
    TokenMatrix m(tokens, dim, std::move(values));
    try {
      if (rows == RowNormalization::unit) normalize_rows(m);
    } catch (const InvalidArgument& e) {
      throw FormatError("document \"" + id + "\": " + e.what());
    }
    corpus.add(std::move(id), std::move(m));
  }
  binio::expect_eof(in);
  return corpus;
}

Corpus read_jsonl(std::istream& in, RowNormalization rows) {
  Corpus corpus;
  std::string line;
  std::size_t line_no = 0;
  bool first_record = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); })) {
      continue;
    }
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(std::string("invalid JSON: ") + e.what(), line_no);
    }
    if (!obj.is_object()) throw FormatError("expected a JSON object", line_no);

    // Optional header line {"dim": N} fixes the dimensionality up front.
    if (first_record && obj.contains("dim") && !obj.contains("doc_id")) {
      first_record = false;
      if (!obj["dim"].is_number_unsigned()) throw FormatError("\"dim\" must be an unsigned integer", line_no);
      corpus = Corpus(obj["dim"].get<std::size_t>());
      continue;
    }
    first_record = false;

    if (!obj.contains("doc_id") || !obj["doc_id"].is_string()) {
      throw FormatError("missing string field \"doc_id\"", line_no);
    }
    if (!obj.contains("vectors") || !obj["vectors"].is_array() || obj["vectors"].empty()) {
      throw FormatError("missing non-empty array field \"vectors\"", line_no);
    }
    TokenMatrix m;
    std::vector<float> row;
    for (const auto& v : obj["vectors"]) {
      if (!v.is_array()) throw FormatError("\"vectors\" must be an array of arrays", line_no);
      row.clear();
      for (const auto& x : v) {
        if (!x.is_number()) throw FormatError("non-numeric vector component", line_no);
        row.push_back(x.get<float>());
      }
      if (row.empty()) throw FormatError("empty token vector", line_no);
      if (!m.empty() && row.size() != m.dim()) {
        throw FormatError("dim mismatch inside document", line_no);
      }
      m.append_row(row);
    }
    if (corpus.dim() != 0 && m.dim() != corpus.dim()) {
      throw FormatError("dim mismatch: document has dim " + std::to_string(m.dim()) +
                            ", corpus dim is " + std::to_string(corpus.dim()),
                        line_no);
    }
    try {
      if (rows == RowNormalization::unit) normalize_rows(m);
      corpus.add(obj["doc_id"].get<std::string>(), std::move(m));
    } catch (const Error& e) {
      throw FormatError(e.what(), line_no);
    }
  }
  return corpus;
}

void write_binary(const Corpus& corpus, std::ostream& out) {
  binio::write_magic(out, kCorpusMagic);
  binio::write_le<std::uint32_t>(out, kCorpusVersion);
  binio::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(corpus.dim()));
  binio::write_le<std::uint64_t>(out, corpus.size());
  for (const auto& doc : corpus.docs()) {
    binio::write_id(out, doc.id);
    binio::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(doc.matrix.rows()));
    binio::write_floats(out, doc.matrix.values());
  }
}

void write_jsonl(const Corpus& corpus, std::ostream& out) {
  out << nlohmann::json{{"dim", corpus.dim()}}.dump() << '\n';
  for (const auto& doc : corpus.docs()) {
    nlohmann::json vectors = nlohmann::json::array();
    for (std::size_t r = 0; r < doc.matrix.rows(); ++r) {
      const auto row = doc.matrix.row(r);
      vectors.push_back(std::vector<float>(row.begin(), row.end()));
    }
    out << nlohmann::json{{"doc_id", doc.id}, {"vectors", std::move(vectors)}}.dump() << '\n';
  }
}

}  // namespace

CorpusFormat format_for_path(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  return (ext == ".jsonl" || ext == ".json") ? CorpusFormat::jsonl : CorpusFormat::binary;
}

void Corpus::add(std::string id, TokenMatrix matrix) {
  if (matrix.rows() == 0) throw InvalidArgument("document \"" + id + "\" has no tokens");
  if (dim_ == 0) {
    if (!docs_.empty()) throw DimensionMismatch("dim mismatch");
    dim_ = matrix.dim();
  } else if (matrix.dim() != dim_) {
    throw DimensionMismatch("dim mismatch: document \"" + id + "\" has dim " +
                            std::to_string(matrix.dim()) + ", corpus dim is " +
                            std::to_string(dim_));
  }
  if (index_.contains(id)) throw InvalidArgument("duplicate doc_id \"" + id + "\"");
  index_.emplace(id, docs_.size());
  docs_.push_back(Document{std::move(id), std::move(matrix)});
}

std::size_t Corpus::total_tokens() const noexcept {
  std::size_t total = 0;
  for (const auto& d : docs_) total += d.matrix.rows();
  return total;
}

std::ptrdiff_t Corpus::find(const std::string& id) const {
  const auto it = index_.find(id);
  return it == index_.end() ? -1 : static_cast<std::ptrdiff_t>(it->second);
}

Corpus read_corpus(std::istream& in, CorpusFormat format, RowNormalization rows) {
  return format == CorpusFormat::binary ? read_binary(in, rows) : read_jsonl(in, rows);
}

Corpus read_corpus(const std::filesystem::path& path, CorpusFormat format, RowNormalization rows) {
  std::ifstream in(path, format == CorpusFormat::binary ? std::ios::binary : std::ios::in);
  if (!in) throw IoError("cannot open corpus " + path.string());
  return read_corpus(in, format, rows);
}

Corpus read_corpus(const std::filesystem::path& path) {
  return read_corpus(path, format_for_path(path));
}

void write_corpus(const Corpus& corpus, std::ostream& out, CorpusFormat format) {
  if (format == CorpusFormat::binary) {
    write_binary(corpus, out);
  } else {
    write_jsonl(corpus, out);
  }
}

void write_corpus(const Corpus& corpus, const std::filesystem::path& path, CorpusFormat format) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  write_corpus(corpus, out, format);
  out.flush();
  if (!out) throw IoError("write failed: " + path.string());
}

void write_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  write_corpus(corpus, path, format_for_path(path));
}

std::uint64_t binary_corpus_size(const Corpus& corpus) {
  std::uint64_t size = 4 + 4 + 4 + 8;
  for (const auto& doc : corpus.docs()) {
    size += 2 + doc.id.size() + 4 + 4ULL * doc.matrix.rows() * doc.matrix.dim();
  }
  return size;
}

std::uint64_t corpus_checksum(const Corpus& corpus) {
  Fnv1aBuf buf;
  std::ostream out(&buf);
  write_binary(corpus, out);
  return buf.hash();
}

}  // namespace mvtp
