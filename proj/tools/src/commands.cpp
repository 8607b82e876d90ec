#include "commands.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "CLI11.hpp"
#include "config_format.hpp"
#include "mvtp/corpus_io.hpp"
#include "mvtp/error.hpp"
#include "mvtp/evaluation.hpp"
#include "mvtp/pooling.hpp"
#include "mvtp/retrieval.hpp"

namespace mvtp::cli {
namespace fs = std::filesystem;

namespace {

// Bad flags or flag combinations. Always raised before any output is written.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Removes the outputs of a command unless it completes.
class OutputGuard {
 public:
  OutputGuard() = default;
  OutputGuard(const OutputGuard&) = delete;
  OutputGuard& operator=(const OutputGuard&) = delete;
  ~OutputGuard() {
    if (committed_) return;
    std::error_code ec;
    for (auto it = files_.rbegin(); it != files_.rend(); ++it) fs::remove(*it, ec);
    for (auto it = dirs_.rbegin(); it != dirs_.rend(); ++it) fs::remove_all(*it, ec);
  }

  void file(const fs::path& p) { files_.push_back(p); }

  /// Creates the directory if needed. Only a directory created here is
  /// removed on failure; otherwise just the listed files are.
  void directory(const fs::path& p, const std::vector<std::string>& contents) {
    if (!fs::exists(p)) {
      fs::create_directories(p);
      dirs_.push_back(p);
      return;
    }
    if (!fs::is_directory(p)) throw IoError(p.string() + " exists and is not a directory");
    for (const auto& name : contents) files_.push_back(p / name);
  }

  void commit() { committed_ = true; }

 private:
  std::vector<fs::path> files_;
  std::vector<fs::path> dirs_;
  bool committed_ = false;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  f << text;
  if (!f) throw IoError("write failed: " + path.string());
}

void require_input(const std::string& path, const char* flag) {
  if (path.empty()) throw UsageError(std::string(flag) + " is required");
  if (!fs::exists(path)) throw IoError(std::string("no such file: ") + path);
}

void require_flag(const std::string& value, const char* flag) {
  if (value.empty()) throw UsageError(std::string(flag) + " is required");
}

PoolingMethod method_flag(const std::string& name) {
  try {
    return parse_pooling_method(name);
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
}

IndexBackend backend_flag(const std::string& name) {
  try {
    return parse_index_backend(name);
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
}

MetricSpec metric_flag(const std::string& text, std::size_t default_k) {
  try {
    return MetricSpec::parse(text, default_k);
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
}

template <class F>
void validate_as_usage(F&& f) {
  try {
    f();
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b == std::string::npos) continue;
    out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

std::string fixed(double v, int precision) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(precision) << v;
  return s.str();
}

// Shared option groups.

struct IndexFlags {
  std::string backend = "hnsw";
  std::size_t m = 12;
  std::size_t ef_construction = 200;
  std::size_t ef_search = 256;
  bool codec = false;
  std::size_t codec_centroids = 64;
  unsigned codec_bits = 2;
  bool codec_renormalize = false;

  void add(CLI::App* app) {
    app->add_option("--backend", backend, "flat or hnsw")->capture_default_str();
    app->add_option("--m", m, "HNSW degree")->check(CLI::PositiveNumber)->capture_default_str();
    app->add_option("--ef-construction", ef_construction, "HNSW construction beam")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app->add_option("--ef-search", ef_search, "HNSW search beam")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app->add_flag("--codec", codec, "store vectors with the residual codec");
    app->add_option("--codec-centroids", codec_centroids, "codec centroid count")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app->add_option("--codec-bits", codec_bits, "bits per residual component (1, 2 or 4)")
        ->check(CLI::IsMember({1U, 2U, 4U}))
        ->capture_default_str();
    app->add_flag("--codec-renormalize", codec_renormalize, "unit-normalize decoded vectors");
  }

  void apply(PipelineConfig& cfg, std::uint64_t seed) const {
    cfg.index.backend = backend_flag(backend);
    cfg.index.m = m;
    cfg.index.ef_construction = ef_construction;
    cfg.index.ef_search = ef_search;
    cfg.index.seed = seed;
    if (codec) {
      CodecSettings cs;
      cs.n_centroids = codec_centroids;
      cs.bits = codec_bits;
      cs.seed = seed;
      cs.renormalize_decoded = codec_renormalize;
      cfg.codec = cs;
    }
  }
};

struct BudgetFlags {
  std::size_t candidate_k = 512;
  std::size_t rescore_docs = 8192;
  std::size_t top_n = 100;

  void add(CLI::App* app) {
    app->add_option("--candidate-k", candidate_k, "token hits fetched per query token")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app->add_option("--rescore-docs", rescore_docs, "documents re-scored with exact maxsim")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app->add_option("--top-n", top_n, "documents returned per query")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
  }

  void apply(PipelineConfig& cfg) const {
    cfg.candidate_k = candidate_k;
    cfg.rescore_docs = rescore_docs;
    cfg.top_n = top_n;
  }
};

// pool

struct PoolOptions {
  std::string in;
  std::string out;
  std::string method = "hierarchical";
  std::size_t factor = 2;
  std::uint64_t seed = 0;
  bool no_renormalize = false;
};

int cmd_pool(const PoolOptions& o, std::ostream& out) {
  require_flag(o.out, "--out");
  PoolingConfig cfg;
  cfg.method = method_flag(o.method);
  cfg.factor = o.factor;
  cfg.seed = o.seed;
  cfg.renormalize = !o.no_renormalize;
  validate_as_usage([&] { cfg.validate(); });
  require_input(o.in, "--in");

  const auto norm = cfg.method == PoolingMethod::none ? RowNormalization::keep : RowNormalization::unit;
  const Corpus corpus = read_corpus(o.in, format_for_path(o.in), norm);
  const PooledCorpus pooled = pool_corpus(corpus, cfg);

  OutputGuard guard;
  guard.file(o.out);
  guard.file(pooled_manifest_path(o.out));
  write_pooled_corpus(pooled, o.out, format_for_path(o.out));
  guard.commit();

  const auto before = pooled.original_vector_count();
  const auto after = pooled.pooled_vector_count();
  out << "documents       " << pooled.docs.size() << '\n'
      << "method          " << to_string(cfg.method) << '\n'
      << "factor          " << cfg.factor << '\n'
      << "vectors before  " << before << '\n'
      << "vectors after   " << after << '\n'
      << "ratio           " << fixed(before == 0 ? 1.0 : static_cast<double>(after) / before, 4) << '\n';
  return kExitOk;
}

// index

struct IndexOptions {
  std::string in;
  std::string out;
  std::string method = "none";
  std::size_t factor = 2;
  bool no_renormalize = false;
  std::uint64_t seed = 0;
  IndexFlags index;
  CLI::Option* method_opt = nullptr;
  CLI::Option* factor_opt = nullptr;
};

const std::vector<std::string> kArtifactFiles = {"manifest.json", "index.mvix", "pooled.mvec",
                                                 "codec.mvqc", "quantized.mvqv"};

int cmd_index(const IndexOptions& o, std::ostream& out) {
  require_flag(o.out, "--out");
  PipelineConfig cfg;
  cfg.pooling.method = method_flag(o.method);
  cfg.pooling.factor = o.factor;
  cfg.pooling.seed = o.seed;
  cfg.pooling.renormalize = !o.no_renormalize;
  o.index.apply(cfg, o.seed);
  validate_as_usage([&] { cfg.validate(); });
  require_input(o.in, "--in");

  const bool pooled_input = fs::exists(pooled_manifest_path(o.in));
  if (pooled_input && (o.method_opt->count() > 0 || o.factor_opt->count() > 0)) {
    throw UsageError("--in is already pooled; drop --method/--factor");
  }

  SearchIndexArtifact artifact = [&] {
    if (pooled_input) {
      const PooledCorpus pooled = read_pooled_corpus(o.in, format_for_path(o.in));
      return index_pooled(pooled, cfg, corpus_checksum(pooled.to_corpus()));
    }
    return index_corpus(read_corpus(o.in), cfg);
  }();

  OutputGuard guard;
  guard.directory(o.out, kArtifactFiles);
  save_artifact(artifact, o.out);
  guard.commit();

  const auto& man = artifact.manifest;
  out << "documents       " << man.doc_count << '\n'
      << "pooling         " << to_string(man.pooling.method) << " x" << man.pooling.factor << '\n'
      << "vectors before  " << man.original_vectors << '\n'
      << "vectors stored  " << man.pooled_vectors << '\n'
      << "backend         " << to_string(man.index.backend) << '\n'
      << "codec           "
      << (man.codec ? std::to_string(man.codec->bits) + "-bit, " + std::to_string(man.codec->n_centroids) +
                          " centroids"
                    : std::string("none"))
      << '\n';
  return kExitOk;
}

// search

struct SearchOptions {
  std::string index;
  std::string queries;
  std::string run_out;
  std::string tag = "mvtp";
  BudgetFlags budget;
  std::size_t ef_search = 0;
};

int cmd_search(const SearchOptions& o, std::ostream& out) {
  require_flag(o.run_out, "--run-out");
  if (o.budget.top_n > o.budget.rescore_docs) throw UsageError("--top-n must not exceed --rescore-docs");
  if (o.tag.empty() || o.tag.find_first_of(" \t\n") != std::string::npos) {
    throw UsageError("--tag must be a non-empty word");
  }
  require_input(o.index, "--index");
  require_input(o.queries, "--queries");

  const SearchIndexArtifact artifact = load_artifact(o.index);
  PipelineConfig cfg;
  cfg.pooling = artifact.manifest.pooling;
  cfg.index = artifact.manifest.index;
  cfg.codec = artifact.manifest.codec;
  if (o.ef_search > 0) cfg.index.ef_search = o.ef_search;
  o.budget.apply(cfg);
  validate_as_usage([&] { cfg.validate(); });

  const Corpus queries = read_corpus(o.queries);
  const RunList run = retrieve(artifact, queries, cfg);

  OutputGuard guard;
  guard.file(o.run_out);
  write_run(run, o.run_out, o.tag);
  guard.commit();

  out << "queries         " << queries.size() << '\n' << "run             " << o.run_out << '\n';
  return kExitOk;
}

// eval

struct EvalOptions {
  std::string run;
  std::string qrels;
  std::vector<std::string> metrics{"ndcg@10"};
  std::size_t k = 10;
};

int cmd_eval(const EvalOptions& o, std::ostream& out) {
  std::vector<MetricSpec> specs;
  for (const auto& m : o.metrics) specs.push_back(metric_flag(m, o.k));
  require_input(o.run, "--run");
  require_input(o.qrels, "--qrels");
  const RunList run = read_run(o.run);
  const Qrels qrels = read_qrels(o.qrels);
  for (const auto& spec : specs) {
    const MetricResult r = evaluate(run, qrels, spec);
    out << spec.name() << '\t' << fixed(r.value, 5) << "\tevaluated=" << r.evaluated
        << "\texcluded=" << r.excluded << '\n';
  }
  return kExitOk;
}

// compare

struct CompareOptions {
  std::string run;
  std::string baseline;
  std::string qrels;
  std::string metric = "ndcg@10";
  std::size_t k = 10;
  std::string dataset = "dataset";
  std::string method = "pooled";
  std::size_t factor = 1;
  std::string artifact;
  double bytes_per_value = 2.0;
  std::string csv_out;
};

int cmd_compare(const CompareOptions& o, std::ostream& out) {
  const MetricSpec spec = metric_flag(o.metric, o.k);
  if (!(o.bytes_per_value > 0.0)) throw UsageError("--bytes-per-value must be positive");
  require_input(o.run, "--run");
  require_input(o.baseline, "--baseline");
  require_input(o.qrels, "--qrels");
  if (!o.artifact.empty()) require_input(o.artifact, "--artifact");

  const Qrels qrels = read_qrels(o.qrels);
  const MetricResult pooled = evaluate(read_run(o.run), qrels, spec);
  const MetricResult base = evaluate(read_run(o.baseline), qrels, spec);

  ReportRow row;
  row.dataset = o.dataset;
  row.method = o.method;
  row.factor = o.factor;
  row.metric = spec.name();
  row.value = pooled.value;
  row.baseline = base.value;
  row.relative = relative_performance(pooled.value, base.value);
  if (!o.artifact.empty()) {
    const FootprintStats foot = footprint_stats(load_artifact(o.artifact), o.bytes_per_value);
    row.vectors_before = foot.original_vectors;
    row.vectors_after = foot.pooled_vectors;
    row.bytes = foot.estimated_storage_bytes;
  }
  RelativeReport report;
  report.rows.push_back(row);

  if (!o.csv_out.empty()) {
    OutputGuard guard;
    guard.file(o.csv_out);
    write_text(o.csv_out, report.to_csv());
    guard.commit();
  }
  out << "relative " << fixed(row.relative, 2) << '\n' << report.to_csv();
  return kExitOk;
}

// stats

struct StatsOptions {
  std::string index;
  double bytes_per_value = 2.0;
  bool json = false;
};

int cmd_stats(const StatsOptions& o, std::ostream& out) {
  if (!(o.bytes_per_value > 0.0)) throw UsageError("--bytes-per-value must be positive");
  require_input(o.index, "--index");
  const SearchIndexArtifact artifact = load_artifact(o.index);
  const FootprintStats s = footprint_stats(artifact, o.bytes_per_value);
  const auto& man = artifact.manifest;

  if (o.json) {
    nlohmann::json j = {{"documents", s.documents},
                        {"dim", s.dim},
                        {"method", std::string(to_string(man.pooling.method))},
                        {"factor", man.pooling.factor},
                        {"original_vectors", s.original_vectors},
                        {"pooled_vectors", s.pooled_vectors},
                        {"reduction_ratio", s.reduction_ratio},
                        {"payload_bytes_per_vector", s.payload_bytes_per_vector},
                        {"store_overhead_bytes", s.store_overhead_bytes},
                        {"index_bytes", s.index_bytes},
                        {"estimated_storage_bytes", s.estimated_storage_bytes},
                        {"original_storage_bytes", s.original_storage_bytes}};
    out << j.dump(2) << '\n';
    return kExitOk;
  }

  auto line = [&](const char* label, const std::string& value) {
    out << std::left << std::setw(26) << label << value << '\n';
  };
  const double saved = s.original_storage_bytes == 0.0
                           ? 0.0
                           : 100.0 * (1.0 - s.estimated_storage_bytes / s.original_storage_bytes);
  line("documents", std::to_string(s.documents));
  line("dim", std::to_string(s.dim));
  line("pooling", std::string(to_string(man.pooling.method)) + " x" + std::to_string(man.pooling.factor));
  line("codec", man.codec ? std::to_string(man.codec->bits) + "-bit" : "none");
  line("original vectors", std::to_string(s.original_vectors));
  line("pooled vectors", std::to_string(s.pooled_vectors));
  line("vector ratio", fixed(100.0 * s.reduction_ratio, 2) + "%");
  line("payload bytes/vector", fixed(s.payload_bytes_per_vector, 2));
  line("store overhead bytes", std::to_string(s.store_overhead_bytes));
  line("index bytes", std::to_string(s.index_bytes));
  line("original storage bytes", fixed(s.original_storage_bytes, 0));
  line("pooled storage bytes", fixed(s.estimated_storage_bytes, 0));
  line("storage saved", fixed(saved, 2) + "%");
  return kExitOk;
}

// sweep

struct SweepOptions {
  std::string corpus;
  std::string queries;
  std::string qrels;
  std::string methods = "sequential,kmeans,hierarchical";
  std::string factors = "2,3,4,5,6,8";
  std::string metric = "ndcg@10";
  std::size_t k = 10;
  std::string dataset;
  std::string csv_out;
  std::string json_out;
  std::uint64_t seed = 0;
  bool no_renormalize = false;
  double bytes_per_value = 2.0;
  IndexFlags index;
  BudgetFlags budget;
};

std::string failure_status(const std::string& what) {
  std::string reason = what;
  std::replace_if(reason.begin(), reason.end(), [](char c) { return c == ',' || c == '\n' || c == '\r'; }, ' ');
  return "failed: " + reason;
}

int cmd_sweep(const SweepOptions& o, std::ostream& out, std::ostream& err) {
  std::vector<PoolingMethod> methods;
  for (const auto& m : split_list(o.methods)) methods.push_back(method_flag(m));
  if (methods.empty()) throw UsageError("--methods is empty");
  std::vector<std::size_t> factors;
  for (const auto& f : split_list(o.factors)) {
    std::size_t pos = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(f, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != f.size() || v == 0 || f.front() == '-') throw UsageError("invalid factor \"" + f + "\"");
    factors.push_back(static_cast<std::size_t>(v));
  }
  if (factors.empty()) throw UsageError("--factors is empty");
  const MetricSpec spec = metric_flag(o.metric, o.k);
  if (!(o.bytes_per_value > 0.0)) throw UsageError("--bytes-per-value must be positive");

  PipelineConfig base_cfg;
  base_cfg.pooling.method = PoolingMethod::none;
  base_cfg.pooling.factor = 1;
  base_cfg.pooling.seed = o.seed;
  base_cfg.pooling.renormalize = !o.no_renormalize;
  o.index.apply(base_cfg, o.seed);
  o.budget.apply(base_cfg);
  validate_as_usage([&] { base_cfg.validate(); });
  require_input(o.corpus, "--corpus");
  require_input(o.queries, "--queries");
  require_input(o.qrels, "--qrels");

  const Corpus corpus = read_corpus(o.corpus);
  const Corpus queries = read_corpus(o.queries);
  const Qrels qrels = read_qrels(o.qrels);
  const std::string dataset = o.dataset.empty() ? fs::path(o.corpus).stem().string() : o.dataset;

  std::optional<MetricResult> baseline;
  std::string baseline_failure;
  std::size_t baseline_vectors = corpus.total_tokens();
  try {
    const SearchIndexArtifact a = index_corpus(corpus, base_cfg);
    baseline = evaluate(retrieve(a, queries, base_cfg), qrels, spec);
    out << "baseline " << spec.name() << ' ' << fixed(baseline->value, 5) << " vectors " << baseline_vectors
        << '\n';
  } catch (const std::exception& e) {
    baseline_failure = e.what();
    err << "baseline failed: " << e.what() << '\n';
  }

  RelativeReport report;
  bool any_failed = !baseline.has_value();
  for (PoolingMethod method : methods) {
    for (std::size_t factor : factors) {
      ReportRow row;
      row.dataset = dataset;
      row.method = std::string(to_string(method));
      row.factor = factor;
      row.metric = spec.name();
      row.vectors_before = baseline_vectors;
      try {
        if (!baseline) throw Error("baseline failed: " + baseline_failure);
        PipelineConfig cfg = base_cfg;
        cfg.pooling.method = method;
        cfg.pooling.factor = factor;
        const SearchIndexArtifact a = index_corpus(corpus, cfg);
        const FootprintStats foot = footprint_stats(a, o.bytes_per_value);
        row.vectors_after = foot.pooled_vectors;
        row.bytes = foot.estimated_storage_bytes;
        row.value = evaluate(retrieve(a, queries, cfg), qrels, spec).value;
        row.baseline = baseline->value;
        row.relative = relative_performance(row.value, row.baseline);
      } catch (const std::exception& e) {
        row.status = failure_status(e.what());
        any_failed = true;
        err << row.method << " x" << factor << " failed: " << e.what() << '\n';
      }
      out << std::left << std::setw(14) << row.method << " x" << std::setw(3) << factor << ' '
          << fixed(row.value, 5) << "  relative " << fixed(row.relative, 2) << "  vectors " << row.vectors_after
          << '\n';
      report.rows.push_back(std::move(row));
    }
  }

  OutputGuard guard;
  if (!o.csv_out.empty()) {
    guard.file(o.csv_out);
    write_text(o.csv_out, report.to_csv());
  }
  if (!o.json_out.empty()) {
    guard.file(o.json_out);
    write_text(o.json_out, report.to_json());
  }
  guard.commit();
  if (o.csv_out.empty() && o.json_out.empty()) out << report.to_csv();
  return any_failed ? kExitFailure : kExitOk;
}

CLI::App* subcommand(CLI::App& app, const char* name, const char* help) {
  return app.add_subcommand(name, help);
}

// First argument naming a subcommand; config keys outside a section go there.
std::string active_subcommand(const std::vector<std::string>& args) {
  static const std::vector<std::string> names = {"pool", "index", "search", "eval", "compare", "stats", "sweep"};
  for (const auto& a : args) {
    if (std::find(names.begin(), names.end(), a) != names.end()) return a;
  }
  return {};
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-vector token pooling, indexing and evaluation", "mvtp"};
  app.config_formatter(std::make_shared<JsonOrTomlConfig>(active_subcommand(args)));
  app.set_config("--config", "", "TOML or JSON file with option defaults; explicit flags win");
  app.fallthrough();
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.require_subcommand(1);

  PoolOptions pool;
  CLI::App* pool_cmd = subcommand(app, "pool", "pool a corpus's token vectors");
  pool_cmd->add_option("--in", pool.in, "input corpus (.mvec or .jsonl)");
  pool_cmd->add_option("--out", pool.out, "pooled corpus; a .manifest.json sidecar is written next to it");
  pool_cmd->add_option("--method", pool.method, "none, sequential, kmeans or hierarchical")->capture_default_str();
  pool_cmd->add_option("--factor", pool.factor, "pooling factor")->check(CLI::PositiveNumber)->capture_default_str();
  pool_cmd->add_option("--seed", pool.seed, "random seed")->capture_default_str();
  pool_cmd->add_flag("--no-renormalize", pool.no_renormalize, "keep pooled means unnormalized");

  IndexOptions index;
  CLI::App* index_cmd = subcommand(app, "index", "build a search artifact directory");
  index_cmd->add_option("--in", index.in, "raw or pooled corpus");
  index_cmd->add_option("--out", index.out, "artifact directory");
  index.method_opt =
      index_cmd->add_option("--method", index.method, "pooling for raw input")->capture_default_str();
  index.factor_opt = index_cmd->add_option("--factor", index.factor, "pooling factor for raw input")
                         ->check(CLI::PositiveNumber)
                         ->capture_default_str();
  index_cmd->add_flag("--no-renormalize", index.no_renormalize, "keep pooled means unnormalized");
  index_cmd->add_option("--seed", index.seed, "random seed for pooling, graph levels and codec")
      ->capture_default_str();
  index.index.add(index_cmd);

  SearchOptions search;
  CLI::App* search_cmd = subcommand(app, "search", "retrieve queries against an artifact");
  search_cmd->add_option("--index", search.index, "artifact directory");
  search_cmd->add_option("--queries", search.queries, "query corpus");
  search_cmd->add_option("--run-out", search.run_out, "TREC run file to write");
  search_cmd->add_option("--tag", search.tag, "run tag")->capture_default_str();
  search_cmd->add_option("--ef-search", search.ef_search, "override the stored HNSW search beam")
      ->check(CLI::PositiveNumber);
  search.budget.add(search_cmd);

  EvalOptions eval;
  CLI::App* eval_cmd = subcommand(app, "eval", "score a run against qrels");
  eval_cmd->add_option("--run", eval.run, "TREC run file");
  eval_cmd->add_option("--qrels", eval.qrels, "TREC qrels file");
  eval_cmd->add_option("--metric", eval.metrics, "ndcg@k, success@k or recall@k (repeatable)")
      ->capture_default_str();
  eval_cmd->add_option("--k", eval.k, "cutoff for metrics given without @k")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  CompareOptions compare;
  CLI::App* compare_cmd = subcommand(app, "compare", "relative performance of a run against a baseline run");
  compare_cmd->add_option("--run", compare.run, "run with pooling");
  compare_cmd->add_option("--baseline", compare.baseline, "run without pooling");
  compare_cmd->add_option("--qrels", compare.qrels, "TREC qrels file");
  compare_cmd->add_option("--metric", compare.metric, "metric")->capture_default_str();
  compare_cmd->add_option("--k", compare.k, "cutoff when --metric has no @k")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  compare_cmd->add_option("--dataset", compare.dataset, "dataset label")->capture_default_str();
  compare_cmd->add_option("--method", compare.method, "method label")->capture_default_str();
  compare_cmd->add_option("--factor", compare.factor, "factor label")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  compare_cmd->add_option("--artifact", compare.artifact, "artifact of the pooled run, for vector counts");
  compare_cmd->add_option("--bytes-per-value", compare.bytes_per_value, "storage bytes per uncompressed value")
      ->capture_default_str();
  compare_cmd->add_option("--csv-out", compare.csv_out, "also write the CSV row here");

  StatsOptions stats;
  CLI::App* stats_cmd = subcommand(app, "stats", "vector counts and storage of an artifact");
  stats_cmd->add_option("--index", stats.index, "artifact directory");
  stats_cmd->add_option("--bytes-per-value", stats.bytes_per_value, "storage bytes per uncompressed value")
      ->capture_default_str();
  stats_cmd->add_flag("--json", stats.json, "print JSON");

  SweepOptions sweep;
  CLI::App* sweep_cmd = subcommand(app, "sweep", "baseline plus a method x factor grid");
  sweep_cmd->add_option("--corpus", sweep.corpus, "document corpus");
  sweep_cmd->add_option("--queries", sweep.queries, "query corpus");
  sweep_cmd->add_option("--qrels", sweep.qrels, "TREC qrels file");
  sweep_cmd->add_option("--methods", sweep.methods, "comma-separated pooling methods")->capture_default_str();
  sweep_cmd->add_option("--factors", sweep.factors, "comma-separated pooling factors")->capture_default_str();
  sweep_cmd->add_option("--metric", sweep.metric, "metric")->capture_default_str();
  sweep_cmd->add_option("--k", sweep.k, "cutoff when --metric has no @k")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sweep_cmd->add_option("--dataset", sweep.dataset, "dataset label (default: corpus file stem)");
  sweep_cmd->add_option("--csv-out", sweep.csv_out, "report CSV");
  sweep_cmd->add_option("--json-out", sweep.json_out, "report JSON");
  sweep_cmd->add_option("--seed", sweep.seed, "random seed")->capture_default_str();
  sweep_cmd->add_flag("--no-renormalize", sweep.no_renormalize, "keep pooled means unnormalized");
  sweep_cmd->add_option("--bytes-per-value", sweep.bytes_per_value, "storage bytes per uncompressed value")
      ->capture_default_str();
  sweep.index.add(sweep_cmd);
  sweep.budget.add(sweep_cmd);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    if (pool_cmd->parsed()) return cmd_pool(pool, out);
    if (index_cmd->parsed()) return cmd_index(index, out);
    if (search_cmd->parsed()) return cmd_search(search, out);
    if (eval_cmd->parsed()) return cmd_eval(eval, out);
    if (compare_cmd->parsed()) return cmd_compare(compare, out);
    if (stats_cmd->parsed()) return cmd_stats(stats, out);
    if (sweep_cmd->parsed()) return cmd_sweep(sweep, out, err);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace mvtp::cli
