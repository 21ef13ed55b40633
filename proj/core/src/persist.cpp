#include "quadopt/persist.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <nlohmann/json.hpp>

#include "quadopt/errors.hpp"

namespace quadopt {

using nlohmann::json;

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

double parse_double(std::string_view text) {
  if (text == "nan") return std::nan("");
  if (text == "inf") return INFINITY;
  if (text == "-inf") return -INFINITY;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ParseError("not a number: '" + std::string(text) + "'", 0);
  }
  return v;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << text;
  }
  std::filesystem::rename(tmp, path);
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

// ---------------------------------------------------------------------------
// Config JSON

namespace {

const char* kind_name(CapSchedule::Kind kind) {
  return kind == CapSchedule::Kind::kConstant ? "constant" : "geometric";
}

// Reads known keys of one object and rejects the rest.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where("") + " must be an object");
    for (auto it = j_.begin(); it != j_.end(); ++it) pending_.push_back(it.key());
  }

  template <typename T>
  void get(const char* key, T& out) {
    if (!take(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(where(key) + " has the wrong type");
    }
  }

  bool has(const char* key) const { return j_.contains(key); }

  Reader child(const char* key) {
    take(key);
    return Reader(j_.at(key), where(key));
  }

  const json& raw(const char* key) {
    take(key);
    return j_.at(key);
  }

  std::string where(const std::string& key) const {
    if (path_.empty()) return key.empty() ? "config" : key;
    return key.empty() ? path_ : path_ + "." + key;
  }

  void finish() const {
    if (!pending_.empty()) throw ConfigError("unknown field '" + where(pending_.front()) + "'");
  }

 private:
  bool take(const char* key) {
    auto it = std::find(pending_.begin(), pending_.end(), key);
    if (it == pending_.end()) return false;
    pending_.erase(it);
    return true;
  }

  const json& j_;
  std::string path_;
  std::vector<std::string> pending_;
};

json config_json(const RunConfig& c) {
  json j;
  j["method"] = c.method;
  j["oracle"] = c.oracle;
  j["latency_ms"] = c.latency_ms;
  j["budget"] = c.budget;
  j["initial_size"] = c.initial_size;
  j["select_size"] = c.select_size;
  j["seed"] = c.seed;
  j["search"] = {{"max_steps", c.search.max_steps},
                 {"top_k", c.search.top_k},
                 {"refine_steps", c.search.refine_steps}};
  j["cap"] = {{"kind", kind_name(c.cap.kind)}, {"initial", c.cap.initial}, {"max", c.cap.max}};
  j["train"] = {{"lambda", c.train.lambda}};
  j["consistency"] = {{"ensemble_size", c.ensemble_size}, {"probe_size", c.probe_size}};
  j["pixel_pool"] = c.pixel_pool;
  j["baseline"] = {{"pool", c.baseline.pool},
                   {"top_k", c.baseline.top_k},
                   {"population", c.baseline.population},
                   {"tournament", c.baseline.tournament},
                   {"crossover", c.baseline.crossover},
                   {"mutation", c.baseline.mutation},
                   {"generations", c.baseline.generations}};
  j["jobs"] = c.jobs;
  if (c.stop_after) j["stop_after"] = *c.stop_after;
  return j;
}

}  // namespace

std::string run_config_to_json(const RunConfig& config) { return config_json(config).dump(2); }

RunConfig run_config_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig c;
  Reader r(j, "");
  r.get("method", c.method);
  r.get("oracle", c.oracle);
  r.get("latency_ms", c.latency_ms);
  r.get("budget", c.budget);
  r.get("initial_size", c.initial_size);
  r.get("select_size", c.select_size);
  r.get("seed", c.seed);
  r.get("pixel_pool", c.pixel_pool);
  r.get("jobs", c.jobs);
  if (r.has("stop_after")) {
    int v = 0;
    r.get("stop_after", v);
    c.stop_after = v;
  }
  if (r.has("search")) {
    Reader s = r.child("search");
    s.get("max_steps", c.search.max_steps);
    s.get("top_k", c.search.top_k);
    s.get("refine_steps", c.search.refine_steps);
    s.finish();
  }
  if (r.has("cap")) {
    Reader s = r.child("cap");
    std::string kind = kind_name(c.cap.kind);
    s.get("kind", kind);
    if (kind == "geometric") {
      c.cap.kind = CapSchedule::Kind::kGeometric;
    } else if (kind == "constant") {
      c.cap.kind = CapSchedule::Kind::kConstant;
    } else {
      throw ConfigError("cap.kind must be 'geometric' or 'constant', got '" + kind + "'");
    }
    s.get("initial", c.cap.initial);
    s.get("max", c.cap.max);
    s.finish();
  }
  if (r.has("train")) {
    Reader s = r.child("train");
    s.get("lambda", c.train.lambda);
    s.finish();
  }
  if (r.has("consistency")) {
    Reader s = r.child("consistency");
    s.get("ensemble_size", c.ensemble_size);
    s.get("probe_size", c.probe_size);
    s.finish();
  }
  if (r.has("baseline")) {
    Reader s = r.child("baseline");
    s.get("pool", c.baseline.pool);
    s.get("top_k", c.baseline.top_k);
    s.get("population", c.baseline.population);
    s.get("tournament", c.baseline.tournament);
    s.get("crossover", c.baseline.crossover);
    s.get("mutation", c.baseline.mutation);
    s.get("generations", c.baseline.generations);
    s.finish();
  }
  r.finish();
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------
// CSV rows

std::string evaluations_header(std::size_t criteria) {
  std::string h = "method,seed,sequence,iteration,aggregate";
  for (std::size_t k = 0; k < criteria; ++k) h += ",y" + std::to_string(k);
  return h + ",design,layout";
}

std::string evaluation_row(const RunConfig& config, const EvaluationRecord& r) {
  std::string row = config.method + ',' + std::to_string(config.seed) + ',' +
                    std::to_string(r.sequence) + ',' + std::to_string(r.iteration) + ',' +
                    format_double(r.aggregate);
  for (double y : r.criteria) row += ',' + format_double(y);
  row += ',' + r.design.bits() + ",\"" + r.layout + '"';
  return row;
}

std::string consistency_header() {
  return "iteration,cap,n,tau,tau_plus,predictor_picks,random_picks,best,used";
}

std::string consistency_row(const IterationLog& l) {
  return std::to_string(l.iteration) + ',' + std::to_string(l.cap) + ',' + std::to_string(l.n) +
         ',' + format_double(l.tau) + ',' + format_double(l.tau_plus) + ',' +
         std::to_string(l.predictor_picks) + ',' + std::to_string(l.random_picks) + ',' +
         format_double(l.best) + ',' + std::to_string(l.used);
}

// ---------------------------------------------------------------------------
// RunWriter

RunWriter::RunWriter(std::filesystem::path dir, const RunConfig& config, const Oracle& oracle)
    : dir_(std::move(dir)),
      config_(config),
      oracle_name_(oracle.name()),
      dims_(oracle.dims()),
      criteria_(oracle.criterion_count()) {
  std::filesystem::create_directories(dir_);
  std::filesystem::remove(dir_ / "timing.json");
  write_manifest(nullptr);
  evaluations_.open(dir_ / "evaluations.csv", std::ios::trunc);
  consistency_.open(dir_ / "consistency.csv", std::ios::trunc);
  if (!evaluations_ || !consistency_) throw Error("cannot write logs in " + dir_.string());
  evaluations_ << evaluations_header(criteria_) << '\n' << std::flush;
  consistency_ << consistency_header() << '\n' << std::flush;
}

void RunWriter::append_records(std::span<const EvaluationRecord> records) {
  for (const auto& r : records) evaluations_ << evaluation_row(config_, r) << '\n';
  evaluations_.flush();
}

void RunWriter::append_iteration(const IterationLog& row) {
  consistency_ << consistency_row(row) << '\n' << std::flush;
}

void RunWriter::finish(const RunResult& result) {
  write_manifest(&result);
  json t;
  t["wall_seconds"] = result.wall_seconds;
  write_text_file(dir_ / "timing.json", t.dump(2) + "\n");
}

void RunWriter::write_manifest(const RunResult* result) const {
  json m;
  m["format"] = "quadopt-run-v1";
  m["config"] = config_json(config_);
  m["oracle"] = {{"name", oracle_name_}, {"dims", to_string(dims_)}, {"criteria", criteria_}};
  m["status"] = result && result->complete ? "complete" : "running";
  if (result) {
    m["iterations"] = result->log.size();
    m["simulations"] = result->dataset.size();
    m["best"] = {{"aggregate", format_double(result->best.aggregate)},
                 {"sequence", result->best.sequence},
                 {"design", result->best.design.bits()},
                 {"layout", result->best.layout}};
    json crit = json::array();
    for (double y : result->best.criteria) crit.push_back(format_double(y));
    m["best"]["criteria"] = crit;
  }
  write_text_file(dir_ / "manifest.json", m.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Loading

namespace {

std::vector<std::string> lines_of(const std::filesystem::path& path) {
  std::vector<std::string> lines;
  std::istringstream in(read_text_file(path));
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) lines.push_back(std::move(line));
  }
  return lines;
}

template <typename T>
T parse_int(const std::string& s, const std::string& what) {
  T v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ConsistencyError("malformed " + what + ": '" + s + "'");
  }
  return v;
}

}  // namespace

PersistedRun load_run(const std::filesystem::path& dir) {
  PersistedRun run;
  json manifest;
  try {
    manifest = json::parse(read_text_file(dir / "manifest.json"));
    run.config = run_config_from_json(manifest.at("config").dump());
    run.oracle_name = manifest.at("oracle").at("name").get<std::string>();
    run.complete = manifest.at("status").get<std::string>() == "complete";
  } catch (const json::exception& e) {
    throw ConsistencyError(std::string("corrupt manifest: ") + e.what());
  } catch (const ConfigError& e) {
    throw ConsistencyError(std::string("corrupt manifest: ") + e.what());
  }
  GridDims dims;
  {
    const std::string text = manifest.at("oracle").at("dims").get<std::string>();
    std::vector<int> parts;
    std::size_t start = 0;
    while (true) {
      const auto x = text.find('x', start);
      parts.push_back(parse_int<int>(text.substr(start, x - start), "dims"));
      if (x == std::string::npos) break;
      start = x + 1;
    }
    if (parts.size() < 2 || parts.size() > 3) throw ConsistencyError("malformed dims " + text);
    dims = GridDims{parts[0], parts[1], parts.size() == 3 ? parts[2] : 1};
  }

  const auto eval_lines = lines_of(dir / "evaluations.csv");
  if (eval_lines.empty()) throw ConsistencyError("evaluations.csv has no header");
  const auto header = split_csv_line(eval_lines.front());
  if (header.size() < 8) throw ConsistencyError("evaluations.csv header is malformed");
  const std::size_t criteria = header.size() - 7;
  for (std::size_t i = 1; i < eval_lines.size(); ++i) {
    const auto f = split_csv_line(eval_lines[i]);
    if (f.size() != header.size()) {
      throw ConsistencyError("evaluations.csv row " + std::to_string(i) + " has " +
                             std::to_string(f.size()) + " fields");
    }
    if (f[0] != run.config.method) {
      throw ConsistencyError("evaluations.csv method '" + f[0] + "' does not match manifest");
    }
    if (parse_int<std::uint64_t>(f[1], "seed") != run.config.seed) {
      throw ConsistencyError("evaluations.csv seed " + f[1] + " does not match manifest seed " +
                             std::to_string(run.config.seed));
    }
    EvaluationRecord r;
    r.sequence = parse_int<std::int64_t>(f[2], "sequence");
    r.iteration = parse_int<int>(f[3], "iteration");
    r.aggregate = parse_double(f[4]);
    for (std::size_t k = 0; k < criteria; ++k) r.criteria.push_back(parse_double(f[5 + k]));
    try {
      r.design = DesignMatrix::from_bits(dims, f[5 + criteria]);
    } catch (const Error& e) {
      throw ConsistencyError(std::string("evaluations.csv design: ") + e.what());
    }
    r.layout = f[6 + criteria];
    run.records.push_back(std::move(r));
  }

  const auto log_lines = lines_of(dir / "consistency.csv");
  if (log_lines.empty() || log_lines.front() != consistency_header()) {
    throw ConsistencyError("consistency.csv header is malformed");
  }
  for (std::size_t i = 1; i < log_lines.size(); ++i) {
    const auto f = split_csv_line(log_lines[i]);
    if (f.size() != 9) throw ConsistencyError("consistency.csv row " + std::to_string(i));
    IterationLog l;
    l.iteration = parse_int<int>(f[0], "iteration");
    l.cap = parse_int<std::size_t>(f[1], "cap");
    l.n = parse_int<std::size_t>(f[2], "n");
    l.tau = parse_double(f[3]);
    l.tau_plus = parse_double(f[4]);
    l.predictor_picks = parse_int<std::size_t>(f[5], "predictor_picks");
    l.random_picks = parse_int<std::size_t>(f[6], "random_picks");
    l.best = parse_double(f[7]);
    l.used = parse_int<std::int64_t>(f[8], "used");
    run.log.push_back(l);
  }
  return run;
}

}  // namespace quadopt
