#include "quadopt/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "quadopt/baselines.hpp"
#include "quadopt/errors.hpp"
#include "quadopt/experiments.hpp"
#include "quadopt/persist.hpp"
#include "quadopt/pqs.hpp"
#include "quadopt/stats.hpp"
#include "quadopt/svg.hpp"

namespace quadopt::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  unsigned jobs = 1;
  bool force = false;
  std::vector<std::string> overrides;
};

fs::path out_dir_of(const Options& o) {
  if (!o.out_dir.empty()) return o.out_dir;
  if (const char* env = std::getenv("QUADOPT_OUT_DIR"); env && *env) return env;
  return "quadopt-out";
}

// --a.b.c=value: value is parsed as JSON when possible, else taken as a string.
void apply_override(json& root, const std::string& arg) {
  const auto eq = arg.find('=');
  if (arg.rfind("--", 0) != 0 || eq == std::string::npos || eq == 2) {
    throw ConfigError("unrecognized argument '" + arg + "'");
  }
  const std::string path = arg.substr(2, eq - 2);
  const std::string text = arg.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  json* node = &root;
  std::stringstream ss(path);
  std::vector<std::string> keys;
  for (std::string k; std::getline(ss, k, '.');) keys.push_back(k);
  for (std::size_t i = 0; i < keys.size(); ++i) {
    const std::string& k = keys[i];
    const bool last = i + 1 == keys.size();
    if (node->is_array()) {
      std::size_t idx = 0;
      try {
        idx = std::stoul(k);
      } catch (const std::exception&) {
        throw ConfigError("override '" + path + "': '" + k + "' is not an array index");
      }
      if (idx >= node->size()) throw ConfigError("override '" + path + "': index out of range");
      node = &(*node)[idx];
    } else {
      if (node->is_null()) *node = json::object();
      if (!node->is_object()) throw ConfigError("override '" + path + "' descends into a value");
      node = &(*node)[k];
    }
    if (last) *node = value;
  }
}

json load_config(const Options& o) {
  json j = json::object();
  if (!o.config_path.empty()) {
    j = json::parse(read_text_file(o.config_path), nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      throw ConfigError(o.config_path + " is not a JSON object");
    }
  }
  for (const auto& arg : o.overrides) apply_override(j, arg);
  if (o.seed) j["seed"] = *o.seed;
  return j;
}

template <typename T>
T value_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string(key) + " has the wrong type");
  }
}

void check_keys(const json& j, const std::vector<std::string>& allowed, const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end()) {
      throw ConfigError("unknown field '" + (where.empty() ? "" : where + ".") + it.key() + "'");
    }
  }
}

// ---------------------------------------------------------------------------
// Jobs

struct Job {
  std::string id;
  RunConfig config;
};

struct Task {
  std::size_t job;
  int repeat;
  RunConfig config;
  fs::path dir;
};

std::vector<Job> parse_jobs(const json& root, const json& default_jobs) {
  const json base = root.value("base", json::object());
  if (!base.is_object()) throw ConfigError("base must be an object");
  const json jobs = root.contains("jobs") ? root.at("jobs") : default_jobs;
  if (!jobs.is_array() || jobs.empty()) throw ConfigError("jobs must be a non-empty array");
  std::vector<Job> out;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const json& entry = jobs[i];
    if (!entry.is_object()) throw ConfigError("jobs[" + std::to_string(i) + "] must be an object");
    json merged = base;
    merged.merge_patch(entry);
    Job job;
    job.id = merged.value("id", merged.value("method", std::string("pqs")));
    merged.erase("id");
    merged.erase("seed");
    try {
      job.config = run_config_from_json(merged.dump());
    } catch (const ConfigError& e) {
      throw ConfigError("jobs[" + std::to_string(i) + "] (" + job.id + "): " + e.what());
    }
    for (const auto& other : out) {
      if (other.id == job.id) throw ConfigError("jobs: duplicate id '" + job.id + "'");
    }
    out.push_back(std::move(job));
  }
  return out;
}

RunResult result_from_disk(const fs::path& dir) {
  PersistedRun saved = load_run(dir);
  RunResult r;
  r.method = saved.config.method;
  r.seed = saved.config.seed;
  r.budget = saved.config.budget;
  for (auto& rec : saved.records) r.dataset.append(std::move(rec));
  r.best = r.dataset.best();
  r.log = std::move(saved.log);
  r.complete = saved.complete;
  return r;
}

// Completed runs with the same config are reused; interrupted PQS runs are
// resumed; anything else is run from scratch.
RunResult execute(const Task& task, bool force) {
  const auto oracle = make_oracle(task.config.oracle, task.config.latency_ms);
  if (!force && fs::exists(task.dir / "manifest.json")) {
    try {
      const PersistedRun saved = load_run(task.dir);
      if (run_config_to_json(saved.config) == run_config_to_json(task.config)) {
        if (saved.complete) return result_from_disk(task.dir);
        if (task.config.is_pqs_family()) return resume_pqs(task.dir, *oracle);
      }
    } catch (const ConsistencyError&) {
      // Unreadable leftovers: start over.
    }
  }
  return run_method(task.config, *oracle, &task.dir);
}

std::vector<RunResult> execute_all(const std::vector<Task>& tasks, unsigned threads, bool force) {
  std::vector<RunResult> results(tasks.size());
  std::vector<std::exception_ptr> errors(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next++) < tasks.size();) {
      try {
        results[i] = execute(tasks[i], force);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned n = std::max(1U, std::min<unsigned>(threads, static_cast<unsigned>(tasks.size())));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

std::vector<Task> make_tasks(const std::vector<Job>& jobs, int repeats, std::uint64_t master,
                             const fs::path& runs_dir) {
  std::vector<Task> tasks;
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    for (int r = 0; r < repeats; ++r) {
      Task t{j, r, jobs[j].config, runs_dir / jobs[j].id / ("seed-" + std::to_string(r))};
      t.config.seed = derive_seed(master, "repeat", static_cast<std::uint64_t>(r));
      tasks.push_back(std::move(t));
    }
  }
  return tasks;
}

// ---------------------------------------------------------------------------
// Summaries and plots

std::string summary_csv(const std::vector<std::string>& ids, const std::vector<MethodSummary>& rows,
                        const std::vector<std::string>& extra_header = {},
                        const std::vector<std::vector<std::string>>& extra = {}) {
  std::size_t k = 0;
  for (const auto& r : rows) k = std::max(k, r.criterion_median.size());
  std::string out = "id,method,runs,agg_median,agg_mean,agg_std";
  for (std::size_t c = 0; c < k; ++c) {
    const std::string n = "obj" + std::to_string(c + 1);
    out += "," + n + "_median," + n + "_mean," + n + "_std";
  }
  out += ",sims_median,sims_mean,sims_std";
  for (const auto& h : extra_header) out += "," + h;
  out += "\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    out += ids[i] + "," + r.method + "," + std::to_string(r.runs) + "," +
           format_double(r.agg_median) + "," + format_double(r.agg_mean) + "," +
           format_double(r.agg_std);
    for (std::size_t c = 0; c < k; ++c) {
      out += "," + format_double(r.criterion_median[c]) + "," + format_double(r.criterion_mean[c]) +
             "," + format_double(r.criterion_std[c]);
    }
    out += "," + format_double(r.sims_median) + "," + format_double(r.sims_mean) + "," +
           format_double(r.sims_std);
    if (i < extra.size()) {
      for (const auto& e : extra[i]) out += "," + e;
    }
    out += "\n";
  }
  return out;
}

json summary_json(const std::vector<std::string>& ids, const std::vector<MethodSummary>& rows,
                  const std::vector<Task>& tasks, const fs::path& base) {
  json j = json::array();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    json runs = json::array();
    for (const auto& t : tasks) {
      if (t.dir.parent_path().filename() == ids[i]) {
        runs.push_back(fs::relative(t.dir, base).generic_string());
      }
    }
    j.push_back({{"id", ids[i]},
                 {"method", r.method},
                 {"runs", r.runs},
                 {"agg", {{"median", r.agg_median}, {"mean", r.agg_mean}, {"std", r.agg_std}}},
                 {"criteria",
                  {{"median", r.criterion_median}, {"mean", r.criterion_mean}, {"std", r.criterion_std}}},
                 {"simulations", {{"median", r.sims_median}, {"mean", r.sims_mean}, {"std", r.sims_std}}},
                 {"run_dirs", runs}});
  }
  return j;
}

// Summaries per job id (jobs may share a method).
std::vector<MethodSummary> summarize_jobs(const std::vector<Job>& jobs,
                                          const std::vector<Task>& tasks,
                                          std::vector<RunResult>& results) {
  std::vector<MethodSummary> rows;
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    std::vector<RunResult> group;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
      if (tasks[i].job == j) group.push_back(std::move(results[i]));
    }
    auto s = summarize(group);
    rows.push_back(std::move(s.front()));
    for (std::size_t i = 0, g = 0; i < tasks.size(); ++i) {
      if (tasks[i].job == j) results[i] = std::move(group[g++]);
    }
  }
  return rows;
}

// Median best-so-far over the runs below `runs_dir`, one series per job.
int write_convergence(const fs::path& runs_dir, const fs::path& svg_path, std::ostream& out) {
  if (!fs::is_directory(runs_dir)) throw ConfigError("no runs under " + runs_dir.string());
  std::vector<fs::path> job_dirs;
  for (const auto& e : fs::directory_iterator(runs_dir)) {
    if (e.is_directory()) job_dirs.push_back(e.path());
  }
  std::sort(job_dirs.begin(), job_dirs.end());
  std::vector<Series> series;
  double x_max = 0;
  for (const auto& jd : job_dirs) {
    std::vector<std::vector<double>> curves;
    std::vector<fs::path> seeds;
    for (const auto& e : fs::directory_iterator(jd)) {
      if (fs::exists(e.path() / "manifest.json")) seeds.push_back(e.path());
    }
    std::sort(seeds.begin(), seeds.end());
    for (const auto& sd : seeds) {
      const PersistedRun run = load_run(sd);
      x_max = std::max(x_max, static_cast<double>(run.config.budget));
      std::vector<double> c;
      double best = -INFINITY;
      for (const auto& r : run.records) {
        best = std::max(best, r.aggregate);
        c.push_back(best);
      }
      if (!c.empty()) curves.push_back(std::move(c));
    }
    if (curves.empty()) continue;
    std::size_t len = 0;
    for (const auto& c : curves) len = std::max(len, c.size());
    Series s;
    s.name = jd.filename().string();
    for (std::size_t i = 0; i < len; ++i) {
      std::vector<double> at;
      for (const auto& c : curves) at.push_back(c[std::min(i, c.size() - 1)]);
      s.x.push_back(static_cast<double>(i + 1));
      s.y.push_back(median(at));
    }
    series.push_back(std::move(s));
  }
  if (series.empty()) throw ConfigError("no run logs under " + runs_dir.string());
  write_text_file(svg_path, line_plot_svg("Best aggregate so far", "simulations",
                                          "best aggregate (median over runs)", series, x_max));
  out << "wrote " << svg_path.string() << " (" << series.size() << " series)\n";
  return kOk;
}

// Reuses a finished experiment directory unless forced.
bool up_to_date(const fs::path& dir, const json& resolved, bool force, std::ostream& out) {
  const fs::path stamp = dir / "experiment.json";
  if (force || !fs::exists(stamp) || !fs::exists(dir / "summary.json")) return false;
  const json previous = json::parse(read_text_file(stamp), nullptr, false);
  if (previous == resolved) {
    out << dir.string() << " is up to date (use --force to recompute)\n";
    return true;
  }
  throw ConfigError(dir.string() + " holds a different experiment; use --force to overwrite");
}

// ---------------------------------------------------------------------------
// Commands

const json kDefaultJobs = json::array({{{"method", "pqs"}}, {{"method", "rs"}},
                                       {{"method", "surrogate-rs"}}, {{"method", "surrogate-ga"}}});

int cmd_run(const Options& o, std::ostream& out) {
  json root = load_config(o);
  check_keys(root, {"name", "seed", "repeats", "base", "jobs", "ablation", "selection"}, "");
  const auto master = value_or<std::uint64_t>(root, "seed", 0);
  const int repeats = value_or<int>(root, "repeats", 1);
  if (repeats < 1) throw ConfigError("repeats must be >= 1");
  const auto jobs = parse_jobs(root, kDefaultJobs);
  const fs::path dir = out_dir_of(o);
  if (up_to_date(dir, root, o.force, out)) return kOk;

  const auto tasks = make_tasks(jobs, repeats, master, dir / "runs");
  auto results = execute_all(tasks, o.jobs, o.force);
  const auto rows = summarize_jobs(jobs, tasks, results);
  std::vector<std::string> ids;
  for (const auto& j : jobs) ids.push_back(j.id);

  write_text_file(dir / "summary.csv", summary_csv(ids, rows));
  write_text_file(dir / "summary.json", summary_json(ids, rows, tasks, dir).dump(2) + "\n");
  write_convergence(dir / "runs", dir / "convergence.svg", out);
  write_text_file(dir / "experiment.json", root.dump(2) + "\n");
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out << ids[i] << ": median best aggregate " << format_double(rows[i].agg_median) << " over "
        << rows[i].runs << " run(s)\n";
  }
  return kOk;
}

int cmd_ablate(const std::string& kind, const Options& o, std::ostream& out) {
  json root = load_config(o);
  check_keys(root, {"name", "seed", "repeats", "base", "jobs", "ablation", "selection"}, "");
  const auto master = value_or<std::uint64_t>(root, "seed", 0);
  const int repeats = value_or<int>(root, "repeats", 1);
  if (repeats < 1) throw ConfigError("repeats must be >= 1");
  const json ab = root.value("ablation", json::object());
  check_keys(ab, {"caps", "tau_trials", "samples", "runs"}, "ablation");
  const fs::path dir = out_dir_of(o) / ("ablate-" + kind);
  if (up_to_date(dir, root, o.force, out)) return kOk;

  json jobs = json::array();
  if (kind == "qss") {
    jobs = json::array({{{"method", "pqs"}}, {{"method", "pqs-no-qss"}}});
  } else if (kind == "css") {
    jobs = json::array({{{"method", "pqs"}}, {{"method", "pqs-topk-only"}},
                        {{"method", "pqs-random-only"}}});
  } else if (kind != "nmax") {
    throw ConfigError("ablate: kind must be nmax, qss or css, got '" + kind + "'");
  }

  if (kind == "nmax") {
    const auto caps = value_or<std::vector<std::size_t>>(ab, "caps", {16, 32, 64});
    const bool with_runs = value_or<bool>(ab, "runs", true);
    json base = root.value("base", json::object());
    RunConfig probe = run_config_from_json(base.dump());
    NmaxStudyConfig study;
    study.caps = caps;
    study.trials = value_or<int>(ab, "tau_trials", 10);
    study.samples = value_or<std::size_t>(ab, "samples", 1000);
    study.seed = master;
    const auto oracle = make_oracle(probe.oracle);
    const auto taus = nmax_tau_study(*oracle, study);

    std::string trials_csv = "cap,trial,lambda,tau\n";
    for (const auto& row : taus) {
      for (std::size_t t = 0; t < row.trials.size(); ++t) {
        trials_csv += std::to_string(row.cap) + "," + std::to_string(t) + "," +
                      format_double(row.trials[t].lambda) + "," + format_double(row.trials[t].tau) + "\n";
      }
    }
    write_text_file(dir / "nmax_tau.csv", trials_csv);

    std::vector<MethodSummary> rows;
    std::vector<std::string> ids;
    std::vector<std::vector<std::string>> extra;
    std::vector<Task> all_tasks;
    for (const auto& row : taus) {
      const std::string id = "pqs-n" + std::to_string(row.cap);
      ids.push_back(id);
      extra.push_back({std::to_string(row.cap), format_double(row.mean), format_double(row.stddev)});
      if (!with_runs) continue;
      json cfg = base;
      cfg["method"] = "pqs";
      cfg["cap"] = {{"kind", "constant"}, {"max", row.cap}};
      cfg.erase("seed");
      std::vector<Job> job{{id, run_config_from_json(cfg.dump())}};
      auto tasks = make_tasks(job, repeats, master, dir / "runs");
      auto results = execute_all(tasks, o.jobs, o.force);
      rows.push_back(summarize_jobs(job, tasks, results).front());
      all_tasks.insert(all_tasks.end(), tasks.begin(), tasks.end());
    }
    std::string csv;
    if (with_runs) {
      csv = summary_csv(ids, rows, {"cap", "tau_mean", "tau_std"}, extra);
    } else {
      csv = "id,cap,tau_mean,tau_std\n";
      for (std::size_t i = 0; i < ids.size(); ++i) {
        csv += ids[i] + "," + extra[i][0] + "," + extra[i][1] + "," + extra[i][2] + "\n";
      }
    }
    write_text_file(dir / "ablation_nmax.csv", csv);
    json summary = json::array();
    for (std::size_t i = 0; i < taus.size(); ++i) {
      summary.push_back({{"id", ids[i]},
                         {"cap", taus[i].cap},
                         {"tau_mean", taus[i].mean},
                         {"tau_std", taus[i].stddev},
                         {"agg_median", with_runs ? json(rows[i].agg_median) : json(nullptr)}});
    }
    write_text_file(dir / "summary.json", summary.dump(2) + "\n");
    write_text_file(dir / "experiment.json", root.dump(2) + "\n");
    for (const auto& row : taus) {
      out << "N=" << row.cap << ": Kendall tau " << format_double(row.mean) << " +/- "
          << format_double(row.stddev) << "\n";
    }
    return kOk;
  }

  json sub = root;
  sub["jobs"] = jobs;
  const auto parsed = parse_jobs(sub, jobs);
  const auto tasks = make_tasks(parsed, repeats, master, dir / "runs");
  auto results = execute_all(tasks, o.jobs, o.force);
  const auto rows = summarize_jobs(parsed, tasks, results);
  std::vector<std::string> ids;
  for (const auto& j : parsed) ids.push_back(j.id);
  write_text_file(dir / ("ablation_" + kind + ".csv"), summary_csv(ids, rows));
  write_text_file(dir / "summary.json", summary_json(ids, rows, tasks, dir).dump(2) + "\n");
  write_text_file(dir / "experiment.json", root.dump(2) + "\n");
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out << ids[i] << ": median best aggregate " << format_double(rows[i].agg_median) << "\n";
  }
  return kOk;
}

int cmd_select_exp(const Options& o, std::ostream& out) {
  json root = load_config(o);
  check_keys(root, {"name", "seed", "repeats", "base", "jobs", "ablation", "selection"}, "");
  const json sel = root.value("selection", json::object());
  check_keys(sel, {"oracle", "pool", "batch", "repeats", "pool_cap", "strategies", "forced_tau",
                   "ensemble_size", "lambda"},
             "selection");
  SelectionExperimentConfig cfg;
  cfg.seed = value_or<std::uint64_t>(root, "seed", 0);
  cfg.pool = value_or<std::size_t>(sel, "pool", cfg.pool);
  cfg.batch = value_or<std::size_t>(sel, "batch", cfg.batch);
  cfg.repeats = value_or<int>(sel, "repeats", cfg.repeats);
  cfg.pool_cap = value_or<std::size_t>(sel, "pool_cap", cfg.pool_cap);
  cfg.ensemble_size = value_or<std::size_t>(sel, "ensemble_size", cfg.ensemble_size);
  cfg.train.lambda = value_or<double>(sel, "lambda", cfg.train.lambda);
  if (sel.contains("forced_tau")) cfg.forced_tau = value_or<double>(sel, "forced_tau", 1.0);
  if (sel.contains("strategies")) {
    cfg.strategies.clear();
    for (const auto& s : value_or<std::vector<std::string>>(sel, "strategies", {})) {
      cfg.strategies.push_back(parse_strategy(s));
    }
  }
  const std::string oracle_id = value_or<std::string>(sel, "oracle", "synth-hga");
  const fs::path dir = out_dir_of(o) / "select-exp";
  if (up_to_date(dir, root, o.force, out)) return kOk;

  const auto oracle = make_oracle(oracle_id);
  const auto result = selection_efficiency_experiment(*oracle, cfg);

  std::vector<std::string> labels;
  std::vector<std::vector<double>> groups;
  std::string table = "strategy,repeats,median,mean,std\n";
  json summary = json::array();
  for (std::size_t s = 0; s < result.strategies.size(); ++s) {
    const std::string name = to_string(result.strategies[s]);
    std::string csv = "repeat,rounds\n";
    std::vector<double> v;
    for (std::size_t r = 0; r < result.rounds[s].size(); ++r) {
      csv += std::to_string(r) + "," + std::to_string(result.rounds[s][r]) + "\n";
      v.push_back(result.rounds[s][r]);
    }
    write_text_file(dir / ("rounds_" + name + ".csv"), csv);
    table += name + "," + std::to_string(v.size()) + "," + format_double(median(v)) + "," +
             format_double(mean(v)) + "," + format_double(stddev(v)) + "\n";
    summary.push_back({{"strategy", name}, {"median", median(v)}, {"mean", mean(v)},
                       {"std", stddev(v)}, {"file", "rounds_" + name + ".csv"}});
    out << name << ": median rounds " << format_double(median(v)) << ", mean "
        << format_double(mean(v)) << "\n";
    labels.push_back(name);
    groups.push_back(std::move(v));
  }
  const double expected = expected_random_rounds(cfg.pool / 2, cfg.batch);
  write_text_file(dir / "select_exp.csv", table);
  write_text_file(dir / "summary.json",
                  json({{"strategies", summary}, {"expected_random_rounds", expected}}).dump(2) + "\n");
  write_text_file(dir / "select_exp.svg",
                  box_plot_svg("Rounds until the masked optimum is found", "rounds", labels, groups));
  write_text_file(dir / "experiment.json", root.dump(2) + "\n");
  out << "uniform random expectation: " << format_double(expected) << " rounds\n";
  return kOk;
}

int cmd_plot(const std::vector<std::string>& dirs, const Options& o, std::ostream& out) {
  const fs::path base = dirs.empty() ? out_dir_of(o) : fs::path(dirs.front());
  const fs::path runs = fs::is_directory(base / "runs") ? base / "runs" : base;
  return write_convergence(runs, base / "convergence.svg", out);
}

int cmd_resume(const std::string& run_dir, std::ostream& out) {
  const PersistedRun saved = load_run(run_dir);
  const auto oracle = make_oracle(saved.config.oracle, saved.config.latency_ms);
  const RunResult r = resume_pqs(run_dir, *oracle);
  out << run_dir << ": " << r.log.size() << " iterations, " << r.dataset.size()
      << " simulations, best aggregate " << format_double(r.best.aggregate) << "\n";
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Quadtree-guided search for binary grid layouts under a simulation budget",
               "quadopt"};
  app.require_subcommand(1);
  Options o;
  std::string kind, run_dir;
  std::vector<std::string> plot_dirs;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "Experiment config (JSON)");
    sub->add_option("--seed", o.seed, "Master seed");
    sub->add_option("--out-dir", o.out_dir, "Output directory (default $QUADOPT_OUT_DIR)");
    sub->add_option("--jobs", o.jobs, "Runs executed in parallel")->check(CLI::PositiveNumber);
    sub->add_flag("--force", o.force, "Recompute even if outputs exist");
    sub->allow_extras();
  };
  auto* run_cmd = app.add_subcommand("run", "Run every job of an experiment");
  common(run_cmd);
  auto* ablate = app.add_subcommand("ablate", "Leaf-cap, QSS or CSS ablation");
  ablate->add_option("kind", kind, "nmax | qss | css")->required();
  common(ablate);
  auto* select = app.add_subcommand("select-exp", "Masked-pool selection efficiency study");
  common(select);
  auto* plot = app.add_subcommand("plot", "Convergence plot of finished runs");
  plot->add_option("dir", plot_dirs, "Experiment or runs directory");
  common(plot);
  auto* resume = app.add_subcommand("resume", "Continue an interrupted PQS run");
  resume->add_option("run-dir", run_dir, "Run directory")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  }

  try {
    for (auto* sub : {run_cmd, ablate, select, plot}) {
      if (sub->parsed()) o.overrides = sub->remaining();
    }
    if (run_cmd->parsed()) return cmd_run(o, out);
    if (ablate->parsed()) return cmd_ablate(kind, o, out);
    if (select->parsed()) return cmd_select_exp(o, out);
    if (plot->parsed()) return cmd_plot(plot_dirs, o, out);
    if (resume->parsed()) return cmd_resume(run_dir, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
  return kConfigError;
}

}  // namespace quadopt::cli
