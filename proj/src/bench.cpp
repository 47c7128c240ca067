#include "gsarah/bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "gsarah/schedules.hpp"

namespace gsarah {

namespace {

constexpr const char* kCsvHeader =
    "method,seed,epoch,ifo_cumulative,epochs_equivalent,f_value,grad_norm_sq";

void append_g17(std::string& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out += buf;
}

std::uint64_t parse_u64_field(const std::string& what, const std::string& v) {
  try {
    std::size_t used = 0;
    const unsigned long long r = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw ConfigError("bad integer for " + what + ": '" + v + "'");
  }
}

double parse_real_cfg(const std::string& what, const std::string& v) {
  try {
    std::size_t used = 0;
    const double r = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw ConfigError("bad number for " + what + ": '" + v + "'");
  }
}

}  // namespace

void ExperimentConfig::validate() const {
  if (dataset.empty()) throw ConfigError("config: dataset is required");
  if (lambda < 0.0 || !std::isfinite(lambda)) {
    throw ConfigError("config: lambda must be >= 0");
  }
  if (methods.empty()) throw ConfigError("config: at least one method");
  for (const auto& m : methods) Schedule::parse(m);
  if (epochs < 1 && !(budget_epochs > 0.0)) {
    throw ConfigError("config: need epochs >= 1 or budget_epochs > 0");
  }
  if (seeds.empty()) throw ConfigError("config: at least one seed");
  if (pad_dim < 0) throw ConfigError("config: pad_dim must be >= 0");
}

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  ExperimentConfig cfg;
  try {
    cfg.dataset = j.value("dataset", std::string{});
    cfg.lambda = j.value("lambda", 0.1);
    if (j.contains("methods")) {
      cfg.methods = j.at("methods").get<std::vector<std::string>>();
    }
    cfg.epochs = j.value("epochs", std::int64_t{0});
    cfg.budget_epochs = j.value("budget_epochs", 0.0);
    if (j.contains("seeds")) {
      cfg.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    }
    cfg.out_dir = j.value("out_dir", std::string{});
    cfg.emit_plots = j.value("emit_plots", false);
    cfg.pad_dim = j.value("pad_dim", std::int64_t{0});
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: bad field type: ") + e.what());
  }
  return cfg;
}

ExperimentConfig ExperimentConfig::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json_text(buf.str());
}

SparseDataset load_dataset(const std::string& spec, std::int64_t pad_dim) {
  SparseDataset ds = [&] {
    if (spec.rfind("synth:", 0) == 0) {
      std::int64_t n = 0, d = 0;
      std::uint64_t seed = 0;
      double sep = 1.0;
      std::size_t start = 6;
      while (start <= spec.size()) {
        const auto sep_pos = spec.find(':', start);
        const std::string part =
            spec.substr(start, sep_pos == std::string::npos
                                   ? std::string::npos
                                   : sep_pos - start);
        const auto eq = part.find('=');
        if (eq == std::string::npos) {
          throw ConfigError("synth spec: expected key=value in '" + part +
                            "'");
        }
        const std::string key = part.substr(0, eq);
        const std::string val = part.substr(eq + 1);
        if (key == "n") {
          n = static_cast<std::int64_t>(parse_u64_field("n", val));
        } else if (key == "d") {
          d = static_cast<std::int64_t>(parse_u64_field("d", val));
        } else if (key == "seed") {
          seed = parse_u64_field("seed", val);
        } else if (key == "sep") {
          sep = parse_real_cfg("sep", val);
        } else {
          throw ConfigError("synth spec: unknown key '" + key + "'");
        }
        if (sep_pos == std::string::npos) break;
        start = sep_pos + 1;
      }
      if (n < 2 || d < 1) {
        throw ConfigError("synth spec: need n>=2 and d>=1, e.g. "
                          "synth:n=1000:d=20:seed=1:sep=1.0");
      }
      return synth_logistic(n, d, seed, sep);
    }
    return parse_libsvm_file(spec);
  }();
  return pad_dim > 0 ? ds.padded(pad_dim) : ds;
}

void append_trace_rows(ResultTable& table, const std::string& method,
                       std::uint64_t seed, const RunTrace& trace,
                       std::int64_t n) {
  for (const auto& r : trace.records) {
    table.rows.push_back({method, seed, r.epoch, r.ifo_cumulative,
                          static_cast<double>(r.ifo_cumulative) /
                              static_cast<double>(n),
                          r.f_value, r.grad_norm_sq});
  }
}

ResultTable run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const SparseDataset ds = load_dataset(cfg.dataset, cfg.pad_dim);
  const LogisticNcvx obj(ds, cfg.lambda);
  const std::int64_t n = ds.num_examples();
  const Vec x0(ds.dim(), 0.0);

  const StopRule stop =
      cfg.budget_epochs > 0.0
          ? StopRule::for_budget(static_cast<std::uint64_t>(
                std::ceil(cfg.budget_epochs * static_cast<double>(n))))
          : StopRule::for_epochs(cfg.epochs);

  struct Task {
    std::size_t method_idx;
    std::size_t seed_idx;
  };
  std::vector<Task> tasks;
  for (std::size_t m = 0; m < cfg.methods.size(); ++m) {
    for (std::size_t s = 0; s < cfg.seeds.size(); ++s) {
      tasks.push_back({m, s});
    }
  }

  std::vector<ResultTable> partial(tasks.size());
  std::vector<std::exception_ptr> errors(tasks.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
  for (std::int64_t t = 0; t < static_cast<std::int64_t>(tasks.size()); ++t) {
    try {
      const auto& task = tasks[t];
      const Schedule sched = Schedule::parse(cfg.methods[task.method_idx]);
      const RunTrace trace =
          run_method(obj, sched, stop, x0, cfg.seeds[task.seed_idx]);
      append_trace_rows(partial[t], cfg.methods[task.method_idx],
                        cfg.seeds[task.seed_idx], trace, n);
    } catch (...) {
      errors[t] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  ResultTable table;
  for (auto& p : partial) {
    table.rows.insert(table.rows.end(), p.rows.begin(), p.rows.end());
  }
  std::sort(table.rows.begin(), table.rows.end(),
            [](const ResultRow& a, const ResultRow& b) {
              return std::tie(a.method, a.seed, a.epoch) <
                     std::tie(b.method, b.seed, b.epoch);
            });

  if (!cfg.out_dir.empty()) {
    std::filesystem::create_directories(cfg.out_dir);
    write_csv(table, cfg.out_dir + "/results.csv");
    if (cfg.emit_plots) {
      write_plot(table, PlotMetric::FValue, cfg.out_dir + "/f_value.svg",
                 cfg.methods);
      write_plot(table, PlotMetric::GradNormSq,
                 cfg.out_dir + "/grad_norm_sq.svg", cfg.methods);
    }
  }
  return table;
}

void emit_csv(const ResultTable& table, std::ostream& out) {
  std::string buf = kCsvHeader;
  buf += '\n';
  for (const auto& r : table.rows) {
    buf += r.method;
    buf += ',';
    buf += std::to_string(r.seed);
    buf += ',';
    buf += std::to_string(r.epoch);
    buf += ',';
    buf += std::to_string(r.ifo_cumulative);
    buf += ',';
    append_g17(buf, r.epochs_equivalent);
    buf += ',';
    append_g17(buf, r.f_value);
    buf += ',';
    append_g17(buf, r.grad_norm_sq);
    buf += '\n';
  }
  out << buf;
}

std::string emit_csv(const ResultTable& table) {
  std::ostringstream out;
  emit_csv(table, out);
  return out.str();
}

void write_csv(const ResultTable& table, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  emit_csv(table, out);
  if (!out) throw std::runtime_error("write failed: " + path);
}

ResultTable read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) {
    throw ParseError(1, "bad results header");
  }
  ResultTable table;
  std::int64_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      if (comma == std::string::npos) {
        fields.push_back(line.substr(start));
        break;
      }
      fields.push_back(line.substr(start, comma - start));
      start = comma + 1;
    }
    if (fields.size() != 7) {
      throw ParseError(line_no, "expected 7 fields");
    }
    try {
      ResultRow r;
      r.method = fields[0];
      r.seed = std::stoull(fields[1]);
      r.epoch = std::stoll(fields[2]);
      r.ifo_cumulative = std::stoull(fields[3]);
      r.epochs_equivalent = std::stod(fields[4]);
      r.f_value = std::stod(fields[5]);
      r.grad_norm_sq = std::stod(fields[6]);
      table.rows.push_back(std::move(r));
    } catch (const std::exception&) {
      throw ParseError(line_no, "bad field value");
    }
  }
  return table;
}

ResultTable read_csv_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_csv(in);
}

void write_plot(const ResultTable& table, PlotMetric metric,
                const std::string& path,
                const std::vector<std::string>& method_order) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  emit_plot(table, metric, out, method_order);
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace gsarah
