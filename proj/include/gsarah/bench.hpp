#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "gsarah/dataset.hpp"
#include "gsarah/optimizer.hpp"

namespace gsarah {

// Experiment grid: every method descriptor runs once per seed on the same
// dataset and objective.
struct ExperimentConfig {
  std::string dataset;  // path, or synth:n=..:d=..:seed=..:sep=..
  double lambda = 0.1;
  std::vector<std::string> methods;
  std::int64_t epochs = 0;      // outer epochs T (tail-randomized output)
  double budget_epochs = 0.0;   // if > 0: stop at budget_epochs * n queries
  std::vector<std::uint64_t> seeds;
  std::string out_dir;
  bool emit_plots = false;
  std::int64_t pad_dim = 0;     // raise the inferred feature dimension

  void validate() const;  // throws ConfigError
  static ExperimentConfig from_json_file(const std::string& path);
  static ExperimentConfig from_json_text(const std::string& text);
};

struct ResultRow {
  std::string method;
  std::uint64_t seed = 0;
  std::int64_t epoch = 0;
  std::uint64_t ifo_cumulative = 0;
  double epochs_equivalent = 0.0;  // ifo_cumulative / n
  double f_value = 0.0;
  double grad_norm_sq = 0.0;
  bool operator==(const ResultRow&) const = default;
};

struct ResultTable {
  std::vector<ResultRow> rows;  // sorted by (method, seed, epoch)
  bool operator==(const ResultTable&) const = default;
};

// Resolves a dataset spec: "synth:n=..:d=..:seed=..:sep=.." or a LibSVM path.
SparseDataset load_dataset(const std::string& spec, std::int64_t pad_dim = 0);

// Runs the (method x seed) grid (in parallel; row order is fixed by sorting)
// and writes <out_dir>/results.csv plus optional SVG plots before returning.
ResultTable run_experiment(const ExperimentConfig& cfg);

// Trace -> rows for one run (epoch 0 carries the initial point's metrics).
void append_trace_rows(ResultTable& table, const std::string& method,
                       std::uint64_t seed, const RunTrace& trace,
                       std::int64_t n);

// CSV contract: header
//   method,seed,epoch,ifo_cumulative,epochs_equivalent,f_value,grad_norm_sq
// reals with 17 significant digits, '\n' newlines, UTF-8.
void emit_csv(const ResultTable& table, std::ostream& out);
std::string emit_csv(const ResultTable& table);
void write_csv(const ResultTable& table, const std::string& path);
ResultTable read_csv(std::istream& in);
ResultTable read_csv_file(const std::string& path);

enum class PlotMetric { FValue, GradNormSq };

// Static SVG: x = epochs_equivalent, log-scale y, one polyline per method
// (seed-averaged pointwise at epoch indices present for every seed), legend
// in `method_order` (first appearance order when empty).  Zero/negative
// values clamp to 1e-300 before the log transform.
void emit_plot(const ResultTable& table, PlotMetric metric, std::ostream& out,
               const std::vector<std::string>& method_order = {});
void write_plot(const ResultTable& table, PlotMetric metric,
                const std::string& path,
                const std::vector<std::string>& method_order = {});

}  // namespace gsarah
