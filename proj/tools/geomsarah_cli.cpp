#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gsarah/bench.hpp"
#include "gsarah/selfcheck.hpp"

namespace {

int do_run(const gsarah::ExperimentConfig& cfg) {
  const auto table = gsarah::run_experiment(cfg);
  std::cout << "wrote " << cfg.out_dir << "/results.csv ("
            << table.rows.size() << " rows)\n";
  if (cfg.emit_plots) {
    std::cout << "wrote " << cfg.out_dir << "/f_value.svg and "
              << cfg.out_dir << "/grad_norm_sq.svg\n";
  }
  return 0;
}

int do_plot(const std::string& csv_path, const std::string& metric,
            const std::string& out_path) {
  if (metric != "f_value" && metric != "grad_norm_sq") {
    throw gsarah::ConfigError("plot: metric must be f_value or grad_norm_sq");
  }
  const auto table = gsarah::read_csv_file(csv_path);
  gsarah::write_plot(table,
                     metric == "f_value" ? gsarah::PlotMetric::FValue
                                         : gsarah::PlotMetric::GradNormSq,
                     out_path);
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "geomsarah: variance-reduced stochastic optimization benchmark"};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand(
      "run", "Run a (method x seed) experiment grid and write CSV traces");
  std::string config_path;
  gsarah::ExperimentConfig cfg;
  std::vector<std::string> run_methods;
  std::vector<std::uint64_t> run_seeds;
  double delta = -1.0, alpha = -1.0;
  run->add_option("--config", config_path, "JSON config file");
  run->add_option("--data", cfg.dataset,
                  "Dataset: LibSVM path or synth:n=..:d=..:seed=..:sep=..");
  run->add_option("--method", run_methods,
                  "Method descriptor (repeatable), e.g. q-geom-sarah, "
                  "e-geom-sarah:alpha=2, sarah:B=1024, scsg:c=1, sgd");
  run->add_option("--lambda", cfg.lambda, "Penalty weight (default 0.1)");
  run->add_option("--epochs", cfg.epochs, "Outer epochs T");
  run->add_option("--budget", cfg.budget_epochs,
                  "Stop at this many epoch-equivalents of IFO queries "
                  "(overrides --epochs)");
  run->add_option("--seed", run_seeds, "Run seed (repeatable; default 1)");
  run->add_option("--delta", delta,
                  "Tail fraction override for methods that omit it");
  run->add_option("--alpha", alpha,
                  "Growth base override for e-geom-sarah without alpha=");
  run->add_option("--out", cfg.out_dir, "Output directory");
  run->add_option("--pad-dim", cfg.pad_dim,
                  "Raise the feature dimension inferred from the data");
  run->add_flag("--plots", cfg.emit_plots, "Also write SVG plots");

  // check
  auto* check = app.add_subcommand(
      "check", "Run the built-in self checks (exit 0 iff all pass)");

  // plot
  auto* plot =
      app.add_subcommand("plot", "Render an SVG plot from a results CSV");
  std::string csv_path, metric = "f_value", svg_path = "plot.svg";
  plot->add_option("--csv", csv_path, "Input results.csv")->required();
  plot->add_option("--metric", metric, "f_value or grad_norm_sq");
  plot->add_option("--out", svg_path, "Output SVG path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n"
              << "run 'geomsarah --help' for usage\n";
    return 1;
  }

  try {
    if (run->parsed()) {
      if (!config_path.empty()) {
        auto file_cfg = gsarah::ExperimentConfig::from_json_file(config_path);
        // Inline flags override config-file fields.
        if (cfg.dataset.empty()) cfg.dataset = file_cfg.dataset;
        if (run->count("--lambda") == 0) cfg.lambda = file_cfg.lambda;
        if (run_methods.empty()) run_methods = file_cfg.methods;
        if (run->count("--epochs") == 0) cfg.epochs = file_cfg.epochs;
        if (run->count("--budget") == 0) {
          cfg.budget_epochs = file_cfg.budget_epochs;
        }
        if (run_seeds.empty()) run_seeds = file_cfg.seeds;
        if (cfg.out_dir.empty()) cfg.out_dir = file_cfg.out_dir;
        if (run->count("--plots") == 0) cfg.emit_plots = file_cfg.emit_plots;
        if (run->count("--pad-dim") == 0) cfg.pad_dim = file_cfg.pad_dim;
      }
      cfg.methods = run_methods;
      cfg.seeds = run_seeds.empty() ? std::vector<std::uint64_t>{1}
                                    : run_seeds;
      if (cfg.out_dir.empty()) cfg.out_dir = "out";
      // Apply --delta/--alpha to descriptors that do not pin them.
      for (auto& m : cfg.methods) {
        if (delta >= 0.0 && m.find("delta=") == std::string::npos &&
            (m.rfind("q-geom-sarah", 0) == 0 ||
             m.rfind("e-geom-sarah", 0) == 0)) {
          m += ":delta=" + std::to_string(delta);
        }
        if (alpha > 0.0 && m.rfind("e-geom-sarah", 0) == 0 &&
            m.find("alpha=") == std::string::npos) {
          m += ":alpha=" + std::to_string(alpha);
        }
      }
      return do_run(cfg);
    }
    if (check->parsed()) {
      return gsarah::run_self_checks(std::cout);
    }
    if (plot->parsed()) {
      return do_plot(csv_path, metric, svg_path);
    }
  } catch (const gsarah::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
