// interpnn command-line tool: closed-form theory tables, the Monte-Carlo
// studies (ratio curves, CIS curves, rate check), a CSV benchmark pipeline
// and one-off predictions. Every run prints its fully resolved configuration
// and rerunning that configuration reproduces all outputs byte-for-byte.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "interpnn/interpnn.hpp"

namespace fs = std::filesystem;
using namespace interpnn;

namespace {

constexpr double kDefaultGammaOverDCap = 0.35;

struct CommonOpts {
  std::uint64_t seed = 1;
  std::uint64_t stream = 0;
  int threads = 0;
  std::string out_dir = "out";
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--seed", opts.seed, "Base RNG seed")->capture_default_str();
  cmd->add_option("--stream", opts.stream, "Base RNG stream id")->capture_default_str();
  cmd->add_option("--threads", opts.threads,
                  "Worker threads (0 = hardware; INTERPNN_THREADS caps it)")
      ->capture_default_str();
  cmd->add_option("--out-dir", opts.out_dir, "Output directory")->capture_default_str();
}

std::string join_doubles(const std::vector<double>& v) {
  std::string s;
  for (double x : v) {
    if (!s.empty()) s += ",";
    s += format_double(x);
  }
  return s;
}

std::string join_ints(const std::vector<int>& v) {
  std::string s;
  for (int x : v) {
    if (!s.empty()) s += ",";
    s += std::to_string(x);
  }
  return s;
}

void check_gamma_grid(const std::vector<double>& grid, bool allow_out_of_regime) {
  for (double g : grid) {
    if (!(g >= 0.0))
      throw CLI::ValidationError("--gamma-over-d", "grid values must be >= 0");
    if (g > kDefaultGammaOverDCap && !allow_out_of_regime)
      throw CLI::ValidationError(
          "--gamma-over-d", "value " + format_double(g) + " exceeds the default cap " +
                                format_double(kDefaultGammaOverDCap) +
                                "; pass --allow-out-of-regime to override");
  }
}

/// Writes the resolved configuration next to the outputs and echoes it, so
/// any run can be reproduced from its logs alone.
void log_resolved_config(const CommonOpts& common, const std::string& line) {
  fs::create_directories(common.out_dir);
  write_file_atomic((fs::path(common.out_dir) / "resolved_config.txt").string(), line + "\n");
  std::cout << "resolved-config: " << line << "\n";
}

void write_output(const CommonOpts& common, const std::string& name, const std::string& content) {
  fs::create_directories(common.out_dir);
  const std::string path = (fs::path(common.out_dir) / name).string();
  write_file_atomic(path, content);
  std::cout << "wrote " << path << "\n";
}

PlotSeries theory_overlay(const std::vector<std::pair<double, double>>& pts,
                          const std::string& label) {
  return {label, pts, "#000000", false, false};
}

int run_theory(const CommonOpts& common, int d, double gamma_max, double step) {
  if (step <= 0.0) throw CLI::ValidationError("--step", "must be > 0");
  std::ostringstream line;
  line << "theory --d " << d << " --gamma-max " << format_double(gamma_max) << " --step "
       << format_double(step) << " --out-dir " << common.out_dir;
  log_resolved_config(common, line.str());

  const double edge = static_cast<double>(d) / 3.0;
  std::string csv = "d,gamma,pr,k_ratio,cis_ratio_same_k,cis_ratio_opt_k,ownn_ratio\n";
  std::vector<std::pair<double, double>> pr_pts, kr_pts, cis_same_pts, cis_opt_pts, ownn_pts;
  for (int i = 0;; ++i) {
    const double gamma = i * step;
    if (gamma > gamma_max || gamma >= edge) break;
    csv += std::to_string(d) + "," + format_double(gamma) + "," + format_double(pr(d, gamma)) +
           "," + format_double(k_ratio(d, gamma)) + "," +
           format_double(cis_ratio_same_k(d, gamma)) + "," +
           format_double(cis_ratio_opt_k(d, gamma)) + "," + format_double(ownn_ratio(d, gamma)) +
           "\n";
    pr_pts.emplace_back(gamma, pr(d, gamma));
    kr_pts.emplace_back(gamma, k_ratio(d, gamma));
    cis_same_pts.emplace_back(gamma, cis_ratio_same_k(d, gamma));
    cis_opt_pts.emplace_back(gamma, cis_ratio_opt_k(d, gamma));
    ownn_pts.emplace_back(gamma, ownn_ratio(d, gamma));
  }
  write_output(common, "theory.csv", csv);
  write_output(common, "theory.svg",
               render_line_chart("Asymptotic ratios, d = " + std::to_string(d), "gamma", "ratio",
                                 {{"PR", pr_pts, "#1f77b4", false, true},
                                  {"k ratio", kr_pts, "#ff7f0e", false, false},
                                  {"CIS ratio (same k)", cis_same_pts, "#2ca02c", true, false},
                                  {"CIS ratio (opt k)", cis_opt_pts, "#d62728", true, false},
                                  {"OWNN ratio", ownn_pts, "#9467bd", false, false}}));
  return 0;
}

int run_simulate(const CommonOpts& common, const ExperimentConfig& cfg) {
  std::ostringstream line;
  line << "simulate --d " << cfg.d << " --n " << cfg.n << " --n-test " << cfg.n_test
       << " --reps-regression " << cfg.reps.regression << " --reps-classification "
       << cfg.reps.classification << " --gamma-over-d " << join_doubles(cfg.gamma_over_d_grid)
       << " --allow-out-of-regime --max-k " << cfg.max_k << " --seed " << cfg.seed.seed
       << " --stream " << cfg.seed.stream << " --threads " << cfg.threads << " --out-dir "
       << common.out_dir;
  log_resolved_config(common, line.str());

  const RatioCurve curve = run_ratio_curve(cfg);
  write_output(common, "ratio_curve.csv", to_csv(curve));

  std::vector<std::pair<double, double>> mse_pts, regret_pts, theory_pts;
  for (const auto& p : curve.points) {
    const auto pt = std::make_pair(p.gamma_over_d, p.sim_ratio);
    if (p.metric == "mse") {
      mse_pts.push_back(pt);
      theory_pts.emplace_back(p.gamma_over_d,
                              p.theory_pr ? *p.theory_pr : std::nan(""));
    } else {
      regret_pts.push_back(pt);
    }
  }
  write_output(common, "ratio_curve.svg",
               render_line_chart("Performance ratio, d = " + std::to_string(curve.d) +
                                     ", n = " + std::to_string(curve.n),
                                 "gamma/d", "ratio vs gamma = 0",
                                 {theory_overlay(theory_pts, "theory PR"),
                                  {"sim MSE ratio", mse_pts, "#1f77b4", true, true},
                                  {"sim Regret ratio", regret_pts, "#d62728", true, true}}));
  return 0;
}

int run_cis(const CommonOpts& common, const ExperimentConfig& cfg) {
  std::ostringstream line;
  line << "cis --d " << cfg.d << " --n " << cfg.n << " --n-test " << cfg.n_test << " --reps "
       << cfg.reps.classification << " --gamma-over-d " << join_doubles(cfg.gamma_over_d_grid)
       << " --allow-out-of-regime --max-k " << cfg.max_k
       << (cfg.cis_identical_pairs ? " --identical-pairs" : "") << " --seed " << cfg.seed.seed
       << " --stream " << cfg.seed.stream << " --threads " << cfg.threads << " --out-dir "
       << common.out_dir;
  log_resolved_config(common, line.str());

  const CisCurve curve = run_cis_curve(cfg);
  write_output(common, "cis_curve.csv", to_csv(curve));

  std::vector<std::pair<double, double>> opt_pts, fixed_pts, theory_pts;
  for (const auto& p : curve.points) {
    const auto pt = std::make_pair(p.gamma_over_d, p.sim_ratio);
    if (p.k_policy == "optimal") {
      opt_pts.push_back(pt);
      theory_pts.emplace_back(p.gamma_over_d,
                              p.theory_sqrt_pr ? *p.theory_sqrt_pr : std::nan(""));
    } else {
      fixed_pts.push_back(pt);
    }
  }
  write_output(common, "cis_curve.svg",
               render_line_chart("CIS ratio, d = " + std::to_string(curve.d) +
                                     ", n = " + std::to_string(curve.n),
                                 "gamma/d", "CIS ratio vs gamma = 0",
                                 {theory_overlay(theory_pts, "theory sqrt(PR)"),
                                  {"sim CIS ratio (optimal k)", opt_pts, "#1f77b4", true, true},
                                  {"sim CIS ratio (fixed k)", fixed_pts, "#d62728", true, true}}));
  return 0;
}

int run_ratecheck(const CommonOpts& common, const ExperimentConfig& cfg) {
  std::ostringstream line;
  line << "ratecheck --d " << cfg.d << " --n-grid " << join_ints(cfg.n_grid) << " --n-test "
       << cfg.n_test << " --reps " << cfg.reps.regression << " --gamma-over-d "
       << join_doubles(cfg.gamma_over_d_grid) << " --allow-out-of-regime --max-k " << cfg.max_k
       << " --seed " << cfg.seed.seed << " --stream " << cfg.seed.stream << " --threads "
       << cfg.threads << " --out-dir " << common.out_dir;
  log_resolved_config(common, line.str());

  const RateCheckResult result = run_rate_check(cfg);
  write_output(common, "rate_check.csv", to_csv(result));

  std::vector<PlotSeries> series;
  const std::vector<std::string> palette = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                            "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
  for (std::size_t g = 0; g < result.gammas.size(); ++g) {
    PlotSeries s{"gamma = " + format_double(result.gammas[g]) +
                     " (slope " + format_double(result.slopes[g]) + ")",
                 {},
                 palette[g % palette.size()],
                 false,
                 true};
    for (const auto& row : result.rows)
      if (row.gamma == result.gammas[g])
        s.points.emplace_back(std::log2(row.n), std::log2(row.best_mse));
    series.push_back(std::move(s));
    std::cout << "slope[gamma=" << format_double(result.gammas[g])
              << "] = " << format_double(result.slopes[g]) << "\n";
  }
  write_output(common, "rate_check.svg",
               render_line_chart("Optimal MSE vs n, d = " + std::to_string(cfg.d), "log2 n",
                                 "log2 best MSE", series));
  return 0;
}

int run_bench(const CommonOpts& common, const ExperimentConfig& cfg, const std::string& input,
              const std::string& label_column, std::string dataset_name) {
  if (dataset_name.empty()) dataset_name = fs::path(input).stem().string();
  std::ostringstream line;
  line << "bench --input " << input << " --label-column " << label_column << " --name "
       << dataset_name << " --reps " << cfg.reps.classification << " --train-fraction "
       << format_double(cfg.train_fraction) << " --validation-fraction "
       << format_double(cfg.validation_fraction) << " --gamma-over-d "
       << join_doubles(cfg.gamma_over_d_grid) << " --allow-out-of-regime --max-k " << cfg.max_k
       << " --seed " << cfg.seed.seed << " --stream " << cfg.seed.stream << " --threads "
       << cfg.threads << " --out-dir " << common.out_dir;
  log_resolved_config(common, line.str());

  const RealDataResult result = run_real_data(input, label_column, dataset_name, cfg);
  write_output(common, "real_data.csv", to_csv(result));

  std::vector<std::pair<double, double>> pts;
  for (const auto& row : result.rows) pts.emplace_back(row.gamma_over_d, row.mean_error);
  write_output(common, "real_data.svg",
               render_line_chart("Test error, " + dataset_name, "gamma/d", "mean error",
                                 {{"mean test error", pts, "#1f77b4", false, true}}));
  for (const auto& row : result.rows)
    if (row.best)
      std::cout << "best gamma/d = " << format_double(row.gamma_over_d)
                << " (mean error " << format_double(row.mean_error) << ")\n";
  return 0;
}

std::vector<Point> load_query_points(const std::string& path, const std::string& label_column,
                                     int expected_dim) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string text_line;
  if (!std::getline(in, text_line)) throw CsvParseError(path + ": missing header row");
  const auto header = detail::split_csv_line(text_line);
  std::ptrdiff_t skip = -1;
  for (std::size_t i = 0; i < header.size(); ++i)
    if (detail::trim(header[i]) == label_column) skip = static_cast<std::ptrdiff_t>(i);
  const int dim = static_cast<int>(header.size()) - (skip >= 0 ? 1 : 0);
  if (dim != expected_dim)
    throw CsvParseError(path + ": query dimension " + std::to_string(dim) +
                        " does not match training dimension " + std::to_string(expected_dim));
  std::vector<Point> points;
  std::size_t row = 1;
  while (std::getline(in, text_line)) {
    ++row;
    if (detail::trim(text_line).empty()) continue;
    const auto cells = detail::split_csv_line(text_line);
    if (cells.size() != header.size())
      throw CsvParseError("row " + std::to_string(row) + ": expected " +
                          std::to_string(header.size()) + " cells");
    Point p;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (static_cast<std::ptrdiff_t>(c) == skip) continue;
      p.push_back(detail::parse_cell(cells[c], row, c));
    }
    points.push_back(std::move(p));
  }
  if (points.empty()) throw EmptyDatasetError(path + ": no query rows");
  return points;
}

int run_predict(const CommonOpts& common, const std::string& train_path,
                const std::string& query_path, const std::string& label_column,
                const std::string& task_name, const std::string& scheme_name, int k,
                double gamma) {
  const Task task = task_name == "classification" ? Task::kClassification : Task::kRegression;
  std::ostringstream line;
  line << "predict --train " << train_path << " --queries " << query_path << " --label-column "
       << label_column << " --task " << task_name << " --scheme " << scheme_name << " --k " << k
       << " --gamma " << format_double(gamma) << " --out-dir " << common.out_dir;
  log_resolved_config(common, line.str());

  LabeledDataset train = load_csv(train_path, label_column, task);
  const auto queries = load_query_points(query_path, label_column, train.dim());
  WeightScheme scheme = Interpolated{gamma};
  if (scheme_name == "uniform") scheme = Uniform{};
  if (scheme_name == "ownn") scheme = OwnnRank{train.dim()};
  const FittedModel model = FittedModel::fit(std::move(train), scheme, k);

  std::string csv = "row,prediction\n";
  for (std::size_t i = 0; i < queries.size(); ++i) {
    const double value = task == Task::kClassification
                             ? static_cast<double>(model.predict_class(queries[i]))
                             : model.predict_regression(queries[i]);
    csv += std::to_string(i) + "," + format_double(value) + "\n";
  }
  write_output(common, "predictions.csv", csv);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"interpolated nearest-neighbor estimator, asymptotic theory and experiments"};
  app.require_subcommand(1);

  CommonOpts common;

  // theory
  int theory_d = 2;
  double gamma_max = 10.0, gamma_step = 0.01;
  auto* theory_cmd = app.add_subcommand("theory", "Closed-form asymptotic ratio table (CSV)");
  theory_cmd->add_option("--d", theory_d, "Dimension")->required()->check(CLI::PositiveNumber);
  theory_cmd->add_option("--gamma-max", gamma_max, "Upper end of the gamma sweep (clamped to d/3)")
      ->capture_default_str();
  theory_cmd->add_option("--step", gamma_step, "Gamma step")->capture_default_str();
  add_common(theory_cmd, common);

  // shared study flags
  ExperimentConfig cfg;
  int reps_both = 0;
  bool allow_out_of_regime = false;

  auto add_gamma_grid = [&](CLI::App* cmd) {
    cmd->add_option("--gamma-over-d", cfg.gamma_over_d_grid,
                    "Gamma/d grid (comma separated)")
        ->delimiter(',')
        ->capture_default_str();
    cmd->add_flag("--allow-out-of-regime", allow_out_of_regime,
                  "Permit gamma/d beyond the default cap 0.35");
  };

  auto* sim_cmd = app.add_subcommand("simulate", "Simulated MSE and Regret ratio curves with theory overlay");
  sim_cmd->add_option("--d", cfg.d, "Dimension")->capture_default_str();
  sim_cmd->add_option("--n", cfg.n, "Training size per repetition")->capture_default_str();
  sim_cmd->add_option("--n-test", cfg.n_test, "Evaluation draws per repetition")
      ->capture_default_str();
  sim_cmd->add_option("--reps", reps_both, "Repetitions for both metrics (0 = keep per-metric defaults)");
  sim_cmd->add_option("--reps-regression", cfg.reps.regression, "Repetitions for the MSE curve")
      ->capture_default_str();
  sim_cmd
      ->add_option("--reps-classification", cfg.reps.classification,
                   "Repetitions for the Regret curve")
      ->capture_default_str();
  sim_cmd->add_option("--max-k", cfg.max_k, "Cap on the k search range (0 = n-1)")
      ->capture_default_str();
  add_gamma_grid(sim_cmd);
  add_common(sim_cmd, common);

  auto* cis_cmd = app.add_subcommand("cis", "Classification-instability ratio curves");
  cis_cmd->add_option("--d", cfg.d, "Dimension")->capture_default_str();
  cis_cmd->add_option("--n", cfg.n, "Training size per repetition")->capture_default_str();
  cis_cmd->add_option("--n-test", cfg.n_test, "Evaluation draws per repetition")
      ->capture_default_str();
  cis_cmd->add_option("--reps", cfg.reps.classification, "Repetitions")->capture_default_str();
  cis_cmd->add_option("--max-k", cfg.max_k, "Cap on the k search range (0 = n-1)")
      ->capture_default_str();
  cis_cmd->add_flag("--identical-pairs", cfg.cis_identical_pairs,
                    "Train both classifiers on identical draws (smoke mode, CIS = 0)");
  add_gamma_grid(cis_cmd);
  add_common(cis_cmd, common);

  auto* rate_cmd = app.add_subcommand("ratecheck", "Optimal k and MSE against the training size");
  rate_cmd->add_option("--d", cfg.d, "Dimension")->capture_default_str();
  rate_cmd->add_option("--n-grid", cfg.n_grid, "Training sizes (comma separated)")
      ->delimiter(',')
      ->capture_default_str();
  rate_cmd->add_option("--n-test", cfg.n_test, "Evaluation draws per repetition")
      ->capture_default_str();
  rate_cmd->add_option("--reps", cfg.reps.regression, "Repetitions")->capture_default_str();
  rate_cmd->add_option("--max-k", cfg.max_k, "Cap on the k search range (0 = n-1)")
      ->capture_default_str();
  add_gamma_grid(rate_cmd);
  add_common(rate_cmd, common);

  std::string bench_input, bench_label = "label", bench_name;
  int bench_reps = 50;
  auto* bench_cmd = app.add_subcommand("bench", "Real-data sweep over gamma/d on a CSV dataset");
  bench_cmd->add_option("--input", bench_input, "Input CSV path")->required();
  bench_cmd->add_option("--label-column", bench_label, "Label column name")
      ->capture_default_str();
  bench_cmd->add_option("--name", bench_name, "Dataset name for the output table");
  bench_cmd->add_option("--reps", bench_reps, "Split repetitions")->capture_default_str();
  bench_cmd->add_option("--train-fraction", cfg.train_fraction, "Training fraction")
      ->capture_default_str();
  bench_cmd
      ->add_option("--validation-fraction", cfg.validation_fraction,
                   "Validation fraction of the training part (k selection)")
      ->capture_default_str();
  bench_cmd->add_option("--max-k", cfg.max_k, "Cap on the k search range (0 = full)")
      ->capture_default_str();
  add_gamma_grid(bench_cmd);
  add_common(bench_cmd, common);

  std::string predict_train, predict_queries, predict_label = "label",
              predict_task = "regression", predict_scheme = "interpolated";
  int predict_k = 5;
  double predict_gamma = 1.0;
  auto* predict_cmd = app.add_subcommand("predict", "Fit on a CSV and predict query rows");
  predict_cmd->add_option("--train", predict_train, "Training CSV")->required();
  predict_cmd->add_option("--queries", predict_queries, "Query CSV")->required();
  predict_cmd->add_option("--label-column", predict_label, "Label column name")
      ->capture_default_str();
  predict_cmd->add_option("--task", predict_task, "regression | classification")
      ->check(CLI::IsMember({"regression", "classification"}))
      ->capture_default_str();
  predict_cmd->add_option("--scheme", predict_scheme, "uniform | interpolated | ownn")
      ->check(CLI::IsMember({"uniform", "interpolated", "ownn"}))
      ->capture_default_str();
  predict_cmd->add_option("--k", predict_k, "Neighbor count")->check(CLI::PositiveNumber);
  predict_cmd->add_option("--gamma", predict_gamma, "Interpolation level")
      ->capture_default_str();
  add_common(predict_cmd, common);

  try {
    app.parse(argc, argv);

    cfg.seed = RngSeed{common.seed, common.stream};
    cfg.threads = common.threads;
    if (reps_both > 0) cfg.reps = {reps_both, reps_both};

    if (theory_cmd->parsed()) return run_theory(common, theory_d, gamma_max, gamma_step);
    if (sim_cmd->parsed()) {
      check_gamma_grid(cfg.gamma_over_d_grid, allow_out_of_regime);
      cfg.study = Study::kRatioCurve;
      return run_simulate(common, cfg);
    }
    if (cis_cmd->parsed()) {
      check_gamma_grid(cfg.gamma_over_d_grid, allow_out_of_regime);
      cfg.study = Study::kCisCurve;
      return run_cis(common, cfg);
    }
    if (rate_cmd->parsed()) {
      if (!rate_cmd->count("--gamma-over-d")) cfg.gamma_over_d_grid = {0.0, 0.2};
      check_gamma_grid(cfg.gamma_over_d_grid, allow_out_of_regime);
      cfg.study = Study::kRateCheck;
      return run_ratecheck(common, cfg);
    }
    if (bench_cmd->parsed()) {
      check_gamma_grid(cfg.gamma_over_d_grid, allow_out_of_regime);
      cfg.study = Study::kRealData;
      cfg.reps.classification = bench_reps;
      return run_bench(common, cfg, bench_input, bench_label, bench_name);
    }
    if (predict_cmd->parsed())
      return run_predict(common, predict_train, predict_queries, predict_label, predict_task,
                         predict_scheme, predict_k, predict_gamma);
    return 2;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 3;
  } catch (const CsvParseError& e) {
    std::cerr << "csv error: " << e.what() << "\n";
    return 4;
  } catch (const NonBinaryLabelError& e) {
    std::cerr << "label error: " << e.what() << "\n";
    return 4;
  } catch (const EmptyDatasetError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 4;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 5;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 6;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
