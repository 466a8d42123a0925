#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "pwscale/ingest.hpp"
#include "pwscale/outliers.hpp"
#include "pwscale/report.hpp"
#include "pwscale/simulate.hpp"
#include "pwscale/stats.hpp"

namespace {

using nlohmann::json;
using namespace pwscale;

int default_threads() {
  if (const char* env = std::getenv("PWSCALE_THREADS")) {
    int v = std::atoi(env);
    if (v >= 1) return v;
  }
  return 1;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write output file: " + path);
  out << content;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

// Per-observer matrices in a deterministic (sorted key) order.
struct ObserverGroup {
  std::vector<std::string> observers;
  std::vector<CountMatrix> matrices;
};

std::map<std::string, ObserverGroup> group_matrices(const TrialTable& table,
                                                    bool per_content) {
  std::map<std::string, ObserverGroup> groups;
  for (auto& [key, matrix] : build_observer_matrices(table, per_content)) {
    ObserverGroup& g = groups[key.content];
    g.observers.push_back(key.observer);
    g.matrices.push_back(matrix);
  }
  return groups;
}

struct ScaleArgs {
  std::string input;
  std::string reference;
  bool per_content = false;
  int bootstrap = 500;
  double alpha = 0.05;
  bool no_prior = false;
  double gamma = 0.1;
  double sigma = 1.4826;
  std::uint64_t seed = 0;
  std::string output;
  std::string plot;
  std::string sig_graph;
  std::string csv;
  int threads = default_threads();
};

Analysis analyze_group(const std::string& content, const ObserverGroup& group,
                       int n, const ScaleArgs& args, const ScaleOptions& opts) {
  Analysis a;
  if (!content.empty()) a.content = content;
  a.observer_ids = group.observers;

  CountMatrix pooled = pool_matrices(group.matrices, n);
  a.scale = scale_mle(pooled, opts);

  if (args.bootstrap > 0 && group.matrices.size() >= 2) {
    a.bootstrap = bootstrap_scale(group.matrices, args.bootstrap, opts,
                                  args.seed, args.threads);
    a.significance =
        pairwise_significance(a.scale.jod, a.bootstrap->covariance, args.alpha);
  }
  if (group.matrices.size() >= 4) {
    try {
      a.outliers = outlier_scores(group.matrices, opts, args.threads);
    } catch (const Error&) {
      // leave-one-out can fail on sparse designs; outliers stay absent
    }
  }
  return a;
}

int run_scale(const ScaleArgs& args) {
  std::optional<std::string> reference;
  if (!args.reference.empty()) reference = args.reference;
  TrialTable table = parse_trials_file(args.input, reference);
  for (const std::string& w : table.warnings)
    std::cerr << "warning: " << w << "\n";

  ScaleOptions opts;
  opts.sigma_ij = args.sigma;
  opts.use_prior = !args.no_prior;
  opts.gamma = args.gamma;

  auto groups = group_matrices(table, args.per_content);
  std::vector<Analysis> analyses;
  for (const auto& [content, group] : groups) {
    Analysis a = analyze_group(content, group, table.conditions.size(), args, opts);
    a.conditions = table.conditions.labels;
    analyses.push_back(std::move(a));
  }

  ReportProvenance prov;
  prov.input = args.input;
  prov.seed = args.seed;
  prov.opts = opts;
  prov.bootstrap_samples = args.bootstrap;
  prov.alpha = args.alpha;
  prov.reference = reference;
  prov.per_content = args.per_content;

  json report = make_scale_report(analyses, prov, table.warnings);
  std::string text = report.dump(2) + "\n";
  if (args.output.empty())
    std::cout << text;
  else
    write_file(args.output, text);

  auto suffixed = [&](const std::string& path, const std::string& content) {
    if (!args.per_content || content.empty()) return path;
    auto dot = path.rfind('.');
    std::string stem = dot == std::string::npos ? path : path.substr(0, dot);
    std::string ext = dot == std::string::npos ? "" : path.substr(dot);
    return stem + "_" + content + ext;
  };
  for (const Analysis& a : analyses) {
    std::string tag = a.content.value_or("");
    if (!args.plot.empty())
      write_file(suffixed(args.plot, tag), render_errorbar_svg(a));
    if (!args.sig_graph.empty()) {
      std::string path = suffixed(args.sig_graph, tag);
      write_file(path, render_significance_svg(a));
      write_file(path + ".edges.csv", significance_edge_list(a));
    }
    if (!args.csv.empty()) write_file(suffixed(args.csv, tag), scale_csv(a));
  }
  return 0;
}

struct OutlierArgs {
  std::string input;
  std::string reference;
  bool no_prior = false;
  double gamma = 0.1;
  double sigma = 1.4826;
  std::string output;
  std::string profile;
  int threads = default_threads();
};

int run_outliers(const OutlierArgs& args) {
  std::optional<std::string> reference;
  if (!args.reference.empty()) reference = args.reference;
  TrialTable table = parse_trials_file(args.input, reference);

  ScaleOptions opts;
  opts.sigma_ij = args.sigma;
  opts.use_prior = !args.no_prior;
  opts.gamma = args.gamma;

  auto groups = group_matrices(table, false);
  if (groups.empty()) throw FormatError("no trials in input");
  const ObserverGroup& group = groups.begin()->second;

  Analysis a;
  a.conditions = table.conditions.labels;
  a.observer_ids = group.observers;
  a.outliers = outlier_scores(group.matrices, opts, args.threads);

  ReportProvenance prov;
  prov.input = args.input;
  prov.opts = opts;
  prov.reference = reference;

  json report = make_outlier_report(a, prov);
  std::string text = report.dump(2) + "\n";
  if (args.output.empty()) {
    // Human-readable table, worst first.
    std::vector<int> order(group.observers.size());
    for (size_t k = 0; k < order.size(); ++k) order[k] = static_cast<int>(k);
    std::sort(order.begin(), order.end(), [&](int x, int y) {
      return a.outliers->iqr_score[x] > a.outliers->iqr_score[y];
    });
    std::printf("%-12s %14s %10s %8s\n", "observer", "log_likelihood",
                "iqr_score", "flagged");
    for (int k : order)
      std::printf("%-12s %14.4f %10.3f %8s\n", group.observers[k].c_str(),
                  a.outliers->log_likelihood[k], a.outliers->iqr_score[k],
                  a.outliers->flagged[k] ? "yes" : "no");
    std::printf("flag threshold: 1.5 IQR below Q1 (advisory)\n");
  } else {
    write_file(args.output, text);
  }

  if (!args.profile.empty()) {
    std::ostringstream csv;
    csv << "observer,flagged,condition,selection_probability\n";
    for (size_t k = 0; k < group.observers.size(); ++k) {
      if (!a.outliers->flagged[k]) continue;
      PreferenceProfile p = observer_preference_profile(group.matrices,
                                                        static_cast<int>(k));
      for (int i = 0; i < p.observer.size(); ++i)
        csv << group.observers[k] << ",true," << a.conditions[i] << ','
            << (std::isnan(p.observer[i]) ? "" : fmt(p.observer[i])) << '\n';
      // Population rows for the box plot.
      for (size_t o = 0; o < group.observers.size(); ++o) {
        if (o == k) continue;
        for (int i = 0; i < p.population.cols(); ++i)
          csv << group.observers[o] << ",false," << a.conditions[i] << ','
              << (std::isnan(p.population(o, i)) ? ""
                                                 : fmt(p.population(o, i)))
              << '\n';
      }
    }
    write_file(args.profile, csv.str());
  }
  return 0;
}

struct SimulateArgs {
  std::string q_spec = "0,1,2,3,4";
  std::vector<int> observers = {10};
  std::vector<std::string> designs = {"complete"};
  int repetitions = 3;
  int runs = 1000;
  bool ties = false;
  double tie_mean = 0.7;
  double tie_sd = 0.3;
  bool no_prior = false;
  bool drop_unanimous = false;
  double gamma = 0.1;
  double sigma = 1.4826;
  std::uint64_t seed = 0;
  int ci_subsample = 50;
  int ci_bootstrap = 200;
  bool full_bootstrap = false;  // B = 500 inside the Monte-Carlo loop
  std::string preset;
  std::string config_file;
  std::string output;      // CSV
  std::string json_output; // summary
  int threads = default_threads();
};

Eigen::VectorXd parse_q(const std::string& spec) {
  std::vector<double> values;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) values.push_back(std::stod(item));
  if (values.size() < 2)
    throw FormatError("q must list at least two scores");
  Eigen::VectorXd q(values.size());
  for (size_t i = 0; i < values.size(); ++i) q[i] = values[i];
  return q;
}

Design parse_design(const std::string& name) {
  if (name == "complete") return Design::Complete;
  if (name == "chain" || name == "incomplete") return Design::IncompleteChain;
  throw FormatError("unknown design: " + name + " (use complete or chain)");
}

void apply_config_file(SimulateArgs& args) {
  std::ifstream in(args.config_file);
  if (!in) throw FormatError("cannot open config file: " + args.config_file);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw FormatError(args.config_file + ":" + std::to_string(lineno) +
                        ": expected key=value");
    auto trim = [](std::string s) {
      size_t b = s.find_first_not_of(" \t\r");
      size_t e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    auto as_bool = [&] {
      if (value == "true" || value == "1") return true;
      if (value == "false" || value == "0") return false;
      throw FormatError(key + ": expected boolean, got " + value);
    };
    if (key == "q") {
      args.q_spec = value;
    } else if (key == "observers") {
      args.observers.clear();
      std::stringstream ss(value);
      std::string item;
      while (std::getline(ss, item, ','))
        args.observers.push_back(std::stoi(item));
    } else if (key == "design") {
      args.designs.clear();
      std::stringstream ss(value);
      std::string item;
      while (std::getline(ss, item, ',')) args.designs.push_back(item);
    } else if (key == "repetitions") {
      args.repetitions = std::stoi(value);
    } else if (key == "runs") {
      args.runs = std::stoi(value);
    } else if (key == "ties") {
      args.ties = as_bool();
    } else if (key == "tie_mean") {
      args.tie_mean = std::stod(value);
    } else if (key == "tie_sd") {
      args.tie_sd = std::stod(value);
    } else if (key == "prior") {
      args.no_prior = !as_bool();
    } else if (key == "drop_unanimous") {
      args.drop_unanimous = as_bool();
    } else if (key == "gamma") {
      args.gamma = std::stod(value);
    } else if (key == "sigma") {
      args.sigma = std::stod(value);
    } else if (key == "seed") {
      args.seed = std::stoull(value);
    } else {
      throw FormatError(args.config_file + ":" + std::to_string(lineno) +
                        ": unknown key " + key);
    }
  }
}

struct GridPoint {
  Design design;
  std::string design_name;
  int observers;
  bool use_prior;
  bool ties;
  bool drop_unanimous;
};

int run_simulate(SimulateArgs args) {
  if (!args.config_file.empty()) apply_config_file(args);

  std::vector<GridPoint> grid;
  if (args.preset == "prior-benefit") {
    args.q_spec = "0,1,2,3,4";
    for (int m : {5, 10, 20, 40, 60})
      for (bool prior : {true, false})
        grid.push_back({Design::Complete, "complete", m, prior, false, false});
  } else if (args.preset == "ties") {
    args.q_spec = "0,1,2,3,4";
    for (bool ties : {false, true})
      grid.push_back({Design::Complete, "complete", 20, !args.no_prior, ties,
                      args.drop_unanimous});
  } else if (!args.preset.empty()) {
    throw FormatError("unknown preset: " + args.preset);
  } else {
    for (const std::string& name : args.designs)
      for (int m : args.observers)
        grid.push_back({parse_design(name), name, m, !args.no_prior, args.ties,
                        args.drop_unanimous});
  }

  Eigen::VectorXd q = parse_q(args.q_spec);

  std::ostringstream csv;
  csv << "design,observers,repetitions,runs,prior,ties,drop_unanimous,"
         "effect_size,mean_ci_size,rmse,runs_failed,mean_jod,bias\n";
  json summary = json::array();

  for (const GridPoint& point : grid) {
    SimConfig config;
    config.q_true = q;
    config.design = point.design;
    config.observers = point.observers;
    config.repetitions = args.repetitions;
    config.runs = args.runs;
    config.sigma_ij = args.sigma;
    if (point.ties) config.tie_model = TieModel{args.tie_mean, args.tie_sd};
    config.use_prior = point.use_prior;
    config.drop_unanimous = point.drop_unanimous;
    config.gamma = args.gamma;
    config.seed = args.seed;
    config.compute_ci = args.runs > 1;
    config.ci_subsample = args.ci_subsample;
    config.ci_bootstrap = args.full_bootstrap ? 500 : args.ci_bootstrap;
    config.threads = args.threads;

    SimMetrics metrics = run_monte_carlo(config);

    auto join = [](const Eigen::VectorXd& v) {
      std::string out;
      for (int i = 0; i < v.size(); ++i)
        out += (i ? "|" : "") + fmt(v[i]);
      return out;
    };
    bool have_variance = metrics.runs_used >= 2;
    csv << point.design_name << ',' << point.observers << ','
        << args.repetitions << ',' << args.runs << ','
        << (point.use_prior ? "true" : "false") << ','
        << (point.ties ? "true" : "false") << ','
        << (point.drop_unanimous ? "true" : "false") << ','
        << (have_variance ? fmt(metrics.effect_size) : "") << ','
        << (std::isnan(metrics.mean_ci_size) ? "" : fmt(metrics.mean_ci_size))
        << ',' << fmt(metrics.rmse) << ',' << metrics.runs_failed << ','
        << join(metrics.mean_jod) << ',' << join(metrics.bias) << '\n';

    json row;
    row["design"] = point.design_name;
    row["observers"] = point.observers;
    row["repetitions"] = args.repetitions;
    row["runs"] = args.runs;
    row["prior"] = point.use_prior;
    row["ties"] = point.ties;
    row["drop_unanimous"] = point.drop_unanimous;
    row["effect_size"] =
        have_variance ? json(metrics.effect_size) : json(nullptr);
    row["mean_ci_size"] = std::isnan(metrics.mean_ci_size)
                              ? json(nullptr)
                              : json(metrics.mean_ci_size);
    row["rmse"] = metrics.rmse;
    row["runs_failed"] = metrics.runs_failed;
    json mean = json::array(), bias = json::array();
    for (int i = 0; i < metrics.mean_jod.size(); ++i) {
      mean.push_back(metrics.mean_jod[i]);
      bias.push_back(metrics.bias[i]);
    }
    row["mean_jod"] = mean;
    row["bias"] = bias;
    summary.push_back(row);
  }

  if (args.output.empty())
    std::cout << csv.str();
  else
    write_file(args.output, csv.str());
  if (!args.json_output.empty()) {
    json wrapper;
    wrapper["schema_version"] = kReportSchemaVersion;
    wrapper["tool"] = {{"name", kToolName}, {"version", kToolVersion}};
    wrapper["seed"] = args.seed;
    wrapper["q_true"] = args.q_spec;
    wrapper["results"] = summary;
    write_file(args.json_output, wrapper.dump(2) + "\n");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pairwise comparison scaling (Thurstone Case V, JOD units)"};
  app.require_subcommand(1);

  ScaleArgs scale_args;
  CLI::App* scale = app.add_subcommand(
      "scale", "Scale comparison data and report JOD scores with CIs");
  scale->add_option("--input", scale_args.input, "CSV trial file")->required();
  scale->add_option("--reference", scale_args.reference,
                    "condition fixed at 0 JOD (default: first in file)");
  scale->add_flag("--per-content", scale_args.per_content,
                  "scale each scene separately");
  scale->add_option("--bootstrap", scale_args.bootstrap,
                    "bootstrap samples (0 disables CIs)");
  scale->add_option("--alpha", scale_args.alpha, "significance level");
  scale->add_flag("--no-prior", scale_args.no_prior,
                  "disable the finite-distance prior");
  scale->add_option("--gamma", scale_args.gamma, "prior offset");
  scale->add_option("--sigma", scale_args.sigma, "sigma_ij (JOD normalization)");
  scale->add_option("--seed", scale_args.seed, "bootstrap RNG seed");
  scale->add_option("--output", scale_args.output, "JSON report path");
  scale->add_option("--plot", scale_args.plot, "SVG error-bar plot path");
  scale->add_option("--sig-graph", scale_args.sig_graph,
                    "significance graph SVG path (edge list written alongside)");
  scale->add_option("--csv", scale_args.csv, "CSV extract path");
  scale->add_option("--threads", scale_args.threads, "worker threads");

  OutlierArgs outlier_args;
  CLI::App* outliers = app.add_subcommand(
      "outliers", "Leave-one-out outlier screening of observers");
  outliers->add_option("--input", outlier_args.input, "CSV trial file")
      ->required();
  outliers->add_option("--reference", outlier_args.reference,
                       "condition fixed at 0 JOD");
  outliers->add_flag("--no-prior", outlier_args.no_prior,
                     "disable the finite-distance prior");
  outliers->add_option("--gamma", outlier_args.gamma, "prior offset");
  outliers->add_option("--sigma", outlier_args.sigma, "sigma_ij");
  outliers->add_option("--output", outlier_args.output, "JSON report path");
  outliers->add_option("--profile", outlier_args.profile,
                       "per-observer selection-probability CSV (flagged only)");
  outliers->add_option("--threads", outlier_args.threads, "worker threads");

  SimulateArgs sim_args;
  CLI::App* simulate = app.add_subcommand(
      "simulate", "Monte-Carlo evaluation of experimental designs");
  simulate->add_option("--q", sim_args.q_spec, "true scores, comma-separated");
  simulate->add_option("--observers", sim_args.observers,
                       "observer counts to sweep")
      ->delimiter(',');
  simulate->add_option("--design", sim_args.designs,
                       "designs to sweep: complete, chain")
      ->delimiter(',');
  simulate->add_option("--repetitions", sim_args.repetitions,
                       "repetitions per pair per observer");
  simulate->add_option("--runs", sim_args.runs, "Monte-Carlo runs per point");
  simulate->add_flag("--ties", sim_args.ties, "enable the tie model");
  simulate->add_option("--tie-mean", sim_args.tie_mean, "tie threshold mean");
  simulate->add_option("--tie-sd", sim_args.tie_sd, "tie threshold sd");
  simulate->add_flag("--no-prior", sim_args.no_prior, "disable the prior");
  simulate->add_flag("--drop-unanimous", sim_args.drop_unanimous,
                     "remove unanimous pairs before scaling");
  simulate->add_option("--gamma", sim_args.gamma, "prior offset");
  simulate->add_option("--sigma", sim_args.sigma, "sigma_ij");
  simulate->add_option("--seed", sim_args.seed, "RNG seed");
  simulate->add_option("--ci-subsample", sim_args.ci_subsample,
                       "runs used for bootstrap CI estimation");
  simulate->add_flag("--full-bootstrap", sim_args.full_bootstrap,
                     "use B = 500 for in-loop CI estimation");
  simulate->add_option("--preset", sim_args.preset,
                       "preset grid: prior-benefit, ties");
  simulate->add_option("--config", sim_args.config_file,
                       "key=value configuration file");
  simulate->add_option("--output", sim_args.output, "CSV output path");
  simulate->add_option("--json", sim_args.json_output, "JSON summary path");
  simulate->add_option("--threads", sim_args.threads, "worker threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*scale) return run_scale(scale_args);
    if (*outliers) return run_outliers(outlier_args);
    if (*simulate) return run_simulate(sim_args);
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
