#include "pwscale/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace pwscale {

namespace {

using nlohmann::json;

json finite_or_null(double v) {
  if (std::isnan(v) || std::isinf(v)) return nullptr;
  return v;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (int i = 0; i < v.size(); ++i) out.push_back(finite_or_null(v[i]));
  return out;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(finite_or_null(m(i, j)));
    out.push_back(row);
  }
  return out;
}

json bool_matrix_to_json(const MatrixXb& m) {
  json out = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    out.push_back(row);
  }
  return out;
}

json provenance_to_json(const ReportProvenance& p) {
  return json{
      {"input", p.input},
      {"seed", p.seed},
      {"options",
       {{"sigma_ij", p.opts.sigma_ij},
        {"use_prior", p.opts.use_prior},
        {"gamma", p.opts.gamma},
        {"bootstrap_samples", p.bootstrap_samples},
        {"alpha", p.alpha},
        {"reference", p.reference ? json(*p.reference) : json(nullptr)},
        {"per_content", p.per_content}}},
  };
}

json outliers_to_json(const OutlierReport& report,
                      const std::vector<std::string>& observer_ids) {
  json observers = json::array();
  for (size_t k = 0; k < report.log_likelihood.size(); ++k)
    observers.push_back({{"observer", observer_ids[k]},
                         {"log_likelihood", report.log_likelihood[k]},
                         {"iqr_score", report.iqr_score[k]},
                         {"flagged", static_cast<bool>(report.flagged[k])}});
  return json{{"threshold", 1.5},
              {"q1", report.q1},
              {"q3", report.q3},
              {"observers", observers}};
}

json analysis_to_json(const Analysis& a) {
  json body;
  body["content"] = a.content ? json(*a.content) : json(nullptr);
  body["conditions"] = a.conditions;
  body["jod"] = vector_to_json(a.scale.jod);
  body["log_posterior"] = a.scale.log_posterior;
  body["converged"] = a.scale.converged;
  if (a.bootstrap) {
    json lo = json::array(), hi = json::array();
    lo.push_back(nullptr);  // anchor condition has no interval
    hi.push_back(nullptr);
    for (int i = 1; i < a.bootstrap->ci_low.size(); ++i) {
      lo.push_back(a.bootstrap->ci_low[i]);
      hi.push_back(a.bootstrap->ci_high[i]);
    }
    body["ci_low"] = lo;
    body["ci_high"] = hi;
    body["covariance"] = matrix_to_json(a.bootstrap->covariance);
    body["bootstrap_samples"] = a.bootstrap->B;
  }
  if (a.significance) {
    body["significance"] = {
        {"alpha", a.significance->alpha},
        {"z", matrix_to_json(a.significance->z_scores)},
        {"p", matrix_to_json(a.significance->p_values)},
        {"significant", bool_matrix_to_json(a.significance->significant)},
        {"degenerate", bool_matrix_to_json(a.significance->degenerate)}};
  }
  if (a.outliers) body["outliers"] = outliers_to_json(*a.outliers, a.observer_ids);
  return body;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::string fmt2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

}  // namespace

json make_scale_report(const std::vector<Analysis>& analyses,
                       const ReportProvenance& provenance,
                       const std::vector<std::string>& warnings) {
  json report;
  report["schema_version"] = kReportSchemaVersion;
  report["tool"] = {{"name", kToolName}, {"version", kToolVersion}};
  report["provenance"] = provenance_to_json(provenance);
  report["warnings"] = warnings;
  json list = json::array();
  for (const Analysis& a : analyses) list.push_back(analysis_to_json(a));
  report["analyses"] = list;
  return report;
}

json make_outlier_report(const Analysis& analysis,
                         const ReportProvenance& provenance) {
  json report;
  report["schema_version"] = kReportSchemaVersion;
  report["tool"] = {{"name", kToolName}, {"version", kToolVersion}};
  report["provenance"] = provenance_to_json(provenance);
  report["outliers"] =
      outliers_to_json(*analysis.outliers, analysis.observer_ids);
  return report;
}

std::string render_errorbar_svg(const Analysis& a) {
  const int n = static_cast<int>(a.conditions.size());
  const double width = 120.0 + 90.0 * n;
  const double height = 360.0;
  const double plot_left = 80.0, plot_top = 30.0, plot_bottom = height - 70.0;

  double lo = 0.0, hi = 0.0;
  for (int i = 0; i < n; ++i) {
    lo = std::min(lo, a.scale.jod[i]);
    hi = std::max(hi, a.scale.jod[i]);
  }
  if (a.bootstrap) {
    lo = std::min(lo, a.bootstrap->ci_low.minCoeff());
    hi = std::max(hi, a.bootstrap->ci_high.maxCoeff());
  }
  double span = std::max(1e-6, hi - lo);
  lo -= 0.1 * span;
  hi += 0.1 * span;
  auto y_of = [&](double v) {
    return plot_bottom - (v - lo) / (hi - lo) * (plot_bottom - plot_top);
  };
  auto x_of = [&](int i) { return plot_left + 45.0 + 90.0 * i; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt2(width)
      << "\" height=\"" << fmt2(height) << "\">\n";
  svg << "<line x1=\"" << fmt2(plot_left) << "\" y1=\"" << fmt2(plot_top)
      << "\" x2=\"" << fmt2(plot_left) << "\" y2=\"" << fmt2(plot_bottom)
      << "\" stroke=\"black\"/>\n";
  svg << "<text x=\"20\" y=\"" << fmt2((plot_top + plot_bottom) / 2)
      << "\" font-size=\"12\" transform=\"rotate(-90 20 "
      << fmt2((plot_top + plot_bottom) / 2) << ")\">JOD</text>\n";
  for (int i = 0; i < n; ++i) {
    double x = x_of(i);
    if (a.bootstrap && i > 0) {
      double y1 = y_of(a.bootstrap->ci_low[i]);
      double y2 = y_of(a.bootstrap->ci_high[i]);
      svg << "<line x1=\"" << fmt2(x) << "\" y1=\"" << fmt2(y1) << "\" x2=\""
          << fmt2(x) << "\" y2=\"" << fmt2(y2)
          << "\" stroke=\"steelblue\" stroke-width=\"2\"/>\n";
      for (double y : {y1, y2})
        svg << "<line x1=\"" << fmt2(x - 6) << "\" y1=\"" << fmt2(y)
            << "\" x2=\"" << fmt2(x + 6) << "\" y2=\"" << fmt2(y)
            << "\" stroke=\"steelblue\" stroke-width=\"2\"/>\n";
    }
    svg << "<circle cx=\"" << fmt2(x) << "\" cy=\"" << fmt2(y_of(a.scale.jod[i]))
        << "\" r=\"4\" fill=\"crimson\"/>\n";
    svg << "<text x=\"" << fmt2(x) << "\" y=\"" << fmt2(plot_bottom + 18)
        << "\" font-size=\"11\" text-anchor=\"middle\">" << a.conditions[i]
        << "</text>\n";
    svg << "<text x=\"" << fmt2(x) << "\" y=\"" << fmt2(plot_bottom + 34)
        << "\" font-size=\"10\" text-anchor=\"middle\">"
        << fmt(a.scale.jod[i]) << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

std::string render_significance_svg(const Analysis& a) {
  const int n = static_cast<int>(a.conditions.size());
  const double width = 760.0, height = 220.0;
  const double left = 60.0, right = width - 60.0, axis_y = 150.0;

  double lo = a.scale.jod.minCoeff(), hi = a.scale.jod.maxCoeff();
  double span = std::max(1e-6, hi - lo);
  auto x_of = [&](double v) { return left + (v - lo) / span * (right - left); };

  // Conditions sorted by score; edges connect scale neighbours.
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](int i, int j) { return a.scale.jod[i] < a.scale.jod[j]; });

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt2(width)
      << "\" height=\"" << fmt2(height) << "\">\n";
  svg << "<line x1=\"" << fmt2(left) << "\" y1=\"" << fmt2(axis_y) << "\" x2=\""
      << fmt2(right) << "\" y2=\"" << fmt2(axis_y)
      << "\" stroke=\"black\"/>\n";
  svg << "<text x=\"" << fmt2(width / 2) << "\" y=\"" << fmt2(height - 10)
      << "\" font-size=\"12\" text-anchor=\"middle\">JOD</text>\n";

  if (a.significance) {
    for (int k = 0; k + 1 < n; ++k) {
      int i = order[k], j = order[k + 1];
      bool sig = a.significance->significant(i, j);
      double x1 = x_of(a.scale.jod[i]), x2 = x_of(a.scale.jod[j]);
      double peak = axis_y - 50.0;
      svg << "<path d=\"M " << fmt2(x1) << " " << fmt2(axis_y) << " L "
          << fmt2((x1 + x2) / 2) << " " << fmt2(peak) << " L " << fmt2(x2)
          << " " << fmt2(axis_y) << "\" fill=\"none\" stroke=\""
          << (sig ? "steelblue" : "crimson") << "\""
          << (sig ? "" : " stroke-dasharray=\"5,4\"") << "/>\n";
    }
  }
  for (int k = 0; k < n; ++k) {
    int i = order[k];
    double x = x_of(a.scale.jod[i]);
    svg << "<circle cx=\"" << fmt2(x) << "\" cy=\"" << fmt2(axis_y)
        << "\" r=\"4\" fill=\"crimson\"/>\n";
    svg << "<text x=\"" << fmt2(x) << "\" y=\"" << fmt2(axis_y + 20)
        << "\" font-size=\"10\" text-anchor=\"middle\">" << a.conditions[i]
        << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

std::string significance_edge_list(const Analysis& a) {
  std::ostringstream out;
  out << "condition_a,condition_b,p_value,significant\n";
  if (!a.significance) return out.str();
  const int n = static_cast<int>(a.conditions.size());
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      out << a.conditions[i] << ',' << a.conditions[j] << ','
          << fmt(a.significance->p_values(i, j)) << ','
          << (a.significance->significant(i, j) ? "true" : "false") << '\n';
  return out.str();
}

std::string scale_csv(const Analysis& a) {
  std::ostringstream out;
  out << "condition,jod,ci_low,ci_high\n";
  for (size_t i = 0; i < a.conditions.size(); ++i) {
    out << a.conditions[i] << ',' << fmt(a.scale.jod[i]) << ',';
    if (a.bootstrap && i > 0)
      out << fmt(a.bootstrap->ci_low[i]) << ',' << fmt(a.bootstrap->ci_high[i]);
    else
      out << ',';
    out << '\n';
  }
  return out.str();
}

}  // namespace pwscale
