#include "collabrep/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "collabrep/crc.hpp"

namespace collabrep {

namespace {

// Per-class minimum distance from any query column to any training column.
std::vector<double> min_class_distances(const LabeledDataset& train, const Eigen::Ref<const Eigen::MatrixXd>& queries,
                                        Execution execution) {
  const int classes = train.num_classes();
  const Eigen::MatrixXd& X = train.features();
  const auto& labels = train.labels();
  const Index n = X.cols();
  const Index m = queries.cols();
  std::vector<double> best(static_cast<std::size_t>(classes), std::numeric_limits<double>::infinity());

  auto scan_query = [&](Index q, std::vector<double>& into) {
    for (Index j = 0; j < n; ++j) {
      const double dist = (queries.col(q) - X.col(j)).norm();
      double& slot = into[static_cast<std::size_t>(labels[static_cast<std::size_t>(j)] - 1)];
      if (dist < slot) slot = dist;
    }
  };

  if (execution == Execution::serial || m == 1) {
    for (Index q = 0; q < m; ++q) scan_query(q, best);
    return best;
  }
#pragma omp parallel
  {
    std::vector<double> local(static_cast<std::size_t>(classes), std::numeric_limits<double>::infinity());
#pragma omp for schedule(static) nowait
    for (Index q = 0; q < m; ++q) scan_query(q, local);
#pragma omp critical(collabrep_mpd_merge)
    for (int c = 0; c < classes; ++c) {
      best[static_cast<std::size_t>(c)] = std::min(best[static_cast<std::size_t>(c)], local[static_cast<std::size_t>(c)]);
    }
  }
  return best;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) {
    while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) field.pop_back();
    while (!field.empty() && field.front() == ' ') field.erase(field.begin());
    out.push_back(field);
  }
  return out;
}

}  // namespace

MpdClassifier::MpdClassifier(const LabeledDataset& train) : train_(train) {}

Prediction MpdClassifier::classify(const Eigen::Ref<const Eigen::VectorXd>& y) const {
  return classify_set(y, Execution::serial);
}

Prediction MpdClassifier::classify_set(const Eigen::Ref<const Eigen::MatrixXd>& queries, Execution execution) const {
  if (queries.cols() < 1) throw InvalidArgument("mpd: empty query set");
  if (queries.rows() != train_.dim()) {
    throw InvalidArgument("mpd: query dimension " + std::to_string(queries.rows()) + " does not match " +
                          std::to_string(train_.dim()));
  }
  if (!queries.allFinite()) throw InvalidArgument("mpd: non-finite query");
  Prediction out;
  out.residuals = min_class_distances(train_, queries, execution);
  out.label = argmin_class(out.residuals);
  return out;
}

Prediction mpd_classify(const LabeledDataset& train, const Eigen::Ref<const Eigen::MatrixXd>& queries,
                        Execution execution) {
  return MpdClassifier(train).classify_set(queries, execution);
}

double accuracy(std::span<const int> predicted, std::span<const int> truth) {
  if (predicted.size() != truth.size()) throw InvalidArgument("accuracy: length mismatch");
  if (predicted.empty()) throw InvalidArgument("accuracy: no predictions");
  std::size_t hits = 0;
  for (std::size_t k = 0; k < predicted.size(); ++k) hits += predicted[k] == truth[k] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

double rank_k_accuracy(std::span<const std::vector<double>> residuals, std::span<const int> truth, int k) {
  if (residuals.size() != truth.size()) throw InvalidArgument("rank_k_accuracy: length mismatch");
  if (residuals.empty()) throw InvalidArgument("rank_k_accuracy: no predictions");
  std::size_t hits = 0;
  for (std::size_t q = 0; q < residuals.size(); ++q) {
    const auto& r = residuals[q];
    if (k < 1 || k > static_cast<int>(r.size())) throw InvalidArgument("rank_k_accuracy: k outside 1..L");
    const int t = truth[q];
    if (t < 1 || t > static_cast<int>(r.size())) throw InvalidArgument("rank_k_accuracy: truth outside 1..L");
    // Rank of the true class with lowest-index tie-break.
    int ahead = 0;
    const double own = r[static_cast<std::size_t>(t - 1)];
    for (int c = 1; c <= static_cast<int>(r.size()); ++c) {
      const double v = r[static_cast<std::size_t>(c - 1)];
      if (v < own || (v == own && c < t)) ++ahead;
    }
    if (ahead < k) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(residuals.size());
}

double err(double acc_l1, double acc_l2) {
  if (!(acc_l1 >= 0.0 && acc_l1 <= 1.0) || !(acc_l2 >= 0.0 && acc_l2 <= 1.0)) {
    throw InvalidArgument("err: accuracies must lie in [0, 1]");
  }
  if (acc_l1 == 1.0) throw InvalidArgument("err: undefined when the l1 accuracy is 1");
  return (acc_l2 - acc_l1) / (1.0 - acc_l1);
}

double fdr(double mpd_accuracy, int num_classes) {
  if (num_classes < 2) throw InvalidArgument("fdr: needs at least 2 classes");
  if (!(mpd_accuracy >= 0.0 && mpd_accuracy <= 1.0)) throw InvalidArgument("fdr: accuracy must lie in [0, 1]");
  return mpd_accuracy * static_cast<double>(num_classes);
}

SelectionScores selection_scores(double fdr_value, Index d, Index n) {
  if (d < 1 || n < 1) throw InvalidArgument("selection_score: d and n must be >= 1");
  const auto dd = static_cast<double>(d);
  const auto nn = static_cast<double>(n);
  return {fdr_value * dd, fdr_value / nn, fdr_value * dd / nn};
}

double selection_score(double fdr_value, Index d, Index n) { return selection_scores(fdr_value, d, n).fdr_d_over_n; }

std::string_view to_string(Regularization value) {
  return value == Regularization::non_sparse ? "non-sparse" : "sparse";
}

Regularization recommend(double score, double threshold) {
  return score >= threshold ? Regularization::non_sparse : Regularization::sparse;
}

SelectionReport make_selection_report(Index d, Index n, int num_classes, double mpd_accuracy,
                                      std::optional<std::pair<double, double>> crc_accuracies, double threshold) {
  SelectionReport report;
  report.d = d;
  report.n = n;
  report.num_classes = num_classes;
  report.mpd_accuracy = mpd_accuracy;
  report.fdr = fdr(mpd_accuracy, num_classes);
  const SelectionScores scores = selection_scores(report.fdr, d, n);
  report.score_fdr_d = scores.fdr_d;
  report.score_fdr_over_n = scores.fdr_over_n;
  report.score = scores.fdr_d_over_n;
  report.threshold = threshold;
  report.recommendation = recommend(report.score, threshold);
  if (crc_accuracies) {
    report.acc_l1 = crc_accuracies->first;
    report.acc_l2 = crc_accuracies->second;
    if (crc_accuracies->first < 1.0) report.err = err(crc_accuracies->first, crc_accuracies->second);
  }
  return report;
}

SelectionReport build_selection_report(const LabeledDataset& train, const LabeledDataset& test,
                                       const SelectionOptions& options) {
  if (train.dim() != test.dim()) throw InvalidArgument("select: train and test dimensions differ");
  if (train.num_classes() != test.num_classes()) throw InvalidArgument("select: train and test class counts differ");
  const MpdClassifier mpd(train);
  const double mpd_acc = batch_classify(mpd, test, options.execution).accuracy;

  std::optional<std::pair<double, double>> crc;
  if (options.with_err) {
    LassoOptions lasso = options.lasso;
    lasso.lambda = options.lambda;
    const double acc_l1 = batch_classify(CrcL1Classifier(train, lasso), test, options.execution).accuracy;
    const double acc_l2 = batch_classify(CrcL2Model::fit(train, options.lambda), test, options.execution).accuracy;
    crc = std::make_pair(acc_l1, acc_l2);
  }
  return make_selection_report(train.dim(), train.size(), train.num_classes(), mpd_acc, crc, options.threshold);
}

TrendFit fit_trend(std::span<const double> scores, std::span<const double> errs) {
  if (scores.size() != errs.size()) throw InvalidArgument("fit_trend: length mismatch");
  if (scores.size() < 2) throw InvalidArgument("fit_trend: needs at least 2 points");
  const auto count = static_cast<double>(scores.size());
  double mean_x = 0.0;
  double mean_y = 0.0;
  for (std::size_t k = 0; k < scores.size(); ++k) {
    mean_x += scores[k];
    mean_y += errs[k];
  }
  mean_x /= count;
  mean_y /= count;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t k = 0; k < scores.size(); ++k) {
    sxx += (scores[k] - mean_x) * (scores[k] - mean_x);
    sxy += (scores[k] - mean_x) * (errs[k] - mean_y);
  }
  if (!(sxx > 0.0)) throw InvalidArgument("fit_trend: all scores are equal, the line is undetermined");
  TrendFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = mean_y - fit.slope * mean_x;
  for (std::size_t k = 0; k < scores.size(); ++k) {
    const double e = errs[k] - (fit.intercept + fit.slope * scores[k]);
    fit.sse += e * e;
  }
  return fit;
}

std::vector<TableRow> load_table_rows(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("table: cannot open '" + path.string() + "'");
  std::string line;
  std::size_t line_no = 0;
  std::vector<TableRow> rows;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto f = split_csv_line(line);
    if (!header_seen) {
      header_seen = true;
      const std::vector<std::string> expected{"name", "starred", "d", "classes", "n_per_class", "n", "mpd", "crc_l1",
                                              "crc_l2"};
      if (f != expected) throw DataError("table: unexpected header in '" + path.string() + "'");
      continue;
    }
    if (f.size() != 9) throw DataError("table line " + std::to_string(line_no) + ": expected 9 fields");
    try {
      TableRow row;
      row.name = f[0];
      row.starred = f[1] == "1" || f[1] == "true" || f[1] == "yes";
      row.d = std::stoll(f[2]);
      row.num_classes = std::stoi(f[3]);
      row.per_class = f[4];
      row.n = std::stoll(f[5]);
      row.mpd_accuracy = std::stod(f[6]);
      row.acc_l1 = std::stod(f[7]);
      row.acc_l2 = std::stod(f[8]);
      rows.push_back(row);
    } catch (const std::logic_error&) {
      throw DataError("table line " + std::to_string(line_no) + ": non-numeric statistic");
    }
  }
  if (rows.empty()) throw DataError("table: '" + path.string() + "' has no rows");
  return rows;
}

SelectionReport report_for_row(const TableRow& row, double threshold) {
  return make_selection_report(row.d, row.n, row.num_classes, row.mpd_accuracy,
                               std::make_pair(row.acc_l1, row.acc_l2), threshold);
}

}  // namespace collabrep
