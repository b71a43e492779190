#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "collabrep/classifier.hpp"
#include "collabrep/dataset.hpp"
#include "collabrep/execution.hpp"
#include "collabrep/solvers.hpp"

namespace collabrep {

// Minimum point-wise distance classifier: the dissimilarity to class i is the
// smallest Euclidean distance between any query column and any training
// column of class i.
class MpdClassifier final : public Classifier {
 public:
  explicit MpdClassifier(const LabeledDataset& train);

  Prediction classify(const Eigen::Ref<const Eigen::VectorXd>& y) const override;
  Prediction classify_set(const Eigen::Ref<const Eigen::MatrixXd>& queries,
                          Execution execution = Execution::parallel) const;
  Index dim() const override { return train_.dim(); }
  int num_classes() const override { return train_.num_classes(); }

 private:
  LabeledDataset train_;
};

Prediction mpd_classify(const LabeledDataset& train, const Eigen::Ref<const Eigen::MatrixXd>& queries,
                        Execution execution = Execution::parallel);

double accuracy(std::span<const int> predicted, std::span<const int> truth);
double rank_k_accuracy(std::span<const std::vector<double>> residuals, std::span<const int> truth, int k);

// Error reduction rate of CRC_l2 over CRC_l1: (acc_l2 - acc_l1) / (1 - acc_l1).
double err(double acc_l1, double acc_l2);

// MPD accuracy over chance accuracy 1/L.
double fdr(double mpd_accuracy, int num_classes);

// The candidate scores compared when choosing between sparse and non-sparse coding.
struct SelectionScores {
  double fdr_d = 0.0;
  double fdr_over_n = 0.0;
  double fdr_d_over_n = 0.0;
};
SelectionScores selection_scores(double fdr_value, Index d, Index n);
double selection_score(double fdr_value, Index d, Index n);

enum class Regularization { sparse, non_sparse };
std::string_view to_string(Regularization value);

inline constexpr double kDefaultThreshold = 5.0;

// Non-sparse iff score >= threshold.
Regularization recommend(double score, double threshold = kDefaultThreshold);

struct SelectionReport {
  Index d = 0;
  Index n = 0;
  int num_classes = 0;
  double mpd_accuracy = 0.0;
  double fdr = 0.0;
  double score_fdr_d = 0.0;
  double score_fdr_over_n = 0.0;
  double score = 0.0;
  std::optional<double> acc_l1;
  std::optional<double> acc_l2;
  std::optional<double> err;
  double threshold = kDefaultThreshold;
  Regularization recommendation = Regularization::sparse;
};

// Assembles a report from dataset statistics. `crc_accuracies` = (CRC_l1, CRC_l2)
// top-1 accuracies; err stays empty when CRC_l1 is perfect.
SelectionReport make_selection_report(Index d, Index n, int num_classes, double mpd_accuracy,
                                      std::optional<std::pair<double, double>> crc_accuracies = std::nullopt,
                                      double threshold = kDefaultThreshold);

struct SelectionOptions {
  double threshold = kDefaultThreshold;
  bool with_err = false;
  double lambda = 1e-4;
  LassoOptions lasso{};
  Execution execution = Execution::parallel;
};

// Runs MPD on (train, test) for FDR and, with with_err, both CRC models for ERR.
SelectionReport build_selection_report(const LabeledDataset& train, const LabeledDataset& test,
                                       const SelectionOptions& options);

struct TrendFit {
  double slope = 0.0;
  double intercept = 0.0;
  double sse = 0.0;
};

// Least-squares line of errs against scores.
TrendFit fit_trend(std::span<const double> scores, std::span<const double> errs);

// One row of raw statistics, as tabulated for a benchmark dataset.
struct TableRow {
  std::string name;
  bool starred = false;
  Index d = 0;
  int num_classes = 0;
  std::string per_class;  // printed n_i, may be approximate ("~32")
  Index n = 0;
  double mpd_accuracy = 0.0;
  double acc_l1 = 0.0;
  double acc_l2 = 0.0;
};

// CSV columns: name,starred,d,classes,n_per_class,n,mpd,crc_l1,crc_l2
std::vector<TableRow> load_table_rows(const std::filesystem::path& path);
SelectionReport report_for_row(const TableRow& row, double threshold = kDefaultThreshold);

}  // namespace collabrep
