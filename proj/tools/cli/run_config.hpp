#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "collabrep/dataset.hpp"

namespace collabrep::cli {

// Settings shared by all commands. A JSON config file fills these first and
// command-line flags override individual fields.
struct RunConfig {
  std::string command;

  // Data: a CSV file or, when `data` is empty, a synthetic spec.
  std::string data;
  std::string label_column = "label";
  SynthSpec synth{5, 50, 40, 8.0, 0};
  bool normalize = false;

  // Split: train_per_class columns per class go to the training set.
  Index train_per_class = 20;
  int splits = 1;
  std::uint64_t seed = 0;

  std::string model = "crc-l2";
  std::vector<std::string> models{"mpd", "crc-l1", "crc-l2", "dl-nscr"};
  double lambda = 1e-4;
  // Coding lambda at classification time for dl-nscr; defaults to lambda.
  std::optional<double> classify_lambda;
  double lasso_tol = 1e-6;
  int lasso_max_iter = 100000;

  std::vector<Index> block_sizes;
  int max_iters = 50;
  double rel_tol = 1e-6;
  std::string a_step = "block-confusion";

  // Set-based queries: test columns of each class are cut into consecutive
  // sets of this size (0 = single-sample queries).
  Index set_size = 0;
  std::string set_rule = "confusion-energy";
  int rank_k = 0;

  std::string from_table;
  bool include_starred = false;
  bool with_err = false;
  double threshold = 5.0;

  std::string dictionary;
  std::string out;  // JSON report
  std::string data_out;
  std::string csv_out;
  std::string dict_out;
  int threads = 0;
};

nlohmann::json to_json(const RunConfig& config);
// Unknown keys and wrong types are rejected with InvalidArgument.
void merge_json(RunConfig& config, const nlohmann::json& values);
RunConfig load_config_file(const std::string& path);

// Cross-field checks for the chosen command.
void validate(const RunConfig& config);

}  // namespace collabrep::cli
