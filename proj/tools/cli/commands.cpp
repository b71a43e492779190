#include "cli/commands.hpp"

#include <chrono>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <map>
#include <memory>
#include <numeric>
#include <sstream>

#include <omp.h>

#include "collabrep/atomic_file.hpp"
#include "collabrep/crc.hpp"
#include "collabrep/dictionary_io.hpp"
#include "collabrep/dictlearn.hpp"
#include "collabrep/metrics.hpp"
#include "collabrep/report_io.hpp"

namespace collabrep::cli {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

nlohmann::json header(const RunConfig& config) {
  return {{"command", config.command}, {"version", COLLABREP_VERSION}, {"config", to_json(config)}};
}

void emit(const RunConfig& config, const nlohmann::json& report) {
  if (config.out.empty()) return;
  write_atomically(config.out, [&](std::ostream& out) { out << report.dump(2) << '\n'; });
}

// FNV-1a over labels and feature bit patterns; identifies a partition.
std::string dataset_hash(const LabeledDataset& data) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&](const void* bytes, std::size_t count) {
    const auto* p = static_cast<const unsigned char*>(bytes);
    for (std::size_t k = 0; k < count; ++k) {
      h ^= p[k];
      h *= 1099511628211ull;
    }
  };
  for (int label : data.labels()) mix(&label, sizeof label);
  mix(data.features().data(), static_cast<std::size_t>(data.features().size()) * sizeof(double));
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << h;
  return s.str();
}

LabeledDataset load_data(const RunConfig& config) {
  LabeledDataset data = config.data.empty() ? synth_gaussian(config.synth) : load_csv(config.data, config.label_column);
  return config.normalize ? normalize_samples(data) : data;
}

nlohmann::json describe(const RunConfig& config, const LabeledDataset& data) {
  return {{"source", config.data.empty() ? "synthetic" : config.data},
          {"dim", data.dim()},
          {"size", data.size()},
          {"num_classes", data.num_classes()},
          {"hash", dataset_hash(data)}};
}

std::vector<Index> resolve_block_sizes(const RunConfig& config, int num_classes) {
  if (config.block_sizes.size() == 1) {
    return std::vector<Index>(static_cast<std::size_t>(num_classes), config.block_sizes.front());
  }
  if (config.block_sizes.size() != static_cast<std::size_t>(num_classes)) {
    throw InvalidArgument("--block-sizes needs 1 or " + std::to_string(num_classes) + " entries");
  }
  return config.block_sizes;
}

DlConfig dl_config(const RunConfig& config, int num_classes) {
  DlConfig dl;
  dl.lambda1 = config.lambda;
  dl.block_sizes = resolve_block_sizes(config, num_classes);
  dl.max_iters = config.max_iters;
  dl.rel_tol = config.rel_tol;
  dl.seed = config.seed;
  dl.coefficient_rule =
      config.a_step == "selector-stack" ? CoefficientRule::selector_stack : CoefficientRule::block_confusion;
  return dl;
}

SetRule set_rule(const RunConfig& config) {
  return config.set_rule == "normalized" ? SetRule::normalized : SetRule::confusion_energy;
}

struct Trained {
  std::unique_ptr<Classifier> classifier;
  nlohmann::json info = nlohmann::json::object();
};

Trained train_model(const std::string& model, const LabeledDataset& train, const RunConfig& config) {
  Trained out;
  if (model == "mpd") {
    out.classifier = std::make_unique<MpdClassifier>(train);
  } else if (model == "crc-l2") {
    out.classifier = std::make_unique<CrcL2Model>(CrcL2Model::fit(train, config.lambda));
  } else if (model == "crc-l1") {
    LassoOptions lasso;
    lasso.lambda = config.lambda;
    lasso.tol = config.lasso_tol;
    lasso.max_iter = config.lasso_max_iter;
    out.classifier = std::make_unique<CrcL1Classifier>(train, lasso);
  } else if (model == "dl-nscr") {
    const DlFit fit = fit_dlnscr(train, dl_config(config, train.num_classes()));
    out.info = {{"iterations", fit.trace.iterations},
                {"converged", fit.trace.converged},
                {"singular_fallbacks", fit.trace.singular_fallbacks},
                {"final_objective", fit.trace.objective.empty() ? 0.0 : fit.trace.objective.back()}};
    out.classifier =
        std::make_unique<DlnscrClassifier>(fit.dictionary, config.classify_lambda.value_or(config.lambda));
  } else {
    throw InvalidArgument("unknown model '" + model + "'");
  }
  return out;
}

struct Scored {
  double accuracy = 0.0;
  std::optional<double> rank_k;
  std::size_t queries = 0;
  std::size_t non_converged = 0;
};

// Test columns of each class cut into consecutive sets of `size` (the last
// set of a class may be shorter).
Scored score_sets(const Classifier& classifier, const LabeledDataset& test, Index size, const RunConfig& config) {
  std::vector<std::vector<Index>> sets;
  std::vector<int> truths;
  for (int c = 1; c <= test.num_classes(); ++c) {
    const auto& cols = test.class_columns(c);
    for (std::size_t at = 0; at < cols.size(); at += static_cast<std::size_t>(size)) {
      const std::size_t end = std::min(cols.size(), at + static_cast<std::size_t>(size));
      sets.emplace_back(cols.begin() + static_cast<std::ptrdiff_t>(at), cols.begin() + static_cast<std::ptrdiff_t>(end));
      truths.push_back(c);
    }
  }
  std::vector<Prediction> predictions(sets.size());
  const auto* mpd = dynamic_cast<const MpdClassifier*>(&classifier);
  const auto* dl = dynamic_cast<const DlnscrClassifier*>(&classifier);
  const SetRule rule = set_rule(config);
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
  for (std::size_t s = 0; s < sets.size(); ++s) {
    try {
      Eigen::MatrixXd Y(test.dim(), static_cast<Index>(sets[s].size()));
      for (std::size_t k = 0; k < sets[s].size(); ++k) Y.col(static_cast<Index>(k)) = test.features().col(sets[s][k]);
      predictions[s] = mpd ? mpd->classify_set(Y, Execution::serial) : dl->classify_set(Y, rule);
    } catch (...) {
#pragma omp critical(collabrep_cli_sets)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  std::vector<int> labels;
  std::vector<std::vector<double>> residuals;
  for (const auto& p : predictions) {
    labels.push_back(p.label);
    residuals.push_back(p.residuals);
  }
  Scored out;
  out.accuracy = accuracy(labels, truths);
  if (config.rank_k > 0) out.rank_k = rank_k_accuracy(residuals, truths, config.rank_k);
  out.queries = sets.size();
  return out;
}

Scored score(const Classifier& classifier, const LabeledDataset& test, const RunConfig& config, bool sets) {
  if (sets) return score_sets(classifier, test, config.set_size, config);
  const BatchResult batch = batch_classify(classifier, test);
  Scored out;
  out.accuracy = batch.accuracy;
  if (config.rank_k > 0) out.rank_k = batch.rank_k_accuracy(config.rank_k);
  out.queries = batch.predictions.size();
  out.non_converged = batch.non_converged;
  return out;
}

std::uint64_t split_seed(const RunConfig& config, int index) { return config.seed + static_cast<std::uint64_t>(index); }

nlohmann::json eval_with_dictionary(const RunConfig& config, const LabeledDataset& data, std::ostream& log) {
  const StoredDictionary stored = load_dictionary(config.dictionary);
  const double lambda = config.classify_lambda.value_or(stored.lambda1);
  const DlnscrClassifier classifier(stored.dictionary, lambda);
  if (data.dim() != classifier.dim()) throw DataError("eval: data dimension does not match the dictionary");

  // Class ids are matched through class names recorded at fit time.
  std::vector<std::string> names;
  if (stored.metadata.contains("class_names")) names = stored.metadata["class_names"].get<std::vector<std::string>>();
  std::map<std::string, int> id_of;
  for (std::size_t k = 0; k < names.size(); ++k) id_of[names[k]] = static_cast<int>(k) + 1;
  std::vector<int> truths;
  truths.reserve(static_cast<std::size_t>(data.size()));
  for (int label : data.labels()) {
    const std::string& name = data.class_names().empty() ? std::to_string(label)
                                                         : data.class_names()[static_cast<std::size_t>(label - 1)];
    const auto it = id_of.find(name);
    if (it == id_of.end()) throw DataError("eval: class '" + name + "' is not in the dictionary");
    truths.push_back(it->second);
  }
  const auto start = Clock::now();
  const BatchResult batch = batch_classify(classifier, data.features(), truths);
  const double test_seconds = seconds_since(start);

  nlohmann::json report = header(config);
  report["dataset"] = describe(config, data);
  report["dictionary"] = {{"path", config.dictionary}, {"lambda1", stored.lambda1}, {"classify_lambda", lambda},
                          {"metadata", stored.metadata}};
  report["accuracy"] = batch.accuracy;
  report["mean_accuracy"] = batch.accuracy;
  if (config.rank_k > 0) report["rank_k_accuracy"] = batch.rank_k_accuracy(config.rank_k);
  report["timing"] = {{"test_seconds_per_query", test_seconds / static_cast<double>(data.size())}};
  log << "dl-nscr (stored dictionary): accuracy " << batch.accuracy << " on " << data.size() << " samples\n";
  return report;
}

}  // namespace

nlohmann::json strip_timing(nlohmann::json report) {
  if (report.is_object()) {
    report.erase("timing");
    for (auto& [_, value] : report.items()) value = strip_timing(value);
  } else if (report.is_array()) {
    for (auto& value : report) value = strip_timing(value);
  }
  return report;
}

nlohmann::json cmd_synth(const RunConfig& config, std::ostream& log) {
  const LabeledDataset data = synth_gaussian(config.synth);
  save_csv(data, config.data_out);
  nlohmann::json report = header(config);
  report["dataset"] = {{"dim", data.dim()},
                       {"size", data.size()},
                       {"num_classes", data.num_classes()},
                       {"hash", dataset_hash(data)}};
  log << "wrote " << data.size() << " samples (" << data.num_classes() << " classes, d=" << data.dim() << ") to "
      << config.data_out << '\n';
  emit(config, report);
  return report;
}

nlohmann::json cmd_eval(const RunConfig& config, std::ostream& log) {
  const auto start = Clock::now();
  const LabeledDataset data = load_data(config);
  if (!config.dictionary.empty()) {
    nlohmann::json report = eval_with_dictionary(config, data, log);
    emit(config, report);
    return report;
  }
  const bool sets = config.set_size > 0;
  nlohmann::json report = header(config);
  report["dataset"] = describe(config, data);
  report["model"] = config.model;
  nlohmann::json per_split = nlohmann::json::array();
  double acc_sum = 0.0;
  double rank_sum = 0.0;
  for (int s = 0; s < config.splits; ++s) {
    const std::uint64_t seed = split_seed(config, s);
    const auto [train, test] = split(data, config.train_per_class, seed);
    const auto t0 = Clock::now();
    const Trained model = train_model(config.model, train, config);
    const double train_seconds = seconds_since(t0);
    const auto t1 = Clock::now();
    const Scored result = score(*model.classifier, test, config, sets);
    const double test_seconds = seconds_since(t1);

    nlohmann::json entry{{"index", s},
                         {"seed", seed},
                         {"train_size", train.size()},
                         {"test_size", test.size()},
                         {"train_hash", dataset_hash(train)},
                         {"test_hash", dataset_hash(test)},
                         {"queries", result.queries},
                         {"accuracy", result.accuracy},
                         {"non_converged", result.non_converged},
                         {"model_info", model.info},
                         {"timing",
                          {{"train_seconds", train_seconds},
                           {"test_seconds_per_query", test_seconds / static_cast<double>(result.queries)}}}};
    if (result.rank_k) {
      entry["rank_k_accuracy"] = *result.rank_k;
      rank_sum += *result.rank_k;
    }
    acc_sum += result.accuracy;
    per_split.push_back(entry);
    log << config.model << " split " << s << " (seed " << seed << "): accuracy " << result.accuracy << '\n';
  }
  report["splits"] = per_split;
  report["mean_accuracy"] = acc_sum / config.splits;
  if (config.rank_k > 0) {
    report["rank_k"] = config.rank_k;
    report["mean_rank_k_accuracy"] = rank_sum / config.splits;
  }
  report["timing"] = {{"total_seconds", seconds_since(start)}};
  log << config.model << " mean accuracy over " << config.splits << " split(s): " << report["mean_accuracy"].get<double>()
      << '\n';
  emit(config, report);
  return report;
}

nlohmann::json cmd_select(const RunConfig& config, std::ostream& log) {
  nlohmann::json report = header(config);
  if (!config.from_table.empty()) {
    const std::vector<TableRow> rows = load_table_rows(config.from_table);
    std::vector<SelectionReport> reports;
    nlohmann::json entries = nlohmann::json::array();
    std::vector<double> score_d_over_n, score_over_n, score_d, errs;
    int considered = 0;
    int agree = 0;
    for (const TableRow& row : rows) {
      const SelectionReport r = report_for_row(row, config.threshold);
      reports.push_back(r);
      nlohmann::json entry = to_json(r);
      entry["name"] = row.name;
      entry["starred"] = row.starred;
      if (r.err) {
        const bool agrees = (r.recommendation == Regularization::non_sparse) == (*r.err > 0.0);
        entry["agrees_with_err_sign"] = agrees;
        if (!row.starred) {
          ++considered;
          agree += agrees ? 1 : 0;
        }
        if (!row.starred || config.include_starred) {
          score_d_over_n.push_back(r.score);
          score_over_n.push_back(r.score_fdr_over_n);
          score_d.push_back(r.score_fdr_d);
          errs.push_back(*r.err);
        }
      }
      entries.push_back(entry);
    }
    report["rows"] = entries;
    report["agreement"] = {{"rows", considered}, {"agree", agree}, {"threshold", config.threshold}};
    report["trend"] = {{"points", errs.size()},
                       {"fdr_d_over_n", to_json(fit_trend(score_d_over_n, errs))},
                       {"fdr_over_n", to_json(fit_trend(score_over_n, errs))},
                       {"fdr_d", to_json(fit_trend(score_d, errs))}};
    if (!config.csv_out.empty()) {
      write_atomically(config.csv_out, [&](std::ostream& out) { write_table_csv(out, rows, reports); });
    }
    log << "recommendation matches the ERR sign on " << agree << '/' << considered << " unstarred rows\n";
  } else {
    const LabeledDataset data = load_data(config);
    const auto [train, test] = split(data, config.train_per_class, config.seed);
    SelectionOptions options;
    options.threshold = config.threshold;
    options.with_err = config.with_err;
    options.lambda = config.lambda;
    options.lasso.tol = config.lasso_tol;
    options.lasso.max_iter = config.lasso_max_iter;
    const auto start = Clock::now();
    const SelectionReport r = build_selection_report(train, test, options);
    report["dataset"] = describe(config, data);
    report["train_hash"] = dataset_hash(train);
    report["report"] = to_json(r);
    report["timing"] = {{"seconds", seconds_since(start)}};
    log << "S = FDR*d/n = " << r.score << " -> " << to_string(r.recommendation) << '\n';
  }
  emit(config, report);
  return report;
}

nlohmann::json cmd_compare(const RunConfig& config, std::ostream& log) {
  const LabeledDataset data = load_data(config);
  nlohmann::json report = header(config);
  report["dataset"] = describe(config, data);
  const bool sets = config.set_size > 0;
  if (sets) {
    for (const auto& m : config.models) {
      if (m != "mpd" && m != "dl-nscr") throw InvalidArgument("compare: set queries are supported for mpd and dl-nscr");
    }
  }

  struct Row {
    std::vector<double> accuracies;
    double train_seconds = 0.0;
    double test_seconds = 0.0;
    std::size_t queries = 0;
  };
  std::vector<Row> rows(config.models.size());
  nlohmann::json hashes = nlohmann::json::array();
  for (int s = 0; s < config.splits; ++s) {
    const auto [train, test] = split(data, config.train_per_class, split_seed(config, s));
    hashes.push_back({{"seed", split_seed(config, s)}, {"train_hash", dataset_hash(train)}});
    for (std::size_t m = 0; m < config.models.size(); ++m) {
      const auto t0 = Clock::now();
      const Trained model = train_model(config.models[m], train, config);
      rows[m].train_seconds += seconds_since(t0);
      const auto t1 = Clock::now();
      const Scored result = score(*model.classifier, test, config, sets);
      rows[m].test_seconds += seconds_since(t1);
      rows[m].queries += result.queries;
      rows[m].accuracies.push_back(result.accuracy);
    }
  }

  nlohmann::json table = nlohmann::json::array();
  std::ostringstream csv;
  csv << "model,mean_accuracy,train_seconds,test_ms_per_query\n";
  for (std::size_t m = 0; m < config.models.size(); ++m) {
    const Row& row = rows[m];
    const double mean = std::accumulate(row.accuracies.begin(), row.accuracies.end(), 0.0) /
                        static_cast<double>(row.accuracies.size());
    const double train_s = row.train_seconds / config.splits;
    const double test_ms = 1e3 * row.test_seconds / static_cast<double>(row.queries);
    table.push_back({{"model", config.models[m]},
                     {"accuracies", row.accuracies},
                     {"mean_accuracy", mean},
                     {"timing", {{"train_seconds", train_s}, {"test_ms_per_query", test_ms}}}});
    csv << config.models[m] << ',' << mean << ',' << train_s << ',' << test_ms << '\n';
    log << std::left << std::setw(8) << config.models[m] << " accuracy " << std::fixed << std::setprecision(4) << mean
        << "  train " << std::setprecision(3) << train_s << " s  test " << test_ms << " ms/query\n";
    log.unsetf(std::ios::floatfield);
  }
  report["splits"] = hashes;
  report["models"] = table;
  if (!config.csv_out.empty()) write_atomically(config.csv_out, [&](std::ostream& out) { out << csv.str(); });
  emit(config, report);
  return report;
}

nlohmann::json cmd_fit_dict(const RunConfig& config, std::ostream& log) {
  const LabeledDataset data = load_data(config);
  const auto start = Clock::now();
  const DlFit fit = fit_dlnscr(data, dl_config(config, data.num_classes()));
  const double fit_seconds = seconds_since(start);

  std::vector<std::string> names = data.class_names();
  if (names.empty()) {
    for (int c = 1; c <= data.num_classes(); ++c) names.push_back(std::to_string(c));
  }
  StoredDictionary stored;
  stored.dictionary = fit.dictionary;
  stored.lambda1 = config.lambda;
  stored.metadata = {{"class_names", names},
                     {"seed", config.seed},
                     {"a_step", config.a_step},
                     {"iterations", fit.trace.iterations},
                     {"converged", fit.trace.converged},
                     {"train_hash", dataset_hash(data)},
                     {"version", COLLABREP_VERSION}};
  save_dictionary(config.dict_out, stored);

  nlohmann::json report = header(config);
  report["dataset"] = describe(config, data);
  report["dictionary"] = {{"path", config.dict_out}, {"dim", fit.dictionary.dim()}, {"atoms", fit.dictionary.size()},
                          {"block_sizes", fit.dictionary.block_sizes()}};
  report["trace"] = to_json(fit.trace);
  report["timing"] = {{"fit_seconds", fit_seconds}};
  log << "dictionary " << fit.dictionary.dim() << 'x' << fit.dictionary.size() << ", " << fit.trace.iterations
      << " iteration(s), " << (fit.trace.converged ? "converged" : "not converged") << ", written to "
      << config.dict_out << '\n';
  emit(config, report);
  return report;
}

nlohmann::json run_command(const RunConfig& config, std::ostream& log) {
  validate(config);
  if (config.threads > 0) omp_set_num_threads(config.threads);
  if (config.command == "synth") return cmd_synth(config, log);
  if (config.command == "eval") return cmd_eval(config, log);
  if (config.command == "select") return cmd_select(config, log);
  if (config.command == "compare") return cmd_compare(config, log);
  return cmd_fit_dict(config, log);
}

}  // namespace collabrep::cli
