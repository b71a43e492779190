#include "cli/run_config.hpp"

#include <fstream>
#include <set>

namespace collabrep::cli {

namespace {

const std::set<std::string> kModels{"mpd", "crc-l1", "crc-l2", "dl-nscr"};

template <typename T>
void take(const nlohmann::json& values, const char* key, T& into) {
  const auto it = values.find(key);
  if (it == values.end()) return;
  try {
    into = it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw InvalidArgument(std::string("config: '") + key + "' has the wrong type");
  }
}

}  // namespace

nlohmann::json to_json(const RunConfig& c) {
  nlohmann::json synth{{"num_classes", c.synth.num_classes},
                       {"dim", c.synth.dim},
                       {"samples_per_class", c.synth.samples_per_class},
                       {"class_separation", c.synth.class_separation},
                       {"seed", c.synth.seed}};
  return {
      {"command", c.command},
      {"data", c.data},
      {"label_column", c.label_column},
      {"synth", synth},
      {"normalize", c.normalize},
      {"train_per_class", c.train_per_class},
      {"splits", c.splits},
      {"seed", c.seed},
      {"model", c.model},
      {"models", c.models},
      {"lambda", c.lambda},
      {"classify_lambda", c.classify_lambda ? nlohmann::json(*c.classify_lambda) : nlohmann::json(nullptr)},
      {"lasso_tol", c.lasso_tol},
      {"lasso_max_iter", c.lasso_max_iter},
      {"block_sizes", c.block_sizes},
      {"max_iters", c.max_iters},
      {"rel_tol", c.rel_tol},
      {"a_step", c.a_step},
      {"set_size", c.set_size},
      {"set_rule", c.set_rule},
      {"rank_k", c.rank_k},
      {"from_table", c.from_table},
      {"include_starred", c.include_starred},
      {"with_err", c.with_err},
      {"threshold", c.threshold},
      {"dictionary", c.dictionary},
      {"out", c.out},
      {"data_out", c.data_out},
      {"csv_out", c.csv_out},
      {"dict_out", c.dict_out},
      {"threads", c.threads},
  };
}

void merge_json(RunConfig& c, const nlohmann::json& v) {
  if (!v.is_object()) throw InvalidArgument("config: top level must be a JSON object");
  static const std::set<std::string> known{
      "command", "data",       "label_column",  "synth",        "normalize",     "train_per_class", "splits",
      "seed",    "model",      "models",        "lambda",       "classify_lambda", "lasso_tol",     "lasso_max_iter",
      "block_sizes", "max_iters", "rel_tol",    "a_step",       "set_size",      "set_rule",        "rank_k",
      "from_table", "include_starred", "with_err", "threshold", "dictionary",    "out", "data_out",             "csv_out",
      "dict_out", "threads"};
  for (const auto& [key, _] : v.items()) {
    if (!known.contains(key)) throw InvalidArgument("config: unknown key '" + key + "'");
  }
  take(v, "command", c.command);
  take(v, "data", c.data);
  take(v, "label_column", c.label_column);
  if (const auto it = v.find("synth"); it != v.end()) {
    if (!it->is_object()) throw InvalidArgument("config: 'synth' must be an object");
    static const std::set<std::string> synth_keys{"num_classes", "dim", "samples_per_class", "class_separation",
                                                  "seed"};
    for (const auto& [key, _] : it->items()) {
      if (!synth_keys.contains(key)) throw InvalidArgument("config: unknown key 'synth." + key + "'");
    }
    take(*it, "num_classes", c.synth.num_classes);
    take(*it, "dim", c.synth.dim);
    take(*it, "samples_per_class", c.synth.samples_per_class);
    take(*it, "class_separation", c.synth.class_separation);
    take(*it, "seed", c.synth.seed);
  }
  take(v, "normalize", c.normalize);
  take(v, "train_per_class", c.train_per_class);
  take(v, "splits", c.splits);
  take(v, "seed", c.seed);
  take(v, "model", c.model);
  take(v, "models", c.models);
  take(v, "lambda", c.lambda);
  if (const auto it = v.find("classify_lambda"); it != v.end()) {
    if (it->is_null()) {
      c.classify_lambda.reset();
    } else {
      double value = 0.0;
      take(v, "classify_lambda", value);
      c.classify_lambda = value;
    }
  }
  take(v, "lasso_tol", c.lasso_tol);
  take(v, "lasso_max_iter", c.lasso_max_iter);
  take(v, "block_sizes", c.block_sizes);
  take(v, "max_iters", c.max_iters);
  take(v, "rel_tol", c.rel_tol);
  take(v, "a_step", c.a_step);
  take(v, "set_size", c.set_size);
  take(v, "set_rule", c.set_rule);
  take(v, "rank_k", c.rank_k);
  take(v, "from_table", c.from_table);
  take(v, "include_starred", c.include_starred);
  take(v, "with_err", c.with_err);
  take(v, "threshold", c.threshold);
  take(v, "dictionary", c.dictionary);
  take(v, "out", c.out);
  take(v, "data_out", c.data_out);
  take(v, "csv_out", c.csv_out);
  take(v, "dict_out", c.dict_out);
  take(v, "threads", c.threads);
}

RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config '" + path + "'");
  nlohmann::json values;
  try {
    values = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidArgument("config '" + path + "': " + e.what());
  }
  RunConfig config;
  merge_json(config, values);
  return config;
}

void validate(const RunConfig& c) {
  auto model_ok = [](const std::string& m) {
    if (!kModels.contains(m)) throw InvalidArgument("unknown model '" + m + "' (mpd, crc-l1, crc-l2, dl-nscr)");
  };
  auto needs_dl = [&](const std::string& m) { return m == "dl-nscr"; };

  if (c.data.empty()) c.synth.validate();
  if (!(c.lambda > 0.0)) throw InvalidArgument("--lambda must be > 0");
  if (c.classify_lambda && !(*c.classify_lambda > 0.0)) throw InvalidArgument("--classify-lambda must be > 0");
  if (c.splits < 1) throw InvalidArgument("--splits must be >= 1");
  if (c.train_per_class < 1) throw InvalidArgument("--train-per-class must be >= 1");
  if (c.a_step != "block-confusion" && c.a_step != "selector-stack") {
    throw InvalidArgument("--a-step must be block-confusion or selector-stack");
  }
  if (c.set_rule != "confusion-energy" && c.set_rule != "normalized") {
    throw InvalidArgument("--set-rule must be confusion-energy or normalized");
  }
  if (c.set_size < 0) throw InvalidArgument("--set-size must be >= 0");
  if (c.rank_k < 0) throw InvalidArgument("--rank-k must be >= 0");
  if (c.threads < 0) throw InvalidArgument("--threads must be >= 0");
  if (c.max_iters < 0) throw InvalidArgument("--max-iters must be >= 0");
  for (Index k : c.block_sizes) {
    if (k < 1) throw InvalidArgument("--block-sizes entries must be >= 1");
  }

  if (c.command == "synth") {
    if (c.data_out.empty()) throw InvalidArgument("synth: --data-out is required");
  } else if (c.command == "eval") {
    model_ok(c.model);
    const bool dl = needs_dl(c.model);
    if (dl && c.block_sizes.empty() && c.dictionary.empty()) {
      throw InvalidArgument("eval: dl-nscr needs --block-sizes or --dictionary");
    }
    if (!dl && !c.block_sizes.empty()) throw InvalidArgument("eval: --block-sizes only applies to dl-nscr");
    if (!c.dictionary.empty() && !dl) throw InvalidArgument("eval: --dictionary only applies to dl-nscr");
    if (!c.dictionary.empty() && c.data.empty()) throw InvalidArgument("eval: --dictionary needs --data");
    if (c.set_size > 0 && c.model != "mpd" && c.model != "dl-nscr") {
      throw InvalidArgument("eval: set queries are supported for mpd and dl-nscr");
    }
  } else if (c.command == "select") {
    if (!c.from_table.empty() && !c.data.empty()) throw InvalidArgument("select: --from-table excludes --data");
  } else if (c.command == "compare") {
    if (c.models.empty()) throw InvalidArgument("compare: empty model list");
    bool any_dl = false;
    for (const auto& m : c.models) {
      model_ok(m);
      any_dl = any_dl || needs_dl(m);
    }
    if (any_dl && c.block_sizes.empty()) throw InvalidArgument("compare: dl-nscr needs --block-sizes");
  } else if (c.command == "fit-dict") {
    if (c.block_sizes.empty()) throw InvalidArgument("fit-dict: --block-sizes is required");
    if (c.dict_out.empty()) throw InvalidArgument("fit-dict: --dict-out is required");
  } else {
    throw InvalidArgument("unknown command '" + c.command + "'");
  }
}

}  // namespace collabrep::cli
