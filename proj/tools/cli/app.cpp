#include "cli/app.hpp"

#include <CLI11.hpp>

#include <functional>
#include <memory>

#include "cli/commands.hpp"
#include "cli/run_config.hpp"

namespace collabrep::cli {

namespace {

// Flags are recorded separately and applied on top of the config file, so a
// flag only overrides when it was actually given.
class FlagSet {
 public:
  template <typename T, typename Setter>
  void add(CLI::App* app, const std::string& name, const std::string& help, Setter setter) {
    auto value = std::make_shared<T>();
    CLI::Option* opt = app->add_option(name, *value, help);
    appliers_.push_back([opt, value, setter](RunConfig& c) {
      if (opt->count() > 0) setter(c, *value);
    });
  }

  template <typename T>
  void add(CLI::App* app, const std::string& name, const std::string& help, T RunConfig::*member) {
    add<T>(app, name, help, [member](RunConfig& c, const T& v) { c.*member = v; });
  }

  void add_switch(CLI::App* app, const std::string& name, const std::string& help, bool RunConfig::*member) {
    CLI::Option* opt = app->add_flag(name, help);
    appliers_.push_back([opt, member](RunConfig& c) {
      if (opt->count() > 0) c.*member = true;
    });
  }

  void apply(RunConfig& config) const {
    for (const auto& f : appliers_) f(config);
  }

 private:
  std::vector<std::function<void(RunConfig&)>> appliers_;
};

void add_data_flags(CLI::App* sub, FlagSet& flags) {
  flags.add(sub, "--data", "Input CSV (one sample per row); synthetic data when absent", &RunConfig::data);
  flags.add(sub, "--label-column", "Name of the label column", &RunConfig::label_column);
  flags.add<int>(sub, "--classes", "Synthetic: number of classes", [](RunConfig& c, int v) { c.synth.num_classes = v; });
  flags.add<Index>(sub, "--dim", "Synthetic: feature dimension", [](RunConfig& c, Index v) { c.synth.dim = v; });
  flags.add<Index>(sub, "--per-class", "Synthetic: samples per class",
                   [](RunConfig& c, Index v) { c.synth.samples_per_class = v; });
  flags.add<double>(sub, "--separation", "Synthetic: minimum distance between class means",
                    [](RunConfig& c, double v) { c.synth.class_separation = v; });
  flags.add<std::uint64_t>(sub, "--synth-seed", "Synthetic: generator seed",
                           [](RunConfig& c, std::uint64_t v) { c.synth.seed = v; });
  flags.add_switch(sub, "--normalize", "Scale every sample to unit l2 norm", &RunConfig::normalize);
}

void add_split_flags(CLI::App* sub, FlagSet& flags) {
  flags.add(sub, "--train-per-class", "Training samples drawn per class", &RunConfig::train_per_class);
  flags.add(sub, "--splits", "Number of seeded splits (seeds seed, seed+1, ...)", &RunConfig::splits);
  flags.add(sub, "--seed", "Base seed for splits and initialization", &RunConfig::seed);
}

void add_model_flags(CLI::App* sub, FlagSet& flags) {
  flags.add(sub, "--lambda", "Regularization weight (coding and dictionary fit)", &RunConfig::lambda);
  flags.add<double>(sub, "--classify-lambda", "dl-nscr: coding weight at classification time",
                    [](RunConfig& c, double v) { c.classify_lambda = v; });
  flags.add(sub, "--lasso-tol", "crc-l1: stationarity tolerance", &RunConfig::lasso_tol);
  flags.add(sub, "--lasso-max-iter", "crc-l1: iteration cap", &RunConfig::lasso_max_iter);
  flags.add(sub, "--block-sizes", "dl-nscr: atoms per class (one value applies to all)", &RunConfig::block_sizes);
  flags.add(sub, "--max-iters", "dl-nscr: outer iteration cap", &RunConfig::max_iters);
  flags.add(sub, "--rel-tol", "dl-nscr: relative objective change for convergence", &RunConfig::rel_tol);
  flags.add(sub, "--a-step", "dl-nscr: block-confusion or selector-stack", &RunConfig::a_step);
  flags.add(sub, "--set-size", "Classify test samples in per-class sets of this size", &RunConfig::set_size);
  flags.add(sub, "--set-rule", "Set residual: confusion-energy or normalized", &RunConfig::set_rule);
  flags.add(sub, "--rank-k", "Also report rank-k accuracy", &RunConfig::rank_k);
}

}  // namespace

int run_app(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Collaborative representation classifiers and representation selection"};
  app.set_version_flag("--version", std::string(COLLABREP_VERSION));
  app.require_subcommand(1);
  std::string config_path;
  int threads = 0;
  app.add_option("--config", config_path, "JSON config; flags override its values");
  app.add_option("--threads", threads, "OpenMP threads (0 = runtime default)");

  FlagSet flags;
  auto* synth = app.add_subcommand("synth", "Generate a Gaussian class-mixture dataset");
  add_data_flags(synth, flags);
  flags.add(synth, "--data-out", "Output CSV", &RunConfig::data_out);

  auto* eval = app.add_subcommand("eval", "Train and test one model over seeded splits");
  add_data_flags(eval, flags);
  add_split_flags(eval, flags);
  add_model_flags(eval, flags);
  flags.add(eval, "--model", "mpd, crc-l1, crc-l2 or dl-nscr", &RunConfig::model);
  flags.add(eval, "--dictionary", "dl-nscr: classify --data with a stored dictionary", &RunConfig::dictionary);

  auto* select = app.add_subcommand("select", "Score a dataset for sparse vs non-sparse coding");
  add_data_flags(select, flags);
  add_split_flags(select, flags);
  add_model_flags(select, flags);
  flags.add(select, "--from-table", "CSV of raw dataset statistics instead of data", &RunConfig::from_table);
  flags.add_switch(select, "--include-starred", "Use starred rows in the trend fits", &RunConfig::include_starred);
  flags.add_switch(select, "--with-err", "Also run both CRC models for ERR", &RunConfig::with_err);
  flags.add(select, "--threshold", "Score at or above which non-sparse is recommended", &RunConfig::threshold);
  flags.add(select, "--csv-out", "Table CSV (with --from-table)", &RunConfig::csv_out);

  auto* compare = app.add_subcommand("compare", "Accuracy and timing for several models on the same splits");
  add_data_flags(compare, flags);
  add_split_flags(compare, flags);
  add_model_flags(compare, flags);
  flags.add(compare, "--models", "Models to compare", &RunConfig::models);
  flags.add(compare, "--csv-out", "Comparison CSV", &RunConfig::csv_out);

  auto* fit = app.add_subcommand("fit-dict", "Learn a DL-NSCR dictionary from all samples of a dataset");
  add_data_flags(fit, flags);
  add_model_flags(fit, flags);
  flags.add(fit, "--seed", "Seed for the initialization fill", &RunConfig::seed);
  flags.add(fit, "--dict-out", "Output dictionary file", &RunConfig::dict_out);

  for (auto* sub : {synth, eval, select, compare, fit}) {
    flags.add(sub, "--out", "JSON report path (printed to stdout when absent)", &RunConfig::out);
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    RunConfig config = config_path.empty() ? RunConfig{} : load_config_file(config_path);
    flags.apply(config);
    config.command = app.get_subcommands().front()->get_name();
    if (threads > 0) config.threads = threads;
    // Keep stdout parseable when the report itself goes there.
    std::ostream& log = config.out.empty() ? err : out;
    const nlohmann::json report = run_command(config, log);
    if (config.out.empty()) out << report.dump(2) << '\n';
    return kOk;
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "i/o error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kInternal;
  }
}

}  // namespace collabrep::cli
