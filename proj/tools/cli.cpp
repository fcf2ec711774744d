#include "cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <random>

#include "nli/conflict/analyzer.hpp"
#include "nli/errors.hpp"
#include "nli/io/checkpoint.hpp"
#include "nli/io/run_config.hpp"
#include "nli/model/transformer.hpp"
#include "nli/text/corpus.hpp"
#include "nli/text/encoding.hpp"
#include "nli/text/vocabulary.hpp"
#include "nli/train/trainer.hpp"

namespace nli::cli {
namespace fs = std::filesystem;

namespace {

struct Options {
  std::string config_path;
  std::string output_dir;
  std::string checkpoint;
  std::string vocab;
  std::string data;
  std::string premise;
  std::string hypothesis;
  std::string conflicts;
  std::string format = "text";
};

fs::path resolve_output_dir(const std::string& flag, const std::string& configured) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv(kOutputDirEnv); env != nullptr && *env != '\0') return env;
  if (!configured.empty()) return configured;
  return "nli_output";
}

struct LoadedModel {
  Checkpoint checkpoint;
  Vocabulary vocab;
  TransformerClassifier<float> model;
};

LoadedModel load_model(const Options& opt) {
  if (opt.checkpoint.empty()) throw ConfigError("--checkpoint is required");
  Checkpoint ckpt = load_checkpoint(opt.checkpoint);
  const fs::path vocab_path = opt.vocab.empty() ? fs::path(opt.checkpoint).parent_path() / "vocab.txt" : fs::path(opt.vocab);
  Vocabulary vocab = Vocabulary::load(vocab_path);
  if (ckpt.meta.vocab_fingerprint != 0 && ckpt.meta.vocab_fingerprint != vocab.fingerprint()) {
    throw IngestionError(vocab_path.string() + ": vocabulary does not match the one recorded in " + opt.checkpoint);
  }
  if (vocab.size() > ckpt.config.vocab_words) {
    throw IngestionError(vocab_path.string() + ": " + std::to_string(vocab.size()) +
                         " tokens exceed the checkpoint's " + std::to_string(ckpt.config.vocab_words) + " word rows");
  }
  TransformerClassifier<float> model(ckpt.config, ckpt.params);
  return {std::move(ckpt), std::move(vocab), std::move(model)};
}

void print_probabilities(std::ostream& out, const ClassProbabilities& p) {
  out << std::fixed << std::setprecision(6);
  for (NliLabel label : kAllLabels) out << label_name(label) << '\t' << p[label] << '\n';
  out << "predicted\t" << label_name(p.predicted()) << '\n';
  out.unsetf(std::ios::floatfield);
}

std::vector<NliExample> take_subset(std::vector<NliExample> examples, std::size_t limit, std::uint64_t seed) {
  if (limit == 0 || limit >= examples.size()) return examples;
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
  order.resize(limit);
  std::sort(order.begin(), order.end());
  std::vector<NliExample> subset;
  subset.reserve(limit);
  for (std::size_t i : order) subset.push_back(std::move(examples[i]));
  return subset;
}

SnliLoadResult load_split(const std::string& path, std::ostream& err) {
  SnliLoadResult r = load_snli(path);
  for (const auto& w : r.warnings) err << "warning: " << w << '\n';
  if (r.malformed > r.warnings.size()) err << "warning: " << r.malformed << " malformed lines in " << path << '\n';
  return r;
}

int cmd_train(const Options& opt, std::ostream& out, std::ostream& err) {
  if (opt.config_path.empty()) throw ConfigError("--config is required");
  std::vector<std::string> defaulted;
  RunConfig config = load_config(opt.config_path, &defaulted);
  validate_training_inputs(config);
  const fs::path out_dir = resolve_output_dir(opt.output_dir, config.output_dir);
  for (const auto& key : defaulted) out << "default " << key << '\n';

  SnliLoadResult train_split = load_split(config.snli_train, err);
  SnliLoadResult dev_split = load_split(config.snli_dev, err);
  out << "snli train: " << train_split.examples.size() << " usable of " << train_split.lines_read << " ("
      << train_split.dropped_no_consensus << " without consensus)\n";
  out << "snli dev: " << dev_split.examples.size() << " usable of " << dev_split.lines_read << '\n';
  auto train_examples = take_subset(std::move(train_split.examples), config.train_limit,
                                    derive_seed(config.train.seed, "train_subset"));
  auto dev_examples =
      take_subset(std::move(dev_split.examples), config.val_limit, derive_seed(config.train.seed, "val_subset"));
  if (train_examples.empty() || dev_examples.empty()) throw IngestionError("training or validation split is empty");

  const Vocabulary vocab = build_vocab(train_examples, config.min_count);
  config.model.vocab_words = vocab.size();
  out << "vocabulary: " << vocab.word_count() << " words + " << Vocabulary::kNumReserved << " reserved\n";
  const auto train_pairs = encode_examples(train_examples, vocab, config.model.max_len);
  const auto dev_pairs = encode_examples(dev_examples, vocab, config.model.max_len);

  TransformerClassifier<float> model(config.model, derive_seed(config.train.seed, "init"));
  out << "parameters: " << config.model.parameter_count() << '\n';

  TrainHooks<float> hooks;
  hooks.on_epoch_end = [&out](const TransformerClassifier<float>&, const EpochRecord& r) {
    out << "epoch " << r.epoch << " train_loss " << r.train_loss << " train_acc " << r.train_accuracy << " val_loss "
        << r.val_loss << " val_acc " << r.val_accuracy << std::endl;
  };
  const TrainLog log = train(model, train_pairs, dev_pairs, config.train, hooks);

  fs::create_directories(out_dir);
  CheckpointMeta meta;
  meta.vocab_fingerprint = vocab.fingerprint();
  meta.best_epoch = static_cast<std::int64_t>(log.chosen_epoch);
  meta.best_val_accuracy = log.chosen() ? log.chosen()->val_accuracy : 0.0;
  meta.seed = config.train.seed;
  save_checkpoint(model.config(), model.parameters(), meta, out_dir / "checkpoint.bin");
  vocab.save(out_dir / "vocab.txt");
  {
    std::ofstream csv(out_dir / "train_log.csv");
    log.write_csv(csv);
    std::ofstream echo(out_dir / "run_config.cfg");
    echo << serialize(config);
  }
  out << "chosen epoch " << log.chosen_epoch << " (val_acc " << meta.best_val_accuracy << ")\n";
  out << "wrote " << (out_dir / "checkpoint.bin").string() << '\n';
  if (log.clamped_probabilities > 0) {
    err << "warning: " << log.clamped_probabilities << " gold probabilities clamped at the NLL floor\n";
  }
  if (log.diverged) {
    err << "training diverged: " << log.divergence_message << "; saved last good weights\n";
    return kNumericFailure;
  }
  return kSuccess;
}

int cmd_eval(const Options& opt, std::ostream& out, std::ostream& err) {
  if (opt.data.empty()) throw ConfigError("--data is required");
  const LoadedModel loaded = load_model(opt);
  SnliLoadResult split = load_split(opt.data, err);
  const auto pairs = encode_examples(split.examples, loaded.vocab, loaded.checkpoint.config.max_len);
  if (pairs.empty()) throw IngestionError(opt.data + ": no labelled examples");
  const EvalResult r = evaluate(loaded.model, pairs);
  out << "examples\t" << r.count << '\n' << "loss\t" << r.loss << '\n' << "accuracy\t" << r.accuracy << '\n';
  return kSuccess;
}

int cmd_infer(const Options& opt, std::ostream& out, std::ostream&) {
  if (opt.premise.empty() || opt.hypothesis.empty()) throw ConfigError("--premise and --hypothesis are required");
  const LoadedModel loaded = load_model(opt);
  const DirectionalScore s = score_pair(opt.premise, opt.hypothesis, loaded.model, loaded.vocab);
  print_probabilities(out, s.probs);
  if (s.truncated) out << "truncated\t1\n";
  return kSuccess;
}

int cmd_analyze(const Options& opt, std::ostream& out, std::ostream&) {
  if (opt.conflicts.empty()) throw ConfigError("--conflicts is required");
  const LoadedModel loaded = load_model(opt);
  const auto records = load_norm_conflicts(opt.conflicts);
  const ConflictReport report = conflict_report(records, loaded.model, loaded.vocab);
  const fs::path out_dir = resolve_output_dir(opt.output_dir, "");
  fs::create_directories(out_dir);
  {
    std::ofstream tsv(out_dir / "conflict_report.tsv", std::ios::binary);
    write_report_tsv(report, tsv);
    std::ofstream txt(out_dir / "conflict_report.txt", std::ios::binary);
    write_report_text(report, txt);
  }
  if (opt.format == "tsv") {
    write_report_tsv(report, out);
  } else {
    write_report_text(report, out);
  }
  return kSuccess;
}

int cmd_inspect(const Options& opt, std::ostream& out, std::ostream&) {
  ModelConfig model;
  if (!opt.checkpoint.empty()) {
    model = load_checkpoint(opt.checkpoint).config;
  } else if (!opt.config_path.empty()) {
    std::vector<std::string> defaulted;
    const RunConfig config = load_config(opt.config_path, &defaulted);
    out << serialize(config);
    for (const auto& key : defaulted) out << "# default " << key << '\n';
    model = config.model;
  }
  model.validate();
  const std::size_t analytic = model.parameter_count();
  const std::size_t enumerated = ModelParameters<float>::zeros(model).enumerated_count();
  out << "model\t" << describe(model) << '\n';
  out << "embedding_rows\t" << model.embedding_rows() << '\n';
  out << "parameters_analytic\t" << analytic << '\n';
  out << "parameters_enumerated\t" << enumerated << '\n';
  out << "parameters_millions\t" << std::fixed << std::setprecision(2) << static_cast<double>(analytic) / 1e6 << '\n';
  out.unsetf(std::ios::floatfield);
  return analytic == enumerated ? kSuccess : kNumericFailure;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Transformer-decoder NLI classifier for contract norm analysis", "nli"};
  app.require_subcommand(1);
  Options opt;

  auto* train_cmd = app.add_subcommand("train", "Train on SNLI and write checkpoint, vocabulary and log");
  train_cmd->add_option("--config", opt.config_path, "Run configuration file")->required();
  train_cmd->add_option("--output-dir", opt.output_dir, "Output directory (overrides config and NLI_OUTPUT_DIR)");

  auto add_model_flags = [&opt](CLI::App* cmd) {
    cmd->add_option("--checkpoint", opt.checkpoint, "Checkpoint file")->required();
    cmd->add_option("--vocab", opt.vocab, "Vocabulary file (default: vocab.txt next to the checkpoint)");
  };

  auto* eval_cmd = app.add_subcommand("eval", "Accuracy on a labelled SNLI split");
  add_model_flags(eval_cmd);
  eval_cmd->add_option("--data", opt.data, "SNLI JSON-lines file")->required();

  auto* infer_cmd = app.add_subcommand("infer", "Class probabilities for one premise/hypothesis pair");
  add_model_flags(infer_cmd);
  infer_cmd->add_option("--premise", opt.premise)->required();
  infer_cmd->add_option("--hypothesis", opt.hypothesis)->required();

  auto* analyze_cmd = app.add_subcommand("analyze-conflicts", "Bidirectional report over norm conflict pairs");
  add_model_flags(analyze_cmd);
  analyze_cmd->add_option("--conflicts", opt.conflicts, "Tab-separated norm conflict file")->required();
  analyze_cmd->add_option("--output-dir", opt.output_dir, "Output directory (overrides NLI_OUTPUT_DIR)");
  analyze_cmd->add_option("--format", opt.format, "Console format")->check(CLI::IsMember({"text", "tsv"}));

  auto* inspect_cmd = app.add_subcommand("inspect", "Echo configuration and parameter count");
  auto* cfg_opt = inspect_cmd->add_option("--config", opt.config_path, "Run configuration file");
  inspect_cmd->add_option("--checkpoint", opt.checkpoint, "Checkpoint file")->excludes(cfg_opt);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kUsage;
  }

  try {
    if (train_cmd->parsed()) return cmd_train(opt, out, err);
    if (eval_cmd->parsed()) return cmd_eval(opt, out, err);
    if (infer_cmd->parsed()) return cmd_infer(opt, out, err);
    if (analyze_cmd->parsed()) return cmd_analyze(opt, out, err);
    if (inspect_cmd->parsed()) return cmd_inspect(opt, out, err);
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << '\n';
    return kUsage;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << '\n';
    return kNumericFailure;
  } catch (const VersionError& e) {
    err << "version error: " << e.what() << '\n';
    return kDataError;
  } catch (const IntegrityError& e) {
    err << e.what() << '\n';
    return kDataError;
  } catch (const IngestionError& e) {
    err << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const ContractViolation& e) {
    err << "invalid input: " << e.what() << '\n';
    return kDataError;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "filesystem error: " << e.what() << '\n';
    return kDataError;
  }
  return kUsage;
}

}  // namespace nli::cli
