#include "commands.hpp"

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "clotkit/csv.hpp"
#include "clotkit/dataset.hpp"
#include "clotkit/errors.hpp"
#include "clotkit/metrics.hpp"
#include "clotkit/pipeline_config.hpp"
#include "clotkit/predictions.hpp"
#include "clotkit/preprocess.hpp"
#include "clotkit/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace clotkit::cli {

namespace {

std::string fmt6(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

int label_class(Label label) {
  if (label == Label::CE) return 0;
  if (label == Label::LAA) return 1;
  raise(Errc::IllegalLabelForKind, "expected a CE/LAA label");
}

// ---------------------------------------------------------------------------
// Config-file prescan: a flat JSON object whose keys are long option names of
// the chosen subcommand. Command-line flags win; config fills only options
// the user did not mention. Schema problems are usage errors.
// ---------------------------------------------------------------------------

std::vector<std::string> inject_config(const CLI::App& sub, const std::string& sub_name,
                                       std::vector<std::string> args) {
  std::string config_path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) config_path = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0) config_path = args[i].substr(9);
  }
  if (config_path.empty()) return args;

  std::ifstream is(config_path);
  if (!is) throw CLI::ValidationError("--config", "cannot open '" + config_path + "'");
  json root;
  try {
    root = json::parse(is);
  } catch (const json::exception& e) {
    throw CLI::ValidationError("--config", std::string("bad JSON: ") + e.what());
  }
  if (!root.is_object()) throw CLI::ValidationError("--config", "expected a JSON object");

  auto user_passed = [&args](const std::string& flag) {
    for (const auto& arg : args) {
      if (arg == flag || arg.rfind(flag + "=", 0) == 0) return true;
    }
    return false;
  };

  std::vector<std::string> injected;
  for (const auto& [key, value] : root.items()) {
    if (key == "config") continue;
    const std::string flag = "--" + key;
    const CLI::Option* opt = sub.get_option_no_throw(flag);
    if (opt == nullptr) {
      throw CLI::ValidationError("--config", "unknown key \"" + key + "\" for subcommand '" +
                                                 sub_name + "'");
    }
    if (user_passed(flag)) continue;

    auto append_scalar = [&](const json& v) {
      if (v.is_string()) {
        injected.push_back(flag);
        injected.push_back(v.get<std::string>());
      } else if (v.is_number_integer()) {
        injected.push_back(flag);
        injected.push_back(std::to_string(v.get<std::int64_t>()));
      } else if (v.is_number_unsigned()) {
        injected.push_back(flag);
        injected.push_back(std::to_string(v.get<std::uint64_t>()));
      } else if (v.is_number_float()) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", v.get<double>());
        injected.push_back(flag);
        injected.push_back(buf);
      } else if (v.is_boolean()) {
        if (v.get<bool>()) injected.push_back(flag);
      } else {
        throw CLI::ValidationError("--config", "unsupported value type for \"" + key + "\"");
      }
    };
    if (value.is_array()) {
      for (const json& item : value) append_scalar(item);
    } else {
      append_scalar(value);
    }
  }

  // Insert right after the subcommand token so they parse in its scope.
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == sub_name) {
      args.insert(args.begin() + static_cast<std::ptrdiff_t>(i + 1), injected.begin(),
                  injected.end());
      return args;
    }
  }
  return args;
}

// ---------------------------------------------------------------------------
// preprocess
// ---------------------------------------------------------------------------

struct PreprocessArgs {
  std::string metadata, images, out;
  std::string kind = "train";
  int side = 1024;
  int bg_threshold = 240;
  double bg_fraction = 0.995;
  int jobs = 1;
  bool keep_all = false;
  std::string augment;
  std::uint64_t augment_seed = 0;
};

int cmd_preprocess(const PreprocessArgs& args) {
  fs::create_directories(args.out);
  std::vector<std::string> warnings;
  DatasetIndex index = load_metadata(args.metadata, parse_kind(args.kind), &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
  if (!args.keep_all) index = select_last_chronological(index);

  std::optional<PipelineFile> pipeline;
  if (!args.augment.empty()) pipeline = load_pipeline_json(args.augment);

  BackgroundPolicy policy;
  policy.background_threshold = args.bg_threshold;
  policy.empty_fraction = args.bg_fraction;

  const fs::path image_root(args.images);
  auto resolve_input = [&image_root](const ImageRecord& rec) -> fs::path {
    if (!rec.path.empty()) {
      return rec.path.is_absolute() ? rec.path : image_root / rec.path;
    }
    for (const char* ext : {".tif", ".tiff", ".png"}) {
      fs::path candidate = image_root / (rec.image_id + ext);
      if (fs::exists(candidate)) return candidate;
    }
    raise(Errc::IoError, "no input image found for '" + rec.image_id + "'");
  };

  struct Outcome {
    bool ok = false;
    PreprocessSummary summary;
    std::string code, message;
  };
  std::vector<Outcome> outcomes(index.size());

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < index.size(); i = next.fetch_add(1)) {
      const ImageRecord& rec = index.records[i];
      Outcome& out = outcomes[i];
      try {
        const fs::path in_path = resolve_input(rec);
        const fs::path out_path = fs::path(args.out) / (rec.image_id + ".png");
        out.summary = preprocess_one(in_path, out_path, policy, args.side, rec.image_id,
                                     pipeline ? &pipeline->pipeline : nullptr,
                                     args.augment_seed);
        out.ok = true;
      } catch (const Error& e) {
        out.code = errc_name(e.code());
        out.message = e.what();
      } catch (const std::exception& e) {
        out.code = errc_name(Errc::IoError);
        out.message = e.what();
      }
    }
  };
  const int jobs = std::max(1, args.jobs);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    threads.reserve(jobs);
    for (int t = 0; t < jobs; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }

  CsvTable manifest;
  manifest.header = {"image_id", "patient_id", "label",      "orig_width", "orig_height",
                     "crop_width", "crop_height", "out_path"};
  CsvTable errors;
  errors.header = {"image_id", "error_code", "message"};
  std::size_t ok_count = 0;
  for (std::size_t i = 0; i < index.size(); ++i) {
    const ImageRecord& rec = index.records[i];
    const Outcome& out = outcomes[i];
    if (out.ok) {
      ++ok_count;
      const PreprocessSummary& s = out.summary;
      manifest.rows.push_back({rec.image_id, rec.patient_id, std::string(label_name(rec.label)),
                               std::to_string(s.orig_w), std::to_string(s.orig_h),
                               std::to_string(s.crop_w), std::to_string(s.crop_h),
                               s.out_path.filename().string()});
      std::cout << "image=" << rec.image_id << " status=ok out="
                << s.out_path.filename().string() << '\n';
    } else {
      errors.rows.push_back({rec.image_id, out.code, out.message});
      std::cout << "image=" << rec.image_id << " status=error code=" << out.code << '\n';
      std::cerr << "error: " << rec.image_id << ": " << out.message << '\n';
    }
  }
  write_csv(fs::path(args.out) / "manifest.csv", manifest);
  write_csv(fs::path(args.out) / "errors.csv", errors);

  const std::size_t failed = index.size() - ok_count;
  std::cout << "preprocess total=" << index.size() << " ok=" << ok_count
            << " failed=" << failed << " out=" << args.out << '\n';
  return failed == 0 ? 0 : 1;
}

// ---------------------------------------------------------------------------
// split
// ---------------------------------------------------------------------------

struct SplitArgs {
  std::string metadata, out;
  std::string kind = "train";
  int k = 5;
  std::uint64_t seed = 0;
};

int cmd_split(const SplitArgs& args) {
  DatasetIndex index = load_metadata(args.metadata, parse_kind(args.kind));
  FoldAssignment folds = stratified_kfold(index, args.k, args.seed);
  write_folds_csv(folds, args.out);
  std::cout << "split patients=" << folds.fold_of_patient.size() << " k=" << folds.k
            << " seed=" << folds.seed << " out=" << args.out << '\n';
  return 0;
}

// ---------------------------------------------------------------------------
// pseudo
// ---------------------------------------------------------------------------

struct PseudoArgs {
  std::string predictions, out;
  double threshold = 0.9;
};

int cmd_pseudo(const PseudoArgs& args) {
  const PredictionTable preds = load_predictions_csv(args.predictions);
  const PseudoLabelBatch batch = select_pseudo_labels(preds, args.threshold);
  write_pseudo_csv(batch, args.out);
  std::cout << "pseudo selected=" << batch.rows.size() << " total=" << preds.rows.size()
            << " threshold=" << fmt6(args.threshold) << " out=" << args.out << '\n';
  return 0;
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

struct TrainArgs {
  std::string embeddings, metadata, folds, out;
  std::string pseudo, pool, predict;
  std::uint64_t seed = 0;
  int batch_size = 32;
  double smoothing = 0.01;
  int max_epochs = 30;
  double dropout = 0.1;
  int hidden1 = 128;
  int hidden2 = 64;
  bool activation = false;
  double max_lr = 1e-4;
  double min_lr = 1e-5;
  double lr_factor = 0.1;
  int patience = 1;
  int stop_patience = 6;
  double weight_decay = 1e-6;
  double weight_ce = 1.0;
  double weight_laa = 1.0;
};

int cmd_train(const TrainArgs& args) {
  fs::create_directories(args.out);

  EmbeddingSet data = load_embeddings_csv(args.embeddings);
  const DatasetIndex meta = load_metadata(args.metadata, DatasetKind::Train);
  std::map<std::string, int> labels;
  for (const auto& [patient, label] : patient_labels(meta)) {
    labels[patient] = label_class(label);
  }
  attach_labels(data, labels);

  const FoldAssignment folds = read_folds_csv(args.folds);

  std::size_t pseudo_count = 0;
  if (!args.pseudo.empty()) {
    const PseudoLabelBatch batch = load_pseudo_csv(args.pseudo);
    expand_train_folds(folds, batch);  // validates collision-freedom up front
    const EmbeddingSet pool = load_embeddings_csv(args.pool);
    pseudo_count = merge_pseudo_rows(data, pool, batch);
  }

  TrainConfig cfg;
  cfg.seed = args.seed;
  cfg.batch_size = args.batch_size;
  cfg.label_smoothing = args.smoothing;
  cfg.max_epochs = args.max_epochs;
  cfg.head.dropout = args.dropout;
  cfg.head.hidden1 = args.hidden1;
  cfg.head.hidden2 = args.hidden2;
  cfg.head.use_activation = args.activation;
  cfg.max_lr = args.max_lr;
  cfg.min_lr = args.min_lr;
  cfg.lr_factor = args.lr_factor;
  cfg.patience = args.patience;
  cfg.stop_patience = args.stop_patience;
  cfg.weight_decay = args.weight_decay;
  cfg.class_weights = {args.weight_ce, args.weight_laa};

  std::optional<EmbeddingSet> predict_set;
  if (!args.predict.empty()) predict_set = load_embeddings_csv(args.predict);

  const std::vector<FoldResult> results = train_head(data, folds, cfg);
  for (const FoldResult& res : results) {
    const std::string tag = "fold" + std::to_string(res.fold);
    save_head(res.best, (fs::path(args.out) / ("head_" + tag + ".bin")).string());
    write_history_csv((fs::path(args.out) / ("history_" + tag + ".csv")).string(),
                      res.history);
    if (predict_set) {
      const PredictionTable table = predict_table(res.best, *predict_set, tag);
      write_predictions_csv(table, fs::path(args.out) / ("preds_" + tag + ".csv"));
    }
    std::cout << "train fold=" << res.fold << " best_epoch=" << res.best_epoch
              << " best_val=" << fmt6(res.best_val_loss) << " epochs=" << res.history.size()
              << '\n';
  }
  std::cout << "train folds=" << results.size() << " rows=" << data.rows.size()
            << " pseudo=" << pseudo_count << " out=" << args.out << '\n';
  return 0;
}

// ---------------------------------------------------------------------------
// ensemble
// ---------------------------------------------------------------------------

struct EnsembleArgs {
  std::vector<std::string> inputs;
  std::string out;
};

int cmd_ensemble(const EnsembleArgs& args) {
  std::vector<PredictionTable> tables;
  tables.reserve(args.inputs.size());
  for (const auto& path : args.inputs) tables.push_back(load_predictions_csv(path));
  const PredictionTable mean = ensemble_mean(tables);
  write_submission(mean, args.out);
  std::cout << "ensemble models=" << tables.size() << " subjects=" << mean.rows.size()
            << " out=" << args.out << '\n';
  return 0;
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

struct EvaluateArgs {
  std::string submission, solution;
  double weight_ce = 1.0;
  double weight_laa = 1.0;
};

int cmd_evaluate(const EvaluateArgs& args) {
  const PredictionTable sub = load_submission(args.submission);
  int col_ce = -1, col_laa = -1;
  for (std::size_t i = 0; i < sub.class_names.size(); ++i) {
    if (sub.class_names[i] == "CE") col_ce = static_cast<int>(i);
    if (sub.class_names[i] == "LAA") col_laa = static_cast<int>(i);
  }
  if (col_ce < 0 || col_laa < 0) {
    raise(Errc::MissingColumn, "submission must carry CE and LAA columns");
  }
  std::map<std::string, const PredictionRow*> by_id;
  for (const auto& row : sub.rows) by_id.emplace(row.subject_id, &row);

  const CsvTable solution = read_csv(args.solution);
  const int c_id = solution.column("patient_id");
  const int c_label = solution.column("label");
  if (c_id < 0 || c_label < 0) {
    raise(Errc::MissingColumn, "solution needs patient_id and label columns");
  }

  WmcllInput input;
  input.class_weights = {args.weight_ce, args.weight_laa};
  std::set<std::string> seen;
  for (const auto& row : solution.rows) {
    const std::string& id = row[c_id];
    if (!seen.insert(id).second) {
      raise(Errc::SubjectCollision, "duplicate solution row for '" + id + "'");
    }
    auto it = by_id.find(id);
    if (it == by_id.end()) {
      raise(Errc::SubjectSetMismatch, "submission lacks patient '" + id + "'");
    }
    WmcllRow scored;
    scored.true_class = label_class(parse_label(row[c_label]));
    scored.probs = {it->second->probs[col_ce], it->second->probs[col_laa]};
    input.rows.push_back(std::move(scored));
  }
  if (seen.size() != by_id.size()) {
    raise(Errc::SubjectSetMismatch, "submission and solution cover different patients");
  }

  const double loss = wmcll(input);
  std::cout << fmt6(loss) << '\n';
  return 0;
}

}  // namespace

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

int run(int argc, const char* const* argv) {
  CLI::App app{"stroke clot etiology pipeline toolkit", "clotkit"};
  app.require_subcommand(1);

  // Every option takes the last occurrence so config-file values (injected
  // first) lose to explicit flags.
  auto last = [](CLI::Option* opt) {
    return opt->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  };

  PreprocessArgs pre;
  CLI::App* app_pre = app.add_subcommand(
      "preprocess", "Decode, prune, orient and resize slides into PNGs");
  app_pre->add_option("--config", "JSON config file (flags win)");
  last(app_pre->add_option("--metadata", pre.metadata, "metadata CSV"))->required();
  last(app_pre->add_option("--images", pre.images, "input image directory"))->required();
  last(app_pre->add_option("--out", pre.out, "output directory"))->required();
  last(app_pre->add_option("--kind", pre.kind, "dataset kind: train|other|test"));
  last(app_pre->add_option("--side", pre.side, "output side in pixels")
           ->check(CLI::Range(1, 1 << 16)));
  last(app_pre->add_option("--bg-threshold", pre.bg_threshold, "background min-channel cutoff")
           ->check(CLI::Range(0, 255)));
  last(app_pre->add_option("--bg-fraction", pre.bg_fraction,
                           "fraction of background pixels that empties a line")
           ->check(CLI::Range(0.0, 1.0)));
  last(app_pre->add_option("--jobs", pre.jobs, "worker threads")->check(CLI::Range(1, 512)));
  app_pre->add_flag("--all", pre.keep_all, "keep every record (skip last-chronological)");
  last(app_pre->add_option("--augment", pre.augment, "augmentation pipeline JSON"));
  last(app_pre->add_option("--augment-seed", pre.augment_seed, "augmentation seed"));

  SplitArgs split;
  CLI::App* app_split =
      app.add_subcommand("split", "Write a patient-level stratified k-fold assignment");
  app_split->add_option("--config", "JSON config file (flags win)");
  last(app_split->add_option("--metadata", split.metadata, "metadata CSV"))->required();
  last(app_split->add_option("--out", split.out, "folds CSV path"))->required();
  last(app_split->add_option("--kind", split.kind, "dataset kind"));
  last(app_split->add_option("--k", split.k, "fold count")->check(CLI::Range(2, 1000)));
  last(app_split->add_option("--seed", split.seed, "shuffle seed"));

  PseudoArgs pseudo;
  CLI::App* app_pseudo =
      app.add_subcommand("pseudo", "Select confident pseudo-labels from predictions");
  app_pseudo->add_option("--config", "JSON config file (flags win)");
  last(app_pseudo->add_option("--predictions", pseudo.predictions, "prediction CSV"))
      ->required();
  last(app_pseudo->add_option("--out", pseudo.out, "pseudo-label CSV path"))->required();
  last(app_pseudo->add_option("--threshold", pseudo.threshold, "confidence cutoff"));

  TrainArgs train;
  CLI::App* app_train =
      app.add_subcommand("train", "Train the classifier head fold by fold");
  app_train->add_option("--config", "JSON config file (flags win)");
  last(app_train->add_option("--embeddings", train.embeddings, "training embeddings CSV"))
      ->required();
  last(app_train->add_option("--metadata", train.metadata, "train metadata CSV"))->required();
  last(app_train->add_option("--folds", train.folds, "folds CSV"))->required();
  last(app_train->add_option("--out", train.out, "output directory"))->required();
  CLI::Option* opt_pseudo =
      last(app_train->add_option("--pseudo", train.pseudo, "pseudo-label CSV"));
  CLI::Option* opt_pool = last(
      app_train->add_option("--pool", train.pool, "embedding pool for pseudo subjects"));
  opt_pseudo->needs(opt_pool);
  last(app_train->add_option("--predict", train.predict,
                             "embeddings to score with each fold's best head"));
  last(app_train->add_option("--seed", train.seed, "run seed"));
  last(app_train->add_option("--batch-size", train.batch_size, "minibatch size")
           ->check(CLI::Range(1, 1 << 20)));
  last(app_train->add_option("--smoothing", train.smoothing, "label smoothing epsilon"));
  last(app_train->add_option("--max-epochs", train.max_epochs, "epoch cap"));
  last(app_train->add_option("--dropout", train.dropout, "dropout rate"));
  last(app_train->add_option("--hidden1", train.hidden1, "first hidden width"));
  last(app_train->add_option("--hidden2", train.hidden2, "second hidden width"));
  app_train->add_flag("--activation", train.activation,
                      "insert rectifiers between head layers");
  last(app_train->add_option("--max-lr", train.max_lr, "initial learning rate"));
  last(app_train->add_option("--min-lr", train.min_lr, "learning-rate floor"));
  last(app_train->add_option("--lr-factor", train.lr_factor, "plateau decay factor"));
  last(app_train->add_option("--patience", train.patience, "plateau patience"));
  last(app_train->add_option("--stop-patience", train.stop_patience, "early-stop patience"));
  last(app_train->add_option("--weight-decay", train.weight_decay, "Adam L2 weight decay"));
  last(app_train->add_option("--weight-ce", train.weight_ce, "loss weight for CE"));
  last(app_train->add_option("--weight-laa", train.weight_laa, "loss weight for LAA"));

  EnsembleArgs ensemble;
  CLI::App* app_ensemble =
      app.add_subcommand("ensemble", "Average prediction tables into a submission");
  app_ensemble->add_option("--config", "JSON config file (flags win)");
  app_ensemble->add_option("--inputs", ensemble.inputs, "prediction CSVs")->required();
  last(app_ensemble->add_option("--out", ensemble.out, "submission CSV path"))->required();

  EvaluateArgs evaluate;
  CLI::App* app_evaluate =
      app.add_subcommand("evaluate", "Score a submission with the weighted log loss");
  app_evaluate->add_option("--config", "JSON config file (flags win)");
  last(app_evaluate->add_option("--submission", evaluate.submission, "submission CSV"))
      ->required();
  last(app_evaluate->add_option("--solution", evaluate.solution,
                                "solution CSV (patient_id,label)"))
      ->required();
  last(app_evaluate->add_option("--weight-ce", evaluate.weight_ce, "class weight for CE"));
  last(app_evaluate->add_option("--weight-laa", evaluate.weight_laa, "class weight for LAA"));

  const std::map<std::string, CLI::App*> subs{
      {"preprocess", app_pre}, {"split", app_split},       {"pseudo", app_pseudo},
      {"train", app_train},    {"ensemble", app_ensemble}, {"evaluate", app_evaluate}};

  try {
    std::vector<std::string> args(argv + 1, argv + argc);
    for (const auto& arg : std::vector<std::string>(args)) {
      auto it = subs.find(arg);
      if (it != subs.end()) {
        args = inject_config(*it->second, it->first, std::move(args));
        break;  // only the first subcommand token counts
      }
    }
    std::vector<const char*> cargs;
    cargs.push_back("clotkit");
    for (const auto& arg : args) cargs.push_back(arg.c_str());
    app.parse(static_cast<int>(cargs.size()), cargs.data());

    if (app_pre->parsed()) return cmd_preprocess(pre);
    if (app_split->parsed()) return cmd_split(split);
    if (app_pseudo->parsed()) return cmd_pseudo(pseudo);
    if (app_train->parsed()) return cmd_train(train);
    if (app_ensemble->parsed()) return cmd_ensemble(ensemble);
    if (app_evaluate->parsed()) return cmd_evaluate(evaluate);
    std::cerr << "no subcommand selected\n";
    return 2;
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    std::cout << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    std::cerr << "error[" << errc_name(e.code()) << "]: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace clotkit::cli
