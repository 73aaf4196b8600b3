// someip-ids: batch front end for the SOME/IP intrusion-detection workbench.
// Subcommands wire the pipeline stages together: generate labeled traffic,
// prepare one-hot sequence datasets, train the recurrent classifier with
// k-fold cross-validation, evaluate checkpoints, and reproduce the full
// reference experiment end to end.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "someip_ids/eval.hpp"
#include "someip_ids/hash.hpp"
#include "someip_ids/manifest.hpp"
#include "someip_ids/netsim.hpp"
#include "someip_ids/pcap.hpp"
#include "someip_ids/pipeline.hpp"
#include "someip_ids/reproduce.hpp"
#include "someip_ids/seqnet.hpp"
#include "someip_ids/util.hpp"

namespace {

using namespace someip_ids;
namespace fs = std::filesystem;

constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitCorpus = 4;
constexpr int kExitTraining = 5;
constexpr int kExitEncoderMismatch = 6;

// SOMEIP_IDS_OUT_DIR reroutes relative output paths under one directory.
std::string resolve_out(const std::string& path) {
  if (path.empty()) return path;
  const char* base = std::getenv("SOMEIP_IDS_OUT_DIR");
  if (!base || !*base || fs::path(path).is_absolute()) return path;
  fs::create_directories(base);
  return (fs::path(base) / path).string();
}

void ensure_parent_dir(const std::string& path) {
  fs::path parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
}

std::string join_args(int argc, char** argv) {
  std::string cmd;
  for (int i = 0; i < argc; ++i) {
    if (i) cmd += ' ';
    cmd += argv[i];
  }
  return cmd;
}

std::string derived_label_path(const std::string& pcap) {
  fs::path p(pcap);
  p.replace_extension();
  return p.string() + ".labels.jsonl";
}

struct GenerateArgs {
  std::string config_path;
  std::string attack = "none";
  int attacks = -1;
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string out_pcap = "output.pcap";
  std::string out_labels;
};

int cmd_generate(const GenerateArgs& args, const std::string& command) {
  ScenarioConfig cfg =
      args.config_path.empty() ? reference_scenario()
                               : ScenarioConfig::load_file(args.config_path);
  if (args.attack == "none") {
    cfg.attack_type = std::nullopt;
    cfg.attacks_to_execute = 0;
  } else if (!args.attack.empty()) {
    cfg.attack_type = attack_type_from_name(args.attack);
  }
  if (args.attacks >= 0)
    cfg.attacks_to_execute = static_cast<std::uint32_t>(args.attacks);
  if (args.seed_given) cfg.seed = args.seed;
  std::string pcap_path = resolve_out(
      args.out_pcap.empty() ? cfg.output_path : args.out_pcap);
  std::string label_path = resolve_out(
      args.out_labels.empty() ? derived_label_path(pcap_path) : args.out_labels);
  cfg.output_path = pcap_path;
  cfg.validate();

  std::vector<LabeledPacket> packets = generate_scenario(cfg);
  ensure_parent_dir(pcap_path);
  ensure_parent_dir(label_path);
  write_pcap(packets, pcap_path);
  write_labels(packets, label_path);

  std::array<std::uint64_t, kNumClasses> label_counts{};
  for (const LabeledPacket& p : packets)
    if (p.label >= 0 && p.label < kNumClasses)
      ++label_counts[static_cast<std::size_t>(p.label)];

  RunManifest m;
  m.tool = "generate";
  m.command = command;
  m.seed = cfg.seed;
  m.config_sha256 = sha256_hex(cfg.to_json().dump());
  m.outputs = {digest_file(pcap_path), digest_file(label_path)};
  m.stats = {{"packets", packets.size()},
             {"packet_label_counts", label_counts},
             {"attack", cfg.attack_type ? attack_type_name(*cfg.attack_type)
                                        : "none"},
             {"attacks_to_execute", cfg.attacks_to_execute}};
  write_sidecar(m, pcap_path);
  write_sidecar(m, label_path);

  std::cout << "wrote " << packets.size() << " packets to " << pcap_path
            << "\nwrote labels to " << label_path << "\nlabel counts:";
  for (std::size_t c = 0; c < kNumClasses; ++c)
    std::cout << " " << kClassNames[c] << "=" << label_counts[c];
  std::cout << std::endl;
  return 0;
}

struct PrepareArgs {
  std::vector<std::string> pcaps;
  std::vector<std::string> labels;
  std::string encoder_path;
  std::uint32_t max_len = kDefaultMaxSeqLen;
  std::string out = "corpus.dataset";
};

int cmd_prepare(const PrepareArgs& args, const std::string& command) {
  if (args.pcaps.empty())
    throw std::invalid_argument("prepare: at least one --pcap is required");
  if (!args.labels.empty() && args.labels.size() != args.pcaps.size())
    throw std::invalid_argument(
        "prepare: --labels count must match --pcap count");
  std::vector<PcapLabelPair> pairs;
  for (std::size_t i = 0; i < args.pcaps.size(); ++i)
    pairs.push_back({args.pcaps[i], args.labels.empty()
                                        ? derived_label_path(args.pcaps[i])
                                        : args.labels[i]});

  std::optional<Encoder> reuse;
  if (!args.encoder_path.empty()) {
    std::ifstream ef(args.encoder_path);
    if (!ef)
      throw ManifestError(ManifestError::Kind::kIo,
                          "cannot open " + args.encoder_path);
    nlohmann::json j;
    ef >> j;
    reuse = Encoder::from_json(j);
  }

  AssemblyStats stats;
  Dataset ds = assemble_dataset(pairs, reuse ? &*reuse : nullptr, args.max_len,
                                &stats);

  std::string out = resolve_out(args.out);
  ensure_parent_dir(out);
  save_dataset(ds, out);
  std::string encoder_out = out + ".encoder.json";
  {
    std::ofstream ef(encoder_out, std::ios::trunc);
    ef << ds.encoder.to_json().dump(2) << "\n";
    if (!ef)
      throw ManifestError(ManifestError::Kind::kIo,
                          "write failed on " + encoder_out);
  }

  RunManifest m;
  m.tool = "prepare";
  m.command = command;
  for (const PcapLabelPair& p : pairs) {
    m.inputs.push_back(digest_file(p.pcap));
    m.inputs.push_back(digest_file(p.labels));
  }
  m.outputs = {digest_file(out), digest_file(encoder_out)};
  m.stats = {{"packets", stats.packets},
             {"skipped_frames", stats.skipped_frames},
             {"sequences", stats.sessions},
             {"sequence_counts", stats.sequence_counts},
             {"packet_label_counts", stats.packet_label_counts},
             {"encoder_width", stats.encoder_width},
             {"max_sequence_length", stats.max_true_len},
             {"max_len", args.max_len}};
  m.notes = {"per-class counts are labeled sequences (sessions), not raw "
             "packets"};
  write_sidecar(m, out);
  write_sidecar(m, encoder_out);

  std::cout << "prepared " << stats.sessions << " sequences ("
            << stats.packets << " packets, one-hot width "
            << stats.encoder_width << ") -> " << out << "\nsequence counts:";
  for (std::size_t c = 0; c < kNumClasses; ++c)
    std::cout << " " << kClassNames[c] << "=" << stats.sequence_counts[c];
  std::cout << "\nencoder vocabulary -> " << encoder_out << std::endl;
  return 0;
}

struct TrainArgs {
  std::string dataset;
  int folds = 3;
  int jobs = 0;  // 0 = one thread per fold
  double lr = 0.001;
  std::uint32_t batch = 100;
  std::uint32_t epochs = 50;
  std::uint32_t patience = 5;
  double clip = 5.0;
  bool mask_padding = false;
  std::uint64_t seed = 1;
  std::string class_weights;  // "", "auto", or a JSON file
  std::string out_dir = "models";
};

std::array<double, kNumClasses> resolve_class_weights(const TrainArgs& args,
                                                      const Dataset& ds) {
  if (args.class_weights.empty()) {
    if (ds.weights_set) return ds.class_weights;
    // fall through to auto
  }
  if (args.class_weights.empty() || args.class_weights == "auto") {
    // Inverse frequency over the classes that actually occur; a class with
    // no samples never enters the loss, so it takes a neutral weight.
    std::vector<std::uint64_t> present;
    for (std::uint64_t c : ds.class_counts)
      if (c > 0) present.push_back(c);
    std::vector<double> w =
        compute_class_weights(present, WeightMode::kInverseFrequency);
    std::array<double, kNumClasses> out{};
    std::size_t next = 0;
    for (std::size_t i = 0; i < kNumClasses; ++i)
      out[i] = ds.class_counts[i] > 0 ? w[next++] : 1.0;
    return out;
  }
  std::ifstream f(args.class_weights);
  if (!f)
    throw ManifestError(ManifestError::Kind::kIo,
                        "cannot open " + args.class_weights);
  nlohmann::json j;
  f >> j;
  std::vector<double> w = j.get<std::vector<double>>();
  if (w.size() != kNumClasses)
    throw std::invalid_argument("class weight file must hold exactly " +
                                std::to_string(kNumClasses) + " values");
  std::array<double, kNumClasses> out{};
  std::copy(w.begin(), w.end(), out.begin());
  return out;
}

int cmd_train(const TrainArgs& args, const std::string& command) {
  verify_chained_input(args.dataset);
  Dataset ds = load_dataset(args.dataset);
  std::string out_dir = resolve_out(args.out_dir);
  fs::create_directories(out_dir);

  TrainConfig cfg;
  cfg.lr = args.lr;
  cfg.batch_size = args.batch;
  cfg.max_epochs = args.epochs;
  cfg.patience = args.patience;
  cfg.clip_norm = args.clip;
  cfg.mask_padding = args.mask_padding;
  cfg.seed = args.seed;
  cfg.class_weights = resolve_class_weights(args, ds);

  int jobs = args.jobs > 0 ? args.jobs : args.folds;
  std::vector<RnnModel> models;
  CvReport cv = cross_validate(ds, cfg, args.folds, jobs, &models);

  nlohmann::json report = cv_report_to_json(cv);
  report["class_weights"] = cfg.class_weights;
  report["hyperparameters"] = {{"lr", cfg.lr},
                               {"batch_size", cfg.batch_size},
                               {"max_epochs", cfg.max_epochs},
                               {"patience", cfg.patience},
                               {"clip_norm", cfg.clip_norm},
                               {"mask_padding", cfg.mask_padding},
                               {"seed", cfg.seed},
                               {"folds", args.folds}};
  std::string report_path = (fs::path(out_dir) / "cv_report.json").string();
  {
    std::ofstream rf(report_path, std::ios::trunc);
    rf << report.dump(2) << "\n";
    if (!rf)
      throw ManifestError(ManifestError::Kind::kIo,
                          "write failed on " + report_path);
  }

  RunManifest m;
  m.tool = "train";
  m.command = command;
  m.seed = args.seed;
  m.inputs = {digest_file(args.dataset)};
  m.stats = {{"folds", args.folds}, {"class_weights", cfg.class_weights}};

  std::cout << std::fixed << std::setprecision(4);
  for (std::size_t f = 0; f < models.size(); ++f) {
    std::string path =
        (fs::path(out_dir) / ("model_fold" + std::to_string(f + 1) + ".bin"))
            .string();
    save_model(models[f], path);
    m.outputs.push_back(digest_file(path));
    const FoldReport& fr = cv.folds[f];
    std::cout << "fold " << fr.fold << ": best epoch " << fr.history.best_epoch
              << "/" << fr.history.stopped_epoch << ", val loss "
              << fr.history.val_loss[static_cast<std::size_t>(
                     fr.history.best_epoch - 1)]
              << ", F1";
    for (std::size_t c = 0; c < kNumClasses; ++c)
      std::cout << " " << kClassNames[c] << "="
                << std::setprecision(2) << fr.eval.per_class[c].f1
                << std::setprecision(4);
    std::cout << "\n  -> " << path << "\n";
  }
  m.outputs.push_back(digest_file(report_path));
  write_sidecar(m, report_path);
  for (std::size_t f = 0; f < models.size(); ++f) {
    std::string path =
        (fs::path(out_dir) / ("model_fold" + std::to_string(f + 1) + ".bin"))
            .string();
    write_sidecar(m, path);
  }
  std::cout << "cross-validation report -> " << report_path << std::endl;
  return 0;
}

struct EvaluateArgs {
  std::vector<std::string> models;
  std::string dataset;
  std::string out_dir = "eval";
  bool mask_padding = false;
};

int cmd_evaluate(const EvaluateArgs& args, const std::string& command) {
  if (args.models.empty())
    throw std::invalid_argument("evaluate: at least one --model is required");
  verify_chained_input(args.dataset);
  Dataset ds = load_dataset(args.dataset);
  std::string out_dir = resolve_out(args.out_dir);
  fs::create_directories(out_dir);

  RunManifest m;
  m.tool = "evaluate";
  m.command = command;
  m.inputs = {digest_file(args.dataset)};

  nlohmann::json aggregate = nlohmann::json::array();
  std::cout << std::left;
  for (std::size_t i = 0; i < args.models.size(); ++i) {
    verify_chained_input(args.models[i]);
    RnnModel model = load_model(args.models[i]);
    m.inputs.push_back(digest_file(args.models[i]));
    EvalReport rep = evaluate_model(model, ds, args.mask_padding);

    std::string tag = "model" + std::to_string(i + 1);
    std::string report_path =
        (fs::path(out_dir) / ("report_" + tag + ".json")).string();
    {
      std::ofstream rf(report_path, std::ios::trunc);
      rf << report_to_json(rep, true).dump(2) << "\n";
    }
    write_roc_csv(rep.roc,
                  (fs::path(out_dir) / ("roc_" + tag + ".csv")).string());
    write_confusion_csv(
        rep.cm, (fs::path(out_dir) / ("confusion_" + tag + ".csv")).string());
    m.outputs.push_back(digest_file(report_path));
    aggregate.push_back({{"model", args.models[i]},
                         {"metrics", report_to_json(rep, false)}});

    std::cout << "model " << (i + 1) << " (" << args.models[i]
              << "): accuracy " << std::fixed << std::setprecision(4)
              << rep.accuracy << "\n";
    std::cout << "  " << std::setw(18) << "class" << std::setw(10) << "recall"
              << std::setw(10) << "precision" << std::setw(10) << "f1"
              << std::setw(10) << "auc"
              << "support\n";
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      const ClassMetrics& cm = rep.per_class[c];
      std::cout << "  " << std::setw(18) << kClassNames[c] << std::fixed
                << std::setprecision(2) << std::setw(10) << cm.recall
                << std::setw(10) << cm.precision << std::setw(10) << cm.f1
                << std::setw(10)
                << (rep.roc.per_class[c]
                        ? std::to_string(rep.roc.per_class[c]->auc).substr(0, 4)
                        : "n/a")
                << cm.support << "\n";
    }
    std::cout << "  micro AUC " << std::setprecision(4) << rep.roc.micro.auc
              << ", macro AUC " << rep.roc.macro.auc << std::endl;
  }

  std::string agg_path = (fs::path(out_dir) / "aggregate.json").string();
  {
    std::ofstream af(agg_path, std::ios::trunc);
    af << aggregate.dump(2) << "\n";
  }
  m.outputs.push_back(digest_file(agg_path));
  write_sidecar(m, agg_path);
  std::cout << "reports -> " << out_dir << std::endl;
  return 0;
}

struct ReproduceArgs {
  std::uint64_t seed = 1;
  std::string out_dir = "reproduce_out";
  int jobs = 3;
  int folds = 3;
};

int cmd_reproduce(const ReproduceArgs& args, const std::string& command) {
  ReproduceOptions opts;
  opts.seed = args.seed;
  opts.out_dir = resolve_out(args.out_dir);
  opts.jobs = args.jobs;
  opts.folds = args.folds;
  ReproduceResult result = run_reproduce(opts, &std::cout);
  print_comparison(result, std::cout);

  RunManifest m;
  m.tool = "reproduce";
  m.command = command;
  m.seed = args.seed;
  std::string report_path = (fs::path(opts.out_dir) / "report.json").string();
  m.outputs = {digest_file(report_path)};
  for (const std::string& p : result.model_paths)
    m.outputs.push_back(digest_file(p));
  m.stats = {{"train_sequences", result.train.stats.sessions},
             {"test_sequences", result.test.stats.sessions},
             {"total_seconds", result.total_seconds}};
  m.notes = {"reference metric columns are fixed constants baked into the "
             "binary; only the obtained columns depend on --seed"};
  write_sidecar(m, report_path);
  return 0;
}

int dispatch(int argc, char** argv) {
  CLI::App app{"SOME/IP intrusion-detection workbench"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);
  std::string command = join_args(argc, argv);

  GenerateArgs gen;
  CLI::App* g = app.add_subcommand(
      "generate", "Generate labeled SOME/IP traffic (pcap + label sidecar)");
  g->add_option("--config", gen.config_path,
                "Scenario config JSON (default: built-in 8x8x3 scenario)");
  g->add_option("--attack", gen.attack,
                "error_on_event|error_on_error|missing_response|"
                "missing_request|none");
  g->add_option("--attacks", gen.attacks, "Number of attacks to execute");
  g->add_option("--seed", gen.seed, "RNG seed")
      ->each([&gen](const std::string&) { gen.seed_given = true; });
  g->add_option("--out", gen.out_pcap, "Output pcap path");
  g->add_option("--labels", gen.out_labels,
                "Label sidecar path (default: <out>.labels.jsonl)");

  PrepareArgs prep;
  CLI::App* p = app.add_subcommand(
      "prepare", "Group captures into padded one-hot sequence datasets");
  p->add_option("--pcap", prep.pcaps, "Input pcap (repeatable)")->required();
  p->add_option("--labels", prep.labels,
                "Label sidecar per pcap (default: derived)");
  p->add_option("--encoder", prep.encoder_path,
                "Reuse a fitted encoder JSON instead of fitting");
  p->add_option("--max-len", prep.max_len, "Padded sequence length");
  p->add_option("--out", prep.out, "Output dataset path");

  TrainArgs tr;
  CLI::App* t = app.add_subcommand(
      "train", "Train the recurrent classifier with k-fold cross-validation");
  t->add_option("--dataset", tr.dataset, "Training dataset")->required();
  t->add_option("--folds", tr.folds, "Cross-validation folds");
  t->add_option("--jobs", tr.jobs, "Parallel fold workers (default: folds)");
  t->add_option("--lr", tr.lr, "Adam learning rate");
  t->add_option("--batch", tr.batch, "Batch size");
  t->add_option("--epochs", tr.epochs, "Maximum epochs");
  t->add_option("--patience", tr.patience, "Early-stopping patience");
  t->add_option("--clip", tr.clip, "Gradient norm clip (0 disables)");
  t->add_flag("--mask-padding", tr.mask_padding,
              "Stop recurrence at each sequence's true length");
  t->add_option("--seed", tr.seed, "RNG seed");
  t->add_option("--class-weights", tr.class_weights,
                "'auto' (inverse frequency) or a JSON file with 5 weights");
  t->add_option("--out-dir", tr.out_dir, "Checkpoint/report directory");

  EvaluateArgs ev;
  CLI::App* e = app.add_subcommand(
      "evaluate", "Evaluate checkpoints on a prepared dataset");
  e->add_option("--model", ev.models, "Model checkpoint (repeatable)")
      ->required();
  e->add_option("--dataset", ev.dataset, "Evaluation dataset")->required();
  e->add_flag("--mask-padding", ev.mask_padding,
              "Stop recurrence at each sequence's true length");
  e->add_option("--out-dir", ev.out_dir, "Report directory");

  ReproduceArgs rep;
  CLI::App* r = app.add_subcommand(
      "reproduce",
      "Run the full experiment and print obtained vs reference metrics");
  r->add_option("--seed", rep.seed, "RNG seed");
  r->add_option("--out-dir", rep.out_dir, "Output directory");
  r->add_option("--jobs", rep.jobs, "Parallel fold workers");
  r->add_option("--folds", rep.folds, "Cross-validation folds");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    int code = app.exit(err);
    return code == 0 ? 0 : kExitConfig;
  }

  if (g->parsed()) return cmd_generate(gen, command);
  if (p->parsed()) return cmd_prepare(prep, command);
  if (t->parsed()) return cmd_train(tr, command);
  if (e->parsed()) return cmd_evaluate(ev, command);
  if (r->parsed()) return cmd_reproduce(rep, command);
  return kExitConfig;
}

int map_exception() {
  try {
    throw;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return kExitConfig;
  } catch (const CorpusIntegrityError& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return kExitCorpus;
  } catch (const ManifestError& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return e.kind == ManifestError::Kind::kIo ? kExitIo : kExitCorpus;
  } catch (const PcapError& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return e.kind == PcapError::Kind::kIndexMismatch ? kExitCorpus : kExitIo;
  } catch (const CodecError& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return kExitCorpus;
  } catch (const PipelineError& e) {
    std::cerr << "error: " << e.what() << std::endl;
    switch (e.kind) {
      case PipelineError::Kind::kMixedEvidence:
      case PipelineError::Kind::kMixedAttackLabels:
      case PipelineError::Kind::kSequenceTooLong:
        return kExitCorpus;
      case PipelineError::Kind::kEncoderMismatch:
        return kExitEncoderMismatch;
      case PipelineError::Kind::kBadContainer:
        return kExitIo;
      case PipelineError::Kind::kEmptyInput:
      case PipelineError::Kind::kZeroCount:
        return kExitConfig;
    }
    return kExitCorpus;
  } catch (const SeqnetError& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return e.kind == SeqnetError::Kind::kEncoderHashMismatch
               ? kExitEncoderMismatch
               : kExitTraining;
  } catch (const EvalError& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return kExitTraining;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return kExitIo;
  }
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return dispatch(argc, argv);
  } catch (...) {
    return map_exception();
  }
}
