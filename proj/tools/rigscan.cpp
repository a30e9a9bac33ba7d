// rigscan: command-line front end for the bid-rigging image screen.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "rigscan/bid_data.hpp"
#include "rigscan/csv.hpp"
#include "rigscan/error.hpp"
#include "rigscan/experiment.hpp"
#include "rigscan/log.hpp"
#include "rigscan/manifest.hpp"
#include "rigscan/model.hpp"
#include "rigscan/raster.hpp"
#include "rigscan/screen.hpp"
#include "rigscan/synthgen.hpp"

#ifndef RIGSCAN_VERSION
#define RIGSCAN_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace rigscan;

namespace {

struct UsageError : Error {
  using Error::Error;
};

struct Globals {
  std::uint64_t seed = 0;
  fs::path out = ".";
  std::size_t jobs = 1;
  std::string log_level = "info";
};

struct TrainFlags {
  std::size_t epochs = 40;
  std::size_t batch_size = 16;
  double val_split = 0.1;
  std::string optimizer = "adam";
  double lr = 1e-3;
  double threshold = 0.5;

  void add(CLI::App& cmd) {
    cmd.add_option("--epochs", epochs, "Training epochs")->check(CLI::PositiveNumber)->capture_default_str();
    cmd.add_option("--batch-size", batch_size, "Minibatch size")->check(CLI::PositiveNumber)->capture_default_str();
    cmd.add_option("--val-split", val_split, "Validation fraction held out once")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    cmd.add_option("--optimizer", optimizer, "adam or sgd")
        ->check(CLI::IsMember({"adam", "sgd"}))
        ->capture_default_str();
    cmd.add_option("--lr", lr, "Learning rate")->check(CLI::PositiveNumber)->capture_default_str();
    cmd.add_option("--threshold", threshold, "Collusive when probability >= threshold")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
  }

  TrainConfig config(std::uint64_t seed) const {
    TrainConfig cfg;
    cfg.epochs = epochs;
    cfg.batch_size = batch_size;
    cfg.validation_fraction = val_split;
    cfg.optimizer.kind = parse_optimizer(optimizer);
    cfg.optimizer.learning_rate = lr;
    cfg.threshold = threshold;
    cfg.seed = seed;
    cfg.validate();
    return cfg;
  }
};

struct RasterFlags {
  std::size_t size = 64;
  int radius = 1;
  std::string mode = "additive";

  void add(CLI::App& cmd) {
    cmd.add_option("--size", size, "Image side in pixels")->capture_default_str();
    cmd.add_option("--radius", radius, "Marker radius in pixels")->capture_default_str();
    cmd.add_option("--mode", mode, "additive or binary")
        ->check(CLI::IsMember({"additive", "binary"}))
        ->capture_default_str();
  }

  RasterConfig config() const {
    RasterConfig cfg;
    cfg.size = size;
    cfg.marker_radius = radius;
    cfg.mode = mode == "binary" ? IntensityMode::Binary : IntensityMode::AdditiveSaturating;
    cfg.validate();
    return cfg;
  }
};

struct GraphFlags {
  std::size_t min_bids = 10;
  std::string period = "whole";

  void add(CLI::App& cmd) {
    cmd.add_option("--min-bids", min_bids, "Bids a firm needs to become a reference firm")->capture_default_str();
    cmd.add_option("--period", period, "whole or yearly")
        ->check(CLI::IsMember({"whole", "yearly"}))
        ->capture_default_str();
  }

  GraphBuildOptions options() const {
    return {min_bids, period == "yearly" ? PeriodPolicy::Yearly : PeriodPolicy::WholePeriod};
  }
};

struct MarketFlags {
  MarketConfig market;
  std::string regime = "competitive";

  void add(CLI::App& cmd, bool with_regime) {
    if (with_regime)
      cmd.add_option("--regime", regime, "competitive or cover")
          ->check(CLI::IsMember({"competitive", "cover"}))
          ->capture_default_str();
    cmd.add_option("--firms", market.n_firms, "Firms per market")->capture_default_str();
    cmd.add_option("--tenders", market.n_tenders, "Tenders per market")->capture_default_str();
    cmd.add_option("--min-bidders", market.min_bidders, "Fewest bidders per tender")->capture_default_str();
    cmd.add_option("--max-bidders", market.max_bidders, "Most bidders per tender")->capture_default_str();
    cmd.add_option("--noise", market.bid_noise, "Bid noise above cost")->capture_default_str();
    cmd.add_option("--gap", market.cover_gap, "Cover bid gap above the winner")->capture_default_str();
    cmd.add_option("--spread", market.cover_spread, "Spread of cover bids")->capture_default_str();
  }
};

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

json option_values(const CLI::App& app) {
  json j = json::object();
  for (const CLI::Option* opt : app.get_options()) {
    const std::string name = opt->get_single_name();
    if (name == "help" || name == "version" || name == "config" || name.empty()) continue;
    const auto& results = opt->results();
    if (results.empty())
      j[name] = opt->get_default_str();
    else if (results.size() == 1)
      j[name] = results.front();
    else
      j[name] = results;
  }
  return j;
}

// Resolved options, seed, inputs and outputs of one invocation.
class RunRecorder {
 public:
  RunRecorder(const CLI::App& root, const Globals& globals) : root_(root), globals_(globals) {}

  void input(const fs::path& p) { inputs_.push_back(p.generic_string()); }
  void output(const fs::path& p) { outputs_.push_back(p.generic_string()); }

  void write(const CLI::App& command) const {
    json j;
    j["tool"] = "rigscan";
    j["version"] = RIGSCAN_VERSION;
    std::string name;
    for (const CLI::App* c = &command; c && c != &root_; c = c->get_parent())
      name = name.empty() ? c->get_name() : c->get_name() + " " + name;
    j["command"] = name;
    j["seed"] = globals_.seed;
    j["global_options"] = option_values(root_);
    j["options"] = option_values(command);
    j["inputs"] = inputs_;
    j["outputs"] = outputs_;
    auto out = open_output(globals_.out / "run_manifest.json");
    out << j.dump(2) << '\n';
  }

 private:
  const CLI::App& root_;
  const Globals& globals_;
  std::vector<std::string> inputs_;
  std::vector<std::string> outputs_;
};

std::vector<LabeledImage> load_manifest_images(const fs::path& path) {
  return load_images(read_manifest(path));
}

void write_summary_files(const SimulationSummary& summary, const fs::path& dir, RunRecorder& rec) {
  const fs::path csv = dir / "summary.csv", txt = dir / "summary.txt", runs = dir / "runs.csv";
  {
    auto out = open_output(csv);
    write_summary_csv(summary, out);
  }
  {
    auto out = open_output(txt);
    write_summary_text(summary, out);
  }
  {
    auto out = open_output(runs);
    write_runs_csv(summary, out);
  }
  write_summary_text(summary, std::cout);
  rec.output(csv);
  rec.output(txt);
  rec.output(runs);
}

void log_run(const RunRecord& r) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "run %zu: accuracy %.4f, tpr %.4f, tnr %.4f", r.run, r.metrics.accuracy,
                r.metrics.true_positive_rate, r.metrics.true_negative_rate);
  log::info(buf);
}

log::Level parse_level(const std::string& s) {
  if (s == "debug") return log::Level::Debug;
  if (s == "warning") return log::Level::Warning;
  if (s == "error") return log::Level::Error;
  if (s == "off") return log::Level::Off;
  return log::Level::Info;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Screen procurement bids for collusion with a CNN over bid-interaction images"};
  app.set_version_flag("--version", std::string("rigscan ") + RIGSCAN_VERSION);
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML/INI file of option defaults (flags win)");

  Globals g;
  app.add_option("--seed", g.seed, "Base random seed")->envname("RIGSCAN_SEED")->capture_default_str();
  app.add_option("--out", g.out, "Output directory")->capture_default_str();
  app.add_option("--jobs", g.jobs, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--log-level", g.log_level, "debug, info, warning, error or off")
      ->check(CLI::IsMember({"debug", "info", "warning", "error", "off"}))
      ->capture_default_str();

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Validate a bid CSV and write it in canonical form");
  fs::path ingest_input, ingest_schema;
  ingest->add_option("--input", ingest_input, "Bid CSV")->required()->check(CLI::ExistingFile);
  ingest->add_option("--schema", ingest_schema, "Column mapping file")->check(CLI::ExistingFile);

  // graphs
  auto* graphs = app.add_subcommand("graphs", "Build interaction graphs for every eligible reference firm");
  fs::path graphs_input, graphs_schema;
  GraphFlags graph_flags;
  graphs->add_option("--input", graphs_input, "Bid CSV")->required()->check(CLI::ExistingFile);
  graphs->add_option("--schema", graphs_schema, "Column mapping file")->check(CLI::ExistingFile);
  graph_flags.add(*graphs);

  // rasterize
  auto* rasterize_cmd = app.add_subcommand("rasterize", "Render graphs to PGM images and a manifest");
  fs::path raster_input;
  std::string raster_source;
  RasterFlags raster_flags;
  rasterize_cmd->add_option("--graphs", raster_input, "graphs.jsonl")->required()->check(CLI::ExistingFile);
  rasterize_cmd->add_option("--source", raster_source, "Source tag for the manifest (default: file stem)");
  raster_flags.add(*rasterize_cmd);

  // synth
  auto* synth = app.add_subcommand("synth", "Generate synthetic markets");
  synth->require_subcommand(1);
  auto* synth_bids = synth->add_subcommand("bids", "One market as a bid CSV");
  MarketFlags bids_flags;
  bids_flags.add(*synth_bids, true);
  auto* synth_corpus = synth->add_subcommand("corpus", "Labeled image corpus from cartel and competitive markets");
  MarketFlags corpus_flags;
  GraphFlags corpus_graph_flags;
  RasterFlags corpus_raster_flags;
  std::size_t n_collusive = 239, n_competitive = 288;
  std::string corpus_source = "synthetic";
  synth_corpus->add_option("--collusive", n_collusive, "Collusive graphs")->capture_default_str();
  synth_corpus->add_option("--competitive", n_competitive, "Competitive graphs")->capture_default_str();
  synth_corpus->add_option("--source", corpus_source, "Source tag")->capture_default_str();
  corpus_flags.add(*synth_corpus, false);
  corpus_graph_flags.add(*synth_corpus);
  corpus_raster_flags.add(*synth_corpus);

  // train
  auto* train_cmd = app.add_subcommand("train", "Train a classifier on a labeled manifest");
  fs::path train_manifest;
  TrainFlags train_flags;
  train_cmd->add_option("--manifest", train_manifest, "Manifest CSV")->required()->check(CLI::ExistingFile);
  train_flags.add(*train_cmd);

  // predict
  auto* predict_cmd = app.add_subcommand("predict", "Score images with a trained model");
  fs::path predict_model, predict_manifest;
  std::vector<fs::path> predict_images;
  predict_cmd->add_option("--model", predict_model, "Model file")->required()->check(CLI::ExistingFile);
  auto* pm = predict_cmd->add_option("--manifest", predict_manifest, "Manifest CSV")->check(CLI::ExistingFile);
  auto* pi = predict_cmd->add_option("--image", predict_images, "PGM image (repeatable)")->check(CLI::ExistingFile);
  pm->excludes(pi);
  pi->excludes(pm);

  // experiment
  auto* experiment_cmd = app.add_subcommand("experiment", "Repeated random-split evaluation on one corpus");
  fs::path exp_manifest;
  TrainFlags exp_train;
  std::size_t exp_sims = 20;
  double exp_test = 0.25;
  bool exp_stratified = false;
  experiment_cmd->add_option("--manifest", exp_manifest, "Manifest CSV")->required()->check(CLI::ExistingFile);
  experiment_cmd->add_option("--sims", exp_sims, "Simulation runs")->check(CLI::PositiveNumber)->capture_default_str();
  experiment_cmd->add_option("--test-split", exp_test, "Test fraction")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  experiment_cmd->add_flag("--stratified", exp_stratified, "Stratify splits by class");
  exp_train.add(*experiment_cmd);

  // transfer
  auto* transfer_cmd = app.add_subcommand("transfer", "Train on one corpus, test on another");
  fs::path tr_train, tr_test;
  TrainFlags tr_flags;
  std::size_t tr_sims = 20;
  transfer_cmd->add_option("--train-manifest", tr_train, "Training manifest")->required()->check(CLI::ExistingFile);
  transfer_cmd->add_option("--test-manifest", tr_test, "Test manifest")->required()->check(CLI::ExistingFile);
  transfer_cmd->add_option("--sims", tr_sims, "Simulation runs")->check(CLI::PositiveNumber)->capture_default_str();
  tr_flags.add(*transfer_cmd);

  // summarize
  auto* summarize_cmd = app.add_subcommand("summarize", "Six-number summary of a list of values");
  fs::path sum_input;
  std::string sum_column = "accuracy";
  std::vector<double> sum_values;
  summarize_cmd->add_option("values", sum_values, "Values (alternative to --input)");
  summarize_cmd->add_option("--input", sum_input, "CSV file")->check(CLI::ExistingFile);
  summarize_cmd->add_option("--column", sum_column, "Column of --input to summarize")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  log::set_level(parse_level(g.log_level));
  RunRecorder rec(app, g);

  try {
    ensure_dir(g.out);
    const CLI::App* done = nullptr;

    if (*ingest) {
      const ColumnSchema schema = ingest_schema.empty() ? ColumnSchema{} : ColumnSchema::load(ingest_schema);
      const Dataset ds = ingest_csv(ingest_input, schema);
      const fs::path out = g.out / "bids.csv";
      export_csv(ds, out);
      std::cout << ds.tenders().size() << " tenders, " << ds.bid_count() << " bids, " << ds.firms().size()
                << " firms\n";
      rec.input(ingest_input);
      rec.output(out);
      done = ingest;
    } else if (*graphs) {
      const ColumnSchema schema = graphs_schema.empty() ? ColumnSchema{} : ColumnSchema::load(graphs_schema);
      const Dataset ds = ingest_csv(graphs_input, schema);
      const GraphBuildOptions opts = graph_flags.options();
      if (eligible_reference_firms(ds, opts.min_bids).empty())
        throw NoEligibleTenders("no firm has at least " + std::to_string(opts.min_bids) + " bids in " +
                                graphs_input.string());
      const auto built = build_graphs(ds, opts);
      if (built.empty()) throw NoEligibleTenders("no eligible firm has a non-degenerate tender");
      const fs::path out = g.out / "graphs.jsonl";
      auto f = open_output(out);
      write_graphs_jsonl(f, built);
      std::cout << built.size() << " graphs\n";
      rec.input(graphs_input);
      rec.output(out);
      done = graphs;
    } else if (*rasterize_cmd) {
      std::ifstream in(raster_input, std::ios::binary);
      std::vector<CorpusItem> items;
      const RasterConfig cfg = raster_flags.config();
      const std::string source = raster_source.empty() ? raster_input.stem().string() : raster_source;
      for (InteractionGraph& graph : read_graphs_jsonl(in)) {
        CorpusItem item;
        item.image.image = rasterize(graph, cfg);
        item.image.label = graph.label;
        item.image.source = source;
        item.graph = std::move(graph);
        items.push_back(std::move(item));
      }
      write_corpus(items, g.out);
      std::cout << items.size() << " images\n";
      rec.input(raster_input);
      rec.output(g.out / "manifest.csv");
      done = rasterize_cmd;
    } else if (*synth_bids) {
      MarketConfig m = bids_flags.market;
      m.regime = parse_regime(bids_flags.regime);
      m.seed = g.seed;
      const Dataset ds = generate(m);
      const fs::path out = g.out / "bids.csv";
      export_csv(ds, out);
      std::cout << ds.tenders().size() << " tenders, " << ds.bid_count() << " bids\n";
      rec.output(out);
      done = synth_bids;
    } else if (*synth_corpus) {
      CorpusPreset preset = default_corpus(n_collusive, n_competitive, g.seed, corpus_source);
      for (CorpusRequest& r : preset.requests) {
        const auto regime = r.market.regime;
        const auto seed = r.market.seed;
        r.market = corpus_flags.market;
        r.market.regime = regime;
        r.market.seed = seed;
      }
      CorpusOptions opts;
      opts.raster = corpus_raster_flags.config();
      opts.graph = corpus_graph_flags.options();
      opts.jobs = g.jobs;
      const auto items = generate_corpus(preset.requests, opts);
      write_corpus(items, g.out);
      std::cout << items.size() << " images (" << n_collusive << " collusive, " << n_competitive
                << " competitive)\n";
      rec.output(g.out / "manifest.csv");
      rec.output(g.out / "graphs.jsonl");
      done = synth_corpus;
    } else if (*train_cmd) {
      const auto images = load_manifest_images(train_manifest);
      const TrainConfig cfg = train_flags.config(g.seed);
      const TrainResult result = train(images, cfg, [](const EpochStats& e) {
        char buf[128];
        std::snprintf(buf, sizeof buf, "epoch %zu: loss %.6f, train %.4f, validation %.4f", e.epoch, e.loss,
                      e.train_accuracy, e.validation_accuracy);
        log::info(buf);
      });
      const fs::path model = g.out / "model.rgsn", history = g.out / "training.csv";
      save_model(result.model, model);
      auto f = open_output(history);
      result.report.write_csv(f);
      rec.input(train_manifest);
      rec.output(model);
      rec.output(history);
      done = train_cmd;
    } else if (*predict_cmd) {
      if (predict_manifest.empty() && predict_images.empty()) throw UsageError("give --manifest or --image");
      const CnnModel model = load_model(predict_model);
      std::vector<LabeledImage> images;
      std::vector<fs::path> paths;
      if (!predict_manifest.empty()) {
        const Manifest m = read_manifest(predict_manifest);
        images = load_images(m);
        for (const auto& e : m) paths.push_back(e.image_path);
        rec.input(predict_manifest);
      } else {
        for (const auto& p : predict_images) {
          images.push_back(LabeledImage{read_pgm(p), ClassLabel::Unlabeled, ""});
          paths.push_back(p);
          rec.input(p);
        }
      }
      const auto preds = predict_batch(model, images);
      const fs::path out = g.out / "predictions.csv";
      auto f = open_output(out);
      f << "image_path,probability,predicted,label\n";
      std::vector<ClassLabel> truth, predicted;
      for (std::size_t i = 0; i < preds.size(); ++i) {
        char prob[32];
        std::snprintf(prob, sizeof prob, "%.6f", preds[i].probability);
        f << csv::escape(paths[i].generic_string()) << ',' << prob << ',' << label_code(preds[i].label) << ','
          << label_code(images[i].label) << '\n';
        if (images[i].label != ClassLabel::Unlabeled) {
          truth.push_back(images[i].label);
          predicted.push_back(preds[i].label);
        }
      }
      if (!truth.empty()) {
        const EvalMetrics m = compute_metrics(truth, predicted);
        std::printf("accuracy %.4f, tpr %.4f, tnr %.4f (%zu labeled)\n", m.accuracy, m.true_positive_rate,
                    m.true_negative_rate, m.total());
      }
      rec.input(predict_model);
      rec.output(out);
      done = predict_cmd;
    } else if (*experiment_cmd) {
      const auto images = load_manifest_images(exp_manifest);
      ExperimentConfig cfg;
      cfg.train = exp_train.config(g.seed);
      cfg.split.test_fraction = exp_test;
      cfg.split.stratified = exp_stratified;
      cfg.n_runs = exp_sims;
      cfg.base_seed = g.seed;
      cfg.jobs = g.jobs;
      cfg.on_run = log_run;
      const auto summary = run_within_domain(images, cfg);
      rec.input(exp_manifest);
      write_summary_files(summary, g.out, rec);
      done = experiment_cmd;
    } else if (*transfer_cmd) {
      const auto train_images = load_manifest_images(tr_train);
      const auto test_images = load_manifest_images(tr_test);
      ExperimentConfig cfg;
      cfg.train = tr_flags.config(g.seed);
      cfg.n_runs = tr_sims;
      cfg.base_seed = g.seed;
      cfg.jobs = g.jobs;
      cfg.on_run = log_run;
      const auto summary = run_transfer(train_images, test_images, cfg);
      rec.input(tr_train);
      rec.input(tr_test);
      write_summary_files(summary, g.out, rec);
      done = transfer_cmd;
    } else if (*summarize_cmd) {
      std::vector<double> values = sum_values;
      if (!sum_input.empty()) {
        if (!values.empty()) throw UsageError("give values or --input, not both");
        std::ifstream in(sum_input, std::ios::binary);
        const auto rows = csv::read(in);
        if (rows.empty()) throw EmptyInput(sum_input.string() + " is empty");
        const auto& header = rows.front().fields;
        const auto it = std::find(header.begin(), header.end(), sum_column);
        if (it == header.end()) throw ParseError(rows.front().line, "no column '" + sum_column + "'");
        const auto col = static_cast<std::size_t>(it - header.begin());
        for (std::size_t r = 1; r < rows.size(); ++r) {
          double v = 0.0;
          if (col >= rows[r].fields.size() || !csv::parse_double(csv::trim(rows[r].fields[col]), v))
            throw ParseError(rows[r].line, "value in column '" + sum_column + "' is not a number");
          values.push_back(v);
        }
        rec.input(sum_input);
      }
      const Summary s = summarize(values);
      const fs::path out = g.out / "summary_stats.csv";
      std::string text = "Minimum,1st quartile,Median,Mean,3rd quartile,Maximum,Observations\n";
      for (double v : {s.minimum, s.first_quartile, s.median, s.mean, s.third_quartile, s.maximum})
        text += csv::format_double(v) + ',';
      text += std::to_string(values.size()) + '\n';
      std::cout << text;
      auto f = open_output(out);
      f << text;
      rec.output(out);
      done = summarize_cmd;
    }

    if (done) rec.write(*done);
    return 0;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
