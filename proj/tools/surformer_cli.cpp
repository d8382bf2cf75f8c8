// Command-line front end: dataset generation, feature extraction, importance
// ranking, PCA, model training, evaluation, latency benchmarking and report
// assembly.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "surformer/surformer.hpp"
#include "surformer/io/model_store.hpp"

namespace fs = std::filesystem;
using namespace surformer;

namespace {

std::uint64_t resolve_seed(std::uint64_t cli_seed) {
  // SURFORMER_SEED wins over --seed when set.
  if (const char* env = std::getenv("SURFORMER_SEED")) {
    return static_cast<std::uint64_t>(std::strtoull(env, nullptr, 10));
  }
  return cli_seed;
}

Tensor gather_rows(const Tensor& x, const std::vector<std::size_t>& idx) {
  Tensor out({idx.size(), x.dim(1)});
  for (std::size_t i = 0; i < idx.size(); ++i) {
    for (std::size_t j = 0; j < x.dim(1); ++j) out.at(i, j) = x.at(idx[i], j);
  }
  return out;
}

Tensor top7_columns(const Tensor& all_features) {
  Tensor out({all_features.dim(0), 7});
  for (std::size_t i = 0; i < all_features.dim(0); ++i) {
    for (std::size_t j = 0; j < 7; ++j) out.at(i, j) = all_features.at(i, j);
  }
  return out;
}

std::vector<double> column_importances(const Tensor& x, const std::vector<int>& y,
                                       std::uint64_t seed) {
  forest::ForestConfig cfg;
  cfg.seed = seed;
  forest::RandomForest rf;
  rf.fit(x, y, 1 + *std::max_element(y.begin(), y.end()), cfg);
  return rf.gini_importance();
}

void write_importance_csv(const std::string& path,
                          const std::vector<std::pair<std::string, double>>& rows) {
  std::ofstream os(path);
  if (!os) throw IoError("rank-features: cannot open " + path);
  os << "feature,importance\n";
  os << std::setprecision(17);
  for (const auto& [name, value] : rows) os << name << ',' << value << '\n';
}

struct SplitConfig {
  std::vector<double> fractions;
  std::uint64_t seed = 0;
};

data::DatasetSplit make_split(const std::vector<int>& labels, const SplitConfig& sc) {
  data::DatasetSplit split = data::stratified_split(labels, sc.fractions, sc.seed);
  if (split.val.empty()) split.val = split.test;  // two-way: callbacks watch the test fold
  return split;
}

const std::vector<std::size_t>& pick_split(const data::DatasetSplit& split,
                                           const std::string& name) {
  if (name == "train") return split.train;
  if (name == "val") return split.val;
  if (name == "test") return split.test;
  throw ValueError("unknown split '" + name + "' (expected train|val|test)");
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

int cmd_train(const std::string& model_name, const std::string& data_dir,
              const std::string& config_path, std::uint64_t seed,
              const std::string& out_dir) {
  io::ConfigNode user_cfg;
  if (!config_path.empty()) user_cfg = io::ConfigNode::load(config_path);
  fs::create_directories(out_dir);

  data::DatasetReader reader(data_dir);
  const std::vector<int> labels = reader.labels();
  std::cout << "extracting tactile features from " << reader.size() << " samples...\n";
  const Tensor all_features = reader.all_tactile_features();
  const Tensor tactile = top7_columns(all_features);

  SplitConfig sc;
  sc.seed = seed;
  sc.fractions = user_cfg.get_list("split.fractions",
                                   model_name == "surformer"
                                       ? std::vector<double>{0.8, 0.1, 0.1}
                                       : std::vector<double>{0.8, 0.2});
  const data::DatasetSplit split = make_split(labels, sc);

  io::ConfigNode out_cfg;
  out_cfg.set("model", model_name);
  out_cfg.set_number("seed", static_cast<long>(seed));
  {
    std::ostringstream os;
    for (std::size_t i = 0; i < sc.fractions.size(); ++i) {
      if (i) os << ' ';
      os << sc.fractions[i];
    }
    out_cfg.set("split.fractions", os.str());
  }

  if (model_name == "rf") {
    forest::ForestConfig fc;
    fc.seed = seed;
    fc.n_trees = static_cast<std::size_t>(user_cfg.get_int("forest.n_trees", 200));
    fc.max_depth = static_cast<std::size_t>(user_cfg.get_int("forest.max_depth", 15));
    fc.min_samples_split =
        static_cast<std::size_t>(user_cfg.get_int("forest.min_samples_split", 5));
    fc.min_samples_leaf =
        static_cast<std::size_t>(user_cfg.get_int("forest.min_samples_leaf", 2));
    forest::RandomForest rf;
    const Tensor x_train = gather_rows(tactile, split.train);
    std::vector<int> y_train;
    for (std::size_t i : split.train) y_train.push_back(labels[i]);
    rf.fit(x_train, y_train, data::kNumClasses, fc);
    rf.save((fs::path(out_dir) / "forest.txt").string());
    out_cfg.set_number("forest.n_trees", static_cast<long>(fc.n_trees));
    out_cfg.set_number("forest.max_depth", static_cast<long>(fc.max_depth));
    out_cfg.save((fs::path(out_dir) / "config.txt").string());
    std::cout << "random forest trained on " << split.train.size() << " samples\n";
    return 0;
  }

  if (model_name == "tactile-transformer") {
    model::TactileTransformerConfig mc = io::tactile_transformer_config_from_config(user_cfg);
    model::TactileTransformer net(mc, Rng::mix(seed, 1));
    model::TrainSpec spec = io::train_spec_from_config(
        user_cfg, model::TrainSpec::tactile_transformer_defaults());
    spec.seed = Rng::mix(seed, 2);

    model::ClassifierHooks hooks;
    hooks.forward = [&](const std::vector<std::size_t>& idx, bool training) {
      return net.forward(gather_rows(tactile, idx), training);
    };
    hooks.backward = [&](const Tensor& g) { net.backward(g); };
    const model::TrainHistory history =
        model::train_classifier(hooks, labels, split.train, split.val, net.registry(), spec);

    io::save_registry_weights(net.registry(), (fs::path(out_dir) / "weights.bin").string());
    history.save_csv((fs::path(out_dir) / "history.csv").string());
    io::tactile_transformer_config_to_config(mc, out_cfg);
    io::train_spec_to_config(spec, out_cfg);
    out_cfg.save((fs::path(out_dir) / "config.txt").string());
    std::cout << "tactile transformer: " << nn::count_parameters(net.registry())
              << " trainable parameters, final val acc "
              << history.epochs.back().val_acc << "\n";
    return 0;
  }

  if (model_name == "surformer") {
    std::cout << "loading vision embeddings...\n";
    const Tensor embeddings = reader.all_embeddings();
    const std::size_t pca_k = static_cast<std::size_t>(user_cfg.get_int("pca.k", 64));
    const std::string fit_on = user_cfg.get_string("pca.fit_on", "train");
    std::cout << "fitting PCA (k=" << pca_k << ", on " << fit_on << " split)...\n";
    const pca::PcaModel pca_model =
        fit_on == "all" ? pca::fit_pca(embeddings, pca_k)
                        : pca::fit_pca(gather_rows(embeddings, split.train), pca_k);
    const Tensor vision = pca::pca_transform_batch(pca_model, embeddings);

    model::SurformerConfig mc = io::surformer_config_from_config(user_cfg);
    mc.vision.input_dim = pca_k;
    model::SurformerModel net(mc, Rng::mix(seed, 1));
    model::TrainSpec spec =
        io::train_spec_from_config(user_cfg, model::TrainSpec::surformer_defaults());
    spec.seed = Rng::mix(seed, 2);

    model::ClassifierHooks hooks;
    hooks.forward = [&](const std::vector<std::size_t>& idx, bool training) {
      return net.forward(gather_rows(tactile, idx), gather_rows(vision, idx), training);
    };
    hooks.backward = [&](const Tensor& g) { net.backward(g); };
    const model::TrainHistory history =
        model::train_classifier(hooks, labels, split.train, split.val, net.registry(), spec);

    io::save_registry_weights(net.registry(), (fs::path(out_dir) / "weights.bin").string());
    pca_model.save((fs::path(out_dir) / "pca.bin").string());
    history.save_csv((fs::path(out_dir) / "history.csv").string());
    io::surformer_config_to_config(mc, out_cfg);
    io::train_spec_to_config(spec, out_cfg);
    out_cfg.set("pca.fit_on", fit_on);
    out_cfg.set_number("pca.k", static_cast<long>(pca_k));
    out_cfg.save((fs::path(out_dir) / "config.txt").string());
    std::cout << "surformer: " << nn::count_parameters(net.registry())
              << " trainable parameters, final val acc "
              << history.epochs.back().val_acc << "\n";
    return 0;
  }

  throw ValueError("unknown model '" + model_name + "'");
}

// ---------------------------------------------------------------------------
// evaluate / bench share model loading.
// ---------------------------------------------------------------------------

struct LoadedModel {
  std::string name;
  std::function<std::vector<int>(const std::vector<std::size_t>&)> predict;
  std::function<void(const std::vector<std::size_t>&)> run_batch;
  std::size_t parameter_count = 0;
};

LoadedModel load_model(const std::string& model_dir, const data::DatasetReader& reader,
                       const Tensor& tactile, data::DatasetSplit& split_out) {
  const io::ConfigNode cfg = io::ConfigNode::load((fs::path(model_dir) / "config.txt").string());
  const std::string type = cfg.get_string("model");
  const auto seed = static_cast<std::uint64_t>(cfg.get_int("seed"));
  SplitConfig sc;
  sc.seed = seed;
  sc.fractions = cfg.get_list("split.fractions", {0.8, 0.2});
  split_out = make_split(reader.labels(), sc);

  LoadedModel m;
  m.name = type;
  if (type == "rf") {
    auto rf = std::make_shared<forest::RandomForest>(
        forest::RandomForest::load((fs::path(model_dir) / "forest.txt").string()));
    m.parameter_count = rf->parameter_count();
    m.predict = [rf, &tactile](const std::vector<std::size_t>& idx) {
      std::vector<int> preds;
      preds.reserve(idx.size());
      std::vector<double> row(tactile.dim(1));
      for (std::size_t i : idx) {
        for (std::size_t j = 0; j < row.size(); ++j) row[j] = tactile.at(i, j);
        preds.push_back(rf->predict(row));
      }
      return preds;
    };
    m.run_batch = [pred = m.predict](const std::vector<std::size_t>& idx) { pred(idx); };
    return m;
  }

  if (type == "tactile-transformer") {
    const model::TactileTransformerConfig mc = io::tactile_transformer_config_from_config(cfg);
    auto net = std::make_shared<model::TactileTransformer>(mc, seed);
    io::load_registry_weights(net->registry(), (fs::path(model_dir) / "weights.bin").string());
    m.parameter_count = nn::count_parameters(net->registry());
    m.predict = [net, &tactile](const std::vector<std::size_t>& idx) {
      const Tensor probs = net->predict_proba(gather_rows(tactile, idx));
      std::vector<int> preds(idx.size());
      for (std::size_t i = 0; i < idx.size(); ++i) {
        preds[i] = static_cast<int>(
            nn::argmax_row(probs.data() + i * probs.dim(1), probs.dim(1)));
      }
      return preds;
    };
    m.run_batch = [pred = m.predict](const std::vector<std::size_t>& idx) { pred(idx); };
    return m;
  }

  if (type == "surformer") {
    const model::SurformerConfig mc = io::surformer_config_from_config(cfg);
    auto net = std::make_shared<model::SurformerModel>(mc, seed);
    io::load_registry_weights(net->registry(), (fs::path(model_dir) / "weights.bin").string());
    auto pca_model = std::make_shared<pca::PcaModel>(
        pca::PcaModel::load((fs::path(model_dir) / "pca.bin").string()));
    auto vision = std::make_shared<Tensor>(
        pca::pca_transform_batch(*pca_model, reader.all_embeddings()));
    m.parameter_count = nn::count_parameters(net->registry());
    m.predict = [net, vision, &tactile](const std::vector<std::size_t>& idx) {
      const Tensor probs =
          net->predict_proba(gather_rows(tactile, idx), gather_rows(*vision, idx));
      std::vector<int> preds(idx.size());
      for (std::size_t i = 0; i < idx.size(); ++i) {
        preds[i] = static_cast<int>(
            nn::argmax_row(probs.data() + i * probs.dim(1), probs.dim(1)));
      }
      return preds;
    };
    m.run_batch = [pred = m.predict](const std::vector<std::size_t>& idx) { pred(idx); };
    return m;
  }
  throw DataError("evaluate: unknown model type '" + type + "' in " + model_dir);
}

int cmd_evaluate(const std::string& model_dir, const std::string& data_dir,
                 const std::string& split_name, const std::string& out_path) {
  data::DatasetReader reader(data_dir);
  const Tensor tactile = top7_columns(reader.all_tactile_features());
  data::DatasetSplit split;
  LoadedModel m = load_model(model_dir, reader, tactile, split);
  const std::vector<std::size_t>& idx = pick_split(split, split_name);
  const std::vector<int> labels = reader.labels();

  std::vector<int> truth;
  truth.reserve(idx.size());
  for (std::size_t i : idx) truth.push_back(labels[i]);
  const std::vector<int> preds = m.predict(idx);
  eval::MetricsReport report = eval::compute_metrics(preds, truth, data::kNumClasses);
  report.model = m.name;
  eval::save_json(out_path, eval::metrics_to_json(report));
  std::cout << m.name << " " << split_name << " accuracy " << report.accuracy
            << " macro-F1 " << report.macro_f1 << "\n";
  return 0;
}

int cmd_bench(const std::string& model_dir, const std::string& data_dir,
              std::size_t batch, const std::string& out_path, std::size_t warmup,
              std::size_t repeats) {
  data::DatasetReader reader(data_dir);
  const Tensor tactile = top7_columns(reader.all_tactile_features());
  data::DatasetSplit split;
  LoadedModel m = load_model(model_dir, reader, tactile, split);
  const std::vector<std::size_t>& idx = pick_split(split, "test");

  const eval::LatencyReport report = eval::benchmark_inference(
      [&](std::size_t rep) {
        const std::size_t start = (rep * batch) % (idx.size() - batch + 1);
        m.run_batch(std::vector<std::size_t>(idx.begin() + start,
                                             idx.begin() + start + batch));
      },
      idx.size(), batch, warmup, repeats, m.parameter_count, m.name);
  eval::save_json(out_path, eval::latency_to_json(report));
  std::cout << m.name << " median " << report.median_ms_per_sample
            << " ms/sample (p95 " << report.p95_ms_per_sample << ")\n";
  return 0;
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const std::size_t comma = s.find(',', start);
    const std::string item = s.substr(start, comma - start);
    if (!item.empty()) out.push_back(item);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"surformer: multimodal surface-material classification toolkit"};
  app.require_subcommand(1);

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic paired dataset archive");
  std::uint64_t gen_seed = 42;
  std::string gen_out, gen_counts = "balanced", gen_vision = "embeddings";
  std::size_t gen_size = 224;
  gen->add_option("--seed", gen_seed, "Dataset seed");
  gen->add_option("--out", gen_out, "Output directory")->required();
  gen->add_option("--counts", gen_counts, "paper (unbalanced) or balanced")
      ->check(CLI::IsMember({"paper", "balanced"}));
  gen->add_option("--vision", gen_vision, "Vision modality: images or embeddings")
      ->check(CLI::IsMember({"images", "embeddings"}));
  gen->add_option("--size", gen_size, "Frame edge length (default 224)");

  // extract-features
  auto* ext = app.add_subcommand("extract-features", "Export the tactile feature table");
  std::string ext_data, ext_out;
  ext->add_option("--data", ext_data, "Dataset directory")->required();
  ext->add_option("--out", ext_out, "Output CSV path")->required();

  // rank-features
  auto* rank = app.add_subcommand("rank-features", "Random-forest feature importance ranking");
  std::string rank_features_path, rank_mode = "joint", rank_out;
  std::size_t rank_k = 7;
  std::uint64_t rank_seed = 0;
  rank->add_option("--features", rank_features_path, "Feature CSV")->required();
  rank->add_option("--mode", rank_mode, "joint or per-set")
      ->check(CLI::IsMember({"joint", "per-set"}));
  rank->add_option("--k", rank_k, "Number of top features to report");
  rank->add_option("--out", rank_out, "Importance CSV path")->required();
  rank->add_option("--seed", rank_seed, "Forest seed");

  // fit-pca
  auto* fitp = app.add_subcommand("fit-pca", "Fit PCA on an embedding matrix");
  std::string pca_in, pca_out;
  std::size_t pca_k = 64;
  fitp->add_option("--embeddings", pca_in, "Embedding file (EMB v1 text or SFV1-W1)")->required();
  fitp->add_option("--k", pca_k, "Components");
  fitp->add_option("--out", pca_out, "Model output path")->required();

  // train
  auto* train = app.add_subcommand("train", "Train a model");
  std::string train_model, train_data, train_config, train_out;
  std::uint64_t train_seed = 0;
  train->add_option("--model", train_model, "surformer | tactile-transformer | rf")
      ->required()
      ->check(CLI::IsMember({"surformer", "tactile-transformer", "rf"}));
  train->add_option("--data", train_data, "Dataset directory")->required();
  train->add_option("--config", train_config, "Config file (key/value blocks)");
  train->add_option("--seed", train_seed, "Training seed");
  train->add_option("--out", train_out, "Model output directory")->required();

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "Evaluate a trained model");
  std::string ev_model, ev_data, ev_split = "test", ev_out;
  ev->add_option("--model", ev_model, "Model directory")->required();
  ev->add_option("--data", ev_data, "Dataset directory")->required();
  ev->add_option("--split", ev_split, "train | val | test");
  ev->add_option("--out", ev_out, "Metrics JSON path")->required();

  // bench
  auto* bench = app.add_subcommand("bench", "Measure inference latency");
  std::string bench_model, bench_data, bench_out;
  std::size_t bench_batch = 100, bench_warmup = 10, bench_repeats = 50;
  bench->add_option("--model", bench_model, "Model directory")->required();
  bench->add_option("--data", bench_data, "Dataset directory")->required();
  bench->add_option("--batch", bench_batch, "Batch size");
  bench->add_option("--warmup", bench_warmup, "Warmup batches");
  bench->add_option("--repeats", bench_repeats, "Timed repeats");
  bench->add_option("--out", bench_out, "Latency JSON path")->required();

  // report
  auto* rep = app.add_subcommand("report", "Assemble a comparison report");
  std::string rep_in, rep_latency, rep_out;
  rep->add_option("--in", rep_in, "Comma-separated metrics JSON files")->required();
  rep->add_option("--latency", rep_latency, "Comma-separated latency JSON files");
  rep->add_option("--out", rep_out, "Output prefix (writes .json and .txt)")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      data::GenerateOptions opt;
      opt.seed = resolve_seed(gen_seed);
      opt.balance = gen_counts == "balanced";
      opt.vision = gen_vision == "images" ? data::VisionMode::Images
                                          : data::VisionMode::Embeddings;
      opt.image_size = gen_size;
      data::generate_archive(gen_out, opt);
      const data::DatasetReader reader(gen_out);
      std::cout << "wrote " << reader.size() << " samples to " << gen_out << "\n";
      return 0;
    }
    if (ext->parsed()) {
      const data::DatasetReader reader(ext_data);
      const Tensor features = reader.all_tactile_features();
      tactile::write_feature_csv(ext_out, reader.sample_ids(), reader.labels(), features);
      std::cout << "wrote " << features.dim(0) << " rows to " << ext_out << "\n";
      return 0;
    }
    if (rank->parsed()) {
      const tactile::FeatureTable table = tactile::read_feature_csv(rank_features_path);
      std::vector<std::pair<std::string, double>> rows;
      if (rank_mode == "joint") {
        const std::vector<double> imp = column_importances(table.features, table.labels,
                                                           resolve_seed(rank_seed));
        for (std::size_t i : forest::rank_features(imp, imp.size())) {
          rows.emplace_back(tactile::kAllFeatureNames[i], imp[i]);
        }
        std::cout << "top-" << rank_k << " features (joint ranking):\n";
        for (std::size_t i : forest::rank_features(imp, rank_k)) {
          std::cout << "  " << tactile::kAllFeatureNames[i] << " " << imp[i] << "\n";
        }
      } else {
        for (const auto& set : {tactile::kTextureSetIndices, tactile::kPressureSetIndices}) {
          Tensor sub({table.features.dim(0), set.size()});
          for (std::size_t i = 0; i < sub.dim(0); ++i) {
            for (std::size_t j = 0; j < set.size(); ++j) {
              sub.at(i, j) = table.features.at(i, set[j]);
            }
          }
          const std::vector<double> imp =
              column_importances(sub, table.labels, resolve_seed(rank_seed));
          for (std::size_t i : forest::rank_features(imp, imp.size())) {
            rows.emplace_back(tactile::kAllFeatureNames[set[i]], imp[i]);
          }
        }
      }
      write_importance_csv(rank_out, rows);
      std::cout << "wrote " << rows.size() << " rows to " << rank_out << "\n";
      return 0;
    }
    if (fitp->parsed()) {
      const Tensor x = pca::load_embeddings(pca_in);
      const pca::PcaModel model = pca::fit_pca(x, pca_k);
      model.save(pca_out);
      double retained = 0.0;
      for (double r : pca::explained_variance_ratio(model)) retained += r;
      std::cout << "PCA " << x.dim(1) << " -> " << pca_k << " dims retains "
                << retained * 100.0 << "% variance\n";
      return 0;
    }
    if (train->parsed()) {
      return cmd_train(train_model, train_data, train_config, resolve_seed(train_seed),
                       train_out);
    }
    if (ev->parsed()) return cmd_evaluate(ev_model, ev_data, ev_split, ev_out);
    if (bench->parsed()) {
      return cmd_bench(bench_model, bench_data, bench_batch, bench_out, bench_warmup,
                       bench_repeats);
    }
    if (rep->parsed()) {
      std::vector<eval::MetricsReport> metrics;
      for (const std::string& path : split_commas(rep_in)) {
        metrics.push_back(eval::metrics_from_json(eval::load_json(path)));
      }
      std::vector<eval::LatencyReport> latencies;
      for (const std::string& path : split_commas(rep_latency)) {
        latencies.push_back(eval::latency_from_json(eval::load_json(path)));
      }
      std::string prefix = rep_out;
      for (const char* suffix : {".json", ".txt"}) {
        if (prefix.size() > 5 && prefix.ends_with(suffix)) {
          prefix.resize(prefix.size() - 5);
        }
      }
      eval::emit_report(metrics, latencies, prefix);
      std::cout << "wrote " << prefix << ".json and " << prefix << ".txt\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
