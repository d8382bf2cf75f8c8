#pragma once

#include <sstream>
#include <string>
#include <vector>

#include "surformer/io/config.hpp"
#include "surformer/model/surformer.hpp"
#include "surformer/model/tactile_transformer.hpp"
#include "surformer/model/train.hpp"
#include "surformer/nn/snapshot.hpp"

namespace surformer::io {

/// Writes every registered parameter (trainable and state) to the SFV1-W1
/// container in registry order.
inline void save_registry_weights(const nn::ParamRegistry& reg, const std::string& path,
                                  nn::SnapshotDtype dtype = nn::SnapshotDtype::F64) {
  std::vector<std::pair<std::string, const Tensor*>> tensors;
  tensors.reserve(reg.items().size());
  for (const auto& [name, p] : reg.items()) tensors.emplace_back(name, &p->value);
  nn::save_weights(path, tensors, dtype);
}

/// Loads a snapshot into registered parameters by name, validating shapes.
inline void load_registry_weights(nn::ParamRegistry& reg, const std::string& path) {
  auto loaded = nn::load_weights_map(path);
  for (auto& [name, p] : reg.items()) {
    const auto it = loaded.find(name);
    if (it == loaded.end()) {
      throw DataError("weights: snapshot " + path + " is missing '" + name + "'");
    }
    if (it->second.shape() != p->value.shape()) {
      throw DimensionError("weights: '" + name + "' has shape " +
                           it->second.shape_str() + ", model expects " +
                           p->value.shape_str());
    }
    p->value = it->second;
  }
}

// ---------------------------------------------------------------------------
// Config <-> struct mappings.
// ---------------------------------------------------------------------------

inline void train_spec_to_config(const model::TrainSpec& s, ConfigNode& root) {
  ConfigNode& t = root.child("train");
  t.set("optimizer", s.optimizer == model::TrainSpec::Optimizer::AdamW ? "adamw" : "adam");
  t.set_number("lr", s.lr);
  t.set_number("epochs", s.epochs);
  t.set_number("batch_size", static_cast<long>(s.batch_size));
  t.set_number("weight_decay", s.weight_decay);
  t.set_number("early_stop_patience", s.early_stop_patience);
  t.set_number("seed", static_cast<long>(s.seed));
  ConfigNode& p = t.child("plateau");
  p.set_number("patience", s.plateau_patience);
  p.set_number("factor", s.plateau_factor);
  p.set_number("min_lr", s.plateau_min_lr);
  p.set("mode", s.plateau_mode == nn::PlateauSchedule::Mode::MinLoss ? "min-loss"
                                                                     : "max-accuracy");
}

inline model::TrainSpec train_spec_from_config(const ConfigNode& root,
                                               model::TrainSpec defaults) {
  model::TrainSpec s = defaults;
  const std::string opt = root.get_string("train.optimizer",
                                          s.optimizer == model::TrainSpec::Optimizer::AdamW
                                              ? "adamw"
                                              : "adam");
  s.optimizer = opt == "adamw" ? model::TrainSpec::Optimizer::AdamW
                               : model::TrainSpec::Optimizer::Adam;
  s.lr = root.get_double("train.lr", s.lr);
  s.epochs = static_cast<int>(root.get_int("train.epochs", s.epochs));
  s.batch_size = static_cast<std::size_t>(root.get_int("train.batch_size",
                                                       static_cast<long>(s.batch_size)));
  s.weight_decay = root.get_double("train.weight_decay", s.weight_decay);
  s.early_stop_patience =
      static_cast<int>(root.get_int("train.early_stop_patience", s.early_stop_patience));
  s.seed = static_cast<std::uint64_t>(root.get_int("train.seed", static_cast<long>(s.seed)));
  s.plateau_patience =
      static_cast<int>(root.get_int("train.plateau.patience", s.plateau_patience));
  s.plateau_factor = root.get_double("train.plateau.factor", s.plateau_factor);
  s.plateau_min_lr = root.get_double("train.plateau.min_lr", s.plateau_min_lr);
  const std::string mode = root.get_string(
      "train.plateau.mode",
      s.plateau_mode == nn::PlateauSchedule::Mode::MinLoss ? "min-loss" : "max-accuracy");
  s.plateau_mode = mode == "max-accuracy" ? nn::PlateauSchedule::Mode::MaxAccuracy
                                          : nn::PlateauSchedule::Mode::MinLoss;
  return s;
}

namespace detail {

inline std::string join_sizes(const std::vector<std::size_t>& v) {
  std::ostringstream os;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) os << ' ';
    os << v[i];
  }
  return os.str();
}

inline std::vector<std::size_t> parse_sizes(const std::string& s) {
  std::vector<std::size_t> out;
  std::istringstream is(s);
  std::size_t x;
  while (is >> x) out.push_back(x);
  return out;
}

inline void encoder_to_config(const model::EncoderConfig& e, ConfigNode& node) {
  node.set_number("input_dim", static_cast<long>(e.input_dim));
  node.set("hidden_dims", join_sizes(e.hidden_dims));
  node.set_number("latent_dim", static_cast<long>(e.latent_dim));
  node.set_number("tokens", static_cast<long>(e.tokens));
  node.set_number("dropout", e.dropout);
}

inline model::EncoderConfig encoder_from_config(const ConfigNode& root,
                                                const std::string& prefix,
                                                model::EncoderConfig defaults) {
  model::EncoderConfig e = defaults;
  e.input_dim = static_cast<std::size_t>(
      root.get_int(prefix + ".input_dim", static_cast<long>(e.input_dim)));
  if (root.has(prefix + ".hidden_dims")) {
    e.hidden_dims = parse_sizes(root.get_string(prefix + ".hidden_dims"));
  }
  e.latent_dim = static_cast<std::size_t>(
      root.get_int(prefix + ".latent_dim", static_cast<long>(e.latent_dim)));
  e.tokens = static_cast<std::size_t>(root.get_int(prefix + ".tokens",
                                                   static_cast<long>(e.tokens)));
  e.dropout = root.get_double(prefix + ".dropout", e.dropout);
  return e;
}

}  // namespace detail

inline void surformer_config_to_config(const model::SurformerConfig& c, ConfigNode& root) {
  ConfigNode& m = root.child("surformer");
  detail::encoder_to_config(c.tactile, m.child("tactile_encoder"));
  detail::encoder_to_config(c.vision, m.child("vision_encoder"));
  ConfigNode& a = m.child("attention");
  a.set_number("model_dim", static_cast<long>(c.attention.model_dim));
  a.set_number("num_heads", static_cast<long>(c.attention.num_heads));
  a.set_number("head_dim", static_cast<long>(c.attention.head_dim));
  m.set_number("n_fusion_blocks", static_cast<long>(c.n_fusion_blocks));
  m.set_number("fusion_ffn_hidden", static_cast<long>(c.fusion_ffn_hidden));
  m.set("head_dims", detail::join_sizes(c.head_dims));
  m.set_number("n_classes", static_cast<long>(c.n_classes));
  m.set_number("dropout", c.dropout);
}

inline model::SurformerConfig surformer_config_from_config(const ConfigNode& root) {
  model::SurformerConfig c;
  c.tactile = detail::encoder_from_config(root, "surformer.tactile_encoder", c.tactile);
  c.vision = detail::encoder_from_config(root, "surformer.vision_encoder", c.vision);
  c.attention.model_dim = static_cast<std::size_t>(
      root.get_int("surformer.attention.model_dim", static_cast<long>(c.attention.model_dim)));
  c.attention.num_heads = static_cast<std::size_t>(
      root.get_int("surformer.attention.num_heads", static_cast<long>(c.attention.num_heads)));
  c.attention.head_dim = static_cast<std::size_t>(
      root.get_int("surformer.attention.head_dim", static_cast<long>(c.attention.head_dim)));
  c.n_fusion_blocks = static_cast<std::size_t>(
      root.get_int("surformer.n_fusion_blocks", static_cast<long>(c.n_fusion_blocks)));
  c.fusion_ffn_hidden = static_cast<std::size_t>(
      root.get_int("surformer.fusion_ffn_hidden", static_cast<long>(c.fusion_ffn_hidden)));
  if (root.has("surformer.head_dims")) {
    c.head_dims = detail::parse_sizes(root.get_string("surformer.head_dims"));
  }
  c.n_classes = static_cast<std::size_t>(
      root.get_int("surformer.n_classes", static_cast<long>(c.n_classes)));
  c.dropout = root.get_double("surformer.dropout", c.dropout);
  return c;
}

inline void tactile_transformer_config_to_config(const model::TactileTransformerConfig& c,
                                                 ConfigNode& root) {
  ConfigNode& m = root.child("tactile_transformer");
  m.set_number("n_features", static_cast<long>(c.n_features));
  m.set_number("d_model", static_cast<long>(c.d_model));
  m.set_number("n_layers", static_cast<long>(c.n_layers));
  m.set_number("n_heads", static_cast<long>(c.n_heads));
  m.set_number("ffn_dim", static_cast<long>(c.ffn_dim));
  m.set_number("head_hidden", static_cast<long>(c.head_hidden));
  m.set_number("n_classes", static_cast<long>(c.n_classes));
  m.set_number("dropout", c.dropout);
}

inline model::TactileTransformerConfig tactile_transformer_config_from_config(
    const ConfigNode& root) {
  model::TactileTransformerConfig c;
  const std::string p = "tactile_transformer";
  c.n_features = static_cast<std::size_t>(root.get_int(p + ".n_features",
                                                       static_cast<long>(c.n_features)));
  c.d_model = static_cast<std::size_t>(root.get_int(p + ".d_model",
                                                    static_cast<long>(c.d_model)));
  c.n_layers = static_cast<std::size_t>(root.get_int(p + ".n_layers",
                                                     static_cast<long>(c.n_layers)));
  c.n_heads = static_cast<std::size_t>(root.get_int(p + ".n_heads",
                                                    static_cast<long>(c.n_heads)));
  c.ffn_dim = static_cast<std::size_t>(root.get_int(p + ".ffn_dim",
                                                    static_cast<long>(c.ffn_dim)));
  c.head_hidden = static_cast<std::size_t>(root.get_int(p + ".head_hidden",
                                                        static_cast<long>(c.head_hidden)));
  c.n_classes = static_cast<std::size_t>(root.get_int(p + ".n_classes",
                                                      static_cast<long>(c.n_classes)));
  c.dropout = root.get_double(p + ".dropout", c.dropout);
  return c;
}

}  // namespace surformer::io
