#include "dehaze/config.h"

#include <openssl/evp.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include "dehaze/multiscale.h"

namespace dehaze {
namespace {

using nlohmann::json;

void check_keys(const json& j, const std::string& section,
                std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError("config section '" + section + "' must be an object");
  for (const auto& item : j.items()) {
    const bool known = std::any_of(allowed.begin(), allowed.end(),
                                   [&](const char* k) { return item.key() == k; });
    if (!known) {
      throw ConfigError("unknown config key '" + (section.empty() ? "" : section + ".") +
                        item.key() + "'");
    }
  }
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& section) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("config key '" + section + "." + key + "': " + e.what());
  }
}

json model_json(const ModelConfig& m) {
  json j = {{"kind", m.kind},
            {"depth", m.depth},
            {"star", m.star},
            {"width_divisor", m.width_divisor},
            {"dropout_rate", m.dropout_rate},
            {"leak", m.leak},
            {"spp_levels", m.spp_levels},
            {"ssim_window", m.ssim_window},
            {"ssim_sigma", m.ssim_sigma}};
  j["dropout_sites"] = m.dropout_sites ? json(*m.dropout_sites) : json(nullptr);
  return j;
}

}  // namespace

GeneratorSpec ModelConfig::generator_spec() const {
  GeneratorSpec g = GeneratorSpec::canonical(depth, star, width_divisor);
  if (dropout_sites) g.dropout_sites = *dropout_sites;
  g.dropout_rate = dropout_rate;
  g.leak = leak;
  g.validate();
  return g;
}

DiscriminatorSpec ModelConfig::discriminator_spec() const {
  DiscriminatorSpec d = DiscriminatorSpec::canonical(width_divisor);
  d.spp_levels = spp_levels;
  d.leak = leak;
  d.validate();
  return d;
}

SsimOptions ModelConfig::ssim_options() const {
  SsimOptions s;
  s.window = ssim_window;
  s.sigma = ssim_sigma;
  return s;
}

AdamOptions TrainConfig::adam() const {
  AdamOptions a;
  a.learning_rate = learning_rate;
  a.beta1 = beta1;
  a.beta2 = beta2;
  a.epsilon = epsilon;
  a.clip_norm = clip_norm;
  return a;
}

void TrainConfig::validate() const {
  try {
    adam().validate();
    weights.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (batch_size != 1) throw ConfigError("train.batch_size: only a batch size of 1 is supported");
  if (d_update_period < 1) throw ConfigError("train.d_update_period must be positive");
  if (max_epochs < 1) throw ConfigError("train.max_epochs must be positive");
  if (pretrain_size && (pretrain_size->first < 1 || pretrain_size->second < 1)) {
    throw ConfigError("train.pretrain_size must be positive");
  }
  if (iff_max_side < 1) throw ConfigError("train.iff_max_side must be positive");
  if (max_steps < 0) throw ConfigError("train.max_steps must be non-negative");
}

void RunConfig::validate() const {
  if (model.kind != "single" && model.kind != "multiscale") {
    throw ConfigError("model.kind must be 'single' or 'multiscale', got '" + model.kind + "'");
  }
  if (model.width_divisor < 1) throw ConfigError("model.width_divisor must be positive");
  if (model.ssim_window < 1 || model.ssim_window % 2 == 0) {
    throw ConfigError("model.ssim_window must be a positive odd number");
  }
  if (!(model.ssim_sigma > 0.0)) throw ConfigError("model.ssim_sigma must be positive");
  try {
    model.generator_spec();
    model.discriminator_spec();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("model: ") + e.what());
  }
  train.validate();
  if (data.match_rule != "stem" && data.match_rule != "reside") {
    throw ConfigError("data.match_rule must be 'stem' or 'reside'");
  }
  const SynthesisOptions& s = synthesis;
  if (s.beta_min < 0.0 || s.beta_max < s.beta_min) {
    throw ConfigError("synthesis: need 0 <= beta_min <= beta_max");
  }
  if (s.alpha_max < s.alpha_min) throw ConfigError("synthesis: need alpha_min <= alpha_max");
  if (s.depth < 0.0) throw ConfigError("synthesis.depth must be non-negative");
}

RunConfig config_from_json(const json& j) {
  RunConfig c;
  check_keys(j, "", {"model", "train", "data", "synthesis", "output_dir"});
  read(j, "output_dir", c.output_dir, "");

  if (j.contains("model")) {
    const json& m = j["model"];
    check_keys(m, "model", {"kind", "depth", "star", "width_divisor", "dropout_sites",
                            "dropout_rate", "leak", "spp_levels", "ssim_window", "ssim_sigma"});
    read(m, "kind", c.model.kind, "model");
    read(m, "depth", c.model.depth, "model");
    read(m, "star", c.model.star, "model");
    read(m, "width_divisor", c.model.width_divisor, "model");
    if (m.contains("dropout_sites") && !m["dropout_sites"].is_null()) {
      std::vector<int> sites;
      read(m, "dropout_sites", sites, "model");
      c.model.dropout_sites = sites;
    }
    read(m, "dropout_rate", c.model.dropout_rate, "model");
    read(m, "leak", c.model.leak, "model");
    read(m, "spp_levels", c.model.spp_levels, "model");
    read(m, "ssim_window", c.model.ssim_window, "model");
    read(m, "ssim_sigma", c.model.ssim_sigma, "model");
  }

  if (j.contains("train")) {
    const json& t = j["train"];
    check_keys(t, "train", {"learning_rate", "beta1", "beta2", "epsilon", "batch_size",
                            "d_update_period", "max_epochs", "pretrain_size", "iff_enabled",
                            "iff_max_side", "seed", "clip_norm", "max_steps", "weights"});
    TrainConfig& tc = c.train;
    read(t, "learning_rate", tc.learning_rate, "train");
    read(t, "beta1", tc.beta1, "train");
    read(t, "beta2", tc.beta2, "train");
    read(t, "epsilon", tc.epsilon, "train");
    read(t, "batch_size", tc.batch_size, "train");
    read(t, "d_update_period", tc.d_update_period, "train");
    read(t, "max_epochs", tc.max_epochs, "train");
    if (t.contains("pretrain_size")) {
      const json& p = t["pretrain_size"];
      if (p.is_null()) {
        tc.pretrain_size.reset();
      } else if (p.is_array() && p.size() == 2) {
        tc.pretrain_size = std::make_pair(p[0].get<int>(), p[1].get<int>());
      } else {
        throw ConfigError("train.pretrain_size must be [height, width] or null");
      }
    }
    read(t, "iff_enabled", tc.iff_enabled, "train");
    read(t, "iff_max_side", tc.iff_max_side, "train");
    read(t, "seed", tc.seed, "train");
    read(t, "clip_norm", tc.clip_norm, "train");
    read(t, "max_steps", tc.max_steps, "train");
    if (t.contains("weights")) {
      const json& w = t["weights"];
      check_keys(w, "train.weights",
                 {"lambda1", "lambda2", "lambda3", "lambda4", "lambda_wd", "thresh"});
      read(w, "lambda1", tc.weights.lambda1, "train.weights");
      read(w, "lambda2", tc.weights.lambda2, "train.weights");
      read(w, "lambda3", tc.weights.lambda3, "train.weights");
      read(w, "lambda4", tc.weights.lambda4, "train.weights");
      read(w, "lambda_wd", tc.weights.lambda_wd, "train.weights");
      read(w, "thresh", tc.weights.thresh, "train.weights");
    }
  }

  if (j.contains("data")) {
    const json& d = j["data"];
    check_keys(d, "data", {"train_manifest", "val_manifest", "haze_dir", "clear_dir",
                           "match_rule"});
    read(d, "train_manifest", c.data.train_manifest, "data");
    read(d, "val_manifest", c.data.val_manifest, "data");
    read(d, "haze_dir", c.data.haze_dir, "data");
    read(d, "clear_dir", c.data.clear_dir, "data");
    read(d, "match_rule", c.data.match_rule, "data");
  }

  if (j.contains("synthesis")) {
    const json& s = j["synthesis"];
    check_keys(s, "synthesis",
               {"beta_min", "beta_max", "alpha_min", "alpha_max", "depth", "depth_ramp"});
    read(s, "beta_min", c.synthesis.beta_min, "synthesis");
    read(s, "beta_max", c.synthesis.beta_max, "synthesis");
    read(s, "alpha_min", c.synthesis.alpha_min, "synthesis");
    read(s, "alpha_max", c.synthesis.alpha_max, "synthesis");
    read(s, "depth", c.synthesis.depth, "synthesis");
    read(s, "depth_ramp", c.synthesis.depth_ramp, "synthesis");
  }
  c.validate();
  return c;
}

json config_to_json(const RunConfig& c) {
  const TrainConfig& t = c.train;
  json train = {{"learning_rate", t.learning_rate},
                {"beta1", t.beta1},
                {"beta2", t.beta2},
                {"epsilon", t.epsilon},
                {"batch_size", t.batch_size},
                {"d_update_period", t.d_update_period},
                {"max_epochs", t.max_epochs},
                {"iff_enabled", t.iff_enabled},
                {"iff_max_side", t.iff_max_side},
                {"seed", t.seed},
                {"clip_norm", t.clip_norm},
                {"max_steps", t.max_steps},
                {"weights",
                 {{"lambda1", t.weights.lambda1},
                  {"lambda2", t.weights.lambda2},
                  {"lambda3", t.weights.lambda3},
                  {"lambda4", t.weights.lambda4},
                  {"lambda_wd", t.weights.lambda_wd},
                  {"thresh", t.weights.thresh}}}};
  train["pretrain_size"] = t.pretrain_size
                               ? json::array({t.pretrain_size->first, t.pretrain_size->second})
                               : json(nullptr);
  const SynthesisOptions& s = c.synthesis;
  return {{"model", model_json(c.model)},
          {"train", train},
          {"data",
           {{"train_manifest", c.data.train_manifest},
            {"val_manifest", c.data.val_manifest},
            {"haze_dir", c.data.haze_dir},
            {"clear_dir", c.data.clear_dir},
            {"match_rule", c.data.match_rule}}},
          {"synthesis",
           {{"beta_min", s.beta_min},
            {"beta_max", s.beta_max},
            {"alpha_min", s.alpha_min},
            {"alpha_max", s.alpha_max},
            {"depth", s.depth},
            {"depth_ramp", s.depth_ramp}}},
          {"output_dir", c.output_dir}};
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file " + path + " is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 digest failed");
  }
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof(buf), "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

std::string config_hash(const ModelConfig& m) { return sha256_hex(model_json(m).dump()); }

std::string config_hash(const RunConfig& c) { return config_hash(c.model); }

std::unique_ptr<CganModel> build_model(const ModelConfig& m) {
  std::unique_ptr<CganModel> model;
  if (m.kind == "multiscale") {
    MultiScaleSpec spec = MultiScaleSpec::canonical(m.width_divisor);
    for (auto& g : spec.generators) {
      g.dropout_rate = m.dropout_rate;
      g.leak = m.leak;
    }
    spec.discriminator = m.discriminator_spec();
    model = std::make_unique<MultiScaleCgan>(spec);
  } else {
    model = std::make_unique<SingleScaleCgan>(m.generator_spec(), m.discriminator_spec());
  }
  model->ssim_options() = m.ssim_options();
  return model;
}

}  // namespace dehaze
