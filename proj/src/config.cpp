#include "care/config.hpp"

#include "care/io.hpp"

namespace care {

using nlohmann::json;

ImbalanceSpec RunConfig::imbalance_spec() const { return {imbalance_factor, max_per_class, num_classes}; }
NoiseSpec RunConfig::noise_spec() const { return {noise, noise_rate, seed}; }
ClusterSpec RunConfig::cluster_spec() const { return {feature_dim, spread, seed}; }

TrainConfig RunConfig::train_config() const {
  return {epochs, batch_size, learning_rate, momentum, weight_decay, loss, seed};
}

KPolicy RunConfig::k_policy() const {
  KPolicy p;
  p.form = k_form;
  p.global_k = k_global;
  p.k_head = k_head;
  p.k_med = k_med;
  p.k_tail = k_tail;
  p.k_min = k_min;
  p.k_max = k_max;
  return p;
}

void RunConfig::validate() const {
  if (!(imbalance_factor >= 1.0)) throw ValidationError("imbalance_factor must be >= 1");
  if (max_per_class == 0) throw ValidationError("max_per_class must be positive");
  if (num_classes == 0) throw ValidationError("classes must be positive");
  if (!(noise_rate >= 0.0 && noise_rate < 1.0)) throw ValidationError("noise rate must lie in [0, 1)");
  if (feature_dim < 2) throw ValidationError("feature_dim must be at least 2");
  if (!(spread > 0.0)) throw ValidationError("spread must be positive");
  train_config().validate();
  if (k_global == 0 || k_head == 0 || k_med == 0 || k_tail == 0 || k_min == 0 || k_max < k_min) {
    throw ValidationError("K parameters must be positive with k_min <= k_max");
  }
  if (!(scale > 0.0)) throw ValidationError("scale must be positive");
  if (!(be_weight > 0.0 && be_weight <= 1.0)) throw ValidationError("be_weight must lie in (0, 1]");
  if (verify.trials == 0) throw ValidationError("trials must be positive");
  if (verify.k_tail == 0 || verify.k_global == 0) throw ValidationError("k-pair entries must be positive");
}

void to_json(json& j, const RunConfig& c) {
  j = json{
      {"seed", c.seed},
      {"synth",
       {{"imbalance_factor", c.imbalance_factor},
        {"max_per_class", c.max_per_class},
        {"classes", c.num_classes},
        {"noise", to_string(c.noise)},
        {"noise_rate", c.noise_rate},
        {"feature_dim", c.feature_dim},
        {"spread", c.spread}}},
      {"rectify",
       {{"epochs", c.epochs},
        {"batch_size", c.batch_size},
        {"learning_rate", c.learning_rate},
        {"momentum", c.momentum},
        {"weight_decay", c.weight_decay},
        {"loss", to_string(c.loss)},
        {"k_form", to_string(c.k_form)},
        {"k_global", c.k_global},
        {"k_step", {c.k_head, c.k_med, c.k_tail}},
        {"k_linear", {c.k_min, c.k_max}},
        {"scale", c.scale},
        {"be_weight", c.be_weight},
        {"te_file", c.te_file},
        {"ie_file", c.ie_file}}},
      {"verify",
       {{"trials", c.verify.trials},
        {"theorem_classes", c.verify.theorem_classes},
        {"theorem_k", c.verify.theorem_k},
        {"advantage", c.verify.advantage},
        {"concentration", c.verify.concentration},
        {"theorem_threshold", c.verify.theorem_threshold},
        {"prop_classes", c.verify.prop_classes},
        {"prop_tail_count", c.verify.prop_tail_count},
        {"prop_other_count", c.verify.prop_other_count},
        {"k_pair", {c.verify.k_tail, c.verify.k_global}},
        {"bootstrap", c.verify.bootstrap},
        {"oracle_instances", c.verify.oracle_instances},
        {"ablation", c.verify.run_ablation}}},
  };
}

namespace {

void reject_unknown(const json& j, std::initializer_list<const char*> keys, const std::string& where) {
  for (const auto& [key, _] : j.items()) {
    bool known = false;
    for (const char* k : keys) known = known || key == k;
    if (!known) throw ValidationError("unknown config key '" + where + key + "'");
  }
}

template <typename T>
void take(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

void from_json(const json& j, RunConfig& c) {
  try {
    reject_unknown(j, {"seed", "synth", "rectify", "verify"}, "");
    take(j, "seed", c.seed);
    if (j.contains("synth")) {
      const auto& s = j.at("synth");
      reject_unknown(s, {"imbalance_factor", "max_per_class", "classes", "noise", "noise_rate", "feature_dim", "spread"},
                     "synth.");
      take(s, "imbalance_factor", c.imbalance_factor);
      take(s, "max_per_class", c.max_per_class);
      take(s, "classes", c.num_classes);
      if (s.contains("noise")) c.noise = noise_kind_from_string(s.at("noise").get<std::string>());
      take(s, "noise_rate", c.noise_rate);
      take(s, "feature_dim", c.feature_dim);
      take(s, "spread", c.spread);
    }
    if (j.contains("rectify")) {
      const auto& r = j.at("rectify");
      reject_unknown(r, {"epochs", "batch_size", "learning_rate", "momentum", "weight_decay", "loss", "k_form",
                         "k_global", "k_step", "k_linear", "scale", "be_weight", "te_file", "ie_file"},
                     "rectify.");
      take(r, "epochs", c.epochs);
      take(r, "batch_size", c.batch_size);
      take(r, "learning_rate", c.learning_rate);
      take(r, "momentum", c.momentum);
      take(r, "weight_decay", c.weight_decay);
      if (r.contains("loss")) c.loss = loss_kind_from_string(r.at("loss").get<std::string>());
      if (r.contains("k_form")) c.k_form = k_form_from_string(r.at("k_form").get<std::string>());
      take(r, "k_global", c.k_global);
      if (r.contains("k_step")) {
        const auto v = r.at("k_step").get<std::vector<std::size_t>>();
        if (v.size() != 3) throw ValidationError("k_step needs three values (head, medium, tail)");
        c.k_head = v[0];
        c.k_med = v[1];
        c.k_tail = v[2];
      }
      if (r.contains("k_linear")) {
        const auto v = r.at("k_linear").get<std::vector<std::size_t>>();
        if (v.size() != 2) throw ValidationError("k_linear needs two values (min, max)");
        c.k_min = v[0];
        c.k_max = v[1];
      }
      take(r, "scale", c.scale);
      take(r, "be_weight", c.be_weight);
      take(r, "te_file", c.te_file);
      take(r, "ie_file", c.ie_file);
    }
    if (j.contains("verify")) {
      const auto& v = j.at("verify");
      reject_unknown(v, {"trials", "theorem_classes", "theorem_k", "advantage", "concentration", "theorem_threshold",
                         "prop_classes", "prop_tail_count", "prop_other_count", "k_pair", "bootstrap",
                         "oracle_instances", "ablation"},
                     "verify.");
      take(v, "trials", c.verify.trials);
      take(v, "theorem_classes", c.verify.theorem_classes);
      take(v, "theorem_k", c.verify.theorem_k);
      take(v, "advantage", c.verify.advantage);
      take(v, "concentration", c.verify.concentration);
      take(v, "theorem_threshold", c.verify.theorem_threshold);
      take(v, "prop_classes", c.verify.prop_classes);
      take(v, "prop_tail_count", c.verify.prop_tail_count);
      take(v, "prop_other_count", c.verify.prop_other_count);
      if (v.contains("k_pair")) {
        const auto kp = v.at("k_pair").get<std::vector<std::size_t>>();
        if (kp.size() != 2) throw ValidationError("k_pair needs two values");
        c.verify.k_tail = kp[0];
        c.verify.k_global = kp[1];
      }
      take(v, "bootstrap", c.verify.bootstrap);
      take(v, "oracle_instances", c.verify.oracle_instances);
      take(v, "ablation", c.verify.run_ablation);
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
}

RunConfig load_config(const std::string& path) {
  json j;
  try {
    j = json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw ValidationError("config " + path + ": " + e.what());
  }
  RunConfig c;
  from_json(j, c);
  return c;
}

}  // namespace care
