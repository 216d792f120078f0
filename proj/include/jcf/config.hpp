#pragma once

// Run configuration: a flat JSON object with dotted keys, e.g.
//   {"pooling.method": "jcf_shared", "pooling.n_words": 8, "optim.lr": 0.05}
// Missing keys take defaults; unknown keys are rejected. Overrides use the
// same keys ("optim.lr=0.05"); the value is parsed as JSON when possible and
// as a bare string otherwise.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "jcf/dataset.hpp"
#include "jcf/train.hpp"

namespace jcf {

struct RunConfig {
  ModelConfig model;
  SyntheticDatasetSpec dataset;
  double lr = 1e-5;
  std::size_t batch = 64;
  std::size_t steps = 200;
  double margin = 0.1;
  std::size_t lloyd_iterations = 10;
  std::vector<std::string> frozen;
  std::vector<std::size_t> ks = {1, 2, 4, 8};
  std::uint64_t seed = 0;
  std::string output_dir = "out";

  // Everything that affects results; output_dir is deliberately absent.
  nlohmann::json to_json() const {
    nlohmann::json j;
    j["pooling.method"] = std::string(to_string(model.method));
    j["pooling.d_in"] = model.d_in;
    j["pooling.d"] = model.d;
    j["pooling.out_dim"] = model.out_dim;
    j["pooling.n_words"] = model.n_words;
    j["pooling.rank"] = model.rank;
    j["pooling.normalize_output"] = model.normalize_output;
    j["codebook.temperature"] = model.temperature;
    j["codebook.mode"] = model.hard_assignment ? "hard" : "soft";
    j["codebook.dual"] = model.dual_codebook;
    j["codebook.lloyd_iterations"] = lloyd_iterations;
    j["dataset.n_instances"] = dataset.n_instances;
    j["dataset.samples_per_instance"] = dataset.samples_per_instance;
    j["dataset.locations"] = dataset.locations;
    j["dataset.n_modes"] = dataset.n_modes;
    j["dataset.cluster_spread"] = dataset.cluster_spread;
    j["dataset.noise_scale"] = dataset.noise_scale;
    j["optim.lr"] = lr;
    j["optim.batch"] = batch;
    j["optim.steps"] = steps;
    j["optim.margin"] = margin;
    j["optim.freeze"] = frozen;
    j["eval.ks"] = ks;
    j["seed"] = seed;
    return j;
  }

  std::string hash() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(to_json().dump())));
    return buf;
  }

  void set(const std::string& key, const nlohmann::json& v) {
    try {
      if (key == "pooling.method") model.method = method_from_string(v.get<std::string>());
      else if (key == "pooling.d_in") model.d_in = v.get<std::size_t>();
      else if (key == "pooling.d") model.d = v.get<std::size_t>();
      else if (key == "pooling.out_dim") model.out_dim = v.get<std::size_t>();
      else if (key == "pooling.n_words") model.n_words = v.get<std::size_t>();
      else if (key == "pooling.rank") model.rank = v.get<std::size_t>();
      else if (key == "pooling.normalize_output") model.normalize_output = v.get<bool>();
      else if (key == "codebook.temperature") model.temperature = v.get<double>();
      else if (key == "codebook.mode") {
        const auto mode = v.get<std::string>();
        if (mode != "soft" && mode != "hard") throw InputError("codebook.mode must be soft or hard");
        model.hard_assignment = mode == "hard";
      } else if (key == "codebook.dual") model.dual_codebook = v.get<bool>();
      else if (key == "codebook.lloyd_iterations") lloyd_iterations = v.get<std::size_t>();
      else if (key == "dataset.n_instances") dataset.n_instances = v.get<std::size_t>();
      else if (key == "dataset.samples_per_instance") dataset.samples_per_instance = v.get<std::size_t>();
      else if (key == "dataset.locations") dataset.locations = v.get<std::size_t>();
      else if (key == "dataset.n_modes") dataset.n_modes = v.get<std::size_t>();
      else if (key == "dataset.cluster_spread") dataset.cluster_spread = v.get<double>();
      else if (key == "dataset.noise_scale") dataset.noise_scale = v.get<double>();
      else if (key == "optim.lr") lr = v.get<double>();
      else if (key == "optim.batch") batch = v.get<std::size_t>();
      else if (key == "optim.steps") steps = v.get<std::size_t>();
      else if (key == "optim.margin") margin = v.get<double>();
      else if (key == "optim.freeze") frozen = v.get<std::vector<std::string>>();
      else if (key == "eval.ks") ks = v.get<std::vector<std::size_t>>();
      else if (key == "seed") seed = v.get<std::uint64_t>();
      else if (key == "output_dir") output_dir = v.get<std::string>();
      else throw InputError("config: unknown key '" + key + "'");
    } catch (const nlohmann::json::exception& e) {
      throw InputError("config: bad value for '" + key + "': " + e.what());
    }
  }

  // "key=value" override.
  void apply_override(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0)
      throw InputError("config: override must look like key=value, got '" + assignment + "'");
    const std::string key = assignment.substr(0, eq), text = assignment.substr(eq + 1);
    nlohmann::json value = nlohmann::json::parse(text, nullptr, /*allow_exceptions=*/false);
    if (value.is_discarded()) value = text;
    set(key, value);
  }

  void validate() const {
    to_train_config().validate();
    SyntheticDatasetSpec spec = dataset_spec();
    spec.validate();
    if (ks.empty()) throw InputError("config: eval.ks must not be empty");
    for (auto k : ks)
      if (k == 0) throw InputError("config: eval.ks entries must be >= 1");
    static const FreezeSet known = {"reduction", "codebook", "codebook_q", "u",        "v", "u_set",
                                    "v_set",     "u_shared", "v_shared",   "a",        "b"};
    for (const auto& f : frozen)
      if (!known.count(f)) throw InputError("config: unknown tensor '" + f + "' in optim.freeze");
  }

  SyntheticDatasetSpec dataset_spec() const {
    SyntheticDatasetSpec s = dataset;
    s.raw_dim = model.d_in;
    s.seed = seed;
    return s;
  }

  TrainConfig to_train_config() const {
    TrainConfig t;
    t.model = model;
    t.lr = lr;
    t.batch = batch;
    t.steps = steps;
    t.margin = margin;
    t.lloyd_iterations = lloyd_iterations;
    t.frozen = FreezeSet(frozen.begin(), frozen.end());
    t.seed = seed;
    return t;
  }

  static RunConfig from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw InputError("config: top level must be a JSON object");
    RunConfig c;
    for (const auto& [key, value] : j.items()) c.set(key, value);
    return c;
  }

  static RunConfig load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("config: cannot open " + path);
    nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) throw InputError("config: " + path + " is not valid JSON");
    return from_json(j);
  }
};

}  // namespace jcf
