#pragma once

// Train / eval / ablation runs with their on-disk artifacts:
//   <out>/checkpoint.bin   model parameters (checkpoint.hpp)
//   <out>/train.log.jsonl  one {"step","loss","lr","seed","triplets"} object per step
//   <out>/report.json      config, hash, recall table

#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "jcf/checkpoint.hpp"
#include "jcf/config.hpp"
#include "jcf/cost_model.hpp"
#include "jcf/train.hpp"

namespace jcf {

inline nlohmann::json eval_to_json(const EvalResult& r) {
  nlohmann::json recall = nlohmann::json::object();
  for (const auto& [k, v] : r.recall_at) recall[std::to_string(k)] = v;
  return {{"recall_at", recall}, {"n_queries", r.n_queries}, {"clamped_ks", r.clamped_ks}};
}

inline PoolingConfig pooling_config(const ModelConfig& m) {
  return {m.method, m.d_in, m.d, m.out_dim, uses_codebook(m.method) ? m.n_words : 0,
          m.method == Method::JcfShared ? m.rank : 0};
}

struct TrainRun {
  TrainResult result;
  EvalResult initial_eval;
  EvalResult final_eval;
};

inline TrainRun run_training(const RunConfig& cfg, std::ostream* progress = nullptr) {
  cfg.validate();
  const Dataset data = generate_dataset(cfg.dataset_spec());
  TrainRun run;
  const std::size_t every = std::max<std::size_t>(1, cfg.steps / 10);
  run.result = train(cfg.to_train_config(), data, [&](const StepLog& s) {
    if (progress && (s.step % every == 0 || s.step + 1 == cfg.steps))
      *progress << "step " << s.step << " loss " << s.loss << " triplets " << s.triplets << '\n';
  });
  run.initial_eval = evaluate(run.result.initial, data.test, cfg.ks);
  run.final_eval = evaluate(run.result.params, data.test, cfg.ks);
  return run;
}

inline Checkpoint make_checkpoint(const RunConfig& cfg, const TrainResult& r) {
  return {r.params, cfg.to_json(), cfg.hash(), r.steps_done, r.epoch};
}

// Trains, evaluates and writes all three artifacts into `out`.
inline TrainRun train_to_directory(const RunConfig& cfg, const std::filesystem::path& out,
                                   std::ostream* progress = nullptr) {
  cfg.validate();
  std::filesystem::create_directories(out);
  std::ofstream log(out / "train.log.jsonl", std::ios::trunc);
  if (!log) throw InputError("train: cannot write into " + out.string());

  TrainRun run;
  try {
    run = run_training(cfg, progress);
  } catch (const NumericError& e) {
    nlohmann::json dump{{"schema", 1},     {"status", "numeric_error"}, {"tensor", e.tensor()},
                        {"what", e.what()}, {"config", cfg.to_json()},  {"config_hash", cfg.hash()}};
    if (const auto* nf = dynamic_cast<const NonFiniteLoss*>(&e)) {
      dump["status"] = "non_finite_loss";
      dump["step"] = nf->step();
      dump["batch"] = nf->batch();
      dump["loss"] = std::to_string(nf->loss());
    }
    std::ofstream(out / "report.json", std::ios::trunc) << dump.dump(2) << '\n';
    throw;
  }
  for (const auto& s : run.result.log)
    log << nlohmann::json{{"step", s.step}, {"loss", s.loss}, {"lr", s.lr}, {"seed", s.seed},
                          {"triplets", s.triplets}}
               .dump()
        << '\n';
  save_checkpoint(make_checkpoint(cfg, run.result), out / "checkpoint.bin");

  nlohmann::json report{{"schema", 1},
                        {"command", "train"},
                        {"config", cfg.to_json()},
                        {"config_hash", cfg.hash()},
                        {"steps", run.result.steps_done},
                        {"param_count", run.result.params.param_count()},
                        {"final_loss", run.result.log.empty() ? 0.0 : run.result.log.back().loss},
                        {"initial_eval", eval_to_json(run.initial_eval)},
                        {"eval", eval_to_json(run.final_eval)}};
  std::ofstream(out / "report.json", std::ios::trunc) << report.dump(2) << '\n';
  return run;
}

// Re-generates the held-out split from the configuration stored in the
// checkpoint and evaluates it.
inline EvalResult evaluate_checkpoint(const Checkpoint& ck, const std::vector<std::size_t>& ks) {
  const RunConfig cfg = RunConfig::from_json(ck.run_config);
  if (cfg.model.method != ck.params.config.method || cfg.model.d_in != ck.params.config.d_in)
    throw InputError("eval: checkpoint config does not match its tensors");
  require_finite(ck.params);
  const Dataset data = generate_dataset(cfg.dataset_spec());
  return evaluate(ck.params, data.test, ks.empty() ? cfg.ks : ks);
}

struct AblationRow {
  std::string label;
  ModelConfig model;
  std::uint64_t param_count = 0;
  std::uint64_t flops_per_location = 0;
  EvalResult untrained;
  EvalResult trained;
  double final_loss = 0.0;
};

// Baseline, Factorized, JCF-8 and JCF-8-4 under the same data, budget and seed.
inline std::vector<AblationRow> codebook_ablation(const RunConfig& base, std::ostream* progress = nullptr) {
  struct Variant {
    std::string label;
    Method method;
    std::size_t n, r;
  };
  const std::vector<Variant> variants = {{"Baseline", Method::Baseline, 0, 0},
                                         {"Factorized", Method::Factorized, 0, 0},
                                         {"JCF-8", Method::Jcf, 8, 0},
                                         {"JCF-8-4", Method::JcfShared, 8, 4}};
  std::vector<AblationRow> rows;
  for (const auto& v : variants) {
    RunConfig cfg = base;
    cfg.model.method = v.method;
    if (v.n) cfg.model.n_words = v.n;
    if (v.r) cfg.model.rank = v.r;
    if (progress) *progress << "== " << v.label << '\n';
    const TrainRun run = run_training(cfg, progress);
    const PoolingConfig pc = pooling_config(cfg.model);
    rows.push_back({v.label, cfg.model, param_count(pc), flops_estimate(pc).flops_per_location,
                    run.initial_eval, run.final_eval,
                    run.result.log.empty() ? 0.0 : run.result.log.back().loss});
  }
  return rows;
}

inline nlohmann::json ablation_to_json(const RunConfig& base, const std::vector<AblationRow>& rows) {
  nlohmann::json j{{"schema", 1}, {"command", "ablation"}, {"ablation", "codebook"},
                   {"config", base.to_json()}, {"config_hash", base.hash()}};
  j["rows"] = nlohmann::json::array();
  for (const auto& r : rows)
    j["rows"].push_back({{"label", r.label},
                         {"method", std::string(to_string(r.model.method))},
                         {"n_words", r.model.n_words},
                         {"rank", r.model.rank},
                         {"param_count", r.param_count},
                         {"flops_per_location", r.flops_per_location},
                         {"final_loss", r.final_loss},
                         {"untrained", eval_to_json(r.untrained)},
                         {"eval", eval_to_json(r.trained)}});
  return j;
}

}  // namespace jcf
