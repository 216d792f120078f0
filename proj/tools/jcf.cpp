// jcf: parameter tables, self-checks, training and evaluation.
//
// Exit codes: 0 ok, 1 bad input or configuration, 2 a check failed,
// 3 non-finite numbers.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "jcf/jcf.hpp"

namespace {

constexpr int kOk = 0, kInvalid = 1, kSuiteFailed = 2, kNumeric = 3;

using jcf::Method;

std::string millions(std::uint64_t count) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2fM", static_cast<double>(count) / 1e6);
  return buf;
}

void write_json(const nlohmann::json& j, const std::string& path) {
  if (path.empty()) return;
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw jcf::InputError("cannot write " + path);
  out << j.dump(2) << '\n';
}

// ---- params ----------------------------------------------------------------

struct ParamsArgs {
  bool table1 = false, json = false;
  std::string method = "jcf_shared";
  std::uint64_t n = 8, r = 4, d_in = 2048, d = 256, out_dim = 512;
};

int cmd_params(const ParamsArgs& a) {
  std::vector<jcf::TableColumn> rows;
  if (a.table1) {
    rows = jcf::table1_columns();
  } else {
    const Method m = jcf::method_from_string(a.method);
    jcf::PoolingConfig c{m, a.d_in, a.d, a.out_dim, jcf::uses_codebook(m) ? a.n : 0,
                         m == Method::JcfShared ? a.r : 0};
    std::string label(jcf::to_string(m));
    if (m == Method::Jcf || m == Method::BPCodebook) label += " N=" + std::to_string(a.n);
    if (m == Method::JcfShared) label += " N=" + std::to_string(a.n) + " R=" + std::to_string(a.r);
    rows.push_back({label, c, ""});
  }

  nlohmann::json out{{"schema", 1}, {"rows", nlohmann::json::array()}};
  bool all_match = true;
  for (const auto& row : rows) {
    const jcf::CostReport cost = jcf::flops_estimate(row.config);
    nlohmann::json j{{"label", row.label},
                     {"method", std::string(jcf::to_string(row.config.method))},
                     {"d_in", row.config.d_in},
                     {"d", row.config.d},
                     {"D", row.config.out_dim},
                     {"N", row.config.n_words},
                     {"R", row.config.rank},
                     {"param_count", cost.param_count},
                     {"flops_per_location", cost.flops_per_location}};
    if (!row.printed.empty()) {
      const bool match = jcf::matches_printed(cost.param_count, row.printed);
      all_match = all_match && match;
      j["rounded"] = jcf::round_millions(cost.param_count, jcf::printed_decimals(row.printed)) + "M";
      j["expected"] = row.printed;
      j["match"] = match;
    }
    out["rows"].push_back(std::move(j));
  }

  if (a.json) {
    std::cout << out.dump(2) << '\n';
  } else {
    std::printf("%-18s %14s %10s %14s", "config", "params", "millions", "mult/location");
    if (a.table1) std::printf(" %8s %8s", "rounded", "table");
    std::printf("\n");
    for (const auto& j : out["rows"]) {
      std::printf("%-18s %14llu %10s %14llu", j["label"].get<std::string>().c_str(),
                  static_cast<unsigned long long>(j["param_count"].get<std::uint64_t>()),
                  millions(j["param_count"].get<std::uint64_t>()).c_str(),
                  static_cast<unsigned long long>(j["flops_per_location"].get<std::uint64_t>()));
      if (a.table1)
        std::printf(" %8s %8s%s", j["rounded"].get<std::string>().c_str(),
                    j["expected"].get<std::string>().c_str(), j["match"].get<bool>() ? "" : "  MISMATCH");
      std::printf("\n");
    }
  }
  return all_match ? kOk : kSuiteFailed;
}

// ---- check -----------------------------------------------------------------

struct CheckArgs {
  std::string suite = "all";
  std::uint64_t seed = 0;
  std::string params_file, report;
  bool json = false;
};

int cmd_check(const CheckArgs& a) {
  if (!a.params_file.empty()) {
    const jcf::Checkpoint ck = jcf::load_checkpoint(a.params_file);
    jcf::require_finite(ck.params);
    std::cerr << "params: " << a.params_file << " is finite\n";
  }
  std::vector<std::string> suites;
  if (a.suite == "all") {
    suites = {"oracle", "grad", "cost"};
  } else {
    suites = {a.suite};
  }

  nlohmann::json report{{"schema", 1}, {"seed", a.seed}, {"suites", nlohmann::json::array()}};
  bool pass = true;
  for (const auto& name : suites) {
    const auto t0 = std::chrono::steady_clock::now();
    const jcf::SuiteReport rep = jcf::run_suite(name, a.seed);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    nlohmann::json j = rep.to_json();
    double worst = 0.0;
    for (const auto& c : rep.cases) worst = std::max(worst, c.max_error);
    j["max_error"] = worst;
    j["seconds"] = secs;
    report["suites"].push_back(j);
    pass = pass && rep.pass;
    if (!a.json) {
      std::printf("%-7s %s  max_error=%.3e  (%.2fs)\n", name.c_str(), rep.pass ? "PASS" : "FAIL", worst, secs);
      for (const auto& c : rep.cases)
        std::printf("  %-28s %s  n=%-4zu max_error=%.3e %s\n", c.name.c_str(), c.pass ? "ok  " : "FAIL",
                    c.instances, c.max_error, c.pass ? "" : c.detail.c_str());
    }
  }
  report["pass"] = pass;
  if (a.json) std::cout << report.dump(2) << '\n';
  write_json(report, a.report);
  return pass ? kOk : kSuiteFailed;
}

// ---- train / eval ------------------------------------------------------------

struct TrainArgs {
  std::string config_file, out, ablation;
  std::vector<std::string> overrides;
  bool quiet = false;
};

jcf::RunConfig load_run_config(const std::string& file, const std::vector<std::string>& overrides) {
  jcf::RunConfig cfg = file.empty() ? jcf::RunConfig{} : jcf::RunConfig::load(file);
  for (const auto& o : overrides) cfg.apply_override(o);
  cfg.validate();
  return cfg;
}

void print_recall(const std::string& label, const jcf::EvalResult& r) {
  std::printf("%-12s", label.c_str());
  for (const auto& [k, v] : r.recall_at) std::printf("  R@%-3zu %.4f", k, v);
  std::printf("\n");
}

int cmd_train(const TrainArgs& a) {
  jcf::RunConfig cfg = load_run_config(a.config_file, a.overrides);
  if (!a.out.empty()) cfg.output_dir = a.out;
  std::ostream* progress = a.quiet ? nullptr : &std::cerr;

  if (!a.ablation.empty()) {
    if (a.ablation != "codebook") throw jcf::InputError("train: unknown ablation '" + a.ablation + "'");
    const auto rows = jcf::codebook_ablation(cfg, progress);
    std::printf("%-12s %10s %14s", "method", "params", "mult/location");
    for (auto k : cfg.ks) std::printf("  R@%-3zu", k);
    std::printf("  untrained R@%zu\n", cfg.ks.front());
    for (const auto& r : rows) {
      std::printf("%-12s %10llu %14llu", r.label.c_str(), static_cast<unsigned long long>(r.param_count),
                  static_cast<unsigned long long>(r.flops_per_location));
      for (const auto& [k, v] : r.trained.recall_at) std::printf("  %.3f", v);
      std::printf("  %.3f\n", r.untrained.recall_at.begin()->second);
    }
    std::filesystem::create_directories(cfg.output_dir);
    write_json(jcf::ablation_to_json(cfg, rows), (std::filesystem::path(cfg.output_dir) / "report.json").string());
    return kOk;
  }

  const jcf::TrainRun run = jcf::train_to_directory(cfg, cfg.output_dir, progress);
  print_recall("untrained", run.initial_eval);
  print_recall("trained", run.final_eval);
  std::printf("artifacts in %s (config %s)\n", cfg.output_dir.c_str(), cfg.hash().c_str());
  return kOk;
}

struct EvalArgs {
  std::string checkpoint, ks, report;
  bool json = false;
};

std::vector<std::size_t> parse_ks(const std::string& text) {
  std::vector<std::size_t> ks;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      std::size_t used = 0;
      const long long v = std::stoll(item, &used);
      if (used != item.size() || v <= 0) throw std::invalid_argument(item);
      ks.push_back(static_cast<std::size_t>(v));
    } catch (const std::logic_error&) {
      throw jcf::InputError("eval: --ks expects positive integers separated by commas, got '" + text + "'");
    }
  }
  return ks;
}

int cmd_eval(const EvalArgs& a) {
  if (!std::filesystem::exists(a.checkpoint))
    throw jcf::InputError("eval: checkpoint not found: " + a.checkpoint);
  const jcf::Checkpoint ck = jcf::load_checkpoint(a.checkpoint);
  const jcf::EvalResult r = jcf::evaluate_checkpoint(ck, a.ks.empty() ? std::vector<std::size_t>{} : parse_ks(a.ks));
  nlohmann::json j = jcf::eval_to_json(r);
  j["schema"] = 1;
  j["command"] = "eval";
  j["checkpoint"] = a.checkpoint;
  j["config_hash"] = ck.config_hash;
  if (a.json) {
    std::cout << j.dump(2) << '\n';
  } else {
    std::printf("queries %zu\n", r.n_queries);
    for (const auto& [k, v] : r.recall_at) std::printf("R@%-4zu %.17g\n", k, v);
    for (auto k : r.clamped_ks) std::printf("note: K=%zu exceeds the gallery and was clamped\n", k);
  }
  write_json(j, a.report);
  return kOk;
}

// ---- bench -------------------------------------------------------------------

struct BenchArgs {
  std::size_t d = 64, out_dim = 64, locations = 64, repeats = 3;
  std::vector<std::size_t> ns = {4, 8, 16};
  bool json = false;
};

int cmd_bench(const BenchArgs& a) {
  jcf::Rng rng(0);
  const std::size_t d = a.d, big_d = a.out_dim;
  const jcf::FeatureSet xs = jcf::FeatureSet::from_locations(jcf::random_normal(a.locations, d, rng));
  nlohmann::json out{{"schema", 1}, {"d", d}, {"D", big_d}, {"locations", a.locations}, {"rows", nlohmann::json::array()}};

  auto time_it = [&](auto&& fn) {
    double best = 1e300;
    for (std::size_t i = 0; i < a.repeats; ++i) {
      const auto t0 = std::chrono::steady_clock::now();
      fn();
      best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }
    return best;
  };
  auto record = [&](const std::string& label, const jcf::PoolingConfig& pc, const jcf::OpCounts& counts,
                    double secs) {
    out["rows"].push_back({{"label", label},
                           {"method", std::string(jcf::to_string(pc.method))},
                           {"N", pc.n_words},
                           {"R", pc.rank},
                           {"mults_per_location", jcf::flops_estimate(pc).flops_per_location},
                           {"mults_measured", counts.total()},
                           {"seconds", secs}});
  };

  {
    const jcf::Rank1Params p{jcf::random_normal(big_d, d, rng), jcf::random_normal(big_d, d, rng)};
    jcf::OpCounts c;
    jcf::rank1_pool(xs, p, &c);
    record("factorized", {Method::Factorized, d, d, big_d, 0, 0}, c, time_it([&] { jcf::rank1_pool(xs, p); }));
  }
  for (std::size_t n : a.ns) {
    const jcf::Codebook cb(jcf::random_normal(n, d, rng));
    {
      const jcf::JcfParams p{jcf::random_normal(big_d, d, n, rng), jcf::random_normal(big_d, d, n, rng)};
      jcf::OpCounts c;
      jcf::jcf_pool(xs, cb, p, &c);
      record("JCF-" + std::to_string(n), {Method::Jcf, d, d, big_d, n, 0}, c,
             time_it([&] { jcf::jcf_pool(xs, cb, p); }));
    }
    for (std::size_t r = 1; r <= n; r *= 2) {
      const jcf::JcfSharedParams p{jcf::random_normal(big_d, d, r, rng), jcf::random_normal(big_d, d, r, rng),
                                   jcf::random_normal(n, r, rng), jcf::random_normal(n, r, rng)};
      jcf::OpCounts c;
      jcf::jcf_shared_pool(xs, cb, p, &c);
      record("JCF-" + std::to_string(n) + "-" + std::to_string(r), {Method::JcfShared, d, d, big_d, n, r}, c,
             time_it([&] { jcf::jcf_shared_pool(xs, cb, p); }));
    }
  }

  if (a.json) {
    std::cout << out.dump(2) << '\n';
    return kOk;
  }
  std::printf("d=%zu D=%zu M=%zu\n%-12s %16s %16s %12s\n", d, big_d, a.locations, "config", "mult/location",
              "mult measured", "ms");
  for (const auto& r : out["rows"])
    std::printf("%-12s %16llu %16llu %12.3f\n", r["label"].get<std::string>().c_str(),
                static_cast<unsigned long long>(r["mults_per_location"].get<std::uint64_t>()),
                static_cast<unsigned long long>(r["mults_measured"].get<std::uint64_t>()),
                r["seconds"].get<double>() * 1e3);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"jcf: second-order pooling with joint codebooks and factorization"};
  app.require_subcommand(1);

  ParamsArgs pa;
  auto* params = app.add_subcommand("params", "parameter and multiply counts");
  params->add_flag("--table1", pa.table1, "the twelve-column codebook/parameter comparison");
  params->add_option("--method", pa.method, "baseline|bp|bp_codebook|factorized|jcf|jcf_shared");
  params->add_option("--n", pa.n, "codebook size N");
  params->add_option("--r", pa.r, "shared projectors R");
  params->add_option("--d-in", pa.d_in, "backbone feature dimension");
  params->add_option("--d", pa.d, "reduced feature dimension");
  params->add_option("--D,--out-dim", pa.out_dim, "output dimension");
  params->add_flag("--json", pa.json);

  CheckArgs ca;
  auto* check = app.add_subcommand("check", "oracle, gradient and cost self-checks");
  check->add_option("--suite", ca.suite, "all|oracle|grad|cost")
      ->check(CLI::IsMember({"all", "oracle", "grad", "cost"}));
  check->add_option("--seed", ca.seed);
  check->add_option("--params", ca.params_file, "checkpoint whose tensors must be finite");
  check->add_option("--report", ca.report, "write the JSON report here");
  check->add_flag("--json", ca.json);

  TrainArgs ta;
  auto* trainc = app.add_subcommand("train", "train and evaluate on the synthetic split");
  trainc->add_option("--config", ta.config_file, "flat JSON run configuration");
  trainc->add_option("--set", ta.overrides, "key=value override (repeatable)");
  trainc->add_option("--out", ta.out, "output directory");
  trainc->add_option("--ablation", ta.ablation, "run a preset comparison (codebook)");
  trainc->add_flag("--quiet", ta.quiet);

  EvalArgs ea;
  auto* evalc = app.add_subcommand("eval", "Recall@K of a checkpoint on its held-out split");
  evalc->add_option("--checkpoint", ea.checkpoint)->required();
  evalc->add_option("--ks", ea.ks, "comma-separated K list, e.g. 1,2,4,8");
  evalc->add_option("--report", ea.report, "write the JSON result here");
  evalc->add_flag("--json", ea.json);

  BenchArgs ba;
  auto* bench = app.add_subcommand("bench", "counted multiplies and wall time per kernel");
  bench->add_option("--d", ba.d);
  bench->add_option("--D,--out-dim", ba.out_dim);
  bench->add_option("--locations", ba.locations);
  bench->add_option("--n", ba.ns, "codebook sizes");
  bench->add_option("--repeats", ba.repeats);
  bench->add_flag("--json", ba.json);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInvalid;
  }

  try {
    if (*params) return cmd_params(pa);
    if (*check) return cmd_check(ca);
    if (*trainc) return cmd_train(ta);
    if (*evalc) return cmd_eval(ea);
    if (*bench) return cmd_bench(ba);
  } catch (const jcf::NumericError& e) {
    std::cerr << "numeric error in '" << e.tensor() << "': " << e.what() << '\n';
    return kNumeric;
  } catch (const jcf::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInvalid;
  }
  return kInvalid;
}
