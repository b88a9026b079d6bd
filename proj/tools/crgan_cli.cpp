#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "crgan/checkpoint.hpp"
#include "crgan/config.hpp"
#include "crgan/errors.hpp"
#include "crgan/losses.hpp"
#include "crgan/model.hpp"
#include "crgan/rng.hpp"
#include "crgan/selftest.hpp"
#include "crgan/trainer.hpp"

namespace {

using namespace crgan;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitDiverged = 2;
constexpr int kExitSelftest = 3;

struct Overrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> n_heads;
  std::optional<std::string> loss;
  std::optional<std::string> out;
  std::vector<std::string> set;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config_path, "key=value config file");
  cmd->add_option("--seed", o.seed, "override seed");
  cmd->add_option("--loss", o.loss, "hinge | log_paper | log_standard");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--set", o.set, "extra key=value overrides")->take_all();
}

RunConfig resolve(const Overrides& o) {
  RunConfig cfg = o.config_path.empty() ? RunConfig{} : load_config(o.config_path);
  if (o.seed) cfg.seed = *o.seed;
  if (o.n_heads) cfg.n_heads = *o.n_heads;
  if (o.loss) set_config_value(cfg, "loss_form", *o.loss);
  if (o.out) cfg.out_dir = *o.out;
  for (const std::string& kv : o.set) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    set_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  cfg.validate();
  return cfg;
}

int run_train(const Overrides& o) {
  const RunConfig cfg = resolve(o);
  const RunLog log = train(cfg);
  const MetricRow& last = log.rows.back();
  fmt::print("{}\n{}\n", metric_header(cfg.conditional()), format_metric_row(last));
  fmt::print("wrote {} ({:.1f} s)\n", cfg.out_dir, log.wall_seconds);
  return kExitOk;
}

int run_sweep(const Overrides& o, const std::vector<std::size_t>& ns, const std::vector<std::uint64_t>& seeds,
              int jobs) {
  const RunConfig cfg = resolve(o);
  const SweepSummary summary = sweep(cfg, ns, seeds, jobs);
  const auto path = std::filesystem::path(cfg.out_dir) / "summary.csv";
  write_summary_csv(path, summary);
  for (const SweepAggregate& a : summary.aggregates)
    fmt::print("N={:<3} trials={} fd={:.4f}+-{:.4f} modes={:.2f}+-{:.2f} hq={:.3f}+-{:.3f}\n", a.n_heads, a.trials,
               a.fd_mean, a.fd_std, a.modes_mean, a.modes_std, a.hq_mean, a.hq_std);
  int failed = 0;
  for (const SweepCell& c : summary.cells) {
    if (!c.ok) {
      ++failed;
      fmt::print(stderr, "N={} seed={} failed: {}\n", c.n_heads, c.seed, c.error);
    }
  }
  fmt::print("wrote {}\n", path.string());
  return failed == 0 ? kExitOk : kExitDiverged;
}

int run_selftest() {
  const SelftestReport report = selftest();
  for (const CheckResult& c : report.checks)
    fmt::print("{} {}: {}\n", c.passed ? "PASS" : "FAIL", c.name, c.detail);
  fmt::print("{} checks in {:.2f} s\n", report.checks.size(), report.seconds);
  return report.all_passed() ? kExitOk : kExitSelftest;
}

int run_eval(const std::string& path, std::size_t samples, std::optional<std::uint64_t> seed) {
  const Checkpoint ckpt = read_checkpoint(path);
  const RunConfig cfg = parse_config(ckpt.config_text);
  Rng init = Rng::stream(cfg.seed, "init_g");
  Generator generator(cfg, init);
  for (auto& [name, tensor] : generator.state_tensors()) {
    const Tensor* stored = ckpt.find(name);
    if (stored == nullptr) throw ConfigError("checkpoint has no tensor '" + name + "'");
    if (stored->shape() != tensor->shape()) throw DimensionError("checkpoint tensor '" + name + "' has wrong shape");
    *tensor = *stored;
  }
  Rng rng = Rng::stream(seed.value_or(cfg.seed), "eval");
  MetricRow row = evaluate_generator(generator, task_mixture(cfg), samples, rng);
  row.iter = ckpt.g_updates;
  fmt::print("{}\n{}\n", metric_header(cfg.conditional()), format_metric_row(row));
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cascaded-rejection GAN toy trainer"};
  app.require_subcommand(1);

  Overrides train_opts;
  auto* train_cmd = app.add_subcommand("train", "train one run");
  add_common(train_cmd, train_opts);
  train_cmd->add_option("--n-heads", train_opts.n_heads, "number of cascade scores N");

  Overrides sweep_opts;
  std::vector<std::size_t> sweep_ns{1, 2, 4, 8, 16};
  std::vector<std::uint64_t> sweep_seeds{0, 1, 2};
  int jobs = 1;
  auto* sweep_cmd = app.add_subcommand("sweep", "train every (N, seed) pair and write summary.csv");
  add_common(sweep_cmd, sweep_opts);
  sweep_cmd->add_option("--n-heads", sweep_ns, "comma-separated N values")->delimiter(',');
  sweep_cmd->add_option("--seeds", sweep_seeds, "comma-separated seeds")->delimiter(',');
  sweep_cmd->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);

  app.add_subcommand("selftest", "run the built-in invariant checks");

  std::string ckpt_path;
  std::size_t eval_samples = 8000;
  std::optional<std::uint64_t> eval_seed;
  auto* eval_cmd = app.add_subcommand("eval", "score a generator checkpoint");
  eval_cmd->add_option("--checkpoint", ckpt_path, "checkpoint.bin")->required();
  eval_cmd->add_option("--samples", eval_samples, "number of generated and real samples");
  eval_cmd->add_option("--seed", eval_seed, "evaluation seed (defaults to the run seed)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*train_cmd) return run_train(train_opts);
    if (*sweep_cmd) return run_sweep(sweep_opts, sweep_ns, sweep_seeds, jobs);
    if (app.got_subcommand("selftest")) return run_selftest();
    if (*eval_cmd) return run_eval(ckpt_path, eval_samples, eval_seed);
  } catch (const DivergenceError& e) {
    fmt::print(stderr, "diverged: {}\n", e.what());
    return kExitDiverged;
  } catch (const ConfigError& e) {
    fmt::print(stderr, "config error: {}\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitConfig;
  }
  return kExitConfig;
}
