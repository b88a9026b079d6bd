#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "crgan/config.hpp"
#include "crgan/gmm.hpp"
#include "crgan/metrics.hpp"
#include "crgan/model.hpp"

namespace crgan {

/// One evaluation: `iter,fd,modes_covered,hq_fraction[,class_acc]`.
struct MetricRow {
  std::int64_t iter = 0;
  double fd = 0.0;
  int modes_covered = 0;
  double hq_fraction = 0.0;
  std::optional<double> class_acc;
};

struct RunLog {
  RunConfig config;
  std::vector<MetricRow> rows;
  ModeReport final_report;
  /// Loss of every discriminator micro-step and every generator step, in order.
  std::vector<double> d_losses;
  std::vector<double> g_losses;
  double wall_seconds = 0.0;
};

struct TrainOptions {
  /// Write log.csv, losses.csv, snapshots and checkpoint.bin under cfg.out_dir.
  bool write_outputs = true;
};

/// Adversarial training on the configured mixture. Throws DivergenceError on a
/// non-finite loss or gradient; the checkpoint of the last evaluation is kept.
RunLog train(const RunConfig& cfg, const TrainOptions& opts = {});

/// The eight-mode ring of the configured task (labeled when conditional).
GMMSpec task_mixture(const RunConfig& cfg);

/// Draws n generated points and then n real points from `rng` and scores the
/// generated set. `iter` of the result is left at 0.
MetricRow evaluate_generator(Generator& generator, const GMMSpec& spec, std::size_t n, Rng& rng,
                             ModeReport* report = nullptr);

/// Generator steps at which snapshots are written: 25/50/75/100% of the run, deduplicated.
std::vector<std::int64_t> snapshot_iterations(std::int64_t total_g_updates);

/// Draws n points from the generator and writes them (with labels when conditional) as CSV.
SampleBatch snapshot(Generator& generator, std::size_t n, Rng& rng, const std::filesystem::path& path);

/// Scatter plot: real points grey, generated points colored, mode centers marked.
void write_scatter_svg(const std::filesystem::path& path, const Tensor& real, const SampleBatch& generated,
                       const GMMSpec& spec);

/// CSV header of log.csv (after the `# key=value` config echo lines).
std::string metric_header(bool conditional);
std::string format_metric_row(const MetricRow& row);

// ---------------------------------------------------------------------------
// Sweeps

struct SweepCell {
  std::size_t n_heads = 1;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  double final_fd = 0.0;
  int modes_covered = 0;
  double hq_fraction = 0.0;
};

/// Mean and sample standard deviation (n-1 denominator; 0 for a single trial)
/// over the successful trials of one N.
struct SweepAggregate {
  std::size_t n_heads = 1;
  std::size_t trials = 0;
  double fd_mean = 0.0, fd_std = 0.0;
  double modes_mean = 0.0, modes_std = 0.0;
  double hq_mean = 0.0, hq_std = 0.0;
};

struct SweepSummary {
  std::vector<SweepCell> cells;
  std::vector<SweepAggregate> aggregates;
};

/// Trains every (N, seed) pair into `base.out_dir/n<N>_seed<S>`. A failing run is
/// recorded in its cell and the sweep moves on. `jobs` > 1 runs cells on worker threads.
SweepSummary sweep(const RunConfig& base, std::span<const std::size_t> n_heads, std::span<const std::uint64_t> seeds,
                   int jobs = 1);

SweepAggregate aggregate(std::size_t n_heads, std::span<const SweepCell> cells);

/// Rows `kind,n_heads,seed,final_fd,modes_covered,hq_fraction,status` with kind in
/// {trial, mean, std}.
void write_summary_csv(const std::filesystem::path& path, const SweepSummary& summary);

}  // namespace crgan
