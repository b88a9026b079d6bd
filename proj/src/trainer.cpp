#include "crgan/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <mutex>
#include <thread>

#include <fmt/chrono.h>
#include <fmt/format.h>

#include "crgan/checkpoint.hpp"
#include "crgan/errors.hpp"
#include "crgan/optimizer.hpp"

namespace crgan {
namespace {

namespace fs = std::filesystem;

struct Streams {
  Rng data;
  Rng latent;
  Rng eval;
  Rng snapshot;

  explicit Streams(std::uint64_t seed)
      : data(Rng::stream(seed, "data")),
        latent(Rng::stream(seed, "latent")),
        eval(Rng::stream(seed, "eval")),
        snapshot(Rng::stream(seed, "snapshot")) {}
};

/// Everything a run mutates, kept together so checkpoints see a consistent view.
class Session {
 public:
  explicit Session(const RunConfig& cfg)
      : cfg_(cfg),
        gmm_(task_mixture(cfg)),
        streams_(cfg.seed),
        generator_(cfg, init_g_),
        discriminator_(cfg, init_d_),
        g_params_(generator_.parameters()),
        d_params_(discriminator_.parameters()),
        g_opt_(g_params_, adam(cfg)),
        d_opt_(d_params_, adam(cfg)) {}

  static AdamConfig adam(const RunConfig& cfg) { return {cfg.lr, cfg.beta1, cfg.beta2, cfg.adam_eps}; }

  double discriminator_step() {
    const std::size_t b = cfg_.batch_size;
    SampleBatch real = sample(gmm_, b, streams_.data);
    const Tensor z = sample_latent(LatentSpec{cfg_.latent_dim}, b, streams_.latent);
    std::vector<int> fake_labels;
    if (cfg_.conditional()) fake_labels = sample_labels(kNumClasses, b, streams_.latent);

    Tensor fake;
    {
      Graph gg;
      fake = generator_.forward(gg, z, fake_labels, true).value();
    }
    std::vector<int> labels;
    if (cfg_.conditional()) {
      labels = real.labels;
      labels.insert(labels.end(), fake_labels.begin(), fake_labels.end());
    }

    Graph g;
    Var scores = discriminator_.forward(g, g.constant(vstack(real.points, fake)), labels, true);
    Var loss = d_loss(cfg_.loss_form, slice_rows(scores, 0, b), slice_rows(scores, b, 2 * b));
    apply(g, loss, d_params_, d_opt_, "discriminator");
    return loss.value().item();
  }

  double generator_step() {
    const std::size_t b = cfg_.batch_size;
    const Tensor z = sample_latent(LatentSpec{cfg_.latent_dim}, b, streams_.latent);
    std::vector<int> labels;
    if (cfg_.conditional()) labels = sample_labels(kNumClasses, b, streams_.latent);

    Graph g;
    Var fake = generator_.forward(g, z, labels, true);
    Var loss = g_loss(cfg_.loss_form, discriminator_.forward(g, fake, labels, true));
    apply(g, loss, g_params_, g_opt_, "generator");
    return loss.value().item();
  }

  MetricRow evaluate(std::int64_t iter) {
    MetricRow row = evaluate_generator(generator_, gmm_, cfg_.eval_samples, streams_.eval, &last_report_);
    row.iter = iter;
    return row;
  }

  void write_snapshot(std::int64_t iter, const fs::path& dir) {
    const SampleBatch pts = snapshot(generator_, cfg_.snapshot_samples, streams_.snapshot,
                                     dir / fmt::format("snapshot_{}.csv", iter));
    if (cfg_.snapshot_svg) {
      const SampleBatch real = sample(gmm_, cfg_.snapshot_samples, streams_.snapshot);
      write_scatter_svg(dir / fmt::format("snapshot_{}.svg", iter), real.points, pts, gmm_);
    }
  }

  Checkpoint checkpoint(std::int64_t g_updates) {
    Checkpoint ckpt;
    ckpt.config_text = format_config(cfg_);
    ckpt.g_updates = g_updates;
    for (auto& [name, t] : generator_.state_tensors()) ckpt.tensors.emplace_back(name, *t);
    for (auto& [name, t] : discriminator_.state_tensors()) ckpt.tensors.emplace_back(name, *t);
    ckpt.rng_states = {{"data", streams_.data.state()},
                       {"latent", streams_.latent.state()},
                       {"eval", streams_.eval.state()},
                       {"snapshot", streams_.snapshot.state()}};
    return ckpt;
  }

  [[nodiscard]] const ModeReport& last_report() const { return last_report_; }

 private:
  static void apply(const Graph& g, Var loss, const ParameterList& params, AdamState& opt, const char* who) {
    const double value = loss.value().item();
    if (!std::isfinite(value)) throw DivergenceError(std::string(who) + " loss is not finite");
    zero_grads(params);
    g.accumulate_param_grads(g.backward(loss));
    try {
      opt.step(params);
    } catch (const NumericError& e) {
      throw DivergenceError(std::string(who) + " update: " + e.what());
    }
  }

  RunConfig cfg_;
  GMMSpec gmm_;
  Streams streams_;
  Rng init_g_ = Rng::stream(cfg_.seed, "init_g");
  Rng init_d_ = Rng::stream(cfg_.seed, "init_d");
  Generator generator_;
  Discriminator discriminator_;
  ParameterList g_params_;
  ParameterList d_params_;
  AdamState g_opt_;
  AdamState d_opt_;
  ModeReport last_report_;
};

std::string svg_color(int label) {
  static const char* palette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                  "#9467bd", "#8c564b", "#e377c2", "#17becf"};
  return palette[static_cast<std::size_t>(label < 0 ? 0 : label) % 8];
}

}  // namespace

std::string metric_header(bool conditional) {
  return conditional ? "iter,fd,modes_covered,hq_fraction,class_acc" : "iter,fd,modes_covered,hq_fraction";
}

std::string format_metric_row(const MetricRow& row) {
  std::string s = fmt::format("{},{},{},{}", row.iter, row.fd, row.modes_covered, row.hq_fraction);
  if (row.class_acc) s += fmt::format(",{}", *row.class_acc);
  return s;
}

GMMSpec task_mixture(const RunConfig& cfg) { return ring8(cfg.gmm_radius, cfg.gmm_sigma, cfg.conditional()); }

MetricRow evaluate_generator(Generator& generator, const GMMSpec& spec, std::size_t n, Rng& rng, ModeReport* report) {
  const SampleBatch fake = generator.sample(n, rng);
  const SampleBatch real = sample(spec, n, rng);
  if (!fake.points.all_finite()) throw DivergenceError("generator produced non-finite samples");
  ModeReport r = mode_report(fake.points, spec, fake.labels);
  MetricRow row;
  row.fd = frechet_distance(fit_moments(real.points), fit_moments(fake.points));
  row.modes_covered = r.modes_covered;
  row.hq_fraction = r.high_quality_fraction;
  row.class_acc = r.class_accuracy;
  if (report != nullptr) *report = std::move(r);
  return row;
}

std::vector<std::int64_t> snapshot_iterations(std::int64_t total) {
  std::vector<std::int64_t> out;
  for (int quarter = 1; quarter <= 4; ++quarter) {
    const std::int64_t it = (total * quarter + 2) / 4;  // round half up
    if (out.empty() || out.back() != it) out.push_back(it);
  }
  return out;
}

SampleBatch snapshot(Generator& generator, std::size_t n, Rng& rng, const fs::path& path) {
  SampleBatch batch = generator.sample(n, rng);
  write_points_csv(path, batch.points, batch.labels);
  return batch;
}

void write_scatter_svg(const fs::path& path, const Tensor& real, const SampleBatch& generated, const GMMSpec& spec) {
  double extent = 1.0;
  for (const auto& c : spec.centers) extent = std::max({extent, std::abs(c[0]), std::abs(c[1])});
  extent *= 1.5;
  constexpr double kSize = 480.0;
  const auto px = [&](double x) { return (x + extent) / (2.0 * extent) * kSize; };
  const auto py = [&](double y) { return kSize - (y + extent) / (2.0 * extent) * kSize; };

  std::ofstream os(path);
  if (!os) throw Error("cannot open '" + path.string() + "' for writing");
  os << fmt::format("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{0}\" viewBox=\"0 0 {0} {0}\">\n",
                    kSize);
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (std::size_t i = 0; i < real.rows(); ++i) {
    os << fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"1.5\" fill=\"#bbbbbb\"/>\n", px(real(i, 0)),
                      py(real(i, 1)));
  }
  for (std::size_t i = 0; i < generated.points.rows(); ++i) {
    const int label = generated.labels.empty() ? 0 : generated.labels[i];
    os << fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"1.5\" fill=\"{}\" fill-opacity=\"0.6\"/>\n",
                      px(generated.points(i, 0)), py(generated.points(i, 1)), svg_color(label));
  }
  for (const auto& c : spec.centers) {
    const double x = px(c[0]), y = py(c[1]);
    os << fmt::format("<path d=\"M{:.2f} {:.2f} L{:.2f} {:.2f} M{:.2f} {:.2f} L{:.2f} {:.2f}\" stroke=\"black\" "
                      "stroke-width=\"1.5\"/>\n",
                      x - 5, y - 5, x + 5, y + 5, x - 5, y + 5, x + 5, y - 5);
  }
  os << "</svg>\n";
}

RunLog train(const RunConfig& cfg, const TrainOptions& opts) {
  cfg.validate();
  const auto started = std::chrono::steady_clock::now();
  const fs::path dir = cfg.out_dir;

  std::ofstream log_csv;
  std::ofstream loss_csv;
  if (opts.write_outputs) {
    fs::create_directories(dir);
    log_csv.open(dir / "log.csv", std::ios::trunc);
    loss_csv.open(dir / "losses.csv", std::ios::trunc);
    if (!log_csv || !loss_csv) throw Error("cannot write outputs under '" + dir.string() + "'");
    for (const auto& [k, v] : config_entries(cfg)) log_csv << "# " << k << '=' << v << '\n';
    log_csv << metric_header(cfg.conditional()) << '\n';
    loss_csv << "step,role,loss\n";
  }

  RunLog log;
  log.config = cfg;
  Session session(cfg);
  const auto snapshots = snapshot_iterations(cfg.total_g_updates);

  const auto record_eval = [&](std::int64_t iter) {
    MetricRow row = session.evaluate(iter);
    log.rows.push_back(row);
    if (opts.write_outputs) {
      log_csv << format_metric_row(row) << '\n' << std::flush;
      write_checkpoint(dir / "checkpoint.bin", session.checkpoint(iter));
    }
  };
  const auto maybe_snapshot = [&](std::int64_t iter) {
    if (opts.write_outputs && std::find(snapshots.begin(), snapshots.end(), iter) != snapshots.end()) {
      session.write_snapshot(iter, dir);
    }
  };

  const std::tm started_at = fmt::gmtime(std::chrono::system_clock::to_time_t(std::chrono::system_clock::now()));
  const auto write_meta = [&](const std::string& status) {
    if (!opts.write_outputs) return;
    std::ofstream meta(dir / "run_meta.txt", std::ios::trunc);
    meta << fmt::format("started_at={:%Y-%m-%dT%H:%M:%SZ}\n", started_at) << "status=" << status << '\n'
         << "wall_seconds=" << log.wall_seconds << '\n';
  };

  try {
    record_eval(0);
    maybe_snapshot(0);
    std::int64_t g_updates = 0;
    for (std::int64_t step = 0; g_updates < cfg.total_g_updates; ++step) {
      if (alt_schedule(step, cfg.d_steps_per_g) == Role::discriminator) {
        const double loss = session.discriminator_step();
        log.d_losses.push_back(loss);
        if (opts.write_outputs) loss_csv << fmt::format("{},d,{}\n", step, loss);
      } else {
        const double loss = session.generator_step();
        log.g_losses.push_back(loss);
        if (opts.write_outputs) loss_csv << fmt::format("{},g,{}\n", step, loss);
        ++g_updates;
        if (g_updates % cfg.eval_every == 0 || g_updates == cfg.total_g_updates) record_eval(g_updates);
        maybe_snapshot(g_updates);
      }
    }
  } catch (const DivergenceError&) {
    log.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    write_meta("diverged");
    throw;
  } catch (const NumericError& e) {
    log.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    write_meta("diverged");
    throw DivergenceError(e.what());
  }

  log.final_report = session.last_report();
  log.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  write_meta("ok");
  return log;
}

// ---------------------------------------------------------------------------
// Sweeps

SweepAggregate aggregate(std::size_t n_heads, std::span<const SweepCell> cells) {
  SweepAggregate agg;
  agg.n_heads = n_heads;
  std::vector<const SweepCell*> ok;
  for (const auto& c : cells)
    if (c.n_heads == n_heads && c.ok) ok.push_back(&c);
  agg.trials = ok.size();
  if (ok.empty()) return agg;

  const auto stats = [&](auto field, double& mean_out, double& std_out) {
    double s = 0.0;
    for (const auto* c : ok) s += field(*c);
    const double m = s / static_cast<double>(ok.size());
    double ss = 0.0;
    for (const auto* c : ok) ss += (field(*c) - m) * (field(*c) - m);
    mean_out = m;
    std_out = ok.size() > 1 ? std::sqrt(ss / static_cast<double>(ok.size() - 1)) : 0.0;
  };
  stats([](const SweepCell& c) { return c.final_fd; }, agg.fd_mean, agg.fd_std);
  stats([](const SweepCell& c) { return static_cast<double>(c.modes_covered); }, agg.modes_mean, agg.modes_std);
  stats([](const SweepCell& c) { return c.hq_fraction; }, agg.hq_mean, agg.hq_std);
  return agg;
}

SweepSummary sweep(const RunConfig& base, std::span<const std::size_t> n_heads, std::span<const std::uint64_t> seeds,
                   int jobs) {
  if (n_heads.empty()) throw ConfigError("sweep needs at least one N");
  if (seeds.empty()) throw ConfigError("sweep needs at least one seed");

  SweepSummary summary;
  for (auto n : n_heads)
    for (auto s : seeds) summary.cells.push_back(SweepCell{.n_heads = n, .seed = s, .ok = false, .error = {}});

  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < summary.cells.size(); i = next++) {
      SweepCell& cell = summary.cells[i];
      RunConfig cfg = base;
      cfg.n_heads = cell.n_heads;
      cfg.seed = cell.seed;
      cfg.out_dir = (fs::path(base.out_dir) / fmt::format("n{}_seed{}", cell.n_heads, cell.seed)).string();
      try {
        const RunLog log = train(cfg);
        cell.ok = true;
        cell.final_fd = log.rows.back().fd;
        cell.modes_covered = log.rows.back().modes_covered;
        cell.hq_fraction = log.rows.back().hq_fraction;
      } catch (const std::exception& e) {
        cell.ok = false;
        cell.error = e.what();
      }
    }
  };
  const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(summary.cells.size())));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  }

  for (auto n : n_heads) {
    const bool seen = std::any_of(summary.aggregates.begin(), summary.aggregates.end(),
                                  [n](const SweepAggregate& a) { return a.n_heads == n; });
    if (!seen) summary.aggregates.push_back(aggregate(n, summary.cells));
  }
  return summary;
}

void write_summary_csv(const fs::path& path, const SweepSummary& summary) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw Error("cannot open '" + path.string() + "' for writing");
  os << "kind,n_heads,seed,final_fd,modes_covered,hq_fraction,status\n";
  for (const auto& agg : summary.aggregates) {
    for (const auto& c : summary.cells) {
      if (c.n_heads != agg.n_heads) continue;
      if (c.ok) {
        os << fmt::format("trial,{},{},{},{},{},ok\n", c.n_heads, c.seed, c.final_fd, c.modes_covered, c.hq_fraction);
      } else {
        std::string msg = c.error;
        std::replace(msg.begin(), msg.end(), ',', ';');
        std::replace(msg.begin(), msg.end(), '\n', ' ');
        os << fmt::format("trial,{},{},,,,error: {}\n", c.n_heads, c.seed, msg);
      }
    }
    os << fmt::format("mean,{},,{},{},{},\n", agg.n_heads, agg.fd_mean, agg.modes_mean, agg.hq_mean);
    os << fmt::format("std,{},,{},{},{},\n", agg.n_heads, agg.fd_std, agg.modes_std, agg.hq_std);
  }
  if (!os) throw Error("write to '" + path.string() + "' failed");
}

}  // namespace crgan
