#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "crgan/checkpoint.hpp"
#include "crgan/config.hpp"
#include "crgan/errors.hpp"
#include "crgan/gmm.hpp"
#include "crgan/trainer.hpp"

namespace crgan {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

class TrainerTest : public ::testing::Test {
 protected:
  void SetUp() override {
    root_ = fs::temp_directory_path() /
            ("crgan_trainer_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(root_);
  }
  void TearDown() override { fs::remove_all(root_); }

  RunConfig small(const std::string& sub) const {
    RunConfig cfg;
    cfg.g_widths = {16, 16};
    cfg.d_widths = {16, 16};
    cfg.n_heads = 4;
    cfg.batch_size = 16;
    cfg.total_g_updates = 20;
    cfg.eval_every = 10;
    cfg.eval_samples = 300;
    cfg.snapshot_samples = 50;
    cfg.out_dir = (root_ / sub).string();
    return cfg;
  }

  fs::path root_;
};

TEST_F(TrainerTest, ZeroUpdatesGivesOnlyInitialEvaluation) {
  RunConfig cfg = small("zero");
  cfg.total_g_updates = 0;
  const RunLog log = train(cfg);
  ASSERT_EQ(log.rows.size(), 1u);
  EXPECT_EQ(log.rows[0].iter, 0);
  EXPECT_TRUE(log.d_losses.empty());
  EXPECT_TRUE(log.g_losses.empty());
}

TEST_F(TrainerTest, ScheduleEvaluationsAndOutputs) {
  const RunConfig cfg = small("run");
  const RunLog log = train(cfg);
  EXPECT_EQ(log.g_losses.size(), 20u);
  EXPECT_EQ(log.d_losses.size(), 100u);
  ASSERT_EQ(log.rows.size(), 3u);
  EXPECT_EQ(log.rows[1].iter, 10);
  EXPECT_EQ(log.rows[2].iter, 20);
  for (const auto& r : log.rows) {
    EXPECT_GE(r.fd, 0.0);
    EXPECT_GE(r.hq_fraction, 0.0);
    EXPECT_LE(r.hq_fraction, 1.0);
    EXPECT_LE(r.modes_covered, 8);
  }

  const fs::path dir = cfg.out_dir;
  for (const char* f : {"log.csv", "losses.csv", "checkpoint.bin", "run_meta.txt"}) EXPECT_TRUE(fs::exists(dir / f)) << f;
  for (int it : {5, 10, 15, 20}) {
    EXPECT_TRUE(fs::exists(dir / ("snapshot_" + std::to_string(it) + ".csv"))) << it;
    EXPECT_TRUE(fs::exists(dir / ("snapshot_" + std::to_string(it) + ".svg"))) << it;
  }
  const std::string meta = slurp(dir / "run_meta.txt");
  EXPECT_NE(meta.find("status=ok"), std::string::npos);

  // every config field is echoed ahead of the metric header
  const std::string text = slurp(dir / "log.csv");
  for (const auto& [k, v] : config_entries(cfg)) EXPECT_NE(text.find("# " + k + "=" + v + "\n"), std::string::npos) << k;
  EXPECT_NE(text.find("\niter,fd,modes_covered,hq_fraction\n"), std::string::npos);

  const Checkpoint ckpt = read_checkpoint(dir / "checkpoint.bin");
  EXPECT_EQ(ckpt.g_updates, 20);
  EXPECT_NE(ckpt.find("g.0.weight"), nullptr);
  EXPECT_NE(ckpt.find("head.weight"), nullptr);
  EXPECT_NE(ckpt.find("head.sn_u.3"), nullptr);
  EXPECT_EQ(parse_config(ckpt.config_text).n_heads, 4u);
}

TEST_F(TrainerTest, RepeatedRunsAreByteIdentical) {
  const RunLog a = train(small("a"));
  const RunLog b = train(small("b"));
  EXPECT_EQ(a.d_losses, b.d_losses);
  EXPECT_EQ(a.g_losses, b.g_losses);
  const auto strip_out_dir = [](std::string s) {
    const auto p = s.find("# out_dir=");
    return s.erase(p, s.find('\n', p) - p);
  };
  EXPECT_EQ(strip_out_dir(slurp(root_ / "a" / "log.csv")), strip_out_dir(slurp(root_ / "b" / "log.csv")));
  EXPECT_EQ(slurp(root_ / "a" / "losses.csv"), slurp(root_ / "b" / "losses.csv"));
  EXPECT_EQ(slurp(root_ / "a" / "snapshot_20.csv"), slurp(root_ / "b" / "snapshot_20.csv"));
}

TEST_F(TrainerTest, DifferentSeedsDiffer) {
  RunConfig b = small("s1");
  b.seed = 1;
  EXPECT_NE(train(small("s0")).g_losses, train(b).g_losses);
}

TEST_F(TrainerTest, SingleScoreCascadeMatchesDenseScorer) {
  for (LossForm form : {LossForm::hinge, LossForm::log_paper, LossForm::log_standard}) {
    RunConfig cr = small("cr");
    cr.n_heads = 1;
    cr.loss_form = form;
    RunConfig dense = cr;
    dense.head = HeadKind::dense;
    dense.out_dir = (root_ / "dense").string();
    const RunLog a = train(cr, {.write_outputs = false});
    const RunLog b = train(dense, {.write_outputs = false});
    ASSERT_EQ(a.d_losses.size(), b.d_losses.size());
    for (std::size_t i = 0; i < a.d_losses.size(); ++i) EXPECT_NEAR(a.d_losses[i], b.d_losses[i], 1e-12);
    for (std::size_t i = 0; i < a.g_losses.size(); ++i) EXPECT_NEAR(a.g_losses[i], b.g_losses[i], 1e-12);
  }
}

TEST_F(TrainerTest, ConditionalTaskLogsClassAccuracy) {
  RunConfig cfg = small("cond");
  cfg.task = Task::gmm8_conditional;
  const RunLog log = train(cfg);
  ASSERT_TRUE(log.rows.back().class_acc.has_value());
  EXPECT_NE(slurp(root_ / "cond" / "log.csv").find("iter,fd,modes_covered,hq_fraction,class_acc\n"), std::string::npos);
  const SampleBatch snap = read_points_csv(root_ / "cond" / "snapshot_20.csv");
  EXPECT_EQ(snap.labels.size(), 50u);
}

TEST_F(TrainerTest, DivergenceAbortsAndKeepsLastCheckpoint) {
  RunConfig cfg = small("div");
  cfg.lr = 1e300;
  cfg.spectral_norm = false;
  EXPECT_THROW(train(cfg), DivergenceError);
  EXPECT_NE(slurp(root_ / "div" / "run_meta.txt").find("status=diverged"), std::string::npos);
  EXPECT_EQ(read_checkpoint(root_ / "div" / "checkpoint.bin").g_updates, 0);
}

TEST_F(TrainerTest, UnwritableOutputDirectory) {
  RunConfig cfg = small("x");
  fs::create_directories(root_);
  std::ofstream(root_ / "file") << "x";
  cfg.out_dir = (root_ / "file" / "sub").string();
  EXPECT_THROW(train(cfg), std::exception);
}

TEST(SnapshotIterations, QuarterPoints) {
  EXPECT_EQ(snapshot_iterations(4000), (std::vector<std::int64_t>{1000, 2000, 3000, 4000}));
  EXPECT_EQ(snapshot_iterations(2), (std::vector<std::int64_t>{1, 2}));
  EXPECT_EQ(snapshot_iterations(0), (std::vector<std::int64_t>{0}));
}

TEST_F(TrainerTest, SnapshotEdgeCases) {
  fs::create_directories(root_);
  RunConfig cfg = small("snap");
  Rng init(1);
  Generator gen(cfg, init);
  Rng rng(2);
  const SampleBatch empty = snapshot(gen, 0, rng, root_ / "empty.csv");
  EXPECT_EQ(empty.points.rows(), 0u);
  EXPECT_EQ(slurp(root_ / "empty.csv"), "x,y\n");

  auto& last = gen.net().layers().back();
  last.weight().value = Tensor(last.weight().value.rows(), last.weight().value.cols());
  last.bias().value = Tensor::column({0.25, -0.75});
  const SampleBatch flat = snapshot(gen, 10, rng, root_ / "flat.csv");
  for (std::size_t i = 0; i < 10; ++i) {
    EXPECT_EQ(flat.points(i, 0), 0.25);
    EXPECT_EQ(flat.points(i, 1), -0.75);
  }

  Generator fresh(cfg, init);
  const SampleBatch pts = snapshot(fresh, 40, rng, root_ / "pts.csv");
  EXPECT_EQ(read_points_csv(root_ / "pts.csv").points, pts.points);
}

TEST_F(TrainerTest, SweepSingleCellEqualsRunFinalRow) {
  const RunConfig base = small("sweep1");
  const std::size_t ns[] = {1};
  const std::uint64_t seeds[] = {0};
  const SweepSummary s = sweep(base, ns, seeds);
  ASSERT_EQ(s.cells.size(), 1u);
  ASSERT_TRUE(s.cells[0].ok) << s.cells[0].error;

  RunConfig single = base;
  single.n_heads = 1;
  const RunLog log = train(single, {.write_outputs = false});
  EXPECT_EQ(s.cells[0].final_fd, log.rows.back().fd);
  EXPECT_EQ(s.cells[0].modes_covered, log.rows.back().modes_covered);
  ASSERT_EQ(s.aggregates.size(), 1u);
  EXPECT_EQ(s.aggregates[0].fd_mean, log.rows.back().fd);
  EXPECT_EQ(s.aggregates[0].fd_std, 0.0);
  EXPECT_TRUE(fs::exists(root_ / "sweep1" / "n1_seed0" / "log.csv"));
}

TEST_F(TrainerTest, SweepAggregatesAndRecordsFailures) {
  RunConfig base = small("sweep");
  base.total_g_updates = 4;
  base.eval_every = 2;
  const std::size_t ns[] = {1, 2};
  const std::uint64_t seeds[] = {0, 1, 2};
  const SweepSummary s = sweep(base, ns, seeds, 2);
  ASSERT_EQ(s.cells.size(), 6u);
  for (std::size_t n : ns) {
    std::vector<double> fds;
    for (const auto& c : s.cells)
      if (c.n_heads == n) fds.push_back(c.final_fd);
    const double mean = (fds[0] + fds[1] + fds[2]) / 3.0;
    const double sd = std::sqrt(((fds[0] - mean) * (fds[0] - mean) + (fds[1] - mean) * (fds[1] - mean) +
                                 (fds[2] - mean) * (fds[2] - mean)) /
                                2.0);
    const auto& agg = s.aggregates[n == 1 ? 0 : 1];
    EXPECT_EQ(agg.trials, 3u);
    EXPECT_NEAR(agg.fd_mean, mean, 1e-12);
    EXPECT_NEAR(agg.fd_std, sd, 1e-12);
  }
  write_summary_csv(root_ / "summary.csv", s);
  std::ifstream in(root_ / "summary.csv");
  std::string line;
  int trials = 0, means = 0, stds = 0;
  while (std::getline(in, line)) {
    trials += line.starts_with("trial,");
    means += line.starts_with("mean,");
    stds += line.starts_with("std,");
  }
  EXPECT_EQ(trials, 6);
  EXPECT_EQ(means, 2);
  EXPECT_EQ(stds, 2);

  RunConfig bad = base;
  bad.lr = 1e300;
  bad.spectral_norm = false;
  const SweepSummary f = sweep(bad, ns, std::span<const std::uint64_t>(seeds, 1));
  for (const auto& c : f.cells) {
    EXPECT_FALSE(c.ok);
    EXPECT_FALSE(c.error.empty());
  }
  EXPECT_EQ(f.aggregates[0].trials, 0u);
}

}  // namespace
}  // namespace crgan
