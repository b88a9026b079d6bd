#include "crgan/selftest.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "crgan/autodiff.hpp"
#include "crgan/cr_head.hpp"
#include "crgan/errors.hpp"
#include "crgan/gmm.hpp"
#include "crgan/gradcheck.hpp"
#include "crgan/linalg.hpp"
#include "crgan/losses.hpp"
#include "crgan/metrics.hpp"
#include "crgan/nn.hpp"
#include "crgan/optimizer.hpp"
#include "crgan/rng.hpp"

namespace crgan {
namespace {

Tensor random_tensor(std::size_t r, std::size_t c, double lo, double hi, Rng& rng) {
  Tensor t(r, c);
  for (double& x : t.data()) x = rng.uniform(lo, hi);
  return t;
}

CheckResult make(std::string name, bool ok, std::string detail) { return {std::move(name), ok, std::move(detail)}; }

CheckResult check_op_gradients() {
  Rng rng(101);
  double worst = 0.0;
  std::string worst_op;
  const auto run = [&](const std::string& name, std::size_t r, std::size_t c, auto&& f) {
    Parameter a("a", random_tensor(r, c, -2, 2, rng));
    Parameter b("b", random_tensor(r, c, 0.5, 2, rng));
    Parameter w("w", random_tensor(r, c, -2, 2, rng));
    const auto res = gradient_check(
        [&](Graph& g) { return sum(mul(f(g.param(a), g.param(b)), g.constant(w.value))); }, {&a, &b});
    if (res.max_rel_error > worst) {
      worst = res.max_rel_error;
      worst_op = name;
    }
  };
  run("add", 3, 4, [](Var a, Var b) { return add(a, b); });
  run("sub", 3, 4, [](Var a, Var b) { return sub(a, b); });
  run("mul", 3, 4, [](Var a, Var b) { return mul(a, b); });
  run("div", 3, 4, [](Var a, Var b) { return div(a, b); });
  run("scale", 3, 4, [](Var a, Var) { return scale(a, -1.7); });
  run("tanh", 3, 4, [](Var a, Var) { return tanh(a); });
  run("sigmoid", 3, 4, [](Var a, Var) { return sigmoid(a); });
  run("log_sigmoid", 3, 4, [](Var a, Var) { return log_sigmoid(a); });
  run("relu", 3, 4, [](Var a, Var) { return relu(add_scalar(a, 0.0)); });
  run("leaky_relu", 3, 4, [](Var a, Var) { return leaky_relu(a, 0.1); });
  run("max0", 3, 4, [](Var a, Var) { return max0(a); });
  run("matmul", 4, 4, [](Var a, Var b) { return matmul(a, transpose(b)); });
  run("row_sum", 3, 4, [](Var a, Var b) { return mul_col(b, row_sum(a)); });
  run("mean", 3, 4, [](Var a, Var b) { return mul_col(b, broadcast_rows(mean(a), 3)); });
  return make("autodiff: per-op gradients vs central differences", worst < 1e-4,
              fmt::format("max rel err {:.3g} ({})", worst, worst_op));
}

CheckResult check_linearity_and_determinism() {
  Rng rng(7);
  Parameter w1("w1", random_tensor(5, 3, -1, 1, rng));
  Parameter w2("w2", random_tensor(1, 5, -1, 1, rng));
  const Tensor x = random_tensor(4, 3, -2, 2, rng);
  const auto grads = [&](double a, double b) {
    zero_grads({&w1, &w2});
    Graph g;
    Var h = tanh(matmul(g.constant(x), transpose(g.param(w1))));
    Var s = matmul(h, transpose(g.param(w2)));
    Var l1 = mean(sigmoid(s));
    Var l2 = sum(mul(h, h));
    g.accumulate_param_grads(g.backward(add(scale(l1, a), scale(l2, b))));
    return std::pair{w1.grad, w2.grad};
  };
  const auto [a1, a2] = grads(1.0, 0.0);
  const auto [b1, b2] = grads(0.0, 1.0);
  const auto [c1, c2] = grads(2.5, -0.75);
  double lin = 0.0;
  for (std::size_t i = 0; i < c1.size(); ++i) lin = std::max(lin, std::abs(c1[i] - (2.5 * a1[i] - 0.75 * b1[i])));
  for (std::size_t i = 0; i < c2.size(); ++i) lin = std::max(lin, std::abs(c2[i] - (2.5 * a2[i] - 0.75 * b2[i])));
  const auto [d1, d2] = grads(2.5, -0.75);
  const bool bitwise = d1 == c1 && d2 == c2;
  return make("autodiff: linearity and determinism", lin <= 1e-10 && bitwise,
              fmt::format("linearity err {:.3g}, bitwise repeat {}", lin, bitwise));
}

CheckResult check_mlp_gradients() {
  Rng rng(11);
  const std::vector<LayerSpec> specs{{16, Activation::tanh()}, {1, Activation::none()}};
  Mlp net("net", 3, specs, false, rng);
  const Tensor x = random_tensor(5, 3, -2, 2, rng);
  const auto res = gradient_check(
      [&](Graph& g) { return mean(log_sigmoid(net.forward(g, g.constant(x), true))); }, net.parameters());
  return make("autodiff: two-layer network vs central differences", res.max_rel_error < 1e-4,
              fmt::format("max rel err {:.3g} over {} entries", res.max_rel_error, res.checked));
}

double largest_singular_value(const Tensor& w) {
  const SymmetricEigen eig = symmetric_eigen(matmul_tn(w, w));
  return std::sqrt(std::max(0.0, eig.values.back()));
}

CheckResult check_spectral_norm() {
  Rng rng(23);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const auto out = static_cast<std::size_t>(2 + rng.next_u64() % 63);
    const auto in = static_cast<std::size_t>(2 + rng.next_u64() % 63);
    DenseLayer layer("sn", in, out, true, rng);
    for (double& v : layer.weight().value.data()) v = rng.normal();
    layer.warm_up(50);
    worst = std::max(worst, std::abs(largest_singular_value(layer.effective_weight()) - 1.0));
  }
  // diag(3, 1) normalizes to diag(1, 1/3)
  Rng r2(5);
  DenseLayer diag("diag", 2, 2, true, r2, false);
  diag.weight().value = Tensor::from_rows({{3, 0}, {0, 1}});
  diag.warm_up(50);
  const double diag_err = max_abs_diff(diag.effective_weight(), Tensor::from_rows({{1, 0}, {0, 1.0 / 3.0}}));
  return make("nn: spectral normalization vs eigen-solve", worst <= 1e-2 && diag_err < 1e-9,
              fmt::format("max |sigma-1| {:.3g}, diag err {:.3g}", worst, diag_err));
}

CheckResult check_rejection_gradient() {
  Rng rng(31);
  double worst = 0.0, worst_orth = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto d = static_cast<std::size_t>(2 + rng.next_u64() % 63);
    const Tensor w1 = random_tensor(1, d, -1, 1, rng);
    const Tensor w2 = random_tensor(1, d, -1, 1, rng);
    Tensor w(2, d);
    std::copy(w1.data().begin(), w1.data().end(), w.row_span(0).begin());
    std::copy(w2.data().begin(), w2.data().end(), w.row_span(1).begin());
    CRHead head(w);
    Graph g;
    Var v1 = g.input(random_tensor(1, d, -1, 1, rng));
    Var scores = head.forward(g, v1, false);
    Var f = log_sigmoid(slice_rows(transpose(scores), 1, 2));  // f(s2) = log sigma(s2)
    const Tensor grad = g.backward(sum(f)).of(v1);
    const double s2 = transpose(scores.value())[1];
    const double fprime = 1.0 / (1.0 + std::exp(s2));
    const double ratio = dot(w1.data(), w2.data()) / dot(w1.data(), w1.data());
    for (std::size_t k = 0; k < d; ++k) {
      const double expected = fprime * (w2[k] - ratio * w1[k]);
      worst = std::max(worst, std::abs(grad[k] - expected));
    }
    worst_orth = std::max(worst_orth, std::abs(dot(grad.data(), w1.data())));
  }
  return make("cr-head: gradient of f(s2) is the rejection of w2 from w1", worst < 1e-9 && worst_orth < 1e-9,
              fmt::format("max abs err {:.3g}, max |<grad, w1>| {:.3g}", worst, worst_orth));
}

CheckResult check_reductions() {
  Rng rng(41);
  const std::size_t c_l = 16, batch = 7;
  const Tensor v = random_tensor(batch, c_l, -3, 3, rng);

  // N = 1 cascade against a plain bias-free score layer with identical weights.
  Rng a(9), b(9);
  CRHead head(1, c_l, true, a);
  DenseLayer dense("head", c_l, 1, true, b, false);
  Graph g1, g2;
  const Tensor s_head = head.forward(g1, g1.constant(v), true).value();
  const Tensor s_dense = dense.forward(g2, g2.constant(v), true).value();
  const bool n1 = s_head == s_dense;

  // Zero class embeddings collapse the conditional head onto the plain one.
  const Tensor w = random_tensor(4, c_l, -1, 1, rng);
  CRHead plain(w);
  CCRHead cond(w, std::vector<Tensor>(4, Tensor(3, c_l)));
  const std::vector<int> labels{0, 1, 2, 0, 1, 2, 0};
  const bool zero_emb = plain.forward(v) == cond.forward(v, labels);
  return make("cr-head: N=1 and zero-embedding reductions are bitwise", n1 && zero_emb,
              fmt::format("N=1 bitwise {}, cCR bitwise {}", n1, zero_emb));
}

CheckResult check_param_overhead() {
  bool ok = true;
  for (std::size_t c_l : {2u, 128u}) {
    Rng rng(1);
    const std::size_t base = CRHead(1, c_l, false, rng).param_count();
    for (std::size_t n : {1u, 2u, 4u, 8u, 16u}) {
      const std::size_t count = CRHead(n, c_l, false, rng).param_count();
      ok = ok && count - base == (n - 1) * c_l && param_overhead(n, c_l) == (n - 1) * c_l;
    }
  }
  return make("cr-head: parameter overhead is (N-1)*C_L", ok, ok ? "exact" : "mismatch");
}

CheckResult check_losses() {
  Rng rng(53);
  const Tensor sx = random_tensor(6, 4, -3, 3, rng);
  const Tensor sz = random_tensor(6, 4, -3, 3, rng);
  double perm_err = 0.0, n1_err = 0.0;
  bool signs = true;
  for (LossForm form : {LossForm::hinge, LossForm::log_paper, LossForm::log_standard}) {
    // reversing the score columns
    Tensor px(6, 4), pz(6, 4);
    for (std::size_t r = 0; r < 6; ++r)
      for (std::size_t c = 0; c < 4; ++c) {
        px(r, c) = sx(r, 3 - c);
        pz(r, c) = sz(r, 3 - c);
      }
    perm_err = std::max(perm_err, std::abs(d_loss(form, sx, sz) - d_loss(form, px, pz)));
    perm_err = std::max(perm_err, std::abs(g_loss(form, sz) - g_loss(form, pz)));

    Graph g;
    Var vx = g.input(sx), vz = g.input(sz);
    const Gradients gr = g.backward(d_loss(form, vx, vz));
    const Tensor gx = gr.of(vx), gz = gr.of(vz);
    for (double x : gx.data()) signs = signs && x <= 0.0;
    for (double z : gz.data()) signs = signs && z >= 0.0;

    // Single-score batch against the textbook formulas.
    const Tensor x1 = random_tensor(6, 1, -3, 3, rng), z1 = random_tensor(6, 1, -3, 3, rng);
    double ref_d = 0.0, ref_g = 0.0;
    const auto logsig = [](double s) { return -std::log1p(std::exp(-s)); };
    for (std::size_t i = 0; i < 6; ++i) {
      switch (form) {
        case LossForm::hinge:
          ref_d += std::max(0.0, 1.0 - x1[i]) + std::max(0.0, 1.0 + z1[i]);
          ref_g += -z1[i];
          break;
        case LossForm::log_paper:
          ref_d += -logsig(x1[i]) - (1.0 - logsig(z1[i]));
          ref_g += 1.0 - logsig(z1[i]);
          break;
        case LossForm::log_standard:
          ref_d += -logsig(x1[i]) - std::log(1.0 - 1.0 / (1.0 + std::exp(-z1[i])));
          ref_g += -logsig(z1[i]);
          break;
      }
    }
    n1_err = std::max(n1_err, std::abs(d_loss(form, x1, z1) - ref_d / 6.0));
    n1_err = std::max(n1_err, std::abs(g_loss(form, z1) - ref_g / 6.0));
  }
  return make("losses: permutation symmetry, N=1 specialization, gradient signs",
              perm_err <= 1e-12 && n1_err <= 1e-12 && signs,
              fmt::format("perm err {:.3g}, N=1 err {:.3g}, signs {}", perm_err, n1_err, signs));
}

CheckResult check_frechet() {
  const auto moments = [](Tensor mu, Tensor cov) { return GaussianMoments{std::move(mu), std::move(cov)}; };
  const auto zero = Tensor(2, 1);
  const auto eye = Tensor::identity(2);
  Tensor four = eye;
  scale_inplace(four, 4.0);
  double closed = 0.0;
  closed = std::max(closed, std::abs(frechet_distance(moments(zero, eye), moments(zero, eye))));
  closed = std::max(closed, std::abs(frechet_distance(moments(zero, eye), moments(Tensor::column({1, 0}), eye)) - 1.0));
  closed = std::max(closed, std::abs(frechet_distance(moments(zero, four), moments(zero, eye)) - 2.0));

  // 2x2 trace of sqrt(C_p C_q): sqrt(l1) + sqrt(l2) = sqrt(tr + 2 sqrt(det)).
  Rng rng(61);
  double oracle = 0.0, sym = 0.0, self = 0.0;
  const auto random_psd = [&] {
    const Tensor a = random_tensor(2, 2, -1.5, 1.5, rng);
    return matmul_tn(a, a);
  };
  for (int t = 0; t < 200; ++t) {
    const Tensor cp = random_psd(), cq = random_psd();
    const Tensor mp = random_tensor(2, 1, -1, 1, rng), mq = random_tensor(2, 1, -1, 1, rng);
    const Tensor prod = matmul(cp, cq);
    const double det = prod(0, 0) * prod(1, 1) - prod(0, 1) * prod(1, 0);
    const double tr_sqrt = std::sqrt(trace(prod) + 2.0 * std::sqrt(std::max(det, 0.0)));
    double dm = 0.0;
    for (int i = 0; i < 2; ++i) dm += (mp[i] - mq[i]) * (mp[i] - mq[i]);
    const double expected = std::max(0.0, dm + trace(cp) + trace(cq) - 2.0 * tr_sqrt);
    const double fd = frechet_distance(moments(mp, cp), moments(mq, cq));
    oracle = std::max(oracle, std::abs(fd - expected));
    sym = std::max(sym, std::abs(fd - frechet_distance(moments(mq, cq), moments(mp, cp))));
    self = std::max(self, frechet_distance(moments(mp, cp), moments(mp, cp)));
  }

  // Translation: shifting both sample sets leaves the distance unchanged.
  Rng srng(3);
  Tensor xs = random_tensor(200, 2, -1, 1, srng), ys = random_tensor(200, 2, -2, 3, srng);
  const double before = frechet_distance(fit_moments(xs), fit_moments(ys));
  for (std::size_t i = 0; i < 200; ++i) {
    xs(i, 0) += 3.25, ys(i, 0) += 3.25;
    xs(i, 1) -= 1.5, ys(i, 1) -= 1.5;
  }
  const double shift = std::abs(before - frechet_distance(fit_moments(xs), fit_moments(ys)));
  const bool ok = closed <= 1e-9 && oracle <= 1e-8 && sym <= 1e-9 && self <= 1e-10 && shift <= 1e-9;
  return make("metrics: Frechet distance closed forms and oracle", ok,
              fmt::format("closed {:.3g}, oracle {:.3g}, symmetry {:.3g}, self {:.3g}, shift {:.3g}", closed, oracle,
                          sym, self, shift));
}

CheckResult check_mode_report() {
  Rng rng(71);
  const GMMSpec spec = ring8();
  const SampleBatch batch = sample(spec, 8000, rng);
  const ModeReport r = mode_report(batch.points, spec);
  Tensor reversed(batch.points.rows(), 2);
  for (std::size_t i = 0; i < batch.points.rows(); ++i) {
    reversed(i, 0) = batch.points(batch.points.rows() - 1 - i, 0);
    reversed(i, 1) = batch.points(batch.points.rows() - 1 - i, 1);
  }
  const ModeReport p = mode_report(reversed, spec);
  const bool ok = r.modes_covered == 8 && r.high_quality_fraction > 0.98 && p.per_mode_counts == r.per_mode_counts &&
                  p.high_quality_fraction == r.high_quality_fraction;
  return make("metrics: mode report on true samples", ok,
              fmt::format("covered {}, hq {:.4f}", r.modes_covered, r.high_quality_fraction));
}

CheckResult check_optimizer() {
  Parameter theta("theta", Tensor::scalar(1.0));
  theta.grad = Tensor::scalar(1.0);
  AdamState state({&theta}, AdamConfig{});
  state.step({&theta});
  const double expected = 1.0 - 2e-4 / (1.0 + 1e-8);
  int d = 0, g = 0;
  for (int s = 0; s < 600; ++s) (alt_schedule(s) == Role::discriminator ? d : g)++;
  const bool ok = std::abs(theta.value.item() - expected) < 1e-15 && d == 500 && g == 100;
  return make("optimizer: Adam step and 5:1 schedule", ok,
              fmt::format("theta {:.12f}, D {} / G {}", theta.value.item(), d, g));
}

}  // namespace

bool SelftestReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

CheckResult check_rejection_chain(const RejectFn& reject_fn, int cascades, std::size_t max_stages,
                                  std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t dims[] = {2, 8, 64};
  double worst_orth = 0.0;
  bool monotone = true;
  for (int t = 0; t < cascades; ++t) {
    const std::size_t d = dims[static_cast<std::size_t>(t) % 3];
    const auto stages = static_cast<std::size_t>(1 + rng.next_u64() % max_stages);
    Tensor v = random_tensor(d, 1, -10, 10, rng);
    for (std::size_t i = 0; i < stages; ++i) {
      const Tensor w = random_tensor(d, 1, -10, 10, rng);
      const Tensor next = reject_fn(v, w);
      const double scale = norm(w.data()) * norm(v.data());
      if (scale > 0.0) worst_orth = std::max(worst_orth, std::abs(dot(w.data(), next.data())) / scale);
      if (norm(next.data()) > norm(v.data()) * (1.0 + 1e-12)) monotone = false;
      v = next;
    }
  }
  return make("cr-head: rejection chain orthogonality and monotone norm", worst_orth < 1e-9 && monotone,
              fmt::format("max |w.v'|/(|w||v|) {:.3g}, monotone {}", worst_orth, monotone));
}

SelftestReport selftest() {
  const auto start = std::chrono::steady_clock::now();
  SelftestReport report;
  const auto guarded = [&](const char* name, auto&& fn) {
    try {
      report.checks.push_back(fn());
    } catch (const std::exception& e) {
      report.checks.push_back(make(name, false, std::string("threw: ") + e.what()));
    }
  };
  guarded("autodiff ops", check_op_gradients);
  guarded("autodiff linearity", check_linearity_and_determinism);
  guarded("autodiff mlp", check_mlp_gradients);
  guarded("spectral norm", check_spectral_norm);
  guarded("rejection chain",
          [] { return check_rejection_chain([](const Tensor& v, const Tensor& w) { return reject(v, w); }, 300, 16, 83); });
  guarded("rejection gradient", check_rejection_gradient);
  guarded("reductions", check_reductions);
  guarded("param overhead", check_param_overhead);
  guarded("losses", check_losses);
  guarded("frechet", check_frechet);
  guarded("mode report", check_mode_report);
  guarded("optimizer", check_optimizer);
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace crgan
