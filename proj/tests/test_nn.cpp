#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "nn/checkpoint.hpp"
#include "nn/mlp.hpp"
#include "nn/optimizer.hpp"
#include "util/errors.hpp"
#include "util/rng.hpp"

using namespace pidmrl;
using nn::Act;
using nn::Mat;

namespace {

// Scalar objective sum(dy .* output); its parameter gradient is exactly what
// backward() accumulates when fed dy.
double objective(const nn::Mlp<double>& net, const Mat<double>& x,
                 const Mat<double>& dy) {
  nn::Cache<double> c;
  const auto& y = net.forward(x, c);
  double acc = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) acc += y.v[i] * dy.v[i];
  return acc;
}

nn::Mlp<double> random_net(util::Rng& rng, int in, std::vector<int> hidden,
                           int out, Act out_act = Act::Identity) {
  return nn::Mlp<double>::he_init(nn::mlp_spec(in, hidden, out, out_act), rng);
}

Mat<double> random_mat(int r, int c, util::Rng& rng, double scale = 1.0) {
  Mat<double> m(r, c);
  for (auto& v : m.v) v = rng.normal(0.0, scale);
  return m;
}

// Central finite differences on every parameter and every input entry.
void check_gradients(nn::Mlp<double>& net, const Mat<double>& x,
                     double rel_tol = 1e-4) {
  util::Rng rng(99);
  Mat<double> dy = random_mat(x.rows, net.output_dim(), rng);
  nn::Cache<double> cache;
  net.forward(x, cache);
  nn::Grads<double> grads = net.make_grads();
  Mat<double> dx;
  net.backward(cache, dy, grads, &dx);

  const double h = 1e-4;
  auto params = net.param_blobs();
  auto gblobs = grads.blobs();
  for (std::size_t bi = 0; bi < params.size(); ++bi) {
    for (std::size_t k = 0; k < params[bi].size(); ++k) {
      const double save = params[bi][k];
      params[bi][k] = save + h;
      const double fp = objective(net, x, dy);
      params[bi][k] = save - h;
      const double fm = objective(net, x, dy);
      params[bi][k] = save;
      const double fd = (fp - fm) / (2.0 * h);
      const double an = gblobs[bi][k];
      const double tol = rel_tol * std::max({std::abs(fd), std::abs(an), 1e-3});
      if (std::abs(fd - an) > tol) {
        CAPTURE(bi);
        CAPTURE(k);
        REQUIRE(std::abs(fd - an) <= tol);
      }
    }
  }
  // Input gradient against the same oracle.
  Mat<double> xx = x;
  for (std::size_t k = 0; k < xx.size(); ++k) {
    const double save = xx.v[k];
    xx.v[k] = save + h;
    const double fp = objective(net, xx, dy);
    xx.v[k] = save - h;
    const double fm = objective(net, xx, dy);
    xx.v[k] = save;
    const double fd = (fp - fm) / (2.0 * h);
    const double tol = rel_tol * std::max({std::abs(fd), std::abs(dx.v[k]),
                                           1e-3});
    REQUIRE(std::abs(fd - dx.v[k]) <= tol);
  }
}

}  // namespace

TEST_CASE("identity layer passes input through") {
  nn::Mlp<double> net(nn::mlp_spec(2, {}, 2));
  net.layers()[0].w.at(0, 0) = 1.0;
  net.layers()[0].w.at(1, 1) = 1.0;
  Mat<double> x(1, 2);
  x.at(0, 0) = 1.0;
  x.at(0, 1) = 2.0;
  nn::Cache<double> c;
  const auto& y = net.forward(x, c);
  CHECK(y.at(0, 0) == 1.0);
  CHECK(y.at(0, 1) == 2.0);
}

TEST_CASE("elu fixed points and closed form") {
  nn::Mlp<double> net(nn::mlp_spec(1, {}, 1, Act::Elu));
  net.layers()[0].w.at(0, 0) = 1.0;
  nn::Cache<double> c;
  Mat<double> x(1, 1);
  for (const auto [in, expect] : {std::pair{0.0, 0.0},
                                  std::pair{1.0, 1.0},
                                  std::pair{-1.0, std::exp(-1.0) - 1.0}}) {
    x.at(0, 0) = in;
    CHECK(net.forward(x, c).at(0, 0) == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("zero output gradient produces zero parameter gradients") {
  util::Rng rng(5);
  auto net = random_net(rng, 3, {4, 4}, 2, Act::Elu);
  Mat<double> x = random_mat(3, 3, rng);
  nn::Cache<double> c;
  net.forward(x, c);
  auto grads = net.make_grads();
  Mat<double> dy(3, 2);
  net.backward(c, dy, grads);
  for (auto g : grads.blobs())
    for (const double v : g) CHECK(v == 0.0);
}

TEST_CASE("linear layer weight gradient is the outer product") {
  nn::Mlp<double> net(nn::mlp_spec(3, {}, 2));
  util::Rng rng(17);
  for (auto& v : net.layers()[0].w.v) v = rng.normal();
  Mat<double> x(1, 3);
  x.at(0, 0) = 0.5;
  x.at(0, 1) = -1.5;
  x.at(0, 2) = 2.0;
  nn::Cache<double> c;
  net.forward(x, c);
  auto grads = net.make_grads();
  Mat<double> dy(1, 2);
  dy.at(0, 0) = 1.0;  // loss = y_1
  net.backward(c, dy, grads);
  for (int k = 0; k < 3; ++k) {
    CHECK(grads.w[0].at(0, k) == x.at(0, k));
    CHECK(grads.w[0].at(1, k) == 0.0);
  }
  CHECK(grads.b[0][0] == 1.0);
  CHECK(grads.b[0][1] == 0.0);
}

TEST_CASE("analytic gradients match central finite differences") {
  // Smaller sweep than the acceptance suite but same oracle.
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    util::Rng rng(seed);
    const int in = 1 + static_cast<int>(rng.uniform_int(5));
    const int out = 1 + static_cast<int>(rng.uniform_int(4));
    std::vector<int> hidden;
    const int n_hidden = static_cast<int>(rng.uniform_int(3));
    for (int i = 0; i < n_hidden; ++i)
      hidden.push_back(2 + static_cast<int>(rng.uniform_int(5)));
    const Act out_act =
        seed % 3 == 0 ? Act::SigSpan : (seed % 3 == 1 ? Act::Elu
                                                      : Act::Identity);
    auto net = random_net(rng, in, hidden, out, out_act);
    Mat<double> x = random_mat(2, in, rng);
    check_gradients(net, x);
  }
}

TEST_CASE("gradient clipping scales and preserves direction") {
  std::vector<float> g1 = {3.0f, 4.0f};  // norm 5
  std::vector<std::span<float>> blobs = {g1};
  const double norm = nn::clip_grad_norm(blobs, 2.5);
  CHECK(norm == doctest::Approx(5.0));
  CHECK(g1[0] == doctest::Approx(1.5).epsilon(1e-6));
  CHECK(g1[1] == doctest::Approx(2.0).epsilon(1e-6));

  std::vector<float> g2 = {0.3f, 0.4f};  // norm 0.5 <= 1
  std::vector<std::span<float>> blobs2 = {g2};
  nn::clip_grad_norm(blobs2, 1.0);
  CHECK(g2[0] == 0.3f);
  CHECK(g2[1] == 0.4f);

  std::vector<float> g3 = {0.0f, 0.0f};
  std::vector<std::span<float>> blobs3 = {g3};
  nn::clip_grad_norm(blobs3, 1.0);
  CHECK(g3[0] == 0.0f);
  CHECK(g3[1] == 0.0f);
}

TEST_CASE("clipping property over random gradients") {
  util::Rng rng(23);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<float> g(16);
    for (auto& v : g) v = static_cast<float>(rng.normal(0.0, 3.0));
    const double gmax = 0.5 + rng.uniform() * 4.0;
    std::vector<float> orig = g;
    std::vector<std::span<float>> blobs = {g};
    const double pre = nn::clip_grad_norm(blobs, gmax);
    const double post = nn::global_grad_norm(blobs);
    CHECK(post <= gmax + 1e-9);
    if (pre <= gmax)
      for (std::size_t i = 0; i < g.size(); ++i) CHECK(g[i] == orig[i]);
  }
}

TEST_CASE("adam first step with bias correction") {
  std::vector<float> p = {0.0f}, g = {1.0f};
  std::vector<std::span<float>> ps = {p};
  nn::AdamOpt<float> opt({nn::OptKind::Adam, 0.1}, ps);
  std::vector<std::span<const float>> gs = {g};
  opt.step(ps, gs);
  CHECK(p[0] == doctest::Approx(-0.1).epsilon(1e-6));
  CHECK(opt.step_count() == 1);
}

TEST_CASE("adamw with zero gradients applies pure decoupled decay") {
  std::vector<float> p = {2.0f}, g = {0.0f};
  std::vector<std::span<float>> ps = {p};
  nn::AdamOpt<float> opt({nn::OptKind::AdamW, 0.1, 0.9, 0.999, 1e-8, 0.05},
                         ps);
  std::vector<std::span<const float>> gs = {g};
  opt.step(ps, gs);
  CHECK(p[0] == doctest::Approx(2.0 * (1.0 - 0.1 * 0.05)).epsilon(1e-6));
}

TEST_CASE("adam with zero gradients and no decay leaves parameters alone") {
  std::vector<float> p = {1.5f, -0.5f}, g = {0.0f, 0.0f};
  std::vector<std::span<float>> ps = {p};
  nn::AdamOpt<float> opt({nn::OptKind::AdamW, 0.1}, ps);
  std::vector<std::span<const float>> gs = {g};
  opt.step(ps, gs);
  CHECK(p[0] == 1.5f);
  CHECK(p[1] == -0.5f);
}

TEST_CASE("non-finite gradients raise a divergence error") {
  std::vector<float> p = {0.0f}, g = {std::nanf("")};
  std::vector<std::span<float>> ps = {p};
  nn::AdamOpt<float> opt({nn::OptKind::Adam, 0.1}, ps);
  std::vector<std::span<const float>> gs = {g};
  CHECK_THROWS_AS(opt.step(ps, gs), util::TrainingDivergence);
}

TEST_CASE("l1 loss values and gradient") {
  Mat<double> pred(1, 2), target(1, 2);
  CHECK(nn::l1_loss(pred, target) == 0.0);
  pred.at(0, 0) = 1.0;
  pred.at(0, 1) = -1.0;
  CHECK(nn::l1_loss(pred, target) == doctest::Approx(1.0));

  // Gradient vs finite differences away from kinks.
  util::Rng rng(31);
  Mat<double> p = random_mat(3, 4, rng), t = random_mat(3, 4, rng), grad;
  const double base = nn::l1_loss(p, t, &grad);
  (void)base;
  const double h = 1e-6;
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (std::abs(p.v[k] - t.v[k]) < 1e-3) continue;
    Mat<double> pp = p;
    pp.v[k] += h;
    const double fp = nn::l1_loss(pp, t);
    pp.v[k] -= 2 * h;
    const double fm = nn::l1_loss(pp, t);
    CHECK(grad.v[k] == doctest::Approx((fp - fm) / (2 * h)).epsilon(1e-4));
  }

  Mat<double> empty;
  CHECK_THROWS_AS(nn::l1_loss(empty, empty), util::ConfigError);
}

TEST_CASE("checkpoint round-trip is bit-exact and validates architecture") {
  util::Rng rng(41);
  auto net = nn::MlpF::he_init(nn::mlp_spec(4, {8, 8}, 2, Act::SigSpan), rng);
  const std::string path = "test_nn_ckpt.bin";
  nn::CheckpointWriter w;
  w.add_net("net", net);
  w.meta = {{"kind", "test"}};
  w.write(path);

  const auto ck = nn::Checkpoint::load(path);
  CHECK(ck.manifest().at("format_version") == 1);
  CHECK(ck.manifest().at("nets")[0].at("layers").size() == 3);
  auto loaded = ck.make_net("net");
  const auto a = net.param_blobs();
  const auto b = loaded.param_blobs();
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t k = 0; k < a[i].size(); ++k)
      REQUIRE(a[i][k] == b[i][k]);

  auto wrong = nn::MlpF::he_init(nn::mlp_spec(4, {9, 8}, 2, Act::SigSpan),
                                 rng);
  CHECK_THROWS_AS(ck.load_net("net", wrong), util::CheckpointError);
  std::filesystem::remove(path);
}

TEST_CASE("param_delta per layer") {
  nn::Mlp<float> a(nn::mlp_spec(1, {}, 1));
  nn::Mlp<float> b = a;
  CHECK(nn::param_delta(a, b) == std::vector<double>{0.0});
  b.layers()[0].w.at(0, 0) += 0.2f;
  const auto d = nn::param_delta(a, b);
  CHECK(d[0] == doctest::Approx(0.1).epsilon(1e-6));  // mean of |0.2|, |0.0|
}

TEST_CASE("initialization and forward are deterministic per seed") {
  auto build = [] {
    util::Rng rng(123);
    return nn::MlpF::he_init(nn::mlp_spec(3, {16}, 2), rng);
  };
  auto n1 = build();
  auto n2 = build();
  const auto a = n1.param_blobs(), b = n2.param_blobs();
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t k = 0; k < a[i].size(); ++k)
      REQUIRE(a[i][k] == b[i][k]);
  Mat<float> x(2, 3);
  x.v = {0.1f, 0.2f, 0.3f, -0.1f, -0.2f, -0.3f};
  nn::Cache<float> c1, c2;
  const auto& y1 = n1.forward(x, c1);
  const auto& y2 = n2.forward(x, c2);
  for (std::size_t i = 0; i < y1.size(); ++i) REQUIRE(y1.v[i] == y2.v[i]);
}

TEST_CASE("forward rejects dimension mismatch, backward rejects stale cache") {
  util::Rng rng(1);
  auto net = random_net(rng, 3, {4}, 2);
  Mat<double> bad(1, 4);
  nn::Cache<double> c;
  CHECK_THROWS_AS(net.forward(bad, c), util::ConfigError);

  Mat<double> x = random_mat(2, 3, rng);
  net.forward(x, c);
  auto grads = net.make_grads();
  Mat<double> dy_bad(3, 2);
  CHECK_THROWS_AS(net.backward(c, dy_bad, grads), util::ConfigError);
}
