#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "oracles.hpp"
#include "pggact/nn.hpp"

using namespace pggact;

namespace {

// Batch with ratios pushed off 1 by sampling actions/log-probs under a
// perturbed copy of the parameters, so both clip branches occur.
nn::Batch random_batch(const nn::PolicyParams& params, Eigen::Index n, Rng& rng,
                       double behavior_shift) {
  nn::Batch batch;
  batch.states.resize(params.state_dim(), n);
  for (Eigen::Index i = 0; i < batch.states.size(); ++i) {
    batch.states.data()[i] = 2.0 * rng.uniform01() - 1.0;
  }
  nn::PolicyParams behavior = params;
  for (auto* t : behavior.tensors()) {
    for (Eigen::Index i = 0; i < t->size(); ++i) {
      t->data()[i] += behavior_shift * (2.0 * rng.uniform01() - 1.0);
    }
  }
  const nn::ForwardPass fwd = nn::forward(behavior, batch.states);
  batch.actions.resize(static_cast<std::size_t>(n));
  batch.log_probs_old.resize(n);
  batch.advantages.resize(n);
  batch.value_targets.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const int a = rng.uniform01() < fwd.probs(1, j) ? 1 : 0;
    batch.actions[static_cast<std::size_t>(j)] = a;
    batch.log_probs_old(j) = fwd.log_probs(a, j);
    batch.advantages(j) = 4.0 * rng.uniform01() - 2.0;
    batch.value_targets(j) = 4.0 * rng.uniform01() - 2.0;
  }
  return batch;
}

}  // namespace

TEST_CASE("forward of the zero network is the uniform policy with zero value") {
  Rng rng(1);
  nn::PolicyParams p = nn::PolicyParams::init(3, 8, rng);
  for (auto* t : p.tensors()) t->setZero();
  Eigen::MatrixXd states(3, 4);
  states.setRandom();
  const nn::ForwardPass f = nn::forward(p, states);
  for (Eigen::Index j = 0; j < 4; ++j) {
    CHECK(f.probs(0, j) == 0.5);
    CHECK(f.probs(1, j) == 0.5);
    CHECK(f.values(j) == 0.0);
  }
}

TEST_CASE("softmax is shift invariant and normalized") {
  Rng rng(2);
  nn::PolicyParams p = nn::PolicyParams::init(2, 4, rng);
  // equal logits regardless of input: zero actor weights, equal biases
  p.w_actor.setZero();
  p.b_actor.setConstant(3.7);
  Eigen::MatrixXd states(2, 3);
  states.setRandom();
  const nn::ForwardPass f = nn::forward(p, states);
  for (Eigen::Index j = 0; j < 3; ++j) {
    CHECK(f.probs(0, j) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(f.probs(1, j) == doctest::Approx(0.5).epsilon(1e-15));
  }

  nn::PolicyParams q = nn::PolicyParams::init(2, 4, rng);
  Eigen::MatrixXd wide(2, 64);
  wide.setRandom();
  const nn::ForwardPass g = nn::forward(q, wide);
  for (Eigen::Index j = 0; j < wide.cols(); ++j) {
    CHECK(std::abs(g.probs.col(j).sum() - 1.0) < 1e-12);
    CHECK(g.probs(0, j) > 0.0);
    CHECK(g.probs(0, j) < 1.0);
  }
}

TEST_CASE("hand-computed forward pass on a 2-2 network") {
  Rng rng(3);
  nn::PolicyParams p = nn::PolicyParams::init(2, 2, rng);
  p.w1 << 0.5, -0.25, 0.1, 0.3;
  p.b1 << 0.1, -0.2;
  p.w2 << 1.0, -1.0, 0.5, 0.25;
  p.b2 << 0.0, 0.05;
  p.w_actor << 0.2, -0.4, -0.3, 0.6;
  p.b_actor << 0.01, -0.02;
  p.w_critic << 0.7, -0.1;
  p.b_critic << 0.3;
  Eigen::MatrixXd x(2, 1);
  x << 0.8, -0.5;

  // h1 = relu([0.5*0.8 - 0.25*(-0.5) + 0.1, 0.1*0.8 + 0.3*(-0.5) - 0.2])
  //    = relu([0.625, -0.27]) = [0.625, 0]
  // h2 = relu([0.625, 0.5*0.625 + 0.05]) = [0.625, 0.3625]
  // logits = [0.2*0.625 - 0.4*0.3625 + 0.01, -0.3*0.625 + 0.6*0.3625 - 0.02]
  //        = [-0.01, 0.01], value = 0.7*0.625 - 0.1*0.3625 + 0.3 = 0.70125
  const nn::ForwardPass f = nn::forward(p, x);
  CHECK(f.h1(0, 0) == doctest::Approx(0.625).epsilon(1e-12));
  CHECK(f.h1(1, 0) == 0.0);
  CHECK(f.logits(0, 0) == doctest::Approx(-0.01).epsilon(1e-12));
  CHECK(f.logits(1, 0) == doctest::Approx(0.01).epsilon(1e-12));
  CHECK(f.values(0) == doctest::Approx(0.70125).epsilon(1e-12));
  const double e0 = std::exp(-0.02);
  CHECK(f.probs(0, 0) == doctest::Approx(e0 / (1.0 + e0)).epsilon(1e-12));
}

TEST_CASE("forward is deterministic") {
  Rng rng(4);
  const nn::PolicyParams p = nn::PolicyParams::init(3, 16, rng);
  Eigen::MatrixXd states(3, 9);
  states.setRandom();
  const nn::ForwardPass a = nn::forward(p, states);
  const nn::ForwardPass b = nn::forward(p, states);
  CHECK(a.probs == b.probs);
  CHECK(a.values == b.values);
}

TEST_CASE("dimension mismatches and bad batches are rejected") {
  Rng rng(5);
  const nn::PolicyParams p = nn::PolicyParams::init(3, 4, rng);
  Eigen::MatrixXd wrong(2, 1);
  wrong.setZero();
  CHECK_THROWS_AS(nn::forward(p, wrong), std::invalid_argument);

  nn::Batch batch = random_batch(p, 4, rng, 0.05);
  batch.advantages(2) = std::nan("");
  nn::Gradients g(p);
  CHECK_THROWS_AS(nn::backward(p, batch, 0.2, 0.5, 0.01, g),
                  std::invalid_argument);
}

TEST_CASE("analytic gradients match central finite differences") {
  Rng rng(42);
  double worst = 0.0;
  int clipped_low = 0, clipped_high = 0, pos_adv = 0, neg_adv = 0;
  for (int rep = 0; rep < 20; ++rep) {
    const int hidden = 3 + static_cast<int>(rng.uniform_int(5));
    nn::PolicyParams p = nn::PolicyParams::init(3, hidden, rng);
    const nn::Batch batch = random_batch(p, 12, rng, 0.4);
    const double eps = 0.1 + 0.2 * rng.uniform01();
    const nn::ForwardPass f = nn::forward(p, batch.states);
    for (Eigen::Index j = 0; j < batch.size(); ++j) {
      const double ratio =
          std::exp(f.log_probs(batch.actions[static_cast<std::size_t>(j)], j) -
                   batch.log_probs_old(j));
      clipped_low += ratio < 1.0 - eps;
      clipped_high += ratio > 1.0 + eps;
      pos_adv += batch.advantages(j) > 0;
      neg_adv += batch.advantages(j) < 0;
    }
    worst = std::max(worst, oracles::gradient_check(p, batch, eps, 0.5, 0.01));
  }
  CHECK(worst < 1e-4);
  // the random batches exercised both clip branches and both advantage signs
  CHECK(clipped_low > 0);
  CHECK(clipped_high > 0);
  CHECK(pos_adv > 0);
  CHECK(neg_adv > 0);
}

TEST_CASE("samples deep in the clipped region contribute no policy gradient") {
  Rng rng(7);
  nn::PolicyParams p = nn::PolicyParams::init(3, 4, rng);
  nn::Batch batch = random_batch(p, 6, rng, 0.0);
  const nn::ForwardPass f = nn::forward(p, batch.states);
  for (Eigen::Index j = 0; j < batch.size(); ++j) {
    // force ratio = e^2 with positive advantage: clip active, min is the
    // clamped constant branch
    batch.log_probs_old(j) =
        f.log_probs(batch.actions[static_cast<std::size_t>(j)], j) - 2.0;
    batch.advantages(j) = 1.0 + rng.uniform01();
  }
  nn::Gradients g(p);
  // entropy and value off: the whole gradient is the policy term
  const nn::LossStats stats = nn::backward(p, batch, 0.2, 0.0, 0.0, g);
  CHECK(stats.clip_fraction == 1.0);
  for (const auto* t : g.tensors()) {
    CHECK(t->lpNorm<Eigen::Infinity>() == 0.0);
  }
}

TEST_CASE("rho = delta = 0 reduces the gradient to the clipped surrogate") {
  Rng rng(8);
  nn::PolicyParams p = nn::PolicyParams::init(3, 5, rng);
  const nn::Batch batch = random_batch(p, 10, rng, 0.2);
  CHECK(oracles::gradient_check(p, batch, 0.2, 0.0, 0.0) < 1e-4);
}

TEST_CASE("entropy of the uniform policy is ln 2 and is the maximum") {
  Rng rng(9);
  nn::PolicyParams p = nn::PolicyParams::init(3, 4, rng);
  for (auto* t : p.tensors()) t->setZero();
  nn::Batch batch = random_batch(p, 5, rng, 0.0);
  nn::Gradients g(p);
  const nn::LossStats stats = nn::backward(p, batch, 0.2, 0.5, 0.001, g);
  CHECK(stats.entropy_term == doctest::Approx(std::log(2.0)).epsilon(1e-12));

  nn::PolicyParams q = nn::PolicyParams::init(3, 4, rng);
  const nn::Batch batch2 = random_batch(q, 50, rng, 0.1);
  const nn::LossStats stats2 = nn::backward(q, batch2, 0.2, 0.5, 0.001, g);
  CHECK(stats2.entropy_term <= std::log(2.0) + 1e-15);
}

TEST_CASE("loss combines the three terms with the configured weights") {
  Rng rng(10);
  nn::PolicyParams p = nn::PolicyParams::init(3, 6, rng);
  const nn::Batch batch = random_batch(p, 16, rng, 0.3);
  nn::Gradients g(p);
  const nn::LossStats stats = nn::backward(p, batch, 0.2, 0.5, 0.001, g);
  CHECK(stats.objective ==
        doctest::Approx(stats.clip_term - 0.5 * stats.value_term +
                        0.001 * stats.entropy_term)
            .epsilon(1e-12));
  CHECK(nn::objective(p, batch, 0.2, 0.5, 0.001) ==
        doctest::Approx(stats.objective).epsilon(1e-14));
}

TEST_CASE("trunk parameters feed both heads") {
  Rng rng(11);
  nn::PolicyParams p = nn::PolicyParams::init(3, 8, rng);
  Eigen::MatrixXd state(3, 1);
  state << 0.3, -0.9, 0.5;
  const nn::ForwardPass before = nn::forward(p, state);
  // perturb a trunk unit that is active for this state
  Eigen::Index active = 0;
  for (Eigen::Index i = 0; i < before.z1.rows(); ++i) {
    if (before.z1(i, 0) > 0.0) active = i;
  }
  REQUIRE(before.z1(active, 0) > 0.0);
  p.w1(active, 0) += 0.05;
  const nn::ForwardPass after = nn::forward(p, state);
  CHECK(before.probs(1, 0) != after.probs(1, 0));
  CHECK(before.values(0) != after.values(0));
}

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
  Rng rng(12);
  nn::PolicyParams p = nn::PolicyParams::init(3, 4, rng);
  const nn::PolicyParams before = p;
  nn::AdamState opt = nn::AdamState::init(p, 1e-3);
  nn::Gradients zero(p);
  nn::adam_step(opt, p, zero);
  for (std::size_t k = 0; k < 8; ++k) {
    CHECK(*p.tensors()[k] == *before.tensors()[k]);
  }
  CHECK(opt.step == 1);
}

TEST_CASE("adam: first step moves each weight by about alpha against the gradient") {
  Rng rng(13);
  nn::PolicyParams p = nn::PolicyParams::init(3, 4, rng);
  const nn::PolicyParams before = p;
  nn::AdamState opt = nn::AdamState::init(p, 1e-3);
  nn::Gradients g(p);
  for (auto* t : g.tensors()) {
    for (Eigen::Index i = 0; i < t->size(); ++i) {
      t->data()[i] = (i % 2 == 0) ? 0.37 : -2.1;
    }
  }
  nn::adam_step(opt, p, g);
  auto pb = before.tensors();
  auto pa = p.tensors();
  auto gt = g.tensors();
  for (std::size_t k = 0; k < 8; ++k) {
    for (Eigen::Index i = 0; i < pa[k]->size(); ++i) {
      const double delta = pa[k]->data()[i] - pb[k]->data()[i];
      const double expected = -1e-3 * (gt[k]->data()[i] > 0 ? 1.0 : -1.0);
      CHECK(delta == doctest::Approx(expected).epsilon(1e-4));
    }
  }
}

TEST_CASE("adam: constant gradient drives the step size toward alpha") {
  Rng rng(14);
  nn::PolicyParams p = nn::PolicyParams::init(2, 2, rng);
  nn::AdamState opt = nn::AdamState::init(p, 0.01);
  nn::Gradients g(p);
  for (auto* t : g.tensors()) t->setConstant(0.5);
  double prev = p.w1(0, 0);
  double delta = 0.0;
  for (int i = 0; i < 2000; ++i) {
    nn::adam_step(opt, p, g);
    delta = p.w1(0, 0) - prev;
    prev = p.w1(0, 0);
  }
  CHECK(delta == doctest::Approx(-0.01).epsilon(1e-3));
}

TEST_CASE("adam rejects non-finite gradients without touching parameters") {
  Rng rng(15);
  nn::PolicyParams p = nn::PolicyParams::init(3, 4, rng);
  const nn::PolicyParams before = p;
  nn::AdamState opt = nn::AdamState::init(p, 1e-3);
  nn::Gradients g(p);
  g.w2(1, 1) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(nn::adam_step(opt, p, g), std::runtime_error);
  for (std::size_t k = 0; k < 8; ++k) {
    CHECK(*p.tensors()[k] == *before.tensors()[k]);
  }
  CHECK(opt.step == 0);
}

TEST_CASE("step learning-rate schedule halves every 1000 iterations") {
  Rng rng(16);
  nn::PolicyParams p = nn::PolicyParams::init(2, 2, rng);
  nn::AdamState opt = nn::AdamState::init(p, 0.001);
  nn::lr_schedule(opt, 0);
  CHECK(opt.alpha == 0.001);
  nn::lr_schedule(opt, 999);
  CHECK(opt.alpha == 0.001);
  nn::lr_schedule(opt, 1000);
  CHECK(opt.alpha == 0.0005);
  nn::lr_schedule(opt, 3000);
  CHECK(opt.alpha == doctest::Approx(0.001 / 8.0).epsilon(1e-15));

  double last = opt.alpha0;
  for (long t = 0; t < 5000; t += 137) {
    nn::lr_schedule(opt, t);
    CHECK(opt.alpha <= last + 1e-18);
    last = opt.alpha;
  }
}

TEST_CASE("checkpoints round-trip bit-exactly") {
  Rng rng(17);
  const nn::PolicyParams p = nn::PolicyParams::init(3, 32, rng);
  const std::string path =
      (std::filesystem::temp_directory_path() / "pggact_ckpt_test.bin").string();
  nn::save_checkpoint(p, path);
  const nn::PolicyParams q = nn::load_checkpoint(path);
  auto a = p.tensors();
  auto b = q.tensors();
  for (std::size_t k = 0; k < 8; ++k) CHECK(*a[k] == *b[k]);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(nn::load_checkpoint(path), std::runtime_error);
}
