#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "mat/attention.hpp"
#include "mat/grad_check.hpp"
#include "mat/rng.hpp"

using namespace mat;

namespace {

void randomize(AttentionParams& params, Rng& rng, double range = 0.5) {
  for (Parameter* p : params.parameters())
    for (std::size_t i = 0; i < p->value.size(); ++i)
      p->value[i] = rng.uniform(-range, range);
}

Vector random_vec(std::size_t n, Rng& rng, double range = 1.0) {
  Vector v(n, 1);
  for (std::size_t i = 0; i < n; ++i) v[i] = rng.uniform(-range, range);
  return v;
}

}  // namespace

TEST_SUITE("attention") {

TEST_CASE("single encoder state takes all the weight") {
  Rng rng(1);
  AttentionParams params("attn", 4, 6);
  randomize(params, rng);
  std::vector<Vector> states{random_vec(4, rng)};
  AttentionTrace trace = attend(params, states, random_vec(4, rng));
  CHECK(trace.weights.size() == 1);
  CHECK(trace.weights[0] == doctest::Approx(1.0).epsilon(1e-15));
  for (std::size_t k = 0; k < 4; ++k)
    CHECK(trace.context[k] == doctest::Approx(states[0][k]).epsilon(1e-15));
}

TEST_CASE("identical encoder states give uniform weights") {
  Rng rng(2);
  AttentionParams params("attn", 3, 5);
  randomize(params, rng);
  Vector h = random_vec(3, rng);
  std::vector<Vector> states{h, h, h, h};
  AttentionTrace trace = attend(params, states, random_vec(3, rng));
  for (std::size_t i = 0; i < 4; ++i)
    CHECK(trace.weights[i] == doctest::Approx(0.25).epsilon(1e-13));
  for (std::size_t k = 0; k < 3; ++k)
    CHECK(trace.context[k] == doctest::Approx(h[k]).epsilon(1e-13));
}

TEST_CASE("scores match scalar arithmetic") {
  // T_A = 2, hidden = 2, hand-chosen parameters
  AttentionParams params("attn", 2, 3);
  params.score_vec.value = Matrix::from_rows({{0.3}, {-0.8}});
  params.score_proj_enc.value = Matrix::from_rows({{0.5, -0.2}, {0.1, 0.7}});
  params.score_proj_dec.value = Matrix::from_rows({{-0.4, 0.6}, {0.2, -0.3}});
  std::vector<Vector> states{Matrix::from_rows({{0.9}, {-0.5}}),
                             Matrix::from_rows({{-0.1}, {0.4}})};
  Vector d_prev = Matrix::from_rows({{0.2}, {0.6}});

  auto scalar_score = [&](const Vector& h) {
    double u0 = std::tanh(0.5 * h[0] + -0.2 * h[1] + -0.4 * 0.2 + 0.6 * 0.6);
    double u1 = std::tanh(0.1 * h[0] + 0.7 * h[1] + 0.2 * 0.2 + -0.3 * 0.6);
    return 0.3 * u0 + -0.8 * u1;
  };
  const double s0 = scalar_score(states[0]);
  const double s1 = scalar_score(states[1]);
  const double e0 = std::exp(s0 - std::max(s0, s1));
  const double e1 = std::exp(s1 - std::max(s0, s1));

  AttentionTrace trace = attend(params, states, d_prev);
  CHECK(std::abs(trace.scores[0] - s0) < 1e-12);
  CHECK(std::abs(trace.scores[1] - s1) < 1e-12);
  CHECK(std::abs(trace.weights[0] - e0 / (e0 + e1)) < 1e-12);
  CHECK(std::abs(trace.weights[1] - e1 / (e0 + e1)) < 1e-12);
}

TEST_CASE("weights form a probability distribution") {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t hidden = 1 + rng.index(6);
    const std::size_t n = 1 + rng.index(7);
    AttentionParams params("attn", hidden, 4);
    randomize(params, rng, 1.5);
    std::vector<Vector> states;
    for (std::size_t i = 0; i < n; ++i) states.push_back(random_vec(hidden, rng, 2.0));
    AttentionTrace trace = attend(params, states, random_vec(hidden, rng, 2.0));
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(trace.weights[i] > 0.0);
      CHECK(trace.weights[i] < 1.0 + 1e-15);
      sum += trace.weights[i];
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("weights follow their states under permutation") {
  Rng rng(4);
  AttentionParams params("attn", 5, 4);
  randomize(params, rng);
  std::vector<Vector> states;
  for (int i = 0; i < 6; ++i) states.push_back(random_vec(5, rng));
  Vector d_prev = random_vec(5, rng);
  AttentionTrace base = attend(params, states, d_prev);

  std::vector<std::size_t> perm{3, 0, 5, 1, 4, 2};
  std::vector<Vector> permuted;
  for (std::size_t i : perm) permuted.push_back(states[i]);
  AttentionTrace moved = attend(params, permuted, d_prev);
  for (std::size_t i = 0; i < perm.size(); ++i)
    CHECK(std::abs(moved.weights[i] - base.weights[perm[i]]) < 1e-12);
}

TEST_CASE("context stays in the componentwise convex hull") {
  Rng rng(5);
  AttentionParams params("attn", 4, 4);
  randomize(params, rng);
  std::vector<Vector> states;
  for (int i = 0; i < 5; ++i) states.push_back(random_vec(4, rng, 3.0));
  AttentionTrace trace = attend(params, states, random_vec(4, rng));
  for (std::size_t k = 0; k < 4; ++k) {
    double lo = states[0][k], hi = states[0][k];
    for (const Vector& h : states) {
      lo = std::min(lo, h[k]);
      hi = std::max(hi, h[k]);
    }
    CHECK(trace.context[k] >= lo - 1e-12);
    CHECK(trace.context[k] <= hi + 1e-12);
  }
}

TEST_CASE("empty encoder sequence is rejected") {
  AttentionParams params("attn", 3, 4);
  std::vector<Vector> states;
  CHECK_THROWS_AS(attend(params, states, Vector(3, 1)), std::invalid_argument);
}

TEST_CASE("zero output projection gives a uniform distribution") {
  Rng rng(6);
  AttentionParams params("attn", 3, 7);
  randomize(params, rng);
  params.vocab_proj.value.fill(0.0);
  params.vocab_bias.value.fill(0.0);
  std::vector<Vector> states{random_vec(3, rng), random_vec(3, rng)};
  AttentionTrace trace = attend(params, states, random_vec(3, rng));
  Vector p = output_distribution(params, random_vec(3, rng), trace);
  for (std::size_t i = 0; i < 7; ++i)
    CHECK(p[i] == doctest::Approx(1.0 / 7.0).epsilon(1e-13));
}

TEST_CASE("output distribution sums to one") {
  Rng rng(7);
  AttentionParams params("attn", 4, 9);
  randomize(params, rng, 2.0);
  std::vector<Vector> states{random_vec(4, rng), random_vec(4, rng), random_vec(4, rng)};
  AttentionTrace trace = attend(params, states, random_vec(4, rng));
  Vector p = output_distribution(params, random_vec(4, rng), trace);
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) sum += p[i];
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("output distribution matches scalar arithmetic on a tiny config") {
  // hidden = 2, vocab = 3
  Rng rng(8);
  AttentionParams params("attn", 2, 3);
  randomize(params, rng);
  std::vector<Vector> states{random_vec(2, rng)};
  Vector d_prev = random_vec(2, rng);
  Vector d_t = random_vec(2, rng);
  AttentionTrace trace = attend(params, states, d_prev);
  Vector p = output_distribution(params, d_t, trace);

  // scalar recomputation: merged = [d_t; context]
  const double merged[4] = {d_t[0], d_t[1], trace.context[0], trace.context[1]};
  double hid[2];
  for (int r = 0; r < 2; ++r) {
    hid[r] = params.combine_bias.value[r];
    for (int c = 0; c < 4; ++c) hid[r] += params.combine.value(r, c) * merged[c];
  }
  double logits[3];
  double maxv = -1e300;
  for (int r = 0; r < 3; ++r) {
    logits[r] = params.vocab_bias.value[r];
    for (int c = 0; c < 2; ++c) logits[r] += params.vocab_proj.value(r, c) * hid[c];
    maxv = std::max(maxv, logits[r]);
  }
  double z = 0.0;
  for (double& l : logits) {
    l = std::exp(l - maxv);
    z += l;
  }
  for (int r = 0; r < 3; ++r) CHECK(std::abs(p[r] - logits[r] / z) < 1e-12);
}

TEST_CASE("zero cotangent propagates zero gradients") {
  Rng rng(9);
  AttentionParams params("attn", 3, 5);
  randomize(params, rng);
  std::vector<Vector> states{random_vec(3, rng), random_vec(3, rng)};
  Vector d_prev = random_vec(3, rng);
  AttentionTrace trace = attend(params, states, d_prev);
  OutputCache cache;
  output_distribution(params, random_vec(3, rng), trace, nullptr, &cache);

  OutputGrads og = output_distribution_backward(params, cache, Vector(5, 1));
  AttendGrads ag = attend_backward(params, states, d_prev, trace, og.d_context);
  for (Parameter* p : params.parameters())
    for (std::size_t i = 0; i < p->grad.size(); ++i) CHECK(p->grad[i] == 0.0);
  for (const Vector& g : ag.d_enc_states)
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(g[i] == 0.0);
}

TEST_CASE("backward requires a forward cache") {
  AttentionParams params("attn", 2, 3);
  OutputCache cache;
  CHECK_THROWS_AS(output_distribution_backward(params, cache, Vector(3, 1)),
                  std::invalid_argument);
}

TEST_CASE("attend and output gradients match finite differences") {
  Rng rng(10);
  const std::size_t hidden = 4, vocab = 5, n = 3;
  AttentionParams params("attn", hidden, vocab);
  randomize(params, rng);

  std::vector<Parameter> state_params;
  for (std::size_t i = 0; i < n; ++i) {
    Parameter p("h" + std::to_string(i), hidden, 1);
    p.value = random_vec(hidden, rng);
    state_params.push_back(std::move(p));
  }
  Parameter pd_prev("d_prev", hidden, 1);
  Parameter pd_t("d_t", hidden, 1);
  pd_prev.value = random_vec(hidden, rng);
  pd_t.value = random_vec(hidden, rng);
  const std::size_t target = 2;

  auto loss_fn = [&](bool with_grad) {
    std::vector<Vector> states;
    for (const Parameter& p : state_params) states.push_back(p.value);
    AttentionTrace trace = attend(params, states, pd_prev.value);
    OutputCache cache;
    Vector p = output_distribution(params, pd_t.value, trace, nullptr, &cache);
    const double loss = -std::log(p[target]);
    if (with_grad) {
      Vector d_logits = p;
      d_logits[target] -= 1.0;
      OutputGrads og = output_distribution_backward(params, cache, d_logits);
      AttendGrads ag = attend_backward(params, states, pd_prev.value, trace, og.d_context);
      add_in_place(pd_t.grad, og.d_dec_state);
      add_in_place(pd_prev.grad, ag.d_prev);
      for (std::size_t i = 0; i < n; ++i)
        add_in_place(state_params[i].grad, ag.d_enc_states[i]);
    }
    return loss;
  };

  std::vector<Parameter*> all = params.parameters();
  for (Parameter& p : state_params) all.push_back(&p);
  all.push_back(&pd_prev);
  all.push_back(&pd_t);
  CHECK(grad_check(loss_fn, all) < 1e-4);

  // gradient reaches every encoder state
  for (Parameter* p : all) p->reset_grad();
  loss_fn(true);
  for (const Parameter& p : state_params) {
    double norm = 0.0;
    for (std::size_t i = 0; i < p.grad.size(); ++i) norm += std::abs(p.grad[i]);
    CHECK(norm > 0.0);
  }
}

}  // TEST_SUITE
