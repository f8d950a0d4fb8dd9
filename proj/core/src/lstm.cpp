#include "mat/lstm.hpp"

#include <cmath>
#include <stdexcept>

namespace mat {

const char* to_string(ModulationMode mode) {
  return mode == ModulationMode::kSigmoid ? "sigmoid" : "tanh";
}

ModulationMode modulation_mode_from_string(const std::string& s) {
  if (s == "sigmoid") return ModulationMode::kSigmoid;
  if (s == "tanh") return ModulationMode::kTanh;
  throw std::invalid_argument("unknown modulation mode: " + s);
}

LstmParams::LstmParams(const std::string& prefix, std::size_t hidden_dim,
                       std::size_t input_dim)
    : w_xi(prefix + ".w_xi", hidden_dim, input_dim),
      w_hi(prefix + ".w_hi", hidden_dim, hidden_dim),
      b_i(prefix + ".b_i", hidden_dim, 1),
      w_xf(prefix + ".w_xf", hidden_dim, input_dim),
      w_hf(prefix + ".w_hf", hidden_dim, hidden_dim),
      b_f(prefix + ".b_f", hidden_dim, 1),
      w_xo(prefix + ".w_xo", hidden_dim, input_dim),
      w_ho(prefix + ".w_ho", hidden_dim, hidden_dim),
      b_o(prefix + ".b_o", hidden_dim, 1),
      w_xg(prefix + ".w_xg", hidden_dim, input_dim),
      w_hg(prefix + ".w_hg", hidden_dim, hidden_dim),
      b_g(prefix + ".b_g", hidden_dim, 1) {}

std::vector<Parameter*> LstmParams::parameters() {
  return {&w_xi, &w_hi, &b_i, &w_xf, &w_hf, &b_f,
          &w_xo, &w_ho, &b_o, &w_xg, &w_hg, &b_g};
}

void LstmParams::init_uniform(double bound, Rng& rng) {
  for (Parameter* p : parameters()) {
    // biases stay zero
    if (p->value.cols() == 1 && p->name.find(".b_") != std::string::npos) continue;
    for (std::size_t i = 0; i < p->value.size(); ++i)
      p->value[i] = rng.uniform(-bound, bound);
  }
}

LstmState zero_state(std::size_t hidden_dim) {
  return {Vector(hidden_dim, 1), Vector(hidden_dim, 1)};
}

namespace {

// z = w_x * x + w_h * h + b
void gate_preactivation(Vector& z, const Matrix& w_x, const Vector& x,
                        const Matrix& w_h, const Vector& h, const Vector& b) {
  z = b;
  accumulate_matvec(z, w_x, x);
  accumulate_matvec(z, w_h, h);
}

}  // namespace

LstmState lstm_step(const LstmParams& params, const Vector& x, const LstmState& prev,
                    ModulationMode mode, LstmStepCache* cache) {
  const std::size_t hidden = params.hidden_dim();
  if (x.size() != params.input_dim() || x.cols() != 1)
    throw std::invalid_argument("lstm_step: input length " + std::to_string(x.size()) +
                                " does not match input dim " +
                                std::to_string(params.input_dim()));
  if (prev.h.size() != hidden || prev.c.size() != hidden)
    throw std::invalid_argument("lstm_step: state length does not match hidden dim " +
                                std::to_string(hidden));

  Vector zi, zf, zo, zg;
  gate_preactivation(zi, params.w_xi.value, x, params.w_hi.value, prev.h, params.b_i.value);
  gate_preactivation(zf, params.w_xf.value, x, params.w_hf.value, prev.h, params.b_f.value);
  gate_preactivation(zo, params.w_xo.value, x, params.w_ho.value, prev.h, params.b_o.value);
  gate_preactivation(zg, params.w_xg.value, x, params.w_hg.value, prev.h, params.b_g.value);

  Vector i(hidden, 1), f(hidden, 1), o(hidden, 1), g(hidden, 1);
  Vector c(hidden, 1), tanh_c(hidden, 1), h(hidden, 1);
  for (std::size_t k = 0; k < hidden; ++k) {
    i[k] = sigmoid_scalar(zi[k]);
    f[k] = sigmoid_scalar(zf[k]);
    o[k] = sigmoid_scalar(zo[k]);
    g[k] = mode == ModulationMode::kSigmoid ? sigmoid_scalar(zg[k]) : std::tanh(zg[k]);
    c[k] = f[k] * prev.c[k] + i[k] * g[k];
    tanh_c[k] = std::tanh(c[k]);
    h[k] = o[k] * tanh_c[k];
  }

  if (cache) {
    cache->x = x;
    cache->h_prev = prev.h;
    cache->c_prev = prev.c;
    cache->i = i;
    cache->f = f;
    cache->o = o;
    cache->g = g;
    cache->c = c;
    cache->tanh_c = tanh_c;
    cache->filled = true;
  }
  return {std::move(h), std::move(c)};
}

LstmStepGrads lstm_step_backward(LstmParams& params, const LstmStepCache& cache,
                                 ModulationMode mode, const Vector& dh, const Vector& dc) {
  if (!cache.filled)
    throw std::invalid_argument("lstm_step_backward: missing forward cache");
  const std::size_t hidden = params.hidden_dim();
  if (dh.size() != hidden || dc.size() != hidden)
    throw std::invalid_argument("lstm_step_backward: cotangent length mismatch");

  Vector dzi(hidden, 1), dzf(hidden, 1), dzo(hidden, 1), dzg(hidden, 1);
  Vector dc_prev(hidden, 1);
  for (std::size_t k = 0; k < hidden; ++k) {
    const double tc = cache.tanh_c[k];
    const double d_c = dc[k] + dh[k] * cache.o[k] * (1.0 - tc * tc);
    const double d_o = dh[k] * tc;
    const double d_i = d_c * cache.g[k];
    const double d_f = d_c * cache.c_prev[k];
    const double d_g = d_c * cache.i[k];
    dc_prev[k] = d_c * cache.f[k];

    const double i = cache.i[k], f = cache.f[k], o = cache.o[k], g = cache.g[k];
    dzi[k] = d_i * i * (1.0 - i);
    dzf[k] = d_f * f * (1.0 - f);
    dzo[k] = d_o * o * (1.0 - o);
    dzg[k] = mode == ModulationMode::kSigmoid ? d_g * g * (1.0 - g)
                                              : d_g * (1.0 - g * g);
  }

  LstmStepGrads grads;
  grads.dx = Vector(params.input_dim(), 1);
  grads.dh_prev = Vector(hidden, 1);
  grads.dc_prev = std::move(dc_prev);

  struct GateRef {
    Parameter* w_x;
    Parameter* w_h;
    Parameter* b;
    const Vector* dz;
  };
  const GateRef gates[4] = {
      {&params.w_xi, &params.w_hi, &params.b_i, &dzi},
      {&params.w_xf, &params.w_hf, &params.b_f, &dzf},
      {&params.w_xo, &params.w_ho, &params.b_o, &dzo},
      {&params.w_xg, &params.w_hg, &params.b_g, &dzg},
  };
  for (const GateRef& gate : gates) {
    accumulate_outer(gate.w_x->grad, *gate.dz, cache.x);
    accumulate_outer(gate.w_h->grad, *gate.dz, cache.h_prev);
    add_in_place(gate.b->grad, *gate.dz);
    accumulate_matvec_transpose(grads.dx, gate.w_x->value, *gate.dz);
    accumulate_matvec_transpose(grads.dh_prev, gate.w_h->value, *gate.dz);
  }
  return grads;
}

}  // namespace mat
