#pragma once

#include <string>
#include <vector>

#include "mat/matrix.hpp"
#include "mat/rng.hpp"

namespace mat {

/// Nonlinearity of the input modulation gate. kSigmoid squashes the cell
/// candidate into (0, 1); kTanh is the conventional (-1, 1) candidate.
enum class ModulationMode { kSigmoid, kTanh };

const char* to_string(ModulationMode mode);
ModulationMode modulation_mode_from_string(const std::string& s);

/// Gate weights for one LSTM. Input-side matrices are hidden x input,
/// hidden-side matrices are hidden x hidden, biases are hidden x 1.
struct LstmParams {
  Parameter w_xi, w_hi, b_i;  // input gate
  Parameter w_xf, w_hf, b_f;  // forget gate
  Parameter w_xo, w_ho, b_o;  // output gate
  Parameter w_xg, w_hg, b_g;  // input modulation gate

  LstmParams() = default;
  LstmParams(const std::string& prefix, std::size_t hidden_dim, std::size_t input_dim);

  std::size_t hidden_dim() const { return b_i.value.rows(); }
  std::size_t input_dim() const { return w_xi.value.cols(); }

  std::vector<Parameter*> parameters();
  void init_uniform(double bound, Rng& rng);
};

struct LstmState {
  Vector h;
  Vector c;
};

LstmState zero_state(std::size_t hidden_dim);

/// Forward activations of one step, kept for the backward pass.
struct LstmStepCache {
  Vector x, h_prev, c_prev;
  Vector i, f, o, g;
  Vector c, tanh_c;
  bool filled = false;
};

/// One recurrent step: gates i, f, o from sigmoid pre-activations, candidate
/// g per the modulation mode, c = f*c_prev + i*g, h = o*tanh(c).
LstmState lstm_step(const LstmParams& params, const Vector& x, const LstmState& prev,
                    ModulationMode mode, LstmStepCache* cache = nullptr);

struct LstmStepGrads {
  Vector dx;
  Vector dh_prev;
  Vector dc_prev;
};

/// Exact gradients of one step. dh and dc are the cotangents of this step's
/// outputs; parameter gradients are accumulated (+=) into params.
LstmStepGrads lstm_step_backward(LstmParams& params, const LstmStepCache& cache,
                                 ModulationMode mode, const Vector& dh, const Vector& dc);

}  // namespace mat
