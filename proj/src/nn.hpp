// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "diff.hpp"

namespace bg::nn {

enum class Activation { Identity, Relu, Tanh };

/// Affine layers dims[0] -> dims[1] -> ... with the activation between
/// layers; the final layer is affine only. Parameters are named
/// "<prefix>/<layer>/W" (in x out) and "<prefix>/<layer>/b" (1 x out).
struct MlpSpec {
  std::string prefix;
  std::vector<int> dims;
  Activation activation = Activation::Relu;

  int input_dim() const { return dims.front(); }
  int output_dim() const { return dims.back(); }
};

void init_mlp(diff::ParameterStore& store, const MlpSpec& spec, diff::Rng& rng);

/// Applies the MLP to every row of x.
diff::Var mlp_forward(diff::Tape& tape, diff::Var x, diff::ParameterStore& store,
                      const MlpSpec& spec);

/// Gated recurrent unit with the reset gate applied before the candidate's
/// recurrent product:
///   z  = sigmoid(x W_z + h U_z + b_z)
///   r  = sigmoid(x W_r + h U_r + b_r)
///   h~ = tanh(x W_h + (r * h) U_h + b_h)
///   h' = (1 - z) * h + z * h~
/// Rows are independent samples.
struct GruSpec {
  std::string prefix;
  int input_dim = 0;
  int hidden_dim = 0;
};

void init_gru(diff::ParameterStore& store, const GruSpec& spec, diff::Rng& rng);

diff::Var gru_cell(diff::Tape& tape, diff::Var h_prev, diff::Var x,
                   diff::ParameterStore& store, const GruSpec& spec);

}  // namespace bg::nn
