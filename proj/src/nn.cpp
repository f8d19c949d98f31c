// SPDX-License-Identifier: Apache-2.0
#include "nn.hpp"

#include "error.hpp"

namespace bg::nn {

using diff::Var;

namespace {

std::string layer_name(const MlpSpec& spec, std::size_t layer, const char* what) {
  return spec.prefix + "/" + std::to_string(layer) + "/" + what;
}

Var activate(Var x, Activation act) {
  switch (act) {
    case Activation::Relu:
      return diff::relu(x);
    case Activation::Tanh:
      return diff::tanh(x);
    case Activation::Identity:
      break;
  }
  return x;
}

}  // namespace

void init_mlp(diff::ParameterStore& store, const MlpSpec& spec, diff::Rng& rng) {
  if (spec.dims.size() < 2) fail(ErrorCode::InvalidArgument, "MLP needs at least one layer");
  for (std::size_t l = 0; l + 1 < spec.dims.size(); ++l) {
    store.add_glorot(layer_name(spec, l, "W"), spec.dims[l], spec.dims[l + 1], rng);
    store.add_zeros(layer_name(spec, l, "b"), 1, spec.dims[l + 1]);
  }
}

Var mlp_forward(diff::Tape& tape, Var x, diff::ParameterStore& store, const MlpSpec& spec) {
  if (x.cols() != spec.input_dim()) {
    fail(ErrorCode::ShapeMismatch, spec.prefix + ": input has " + std::to_string(x.cols()) +
                                       " columns, expected " +
                                       std::to_string(spec.input_dim()));
  }
  const std::size_t layers = spec.dims.size() - 1;
  for (std::size_t l = 0; l < layers; ++l) {
    Var w = tape.parameter(store, layer_name(spec, l, "W"));
    Var b = tape.parameter(store, layer_name(spec, l, "b"));
    x = diff::add_row(diff::matmul(x, w), b);
    if (l + 1 < layers) x = activate(x, spec.activation);
  }
  return x;
}

void init_gru(diff::ParameterStore& store, const GruSpec& spec, diff::Rng& rng) {
  for (const char* gate : {"z", "r", "h"}) {
    const std::string g(gate);
    store.add_glorot(spec.prefix + "/W_" + g, spec.input_dim, spec.hidden_dim, rng);
    store.add_glorot(spec.prefix + "/U_" + g, spec.hidden_dim, spec.hidden_dim, rng);
    store.add_zeros(spec.prefix + "/b_" + g, 1, spec.hidden_dim);
  }
}

Var gru_cell(diff::Tape& tape, Var h_prev, Var x, diff::ParameterStore& store,
             const GruSpec& spec) {
  if (h_prev.cols() != spec.hidden_dim || x.cols() != spec.input_dim ||
      h_prev.rows() != x.rows()) {
    fail(ErrorCode::ShapeMismatch, spec.prefix + ": GRU input/state dimension mismatch");
  }
  auto p = [&](const char* name) { return tape.parameter(store, spec.prefix + "/" + name); };
  auto gate = [&](Var state, const char* w, const char* u, const char* b) {
    return diff::add_row(diff::add(diff::matmul(x, p(w)), diff::matmul(state, p(u))), p(b));
  };
  Var z = diff::sigmoid(gate(h_prev, "W_z", "U_z", "b_z"));
  Var r = diff::sigmoid(gate(h_prev, "W_r", "U_r", "b_r"));
  Var candidate = diff::tanh(gate(diff::mul(r, h_prev), "W_h", "U_h", "b_h"));
  Var keep = diff::add_scalar(diff::scale(z, -1.0), 1.0);
  return diff::add(diff::mul(keep, h_prev), diff::mul(z, candidate));
}

}  // namespace bg::nn
