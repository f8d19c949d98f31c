// SPDX-License-Identifier: Apache-2.0
//
// Dense reverse-mode differentiation over row-major double matrices.
//
// A Tape records every operation of one forward pass. Values are computed
// eagerly; Tape::backward walks the record in reverse and accumulates adjoints
// into every node that depends on a trainable leaf. Parameters live in a
// ParameterStore that outlives tapes; gradients flowing into a parameter node
// are added to Parameter::grad when backward finishes, so several tapes can
// contribute to one optimizer step.
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "types.hpp"

namespace bg::diff {

using bg::Matrix;
using bg::SparseMatrix;
using Index = Eigen::Index;
using Rng = std::mt19937_64;

struct Parameter {
  Matrix value;
  Matrix grad;
  Matrix m;  // Adam first moment
  Matrix v;  // Adam second moment
};

class ParameterStore {
 public:
  ParameterStore() = default;
  ParameterStore(const ParameterStore& other);
  ParameterStore& operator=(const ParameterStore& other);
  ParameterStore(ParameterStore&&) noexcept = default;
  ParameterStore& operator=(ParameterStore&&) noexcept = default;

  /// Registers a parameter; names must be unique.
  Parameter& add(const std::string& name, Matrix init);
  /// Uniform(-a, a) with a = sqrt(6 / (rows + cols)).
  Parameter& add_glorot(const std::string& name, Index rows, Index cols, Rng& rng);
  Parameter& add_zeros(const std::string& name, Index rows, Index cols);

  Parameter& at(const std::string& name);
  const Parameter& at(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) != 0; }

  /// Insertion order.
  const std::vector<std::string>& names() const { return names_; }
  std::size_t size() const { return names_.size(); }
  std::size_t scalar_count() const;

  std::uint64_t step() const { return step_; }
  void set_step(std::uint64_t step) { step_ = step; }

  void zero_grad();

  /// 64-bit FNV-1a over names, shapes and value bytes.
  std::uint64_t checksum() const;

  void save(std::ostream& out) const;
  void save_file(const std::filesystem::path& path) const;
  /// Reads a checkpoint into this store. Every stored name must exist here
  /// with the same shape, and vice versa.
  void load(std::istream& in);
  void load_file(const std::filesystem::path& path);

 private:
  std::vector<std::string> names_;
  std::vector<std::unique_ptr<Parameter>> params_;
  std::unordered_map<std::string, std::size_t> index_;
  std::uint64_t step_ = 0;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

class Tape;

/// Handle to a node on a tape. Cheap to copy; valid while its tape lives.
class Var {
 public:
  Var() = default;

  bool valid() const { return tape_ != nullptr; }
  const Matrix& value() const;
  /// Adjoint after backward; empty when the node does not need a gradient.
  const Matrix& grad() const;
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  double item() const;
  Tape& tape() const { return *tape_; }
  int id() const { return id_; }

 private:
  friend class Tape;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}
  Tape* tape_ = nullptr;
  int id_ = -1;
};

class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, const Matrix& out_grad)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  /// Trainable leaf owned by the tape (not linked to a store).
  Var variable(Matrix value);
  /// Leaf bound to a stored parameter. Repeated calls return the same node.
  Var parameter(ParameterStore& store, const std::string& name);

  /// Appends a node. It needs a gradient iff some parent does; backward is
  /// only invoked for such nodes.
  Var record(Matrix value, std::initializer_list<Var> parents, BackwardFn backward);
  Var record(Matrix value, std::span<const Var> parents, BackwardFn backward);

  /// Backpropagates from a 1x1 output with adjoint 1.
  void backward(Var output);
  /// Backpropagates an explicit adjoint. Node adjoints are reset first;
  /// parameter gradients are accumulated into their store.
  void backward(Var output, const Matrix& adjoint);

  /// Adds g into the adjoint of target (no-op when target needs no grad).
  void accumulate(Var target, const Matrix& g);
  bool needs_grad(Var v) const { return nodes_[v.id_].needs_grad; }

  std::size_t size() const { return nodes_.size(); }

 private:
  friend class Var;
  struct Node {
    Matrix value;
    Matrix grad;
    bool needs_grad = false;
    BackwardFn backward;
    Parameter* param = nullptr;
  };
  void check_owner(Var v) const;

  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, int> param_nodes_;
};

// ---- operations ----------------------------------------------------------
// All arguments must come from the same tape. Shape mismatches throw
// bg::Error(ShapeMismatch).

Var matmul(Var a, Var b);
Var sparse_matmul(const SparseMatrix& s, Var x);  // constant sparse s times x
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);  // element-wise
Var scale(Var a, double s);
Var add_scalar(Var a, double s);
Var add_row(Var a, Var row);       // a (r x c) + row (1 x c) on every row
Var scale_rows(Var a, Var factor);  // a (r x c) * factor (r x 1) per row

Var relu(Var a);
Var tanh(Var a);
Var sigmoid(Var a);
Var exp(Var a);
Var log(Var a);
Var abs(Var a);

/// Max over rows for each column (1 x c); gradient goes to the first argmax.
Var col_max(Var a);
/// Max over columns for each row (r x 1); gradient goes to the first argmax.
Var row_max(Var a);

Var logsumexp(Var a);       // 1 x 1
Var logsumexp_rows(Var a);  // r x 1
Var logsumexp_cols(Var a);  // 1 x c
/// a - logsumexp_rows(a) + log_target, fused.
Var log_normalize_rows(Var a, double log_target);
/// a - logsumexp_cols(a) + log_target, fused.
Var log_normalize_cols(Var a, double log_target);

/// Row-wise a / (||a|| + 1e-12).
Var l2_normalize_rows(Var a);
/// Row-wise Euclidean norms (r x 1); zero rows get a zero subgradient.
Var row_norms(Var a);

Var sum(Var a);
Var transpose(Var a);
Var concat_rows(std::span<const Var> parts);
Var concat_cols(std::span<const Var> parts);
Var gather_rows(Var a, std::span<const int> rows);

/// out_i = element-wise max over l in neighbors[i] of h_l; zero for nodes
/// without neighbors. Ties route the gradient to the first neighbor listed.
Var neighbor_max(Var h, const std::vector<std::vector<int>>& neighbors);

// ---- optimization and checking -------------------------------------------

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One bias-corrected Adam update on every parameter, then clears gradients.
void adam_step(ParameterStore& store, double lr, const AdamConfig& cfg = {});

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst_parameter;
  Index worst_index = -1;
  std::size_t checked = 0;
};

/// Denominator floor of the relative error, so gradients that are zero up
/// to rounding are judged by absolute error.
inline constexpr double kGradCheckFloor = 1e-3;

/// Compares backward gradients of a scalar computation against central
/// differences over every entry of every parameter in the store.
/// The callable records a fresh forward pass on the given tape and must only
/// reach trainable state through tape.parameter(store, ...).
GradCheckReport finite_difference_check(const std::function<Var(Tape&)>& f,
                                        ParameterStore& store, double h = 1e-5);

}  // namespace bg::diff
