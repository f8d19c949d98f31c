// SPDX-License-Identifier: Apache-2.0
#include "diff.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <memory>
#include <ostream>

#include "error.hpp"

namespace bg::diff {

// ---- ParameterStore -------------------------------------------------------

ParameterStore::ParameterStore(const ParameterStore& other)
    : names_(other.names_), index_(other.index_), step_(other.step_) {
  params_.reserve(other.params_.size());
  for (const auto& p : other.params_) params_.push_back(std::make_unique<Parameter>(*p));
}

ParameterStore& ParameterStore::operator=(const ParameterStore& other) {
  if (this != &other) {
    ParameterStore copy(other);
    *this = std::move(copy);
  }
  return *this;
}

Parameter& ParameterStore::add(const std::string& name, Matrix init) {
  if (contains(name)) fail(ErrorCode::InvalidArgument, "duplicate parameter '" + name + "'");
  auto p = std::make_unique<Parameter>();
  p->grad = Matrix::Zero(init.rows(), init.cols());
  p->m = Matrix::Zero(init.rows(), init.cols());
  p->v = Matrix::Zero(init.rows(), init.cols());
  p->value = std::move(init);
  index_.emplace(name, params_.size());
  names_.push_back(name);
  params_.push_back(std::move(p));
  return *params_.back();
}

Parameter& ParameterStore::add_glorot(const std::string& name, Index rows, Index cols,
                                      Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-a, a);
  Matrix init(rows, cols);
  for (Index i = 0; i < init.size(); ++i) init.data()[i] = dist(rng);
  return add(name, std::move(init));
}

Parameter& ParameterStore::add_zeros(const std::string& name, Index rows, Index cols) {
  return add(name, Matrix::Zero(rows, cols));
}

Parameter& ParameterStore::at(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) fail(ErrorCode::NotFound, "no parameter named '" + name + "'");
  return *params_[it->second];
}

const Parameter& ParameterStore::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) fail(ErrorCode::NotFound, "no parameter named '" + name + "'");
  return *params_[it->second];
}

std::size_t ParameterStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += static_cast<std::size_t>(p->value.size());
  return n;
}

void ParameterStore::zero_grad() {
  for (auto& p : params_) p->grad.setZero();
}

namespace {

constexpr char kMagic[8] = {'B', 'G', 'C', 'K', 'P', 'T', '\0', '\0'};

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

template <typename T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) fail(ErrorCode::Parse, "checkpoint truncated");
  return value;
}

void put_matrix(std::ostream& out, const Matrix& m) {
  out.write(reinterpret_cast<const char*>(m.data()),
            static_cast<std::streamsize>(m.size() * sizeof(double)));
}

void get_matrix(std::istream& in, Matrix& m) {
  in.read(reinterpret_cast<char*>(m.data()),
          static_cast<std::streamsize>(m.size() * sizeof(double)));
  if (!in) fail(ErrorCode::Parse, "checkpoint truncated");
}

void fnv(std::uint64_t& h, const void* data, std::size_t n) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= bytes[i];
    h *= 1099511628211ULL;
  }
}

}  // namespace

std::uint64_t ParameterStore::checksum() const {
  std::uint64_t h = 14695981039346656037ULL;
  for (std::size_t i = 0; i < names_.size(); ++i) {
    fnv(h, names_[i].data(), names_[i].size());
    const Matrix& v = params_[i]->value;
    const Index shape[2] = {v.rows(), v.cols()};
    fnv(h, shape, sizeof(shape));
    fnv(h, v.data(), static_cast<std::size_t>(v.size()) * sizeof(double));
  }
  return h;
}

void ParameterStore::save(std::ostream& out) const {
  out.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint64_t>(out, step_);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(names_.size()));
  for (std::size_t i = 0; i < names_.size(); ++i) {
    const Parameter& p = *params_[i];
    put<std::uint32_t>(out, static_cast<std::uint32_t>(names_[i].size()));
    out.write(names_[i].data(), static_cast<std::streamsize>(names_[i].size()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(p.value.rows()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(p.value.cols()));
    put_matrix(out, p.value);
    put_matrix(out, p.m);
    put_matrix(out, p.v);
  }
  if (!out) fail(ErrorCode::Io, "checkpoint write failed");
}

void ParameterStore::save_file(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot write checkpoint " + path.string());
  save(out);
}

void ParameterStore::load(std::istream& in) {
  char magic[sizeof(kMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    fail(ErrorCode::Parse, "not a checkpoint (bad magic)");
  }
  const auto version = get<std::uint32_t>(in);
  if (version != kCheckpointVersion) {
    fail(ErrorCode::Parse, "unsupported checkpoint version " + std::to_string(version));
  }
  const auto step = get<std::uint64_t>(in);
  const auto count = get<std::uint32_t>(in);
  if (count != names_.size()) {
    fail(ErrorCode::ShapeMismatch, "checkpoint holds " + std::to_string(count) +
                                       " parameters, model expects " +
                                       std::to_string(names_.size()));
  }
  // Stage into a copy so a failed load leaves this store untouched.
  ParameterStore staged(*this);
  for (std::uint32_t k = 0; k < count; ++k) {
    const auto len = get<std::uint32_t>(in);
    if (len > 4096) fail(ErrorCode::Parse, "implausible parameter name length");
    std::string name(len, '\0');
    in.read(name.data(), len);
    if (!in) fail(ErrorCode::Parse, "checkpoint truncated");
    const auto rows = get<std::uint32_t>(in);
    const auto cols = get<std::uint32_t>(in);
    if (!staged.contains(name)) {
      fail(ErrorCode::ShapeMismatch, "checkpoint parameter '" + name + "' unknown to model");
    }
    Parameter& p = staged.at(name);
    if (p.value.rows() != rows || p.value.cols() != cols) {
      fail(ErrorCode::ShapeMismatch,
           "parameter '" + name + "' has shape " + std::to_string(rows) + "x" +
               std::to_string(cols) + " in checkpoint, model expects " +
               std::to_string(p.value.rows()) + "x" + std::to_string(p.value.cols()));
    }
    get_matrix(in, p.value);
    get_matrix(in, p.m);
    get_matrix(in, p.v);
    p.grad.setZero();
  }
  staged.step_ = step;
  *this = std::move(staged);
}

void ParameterStore::load_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::NotFound, "cannot open checkpoint " + path.string());
  load(in);
}

// ---- Var / Tape -----------------------------------------------------------

const Matrix& Var::value() const { return tape_->nodes_[id_].value; }
const Matrix& Var::grad() const { return tape_->nodes_[id_].grad; }

double Var::item() const {
  const Matrix& v = value();
  if (v.size() != 1) fail(ErrorCode::ShapeMismatch, "item() on a non-scalar");
  return v(0, 0);
}

void Tape::check_owner(Var v) const {
  if (v.tape_ != this || v.id_ < 0 || static_cast<std::size_t>(v.id_) >= nodes_.size()) {
    fail(ErrorCode::InvalidArgument, "variable belongs to a different tape");
  }
}

Var Tape::constant(Matrix value) {
  nodes_.push_back({std::move(value), {}, false, {}, nullptr});
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::variable(Matrix value) {
  nodes_.push_back({std::move(value), {}, true, {}, nullptr});
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::parameter(ParameterStore& store, const std::string& name) {
  Parameter& p = store.at(name);
  if (auto it = param_nodes_.find(&p); it != param_nodes_.end()) return Var(this, it->second);
  nodes_.push_back({p.value, {}, true, {}, &p});
  const int id = static_cast<int>(nodes_.size()) - 1;
  param_nodes_.emplace(&p, id);
  return Var(this, id);
}

Var Tape::record(Matrix value, std::initializer_list<Var> parents, BackwardFn backward) {
  return record(std::move(value), std::span<const Var>(parents.begin(), parents.size()),
                std::move(backward));
}

Var Tape::record(Matrix value, std::span<const Var> parents, BackwardFn backward) {
  bool needs = false;
  for (const Var& p : parents) {
    check_owner(p);
    needs = needs || nodes_[p.id_].needs_grad;
  }
  nodes_.push_back({std::move(value), {}, needs, needs ? std::move(backward) : BackwardFn{},
                    nullptr});
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

void Tape::accumulate(Var target, const Matrix& g) {
  Node& n = nodes_[target.id_];
  if (!n.needs_grad) return;
  if (n.grad.size() == 0) {
    n.grad = g;
  } else {
    n.grad += g;
  }
}

void Tape::backward(Var output) {
  check_owner(output);
  if (output.value().size() != 1) {
    fail(ErrorCode::ShapeMismatch, "backward without adjoint needs a 1x1 output");
  }
  backward(output, Matrix::Ones(1, 1));
}

void Tape::backward(Var output, const Matrix& adjoint) {
  check_owner(output);
  const Matrix& out = nodes_[output.id_].value;
  if (adjoint.rows() != out.rows() || adjoint.cols() != out.cols()) {
    fail(ErrorCode::ShapeMismatch, "adjoint shape differs from output shape");
  }
  for (auto& n : nodes_) n.grad.resize(0, 0);
  accumulate(output, adjoint);
  for (int id = output.id_; id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.needs_grad || n.grad.size() == 0) continue;
    if (n.backward) {
      n.backward(*this, n.grad);
    } else if (n.param != nullptr) {
      n.param->grad += n.grad;
    }
  }
}

// ---- operations -----------------------------------------------------------

namespace {

[[noreturn]] void shape_error(const char* op, const Matrix& a, const Matrix& b) {
  fail(ErrorCode::ShapeMismatch,
       std::string(op) + ": incompatible shapes " + std::to_string(a.rows()) + "x" +
           std::to_string(a.cols()) + " and " + std::to_string(b.rows()) + "x" +
           std::to_string(b.cols()));
}

void same_shape(const char* op, Var a, Var b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) shape_error(op, a.value(), b.value());
}

Tape& tape_of(Var a, Var b) {
  if (&a.tape() != &b.tape()) fail(ErrorCode::InvalidArgument, "variables on different tapes");
  return a.tape();
}

template <typename Fn>
Var unary(Var a, Matrix value, Fn&& grad_fn) {
  return a.tape().record(std::move(value), {a},
                         [a, fn = std::forward<Fn>(grad_fn)](Tape& t, const Matrix& g) {
                           t.accumulate(a, fn(g));
                         });
}

Matrix row_lse(const Matrix& a) {
  Matrix out(a.rows(), 1);
  for (Index i = 0; i < a.rows(); ++i) {
    const double m = a.row(i).maxCoeff();
    if (!std::isfinite(m)) {
      out(i, 0) = m;
      continue;
    }
    out(i, 0) = m + std::log((a.row(i).array() - m).exp().sum());
  }
  return out;
}

Matrix col_lse(const Matrix& a) {
  Matrix out(1, a.cols());
  for (Index j = 0; j < a.cols(); ++j) {
    const double m = a.col(j).maxCoeff();
    if (!std::isfinite(m)) {
      out(0, j) = m;
      continue;
    }
    out(0, j) = m + std::log((a.col(j).array() - m).exp().sum());
  }
  return out;
}

}  // namespace

Var matmul(Var a, Var b) {
  Tape& t = tape_of(a, b);
  if (a.cols() != b.rows()) shape_error("matmul", a.value(), b.value());
  Matrix value = a.value() * b.value();
  return t.record(std::move(value), {a, b}, [a, b](Tape& t, const Matrix& g) {
    if (t.needs_grad(a)) t.accumulate(a, g * b.value().transpose());
    if (t.needs_grad(b)) t.accumulate(b, a.value().transpose() * g);
  });
}

Var sparse_matmul(const SparseMatrix& s, Var x) {
  if (s.cols() != x.rows()) {
    fail(ErrorCode::ShapeMismatch, "sparse_matmul: " + std::to_string(s.rows()) + "x" +
                                       std::to_string(s.cols()) + " times " +
                                       std::to_string(x.rows()) + "x" + std::to_string(x.cols()));
  }
  Matrix value = s * x.value();
  auto op = std::make_shared<const SparseMatrix>(s);
  return x.tape().record(std::move(value), {x}, [x, op](Tape& t, const Matrix& g) {
    t.accumulate(x, Matrix(op->transpose() * g));
  });
}

Var add(Var a, Var b) {
  Tape& t = tape_of(a, b);
  same_shape("add", a, b);
  return t.record(a.value() + b.value(), {a, b}, [a, b](Tape& t, const Matrix& g) {
    t.accumulate(a, g);
    t.accumulate(b, g);
  });
}

Var sub(Var a, Var b) {
  Tape& t = tape_of(a, b);
  same_shape("sub", a, b);
  return t.record(a.value() - b.value(), {a, b}, [a, b](Tape& t, const Matrix& g) {
    t.accumulate(a, g);
    if (t.needs_grad(b)) t.accumulate(b, -g);
  });
}

Var mul(Var a, Var b) {
  Tape& t = tape_of(a, b);
  same_shape("mul", a, b);
  Matrix value = a.value().cwiseProduct(b.value());
  return t.record(std::move(value), {a, b}, [a, b](Tape& t, const Matrix& g) {
    if (t.needs_grad(a)) t.accumulate(a, g.cwiseProduct(b.value()));
    if (t.needs_grad(b)) t.accumulate(b, g.cwiseProduct(a.value()));
  });
}

Var scale(Var a, double s) {
  return unary(a, a.value() * s, [s](const Matrix& g) -> Matrix { return g * s; });
}

Var add_scalar(Var a, double s) {
  return unary(a, (a.value().array() + s).matrix(), [](const Matrix& g) -> Matrix { return g; });
}

Var add_row(Var a, Var row) {
  Tape& t = tape_of(a, row);
  if (row.rows() != 1 || row.cols() != a.cols()) shape_error("add_row", a.value(), row.value());
  Matrix value = a.value().rowwise() + row.value().row(0);
  return t.record(std::move(value), {a, row}, [a, row](Tape& t, const Matrix& g) {
    t.accumulate(a, g);
    if (t.needs_grad(row)) t.accumulate(row, g.colwise().sum());
  });
}

Var scale_rows(Var a, Var factor) {
  Tape& t = tape_of(a, factor);
  if (factor.cols() != 1 || factor.rows() != a.rows()) {
    shape_error("scale_rows", a.value(), factor.value());
  }
  Matrix value = factor.value().col(0).asDiagonal() * a.value();
  return t.record(std::move(value), {a, factor}, [a, factor](Tape& t, const Matrix& g) {
    if (t.needs_grad(a)) t.accumulate(a, factor.value().col(0).asDiagonal() * g);
    if (t.needs_grad(factor)) {
      t.accumulate(factor, g.cwiseProduct(a.value()).rowwise().sum());
    }
  });
}

Var relu(Var a) {
  Matrix value = a.value().cwiseMax(0.0);
  return unary(a, std::move(value), [a](const Matrix& g) -> Matrix {
    return (a.value().array() > 0.0).select(g, 0.0);
  });
}

Var tanh(Var a) {
  Matrix value = a.value().array().tanh().matrix();
  Matrix y = value;
  return unary(a, std::move(value), [y](const Matrix& g) -> Matrix {
    return (g.array() * (1.0 - y.array().square())).matrix();
  });
}

Var sigmoid(Var a) {
  Matrix value = a.value().unaryExpr([](double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
  });
  Matrix y = value;
  return unary(a, std::move(value), [y](const Matrix& g) -> Matrix {
    return (g.array() * y.array() * (1.0 - y.array())).matrix();
  });
}

Var exp(Var a) {
  Matrix value = a.value().array().exp().matrix();
  Matrix y = value;
  return unary(a, std::move(value),
               [y](const Matrix& g) -> Matrix { return g.cwiseProduct(y); });
}

Var log(Var a) {
  Matrix value = a.value().array().log().matrix();
  return unary(a, std::move(value), [a](const Matrix& g) -> Matrix {
    return g.cwiseQuotient(a.value());
  });
}

Var abs(Var a) {
  return unary(a, a.value().cwiseAbs(), [a](const Matrix& g) -> Matrix {
    return (g.array() * a.value().array().sign()).matrix();
  });
}

Var col_max(Var a) {
  if (a.rows() == 0) fail(ErrorCode::ShapeMismatch, "col_max over zero rows");
  const Matrix& v = a.value();
  Matrix value(1, v.cols());
  std::vector<Index> arg(static_cast<std::size_t>(v.cols()));
  for (Index j = 0; j < v.cols(); ++j) {
    Index best = 0;
    for (Index i = 1; i < v.rows(); ++i) {
      if (v(i, j) > v(best, j)) best = i;
    }
    arg[j] = best;
    value(0, j) = v(best, j);
  }
  const Index rows = v.rows();
  return unary(a, std::move(value), [arg, rows](const Matrix& g) -> Matrix {
    Matrix out = Matrix::Zero(rows, g.cols());
    for (Index j = 0; j < g.cols(); ++j) out(arg[j], j) = g(0, j);
    return out;
  });
}

Var row_max(Var a) {
  if (a.cols() == 0) fail(ErrorCode::ShapeMismatch, "row_max over zero columns");
  const Matrix& v = a.value();
  Matrix value(v.rows(), 1);
  std::vector<Index> arg(static_cast<std::size_t>(v.rows()));
  for (Index i = 0; i < v.rows(); ++i) {
    Index best = 0;
    for (Index j = 1; j < v.cols(); ++j) {
      if (v(i, j) > v(i, best)) best = j;
    }
    arg[i] = best;
    value(i, 0) = v(i, best);
  }
  const Index cols = v.cols();
  return unary(a, std::move(value), [arg, cols](const Matrix& g) -> Matrix {
    Matrix out = Matrix::Zero(g.rows(), cols);
    for (Index i = 0; i < g.rows(); ++i) out(i, arg[i]) = g(i, 0);
    return out;
  });
}

Var logsumexp(Var a) {
  const Matrix& v = a.value();
  const double m = v.maxCoeff();
  const double lse = m + std::log((v.array() - m).exp().sum());
  Matrix value(1, 1);
  value(0, 0) = lse;
  return unary(a, std::move(value), [a, lse](const Matrix& g) -> Matrix {
    return ((a.value().array() - lse).exp() * g(0, 0)).matrix();
  });
}

Var logsumexp_rows(Var a) {
  Matrix value = row_lse(a.value());
  Matrix lse = value;
  return unary(a, std::move(value), [a, lse](const Matrix& g) -> Matrix {
    Matrix soft = (a.value().colwise() - lse.col(0)).array().exp().matrix();
    return g.col(0).asDiagonal() * soft;
  });
}

Var logsumexp_cols(Var a) {
  Matrix value = col_lse(a.value());
  Matrix lse = value;
  return unary(a, std::move(value), [a, lse](const Matrix& g) -> Matrix {
    Matrix soft = (a.value().rowwise() - lse.row(0)).array().exp().matrix();
    return soft * g.row(0).asDiagonal();
  });
}

Var log_normalize_rows(Var a, double log_target) {
  Matrix lse = row_lse(a.value());
  Matrix value = (a.value().colwise() - lse.col(0)).array() + log_target;
  Matrix y = value;
  return unary(a, std::move(value), [y, log_target](const Matrix& g) -> Matrix {
    Matrix soft = (y.array() - log_target).exp().matrix();
    Matrix row_sums = g.rowwise().sum();
    return g - row_sums.col(0).asDiagonal() * soft;
  });
}

Var log_normalize_cols(Var a, double log_target) {
  Matrix lse = col_lse(a.value());
  Matrix value = (a.value().rowwise() - lse.row(0)).array() + log_target;
  Matrix y = value;
  return unary(a, std::move(value), [y, log_target](const Matrix& g) -> Matrix {
    Matrix soft = (y.array() - log_target).exp().matrix();
    Matrix col_sums = g.colwise().sum();
    return g - soft * col_sums.row(0).asDiagonal();
  });
}

Var l2_normalize_rows(Var a) {
  constexpr double kEps = 1e-12;
  const Matrix& v = a.value();
  Matrix norms = v.rowwise().norm();
  Matrix value(v.rows(), v.cols());
  for (Index i = 0; i < v.rows(); ++i) value.row(i) = v.row(i) / (norms(i, 0) + kEps);
  return unary(a, std::move(value), [a, norms](const Matrix& g) -> Matrix {
    const Matrix& v = a.value();
    Matrix out(v.rows(), v.cols());
    for (Index i = 0; i < v.rows(); ++i) {
      const double n = norms(i, 0);
      const double s = n + kEps;
      out.row(i) = g.row(i) / s;
      if (n > 0.0) {
        const double dot = v.row(i).dot(g.row(i));
        out.row(i) -= v.row(i) * (dot / (s * s * n));
      }
    }
    return out;
  });
}

Var row_norms(Var a) {
  Matrix value = a.value().rowwise().norm();
  Matrix norms = value;
  return unary(a, std::move(value), [a, norms](const Matrix& g) -> Matrix {
    const Matrix& v = a.value();
    Matrix out = Matrix::Zero(v.rows(), v.cols());
    for (Index i = 0; i < v.rows(); ++i) {
      if (norms(i, 0) > 0.0) out.row(i) = v.row(i) * (g(i, 0) / norms(i, 0));
    }
    return out;
  });
}

Var sum(Var a) {
  Matrix value(1, 1);
  value(0, 0) = a.value().sum();
  const Index r = a.rows(), c = a.cols();
  return unary(a, std::move(value), [r, c](const Matrix& g) -> Matrix {
    return Matrix::Constant(r, c, g(0, 0));
  });
}

Var transpose(Var a) {
  return unary(a, a.value().transpose(),
               [](const Matrix& g) -> Matrix { return g.transpose(); });
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) fail(ErrorCode::InvalidArgument, "concat_rows of nothing");
  Tape& t = parts[0].tape();
  Index rows = 0;
  const Index cols = parts[0].cols();
  for (const Var& p : parts) {
    if (p.cols() != cols) shape_error("concat_rows", parts[0].value(), p.value());
    rows += p.rows();
  }
  Matrix value(rows, cols);
  Index at = 0;
  for (const Var& p : parts) {
    value.middleRows(at, p.rows()) = p.value();
    at += p.rows();
  }
  std::vector<Var> kept(parts.begin(), parts.end());
  return t.record(std::move(value), parts, [kept](Tape& t, const Matrix& g) {
    Index at = 0;
    for (const Var& p : kept) {
      if (t.needs_grad(p)) t.accumulate(p, g.middleRows(at, p.rows()));
      at += p.rows();
    }
  });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) fail(ErrorCode::InvalidArgument, "concat_cols of nothing");
  Tape& t = parts[0].tape();
  Index cols = 0;
  const Index rows = parts[0].rows();
  for (const Var& p : parts) {
    if (p.rows() != rows) shape_error("concat_cols", parts[0].value(), p.value());
    cols += p.cols();
  }
  Matrix value(rows, cols);
  Index at = 0;
  for (const Var& p : parts) {
    value.middleCols(at, p.cols()) = p.value();
    at += p.cols();
  }
  std::vector<Var> kept(parts.begin(), parts.end());
  return t.record(std::move(value), parts, [kept](Tape& t, const Matrix& g) {
    Index at = 0;
    for (const Var& p : kept) {
      if (t.needs_grad(p)) t.accumulate(p, g.middleCols(at, p.cols()));
      at += p.cols();
    }
  });
}

Var gather_rows(Var a, std::span<const int> rows) {
  const Matrix& v = a.value();
  Matrix value(static_cast<Index>(rows.size()), v.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k] < 0 || rows[k] >= v.rows()) {
      fail(ErrorCode::InvalidArgument, "gather_rows index out of range");
    }
    value.row(static_cast<Index>(k)) = v.row(rows[k]);
  }
  std::vector<int> idx(rows.begin(), rows.end());
  const Index src_rows = v.rows();
  return unary(a, std::move(value), [idx, src_rows](const Matrix& g) -> Matrix {
    Matrix out = Matrix::Zero(src_rows, g.cols());
    for (std::size_t k = 0; k < idx.size(); ++k) out.row(idx[k]) += g.row(static_cast<Index>(k));
    return out;
  });
}

Var neighbor_max(Var h, const std::vector<std::vector<int>>& neighbors) {
  const Matrix& v = h.value();
  if (static_cast<Index>(neighbors.size()) != v.rows()) {
    fail(ErrorCode::ShapeMismatch, "neighbor_max: neighbor list count differs from rows");
  }
  Matrix value = Matrix::Zero(v.rows(), v.cols());
  // argmax[i * cols + d] = source row, or -1 for isolated nodes.
  std::vector<int> arg(static_cast<std::size_t>(v.size()), -1);
  for (Index i = 0; i < v.rows(); ++i) {
    const auto& nbrs = neighbors[static_cast<std::size_t>(i)];
    if (nbrs.empty()) continue;
    for (Index d = 0; d < v.cols(); ++d) {
      int best = nbrs[0];
      for (std::size_t k = 1; k < nbrs.size(); ++k) {
        if (v(nbrs[k], d) > v(best, d)) best = nbrs[k];
      }
      arg[static_cast<std::size_t>(i * v.cols() + d)] = best;
      value(i, d) = v(best, d);
    }
  }
  const Index rows = v.rows();
  return unary(h, std::move(value), [arg, rows](const Matrix& g) -> Matrix {
    Matrix out = Matrix::Zero(rows, g.cols());
    for (Index i = 0; i < g.rows(); ++i) {
      for (Index d = 0; d < g.cols(); ++d) {
        const int src = arg[static_cast<std::size_t>(i * g.cols() + d)];
        if (src >= 0) out(src, d) += g(i, d);
      }
    }
    return out;
  });
}

// ---- Adam / gradient check ------------------------------------------------

void adam_step(ParameterStore& store, double lr, const AdamConfig& cfg) {
  store.set_step(store.step() + 1);
  const double t = static_cast<double>(store.step());
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  for (const auto& name : store.names()) {
    Parameter& p = store.at(name);
    p.m = cfg.beta1 * p.m + (1.0 - cfg.beta1) * p.grad;
    p.v = cfg.beta2 * p.v + (1.0 - cfg.beta2) * p.grad.cwiseProduct(p.grad);
    p.value.array() -= lr * (p.m.array() / c1) / ((p.v.array() / c2).sqrt() + cfg.eps);
    p.grad.setZero();
  }
}

GradCheckReport finite_difference_check(const std::function<Var(Tape&)>& f,
                                        ParameterStore& store, double h) {
  store.zero_grad();
  {
    Tape tape;
    Var out = f(tape);
    tape.backward(out);
  }
  auto evaluate = [&]() {
    Tape tape;
    return f(tape).item();
  };
  GradCheckReport report;
  for (const auto& name : store.names()) {
    Parameter& p = store.at(name);
    for (Index k = 0; k < p.value.size(); ++k) {
      double& x = p.value.data()[k];
      const double saved = x;
      x = saved + h;
      const double up = evaluate();
      x = saved - h;
      const double down = evaluate();
      x = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double analytic = p.grad.data()[k];
      const double denom =
          std::max({std::abs(numeric), std::abs(analytic), kGradCheckFloor});
      const double rel = std::abs(numeric - analytic) / denom;
      ++report.checked;
      if (!(rel <= report.max_rel_error)) {
        report.max_rel_error = std::isnan(rel) ? std::numeric_limits<double>::infinity() : rel;
        report.worst_parameter = name;
        report.worst_index = k;
      }
    }
  }
  store.zero_grad();
  return report;
}

}  // namespace bg::diff
