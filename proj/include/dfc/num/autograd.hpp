#pragma once

#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "dfc/num/tensor.hpp"

namespace dfc::num {

template <typename Scalar>
struct Parameter {
  std::string name;
  Matrix<Scalar> value;
  Matrix<Scalar> grad;
  bool decay = true;  // subject to decoupled weight decay
};

// Owns the parameters of one model. Addresses are stable for the lifetime of
// the set, so layers may hold raw pointers into it.
template <typename Scalar>
class ParameterSet {
 public:
  Parameter<Scalar>& add(std::string name, Index rows, Index cols, bool decay) {
    if (!names_.insert(name).second) fail(ErrorKind::config, "duplicate parameter name: " + name);
    auto p = std::make_unique<Parameter<Scalar>>();
    p->name = std::move(name);
    p->value = Matrix<Scalar>::Zero(rows, cols);
    p->grad = Matrix<Scalar>::Zero(rows, cols);
    p->decay = decay;
    params_.push_back(std::move(p));
    return *params_.back();
  }

  std::size_t size() const { return params_.size(); }
  Parameter<Scalar>& operator[](std::size_t i) { return *params_[i]; }
  const Parameter<Scalar>& operator[](std::size_t i) const { return *params_[i]; }

  Parameter<Scalar>* find(std::string_view name) {
    for (auto& p : params_) {
      if (p->name == name) return p.get();
    }
    return nullptr;
  }

  void zero_grad() {
    for (auto& p : params_) p->grad.setZero();
  }

  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += static_cast<std::size_t>(p->value.size());
    return n;
  }

  std::vector<Matrix<Scalar>> snapshot() const {
    std::vector<Matrix<Scalar>> out;
    out.reserve(params_.size());
    for (const auto& p : params_) out.push_back(p->value);
    return out;
  }

  void restore(const std::vector<Matrix<Scalar>>& values) {
    if (values.size() != params_.size()) fail(ErrorKind::shape, "snapshot does not match parameter set");
    for (std::size_t i = 0; i < params_.size(); ++i) {
      if (shape_of(values[i]) != shape_of(params_[i]->value)) {
        shape_mismatch("restore", shape_of(values[i]), shape_of(params_[i]->value));
      }
      params_[i]->value = values[i];
    }
  }

  template <typename Other>
  void copy_values_from(const ParameterSet<Other>& other) {
    if (other.size() != size()) fail(ErrorKind::shape, "parameter sets differ in size");
    for (std::size_t i = 0; i < size(); ++i) {
      params_[i]->value = other[i].value.template cast<Scalar>();
    }
  }

 private:
  std::vector<std::unique_ptr<Parameter<Scalar>>> params_;
  std::unordered_set<std::string> names_;
};

template <typename Scalar>
class Tape;

// Handle to a node on a tape.
template <typename Scalar>
struct Var {
  Tape<Scalar>* tape = nullptr;
  std::size_t id = 0;

  const Matrix<Scalar>& value() const { return tape->value(id); }
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
};

// Records a computation as a topologically ordered node list; backward()
// walks it in reverse and flushes parameter gradients into Parameter::grad
// (accumulating, so several examples may share one zero_grad()).
template <typename Scalar>
class Tape {
 public:
  using Backward = std::function<void(Tape&, const Matrix<Scalar>& out_grad)>;

  explicit Tape(bool record_gradients = true) : record_(record_gradients) { nodes_.reserve(256); }

  bool recording() const { return record_; }

  Var<Scalar> constant(Matrix<Scalar> value) {
    Node n;
    n.value = std::move(value);
    nodes_.push_back(std::move(n));
    return {this, nodes_.size() - 1};
  }

  Var<Scalar> parameter(Parameter<Scalar>& p) {
    Node n;
    n.param = &p;
    n.needs_grad = record_;
    nodes_.push_back(std::move(n));
    return {this, nodes_.size() - 1};
  }

  // For op implementations: appends a node whose gradient flows to `inputs`
  // through `backward`.
  Var<Scalar> record(const char* op, Matrix<Scalar> value, std::initializer_list<Var<Scalar>> inputs,
                     Backward backward) {
    if (!value.allFinite()) fail(ErrorKind::numeric, std::string(op) + " produced a non-finite value");
    Node n;
    n.value = std::move(value);
    if (record_) {
      for (const auto& in : inputs) n.needs_grad = n.needs_grad || nodes_[in.id].needs_grad;
      if (n.needs_grad) n.backward = std::move(backward);
    }
    nodes_.push_back(std::move(n));
    return {this, nodes_.size() - 1};
  }

  const Matrix<Scalar>& value(std::size_t id) const {
    const Node& n = nodes_[id];
    return n.param ? n.param->value : n.value;
  }

  bool needs_grad(std::size_t id) const { return nodes_[id].needs_grad; }

  // Gradient buffer of a node, zero-initialized on first use.
  Matrix<Scalar>& grad(std::size_t id) {
    Node& n = nodes_[id];
    if (n.grad.size() == 0) n.grad = Matrix<Scalar>::Zero(value(id).rows(), value(id).cols());
    return n.grad;
  }

  void backward(Var<Scalar> loss) {
    if (!record_) fail(ErrorKind::usage, "backward on a tape that does not record gradients");
    if (loss.rows() != 1 || loss.cols() != 1) {
      fail(ErrorKind::shape, "backward requires a scalar loss, got " + shape_string(shape_of(loss.value())));
    }
    grad(loss.id)(0, 0) += Scalar(1);
    for (std::size_t i = loss.id + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (n.grad.size() == 0) continue;
      if (n.backward) n.backward(*this, n.grad);
      if (n.param) n.param->grad += n.grad;
    }
  }

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix<Scalar> value;
    Parameter<Scalar>* param = nullptr;
    Matrix<Scalar> grad;
    bool needs_grad = false;
    Backward backward;
  };

  bool record_;
  std::vector<Node> nodes_;
};

}  // namespace dfc::num
