// Copyright 2026 The scalecount Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SCALECOUNT_AUTODIFF_HPP_
#define SCALECOUNT_AUTODIFF_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "scalecount/rng.hpp"
#include "scalecount/tensor.hpp"

namespace scalecount {

// A named learnable tensor. The gradient buffer is overwritten by each
// Tape::backward that reaches the parameter.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
};

using NodeId = std::size_t;

enum class OpKind {
  kConstant,
  kLeaf,
  kParameter,
  kAdd,
  kScale,
  kMul,
  kSum,
  kRelu,
  kConv2d,
  kConcat,
  kSlice,
  kConvexMix,
  kSumPool,
  kMaxPool,
  kSquaredError,
};

const char* op_name(OpKind kind);

class Tape;

// Handle to a recorded tensor: the tensor value plus its node on a tape.
class Var {
 public:
  Var() = default;

  bool valid() const { return tape_ != nullptr; }
  Tape* tape() const { return tape_; }
  NodeId id() const { return id_; }

  const Tensor& value() const;
  const Shape& shape() const;
  // Gradient of the last backward pass; zeros when the node was unreachable.
  const Tensor& grad() const;

 private:
  friend class Tape;
  Var(Tape* tape, NodeId id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  NodeId id_ = 0;
};

// Define-by-run recording of a forward pass. Nodes are appended in execution
// order, so the node list is always topologically sorted; backward walks it
// once in reverse.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, NodeId)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Input that never receives a gradient (images, targets).
  Var constant(Tensor value);
  // Input that receives a gradient.
  Var leaf(Tensor value);
  // Binds a model parameter without copying it. Binding the same parameter
  // twice returns the same node.
  Var param(Parameter& p);

  // Registers the result of a forward computation. Throws std::logic_error if
  // an input belongs to another tape or backward already ran.
  Var record(OpKind kind, std::span<const Var> inputs, Tensor result,
             BackwardFn backward);

  // Propagates d(loss)/d(node) to every node. loss must be (1,1,1,1).
  void backward(const Var& loss);

  const Tensor& value(NodeId id) const;
  // Gradient buffer, allocated as zeros on first access.
  Tensor& grad(NodeId id);
  bool needs_grad(NodeId id) const { return nodes_[id].needs_grad; }
  OpKind kind(NodeId id) const { return nodes_[id].kind; }
  const std::vector<NodeId>& inputs(NodeId id) const {
    return nodes_[id].inputs;
  }
  std::size_t size() const { return nodes_.size(); }
  bool backward_done() const { return backward_done_; }

 private:
  struct Node {
    OpKind kind = OpKind::kConstant;
    std::vector<NodeId> inputs;
    Tensor owned;
    const Tensor* external = nullptr;
    Tensor grad;
    BackwardFn backward;
    Parameter* param = nullptr;
    bool needs_grad = false;
  };

  Var push(Node node);

  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, NodeId> param_nodes_;
  bool backward_done_ = false;
};

// A scalar-valued function of one recorded input.
using ScalarFn = std::function<Var(Tape&, const Var&)>;

// Max over coordinates of |analytic - central difference| /
// max(1, |central difference|). Throws ShapeError if fn is not scalar and
// ArgumentError if eps <= 0.
double grad_check(const ScalarFn& fn, const Tensor& input, double eps);

// Same measure for parameters of a model-level loss. Checks at most
// `coords_per_param` randomly chosen coordinates of every parameter (all of
// them when the tensor is smaller). A coordinate whose +-eps stencil flips a
// ReLU or max-pool branch is not differentiable there; when `skipped` is
// given such coordinates are left out of the maximum and counted, otherwise
// every coordinate counts. Parameter values are restored on return.
double grad_check_params(const std::function<Var(Tape&)>& loss_fn,
                         std::span<Parameter* const> params, double eps,
                         std::size_t coords_per_param, Rng& rng,
                         std::size_t* skipped = nullptr);

// One entry per ReLU input element (positive or not) and per max-pool input
// element (window maximum or not), in tape order. Two forward passes with
// equal signatures run through the same linear pieces.
std::vector<std::uint8_t> branch_signature(const Tape& tape);

}  // namespace scalecount

#endif  // SCALECOUNT_AUTODIFF_HPP_
