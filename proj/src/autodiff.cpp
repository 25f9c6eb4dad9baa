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

#include "scalecount/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "scalecount/error.hpp"

namespace scalecount {

const char* op_name(OpKind kind) {
  switch (kind) {
    case OpKind::kConstant: return "constant";
    case OpKind::kLeaf: return "leaf";
    case OpKind::kParameter: return "parameter";
    case OpKind::kAdd: return "add";
    case OpKind::kScale: return "scale";
    case OpKind::kMul: return "mul";
    case OpKind::kSum: return "sum";
    case OpKind::kRelu: return "relu";
    case OpKind::kConv2d: return "conv2d";
    case OpKind::kConcat: return "concat";
    case OpKind::kSlice: return "slice";
    case OpKind::kConvexMix: return "convex_mix";
    case OpKind::kSumPool: return "sum_pool";
    case OpKind::kMaxPool: return "max_pool";
    case OpKind::kSquaredError: return "squared_error";
  }
  return "unknown";
}

const Tensor& Var::value() const { return tape_->value(id_); }
const Shape& Var::shape() const { return value().shape(); }
const Tensor& Var::grad() const { return tape_->grad(id_); }

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Tensor value) {
  Node node;
  node.kind = OpKind::kConstant;
  node.owned = std::move(value);
  return push(std::move(node));
}

Var Tape::leaf(Tensor value) {
  Node node;
  node.kind = OpKind::kLeaf;
  node.owned = std::move(value);
  node.needs_grad = true;
  return push(std::move(node));
}

Var Tape::param(Parameter& p) {
  if (auto it = param_nodes_.find(&p); it != param_nodes_.end()) {
    return Var(this, it->second);
  }
  Node node;
  node.kind = OpKind::kParameter;
  node.external = &p.value;
  node.param = &p;
  node.needs_grad = true;
  Var v = push(std::move(node));
  param_nodes_.emplace(&p, v.id());
  return v;
}

Var Tape::record(OpKind kind, std::span<const Var> inputs, Tensor result,
                 BackwardFn backward) {
  if (backward_done_) {
    throw std::logic_error("cannot record on a tape after backward");
  }
  Node node;
  node.kind = kind;
  node.owned = std::move(result);
  node.backward = std::move(backward);
  node.inputs.reserve(inputs.size());
  for (const Var& in : inputs) {
    if (in.tape() != this) {
      throw std::logic_error(std::string("input of ") + op_name(kind) +
                             " is not registered on this tape");
    }
    node.inputs.push_back(in.id());
    node.needs_grad = node.needs_grad || nodes_[in.id()].needs_grad;
  }
  return push(std::move(node));
}

const Tensor& Tape::value(NodeId id) const {
  const Node& node = nodes_.at(id);
  return node.external != nullptr ? *node.external : node.owned;
}

Tensor& Tape::grad(NodeId id) {
  Node& node = nodes_.at(id);
  if (node.grad.empty() && value(id).size() != 0) {
    node.grad = Tensor(value(id).shape());
  }
  return node.grad;
}

void Tape::backward(const Var& loss) {
  if (backward_done_) {
    throw std::logic_error("backward already ran on this tape; record a new one");
  }
  if (loss.tape() != this) {
    throw std::logic_error("loss is not registered on this tape");
  }
  if (!value(loss.id()).shape().is_scalar()) {
    throw ShapeError("backward needs a (1,1,1,1) loss, got " +
                     value(loss.id()).shape().str());
  }
  backward_done_ = true;
  grad(loss.id()).fill(1.0);
  for (NodeId id = loss.id() + 1; id-- > 0;) {
    Node& node = nodes_[id];
    if (!node.needs_grad || !node.backward || node.grad.empty()) continue;
    node.backward(*this, id);
  }
  for (Node& node : nodes_) {
    if (node.param == nullptr) continue;
    node.param->grad =
        node.grad.empty() ? Tensor(node.param->value.shape()) : node.grad;
  }
}

namespace {

double rel_err(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max(1.0, std::abs(numeric));
}

double eval_scalar(const std::function<Var(Tape&)>& f,
                   std::vector<std::uint8_t>* branches = nullptr) {
  Tape tape;
  const Var out = f(tape);
  if (!out.shape().is_scalar()) {
    throw ShapeError("grad_check needs a scalar function, got " +
                     out.shape().str());
  }
  if (branches != nullptr) *branches = branch_signature(tape);
  return out.value()[0];
}

}  // namespace

double grad_check(const ScalarFn& fn, const Tensor& input, double eps) {
  if (!(eps > 0.0)) throw ArgumentError("grad_check eps must be > 0");
  Tensor analytic;
  {
    Tape tape;
    const Var x = tape.leaf(input);
    const Var y = fn(tape, x);
    if (!y.shape().is_scalar()) {
      throw ShapeError("grad_check needs a scalar function, got " +
                       y.shape().str());
    }
    tape.backward(y);
    analytic = x.grad();
  }
  double worst = 0.0;
  Tensor probe = input;
  for (std::size_t i = 0; i < input.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + eps;
    const double up =
        eval_scalar([&](Tape& t) { return fn(t, t.leaf(probe)); });
    probe[i] = orig - eps;
    const double down =
        eval_scalar([&](Tape& t) { return fn(t, t.leaf(probe)); });
    probe[i] = orig;
    worst = std::max(worst, rel_err(analytic[i], (up - down) / (2.0 * eps)));
  }
  return worst;
}

double grad_check_params(const std::function<Var(Tape&)>& loss_fn,
                         std::span<Parameter* const> params, double eps,
                         std::size_t coords_per_param, Rng& rng,
                         std::size_t* skipped) {
  if (!(eps > 0.0)) throw ArgumentError("grad_check eps must be > 0");
  if (skipped != nullptr) *skipped = 0;
  std::vector<std::uint8_t> base_branches;
  {
    Tape tape;
    const Var loss = loss_fn(tape);
    if (!loss.shape().is_scalar()) {
      throw ShapeError("grad_check needs a scalar function, got " +
                       loss.shape().str());
    }
    for (Parameter* p : params) p->grad = Tensor(p->value.shape());
    base_branches = branch_signature(tape);
    tape.backward(loss);
  }
  double worst = 0.0;
  for (Parameter* p : params) {
    const Tensor analytic = p->grad;
    std::vector<std::size_t> coords;
    if (p->value.size() <= coords_per_param) {
      for (std::size_t i = 0; i < p->value.size(); ++i) coords.push_back(i);
    } else {
      for (std::size_t k = 0; k < coords_per_param; ++k) {
        coords.push_back(static_cast<std::size_t>(uniform_int(
            rng, 0, static_cast<std::int64_t>(p->value.size()) - 1)));
      }
    }
    for (std::size_t i : coords) {
      const double orig = p->value[i];
      std::vector<std::uint8_t> up_branches;
      std::vector<std::uint8_t> down_branches;
      p->value[i] = orig + eps;
      const bool guard = skipped != nullptr;
      const double up = eval_scalar(loss_fn, guard ? &up_branches : nullptr);
      p->value[i] = orig - eps;
      const double down = eval_scalar(loss_fn, guard ? &down_branches : nullptr);
      p->value[i] = orig;
      if (skipped != nullptr &&
          (up_branches != base_branches || down_branches != base_branches)) {
        ++*skipped;
        continue;
      }
      worst = std::max(worst, rel_err(analytic[i], (up - down) / (2.0 * eps)));
    }
  }
  return worst;
}

std::vector<std::uint8_t> branch_signature(const Tape& tape) {
  std::vector<std::uint8_t> bits;
  for (NodeId id = 0; id < tape.size(); ++id) {
    if (tape.kind(id) == OpKind::kRelu) {
      for (double v : tape.value(tape.inputs(id)[0]).values()) bits.push_back(v > 0.0);
    } else if (tape.kind(id) == OpKind::kMaxPool) {
      // Each input element either is or is not its window's maximum.
      const Tensor& in = tape.value(tape.inputs(id)[0]);
      const Tensor& out = tape.value(id);
      const Shape& s = in.shape();
      const int factor = s.h / out.shape().h;
      for (int n = 0; n < s.n; ++n) {
        for (int c = 0; c < s.c; ++c) {
          for (int y = 0; y < out.shape().h * factor; ++y) {
            for (int x = 0; x < out.shape().w * factor; ++x) {
              bits.push_back(in.at(n, c, y, x) == out.at(n, c, y / factor, x / factor));
            }
          }
        }
      }
    }
  }
  return bits;
}

}  // namespace scalecount
