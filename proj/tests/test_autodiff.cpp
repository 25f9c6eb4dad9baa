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

#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "scalecount/autodiff.hpp"
#include "scalecount/error.hpp"
#include "scalecount/ops.hpp"
#include "support.hpp"

namespace scalecount {
namespace {

using testing::random_tensor;

TEST_CASE("tensor shape and storage") {
  const Tensor t(Shape{2, 3, 4, 5}, 1.5);
  CHECK(t.size() == 120);
  CHECK(t.sum() == doctest::Approx(180.0));
  CHECK(t.index(1, 2, 3, 4) == 119);
  CHECK_THROWS_AS(Tensor(Shape{1, 1, 2, 2}, std::vector<double>{1, 2, 3}), ShapeError);
  Tensor bad(Shape{1, 1, 1, 2});
  bad[1] = std::nan("");
  CHECK_FALSE(bad.all_finite());
}

TEST_CASE("add is elementwise and rejects mismatched shapes") {
  Tape tape;
  const Var a = tape.leaf(Tensor(Shape{1, 1, 2, 2}, {1, 2, 3, 4}));
  const Var b = tape.leaf(Tensor(Shape{1, 1, 2, 2}, {10, 20, 30, 40}));
  const Var c = add(a, b);
  CHECK(c.value()[0] == 11.0);
  CHECK(c.value()[3] == 44.0);
  const Var d = tape.leaf(Tensor(Shape{1, 1, 3, 3}));
  CHECK_THROWS_AS(add(a, d), ShapeError);
}

TEST_CASE("scale by one is the identity") {
  Rng rng(1);
  Tape tape;
  const Tensor x = random_tensor(Shape{2, 2, 3, 3}, rng);
  const Var y = scale(tape.leaf(x), 1.0);
  CHECK(std::equal(x.values().begin(), x.values().end(), y.value().values().begin()));
}

TEST_CASE("backward of sum(2x) is 2 everywhere") {
  Rng rng(2);
  Tape tape;
  const Var x = tape.leaf(random_tensor(Shape{2, 3, 4, 5}, rng));
  tape.backward(sum(scale(x, 2.0)));
  for (double g : x.grad().values()) CHECK(g == 2.0);
}

TEST_CASE("backward of sum(x*x) at 3 is 6") {
  Tape tape;
  const Var x = tape.leaf(Tensor::scalar(3.0));
  tape.backward(sum(mul(x, x)));
  CHECK(x.grad()[0] == 6.0);
}

TEST_CASE("backward requires a scalar and runs once") {
  Tape tape;
  const Var x = tape.leaf(Tensor(Shape{1, 1, 2, 2}, 1.0));
  CHECK_THROWS_AS(tape.backward(x), ShapeError);
  const Var loss = sum(x);
  tape.backward(loss);
  CHECK_THROWS_AS(tape.backward(loss), std::logic_error);
  CHECK_THROWS_AS(sum(x), std::logic_error);
}

TEST_CASE("parameters bind by reference and unreached ones get zero grad") {
  Parameter used{"used", Tensor(Shape{1, 1, 1, 2}, {1.0, -2.0}), {}};
  Parameter unused{"unused", Tensor(Shape{1, 1, 1, 1}, 5.0), Tensor(Shape{1, 1, 1, 1}, 9.0)};
  Tape tape;
  const Var p = tape.param(used);
  CHECK(tape.param(used).id() == p.id());
  (void)tape.param(unused);
  tape.backward(sum(mul(p, p)));
  CHECK(used.grad[0] == 2.0);
  CHECK(used.grad[1] == -4.0);
  CHECK(unused.grad.shape() == unused.value.shape());
  CHECK(unused.grad[0] == 0.0);
}

TEST_CASE("tape nodes are topologically ordered") {
  Rng rng(3);
  Tape tape;
  const Var x = tape.leaf(random_tensor(Shape{1, 2, 4, 4}, rng));
  const Var w = tape.leaf(random_tensor(Shape{2, 2, 3, 3}, rng));
  (void)sum(relu(conv2d(x, w, Var(), ConvSpec{2, 2, 3, 1, 1})));
  for (NodeId id = 0; id < tape.size(); ++id) {
    for (NodeId in : tape.inputs(id)) CHECK(in < id);
  }
}

TEST_CASE("vars from another tape are rejected") {
  Tape a;
  Tape b;
  const Var x = a.leaf(Tensor::scalar(1.0));
  const Var y = b.leaf(Tensor::scalar(1.0));
  CHECK_THROWS_AS(add(x, y), std::logic_error);
}

TEST_CASE("backward is linear in the loss") {
  Rng rng(4);
  const Tensor x0 = random_tensor(Shape{1, 3, 4, 4}, rng);
  const Tensor w1 = random_tensor(Shape{1, 3, 4, 4}, rng);
  const Tensor w2 = random_tensor(Shape{1, 3, 4, 4}, rng);
  auto loss1 = [&](Tape& t, const Var& x) { return sum(mul(relu(x), t.constant(w1))); };
  auto loss2 = [&](Tape& t, const Var& x) { return sum(mul(mul(x, x), t.constant(w2))); };
  auto grad_of = [&](auto fn) {
    Tape t;
    const Var x = t.leaf(x0);
    t.backward(fn(t, x));
    return x.grad();
  };
  const Tensor g1 = grad_of(loss1);
  const Tensor g2 = grad_of(loss2);
  const Tensor both = grad_of([&](Tape& t, const Var& x) { return add(loss1(t, x), loss2(t, x)); });
  for (std::size_t i = 0; i < both.size(); ++i) {
    CHECK(both[i] == doctest::Approx(g1[i] + g2[i]).epsilon(1e-14));
  }
}

TEST_CASE("replaying a tape reproduces identical values") {
  Rng rng(5);
  const Tensor x = random_tensor(Shape{2, 4, 6, 6}, rng);
  const Tensor w = random_tensor(Shape{4, 2, 3, 3}, rng);
  auto run = [&] {
    Tape t;
    return conv2d(t.constant(x), t.constant(w), Var(), ConvSpec{4, 4, 3, 2, 2}).value();
  };
  const Tensor a = run();
  const Tensor b = run();
  CHECK(std::equal(a.values().begin(), a.values().end(), b.values().begin()));
}

TEST_CASE("grad_check contract") {
  Rng rng(6);
  const Tensor x = random_tensor(Shape{1, 2, 3, 3}, rng);
  CHECK(grad_check([](Tape&, const Var& v) { return sum(v); }, x, 1e-5) <= 1e-10);
  CHECK_THROWS_AS(grad_check([](Tape&, const Var& v) { return v; }, x, 1e-5), ShapeError);
  CHECK_THROWS_AS(grad_check([](Tape&, const Var& v) { return sum(v); }, x, 0.0),
                  ArgumentError);
}

TEST_CASE("grad_check: dilated conv, ReLU, sum on 1x8x12x12") {
  Rng rng(7);
  const ConvSpec spec{8, 8, 3, 3, 1};
  const Tensor x = random_tensor(Shape{1, 8, 12, 12}, rng);
  const Tensor w = random_tensor(spec.weight_shape(), rng, -0.3, 0.3);
  const Tensor b = random_tensor(Shape{1, 8, 1, 1}, rng, -0.1, 0.1);
  CHECK(grad_check([&](Tape& t, const Var& v) {
          return sum(relu(conv2d(v, t.constant(w), t.constant(b), spec)));
        }, x, 1e-5) < 1e-4);
}

TEST_CASE("grad_check_params drops stencils that straddle a ReLU kink") {
  // relu(p) at p = 0: central difference gives 0.5, backward gives 0.
  Parameter p{"p", Tensor(Shape{1, 1, 1, 2}, {0.0, 0.7}), {}};
  std::vector<Parameter*> ps{&p};
  Rng rng(8);
  std::size_t skipped = 9;
  const double err = grad_check_params([&](Tape& t) { return sum(relu(t.param(p))); },
                                       ps, 1e-5, 4, rng, &skipped);
  CHECK(skipped == 1);
  CHECK(err <= 1e-9);
  CHECK(p.value[0] == 0.0);

  const Tape tape_probe;
  CHECK(branch_signature(tape_probe).empty());
  Tape t;
  relu(t.leaf(Tensor(Shape{1, 1, 1, 3}, {-1.0, 0.0, 2.0})));
  CHECK(branch_signature(t) == std::vector<std::uint8_t>{0, 0, 1});
}

}  // namespace
}  // namespace scalecount
