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

#include "scalecount/ops.hpp"

#include <algorithm>
#include <array>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "scalecount/error.hpp"

namespace scalecount {
namespace {

// Row-major views over strided buffers for the convolution GEMMs.
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstView = Eigen::Map<const RowMatrix, 0, Eigen::OuterStride<>>;
using View = Eigen::Map<RowMatrix, 0, Eigen::OuterStride<>>;

ConstView view(const double* p, std::size_t rows, std::size_t cols, std::size_t ld) {
  return ConstView(p, static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols),
                   Eigen::OuterStride<>(static_cast<Eigen::Index>(ld)));
}

View view(double* p, std::size_t rows, std::size_t cols, std::size_t ld) {
  return View(p, static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols),
              Eigen::OuterStride<>(static_cast<Eigen::Index>(ld)));
}

void require_same_shape(const char* op, const Var& a, const Var& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape " + a.shape().str() +
                     " vs " + b.shape().str());
  }
}

void accumulate(Tensor& dst, const Tensor& src, double factor = 1.0) {
  double* d = dst.data();
  const double* s = src.data();
  for (std::size_t i = 0; i < dst.size(); ++i) d[i] += factor * s[i];
}

// Unfolds one channel group of one sample into rows of a (C*k*k) x ld
// matrix; row r of this sample starts at col + r*ld.
void im2col(const double* x, int channels, int height, int width, int k,
            int dilation, int pad, double* col, std::size_t ld) {
  const std::size_t hw = static_cast<std::size_t>(height) * width;
  for (int c = 0; c < channels; ++c) {
    const double* plane = x + c * hw;
    for (int ki = 0; ki < k; ++ki) {
      for (int kj = 0; kj < k; ++kj) {
        double* row = col + ((static_cast<std::size_t>(c) * k + ki) * k + kj) * ld;
        const int dy = ki * dilation - pad;
        const int dx = kj * dilation - pad;
        if (dx == 0 && dy == 0) {
          std::copy_n(plane, hw, row);
          continue;
        }
        for (int oh = 0; oh < height; ++oh) {
          const int ih = oh + dy;
          double* out = row + static_cast<std::size_t>(oh) * width;
          if (ih < 0 || ih >= height) {
            std::fill_n(out, width, 0.0);
            continue;
          }
          const double* in = plane + static_cast<std::size_t>(ih) * width;
          const int lo = std::clamp(-dx, 0, width);
          const int hi = std::max(lo, std::clamp(width - dx, 0, width));
          std::fill_n(out, lo, 0.0);
          for (int ow = lo; ow < hi; ++ow) out[ow] = in[ow + dx];
          std::fill(out + hi, out + width, 0.0);
        }
      }
    }
  }
}

// Adjoint of im2col: accumulates column gradients back into the image.
void col2im(const double* col, std::size_t ld, int channels, int height,
            int width, int k, int dilation, int pad, double* x) {
  const std::size_t hw = static_cast<std::size_t>(height) * width;
  for (int c = 0; c < channels; ++c) {
    double* plane = x + c * hw;
    for (int ki = 0; ki < k; ++ki) {
      for (int kj = 0; kj < k; ++kj) {
        const double* row =
            col + ((static_cast<std::size_t>(c) * k + ki) * k + kj) * ld;
        const int dy = ki * dilation - pad;
        const int dx = kj * dilation - pad;
        for (int oh = 0; oh < height; ++oh) {
          const int ih = oh + dy;
          if (ih < 0 || ih >= height) continue;
          const double* in = row + static_cast<std::size_t>(oh) * width;
          double* out = plane + static_cast<std::size_t>(ih) * width;
          const int lo = std::clamp(-dx, 0, width);
          const int hi = std::clamp(width - dx, 0, width);
          for (int ow = lo; ow < hi; ++ow) out[ow + dx] += in[ow];
        }
      }
    }
  }
}

}  // namespace

void ConvSpec::validate() const {
  if (in_channels <= 0 || out_channels <= 0 || kernel <= 0 || dilation <= 0 ||
      groups <= 0) {
    throw ConfigError("conv spec fields must be positive");
  }
  if (kernel % 2 == 0) throw ConfigError("conv kernel size must be odd");
  if (in_channels % groups != 0 || out_channels % groups != 0) {
    throw ConfigError("conv channels (" + std::to_string(in_channels) + "->" +
                      std::to_string(out_channels) +
                      ") not divisible by groups " + std::to_string(groups));
  }
}

Var conv2d(const Var& x, const Var& weight, const Var& bias,
           const ConvSpec& spec) {
  spec.validate();
  const Shape xs = x.shape();
  if (xs.c != spec.in_channels) {
    throw ShapeError("conv2d: input has " + std::to_string(xs.c) +
                     " channels, spec expects " +
                     std::to_string(spec.in_channels));
  }
  if (weight.shape() != spec.weight_shape()) {
    throw ShapeError("conv2d: weight shape " + weight.shape().str() +
                     ", expected " + spec.weight_shape().str());
  }
  if (bias.valid() &&
      bias.value().size() != static_cast<std::size_t>(spec.out_channels)) {
    throw ShapeError("conv2d: bias needs " +
                     std::to_string(spec.out_channels) + " values");
  }

  // The whole batch goes through one GEMM per group: columns of the unfolded
  // matrix are indexed by n * h * w + pixel.
  const int k = spec.kernel;
  const int cin_g = spec.in_channels / spec.groups;
  const int cout_g = spec.out_channels / spec.groups;
  const int kdim = cin_g * k * k;
  const std::size_t hw = xs.plane();
  const std::size_t ld = hw * xs.n;

  Tensor out(Shape{xs.n, spec.out_channels, xs.h, xs.w});
  std::vector<double> col(static_cast<std::size_t>(kdim) * ld);
  std::vector<double> prod(static_cast<std::size_t>(cout_g) * ld);
  const double* xv = x.value().data();
  const double* wv = weight.value().data();
  for (int g = 0; g < spec.groups; ++g) {
    for (int n = 0; n < xs.n; ++n) {
      im2col(xv + (static_cast<std::size_t>(n) * spec.in_channels + g * cin_g) * hw,
             cin_g, xs.h, xs.w, k, spec.dilation, spec.padding(),
             col.data() + n * hw, ld);
    }
    view(prod.data(), cout_g, ld, ld).noalias() =
        view(wv + static_cast<std::size_t>(g) * cout_g * kdim, cout_g, kdim, kdim) *
        view(col.data(), kdim, ld, ld);
    for (int oc = 0; oc < cout_g; ++oc) {
      const int channel = g * cout_g + oc;
      const double b = bias.valid() ? bias.value()[channel] : 0.0;
      for (int n = 0; n < xs.n; ++n) {
        const double* src = prod.data() + oc * ld + n * hw;
        double* dst = out.data() +
                      (static_cast<std::size_t>(n) * spec.out_channels + channel) * hw;
        for (std::size_t i = 0; i < hw; ++i) dst[i] = src[i] + b;
      }
    }
  }

  std::vector<Var> inputs{x, weight};
  if (bias.valid()) inputs.push_back(bias);
  return x.tape()->record(
      OpKind::kConv2d, inputs, std::move(out),
      [spec, has_bias = bias.valid()](Tape& tape, NodeId self) {
        const auto& in = tape.inputs(self);
        const NodeId xi = in[0];
        const NodeId wi = in[1];
        const Tensor& xval = tape.value(xi);
        const Tensor& wval = tape.value(wi);
        const Tensor& dout = tape.grad(self);
        const Shape xs = xval.shape();
        const int k = spec.kernel;
        const int cin_g = spec.in_channels / spec.groups;
        const int cout_g = spec.out_channels / spec.groups;
        const int kdim = cin_g * k * k;
        const std::size_t hw = xs.plane();
        const std::size_t ld = hw * xs.n;
        const bool want_x = tape.needs_grad(xi);
        const bool want_w = tape.needs_grad(wi);

        if (has_bias && tape.needs_grad(in[2])) {
          double* db = tape.grad(in[2]).data();
          for (int n = 0; n < xs.n; ++n) {
            for (int oc = 0; oc < spec.out_channels; ++oc) {
              const double* p =
                  dout.data() + (static_cast<std::size_t>(n) * spec.out_channels + oc) * hw;
              double s = 0.0;
              for (std::size_t i = 0; i < hw; ++i) s += p[i];
              db[oc] += s;
            }
          }
        }
        if (!want_x && !want_w) return;

        std::vector<double> dmat(static_cast<std::size_t>(cout_g) * ld);
        std::vector<double> col(static_cast<std::size_t>(kdim) * ld);
        for (int g = 0; g < spec.groups; ++g) {
          for (int oc = 0; oc < cout_g; ++oc) {
            for (int n = 0; n < xs.n; ++n) {
              std::copy_n(dout.data() + (static_cast<std::size_t>(n) * spec.out_channels +
                                         g * cout_g + oc) * hw,
                          hw, dmat.data() + oc * ld + n * hw);
            }
          }
          const double* wg = wval.data() + static_cast<std::size_t>(g) * cout_g * kdim;
          if (want_w) {
            for (int n = 0; n < xs.n; ++n) {
              im2col(xval.data() + (static_cast<std::size_t>(n) * spec.in_channels +
                                    g * cin_g) * hw,
                     cin_g, xs.h, xs.w, k, spec.dilation, spec.padding(),
                     col.data() + n * hw, ld);
            }
            view(tape.grad(wi).data() + static_cast<std::size_t>(g) * cout_g * kdim,
                 cout_g, kdim, kdim).noalias() +=
                view(dmat.data(), cout_g, ld, ld) *
                view(col.data(), kdim, ld, ld).transpose();
          }
          if (want_x) {
            view(col.data(), kdim, ld, ld).noalias() =
                view(wg, cout_g, kdim, kdim).transpose() * view(dmat.data(), cout_g, ld, ld);
            double* dx = tape.grad(xi).data();
            for (int n = 0; n < xs.n; ++n) {
              col2im(col.data() + n * hw, ld, cin_g, xs.h, xs.w, k, spec.dilation,
                     spec.padding(),
                     dx + (static_cast<std::size_t>(n) * spec.in_channels + g * cin_g) * hw);
            }
          }
        }
      });
}

Var add(const Var& a, const Var& b) {
  require_same_shape("add", a, b);
  Tensor out = a.value();
  accumulate(out, b.value());
  const std::array<Var, 2> inputs{a, b};
  return a.tape()->record(OpKind::kAdd, inputs, std::move(out),
                          [](Tape& tape, NodeId self) {
                            for (NodeId in : tape.inputs(self)) {
                              if (tape.needs_grad(in)) {
                                accumulate(tape.grad(in), tape.grad(self));
                              }
                            }
                          });
}

Var scale(const Var& a, double factor) {
  Tensor out = a.value();
  for (double& v : out.values()) v *= factor;
  const std::array<Var, 1> inputs{a};
  return a.tape()->record(OpKind::kScale, inputs, std::move(out),
                          [factor](Tape& tape, NodeId self) {
                            const NodeId in = tape.inputs(self)[0];
                            accumulate(tape.grad(in), tape.grad(self), factor);
                          });
}

Var mul(const Var& a, const Var& b) {
  require_same_shape("mul", a, b);
  Tensor out = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  const std::array<Var, 2> inputs{a, b};
  return a.tape()->record(
      OpKind::kMul, inputs, std::move(out), [](Tape& tape, NodeId self) {
        const NodeId ai = tape.inputs(self)[0];
        const NodeId bi = tape.inputs(self)[1];
        const Tensor& g = tape.grad(self);
        if (tape.needs_grad(ai)) {
          Tensor& ga = tape.grad(ai);
          const Tensor& bv = tape.value(bi);
          for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
        }
        if (tape.needs_grad(bi)) {
          Tensor& gb = tape.grad(bi);
          const Tensor& av = tape.value(ai);
          for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
        }
      });
}

Var sum(const Var& a) {
  const std::array<Var, 1> inputs{a};
  return a.tape()->record(OpKind::kSum, inputs, Tensor::scalar(a.value().sum()),
                          [](Tape& tape, NodeId self) {
                            const NodeId in = tape.inputs(self)[0];
                            const double g = tape.grad(self)[0];
                            for (double& v : tape.grad(in).values()) v += g;
                          });
}

Var relu(const Var& a) {
  Tensor out = a.value();
  for (double& v : out.values()) v = v > 0.0 ? v : 0.0;
  const std::array<Var, 1> inputs{a};
  return a.tape()->record(
      OpKind::kRelu, inputs, std::move(out), [](Tape& tape, NodeId self) {
        const NodeId in = tape.inputs(self)[0];
        const Tensor& x = tape.value(in);
        const Tensor& g = tape.grad(self);
        Tensor& gi = tape.grad(in);
        for (std::size_t i = 0; i < g.size(); ++i) {
          if (x[i] > 0.0) gi[i] += g[i];
        }
      });
}

Var concat_channels(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_channels: no inputs");
  const Shape first = parts[0].shape();
  int channels = 0;
  for (const Var& p : parts) {
    const Shape s = p.shape();
    if (s.n != first.n || s.h != first.h || s.w != first.w) {
      throw ShapeError("concat_channels: " + s.str() + " vs " + first.str());
    }
    channels += s.c;
  }
  if (parts.size() == 1) return parts[0];
  Tensor out(Shape{first.n, channels, first.h, first.w});
  const std::size_t hw = first.plane();
  for (int n = 0; n < first.n; ++n) {
    double* dst = out.data() + static_cast<std::size_t>(n) * channels * hw;
    for (const Var& p : parts) {
      const std::size_t len = p.shape().c * hw;
      std::copy_n(p.value().data() + n * len, len, dst);
      dst += len;
    }
  }
  return parts[0].tape()->record(
      OpKind::kConcat, parts, std::move(out), [](Tape& tape, NodeId self) {
        const Tensor& g = tape.grad(self);
        const Shape gs = g.shape();
        const std::size_t hw = gs.plane();
        std::size_t offset = 0;
        for (NodeId in : tape.inputs(self)) {
          const std::size_t len = tape.value(in).shape().c * hw;
          if (tape.needs_grad(in)) {
            Tensor& gi = tape.grad(in);
            for (int n = 0; n < gs.n; ++n) {
              const double* src = g.data() + n * gs.c * hw + offset;
              double* dst = gi.data() + n * len;
              for (std::size_t i = 0; i < len; ++i) dst[i] += src[i];
            }
          }
          offset += len;
        }
      });
}

Var slice_channels(const Var& x, int begin, int count) {
  const Shape s = x.shape();
  if (begin < 0 || count <= 0 || begin + count > s.c) {
    throw ShapeError("slice_channels: [" + std::to_string(begin) + ", " +
                     std::to_string(begin + count) + ") outside " +
                     std::to_string(s.c) + " channels");
  }
  const std::size_t hw = s.plane();
  Tensor out(Shape{s.n, count, s.h, s.w});
  for (int n = 0; n < s.n; ++n) {
    std::copy_n(x.value().data() + (static_cast<std::size_t>(n) * s.c + begin) * hw,
                count * hw, out.data() + static_cast<std::size_t>(n) * count * hw);
  }
  const std::array<Var, 1> inputs{x};
  return x.tape()->record(
      OpKind::kSlice, inputs, std::move(out),
      [begin, count](Tape& tape, NodeId self) {
        const NodeId in = tape.inputs(self)[0];
        const Tensor& g = tape.grad(self);
        Tensor& gi = tape.grad(in);
        const Shape s = gi.shape();
        const std::size_t hw = s.plane();
        for (int n = 0; n < s.n; ++n) {
          const double* src = g.data() + static_cast<std::size_t>(n) * count * hw;
          double* dst = gi.data() + (static_cast<std::size_t>(n) * s.c + begin) * hw;
          for (std::size_t i = 0; i < count * hw; ++i) dst[i] += src[i];
        }
      });
}

Var convex_mix(const Var& a, const Var& b, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw ArgumentError("convex_mix: alpha " + std::to_string(alpha) +
                        " outside [0, 1]");
  }
  require_same_shape("convex_mix", a, b);
  const double beta = 1.0 - alpha;
  Tensor out(a.shape());
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = alpha * av[i] + beta * bv[i];
  }
  const std::array<Var, 2> inputs{a, b};
  return a.tape()->record(OpKind::kConvexMix, inputs, std::move(out),
                          [alpha, beta](Tape& tape, NodeId self) {
                            const NodeId ai = tape.inputs(self)[0];
                            const NodeId bi = tape.inputs(self)[1];
                            if (tape.needs_grad(ai)) {
                              accumulate(tape.grad(ai), tape.grad(self), alpha);
                            }
                            if (tape.needs_grad(bi)) {
                              accumulate(tape.grad(bi), tape.grad(self), beta);
                            }
                          });
}

namespace {

void check_pool(const char* op, const Shape& s, int factor) {
  if (factor < 1) throw ArgumentError(std::string(op) + ": factor must be >= 1");
  if (s.h % factor != 0 || s.w % factor != 0) {
    throw ShapeError(std::string(op) + ": " + std::to_string(s.h) + "x" +
                     std::to_string(s.w) + " not divisible by " +
                     std::to_string(factor));
  }
}

}  // namespace

Tensor sum_pool(const Tensor& x, int factor) {
  const Shape s = x.shape();
  check_pool("sum_pool", s, factor);
  const int oh = s.h / factor;
  const int ow = s.w / factor;
  Tensor out(Shape{s.n, s.c, oh, ow});
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      for (int i = 0; i < s.h; ++i) {
        for (int j = 0; j < s.w; ++j) {
          out.at(n, c, i / factor, j / factor) += x.at(n, c, i, j);
        }
      }
    }
  }
  return out;
}

Var sum_pool(const Var& x, int factor) {
  Tensor out = sum_pool(x.value(), factor);
  const std::array<Var, 1> inputs{x};
  return x.tape()->record(
      OpKind::kSumPool, inputs, std::move(out),
      [factor](Tape& tape, NodeId self) {
        const NodeId in = tape.inputs(self)[0];
        const Tensor& g = tape.grad(self);
        Tensor& gi = tape.grad(in);
        const Shape s = gi.shape();
        for (int n = 0; n < s.n; ++n) {
          for (int c = 0; c < s.c; ++c) {
            for (int i = 0; i < s.h; ++i) {
              for (int j = 0; j < s.w; ++j) {
                gi.at(n, c, i, j) += g.at(n, c, i / factor, j / factor);
              }
            }
          }
        }
      });
}

Var max_pool(const Var& x, int factor) {
  const Shape s = x.shape();
  check_pool("max_pool", s, factor);
  const int oh = s.h / factor;
  const int ow = s.w / factor;
  Tensor out(Shape{s.n, s.c, oh, ow});
  std::vector<std::size_t> argmax(out.size());
  const Tensor& xv = x.value();
  std::size_t o = 0;
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      for (int i = 0; i < oh; ++i) {
        for (int j = 0; j < ow; ++j, ++o) {
          std::size_t best = xv.index(n, c, i * factor, j * factor);
          for (int di = 0; di < factor; ++di) {
            for (int dj = 0; dj < factor; ++dj) {
              const std::size_t idx =
                  xv.index(n, c, i * factor + di, j * factor + dj);
              if (xv[idx] > xv[best]) best = idx;
            }
          }
          argmax[o] = best;
          out[o] = xv[best];
        }
      }
    }
  }
  const std::array<Var, 1> inputs{x};
  return x.tape()->record(
      OpKind::kMaxPool, inputs, std::move(out),
      [argmax = std::move(argmax)](Tape& tape, NodeId self) {
        const NodeId in = tape.inputs(self)[0];
        const Tensor& g = tape.grad(self);
        Tensor& gi = tape.grad(in);
        for (std::size_t i = 0; i < g.size(); ++i) gi[argmax[i]] += g[i];
      });
}

Var squared_error(const Var& pred, const Tensor& target) {
  if (pred.shape() != target.shape()) {
    throw ShapeError("squared_error: prediction " + pred.shape().str() +
                     " vs target " + target.shape().str());
  }
  const Tensor& p = pred.value();
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double d = p[i] - target[i];
    total += d * d;
  }
  const std::array<Var, 1> inputs{pred};
  return pred.tape()->record(
      OpKind::kSquaredError, inputs, Tensor::scalar(total),
      [target](Tape& tape, NodeId self) {
        const NodeId in = tape.inputs(self)[0];
        const double g = tape.grad(self)[0];
        const Tensor& p = tape.value(in);
        Tensor& gi = tape.grad(in);
        for (std::size_t i = 0; i < p.size(); ++i) {
          gi[i] += 2.0 * g * (p[i] - target[i]);
        }
      });
}

}  // namespace scalecount
