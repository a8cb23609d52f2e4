#include "dwnet/layers.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dwnet/errors.hpp"

namespace dwnet {

std::string_view to_string(Activation kind) {
  switch (kind) {
    case Activation::sigmoid: return "sigmoid";
    case Activation::relu: return "relu";
    case Activation::softmax: return "softmax";
    case Activation::linear: return "linear";
  }
  return "?";
}

std::string_view to_string(Loss kind) {
  switch (kind) {
    case Loss::cross_entropy: return "cross_entropy";
    case Loss::sse: return "sse";
  }
  return "?";
}

Activation parse_activation(std::string_view name) {
  if (name == "sigmoid") return Activation::sigmoid;
  if (name == "relu") return Activation::relu;
  if (name == "softmax") return Activation::softmax;
  if (name == "linear") return Activation::linear;
  throw ArgumentError("unknown activation '" + std::string(name) + "'");
}

Loss parse_loss(std::string_view name) {
  if (name == "cross_entropy") return Loss::cross_entropy;
  if (name == "sse") return Loss::sse;
  throw ArgumentError("unknown loss '" + std::string(name) + "'");
}

Tensor DenseParams::effective_weights() const {
  return gamma ? hadamard(weights, *gamma) : weights;
}

namespace {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

void softmax_rows(const Tensor& z, Tensor& out) {
  if (z.rank() != 2) throw DimensionError("softmax expects [batch x classes], got " + to_string(z.shape()));
  const std::size_t rows = z.dim(0), cols = z.dim(1);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* zr = z.data().data() + r * cols;
    double* outr = out.data().data() + r * cols;
    const double peak = *std::max_element(zr, zr + cols);
    double total = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      outr[c] = std::exp(zr[c] - peak);
      total += outr[c];
    }
    for (std::size_t c = 0; c < cols; ++c) outr[c] /= total;
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(what) + ": shapes differ, " + to_string(a.shape()) + " vs " +
                         to_string(b.shape()));
  }
}

void require_cache(const ForwardCache& cache, const char* what) {
  if (cache.z.empty()) throw StateError(std::string(what) + " called without a forward pass");
  if (cache.consumed) throw StateError(std::string(what) + ": forward cache already consumed");
}

}  // namespace

Tensor activation_apply(Activation kind, const Tensor& z) {
  Tensor out(z.shape());
  auto od = out.data();
  auto zd = z.data();
  switch (kind) {
    case Activation::sigmoid:
      for (std::size_t i = 0; i < zd.size(); ++i) od[i] = sigmoid(zd[i]);
      break;
    case Activation::relu:
      for (std::size_t i = 0; i < zd.size(); ++i) od[i] = zd[i] > 0.0 ? zd[i] : 0.0;
      break;
    case Activation::softmax:
      softmax_rows(z, out);
      break;
    case Activation::linear:
      return z;
  }
  return out;
}

Tensor activation_grad(Activation kind, const Tensor& z) {
  Tensor out(z.shape());
  auto od = out.data();
  auto zd = z.data();
  switch (kind) {
    case Activation::sigmoid:
      for (std::size_t i = 0; i < zd.size(); ++i) {
        const double s = sigmoid(zd[i]);
        od[i] = s * (1.0 - s);
      }
      break;
    case Activation::relu:
      for (std::size_t i = 0; i < zd.size(); ++i) od[i] = zd[i] > 0.0 ? 1.0 : 0.0;
      break;
    case Activation::softmax:
      throw ArgumentError("softmax has no element-wise derivative; use activation_backward");
    case Activation::linear:
      for (auto& v : od) v = 1.0;
      break;
  }
  return out;
}

Tensor activation_backward(Activation kind, const Tensor& z, const Tensor& a, const Tensor& upstream) {
  require_same_shape(z, upstream, "activation_backward");
  if (kind == Activation::softmax) {
    require_same_shape(a, upstream, "activation_backward");
    // dE/dz_i = s_i (g_i - sum_j s_j g_j), row by row.
    const std::size_t rows = a.dim(0), cols = a.dim(1);
    Tensor out(a.shape());
    for (std::size_t r = 0; r < rows; ++r) {
      double dot = 0.0;
      for (std::size_t c = 0; c < cols; ++c) dot += a.at(r, c) * upstream.at(r, c);
      for (std::size_t c = 0; c < cols; ++c) out.at(r, c) = a.at(r, c) * (upstream.at(r, c) - dot);
    }
    return out;
  }
  if (kind == Activation::linear) return upstream;
  Tensor out = activation_grad(kind, z);
  auto od = out.data();
  for (std::size_t i = 0; i < od.size(); ++i) od[i] *= upstream[i];
  return out;
}

LossResult loss_and_grad(Loss kind, const Tensor& output, const Tensor& target) {
  require_same_shape(output, target, "loss_and_grad");
  if (output.rank() != 2) throw DimensionError("loss expects [batch x outputs], got " + to_string(output.shape()));
  const std::size_t batch = output.dim(0), cols = output.dim(1);
  const double inv_batch = 1.0 / static_cast<double>(batch);
  LossResult result;
  result.grad = Tensor(output.shape());
  double total = 0.0;
  if (kind == Loss::sse) {
    for (std::size_t i = 0; i < output.size(); ++i) {
      const double r = output[i] - target[i];
      total += 0.5 * r * r;
      result.grad[i] = r * inv_batch;
    }
  } else {
    Tensor probs(output.shape());
    softmax_rows(output, probs);
    for (std::size_t r = 0; r < batch; ++r) {
      const double* zr = output.data().data() + r * cols;
      const double peak = *std::max_element(zr, zr + cols);
      double sum = 0.0;
      for (std::size_t c = 0; c < cols; ++c) sum += std::exp(zr[c] - peak);
      const double log_norm = peak + std::log(sum);
      for (std::size_t c = 0; c < cols; ++c) {
        const double y = target.at(r, c);
        if (y != 0.0) total -= y * (zr[c] - log_norm);
        result.grad.at(r, c) = (probs.at(r, c) - y) * inv_batch;
      }
    }
  }
  result.value = total * inv_batch;
  return result;
}

Tensor dense_forward(const DenseParams& params, const Tensor& x, Activation act, ForwardCache& cache) {
  if (params.gamma && params.gamma->shape() != params.weights.shape()) {
    throw DimensionError("gamma shape " + to_string(params.gamma->shape()) + " differs from weights " +
                         to_string(params.weights.shape()));
  }
  if (x.rank() != 2 || x.dim(1) != params.inputs()) {
    throw DimensionError("dense layer expects [batch x " + std::to_string(params.inputs()) + "], got " +
                         to_string(x.shape()));
  }
  Tensor z = matmul_nt(x, params.effective_weights());
  const std::size_t batch = z.dim(0), units = z.dim(1);
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t j = 0; j < units; ++j) z.at(b, j) += params.bias[j];
  Tensor a = activation_apply(act, z);
  cache.input = x;
  cache.z = std::move(z);
  cache.a = a;
  cache.consumed = false;
  return a;
}

DenseGrads dense_backward(const DenseParams& params, ForwardCache& cache, Activation act, const Tensor& upstream,
                          bool input_grad) {
  require_cache(cache, "dense_backward");
  return dense_backward_from_preactivation(params, cache, activation_backward(act, cache.z, cache.a, upstream),
                                           input_grad);
}

DenseGrads dense_backward_from_preactivation(const DenseParams& params, ForwardCache& cache, const Tensor& delta,
                                             bool input_grad) {
  require_cache(cache, "dense_backward");
  require_same_shape(cache.z, delta, "dense_backward");
  cache.consumed = true;
  DenseGrads grads;
  Tensor outer = matmul_tn(delta, cache.input);  // delta^T x, [units x inputs]
  if (params.gamma) {
    grads.weights = hadamard(outer, *params.gamma);
    grads.gamma = hadamard(outer, params.weights);
  } else {
    grads.weights = std::move(outer);
  }
  grads.bias = column_sum(delta);
  if (input_grad) grads.input = matmul(delta, params.effective_weights());
  return grads;
}

SamePadding same_padding(std::size_t in, std::size_t window, std::size_t stride) {
  const std::size_t out = (in + stride - 1) / stride;
  const std::size_t needed = (out - 1) * stride + window;
  const std::size_t total = needed > in ? needed - in : 0;
  return {out, total / 2};
}

namespace {

struct ConvGeometry {
  std::size_t batch, in_h, in_w, c_in, c_out, kh, kw, stride;
  SamePadding rows, cols;
};

ConvGeometry conv_geometry(const ConvParams& params, const Shape& input_shape) {
  if (params.kernels.rank() != 4) {
    throw DimensionError("conv kernels must be [kh x kw x c_in x c_out], got " + to_string(params.kernels.shape()));
  }
  if (params.stride == 0) throw ArgumentError("conv stride must be >= 1");
  if (input_shape.size() != 4) {
    throw DimensionError("conv input must be [batch x H x W x c], got " + to_string(input_shape));
  }
  if (input_shape[3] != params.in_channels()) {
    throw DimensionError("conv channel mismatch: input " + to_string(input_shape) + " vs kernels " +
                         to_string(params.kernels.shape()));
  }
  if (params.bias.size() != params.out_channels()) {
    throw DimensionError("conv bias must have " + std::to_string(params.out_channels()) + " entries");
  }
  ConvGeometry g{input_shape[0], input_shape[1], input_shape[2], params.in_channels(), params.out_channels(),
                 params.window_h(), params.window_w(), params.stride, {}, {}};
  g.rows = same_padding(g.in_h, g.kh, g.stride);
  g.cols = same_padding(g.in_w, g.kw, g.stride);
  return g;
}

}  // namespace

Tensor conv2d_forward(const ConvParams& params, const Tensor& x, Activation act, ForwardCache& cache) {
  const ConvGeometry g = conv_geometry(params, x.shape());
  if (act == Activation::softmax) throw ArgumentError("softmax is only valid on the output layer");
  Tensor z({g.batch, g.rows.out, g.cols.out, g.c_out});
  const double* xd = x.data().data();
  const double* kd = params.kernels.data().data();
  double* zd = z.data().data();
  for (std::size_t n = 0; n < g.batch; ++n) {
    for (std::size_t oy = 0; oy < g.rows.out; ++oy) {
      for (std::size_t ox = 0; ox < g.cols.out; ++ox) {
        double* zout = zd + ((n * g.rows.out + oy) * g.cols.out + ox) * g.c_out;
        for (std::size_t co = 0; co < g.c_out; ++co) zout[co] = params.bias[co];
        for (std::size_t ky = 0; ky < g.kh; ++ky) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * g.stride + ky) -
                                    static_cast<std::ptrdiff_t>(g.rows.pad_before);
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.in_h)) continue;
          for (std::size_t kx = 0; kx < g.kw; ++kx) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * g.stride + kx) -
                                      static_cast<std::ptrdiff_t>(g.cols.pad_before);
            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.in_w)) continue;
            const double* xin = xd + ((n * g.in_h + static_cast<std::size_t>(iy)) * g.in_w +
                                      static_cast<std::size_t>(ix)) * g.c_in;
            const double* ktap = kd + (ky * g.kw + kx) * g.c_in * g.c_out;
            for (std::size_t ci = 0; ci < g.c_in; ++ci) {
              const double xv = xin[ci];
              const double* krow = ktap + ci * g.c_out;
              for (std::size_t co = 0; co < g.c_out; ++co) zout[co] += xv * krow[co];
            }
          }
        }
      }
    }
  }
  Tensor a = activation_apply(act, z);
  cache.input = x;
  cache.z = std::move(z);
  cache.a = a;
  cache.consumed = false;
  return a;
}

ConvGrads conv2d_backward(const ConvParams& params, ForwardCache& cache, Activation act, const Tensor& upstream) {
  require_cache(cache, "conv2d_backward");
  return conv2d_backward_from_preactivation(params, cache, activation_backward(act, cache.z, cache.a, upstream));
}

ConvGrads conv2d_backward_from_preactivation(const ConvParams& params, ForwardCache& cache, const Tensor& delta) {
  require_cache(cache, "conv2d_backward");
  require_same_shape(cache.z, delta, "conv2d_backward");
  const ConvGeometry g = conv_geometry(params, cache.input.shape());
  cache.consumed = true;

  ConvGrads grads{Tensor(params.kernels.shape()), Tensor({g.c_out}), Tensor(cache.input.shape())};
  const double* xd = cache.input.data().data();
  const double* kd = params.kernels.data().data();
  const double* dd = delta.data().data();
  double* gk = grads.kernels.data().data();
  double* gx = grads.input.data().data();
  for (std::size_t n = 0; n < g.batch; ++n) {
    for (std::size_t oy = 0; oy < g.rows.out; ++oy) {
      for (std::size_t ox = 0; ox < g.cols.out; ++ox) {
        const double* dout = dd + ((n * g.rows.out + oy) * g.cols.out + ox) * g.c_out;
        for (std::size_t co = 0; co < g.c_out; ++co) grads.bias[co] += dout[co];
        for (std::size_t ky = 0; ky < g.kh; ++ky) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * g.stride + ky) -
                                    static_cast<std::ptrdiff_t>(g.rows.pad_before);
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.in_h)) continue;
          for (std::size_t kx = 0; kx < g.kw; ++kx) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * g.stride + kx) -
                                      static_cast<std::ptrdiff_t>(g.cols.pad_before);
            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.in_w)) continue;
            const std::size_t in_offset = ((n * g.in_h + static_cast<std::size_t>(iy)) * g.in_w +
                                           static_cast<std::size_t>(ix)) * g.c_in;
            const std::size_t tap = (ky * g.kw + kx) * g.c_in * g.c_out;
            for (std::size_t ci = 0; ci < g.c_in; ++ci) {
              const double xv = xd[in_offset + ci];
              const double* krow = kd + tap + ci * g.c_out;
              double* gkrow = gk + tap + ci * g.c_out;
              double acc = 0.0;
              for (std::size_t co = 0; co < g.c_out; ++co) {
                gkrow[co] += xv * dout[co];
                acc += krow[co] * dout[co];
              }
              gx[in_offset + ci] += acc;
            }
          }
        }
      }
    }
  }
  return grads;
}

}  // namespace dwnet
