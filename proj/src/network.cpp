#include "dh/network.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace dh {

namespace {

struct ShapeCursor {
  // Tracks the per-sample activation shape while walking a layer stack.
  std::vector<std::size_t> dims;

  std::size_t flat() const { return shape_product(dims); }
};

void advance_shape(ShapeCursor& cur, const LayerSpec& layer) {
  switch (layer.kind) {
    case LayerKind::Convolution: {
      if (cur.dims.size() != 3)
        throw std::runtime_error("conv layer needs a [C,H,W] input, got rank " +
                                 std::to_string(cur.dims.size()));
      std::size_t k = static_cast<std::size_t>(layer.filter_size);
      if (cur.dims[1] < k || cur.dims[2] < k)
        throw std::runtime_error("conv input " + shape_str(cur.dims) +
                                 " smaller than the filter");
      cur.dims = {static_cast<std::size_t>(layer.filter_count), cur.dims[1] - k + 1,
                  cur.dims[2] - k + 1};
      break;
    }
    case LayerKind::MaxPool: {
      if (cur.dims.size() != 3)
        throw std::runtime_error("pool layer needs a [C,H,W] input");
      std::size_t oh = cur.dims[1] / 2, ow = cur.dims[2] / 2;
      if (oh == 0 || ow == 0) throw std::runtime_error("pool input too small");
      cur.dims = {cur.dims[0], oh, ow};
      break;
    }
    case LayerKind::Dense:
    case LayerKind::SoftmaxOutput:
      cur.dims = {static_cast<std::size_t>(layer.unit_count)};
      break;
  }
}

}  // namespace

Tensor softmax(const Tensor& logits) {
  if (logits.rank() != 1) throw std::runtime_error("softmax: rank-1 tensor expected");
  double mx = logits.data[0];
  for (double v : logits.data) mx = std::max(mx, v);
  Tensor out = logits;
  double sum = 0.0;
  for (double& v : out.data) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (double& v : out.data) v /= sum;
  return out;
}

double categorical_cross_entropy(const Tensor& probs, const std::vector<int>& labels) {
  if (probs.rank() != 2) throw std::runtime_error("cross_entropy: probs must be [N,K]");
  std::size_t n = probs.shape[0], k = probs.shape[1];
  if (labels.size() != n)
    throw std::runtime_error("cross_entropy: " + std::to_string(labels.size()) + " labels for " +
                             std::to_string(n) + " rows");
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double row_sum = 0.0;
    for (std::size_t j = 0; j < k; ++j) row_sum += probs.at(i, j);
    if (std::abs(row_sum - 1.0) > 1e-6)
      throw std::runtime_error("cross_entropy: probability row " + std::to_string(i) +
                               " sums to " + std::to_string(row_sum));
    int y = labels[i];
    if (y < 0 || static_cast<std::size_t>(y) >= k)
      throw std::runtime_error("cross_entropy: label " + std::to_string(y) + " outside [0," +
                               std::to_string(k) + ")");
    total += -std::log(std::max(probs.at(i, static_cast<std::size_t>(y)), 1e-12));
  }
  return total / static_cast<double>(n);
}

Tensor conv2d_forward(const Tensor& input, const Tensor& filters, const Tensor& bias,
                      bool apply_relu) {
  if (input.rank() != 3) throw std::runtime_error("conv2d: input must be [C,H,W]");
  if (filters.rank() != 4) throw std::runtime_error("conv2d: filters must be [F,C,k,k]");
  std::size_t c = input.shape[0], h = input.shape[1], w = input.shape[2];
  std::size_t f = filters.shape[0], k = filters.shape[2];
  if (filters.shape[1] != c)
    throw std::runtime_error("conv2d: filter channels " + std::to_string(filters.shape[1]) +
                             " vs input channels " + std::to_string(c));
  if (h < k || w < k)
    throw std::runtime_error("conv2d: input " + shape_str(input.shape) +
                             " smaller than filter size " + std::to_string(k));
  std::size_t oh = h - k + 1, ow = w - k + 1;
  Tensor out = Tensor::zeros({f, oh, ow});
  for (std::size_t fi = 0; fi < f; ++fi) {
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t x = 0; x < ow; ++x) {
        double s = bias.data[fi];
        for (std::size_t ci = 0; ci < c; ++ci)
          for (std::size_t ky = 0; ky < k; ++ky)
            for (std::size_t kx = 0; kx < k; ++kx)
              s += input.at(ci, y + ky, x + kx) * filters.at(fi, ci, ky, kx);
        out.data[(fi * oh + y) * ow + x] = apply_relu ? std::max(0.0, s) : s;
      }
    }
  }
  return out;
}

std::pair<Tensor, std::vector<std::size_t>> maxpool_forward(const Tensor& input) {
  if (input.rank() != 3) throw std::runtime_error("maxpool: input must be [C,H,W]");
  std::size_t c = input.shape[0], h = input.shape[1], w = input.shape[2];
  std::size_t oh = h / 2, ow = w / 2;
  if (oh == 0 || ow == 0) throw std::runtime_error("maxpool: input too small");
  Tensor out = Tensor::zeros({c, oh, ow});
  std::vector<std::size_t> argmax(c * oh * ow);
  for (std::size_t ci = 0; ci < c; ++ci) {
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t x = 0; x < ow; ++x) {
        std::size_t best_idx = (ci * h + 2 * y) * w + 2 * x;
        double best = input.data[best_idx];
        for (std::size_t dy = 0; dy < 2; ++dy)
          for (std::size_t dx = 0; dx < 2; ++dx) {
            std::size_t idx = (ci * h + 2 * y + dy) * w + 2 * x + dx;
            if (input.data[idx] > best) {  // first maximum wins ties
              best = input.data[idx];
              best_idx = idx;
            }
          }
        out.data[(ci * oh + y) * ow + x] = best;
        argmax[(ci * oh + y) * ow + x] = best_idx;
      }
    }
  }
  return {std::move(out), std::move(argmax)};
}

TrainedNetwork init_network(const ArchitectureSpec& spec, std::uint64_t seed) {
  TrainedNetwork net;
  net.spec = spec;
  net.seed = seed;
  net.epochs_trained = 0;
  Rng rng(derive_seed(seed, "init"));

  ShapeCursor cur{spec.input_shape};
  for (const LayerSpec& layer : spec.layers) {
    LayerParams p, v;
    switch (layer.kind) {
      case LayerKind::Convolution: {
        std::size_t c = cur.dims[0];
        std::size_t f = static_cast<std::size_t>(layer.filter_count);
        std::size_t k = static_cast<std::size_t>(layer.filter_size);
        double fan_in = static_cast<double>(c * k * k);
        double fan_out = static_cast<double>(f * k * k);
        double limit = std::sqrt(6.0 / (fan_in + fan_out));
        std::vector<double> wv(f * c * k * k);
        for (double& x : wv) x = rng.uniform(-limit, limit);
        p.weights = Tensor({f, c, k, k}, std::move(wv));
        p.bias = Tensor::zeros({f});
        break;
      }
      case LayerKind::Dense:
      case LayerKind::SoftmaxOutput: {
        std::size_t din = cur.flat();
        std::size_t u = static_cast<std::size_t>(layer.unit_count);
        double limit = std::sqrt(6.0 / (static_cast<double>(din) + static_cast<double>(u)));
        std::vector<double> wv(din * u);
        for (double& x : wv) x = rng.uniform(-limit, limit);
        p.weights = Tensor({din, u}, std::move(wv));
        p.bias = Tensor::zeros({u});
        break;
      }
      case LayerKind::MaxPool:
        break;  // no parameters
    }
    if (p.has_params()) {
      v.weights = Tensor::zeros(p.weights.shape);
      v.bias = Tensor::zeros(p.bias.shape);
    }
    net.parameters.push_back(std::move(p));
    net.velocities.push_back(std::move(v));
    advance_shape(cur, layer);
  }
  return net;
}

namespace {

// Columns for a whole batch: row (n,oh,ow), column (c,ky,kx).
Tensor im2col(const Tensor& batch, std::size_t k) {
  std::size_t n = batch.shape[0], c = batch.shape[1], h = batch.shape[2], w = batch.shape[3];
  std::size_t oh = h - k + 1, ow = w - k + 1;
  Tensor cols = Tensor::zeros({n * oh * ow, c * k * k});
  const double* src = batch.data.data();
  double* dst = cols.data.data();
  std::size_t ckk = c * k * k;
  for (std::size_t ni = 0; ni < n; ++ni) {
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t x = 0; x < ow; ++x) {
        double* row = dst + ((ni * oh + y) * ow + x) * ckk;
        std::size_t col = 0;
        for (std::size_t ci = 0; ci < c; ++ci) {
          const double* plane = src + (ni * c + ci) * h * w;
          for (std::size_t ky = 0; ky < k; ++ky) {
            const double* line = plane + (y + ky) * w + x;
            for (std::size_t kx = 0; kx < k; ++kx) row[col++] = line[kx];
          }
        }
      }
    }
  }
  return cols;
}

void col2im_add(const Tensor& dcols, std::size_t n, std::size_t c, std::size_t h, std::size_t w,
                std::size_t k, Tensor& dx) {
  std::size_t oh = h - k + 1, ow = w - k + 1;
  std::size_t ckk = c * k * k;
  const double* src = dcols.data.data();
  double* dst = dx.data.data();
  for (std::size_t ni = 0; ni < n; ++ni) {
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t x = 0; x < ow; ++x) {
        const double* row = src + ((ni * oh + y) * ow + x) * ckk;
        std::size_t col = 0;
        for (std::size_t ci = 0; ci < c; ++ci) {
          double* plane = dst + (ni * c + ci) * h * w;
          for (std::size_t ky = 0; ky < k; ++ky) {
            double* line = plane + (y + ky) * w + x;
            for (std::size_t kx = 0; kx < k; ++kx) line[kx] += row[col++];
          }
        }
      }
    }
  }
}

// [N*OH*OW, F] -> [N,F,OH,OW]
Tensor rows_to_maps(const Tensor& m, std::size_t n, std::size_t f, std::size_t oh,
                    std::size_t ow) {
  Tensor out = Tensor::zeros({n, f, oh, ow});
  const double* src = m.data.data();
  double* dst = out.data.data();
  for (std::size_t ni = 0; ni < n; ++ni)
    for (std::size_t y = 0; y < oh; ++y)
      for (std::size_t x = 0; x < ow; ++x) {
        const double* row = src + ((ni * oh + y) * ow + x) * f;
        for (std::size_t fi = 0; fi < f; ++fi)
          dst[((ni * f + fi) * oh + y) * ow + x] = row[fi];
      }
  return out;
}

// [N,F,OH,OW] -> [N*OH*OW, F]
Tensor maps_to_rows(const Tensor& t) {
  std::size_t n = t.shape[0], f = t.shape[1], oh = t.shape[2], ow = t.shape[3];
  Tensor out = Tensor::zeros({n * oh * ow, f});
  const double* src = t.data.data();
  double* dst = out.data.data();
  for (std::size_t ni = 0; ni < n; ++ni)
    for (std::size_t fi = 0; fi < f; ++fi)
      for (std::size_t y = 0; y < oh; ++y)
        for (std::size_t x = 0; x < ow; ++x)
          dst[((ni * oh + y) * ow + x) * f + fi] = src[((ni * f + fi) * oh + y) * ow + x];
  return out;
}

Tensor sample_mask(std::size_t n, std::size_t d, double p, Rng& rng) {
  Tensor mask = Tensor::zeros({n, d});
  double scale = 1.0 / (1.0 - p);
  for (std::size_t i = 0; i < n * d; ++i) mask.data[i] = rng.uniform() < p ? 0.0 : scale;
  return mask;
}

}  // namespace

ForwardTrace forward(const TrainedNetwork& net, const Tensor& batch, Mode mode, Rng* dropout_rng,
                     const std::vector<Tensor>* frozen_masks) {
  const ArchitectureSpec& spec = net.spec;
  if (batch.rank() < 2) throw std::runtime_error("forward: batch must have a leading N dim");
  {
    std::vector<std::size_t> per_sample(batch.shape.begin() + 1, batch.shape.end());
    if (shape_product(per_sample) != shape_product(spec.input_shape))
      throw std::runtime_error("forward: sample shape " + shape_str(per_sample) +
                               " incompatible with input " + shape_str(spec.input_shape));
  }
  std::size_t n = batch.shape[0];

  ForwardTrace trace;
  trace.layers.resize(spec.layers.size());

  // Working activation, normalized to the canonical layout for each stage.
  std::vector<std::size_t> full_shape = {n};
  for (std::size_t d : spec.input_shape) full_shape.push_back(d);
  Tensor cur = batch.reshaped(full_shape);

  for (std::size_t li = 0; li < spec.layers.size(); ++li) {
    const LayerSpec& layer = spec.layers[li];
    const LayerParams& par = net.parameters[li];
    LayerTrace& lt = trace.layers[li];

    switch (layer.kind) {
      case LayerKind::Convolution: {
        std::size_t k = static_cast<std::size_t>(layer.filter_size);
        std::size_t f = static_cast<std::size_t>(layer.filter_count);
        std::size_t h = cur.shape[2], w = cur.shape[3];
        std::size_t oh = h - k + 1, ow = w - k + 1;
        lt.input = cur;
        lt.im2col = im2col(cur, k);
        Tensor wflat = par.weights.reshaped({f, par.weights.size() / f});
        Tensor m = matmul_nt(lt.im2col, wflat);  // [N*OH*OW, F]
        for (std::size_t r = 0; r < m.shape[0]; ++r)
          for (std::size_t fi = 0; fi < f; ++fi) m.data[r * f + fi] += par.bias.data[fi];
        lt.pre_act = rows_to_maps(m, n, f, oh, ow);
        lt.output = lt.pre_act;
        for (double& v : lt.output.data) v = std::max(0.0, v);
        cur = lt.output;
        break;
      }
      case LayerKind::MaxPool: {
        std::size_t c = cur.shape[1], h = cur.shape[2], w = cur.shape[3];
        std::size_t oh = h / 2, ow = w / 2;
        lt.input = cur;
        Tensor out = Tensor::zeros({n, c, oh, ow});
        lt.pool_argmax.resize(n * c * oh * ow);
        const double* src = cur.data.data();
        for (std::size_t ni = 0; ni < n; ++ni)
          for (std::size_t ci = 0; ci < c; ++ci) {
            const double* plane = src + (ni * c + ci) * h * w;
            std::size_t plane_off = (ni * c + ci) * h * w;
            for (std::size_t y = 0; y < oh; ++y)
              for (std::size_t x = 0; x < ow; ++x) {
                std::size_t best_local = (2 * y) * w + 2 * x;
                double best = plane[best_local];
                for (std::size_t dy = 0; dy < 2; ++dy)
                  for (std::size_t dx = 0; dx < 2; ++dx) {
                    std::size_t idx = (2 * y + dy) * w + 2 * x + dx;
                    if (plane[idx] > best) {
                      best = plane[idx];
                      best_local = idx;
                    }
                  }
                std::size_t cell = ((ni * c + ci) * oh + y) * ow + x;
                out.data[cell] = best;
                lt.pool_argmax[cell] = plane_off + best_local;
              }
          }
        lt.output = out;
        cur = std::move(out);
        break;
      }
      case LayerKind::Dense:
      case LayerKind::SoftmaxOutput: {
        std::size_t din = 1;
        for (std::size_t i = 1; i < cur.rank(); ++i) din *= cur.shape[i];
        Tensor x = cur.reshaped({n, din});

        Tensor xd;
        if (mode == Mode::Train) {
          if (frozen_masks) {
            if (li >= frozen_masks->size() || (*frozen_masks)[li].data.empty())
              throw std::runtime_error("forward: frozen mask missing for layer " +
                                       std::to_string(li));
            lt.dropout_mask = (*frozen_masks)[li];
          } else {
            if (!dropout_rng)
              throw std::runtime_error("forward: train mode needs a dropout rng or frozen masks");
            lt.dropout_mask = sample_mask(n, din, layer.dropout_rate, *dropout_rng);
          }
          xd = elementwise(x, lt.dropout_mask, Elementwise::Mul);
        } else {
          xd = x;
        }
        lt.input = xd;

        Tensor z = matmul(xd, par.weights);  // [N,U]
        std::size_t u = par.bias.size();
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < u; ++j) z.data[i * u + j] += par.bias.data[j];
        lt.pre_act = z;

        if (layer.kind == LayerKind::Dense) {
          lt.output = z;
          for (double& v : lt.output.data) v = std::max(0.0, v);
        } else {
          lt.output = z;
          for (std::size_t i = 0; i < n; ++i) {
            double* row = lt.output.data.data() + i * u;
            double mx = row[0];
            for (std::size_t j = 1; j < u; ++j) mx = std::max(mx, row[j]);
            double sum = 0.0;
            for (std::size_t j = 0; j < u; ++j) {
              row[j] = std::exp(row[j] - mx);
              sum += row[j];
            }
            for (std::size_t j = 0; j < u; ++j) row[j] /= sum;
          }
        }
        cur = lt.output;
        break;
      }
    }
  }

  if (spec.layers.back().kind == LayerKind::SoftmaxOutput) trace.probs = cur;
  return trace;
}

Gradients backward(const TrainedNetwork& net, const ForwardTrace& trace,
                   const std::vector<int>& labels) {
  const ArchitectureSpec& spec = net.spec;
  if (spec.layers.back().kind != LayerKind::SoftmaxOutput)
    throw std::runtime_error("backward: network must end in SoftmaxOutput");
  std::size_t n = trace.probs.shape[0];
  std::size_t k = trace.probs.shape[1];
  if (labels.size() != n) throw std::runtime_error("backward: label count mismatch");

  Gradients grads;
  grads.layers.resize(spec.layers.size());

  // dL/dz for the softmax layer: (probs - onehot)/N.
  Tensor delta = trace.probs;
  for (std::size_t i = 0; i < n; ++i) {
    int y = labels[i];
    if (y < 0 || static_cast<std::size_t>(y) >= k)
      throw std::runtime_error("backward: label out of range");
    delta.data[i * k + static_cast<std::size_t>(y)] -= 1.0;
  }
  for (double& v : delta.data) v /= static_cast<double>(n);

  for (std::size_t li = spec.layers.size(); li-- > 0;) {
    const LayerSpec& layer = spec.layers[li];
    const LayerParams& par = net.parameters[li];
    const LayerTrace& lt = trace.layers[li];
    LayerParams& g = grads.layers[li];

    switch (layer.kind) {
      case LayerKind::SoftmaxOutput:
      case LayerKind::Dense: {
        Tensor dz;
        if (layer.kind == LayerKind::SoftmaxOutput) {
          dz = std::move(delta);
        } else {
          dz = std::move(delta);  // delta currently holds dL/d(output) for this layer
          for (std::size_t i = 0; i < dz.size(); ++i)
            if (lt.pre_act.data[i] <= 0.0) dz.data[i] = 0.0;
        }
        g.weights = matmul_tn(lt.input, dz);  // [Din,U]
        std::size_t u = par.bias.size();
        g.bias = Tensor::zeros({u});
        for (std::size_t i = 0; i < dz.shape[0]; ++i)
          for (std::size_t j = 0; j < u; ++j) g.bias.data[j] += dz.data[i * u + j];

        Tensor dx = matmul_nt(dz, par.weights);  // [N,Din]
        if (!lt.dropout_mask.data.empty()) dx = elementwise(dx, lt.dropout_mask, Elementwise::Mul);
        // Restore the previous layer's output layout.
        if (li > 0) {
          const Tensor& prev_out = trace.layers[li - 1].output;
          delta = dx.reshaped(prev_out.shape);
        } else {
          delta = std::move(dx);
        }
        break;
      }
      case LayerKind::MaxPool: {
        Tensor dx = Tensor::zeros(lt.input.shape);
        for (std::size_t cell = 0; cell < lt.pool_argmax.size(); ++cell)
          dx.data[lt.pool_argmax[cell]] += delta.data[cell];
        delta = std::move(dx);
        break;
      }
      case LayerKind::Convolution: {
        std::size_t f = static_cast<std::size_t>(layer.filter_count);
        std::size_t kk = static_cast<std::size_t>(layer.filter_size);
        // Gate through ReLU.
        Tensor dout = std::move(delta);
        for (std::size_t i = 0; i < dout.size(); ++i)
          if (lt.pre_act.data[i] <= 0.0) dout.data[i] = 0.0;
        Tensor dm = maps_to_rows(dout);  // [N*OH*OW, F]

        Tensor wflat = par.weights.reshaped({f, par.weights.size() / f});
        Tensor dwflat = matmul_tn(dm, lt.im2col);  // [F, C*k*k]
        g.weights = dwflat.reshaped(par.weights.shape);
        g.bias = Tensor::zeros({f});
        for (std::size_t r = 0; r < dm.shape[0]; ++r)
          for (std::size_t fi = 0; fi < f; ++fi) g.bias.data[fi] += dm.data[r * f + fi];

        Tensor dcols = matmul(dm, wflat);  // [N*OH*OW, C*k*k]
        std::size_t nn = lt.input.shape[0], c = lt.input.shape[1], h = lt.input.shape[2],
                    w = lt.input.shape[3];
        Tensor dx = Tensor::zeros(lt.input.shape);
        col2im_add(dcols, nn, c, h, w, kk, dx);
        delta = std::move(dx);
        break;
      }
    }
  }
  return grads;
}

void sgd_momentum_step(TrainedNetwork& net, const Gradients& grads) {
  double eta = net.spec.learning_rate, mu = net.spec.momentum;
  for (std::size_t li = 0; li < net.parameters.size(); ++li) {
    if (!net.parameters[li].has_params()) continue;
    const LayerParams& g = grads.layers[li];
    LayerParams& v = net.velocities[li];
    LayerParams& p = net.parameters[li];
    for (std::size_t i = 0; i < p.weights.size(); ++i) {
      v.weights.data[i] = mu * v.weights.data[i] - eta * g.weights.data[i];
      p.weights.data[i] += v.weights.data[i];
    }
    for (std::size_t i = 0; i < p.bias.size(); ++i) {
      v.bias.data[i] = mu * v.bias.data[i] - eta * g.bias.data[i];
      p.bias.data[i] += v.bias.data[i];
    }
  }
}

namespace {

Tensor gather_batch(const Dataset& ds, const std::vector<std::size_t>& perm, std::size_t begin,
                    std::size_t count, std::vector<int>& labels_out) {
  std::size_t d = ds.sample_dim();
  std::vector<std::size_t> shape = ds.features.shape;
  shape[0] = count;
  Tensor batch = Tensor::zeros(shape);
  labels_out.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::size_t src = perm[begin + i];
    std::copy_n(ds.features.data.begin() + static_cast<std::ptrdiff_t>(src * d), d,
                batch.data.begin() + static_cast<std::ptrdiff_t>(i * d));
    labels_out[i] = ds.labels[src];
  }
  return batch;
}

}  // namespace

TrainedNetwork train(const ArchitectureSpec& spec, const Dataset& train_set, int epochs,
                     std::uint64_t seed) {
  if (train_set.size() == 0) throw std::runtime_error("train: empty dataset");
  for (int l : train_set.labels)
    if (l < 0 || l >= spec.class_count)
      throw std::runtime_error("train: label " + std::to_string(l) + " outside class_count " +
                               std::to_string(spec.class_count));

  TrainedNetwork net = init_network(spec, seed);
  Rng shuffle_rng(derive_seed(seed, "shuffle"));
  Rng dropout_rng(derive_seed(seed, "dropout"));

  constexpr std::size_t kBatch = 128;
  std::size_t n = train_set.size();
  std::vector<int> batch_labels;
  for (int e = 0; e < epochs; ++e) {
    std::vector<std::size_t> perm = shuffle_rng.permutation(n);
    for (std::size_t start = 0; start < n; start += kBatch) {
      std::size_t count = std::min(kBatch, n - start);
      Tensor batch = gather_batch(train_set, perm, start, count, batch_labels);
      ForwardTrace trace = forward(net, batch, Mode::Train, &dropout_rng);
      Gradients grads = backward(net, trace, batch_labels);
      sgd_momentum_step(net, grads);
    }
  }
  net.epochs_trained = epochs;
  return net;
}

FeatureExtractor strip_softmax(const TrainedNetwork& net) {
  if (net.spec.layers.empty() || net.spec.layers.back().kind != LayerKind::SoftmaxOutput)
    throw std::runtime_error("strip_softmax: network does not end in a SoftmaxOutput layer");
  FeatureExtractor fx;
  fx.spec = net.spec;
  fx.spec.layers.pop_back();
  fx.parameters.assign(net.parameters.begin(), net.parameters.end() - 1);
  if (fx.spec.layers.empty() || fx.spec.layers.back().kind != LayerKind::Dense)
    throw std::runtime_error("strip_softmax: expected a Dense layer before the softmax head");
  fx.output_dim = fx.spec.layers.back().unit_count;
  return fx;
}

Tensor extract_features(const FeatureExtractor& fx, const Tensor& batch) {
  // Reuse the forward machinery on the truncated stack; infer mode, no dropout.
  TrainedNetwork shim;
  shim.spec = fx.spec;
  shim.parameters = fx.parameters;
  ForwardTrace trace = forward(shim, batch, Mode::Infer);
  Tensor out = trace.layers.back().output;
  return out.reshaped({batch.shape[0], static_cast<std::size_t>(fx.output_dim)});
}

Tensor extract_features(const FeatureExtractor& fx, const Dataset& data) {
  constexpr std::size_t kChunk = 256;
  std::size_t n = data.size(), d = data.sample_dim();
  Tensor out = Tensor::zeros({n, static_cast<std::size_t>(fx.output_dim)});
  std::size_t od = static_cast<std::size_t>(fx.output_dim);
  for (std::size_t start = 0; start < n; start += kChunk) {
    std::size_t count = std::min(kChunk, n - start);
    std::vector<std::size_t> shape = data.features.shape;
    shape[0] = count;
    Tensor chunk = Tensor::zeros(shape);
    std::copy_n(data.features.data.begin() + static_cast<std::ptrdiff_t>(start * d), count * d,
                chunk.data.begin());
    Tensor feats = extract_features(fx, chunk);
    std::copy_n(feats.data.begin(), count * od,
                out.data.begin() + static_cast<std::ptrdiff_t>(start * od));
  }
  return out;
}

std::vector<double*> parameter_pointers(TrainedNetwork& net) {
  std::vector<double*> out;
  for (LayerParams& p : net.parameters) {
    if (!p.has_params()) continue;
    for (double& v : p.weights.data) out.push_back(&v);
    for (double& v : p.bias.data) out.push_back(&v);
  }
  return out;
}

std::vector<const double*> gradient_pointers(const Gradients& grads) {
  std::vector<const double*> out;
  for (const LayerParams& p : grads.layers) {
    if (p.weights.data.empty() && p.bias.data.empty()) continue;
    for (const double& v : p.weights.data) out.push_back(&v);
    for (const double& v : p.bias.data) out.push_back(&v);
  }
  return out;
}

}  // namespace dh
