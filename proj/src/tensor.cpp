#include "scdr/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>
#include <utility>

#include "scdr/errors.hpp"

namespace scdr {

struct Tensor::Impl {
  std::vector<int> shape;
  std::vector<float> value;
  std::vector<float> grad;  // empty until backward touches this tensor
  bool requires_grad = false;
  bool produced = false;  // output of a graph op
};

namespace {

int checked_numel(const std::vector<int>& shape) {
  if (shape.empty()) throw DimensionError("tensor shape must have at least one axis");
  long long n = 1;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (shape[i] <= 0)
      throw DimensionError("tensor extent must be positive on axis " + std::to_string(i));
    n *= shape[i];
    if (n > (1ll << 31)) throw DimensionError("tensor too large");
  }
  return static_cast<int>(n);
}

bool needs_grad(const Tensor::Impl* t) { return t->requires_grad || t->produced; }

std::vector<float>& grad_buf(Tensor::Impl* t) {
  if (t->grad.empty()) t->grad.assign(t->value.size(), 0.0f);
  return t->grad;
}

void check_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() == b.shape()) return;
  const auto& sa = a.shape();
  const auto& sb = b.shape();
  std::size_t axis = 0;
  while (axis < sa.size() && axis < sb.size() && sa[axis] == sb[axis]) ++axis;
  throw DimensionError(std::string(op) + ": shape mismatch on axis " + std::to_string(axis));
}

}  // namespace

Tensor Tensor::zeros(std::vector<int> shape, bool requires_grad) {
  Tensor t;
  t.impl_ = std::make_shared<Impl>();
  const int n = checked_numel(shape);
  t.impl_->shape = std::move(shape);
  t.impl_->value.assign(static_cast<std::size_t>(n), 0.0f);
  t.impl_->requires_grad = requires_grad;
  return t;
}

Tensor Tensor::full(std::vector<int> shape, float value, bool requires_grad) {
  Tensor t = zeros(std::move(shape), requires_grad);
  std::fill(t.impl_->value.begin(), t.impl_->value.end(), value);
  return t;
}

Tensor Tensor::from_data(std::vector<int> shape, std::vector<float> data, bool requires_grad) {
  const int n = checked_numel(shape);
  if (static_cast<std::size_t>(n) != data.size())
    throw DimensionError("from_data: shape expects " + std::to_string(n) + " elements, got " +
                         std::to_string(data.size()));
  Tensor t;
  t.impl_ = std::make_shared<Impl>();
  t.impl_->shape = std::move(shape);
  t.impl_->value = std::move(data);
  t.impl_->requires_grad = requires_grad;
  return t;
}

Tensor Tensor::scalar(float value, bool requires_grad) {
  return from_data({1}, {value}, requires_grad);
}

Tensor::Impl* Tensor::impl() const {
  if (!impl_) throw StateError("operation on an undefined tensor");
  return impl_.get();
}

const std::vector<int>& Tensor::shape() const { return impl()->shape; }
int Tensor::ndim() const { return static_cast<int>(impl()->shape.size()); }

int Tensor::dim(int axis) const {
  const auto& s = impl()->shape;
  if (axis < 0 || axis >= static_cast<int>(s.size()))
    throw IndexError("dim: axis " + std::to_string(axis) + " out of range");
  return s[axis];
}

int Tensor::numel() const { return static_cast<int>(impl()->value.size()); }

std::span<const float> Tensor::value() const { return impl()->value; }
std::span<float> Tensor::value() { return impl()->value; }

float Tensor::item() const {
  if (numel() != 1) throw DimensionError("item: tensor is not scalar");
  return impl()->value[0];
}

bool Tensor::requires_grad() const { return impl()->requires_grad; }
void Tensor::set_requires_grad(bool on) { impl()->requires_grad = on; }
bool Tensor::has_grad() const { return !impl()->grad.empty(); }

std::span<const float> Tensor::grad() const {
  if (impl()->grad.empty()) throw StateError("grad: no gradient populated");
  return impl()->grad;
}

void Tensor::clear_grad() { impl()->grad.clear(); }

Tensor Tensor::detach() const {
  Tensor t;
  t.impl_ = std::make_shared<Impl>();
  t.impl_->shape = impl()->shape;
  t.impl_->value = impl()->value;
  return t;
}

// ---------------------------------------------------------------------------
// Graph

Tensor Graph::make_output(std::vector<int> shape) {
  Tensor t = Tensor::zeros(std::move(shape));
  t.impl_->produced = true;
  return t;
}

void Graph::record(const char* op, std::function<void()> pull) {
  nodes_.push_back(Node{op, std::move(pull)});
}

void Graph::clear() {
  nodes_.clear();
  consumed_ = false;
}

void Graph::backward(const Tensor& loss) {
  if (consumed_) throw StateError("backward: graph already consumed; call clear() first");
  if (!loss.defined() || loss.numel() != 1)
    throw DimensionError("backward: loss must be a scalar tensor");
  consumed_ = true;
  grad_buf(loss.impl()).assign(1, 1.0f);
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) it->pull();
}

Tensor Graph::reshape(const Tensor& a, std::vector<int> shape) {
  const int n = checked_numel(shape);
  if (n != a.numel())
    throw DimensionError("reshape: element count mismatch (" + std::to_string(a.numel()) +
                         " vs " + std::to_string(n) + ")");
  Tensor out = make_output(std::move(shape));
  std::copy(a.value().begin(), a.value().end(), out.value().begin());
  auto ai = a.impl_, oi = out.impl_;
  record("reshape", [ai, oi]() {
    if (oi->grad.empty() || !needs_grad(ai.get())) return;
    auto& ga = grad_buf(ai.get());
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += oi->grad[i];
  });
  return out;
}

Tensor Graph::add(const Tensor& a, const Tensor& b) {
  check_same_shape("add", a, b);
  Tensor out = make_output(a.shape());
  auto va = a.value(), vb = b.value();
  auto vo = out.value();
  for (int i = 0; i < a.numel(); ++i) vo[i] = va[i] + vb[i];
  auto ai = a.impl_, bi = b.impl_, oi = out.impl_;
  record("add", [ai, bi, oi]() {
    if (oi->grad.empty()) return;
    if (needs_grad(ai.get())) {
      auto& ga = grad_buf(ai.get());
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += oi->grad[i];
    }
    if (needs_grad(bi.get())) {
      auto& gb = grad_buf(bi.get());
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += oi->grad[i];
    }
  });
  return out;
}

Tensor Graph::sub(const Tensor& a, const Tensor& b) {
  check_same_shape("sub", a, b);
  Tensor out = make_output(a.shape());
  auto va = a.value(), vb = b.value();
  auto vo = out.value();
  for (int i = 0; i < a.numel(); ++i) vo[i] = va[i] - vb[i];
  auto ai = a.impl_, bi = b.impl_, oi = out.impl_;
  record("sub", [ai, bi, oi]() {
    if (oi->grad.empty()) return;
    if (needs_grad(ai.get())) {
      auto& ga = grad_buf(ai.get());
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += oi->grad[i];
    }
    if (needs_grad(bi.get())) {
      auto& gb = grad_buf(bi.get());
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] -= oi->grad[i];
    }
  });
  return out;
}

Tensor Graph::mul(const Tensor& a, const Tensor& b) {
  check_same_shape("mul", a, b);
  Tensor out = make_output(a.shape());
  auto va = a.value(), vb = b.value();
  auto vo = out.value();
  for (int i = 0; i < a.numel(); ++i) vo[i] = va[i] * vb[i];
  auto ai = a.impl_, bi = b.impl_, oi = out.impl_;
  record("mul", [ai, bi, oi]() {
    if (oi->grad.empty()) return;
    if (needs_grad(ai.get())) {
      auto& ga = grad_buf(ai.get());
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += oi->grad[i] * bi->value[i];
    }
    if (needs_grad(bi.get())) {
      auto& gb = grad_buf(bi.get());
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += oi->grad[i] * ai->value[i];
    }
  });
  return out;
}

Tensor Graph::scale(const Tensor& a, float factor) {
  Tensor out = make_output(a.shape());
  auto va = a.value();
  auto vo = out.value();
  for (int i = 0; i < a.numel(); ++i) vo[i] = va[i] * factor;
  auto ai = a.impl_, oi = out.impl_;
  record("scale", [ai, oi, factor]() {
    if (oi->grad.empty() || !needs_grad(ai.get())) return;
    auto& ga = grad_buf(ai.get());
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += oi->grad[i] * factor;
  });
  return out;
}

Tensor Graph::add_const(const Tensor& a, float value) {
  Tensor out = make_output(a.shape());
  auto va = a.value();
  auto vo = out.value();
  for (int i = 0; i < a.numel(); ++i) vo[i] = va[i] + value;
  auto ai = a.impl_, oi = out.impl_;
  record("add_const", [ai, oi]() {
    if (oi->grad.empty() || !needs_grad(ai.get())) return;
    auto& ga = grad_buf(ai.get());
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += oi->grad[i];
  });
  return out;
}

Tensor Graph::scale_by(const Tensor& a, const Tensor& factor) {
  if (factor.numel() != 1) throw DimensionError("scale_by: factor must be scalar");
  Tensor out = make_output(a.shape());
  const float s = factor.value()[0];
  auto va = a.value();
  auto vo = out.value();
  for (int i = 0; i < a.numel(); ++i) vo[i] = va[i] * s;
  auto ai = a.impl_, fi = factor.impl_, oi = out.impl_;
  record("scale_by", [ai, fi, oi]() {
    if (oi->grad.empty()) return;
    const float s = fi->value[0];
    if (needs_grad(ai.get())) {
      auto& ga = grad_buf(ai.get());
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += oi->grad[i] * s;
    }
    if (needs_grad(fi.get())) {
      double acc = 0.0;
      for (std::size_t i = 0; i < ai->value.size(); ++i)
        acc += static_cast<double>(oi->grad[i]) * ai->value[i];
      grad_buf(fi.get())[0] += static_cast<float>(acc);
    }
  });
  return out;
}

Tensor Graph::index(const Tensor& a, int flat_index) {
  if (flat_index < 0 || flat_index >= a.numel())
    throw IndexError("index: position " + std::to_string(flat_index) + " out of range");
  Tensor out = make_output({1});
  out.value()[0] = a.value()[flat_index];
  auto ai = a.impl_, oi = out.impl_;
  record("index", [ai, oi, flat_index]() {
    if (oi->grad.empty() || !needs_grad(ai.get())) return;
    grad_buf(ai.get())[flat_index] += oi->grad[0];
  });
  return out;
}

Tensor Graph::sum(const Tensor& a) {
  Tensor out = make_output({1});
  double acc = 0.0;
  for (float v : a.value()) acc += v;
  out.value()[0] = static_cast<float>(acc);
  auto ai = a.impl_, oi = out.impl_;
  record("sum", [ai, oi]() {
    if (oi->grad.empty() || !needs_grad(ai.get())) return;
    auto& ga = grad_buf(ai.get());
    const float g = oi->grad[0];
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g;
  });
  return out;
}

Tensor Graph::dot(const Tensor& a, const Tensor& b) {
  if (a.numel() != b.numel())
    throw DimensionError("dot: element count mismatch on axis 0");
  Tensor out = make_output({1});
  auto va = a.value(), vb = b.value();
  double acc = 0.0;
  for (int i = 0; i < a.numel(); ++i) acc += static_cast<double>(va[i]) * vb[i];
  out.value()[0] = static_cast<float>(acc);
  auto ai = a.impl_, bi = b.impl_, oi = out.impl_;
  record("dot", [ai, bi, oi]() {
    if (oi->grad.empty()) return;
    const float g = oi->grad[0];
    if (needs_grad(ai.get())) {
      auto& ga = grad_buf(ai.get());
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g * bi->value[i];
    }
    if (needs_grad(bi.get())) {
      auto& gb = grad_buf(bi.get());
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g * ai->value[i];
    }
  });
  return out;
}

Tensor Graph::relu(const Tensor& a) {
  Tensor out = make_output(a.shape());
  auto va = a.value();
  auto vo = out.value();
  for (int i = 0; i < a.numel(); ++i) vo[i] = va[i] > 0.0f ? va[i] : 0.0f;
  auto ai = a.impl_, oi = out.impl_;
  record("relu", [ai, oi]() {
    if (oi->grad.empty() || !needs_grad(ai.get())) return;
    auto& ga = grad_buf(ai.get());
    for (std::size_t i = 0; i < ga.size(); ++i)
      if (ai->value[i] > 0.0f) ga[i] += oi->grad[i];
  });
  return out;
}

Tensor Graph::conv2d(const Tensor& input, const Tensor& kernel, const Tensor& bias,
                     int stride, int padding) {
  if (input.ndim() != 3)
    throw DimensionError("conv2d: input must be h×w×c_in (3 axes), got " +
                         std::to_string(input.ndim()));
  if (kernel.ndim() != 4)
    throw DimensionError("conv2d: kernel must be k×k×c_in×c_out (4 axes), got " +
                         std::to_string(kernel.ndim()));
  const int h = input.dim(0), w = input.dim(1), cin = input.dim(2);
  const int k = kernel.dim(0);
  if (kernel.dim(1) != k)
    throw DimensionError("conv2d: kernel must be square, axis 1 is " +
                         std::to_string(kernel.dim(1)) + " vs axis 0 " + std::to_string(k));
  if (kernel.dim(2) != cin)
    throw DimensionError("conv2d: channel mismatch on axis 2: input has " +
                         std::to_string(cin) + ", kernel expects " +
                         std::to_string(kernel.dim(2)));
  const int cout = kernel.dim(3);
  if (bias.ndim() != 1 || bias.dim(0) != cout)
    throw DimensionError("conv2d: bias mismatch on axis 0: kernel produces " +
                         std::to_string(cout) + " channels, bias has " +
                         std::to_string(bias.numel()));
  if (stride < 1) throw DimensionError("conv2d: stride must be >= 1");
  if (padding < 0) throw DimensionError("conv2d: padding must be >= 0");
  if (k > h + 2 * padding)
    throw DimensionError("conv2d: kernel exceeds padded input on axis 0 (" +
                         std::to_string(k) + " > " + std::to_string(h + 2 * padding) + ")");
  if (k > w + 2 * padding)
    throw DimensionError("conv2d: kernel exceeds padded input on axis 1 (" +
                         std::to_string(k) + " > " + std::to_string(w + 2 * padding) + ")");

  const int oh = (h + 2 * padding - k) / stride + 1;
  const int ow = (w + 2 * padding - k) / stride + 1;
  Tensor out = make_output({oh, ow, cout});

  const float* in = input.value().data();
  const float* ker = kernel.value().data();
  const float* bs = bias.value().data();
  float* op = out.value().data();
  std::vector<double> acc(static_cast<std::size_t>(cout));
  for (int oy = 0; oy < oh; ++oy) {
    for (int ox = 0; ox < ow; ++ox) {
      for (int oc = 0; oc < cout; ++oc) acc[oc] = bs[oc];
      for (int ky = 0; ky < k; ++ky) {
        const int iy = oy * stride + ky - padding;
        if (iy < 0 || iy >= h) continue;
        for (int kx = 0; kx < k; ++kx) {
          const int ix = ox * stride + kx - padding;
          if (ix < 0 || ix >= w) continue;
          const float* irow = in + (static_cast<std::size_t>(iy) * w + ix) * cin;
          const float* krow = ker + ((static_cast<std::size_t>(ky) * k + kx) * cin) * cout;
          for (int ic = 0; ic < cin; ++ic) {
            const float iv = irow[ic];
            const float* kc = krow + static_cast<std::size_t>(ic) * cout;
            for (int oc = 0; oc < cout; ++oc) acc[oc] += static_cast<double>(iv) * kc[oc];
          }
        }
      }
      float* orow = op + (static_cast<std::size_t>(oy) * ow + ox) * cout;
      for (int oc = 0; oc < cout; ++oc) orow[oc] = static_cast<float>(acc[oc]);
    }
  }

  auto ii = input.impl_, ki = kernel.impl_, bi = bias.impl_, oi = out.impl_;
  record("conv2d", [ii, ki, bi, oi, h, w, cin, k, cout, oh, ow, stride, padding]() {
    if (oi->grad.empty()) return;
    const float* go = oi->grad.data();
    const bool want_in = needs_grad(ii.get());
    const bool want_ker = needs_grad(ki.get());
    if (needs_grad(bi.get())) {
      auto& gb = grad_buf(bi.get());
      for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox) {
          const float* grow = go + (static_cast<std::size_t>(oy) * ow + ox) * cout;
          for (int oc = 0; oc < cout; ++oc) gb[oc] += grow[oc];
        }
    }
    if (!want_in && !want_ker) return;
    float* gin = want_in ? grad_buf(ii.get()).data() : nullptr;
    float* gker = want_ker ? grad_buf(ki.get()).data() : nullptr;
    const float* in = ii->value.data();
    const float* ker = ki->value.data();
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        const float* grow = go + (static_cast<std::size_t>(oy) * ow + ox) * cout;
        for (int ky = 0; ky < k; ++ky) {
          const int iy = oy * stride + ky - padding;
          if (iy < 0 || iy >= h) continue;
          for (int kx = 0; kx < k; ++kx) {
            const int ix = ox * stride + kx - padding;
            if (ix < 0 || ix >= w) continue;
            const std::size_t ibase = (static_cast<std::size_t>(iy) * w + ix) * cin;
            const std::size_t kbase = (static_cast<std::size_t>(ky) * k + kx) * cin * cout;
            for (int ic = 0; ic < cin; ++ic) {
              const float iv = in[ibase + ic];
              const std::size_t kc = kbase + static_cast<std::size_t>(ic) * cout;
              double acc = 0.0;
              for (int oc = 0; oc < cout; ++oc) {
                const float g = grow[oc];
                acc += static_cast<double>(g) * ker[kc + oc];
                if (want_ker) gker[kc + oc] += g * iv;
              }
              if (want_in) gin[ibase + ic] += static_cast<float>(acc);
            }
          }
        }
      }
    }
  });
  return out;
}

Tensor Graph::global_avg_pool(const Tensor& maps) {
  if (maps.ndim() != 3)
    throw DimensionError("global_avg_pool: maps must be h×w×c (3 axes), got " +
                         std::to_string(maps.ndim()));
  const int h = maps.dim(0), w = maps.dim(1), c = maps.dim(2);
  Tensor out = make_output({c});
  const float* in = maps.value().data();
  std::vector<double> acc(static_cast<std::size_t>(c), 0.0);
  const int hw = h * w;
  for (int p = 0; p < hw; ++p) {
    const float* row = in + static_cast<std::size_t>(p) * c;
    for (int j = 0; j < c; ++j) acc[j] += row[j];
  }
  for (int j = 0; j < c; ++j) out.value()[j] = static_cast<float>(acc[j] / hw);
  auto mi = maps.impl_, oi = out.impl_;
  record("global_avg_pool", [mi, oi, hw, c]() {
    if (oi->grad.empty() || !needs_grad(mi.get())) return;
    auto& gm = grad_buf(mi.get());
    const float inv = 1.0f / static_cast<float>(hw);
    for (int p = 0; p < hw; ++p) {
      float* row = gm.data() + static_cast<std::size_t>(p) * c;
      for (int j = 0; j < c; ++j) row[j] += oi->grad[j] * inv;
    }
  });
  return out;
}

Tensor Graph::linear(const Tensor& input, const Tensor& weight, const Tensor& bias) {
  if (weight.ndim() != 2)
    throw DimensionError("linear: weight must be c×K (2 axes), got " +
                         std::to_string(weight.ndim()));
  const int c = weight.dim(0), kk = weight.dim(1);
  if (input.numel() != c)
    throw DimensionError("linear: input mismatch on axis 0: weight expects " +
                         std::to_string(c) + ", input has " + std::to_string(input.numel()));
  if (bias.numel() != kk)
    throw DimensionError("linear: bias mismatch on axis 0: weight produces " +
                         std::to_string(kk) + ", bias has " + std::to_string(bias.numel()));
  Tensor out = make_output({kk});
  const float* in = input.value().data();
  const float* wv = weight.value().data();
  std::vector<double> acc(static_cast<std::size_t>(kk));
  for (int j = 0; j < kk; ++j) acc[j] = bias.value()[j];
  for (int i = 0; i < c; ++i) {
    const float iv = in[i];
    const float* wrow = wv + static_cast<std::size_t>(i) * kk;
    for (int j = 0; j < kk; ++j) acc[j] += static_cast<double>(iv) * wrow[j];
  }
  for (int j = 0; j < kk; ++j) out.value()[j] = static_cast<float>(acc[j]);
  auto ii = input.impl_, wi = weight.impl_, bi = bias.impl_, oi = out.impl_;
  record("linear", [ii, wi, bi, oi, c, kk]() {
    if (oi->grad.empty()) return;
    const float* go = oi->grad.data();
    if (needs_grad(bi.get())) {
      auto& gb = grad_buf(bi.get());
      for (int j = 0; j < kk; ++j) gb[j] += go[j];
    }
    const bool want_in = needs_grad(ii.get());
    const bool want_w = needs_grad(wi.get());
    if (!want_in && !want_w) return;
    float* gin = want_in ? grad_buf(ii.get()).data() : nullptr;
    float* gw = want_w ? grad_buf(wi.get()).data() : nullptr;
    const float* wv = wi->value.data();
    const float* in = ii->value.data();
    for (int i = 0; i < c; ++i) {
      const std::size_t base = static_cast<std::size_t>(i) * kk;
      double acc = 0.0;
      for (int j = 0; j < kk; ++j) {
        acc += static_cast<double>(go[j]) * wv[base + j];
        if (want_w) gw[base + j] += go[j] * in[i];
      }
      if (want_in) gin[i] += static_cast<float>(acc);
    }
  });
  return out;
}

Tensor Graph::softmax(const Tensor& logits) {
  if (logits.ndim() != 1 || logits.numel() < 2)
    throw DimensionError("softmax: logits must be a vector of at least 2 entries");
  for (float v : logits.value())
    if (!std::isfinite(v)) throw NumericError("softmax: non-finite logit");
  const int n = logits.numel();
  Tensor out = make_output({n});
  const float* in = logits.value().data();
  float m = in[0];
  for (int i = 1; i < n; ++i) m = std::max(m, in[i]);
  double denom = 0.0;
  std::vector<double> ex(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    ex[i] = std::exp(static_cast<double>(in[i]) - m);
    denom += ex[i];
  }
  for (int i = 0; i < n; ++i) out.value()[i] = static_cast<float>(ex[i] / denom);
  auto li = logits.impl_, oi = out.impl_;
  record("softmax", [li, oi, n]() {
    if (oi->grad.empty() || !needs_grad(li.get())) return;
    auto& gl = grad_buf(li.get());
    const float* y = oi->value.data();
    const float* g = oi->grad.data();
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += static_cast<double>(g[i]) * y[i];
    for (int i = 0; i < n; ++i)
      gl[i] += static_cast<float>(y[i] * (g[i] - s));
  });
  return out;
}

Tensor Graph::cross_entropy(const Tensor& prob, int label) {
  if (prob.ndim() != 1)
    throw DimensionError("cross_entropy: probabilities must be a vector");
  if (label < 0 || label >= prob.numel())
    throw IndexError("cross_entropy: label " + std::to_string(label) +
                     " out of range [0, " + std::to_string(prob.numel()) + ")");
  Tensor out = make_output({1});
  const double p = std::max(static_cast<double>(prob.value()[label]), kLogEpsilon);
  out.value()[0] = static_cast<float>(-std::log(p));
  auto pi = prob.impl_, oi = out.impl_;
  record("cross_entropy", [pi, oi, label]() {
    if (oi->grad.empty() || !needs_grad(pi.get())) return;
    const double p = static_cast<double>(pi->value[label]);
    if (p <= kLogEpsilon) return;  // clamped: flat region
    grad_buf(pi.get())[label] += static_cast<float>(-oi->grad[0] / p);
  });
  return out;
}

Tensor Graph::l2_normalize_flatten(const Tensor& maps) {
  const int n = maps.numel();
  double sq = 0.0;
  for (float v : maps.value()) sq += static_cast<double>(v) * v;
  const double norm = std::sqrt(sq);
  if (norm == 0.0)
    throw NumericError("l2_normalize_flatten: all-zero input (dead embedding)");
  Tensor out = make_output({n});
  const float* in = maps.value().data();
  for (int i = 0; i < n; ++i) out.value()[i] = static_cast<float>(in[i] / norm);
  auto mi = maps.impl_, oi = out.impl_;
  record("l2_normalize_flatten", [mi, oi, norm, n]() {
    if (oi->grad.empty() || !needs_grad(mi.get())) return;
    auto& gm = grad_buf(mi.get());
    const float* y = oi->value.data();
    const float* g = oi->grad.data();
    double yg = 0.0;
    for (int i = 0; i < n; ++i) yg += static_cast<double>(y[i]) * g[i];
    for (int i = 0; i < n; ++i)
      gm[i] += static_cast<float>((g[i] - y[i] * yg) / norm);
  });
  return out;
}

std::vector<float> bilinear_resize_values(std::span<const float> src, int src_h,
                                          int src_w, int out_h, int out_w) {
  std::vector<float> dst(static_cast<std::size_t>(out_h) * out_w);
  const double sy = out_h > 1 ? static_cast<double>(src_h - 1) / (out_h - 1) : 0.0;
  const double sx = out_w > 1 ? static_cast<double>(src_w - 1) / (out_w - 1) : 0.0;
  for (int r = 0; r < out_h; ++r) {
    const double fy = r * sy;
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, src_h - 1);
    const double wy = fy - y0;
    for (int c = 0; c < out_w; ++c) {
      const double fx = c * sx;
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, src_w - 1);
      const double wx = fx - x0;
      const double v = (1 - wy) * ((1 - wx) * src[static_cast<std::size_t>(y0) * src_w + x0] +
                                   wx * src[static_cast<std::size_t>(y0) * src_w + x1]) +
                       wy * ((1 - wx) * src[static_cast<std::size_t>(y1) * src_w + x0] +
                             wx * src[static_cast<std::size_t>(y1) * src_w + x1]);
      dst[static_cast<std::size_t>(r) * out_w + c] = static_cast<float>(v);
    }
  }
  return dst;
}

Tensor Graph::bilinear_resize(const Tensor& image, int out_h, int out_w) {
  if (image.ndim() != 2)
    throw DimensionError("bilinear_resize: image must be h×w (2 axes), got " +
                         std::to_string(image.ndim()));
  if (out_h < 1) throw DimensionError("bilinear_resize: target extent on axis 0 must be >= 1");
  if (out_w < 1) throw DimensionError("bilinear_resize: target extent on axis 1 must be >= 1");
  const int h = image.dim(0), w = image.dim(1);
  Tensor out = make_output({out_h, out_w});
  auto vals = bilinear_resize_values(image.value(), h, w, out_h, out_w);
  std::copy(vals.begin(), vals.end(), out.value().begin());
  auto ii = image.impl_, oi = out.impl_;
  record("bilinear_resize", [ii, oi, h, w, out_h, out_w]() {
    if (oi->grad.empty() || !needs_grad(ii.get())) return;
    auto& gi = grad_buf(ii.get());
    const float* go = oi->grad.data();
    const double sy = out_h > 1 ? static_cast<double>(h - 1) / (out_h - 1) : 0.0;
    const double sx = out_w > 1 ? static_cast<double>(w - 1) / (out_w - 1) : 0.0;
    for (int r = 0; r < out_h; ++r) {
      const double fy = r * sy;
      const int y0 = static_cast<int>(fy);
      const int y1 = std::min(y0 + 1, h - 1);
      const double wy = fy - y0;
      for (int c = 0; c < out_w; ++c) {
        const double fx = c * sx;
        const int x0 = static_cast<int>(fx);
        const int x1 = std::min(x0 + 1, w - 1);
        const double wx = fx - x0;
        const float g = go[static_cast<std::size_t>(r) * out_w + c];
        gi[static_cast<std::size_t>(y0) * w + x0] += static_cast<float>(g * (1 - wy) * (1 - wx));
        gi[static_cast<std::size_t>(y0) * w + x1] += static_cast<float>(g * (1 - wy) * wx);
        gi[static_cast<std::size_t>(y1) * w + x0] += static_cast<float>(g * wy * (1 - wx));
        gi[static_cast<std::size_t>(y1) * w + x1] += static_cast<float>(g * wy * wx);
      }
    }
  });
  return out;
}

int argmax_span(std::span<const float> v) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(v.size()); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

}  // namespace scdr
