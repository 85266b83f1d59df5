#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace scdr {

// Floor of the log argument in cross_entropy.
inline constexpr double kLogEpsilon = 1e-12;

/// Dense row-major float32 tensor. Tensor objects are cheap handles that
/// share storage; detach() produces an independent leaf copy. Gradients live
/// next to the values and are filled in by Graph::backward.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(std::vector<int> shape, bool requires_grad = false);
  static Tensor full(std::vector<int> shape, float value, bool requires_grad = false);
  static Tensor from_data(std::vector<int> shape, std::vector<float> data,
                          bool requires_grad = false);
  static Tensor scalar(float value, bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  const std::vector<int>& shape() const;
  int ndim() const;
  int dim(int axis) const;
  int numel() const;

  std::span<const float> value() const;
  std::span<float> value();
  float item() const;  // scalar tensors only

  bool requires_grad() const;
  void set_requires_grad(bool on);
  bool has_grad() const;
  std::span<const float> grad() const;
  void clear_grad();

  /// Leaf copy of the values; never graph-connected, never requires grad.
  Tensor detach() const;

 private:
  struct Impl;
  std::shared_ptr<Impl> impl_;
  Impl* impl() const;
  friend class Graph;
};

/// Records every operation applied through it and replays the chain in
/// reverse on backward(). One Graph serves one forward/backward pass over a
/// single thread; clear() re-arms it for the next step.
class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  // structural / elementwise
  Tensor reshape(const Tensor& a, std::vector<int> shape);
  Tensor add(const Tensor& a, const Tensor& b);
  Tensor sub(const Tensor& a, const Tensor& b);
  Tensor mul(const Tensor& a, const Tensor& b);  // Hadamard
  Tensor scale(const Tensor& a, float factor);
  Tensor add_const(const Tensor& a, float value);
  Tensor scale_by(const Tensor& a, const Tensor& factor);  // factor: scalar
  Tensor index(const Tensor& a, int flat_index);
  Tensor sum(const Tensor& a);
  Tensor dot(const Tensor& a, const Tensor& b);
  Tensor relu(const Tensor& a);

  // network ops
  Tensor conv2d(const Tensor& input, const Tensor& kernel, const Tensor& bias,
                int stride = 1, int padding = 0);
  Tensor global_avg_pool(const Tensor& maps);
  Tensor linear(const Tensor& input, const Tensor& weight, const Tensor& bias);
  Tensor softmax(const Tensor& logits);
  Tensor cross_entropy(const Tensor& prob, int label);
  Tensor l2_normalize_flatten(const Tensor& maps);
  Tensor bilinear_resize(const Tensor& image, int out_h, int out_w);

  /// Reverse pass from a scalar loss. Accumulates into .grad of every tensor
  /// the loss depends on. A graph runs backward once; clear() re-arms it.
  void backward(const Tensor& loss);
  void clear();
  bool consumed() const { return consumed_; }
  std::size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    const char* op;
    std::function<void()> pull;
  };
  Tensor make_output(std::vector<int> shape);
  void record(const char* op, std::function<void()> pull);

  std::vector<Node> nodes_;
  bool consumed_ = false;
};

// Value-level helpers shared by the graph ops and the detached capture path.
// Align-corners convention: corner pixels map exactly onto corner pixels.
std::vector<float> bilinear_resize_values(std::span<const float> src, int src_h,
                                          int src_w, int out_h, int out_w);

// Ties resolved to the lowest index.
int argmax_span(std::span<const float> v);

}  // namespace scdr
