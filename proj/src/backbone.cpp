#include "scdr/backbone.hpp"

#include <cmath>
#include <random>
#include <string>

#include "scdr/errors.hpp"
#include "scdr/rng.hpp"

namespace scdr {

std::pair<int, int> EmbeddingConfig::feature_extent() const {
  int h = input_h, w = input_w;
  const int pad = kernel / 2;
  for (int s = 0; s < stages(); ++s) {
    h = (h + 2 * pad - kernel) / 2 + 1;
    w = (w + 2 * pad - kernel) / 2 + 1;
  }
  return {h, w};
}

void EmbeddingConfig::validate() const {
  if (input_h < 4 || input_w < 4) throw ConfigError("embedding: input extent too small");
  if (stage_channels.empty()) throw ConfigError("embedding: need at least one stage");
  for (int c : stage_channels)
    if (c < 1) throw ConfigError("embedding: stage channels must be positive");
  if (kernel < 1 || kernel % 2 == 0)
    throw ConfigError("embedding: kernel must be a positive odd extent");
  if (num_classes < 2) throw ConfigError("embedding: need at least two classes");
  const auto [h, w] = feature_extent();
  if (h < 2 || w < 2)
    throw ConfigError("embedding: spatial extent collapses to " + std::to_string(h) + "×" +
                      std::to_string(w) + "; use fewer stages or a larger input");
}

std::vector<Tensor> Branch::parameters() const {
  std::vector<Tensor> out;
  for (const Tensor& t : kernels) out.push_back(t);
  for (const Tensor& t : biases) out.push_back(t);
  out.push_back(head.weight);
  out.push_back(head.bias);
  return out;
}

Branch build_branch(const EmbeddingConfig& config, std::uint64_t seed) {
  config.validate();
  Branch b;
  b.config = config;
  auto rng = make_rng(seed, kStreamInit);
  std::normal_distribution<float> normal(0.0f, 1.0f);
  int cin = 1;
  for (int s = 0; s < config.stages(); ++s) {
    const int cout = config.stage_channels[s];
    const int k = config.kernel;
    const float scale = std::sqrt(2.0f / static_cast<float>(k * k * cin));
    Tensor kernel = Tensor::zeros({k, k, cin, cout}, /*requires_grad=*/true);
    for (float& v : kernel.value()) v = normal(rng) * scale;
    b.kernels.push_back(kernel);
    b.biases.push_back(Tensor::zeros({cout}, /*requires_grad=*/true));
    cin = cout;
  }
  const int c = config.feature_channels();
  b.head.weight = Tensor::zeros({c, config.num_classes}, /*requires_grad=*/true);
  b.head.bias = Tensor::zeros({config.num_classes}, /*requires_grad=*/true);
  return b;
}

BranchOutput forward(Graph& g, const Branch& branch, const Tensor& image) {
  const EmbeddingConfig& cfg = branch.config;
  if (image.ndim() != 2 || image.dim(0) != cfg.input_h || image.dim(1) != cfg.input_w)
    throw DimensionError("forward: image must be " + std::to_string(cfg.input_h) + "×" +
                         std::to_string(cfg.input_w));
  Tensor x = g.reshape(image, {cfg.input_h, cfg.input_w, 1});
  const int pad = cfg.kernel / 2;
  for (int s = 0; s < cfg.stages(); ++s)
    x = g.relu(g.conv2d(x, branch.kernels[s], branch.biases[s], /*stride=*/2, pad));
  BranchOutput out;
  out.maps = x;
  out.pooled = g.global_avg_pool(x);
  out.logits = g.linear(out.pooled, branch.head.weight, branch.head.bias);
  out.prob = g.softmax(out.logits);
  return out;
}

Tensor branch_loss(Graph& g, const Tensor& prob, int label) {
  return g.cross_entropy(prob, label);
}

}  // namespace scdr
