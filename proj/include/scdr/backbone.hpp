#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "scdr/tensor.hpp"

namespace scdr {

/// Convolutional embedding plan: stride-2 3×3 stages, ReLU after each.
/// A 64×64 input with stages {8,16,32} yields 8×8×32 feature maps.
struct EmbeddingConfig {
  int input_h = 64;
  int input_w = 64;
  std::vector<int> stage_channels{8, 16, 32};
  int kernel = 3;
  int num_classes = 5;

  int stages() const { return static_cast<int>(stage_channels.size()); }
  int feature_channels() const { return stage_channels.back(); }
  std::pair<int, int> feature_extent() const;
  void validate() const;  // throws ConfigError
};

struct ClassifierHead {
  Tensor weight;  // c×K; column j is the weight vector of class j
  Tensor bias;    // K
};

struct Branch {
  EmbeddingConfig config;
  std::vector<Tensor> kernels;  // per stage: k×k×c_in×c_out
  std::vector<Tensor> biases;   // per stage: c_out
  ClassifierHead head;

  std::vector<Tensor> parameters() const;
};

struct BranchOutput {
  Tensor maps;    // h×w×c
  Tensor pooled;  // c
  Tensor logits;  // K
  Tensor prob;    // K
};

/// Deterministic init: He fan-in normals for kernels, zeros for biases and
/// for the classifier head (so an untrained branch predicts uniformly).
Branch build_branch(const EmbeddingConfig& config, std::uint64_t seed);

BranchOutput forward(Graph& g, const Branch& branch, const Tensor& image);

Tensor branch_loss(Graph& g, const Tensor& prob, int label);

inline Tensor branch_loss(Graph& g, const BranchOutput& out, int label) {
  return branch_loss(g, out.prob, label);
}

}  // namespace scdr
