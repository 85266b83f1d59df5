#pragma once

#include <string>

#include "scdr/backbone.hpp"
#include "scdr/tensor.hpp"

namespace scdr {

/// Everything the capture stage derives from one whole-branch prediction.
/// All tensors here are detached: no gradient flows through the mask, so the
/// whole branch is trained only by its own loss and the discrimination loss.
struct CamResult {
  Tensor raw;          // h×w weighted feature-map sum
  Tensor normalized;   // H×W, min-max normalized into [0,1]
  float threshold = 0; // mean of the normalized map
  Tensor mask;         // H×W, entries exactly 0 or 1
  Tensor local_image;  // mu * mask ⊙ source
  Tensor source;       // the input image the mask was applied to
  int predicted_class = -1;
  bool degenerate = false;  // constant map: mask fell back to all ones
};

int argmax_class(const Tensor& prob);

/// Column of the head picked by argmax(prob); ties go to the lowest class.
Tensor select_class_weights(const Tensor& prob, const ClassifierHead& head);

/// out[p] = sum_j weights[j] * maps[p, j]; detached from the graph.
Tensor compute_cam(const Tensor& maps, const Tensor& weights);

/// Resizes the map to H×W, min-max normalizes, thresholds at the mean.
/// A constant map yields an all-ones mask with the degenerate flag set.
CamResult normalize_and_mask(const Tensor& cam, int out_h, int out_w);

Tensor crop_local(const Tensor& mask, const Tensor& input, float mu);

CamResult run_capture(const BranchOutput& whole, const ClassifierHead& head,
                      const Tensor& image, float mu);

/// Writes <base>_cam.png (the normalized map) and <base>_local.png
/// (mask ⊙ source) as 8-bit grayscale with round-half-up quantization.
void export_heatmap(const CamResult& result, const std::string& base_path);

}  // namespace scdr
