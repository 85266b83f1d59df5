#include "scdr/capture.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "scdr/errors.hpp"
#include "scdr/png_io.hpp"

namespace scdr {

int argmax_class(const Tensor& prob) { return argmax_span(prob.value()); }

Tensor select_class_weights(const Tensor& prob, const ClassifierHead& head) {
  const int cls = argmax_class(prob);
  const int c = head.weight.dim(0);
  const int k = head.weight.dim(1);
  if (cls >= k)
    throw DimensionError("select_class_weights: prob has more classes than the head");
  std::vector<float> column(static_cast<std::size_t>(c));
  auto w = head.weight.value();
  for (int i = 0; i < c; ++i) column[i] = w[static_cast<std::size_t>(i) * k + cls];
  return Tensor::from_data({c}, std::move(column));
}

Tensor compute_cam(const Tensor& maps, const Tensor& weights) {
  if (maps.ndim() != 3)
    throw DimensionError("compute_cam: maps must be h×w×c (3 axes)");
  const int h = maps.dim(0), w = maps.dim(1), c = maps.dim(2);
  if (weights.numel() != c)
    throw DimensionError("compute_cam: channel mismatch on axis 2: maps have " +
                         std::to_string(c) + ", weights have " +
                         std::to_string(weights.numel()));
  std::vector<float> out(static_cast<std::size_t>(h) * w);
  const float* m = maps.value().data();
  const float* wt = weights.value().data();
  for (int p = 0; p < h * w; ++p) {
    double acc = 0.0;
    const float* row = m + static_cast<std::size_t>(p) * c;
    for (int j = 0; j < c; ++j) acc += static_cast<double>(wt[j]) * row[j];
    out[p] = static_cast<float>(acc);
  }
  return Tensor::from_data({h, w}, std::move(out));
}

CamResult normalize_and_mask(const Tensor& cam, int out_h, int out_w) {
  if (cam.ndim() != 2) throw DimensionError("normalize_and_mask: map must be h×w (2 axes)");
  for (float v : cam.value())
    if (!std::isfinite(v)) throw NumericError("normalize_and_mask: non-finite map value");

  CamResult result;
  result.raw = cam.detach();

  std::vector<float> resized =
      bilinear_resize_values(cam.value(), cam.dim(0), cam.dim(1), out_h, out_w);
  const auto [mn_it, mx_it] = std::minmax_element(resized.begin(), resized.end());
  const float mn = *mn_it, mx = *mx_it;
  const std::size_t n = resized.size();

  if (mx == mn) {
    result.degenerate = true;
    result.normalized = Tensor::zeros({out_h, out_w});
    result.threshold = 0.0f;
    result.mask = Tensor::full({out_h, out_w}, 1.0f);
    return result;
  }

  const float span = mx - mn;
  double mean_acc = 0.0;
  for (float& v : resized) {
    v = (v - mn) / span;
    mean_acc += v;
  }
  result.threshold = static_cast<float>(mean_acc / static_cast<double>(n));

  std::vector<float> mask(n);
  for (std::size_t i = 0; i < n; ++i) mask[i] = resized[i] > result.threshold ? 1.0f : 0.0f;
  result.normalized = Tensor::from_data({out_h, out_w}, std::move(resized));
  result.mask = Tensor::from_data({out_h, out_w}, std::move(mask));
  return result;
}

Tensor crop_local(const Tensor& mask, const Tensor& input, float mu) {
  if (mask.shape() != input.shape())
    throw DimensionError("crop_local: mask and input extents differ");
  std::vector<float> out(static_cast<std::size_t>(input.numel()));
  auto m = mask.value();
  auto in = input.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = mu * m[i] * in[i];
  return Tensor::from_data(input.shape(), std::move(out));
}

CamResult run_capture(const BranchOutput& whole, const ClassifierHead& head,
                      const Tensor& image, float mu) {
  // Break graph connectivity before deriving the map: B(.) is not
  // differentiable, so the capture path is value-only by contract.
  Tensor weights = select_class_weights(whole.prob, head);
  Tensor cam = compute_cam(whole.maps.detach(), weights);
  CamResult result = normalize_and_mask(cam, image.dim(0), image.dim(1));
  result.predicted_class = argmax_class(whole.prob);
  result.source = image.detach();
  result.local_image = crop_local(result.mask, result.source, mu);
  return result;
}

void export_heatmap(const CamResult& result, const std::string& base_path) {
  const Tensor& norm = result.normalized;
  GrayImage cam_img;
  cam_img.height = norm.dim(0);
  cam_img.width = norm.dim(1);
  cam_img.pixels.reserve(static_cast<std::size_t>(norm.numel()));
  for (float v : norm.value()) cam_img.pixels.push_back(quantize_unit(v));
  write_gray_png(base_path + "_cam.png", cam_img);

  if (!result.source.defined() || !result.mask.defined())
    throw StateError("export_heatmap: result lacks mask or source image");
  GrayImage local_img;
  local_img.height = result.mask.dim(0);
  local_img.width = result.mask.dim(1);
  auto m = result.mask.value();
  auto src = result.source.value();
  local_img.pixels.reserve(m.size());
  for (std::size_t i = 0; i < m.size(); ++i)
    local_img.pixels.push_back(quantize_unit(m[i] * src[i]));
  write_gray_png(base_path + "_local.png", local_img);
}

}  // namespace scdr
