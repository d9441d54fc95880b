#pragma once

#include <array>
#include <span>
#include <vector>

#include "fer/augment.hpp"
#include "fer/evaluation.hpp"
#include "fer/network.hpp"
#include "fer/preprocess.hpp"

namespace fer {

/// Softmax class probabilities (computed in double from the logits) for a batch of
/// images, in evaluation mode without gradients. The model's mode is restored.
ProbabilityMatrix predict_probabilities(Network& model, std::span<const FloatImage> images);

/// Probabilities of each of the ten views of `image`.
std::array<ClassProbabilities, 10> tencrop_view_probabilities(Network& model, const FloatImage& image,
                                                              int pad = kDefaultPad);

/// Ten views, uniform average of their probabilities, argmax.
PredictionRecord predict_tencrop(Network& model, const ProcessedSample& sample, int pad = kDefaultPad);
std::vector<PredictionRecord> predict_tencrop(Network& model, std::span<const ProcessedSample> samples,
                                              int pad = kDefaultPad, std::size_t images_per_batch = 32);

/// The un-augmented image as the only view.
std::vector<PredictionRecord> predict_single_view(Network& model, std::span<const ProcessedSample> samples,
                                                  std::size_t batch_size = 256);

}  // namespace fer
