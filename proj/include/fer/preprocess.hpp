#pragma once

#include <span>
#include <string>
#include <vector>

#include "fer/dataset.hpp"
#include "fer/grid.hpp"

namespace fer {

/// Discrete CDF remap: T(v) = round(255 * (cdf(v) - cdf_min) / (N - cdf_min)),
/// cdf_min being the smallest nonzero CDF value. Constant images map to themselves.
GrayImage histogram_equalize(const GrayImage& image);

/// Global intensity statistics of the equalized training pixels.
struct NormStats {
    double mean = 0.0;
    double std = 1.0;  // population standard deviation
    std::string dataset_hash;
};

/// Pools every pixel of the equalized training images into one population.
/// Throws std::invalid_argument for an empty set, a non-training sample, or zero variance.
NormStats compute_norm_stats(std::span<const Sample> train_samples, std::string dataset_hash = {});

/// (pixel - mean) / std, elementwise.
FloatImage normalize(const GrayImage& image, const NormStats& stats);

/// A sample after equalization and normalization. Only Preprocessor produces these,
/// so the pipeline cannot be applied to its own output.
struct ProcessedSample {
    FloatImage image;
    int label = 0;
    Split split = Split::train;
    std::size_t index = 0;
};

class Preprocessor {
public:
    explicit Preprocessor(NormStats stats);

    const NormStats& stats() const { return stats_; }

    ProcessedSample operator()(const Sample& sample) const;
    std::vector<ProcessedSample> apply(std::span<const Sample> samples) const;

private:
    NormStats stats_;
};

void write_norm_stats(std::ostream& out, const NormStats& stats);
NormStats read_norm_stats(std::istream& in);

}  // namespace fer
