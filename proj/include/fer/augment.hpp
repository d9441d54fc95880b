#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "fer/grid.hpp"
#include "fer/keyed_stream.hpp"
#include "fer/preprocess.hpp"

namespace fer {

inline constexpr int kDefaultPad = 4;

template <typename T>
Grid<T> mirror(const Grid<T>& image) {
    Grid<T> out(image.rows, image.cols);
    for (int r = 0; r < image.rows; ++r)
        for (int c = 0; c < image.cols; ++c) out(r, c) = image(r, image.cols - 1 - c);
    return out;
}

/// Zero border of `pad` pixels on every side.
template <typename T>
Grid<T> zero_pad(const Grid<T>& image, int pad) {
    if (pad < 0) throw std::invalid_argument("padding must be nonnegative");
    Grid<T> out(image.rows + 2 * pad, image.cols + 2 * pad, T{});
    for (int r = 0; r < image.rows; ++r)
        for (int c = 0; c < image.cols; ++c) out(r + pad, c + pad) = image(r, c);
    return out;
}

template <typename T>
Grid<T> crop(const Grid<T>& image, int top, int left, int rows, int cols) {
    if (top < 0 || left < 0 || top + rows > image.rows || left + cols > image.cols)
        throw std::out_of_range("crop window outside image");
    Grid<T> out(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) out(r, c) = image(top + r, left + c);
    return out;
}

struct CropOffset {
    int row = 0;
    int col = 0;
    friend bool operator==(const CropOffset&, const CropOffset&) = default;
};

/// Draws for training augmentation: the transform of sample `index` in `epoch` is a
/// pure function of (global_seed, epoch, index). Draw 0 decides mirroring, draws 1
/// and 2 are the crop row and column offsets.
class AugmentStream {
public:
    explicit AugmentStream(std::uint64_t global_seed, double mirror_probability = 0.5)
        : seed_(global_seed), mirror_probability_(mirror_probability) {
        if (!(mirror_probability >= 0.0 && mirror_probability <= 1.0))
            throw std::invalid_argument("mirror probability must lie in [0, 1]");
    }

    std::uint64_t seed() const { return seed_; }
    double mirror_probability() const { return mirror_probability_; }

    KeyedStream draws(std::uint64_t epoch, std::uint64_t index) const {
        return KeyedStream(StreamDomain::augmentation, seed_, epoch, index);
    }

    bool mirrors(std::uint64_t epoch, std::uint64_t index) const;
    CropOffset crop_offset(std::uint64_t epoch, std::uint64_t index, int pad) const;

private:
    std::uint64_t seed_;
    double mirror_probability_;
};

/// Zero-pads by `pad`, then takes the 48x48 window at the stream-keyed offset in {0..2*pad}^2.
FloatImage pad_random_crop(const FloatImage& image, int pad, const AugmentStream& stream, std::uint64_t epoch,
                           std::uint64_t index);

/// Keyed mirror, then pad_random_crop. Keyed on the sample's index within its split.
FloatImage apply_train_augmentation(const ProcessedSample& sample, const AugmentStream& stream, std::uint64_t epoch,
                                    int pad = kDefaultPad);

/// Corner and center crops of the zero-padded image (top-left, top-right, bottom-left,
/// bottom-right, center), followed by their mirrors in the same order.
template <typename T>
std::array<Grid<T>, 10> ten_crop(const Grid<T>& image, int pad = kDefaultPad) {
    if (pad < 1) throw std::invalid_argument("ten-crop needs pad >= 1");
    const auto padded = zero_pad(image, pad);
    const int h = image.rows, w = image.cols, edge = 2 * pad;
    std::array<Grid<T>, 10> views;
    views[0] = crop(padded, 0, 0, h, w);
    views[1] = crop(padded, 0, edge, h, w);
    views[2] = crop(padded, edge, 0, h, w);
    views[3] = crop(padded, edge, edge, h, w);
    views[4] = crop(padded, pad, pad, h, w);
    for (int i = 0; i < 5; ++i) views[static_cast<std::size_t>(i + 5)] = mirror(views[static_cast<std::size_t>(i)]);
    return views;
}

/// Training-sample order for one epoch: a permutation of 0..n-1 drawn from
/// (global_seed, epoch) alone, so every architecture sees the same sequence.
std::vector<std::size_t> epoch_order(std::uint64_t global_seed, std::uint64_t epoch, std::size_t n);

}  // namespace fer
