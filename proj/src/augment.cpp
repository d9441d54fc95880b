#include "fer/augment.hpp"

#include <numeric>

namespace fer {

bool AugmentStream::mirrors(std::uint64_t epoch, std::uint64_t index) const {
    auto s = draws(epoch, index);
    return s.uniform() < mirror_probability_;
}

CropOffset AugmentStream::crop_offset(std::uint64_t epoch, std::uint64_t index, int pad) const {
    if (pad < 0) throw std::invalid_argument("padding must be nonnegative");
    auto s = draws(epoch, index);
    s.next();  // mirror draw
    const auto span = static_cast<std::uint64_t>(2 * pad + 1);
    CropOffset off;
    off.row = static_cast<int>(s.below(span));
    off.col = static_cast<int>(s.below(span));
    return off;
}

FloatImage pad_random_crop(const FloatImage& image, int pad, const AugmentStream& stream, std::uint64_t epoch,
                           std::uint64_t index) {
    const auto off = stream.crop_offset(epoch, index, pad);
    if (pad == 0) return image;
    return crop(zero_pad(image, pad), off.row, off.col, image.rows, image.cols);
}

FloatImage apply_train_augmentation(const ProcessedSample& sample, const AugmentStream& stream, std::uint64_t epoch,
                                    int pad) {
    if (stream.mirrors(epoch, sample.index))
        return pad_random_crop(mirror(sample.image), pad, stream, epoch, sample.index);
    return pad_random_crop(sample.image, pad, stream, epoch, sample.index);
}

std::vector<std::size_t> epoch_order(std::uint64_t global_seed, std::uint64_t epoch, std::size_t n) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    KeyedStream s(StreamDomain::epoch_order, global_seed, epoch, 0);
    for (std::size_t i = n; i > 1; --i) {
        const auto j = static_cast<std::size_t>(s.below(i));
        std::swap(order[i - 1], order[j]);
    }
    return order;
}

}  // namespace fer
