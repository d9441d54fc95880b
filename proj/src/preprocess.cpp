#include "fer/preprocess.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace fer {

GrayImage histogram_equalize(const GrayImage& image) {
    std::array<std::uint64_t, 256> hist{};
    for (auto v : image.data) ++hist[v];

    std::array<std::uint64_t, 256> cdf{};
    std::uint64_t running = 0;
    std::uint64_t cdf_min = 0;
    for (std::size_t v = 0; v < 256; ++v) {
        running += hist[v];
        cdf[v] = running;
        if (cdf_min == 0 && running > 0) cdf_min = running;
    }
    const std::uint64_t total = running;
    if (total == cdf_min) return image;  // constant (or empty) image

    const std::uint64_t denom = total - cdf_min;
    std::array<std::uint8_t, 256> lut{};
    for (std::size_t v = 0; v < 256; ++v) {
        if (cdf[v] < cdf_min) continue;  // intensity absent below the first occupied bin
        // round-half-up of 255 * (cdf - cdf_min) / denom in exact integer arithmetic
        const std::uint64_t num = 255 * (cdf[v] - cdf_min);
        lut[v] = static_cast<std::uint8_t>((2 * num + denom) / (2 * denom));
    }

    GrayImage out(image.rows, image.cols);
    for (std::size_t i = 0; i < image.data.size(); ++i) out.data[i] = lut[image.data[i]];
    return out;
}

NormStats compute_norm_stats(std::span<const Sample> train_samples, std::string dataset_hash) {
    if (train_samples.empty()) throw std::invalid_argument("normalization statistics need a nonempty training set");

    // pixels are integers, so the sums are exact
    std::uint64_t count = 0;
    std::uint64_t sum = 0;
    unsigned __int128 sum_sq = 0;
    for (const auto& s : train_samples) {
        if (s.split != Split::train)
            throw std::invalid_argument("normalization statistics may only be computed from training samples");
        const auto eq = histogram_equalize(s.image);
        for (auto v : eq.data) {
            sum += v;
            sum_sq += static_cast<unsigned __int128>(v) * v;
        }
        count += eq.data.size();
    }
    if (count == 0) throw std::invalid_argument("training images contain no pixels");

    // N^2 var = N*sum_sq - sum^2, exact in 128 bits
    const unsigned __int128 n_sq_var = static_cast<unsigned __int128>(count) * sum_sq -
                                       static_cast<unsigned __int128>(sum) * sum;
    if (n_sq_var == 0) throw std::invalid_argument("training pixels have zero variance");

    NormStats stats;
    const long double n = static_cast<long double>(count);
    stats.mean = static_cast<double>(static_cast<long double>(sum) / n);
    stats.std = static_cast<double>(std::sqrt(static_cast<long double>(n_sq_var)) / n);
    stats.dataset_hash = std::move(dataset_hash);
    return stats;
}

FloatImage normalize(const GrayImage& image, const NormStats& stats) {
    if (!(stats.std > 0.0)) throw std::invalid_argument("normalization std must be positive");
    FloatImage out(image.rows, image.cols);
    const double inv = 1.0 / stats.std;
    for (std::size_t i = 0; i < image.data.size(); ++i)
        out.data[i] = static_cast<float>((static_cast<double>(image.data[i]) - stats.mean) * inv);
    return out;
}

Preprocessor::Preprocessor(NormStats stats) : stats_(std::move(stats)) {
    if (!(stats_.std > 0.0)) throw std::invalid_argument("normalization std must be positive");
}

ProcessedSample Preprocessor::operator()(const Sample& sample) const {
    return ProcessedSample{normalize(histogram_equalize(sample.image), stats_), sample.label, sample.split,
                           sample.index};
}

std::vector<ProcessedSample> Preprocessor::apply(std::span<const Sample> samples) const {
    std::vector<ProcessedSample> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back((*this)(s));
    return out;
}

void write_norm_stats(std::ostream& out, const NormStats& stats) {
    out << "# training-set intensity statistics (after histogram equalization)\n";
    out << std::setprecision(17);
    out << "mean = " << stats.mean << '\n';
    out << "std = " << stats.std << '\n';
    out << "dataset_hash = " << stats.dataset_hash << '\n';
}

NormStats read_norm_stats(std::istream& in) {
    NormStats stats;
    bool have_mean = false, have_std = false;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line.front() == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        std::string key = line.substr(0, eq);
        std::string value = line.substr(eq + 1);
        auto strip = [](std::string& s) {
            s.erase(0, s.find_first_not_of(" \t\r"));
            s.erase(s.find_last_not_of(" \t\r") + 1);
        };
        strip(key);
        strip(value);
        if (key == "mean") {
            stats.mean = std::stod(value);
            have_mean = true;
        } else if (key == "std") {
            stats.std = std::stod(value);
            have_std = true;
        } else if (key == "dataset_hash") {
            stats.dataset_hash = value;
        }
    }
    if (!have_mean || !have_std) throw std::runtime_error("normalization statistics file lacks mean or std");
    if (!(stats.std > 0.0)) throw std::runtime_error("normalization statistics file has nonpositive std");
    return stats;
}

}  // namespace fer
