#include "fer/inference.hpp"

#include <algorithm>
#include <cmath>

namespace fer {

namespace {

class EvalModeGuard {
public:
    explicit EvalModeGuard(Network& model) : model_(model), was_training_(model->is_training()) { model_->eval(); }
    ~EvalModeGuard() { model_->train(was_training_); }
    EvalModeGuard(const EvalModeGuard&) = delete;
    EvalModeGuard& operator=(const EvalModeGuard&) = delete;

private:
    Network& model_;
    bool was_training_;
};

ClassProbabilities softmax_row(const double* logits) {
    ClassProbabilities p{};
    const double top = *std::max_element(logits, logits + kNumClasses);
    double sum = 0.0;
    for (std::size_t c = 0; c < p.size(); ++c) {
        p[c] = std::exp(logits[c] - top);
        sum += p[c];
    }
    for (auto& x : p) x /= sum;
    return p;
}

}  // namespace

ProbabilityMatrix predict_probabilities(Network& model, std::span<const FloatImage> images) {
    if (images.empty()) return {};
    EvalModeGuard guard(model);
    torch::NoGradGuard no_grad;
    auto logits = model->forward(to_batch(images)).to(torch::kFloat64).contiguous();
    if (logits.size(1) != kNumClasses) throw std::runtime_error("model does not produce 7 logits");
    const auto* data = logits.data_ptr<double>();
    ProbabilityMatrix out(images.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = softmax_row(data + i * kNumClasses);
    return out;
}

std::array<ClassProbabilities, 10> tencrop_view_probabilities(Network& model, const FloatImage& image, int pad) {
    const auto views = ten_crop(image, pad);
    const auto probs = predict_probabilities(model, views);
    std::array<ClassProbabilities, 10> out{};
    std::copy(probs.begin(), probs.end(), out.begin());
    return out;
}

PredictionRecord predict_tencrop(Network& model, const ProcessedSample& sample, int pad) {
    const auto views = tencrop_view_probabilities(model, sample.image, pad);
    return make_record(sample.index, average(views), sample.label);
}

std::vector<PredictionRecord> predict_tencrop(Network& model, std::span<const ProcessedSample> samples, int pad,
                                              std::size_t images_per_batch) {
    std::vector<PredictionRecord> out;
    out.reserve(samples.size());
    std::vector<FloatImage> views;
    for (std::size_t start = 0; start < samples.size(); start += images_per_batch) {
        const auto end = std::min(samples.size(), start + images_per_batch);
        views.clear();
        for (std::size_t i = start; i < end; ++i) {
            auto crops = ten_crop(samples[i].image, pad);
            views.insert(views.end(), std::make_move_iterator(crops.begin()), std::make_move_iterator(crops.end()));
        }
        const auto probs = predict_probabilities(model, views);
        for (std::size_t i = start; i < end; ++i) {
            const auto first = probs.begin() + static_cast<std::ptrdiff_t>((i - start) * 10);
            out.push_back(make_record(samples[i].index, average(std::span(first, 10)), samples[i].label));
        }
    }
    return out;
}

std::vector<PredictionRecord> predict_single_view(Network& model, std::span<const ProcessedSample> samples,
                                                  std::size_t batch_size) {
    std::vector<PredictionRecord> out;
    out.reserve(samples.size());
    std::vector<FloatImage> images;
    for (std::size_t start = 0; start < samples.size(); start += batch_size) {
        const auto end = std::min(samples.size(), start + batch_size);
        images.clear();
        for (std::size_t i = start; i < end; ++i) images.push_back(samples[i].image);
        const auto probs = predict_probabilities(model, images);
        for (std::size_t i = start; i < end; ++i)
            out.push_back(make_record(samples[i].index, probs[i - start], samples[i].label));
    }
    return out;
}

}  // namespace fer
