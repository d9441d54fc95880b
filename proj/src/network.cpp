#include "fer/network.hpp"

#include <cstring>
#include <iomanip>
#include <sstream>

#include "fer/hashing.hpp"

namespace fer {

namespace nn = torch::nn;

namespace {

void append_conv_bn_relu(nn::Sequential& seq, int in, int out, int kernel) {
    seq->push_back(nn::Conv2d(nn::Conv2dOptions(in, out, kernel).padding(kernel / 2)));
    seq->push_back(nn::BatchNorm2d(out));
    seq->push_back(nn::ReLU());
}

std::string layer_name(std::size_t i) {
    std::ostringstream os;
    os << "layer" << std::setw(2) << std::setfill('0') << i;
    return os.str();
}

}  // namespace

StochasticPoolImpl::StochasticPoolImpl(int kernel, int stride, int padding)
    : kernel_(kernel), stride_(stride), padding_(padding) {}

torch::Tensor StochasticPoolImpl::forward(torch::Tensor x) {
    const auto b = x.size(0), c = x.size(1), h = x.size(2), w = x.size(3);
    const auto out_h = (h + 2 * padding_ - kernel_) / stride_ + 1;
    const auto out_w = (w + 2 * padding_ - kernel_) / stride_ + 1;
    const auto area = static_cast<std::int64_t>(kernel_) * kernel_;
    namespace F = torch::nn::functional;
    auto windows = F::unfold(x, F::UnfoldFuncOptions({kernel_, kernel_}).stride(stride_).padding(padding_))
                       .view({b, c, area, out_h * out_w});
    auto total = windows.sum(2, /*keepdim=*/true);
    auto safe_total = torch::where(total > 0, total, torch::ones_like(total));
    auto probs = windows / safe_total;
    torch::Tensor pooled;
    if (is_training()) {
        auto u = torch::rand({b, c, 1, out_h * out_w}, x.options());
        auto pick = (probs.cumsum(2) < u).sum(2, /*keepdim=*/true).clamp_max(area - 1);
        pooled = windows.gather(2, pick).squeeze(2);
    } else {
        pooled = (probs * windows).sum(2);
    }
    pooled = torch::where(total.squeeze(2) > 0, pooled, torch::zeros_like(pooled));
    return pooled.view({b, c, out_h, out_w});
}

InceptionImpl::InceptionImpl(int in, const InceptionBlock& b) {
    nn::Sequential b1, b3, b5, bp;
    append_conv_bn_relu(b1, in, b.branch1x1, 1);
    append_conv_bn_relu(b3, in, b.reduce3x3, 1);
    append_conv_bn_relu(b3, b.reduce3x3, b.conv3x3, 3);
    append_conv_bn_relu(b5, in, b.reduce5x5, 1);
    append_conv_bn_relu(b5, b.reduce5x5, b.conv5x5, 5);
    bp->push_back(nn::MaxPool2d(nn::MaxPool2dOptions(3).stride(1).padding(1)));
    append_conv_bn_relu(bp, in, b.pool_proj, 1);
    branch1_ = register_module("branch1x1", b1);
    branch3_ = register_module("branch3x3", b3);
    branch5_ = register_module("branch5x5", b5);
    branch_pool_ = register_module("branch_pool", bp);
}

torch::Tensor InceptionImpl::forward(torch::Tensor x) {
    return torch::cat({branch1_->forward(x), branch3_->forward(x), branch5_->forward(x), branch_pool_->forward(x)}, 1);
}

ResidualImpl::ResidualImpl(int in, const ResidualBlock& r) {
    conv1_ = register_module("conv1", nn::Conv2d(nn::Conv2dOptions(in, r.channels, 3).stride(r.stride).padding(1)));
    bn1_ = register_module("bn1", nn::BatchNorm2d(r.channels));
    conv2_ = register_module("conv2", nn::Conv2d(nn::Conv2dOptions(r.channels, r.channels, 3).padding(1)));
    bn2_ = register_module("bn2", nn::BatchNorm2d(r.channels));
    if (r.stride != 1 || in != r.channels) {
        shortcut_ = register_module(
            "projection", nn::Sequential(nn::Conv2d(nn::Conv2dOptions(in, r.channels, 1).stride(r.stride)),
                                         nn::BatchNorm2d(r.channels)));
    }
}

torch::Tensor ResidualImpl::forward(torch::Tensor x) {
    auto y = torch::relu(bn1_->forward(conv1_->forward(x)));
    y = bn2_->forward(conv2_->forward(y));
    auto skip = shortcut_.is_empty() ? x : shortcut_->forward(x);
    return torch::relu(y + skip);
}

NetworkImpl::NetworkImpl(const ArchitectureSpec& spec, std::uint64_t seed) : spec_(spec), seed_(seed) {
    const auto shaped = infer_shapes(spec_);
    torch::manual_seed(seed);

    const auto& layers = spec_.layers;
    bool flat = false;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto in = shaped.input_shape(i);
        const auto& layer = layers[i];
        const bool next_is_bn = i + 1 < layers.size() && std::holds_alternative<BatchNorm>(layers[i + 1]);
        const bool prev_weighted = i > 0 && (std::holds_alternative<Conv>(layers[i - 1]) ||
                                             std::holds_alternative<FullyConnected>(layers[i - 1]));
        Stage stage;
        const auto name = layer_name(i);
        if (const auto* c = std::get_if<Conv>(&layer)) {
            stage.module = nn::AnyModule(register_module(
                name, nn::Conv2d(nn::Conv2dOptions(in.channels, c->out_channels, c->kernel)
                                     .stride(c->stride)
                                     .padding(c->padding))));
            stage.relu_after = !next_is_bn;
        } else if (const auto* p = std::get_if<Pool>(&layer)) {
            switch (p->kind) {
                case PoolKind::max:
                    stage.module = nn::AnyModule(register_module(
                        name, nn::MaxPool2d(nn::MaxPool2dOptions(p->kernel).stride(p->stride).padding(p->padding))));
                    break;
                case PoolKind::avg:
                    stage.module = nn::AnyModule(register_module(
                        name, nn::AvgPool2d(nn::AvgPool2dOptions(p->kernel).stride(p->stride).padding(p->padding))));
                    break;
                case PoolKind::stochastic:
                    stage.module =
                        nn::AnyModule(register_module(name, StochasticPool(p->kernel, p->stride, p->padding)));
                    break;
            }
        } else if (const auto* n = std::get_if<ResponseNorm>(&layer)) {
            stage.module = nn::AnyModule(register_module(name, nn::LocalResponseNorm(n->window)));
        } else if (const auto* f = std::get_if<FullyConnected>(&layer)) {
            stage.module = nn::AnyModule(register_module(name, nn::Linear(in.elements(), f->units)));
            stage.relu_after = !next_is_bn;
            flat = true;
        } else if (std::holds_alternative<BatchNorm>(layer)) {
            if (flat) stage.module = nn::AnyModule(register_module(name, nn::BatchNorm1d(in.channels)));
            else stage.module = nn::AnyModule(register_module(name, nn::BatchNorm2d(in.channels)));
            stage.relu_after = prev_weighted;
        } else if (const auto* d = std::get_if<Dropout>(&layer)) {
            stage.module = nn::AnyModule(register_module(name, nn::Dropout(d->rate)));
        } else if (const auto* b = std::get_if<InceptionBlock>(&layer)) {
            stage.module = nn::AnyModule(register_module(name, Inception(in.channels, *b)));
        } else if (const auto* r = std::get_if<ResidualBlock>(&layer)) {
            stage.module = nn::AnyModule(register_module(name, Residual(in.channels, *r)));
        } else if (std::holds_alternative<Flatten>(layer)) {
            stage.module = nn::AnyModule(register_module(name, nn::Flatten()));
            flat = true;
        } else if (const auto* k = std::get_if<Classifier>(&layer)) {
            auto head = register_module(name, nn::Linear(in.elements(), k->outputs));
            // near-uniform logits at start: the first loss sits at ln(outputs)
            {
                torch::NoGradGuard no_grad;
                head->weight.normal_(0.0, 0.01);
                head->bias.zero_();
            }
            stage.module = nn::AnyModule(head);
            flat = true;
        }
        stages_.push_back(std::move(stage));
        stage_names_.push_back(name);
    }
}

torch::Tensor NetworkImpl::forward(torch::Tensor x) {
    for (auto& stage : stages_) {
        x = stage.module.forward(x);
        if (stage.relu_after) x = torch::relu(x);
    }
    return x;
}

std::int64_t NetworkImpl::parameter_count() const {
    std::int64_t n = 0;
    for (const auto& p : parameters()) n += p.numel();
    return n;
}

void NetworkImpl::freeze_frontend(std::size_t boundary) {
    if (boundary > stages_.size()) throw std::out_of_range("frontend boundary beyond last layer");
    frozen_ = boundary;
    for (std::size_t i = 0; i < boundary; ++i)
        for (auto& p : stages_[i].module.ptr()->parameters()) p.set_requires_grad(false);
    train(is_training());
}

void NetworkImpl::train(bool on) {
    torch::nn::Module::train(on);
    for (std::size_t i = 0; i < frozen_; ++i) stages_[i].module.ptr()->eval();
}

std::vector<std::pair<std::string, torch::Tensor>> NetworkImpl::prefix_state(std::size_t layers) const {
    std::vector<std::pair<std::string, torch::Tensor>> out;
    for (std::size_t i = 0; i < std::min(layers, stages_.size()); ++i) {
        const auto& mod = stages_[i].module.ptr();
        for (const auto& item : mod->named_parameters()) out.emplace_back(stage_names_[i] + "." + item.key(), item.value());
        for (const auto& item : mod->named_buffers()) out.emplace_back(stage_names_[i] + "." + item.key(), item.value());
    }
    return out;
}

std::vector<std::pair<std::string, torch::Tensor>> NetworkImpl::full_state() const {
    return prefix_state(stages_.size());
}

Network instantiate(const ArchitectureSpec& spec, std::uint64_t seed) { return Network(spec, seed); }

torch::Tensor to_batch(std::span<const FloatImage> images) {
    if (images.empty()) throw std::invalid_argument("cannot build an empty batch");
    const int h = images.front().rows, w = images.front().cols;
    auto batch = torch::empty({static_cast<std::int64_t>(images.size()), 1, h, w}, torch::kFloat32);
    auto* dst = batch.data_ptr<float>();
    const auto plane = static_cast<std::size_t>(h) * w;
    for (std::size_t i = 0; i < images.size(); ++i) {
        if (images[i].rows != h || images[i].cols != w) throw std::invalid_argument("batch images differ in size");
        std::memcpy(dst + i * plane, images[i].data.data(), plane * sizeof(float));
    }
    return batch;
}

std::string state_hash(const std::vector<std::pair<std::string, torch::Tensor>>& state) {
    Sha256 h;
    for (const auto& [name, tensor] : state) {
        auto t = tensor.detach().contiguous().cpu();
        h.update(name);
        h.update(std::string(1, '\0'));
        for (auto d : t.sizes()) h.update(std::to_string(d) + ",");
        h.update(std::string(c10::toString(t.scalar_type())));
        h.update(std::span(static_cast<const std::byte*>(t.data_ptr()), t.nbytes()));
    }
    return h.finish();
}

}  // namespace fer
