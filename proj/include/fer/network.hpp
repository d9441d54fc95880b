#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fer/grid.hpp"
#include "fer/nn_arch.hpp"

namespace fer {

/// Stochastic pooling: in training, each window outputs one activation sampled with
/// probability proportional to its value; in evaluation, the probability-weighted
/// mean. Expects nonnegative input.
class StochasticPoolImpl : public torch::nn::Module {
public:
    StochasticPoolImpl(int kernel, int stride, int padding);
    torch::Tensor forward(torch::Tensor x);

private:
    int kernel_, stride_, padding_;
};
TORCH_MODULE(StochasticPool);

class InceptionImpl : public torch::nn::Module {
public:
    InceptionImpl(int in_channels, const InceptionBlock& block);
    torch::Tensor forward(torch::Tensor x);

private:
    torch::nn::Sequential branch1_{nullptr}, branch3_{nullptr}, branch5_{nullptr}, branch_pool_{nullptr};
};
TORCH_MODULE(Inception);

class ResidualImpl : public torch::nn::Module {
public:
    ResidualImpl(int in_channels, const ResidualBlock& block);
    torch::Tensor forward(torch::Tensor x);

private:
    torch::nn::Conv2d conv1_{nullptr}, conv2_{nullptr};
    torch::nn::BatchNorm2d bn1_{nullptr}, bn2_{nullptr};
    torch::nn::Sequential shortcut_{nullptr};
};
TORCH_MODULE(Residual);

/// A network built from an ArchitectureSpec. Layer i is registered as "layer<i>",
/// so two networks sharing a spec prefix share parameter names for that prefix.
/// ReLU follows every Conv and FullyConnected, after its BatchNorm when one follows.
class NetworkImpl : public torch::nn::Module {
public:
    NetworkImpl(const ArchitectureSpec& spec, std::uint64_t seed);

    torch::Tensor forward(torch::Tensor x);

    const ArchitectureSpec& spec() const { return spec_; }
    std::uint64_t seed() const { return seed_; }
    std::int64_t parameter_count() const;

    /// Freezes layers [0, boundary): no gradients, and always in evaluation mode.
    void freeze_frontend(std::size_t boundary);
    std::size_t frozen_layers() const { return frozen_; }

    /// Parameters and buffers of the first `layers` layers, in registration order.
    std::vector<std::pair<std::string, torch::Tensor>> prefix_state(std::size_t layers) const;
    /// Every parameter and buffer, in registration order.
    std::vector<std::pair<std::string, torch::Tensor>> full_state() const;

    void train(bool on = true) override;

private:
    struct Stage {
        torch::nn::AnyModule module;
        bool relu_after = false;
    };

    ArchitectureSpec spec_;
    std::uint64_t seed_;
    std::vector<Stage> stages_;
    std::vector<std::string> stage_names_;
    std::size_t frozen_ = 0;
};
TORCH_MODULE(Network);

/// Deterministic construction: parameters are drawn after seeding the torch
/// generator with `seed`. Throws ShapeError for inconsistent specs.
Network instantiate(const ArchitectureSpec& spec, std::uint64_t seed);

/// Stacks 1-channel images into an [N, 1, H, W] float tensor.
torch::Tensor to_batch(std::span<const FloatImage> images);

/// SHA-256 over names, shapes and bytes of the given tensors.
std::string state_hash(const std::vector<std::pair<std::string, torch::Tensor>>& state);

}  // namespace fer
