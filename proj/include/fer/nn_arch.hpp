#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"

namespace fer {

struct Conv {
    int out_channels = 0;
    int kernel = 3;
    int stride = 1;
    int padding = 0;
    friend bool operator==(const Conv&, const Conv&) = default;
};

enum class PoolKind { max, avg, stochastic };

struct Pool {
    PoolKind kind = PoolKind::max;
    int kernel = 2;
    int stride = 2;
    int padding = 0;
    friend bool operator==(const Pool&, const Pool&) = default;
};

/// Cross-channel local response normalization; no learnable parameters.
struct ResponseNorm {
    int window = 5;
    friend bool operator==(const ResponseNorm&, const ResponseNorm&) = default;
};

struct FullyConnected {
    int units = 0;
    friend bool operator==(const FullyConnected&, const FullyConnected&) = default;
};

struct BatchNorm {
    friend bool operator==(const BatchNorm&, const BatchNorm&) = default;
};

struct Dropout {
    double rate = 0.5;
    friend bool operator==(const Dropout&, const Dropout&) = default;
};

/// Branch widths of an inception block. Every convolution in the block carries
/// its own batch normalization.
struct InceptionBlock {
    int n = 0;  // 3x3 feature maps
    int branch1x1 = 0;
    int reduce3x3 = 0;
    int conv3x3 = 0;
    int reduce5x5 = 0;
    int conv5x5 = 0;
    int pool_proj = 0;

    /// Widths 3/4 n, 1/2 n, n, 1/8 n, 1/4 n, 1/4 n (rounded down, at least 1).
    static InceptionBlock from_base(int n);
    int out_channels() const { return branch1x1 + conv3x3 + conv5x5 + pool_proj; }
    friend bool operator==(const InceptionBlock&, const InceptionBlock&) = default;
};

/// Two 3x3 convolutions with batch normalization and a shortcut. The shortcut is a
/// 1x1 projection (with batch normalization) exactly when stride != 1 or the channel
/// count changes.
struct ResidualBlock {
    int channels = 0;
    int stride = 1;
    friend bool operator==(const ResidualBlock&, const ResidualBlock&) = default;
};

struct Flatten {
    friend bool operator==(const Flatten&, const Flatten&) = default;
};

struct Classifier {
    int outputs = 7;
    friend bool operator==(const Classifier&, const Classifier&) = default;
};

using LayerSpec = std::variant<Conv, Pool, ResponseNorm, FullyConnected, BatchNorm, Dropout, InceptionBlock,
                               ResidualBlock, Flatten, Classifier>;

std::string describe(const LayerSpec& layer);

struct Shape {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::int64_t elements() const { return static_cast<std::int64_t>(channels) * height * width; }
    bool flat() const { return height == 1 && width == 1; }
    friend bool operator==(const Shape&, const Shape&) = default;
};

struct ArchitectureSpec {
    std::string name;
    std::string code;  // e.g. "CPCPFF"
    std::vector<LayerSpec> layers;
    Shape input{1, 48, 48};
    std::int64_t target_params = 0;

    friend bool operator==(const ArchitectureSpec&, const ArchitectureSpec&) = default;
};

class ShapeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A spec together with the output shape of every layer. Only infer_shapes builds one.
class ShapedArchitecture {
public:
    const ArchitectureSpec& spec() const { return spec_; }
    const std::vector<Shape>& output_shapes() const { return shapes_; }
    const Shape& input_shape(std::size_t layer) const { return layer == 0 ? spec_.input : shapes_[layer - 1]; }

private:
    friend ShapedArchitecture infer_shapes(const ArchitectureSpec& spec);
    ArchitectureSpec spec_;
    std::vector<Shape> shapes_;
};

ShapedArchitecture infer_shapes(const ArchitectureSpec& spec);

std::int64_t count_parameters(const ShapedArchitecture& shaped);
std::int64_t count_parameters(const ArchitectureSpec& spec);
/// Learnable scalars of one layer given its input shape.
std::int64_t layer_parameters(const LayerSpec& layer, const Shape& input);

/// Letter code derived from the layer list: C, P, N, I, F (fc and classifier), and
/// runs of residual blocks as "<count>R". BatchNorm, Dropout and Flatten are silent.
std::string structural_code(const std::vector<LayerSpec>& layers);

/// Number of weighted layers: conv and fc count 1, inception and residual blocks 2.
int depth(const ArchitectureSpec& spec);

/// The nine benchmarked architectures, with standard adaptations not yet applied.
const std::vector<ArchitectureSpec>& catalog();
const ArchitectureSpec& find_architecture(std::string_view name);

/// Batch normalization after every Conv and FullyConnected (never the classifier),
/// one Dropout after the first FullyConnected. Idempotent.
ArchitectureSpec apply_standard_adaptations(ArchitectureSpec spec);

/// Sets the rate of every Dropout layer.
ArchitectureSpec with_dropout_rate(ArchitectureSpec spec, double rate);

/// Index of the first layer of the classification backend: the first FullyConnected,
/// or the Classifier when there is none.
std::size_t backend_boundary(const ArchitectureSpec& spec);

void to_json(nlohmann::json& j, const ArchitectureSpec& spec);
void from_json(const nlohmann::json& j, ArchitectureSpec& spec);

}  // namespace fer
