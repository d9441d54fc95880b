#include "fer/nn_arch.hpp"

#include <algorithm>
#include <sstream>

namespace fer {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};

int window_output(int size, int kernel, int stride, int padding, const char* what) {
    if (kernel <= 0 || stride <= 0 || padding < 0)
        throw ShapeError(std::string(what) + ": kernel and stride must be positive, padding nonnegative");
    const int span = size + 2 * padding - kernel;
    if (span < 0)
        throw ShapeError(std::string(what) + ": kernel " + std::to_string(kernel) + " larger than padded input " +
                         std::to_string(size + 2 * padding));
    const int out = span / stride + 1;
    if (out <= 0) throw ShapeError(std::string(what) + ": spatial size reached 0");
    return out;
}

std::int64_t conv_params(std::int64_t in, std::int64_t out, std::int64_t k) { return in * out * k * k + out; }
std::int64_t bn_params(std::int64_t channels) { return 2 * channels; }
std::int64_t conv_bn_params(std::int64_t in, std::int64_t out, std::int64_t k) {
    return conv_params(in, out, k) + bn_params(out);
}

std::string pool_kind_name(PoolKind kind) {
    switch (kind) {
        case PoolKind::max: return "max";
        case PoolKind::avg: return "avg";
        case PoolKind::stochastic: return "stochastic";
    }
    return "?";
}

PoolKind parse_pool_kind(const std::string& s) {
    if (s == "max") return PoolKind::max;
    if (s == "avg") return PoolKind::avg;
    if (s == "stochastic") return PoolKind::stochastic;
    throw std::invalid_argument("unknown pool kind '" + s + "'");
}

// Shorthand used by the catalog below.
Conv conv(int out, int kernel, int stride = 1, int padding = -1) {
    return Conv{out, kernel, stride, padding < 0 ? kernel / 2 : padding};
}
Pool max_pool(int kernel = 2, int stride = 2) { return Pool{PoolKind::max, kernel, stride, 0}; }
Pool avg_pool(int kernel, int stride) { return Pool{PoolKind::avg, kernel, stride, 0}; }
InceptionBlock inception(int b1, int r3, int c3, int r5, int c5, int pp) {
    return InceptionBlock{c3, b1, r3, c3, r5, c5, pp};
}

std::vector<ArchitectureSpec> build_catalog() {
    std::vector<ArchitectureSpec> specs;

    // Widths for the literature networks are fixed against their published parameter
    // counts (48x48 single-channel input); see README for the derivation.
    specs.push_back({"tang13", "CPCPFF",
                     {conv(32, 5), max_pool(), conv(64, 5), max_pool(), Flatten{}, FullyConnected{1280},
                      Classifier{}},
                     {1, 48, 48},
                     12'000'000});

    specs.push_back({"kim16", "CPCPCPFF",
                     {conv(32, 3), max_pool(), conv(32, 3), max_pool(), conv(64, 3), max_pool(), Flatten{},
                      FullyConnected{2048}, Classifier{}},
                     {1, 48, 48},
                     4'800'000});

    specs.push_back({"yu15", "PCCPCCPCFFF",
                     {max_pool(), conv(64, 3), conv(64, 3), max_pool(), conv(128, 3), conv(128, 3), max_pool(),
                      conv(128, 3), Flatten{}, FullyConnected{1024}, FullyConnected{1024}, Classifier{}},
                     {1, 48, 48},
                     6'200'000});

    specs.push_back({"mollahosseini15", "CPCPIIPIPFFF",
                     {conv(64, 7, 2, 3), max_pool(), conv(192, 3), max_pool(), inception(64, 96, 128, 16, 32, 32),
                      inception(128, 128, 192, 32, 96, 64), max_pool(), inception(192, 96, 208, 16, 48, 64),
                      max_pool(3, 3), Flatten{}, FullyConnected{4096}, FullyConnected{1024}, Classifier{}},
                     {1, 48, 48},
                     7'300'000});

    specs.push_back({"zhang2015", "CPNCPNCPCFF",
                     {conv(96, 5), max_pool(), ResponseNorm{5}, conv(256, 5), max_pool(), ResponseNorm{5},
                      conv(384, 3), max_pool(), conv(256, 3), Flatten{}, FullyConnected{2048}, Classifier{}},
                     {1, 48, 48},
                     21'300'000});

    specs.push_back({"kim16cvpr", "CPCPCPFF",
                     {conv(32, 3), max_pool(), conv(32, 3), max_pool(), conv(64, 3), max_pool(), Flatten{},
                      FullyConnected{1024}, Classifier{}},
                     {1, 48, 48},
                     2'400'000});

    {
        std::vector<LayerSpec> layers;
        for (int width : {32, 64, 128, 128}) {
            layers.insert(layers.end(), {conv(width, 3), conv(width, 3), max_pool(), Dropout{0.5}});
        }
        layers.insert(layers.end(), {Flatten{}, FullyConnected{1024}, Classifier{}});
        specs.push_back({"vgg", "CCPCCPCCPCCPFF", std::move(layers), {1, 48, 48}, 1'800'000});
    }

    {
        // CIPIIPIIPIIPF: n = 32, 64, ..., 224 over the seven inception blocks
        std::vector<LayerSpec> layers{conv(64, 3)};
        int n = 32;
        auto add_block = [&] {
            layers.push_back(InceptionBlock::from_base(n));
            n += 32;
        };
        add_block();
        layers.push_back(max_pool());
        add_block();
        add_block();
        layers.push_back(max_pool());
        add_block();
        add_block();
        layers.push_back(max_pool());
        add_block();
        add_block();
        layers.insert(layers.end(), {avg_pool(6, 6), Dropout{0.5}, Flatten{}, Classifier{}});
        specs.push_back({"inception", "CIPIIPIIPIIPF", std::move(layers), {1, 48, 48}, 1'200'000});
    }

    {
        std::vector<LayerSpec> layers;
        const int blocks[] = {3, 4, 6, 3};
        const int widths[] = {32, 64, 128, 256};
        for (int g = 0; g < 4; ++g)
            for (int b = 0; b < blocks[g]; ++b) layers.push_back(ResidualBlock{widths[g], (g > 0 && b == 0) ? 2 : 1});
        layers.insert(layers.end(), {avg_pool(6, 6), Dropout{0.5}, Flatten{}, Classifier{}});
        specs.push_back({"resnet", "3R4R6R3RPF", std::move(layers), {1, 48, 48}, 5'300'000});
    }

    return specs;
}

}  // namespace

InceptionBlock InceptionBlock::from_base(int n) {
    if (n <= 0) throw std::invalid_argument("inception base count must be positive");
    auto part = [n](int num, int den) { return std::max(1, n * num / den); };
    return InceptionBlock{n, part(3, 4), part(1, 2), n, part(1, 8), part(1, 4), part(1, 4)};
}

std::string describe(const LayerSpec& layer) {
    return std::visit(
        Overloaded{
            [](const Conv& c) {
                return "Conv(" + std::to_string(c.out_channels) + ", " + std::to_string(c.kernel) + "x" +
                       std::to_string(c.kernel) + ", stride " + std::to_string(c.stride) + ", pad " +
                       std::to_string(c.padding) + ")";
            },
            [](const Pool& p) {
                return "Pool(" + pool_kind_name(p.kind) + ", " + std::to_string(p.kernel) + ", stride " +
                       std::to_string(p.stride) + ")";
            },
            [](const ResponseNorm& n) { return "ResponseNorm(" + std::to_string(n.window) + ")"; },
            [](const FullyConnected& f) { return "FullyConnected(" + std::to_string(f.units) + ")"; },
            [](const BatchNorm&) { return std::string("BatchNorm"); },
            [](const Dropout& d) {
                std::ostringstream os;
                os << "Dropout(" << d.rate << ")";
                return os.str();
            },
            [](const InceptionBlock& b) { return "Inception(n=" + std::to_string(b.n) + ")"; },
            [](const ResidualBlock& r) {
                return "Residual(" + std::to_string(r.channels) + ", stride " + std::to_string(r.stride) + ")";
            },
            [](const Flatten&) { return std::string("Flatten"); },
            [](const Classifier& c) { return "Classifier(" + std::to_string(c.outputs) + ")"; },
        },
        layer);
}

ShapedArchitecture infer_shapes(const ArchitectureSpec& spec) {
    if (spec.input.channels <= 0 || spec.input.height <= 0 || spec.input.width <= 0)
        throw ShapeError(spec.name + ": input shape must be positive");
    ShapedArchitecture shaped;
    shaped.spec_ = spec;
    shaped.shapes_.reserve(spec.layers.size());
    Shape cur = spec.input;
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const std::string where = spec.name + " layer " + std::to_string(i) + " " + describe(spec.layers[i]);
        cur = std::visit(
            Overloaded{
                [&](const Conv& c) {
                    if (c.out_channels <= 0) throw ShapeError(where + ": channels must be positive");
                    return Shape{c.out_channels, window_output(cur.height, c.kernel, c.stride, c.padding, where.c_str()),
                                 window_output(cur.width, c.kernel, c.stride, c.padding, where.c_str())};
                },
                [&](const Pool& p) {
                    return Shape{cur.channels, window_output(cur.height, p.kernel, p.stride, p.padding, where.c_str()),
                                 window_output(cur.width, p.kernel, p.stride, p.padding, where.c_str())};
                },
                [&](const ResponseNorm& n) {
                    if (n.window <= 0) throw ShapeError(where + ": window must be positive");
                    return cur;
                },
                [&](const FullyConnected& f) {
                    if (f.units <= 0) throw ShapeError(where + ": units must be positive");
                    if (!cur.flat()) throw ShapeError(where + ": needs flattened input");
                    return Shape{f.units, 1, 1};
                },
                [&](const BatchNorm&) { return cur; },
                [&](const Dropout& d) {
                    if (!(d.rate >= 0.0 && d.rate < 1.0)) throw ShapeError(where + ": rate must lie in [0, 1)");
                    return cur;
                },
                [&](const InceptionBlock& b) {
                    if (std::min({b.branch1x1, b.reduce3x3, b.conv3x3, b.reduce5x5, b.conv5x5, b.pool_proj}) <= 0)
                        throw ShapeError(where + ": branch widths must be positive");
                    if (cur.height < 1 || cur.width < 1) throw ShapeError(where + ": empty input");
                    return Shape{b.out_channels(), cur.height, cur.width};
                },
                [&](const ResidualBlock& r) {
                    if (r.channels <= 0 || r.stride <= 0) throw ShapeError(where + ": channels and stride must be positive");
                    return Shape{r.channels, window_output(cur.height, 3, r.stride, 1, where.c_str()),
                                 window_output(cur.width, 3, r.stride, 1, where.c_str())};
                },
                [&](const Flatten&) { return Shape{static_cast<int>(cur.elements()), 1, 1}; },
                [&](const Classifier& c) {
                    if (c.outputs <= 0) throw ShapeError(where + ": outputs must be positive");
                    if (!cur.flat()) throw ShapeError(where + ": needs flattened input");
                    return Shape{c.outputs, 1, 1};
                },
            },
            spec.layers[i]);
        shaped.shapes_.push_back(cur);
    }
    if (spec.layers.empty() || !std::holds_alternative<Classifier>(spec.layers.back()))
        throw ShapeError(spec.name + ": last layer must be the classifier");
    if (cur != Shape{7, 1, 1}) throw ShapeError(spec.name + ": network must end in 7 logits");
    return shaped;
}

std::int64_t layer_parameters(const LayerSpec& layer, const Shape& in) {
    const std::int64_t c = in.channels;
    return std::visit(
        Overloaded{
            [&](const Conv& l) { return conv_params(c, l.out_channels, l.kernel); },
            [](const Pool&) { return std::int64_t{0}; },
            [](const ResponseNorm&) { return std::int64_t{0}; },
            [&](const FullyConnected& l) { return in.elements() * l.units + l.units; },
            [&](const BatchNorm&) { return bn_params(c); },
            [](const Dropout&) { return std::int64_t{0}; },
            [&](const InceptionBlock& b) {
                return conv_bn_params(c, b.branch1x1, 1) + conv_bn_params(c, b.reduce3x3, 1) +
                       conv_bn_params(b.reduce3x3, b.conv3x3, 3) + conv_bn_params(c, b.reduce5x5, 1) +
                       conv_bn_params(b.reduce5x5, b.conv5x5, 5) + conv_bn_params(c, b.pool_proj, 1);
            },
            [&](const ResidualBlock& r) {
                std::int64_t p = conv_bn_params(c, r.channels, 3) + conv_bn_params(r.channels, r.channels, 3);
                if (r.stride != 1 || c != r.channels) p += conv_bn_params(c, r.channels, 1);
                return p;
            },
            [](const Flatten&) { return std::int64_t{0}; },
            [&](const Classifier& l) { return in.elements() * l.outputs + l.outputs; },
        },
        layer);
}

std::int64_t count_parameters(const ShapedArchitecture& shaped) {
    std::int64_t total = 0;
    const auto& layers = shaped.spec().layers;
    for (std::size_t i = 0; i < layers.size(); ++i) total += layer_parameters(layers[i], shaped.input_shape(i));
    return total;
}

std::int64_t count_parameters(const ArchitectureSpec& spec) { return count_parameters(infer_shapes(spec)); }

std::string structural_code(const std::vector<LayerSpec>& layers) {
    std::string code;
    int residual_run = 0;
    int residual_width = 0;
    auto flush = [&] {
        if (residual_run > 0) code += std::to_string(residual_run) + "R";
        residual_run = 0;
    };
    for (const auto& layer : layers) {
        if (const auto* r = std::get_if<ResidualBlock>(&layer)) {
            // a group is a run of blocks with one width
            if (r->channels != residual_width) flush();
            residual_width = r->channels;
            ++residual_run;
            continue;
        }
        residual_width = 0;
        char letter = 0;
        if (std::holds_alternative<Conv>(layer)) letter = 'C';
        else if (std::holds_alternative<Pool>(layer)) letter = 'P';
        else if (std::holds_alternative<ResponseNorm>(layer)) letter = 'N';
        else if (std::holds_alternative<InceptionBlock>(layer)) letter = 'I';
        else if (std::holds_alternative<FullyConnected>(layer) || std::holds_alternative<Classifier>(layer)) letter = 'F';
        if (letter) {
            flush();
            code += letter;
        }
    }
    flush();
    return code;
}

int depth(const ArchitectureSpec& spec) {
    int d = 0;
    for (const auto& layer : spec.layers) {
        if (std::holds_alternative<Conv>(layer) || std::holds_alternative<FullyConnected>(layer) ||
            std::holds_alternative<Classifier>(layer))
            d += 1;
        else if (std::holds_alternative<InceptionBlock>(layer) || std::holds_alternative<ResidualBlock>(layer))
            d += 2;
    }
    return d;
}

const std::vector<ArchitectureSpec>& catalog() {
    static const std::vector<ArchitectureSpec> specs = build_catalog();
    return specs;
}

const ArchitectureSpec& find_architecture(std::string_view name) {
    for (const auto& s : catalog())
        if (s.name == name) return s;
    std::string known;
    for (const auto& s : catalog()) known += (known.empty() ? "" : ", ") + s.name;
    throw std::invalid_argument("unknown architecture '" + std::string(name) + "' (known: " + known + ")");
}

ArchitectureSpec apply_standard_adaptations(ArchitectureSpec spec) {
    std::vector<LayerSpec> out;
    out.reserve(spec.layers.size() * 2);
    bool seen_fc = false;
    const auto& in = spec.layers;
    for (std::size_t i = 0; i < in.size(); ++i) {
        out.push_back(in[i]);
        const bool is_fc = std::holds_alternative<FullyConnected>(in[i]);
        if (!is_fc && !std::holds_alternative<Conv>(in[i])) continue;

        std::size_t next = i + 1;
        if (next < in.size() && std::holds_alternative<BatchNorm>(in[next])) {
            out.push_back(in[next]);
            i = next++;
        } else {
            out.push_back(BatchNorm{});
        }
        if (is_fc && !seen_fc) {
            seen_fc = true;
            if (!(next < in.size() && std::holds_alternative<Dropout>(in[next]))) out.push_back(Dropout{0.5});
        }
    }
    spec.layers = std::move(out);
    return spec;
}

ArchitectureSpec with_dropout_rate(ArchitectureSpec spec, double rate) {
    if (!(rate >= 0.0 && rate < 1.0)) throw std::invalid_argument("dropout rate must lie in [0, 1)");
    for (auto& layer : spec.layers)
        if (auto* d = std::get_if<Dropout>(&layer)) d->rate = rate;
    return spec;
}

std::size_t backend_boundary(const ArchitectureSpec& spec) {
    for (std::size_t i = 0; i < spec.layers.size(); ++i)
        if (std::holds_alternative<FullyConnected>(spec.layers[i])) return i;
    for (std::size_t i = 0; i < spec.layers.size(); ++i)
        if (std::holds_alternative<Classifier>(spec.layers[i])) return i;
    throw ShapeError(spec.name + ": no classification backend");
}

void to_json(nlohmann::json& j, const ArchitectureSpec& spec) {
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& layer : spec.layers) {
        layers.push_back(std::visit(
            Overloaded{
                [](const Conv& c) {
                    return nlohmann::json{{"type", "conv"}, {"out_channels", c.out_channels}, {"kernel", c.kernel},
                                          {"stride", c.stride}, {"padding", c.padding}};
                },
                [](const Pool& p) {
                    return nlohmann::json{{"type", "pool"}, {"kind", pool_kind_name(p.kind)}, {"kernel", p.kernel},
                                          {"stride", p.stride}, {"padding", p.padding}};
                },
                [](const ResponseNorm& n) { return nlohmann::json{{"type", "response_norm"}, {"window", n.window}}; },
                [](const FullyConnected& f) { return nlohmann::json{{"type", "fc"}, {"units", f.units}}; },
                [](const BatchNorm&) { return nlohmann::json{{"type", "batch_norm"}}; },
                [](const Dropout& d) { return nlohmann::json{{"type", "dropout"}, {"rate", d.rate}}; },
                [](const InceptionBlock& b) {
                    return nlohmann::json{{"type", "inception"}, {"n", b.n},
                                          {"widths", {b.branch1x1, b.reduce3x3, b.conv3x3, b.reduce5x5, b.conv5x5, b.pool_proj}}};
                },
                [](const ResidualBlock& r) {
                    return nlohmann::json{{"type", "residual"}, {"channels", r.channels}, {"stride", r.stride}};
                },
                [](const Flatten&) { return nlohmann::json{{"type", "flatten"}}; },
                [](const Classifier& c) { return nlohmann::json{{"type", "classifier"}, {"outputs", c.outputs}}; },
            },
            layer));
    }
    j = nlohmann::json{{"name", spec.name},
                       {"code", spec.code},
                       {"input", {spec.input.channels, spec.input.height, spec.input.width}},
                       {"target_params", spec.target_params},
                       {"layers", std::move(layers)}};
}

void from_json(const nlohmann::json& j, ArchitectureSpec& spec) {
    spec.name = j.at("name").get<std::string>();
    spec.code = j.at("code").get<std::string>();
    const auto& in = j.at("input");
    spec.input = Shape{in.at(0).get<int>(), in.at(1).get<int>(), in.at(2).get<int>()};
    spec.target_params = j.at("target_params").get<std::int64_t>();
    spec.layers.clear();
    for (const auto& l : j.at("layers")) {
        const auto type = l.at("type").get<std::string>();
        if (type == "conv")
            spec.layers.push_back(Conv{l.at("out_channels").get<int>(), l.at("kernel").get<int>(),
                                       l.at("stride").get<int>(), l.at("padding").get<int>()});
        else if (type == "pool")
            spec.layers.push_back(Pool{parse_pool_kind(l.at("kind").get<std::string>()), l.at("kernel").get<int>(),
                                       l.at("stride").get<int>(), l.at("padding").get<int>()});
        else if (type == "response_norm") spec.layers.push_back(ResponseNorm{l.at("window").get<int>()});
        else if (type == "fc") spec.layers.push_back(FullyConnected{l.at("units").get<int>()});
        else if (type == "batch_norm") spec.layers.push_back(BatchNorm{});
        else if (type == "dropout") spec.layers.push_back(Dropout{l.at("rate").get<double>()});
        else if (type == "inception") {
            const auto& w = l.at("widths");
            spec.layers.push_back(InceptionBlock{l.at("n").get<int>(), w.at(0).get<int>(), w.at(1).get<int>(),
                                                 w.at(2).get<int>(), w.at(3).get<int>(), w.at(4).get<int>(),
                                                 w.at(5).get<int>()});
        } else if (type == "residual")
            spec.layers.push_back(ResidualBlock{l.at("channels").get<int>(), l.at("stride").get<int>()});
        else if (type == "flatten") spec.layers.push_back(Flatten{});
        else if (type == "classifier") spec.layers.push_back(Classifier{l.at("outputs").get<int>()});
        else throw std::invalid_argument("unknown layer type '" + type + "'");
    }
}

}  // namespace fer
