#include <cmath>
#include <map>

#include "doctest.h"
#include "fer/nn_arch.hpp"

using namespace fer;

namespace {

ArchitectureSpec make(std::vector<LayerSpec> layers) {
    ArchitectureSpec s;
    s.name = "toy";
    s.layers = std::move(layers);
    s.code = structural_code(s.layers);
    return s;
}

template <typename T>
int count_of(const ArchitectureSpec& s) {
    return static_cast<int>(std::count_if(s.layers.begin(), s.layers.end(),
                                          [](const LayerSpec& l) { return std::holds_alternative<T>(l); }));
}

}  // namespace

TEST_CASE("catalog names, codes, depths and targets") {
    struct Row {
        const char* code;
        int depth;
        std::int64_t target;
    };
    const std::map<std::string, Row> expected = {
        {"tang13", {"CPCPFF", 4, 12'000'000}},          {"kim16", {"CPCPCPFF", 5, 4'800'000}},
        {"yu15", {"PCCPCCPCFFF", 8, 6'200'000}},        {"mollahosseini15", {"CPCPIIPIPFFF", 11, 7'300'000}},
        {"zhang2015", {"CPNCPNCPCFF", 6, 21'300'000}},  {"kim16cvpr", {"CPCPCPFF", 5, 2'400'000}},
        {"vgg", {"CCPCCPCCPCCPFF", 10, 1'800'000}},     {"inception", {"CIPIIPIIPIIPF", 16, 1'200'000}},
        {"resnet", {"3R4R6R3RPF", 33, 5'300'000}},
    };
    REQUIRE(catalog().size() == 9);
    for (const auto& spec : catalog()) {
        CAPTURE(spec.name);
        const auto it = expected.find(spec.name);
        REQUIRE(it != expected.end());
        CHECK(spec.code == it->second.code);
        CHECK(structural_code(spec.layers) == spec.code);
        CHECK(depth(spec) == it->second.depth);
        CHECK(spec.target_params == it->second.target);
        CHECK(spec.input == Shape{1, 48, 48});
    }
    CHECK(&find_architecture("vgg") == &catalog()[6]);
    CHECK_THROWS_AS(find_architecture("alexnet"), std::invalid_argument);
}

TEST_CASE("parameter counts within 5% of the published values") {
    for (const auto& spec : catalog()) {
        CAPTURE(spec.name);
        const auto n = count_parameters(spec);
        CHECK(std::abs(static_cast<double>(n - spec.target_params)) <= 0.05 * static_cast<double>(spec.target_params));
        // adaptations add only BN scale/shift, so the adapted count stays close
        const auto adapted = count_parameters(apply_standard_adaptations(spec));
        CHECK(adapted >= n);
        CHECK(static_cast<double>(adapted - n) < 0.01 * static_cast<double>(n));
    }
}

TEST_CASE("kim16 uses 3x3 receptive fields and a 2048-unit first fc layer") {
    const auto& spec = find_architecture("kim16");
    for (const auto& l : spec.layers)
        if (const auto* c = std::get_if<Conv>(&l)) CHECK(c->kernel == 3);
    const auto first_fc = std::find_if(spec.layers.begin(), spec.layers.end(),
                                       [](const LayerSpec& l) { return std::holds_alternative<FullyConnected>(l); });
    REQUIRE(first_fc != spec.layers.end());
    CHECK(std::get<FullyConnected>(*first_fc).units == 2048);
}

TEST_CASE("layer parameter arithmetic") {
    CHECK(layer_parameters(Classifier{7}, Shape{10, 1, 1}) == 77);
    CHECK(layer_parameters(FullyConnected{7}, Shape{10, 1, 1}) == 77);
    CHECK(layer_parameters(Conv{32, 3, 1, 1}, Shape{1, 48, 48}) == 320);
    CHECK(layer_parameters(BatchNorm{}, Shape{32, 48, 48}) == 64);
    CHECK(layer_parameters(Pool{}, Shape{32, 48, 48}) == 0);
    CHECK(layer_parameters(ResponseNorm{}, Shape{32, 48, 48}) == 0);
    CHECK(layer_parameters(Dropout{0.5}, Shape{32, 1, 1}) == 0);
    // residual with projection: two 3x3 convs + 2 BN, plus 1x1 conv + BN
    const auto res = layer_parameters(ResidualBlock{64, 2}, Shape{32, 12, 12});
    CHECK(res == (32 * 9 * 64 + 64) + 128 + (64 * 9 * 64 + 64) + 128 + (32 * 64 + 64) + 128);
    CHECK(layer_parameters(ResidualBlock{32, 1}, Shape{32, 12, 12}) == 2 * (32 * 9 * 32 + 32 + 64));
}

TEST_CASE("shape inference") {
    SUBCASE("same-padded 3x3 conv keeps 48x48") {
        const auto shaped = infer_shapes(make({Conv{8, 3, 1, 1}, Flatten{}, Classifier{}}));
        CHECK(shaped.output_shapes()[0] == Shape{8, 48, 48});
        CHECK(shaped.output_shapes().back() == Shape{7, 1, 1});
    }
    SUBCASE("four 2x2 pools take 48 to 3") {
        const auto shaped = infer_shapes(make({Pool{}, Pool{}, Pool{}, Pool{}, Flatten{}, Classifier{}}));
        CHECK(shaped.output_shapes()[3] == Shape{1, 3, 3});
    }
    SUBCASE("vgg flattens 3x3 times the last conv width") {
        const auto& vgg = find_architecture("vgg");
        const auto shaped = infer_shapes(vgg);
        std::size_t flatten = 0;
        while (!std::holds_alternative<Flatten>(vgg.layers[flatten])) ++flatten;
        const auto in = shaped.input_shape(flatten);
        int last_conv = 0;
        for (const auto& l : vgg.layers)
            if (const auto* c = std::get_if<Conv>(&l)) last_conv = c->out_channels;
        CHECK(in.height == 3);
        CHECK(in.width == 3);
        CHECK(in.elements() == 9 * last_conv);
        CHECK(shaped.input_shape(backend_boundary(vgg)).elements() == 9 * last_conv);
    }
    SUBCASE("underflow is an error") {
        CHECK_THROWS_AS(infer_shapes(make({Conv{8, 49, 1, 0}, Flatten{}, Classifier{}})), ShapeError);
        CHECK_THROWS_AS(infer_shapes(make({Pool{PoolKind::max, 2, 2, 0}, Pool{}, Pool{}, Pool{}, Pool{}, Pool{},
                                           Flatten{}, Classifier{}})),
                        ShapeError);
    }
    SUBCASE("every catalog spec ends in 7 logits") {
        for (const auto& spec : catalog()) {
            CAPTURE(spec.name);
            CHECK(infer_shapes(spec).output_shapes().back() == Shape{7, 1, 1});
            CHECK(infer_shapes(apply_standard_adaptations(spec)).output_shapes().back() == Shape{7, 1, 1});
        }
    }
}

TEST_CASE("inception block widths") {
    const auto b = InceptionBlock::from_base(64);
    CHECK(b.branch1x1 == 48);
    CHECK(b.reduce3x3 == 32);
    CHECK(b.conv3x3 == 64);
    CHECK(b.reduce5x5 == 8);
    CHECK(b.conv5x5 == 16);
    CHECK(b.pool_proj == 16);
    CHECK(b.out_channels() == 48 + 64 + 16 + 16);
    const auto tiny = InceptionBlock::from_base(4);
    CHECK(tiny.reduce5x5 == 1);
    CHECK_THROWS(InceptionBlock::from_base(0));

    const auto shaped = infer_shapes(make({Conv{16, 3, 1, 1}, InceptionBlock::from_base(32), Flatten{}, Classifier{}}));
    CHECK(shaped.output_shapes()[1] == Shape{24 + 32 + 8 + 8, 48, 48});
}

TEST_CASE("residual blocks keep shape at stride 1 and project otherwise") {
    const auto shaped = infer_shapes(
        make({Conv{32, 3, 1, 1}, ResidualBlock{32, 1}, ResidualBlock{64, 2}, Flatten{}, Classifier{}}));
    CHECK(shaped.output_shapes()[1] == Shape{32, 48, 48});
    CHECK(shaped.output_shapes()[2] == Shape{64, 24, 24});
}

TEST_CASE("standard adaptations") {
    SUBCASE("CPCPFF gets BN after C and F, dropout after the first F") {
        const auto in = make({Conv{8, 3, 1, 1}, Pool{}, Conv{8, 3, 1, 1}, Pool{}, FullyConnected{16}, Classifier{}});
        const auto out = apply_standard_adaptations(in);
        const std::vector<LayerSpec> want = {Conv{8, 3, 1, 1}, BatchNorm{}, Pool{},        Conv{8, 3, 1, 1},
                                             BatchNorm{},      Pool{},      FullyConnected{16}, BatchNorm{},
                                             Dropout{0.5},     Classifier{}};
        CHECK(out.layers == want);
        CHECK(out.code == in.code);
        CHECK(structural_code(out.layers) == "CPCPFF");
    }
    SUBCASE("idempotent on every catalog spec") {
        for (const auto& spec : catalog()) {
            const auto once = apply_standard_adaptations(spec);
            CHECK(apply_standard_adaptations(once) == once);
            CHECK(count_of<BatchNorm>(once) >= count_of<Conv>(spec) + count_of<FullyConnected>(spec));
        }
    }
    SUBCASE("no fc layer: BN after convs, no dropout") {
        const auto out = apply_standard_adaptations(make({Conv{8, 3, 1, 1}, Pool{}, Flatten{}, Classifier{}}));
        CHECK(count_of<BatchNorm>(out) == 1);
        CHECK(count_of<Dropout>(out) == 0);
    }
    SUBCASE("dropout rate applies to every dropout layer") {
        const auto out = with_dropout_rate(apply_standard_adaptations(find_architecture("vgg")), 0.2);
        CHECK(count_of<Dropout>(out) >= 2);
        for (const auto& l : out.layers)
            if (const auto* d = std::get_if<Dropout>(&l)) CHECK(d->rate == 0.2);
        CHECK_THROWS_AS(with_dropout_rate(out, 1.0), std::invalid_argument);
    }
}

TEST_CASE("backend boundary") {
    const auto& tang = find_architecture("tang13");
    const auto b = backend_boundary(tang);
    CHECK(std::holds_alternative<FullyConnected>(tang.layers[b]));
    const auto& resnet = find_architecture("resnet");
    CHECK(std::holds_alternative<Classifier>(resnet.layers[backend_boundary(resnet)]));
}

TEST_CASE("spec json round trip") {
    for (const auto& spec : catalog()) {
        const auto adapted = with_dropout_rate(apply_standard_adaptations(spec), 0.3);
        nlohmann::json j = adapted;
        CHECK(j.get<ArchitectureSpec>() == adapted);
    }
}

TEST_CASE("residual groups split on width changes") {
    const std::vector<LayerSpec> layers{ResidualBlock{32, 1}, ResidualBlock{32, 1}, ResidualBlock{64, 2},
                                        Pool{}, ResidualBlock{64, 1}, Flatten{}, Classifier{}};
    CHECK(structural_code(layers) == "2R1RP1RF");
}
