#include "doctest.h"
#include "fer/ensemble.hpp"
#include "support/ensemble_oracle.hpp"

using namespace fer;

namespace {

ModelPool to_pool(const testing::RandomPool& p) {
    return ModelPool(p.members, p.validation_labels, p.test_labels);
}

}  // namespace

TEST_CASE("vote identities") {
    const auto p = testing::random_pool(1, 3, 30, 30, false);
    const std::vector<const ProbabilityMatrix*> one{&p.members[0].validation};
    const auto single = vote(one, p.validation_labels);
    for (std::size_t r = 0; r < single.size(); ++r) {
        CHECK(single[r].probabilities == p.members[0].validation[r]);
        CHECK(single[r].predicted == argmax(p.members[0].validation[r]));
    }
    for (std::size_t k : {2u, 5u, 8u}) {
        const std::vector<const ProbabilityMatrix*> same(k, &p.members[0].validation);
        const auto merged = vote(same, p.validation_labels);
        for (std::size_t r = 0; r < merged.size(); ++r) {
            for (std::size_t c = 0; c < 7; ++c)
                CHECK(std::abs(merged[r].probabilities[c] - single[r].probabilities[c]) <= 1e-9);
            CHECK(merged[r].predicted == single[r].predicted);
        }
    }
}

TEST_CASE("three members on a five-sample fixture") {
    auto row = [](std::initializer_list<double> v) {
        ClassProbabilities p{};
        std::copy(v.begin(), v.end(), p.begin());
        return p;
    };
    const ProbabilityMatrix a{row({1, 0, 0, 0, 0, 0, 0}), row({0.5, 0.5, 0, 0, 0, 0, 0}), row({0, 0, 1, 0, 0, 0, 0}),
                              row({0.2, 0.2, 0.2, 0.2, 0.2, 0, 0}), row({0, 0, 0, 0, 0, 0, 1})};
    const ProbabilityMatrix b{row({0, 1, 0, 0, 0, 0, 0}), row({0.5, 0.5, 0, 0, 0, 0, 0}), row({0, 0, 0, 1, 0, 0, 0}),
                              row({0, 0, 0, 0, 0.5, 0.5, 0}), row({0, 0, 0, 0, 0, 0, 1})};
    const ProbabilityMatrix c{row({0, 1, 0, 0, 0, 0, 0}), row({0, 0.25, 0.75, 0, 0, 0, 0}), row({0, 0, 0.5, 0.5, 0, 0, 0}),
                              row({0.1, 0, 0, 0, 0, 0.9, 0}), row({0, 0, 0, 0, 0, 1, 0})};
    const std::vector<const ProbabilityMatrix*> mats{&a, &b, &c};
    const std::vector<int> labels{1, 0, 2, 5, 6};
    const auto out = vote(mats, labels);
    // hand-averaged rows
    CHECK(out[0].probabilities[1] == doctest::Approx(2.0 / 3.0));
    CHECK(out[0].predicted == 1);
    CHECK(out[1].probabilities[0] == doctest::Approx(1.0 / 3.0));
    CHECK(out[1].probabilities[1] == doctest::Approx(1.25 / 3.0));
    CHECK(out[1].predicted == 1);
    CHECK(out[2].probabilities[2] == doctest::Approx(0.5));
    CHECK(out[2].predicted == 2);
    CHECK(out[3].probabilities[5] == doctest::Approx(1.4 / 3.0));
    CHECK(out[3].predicted == 5);
    CHECK(out[4].predicted == 6);
    CHECK(accuracy(out) == 0.8);
}

TEST_CASE("vote errors and permutation invariance") {
    const auto p = testing::random_pool(2, 4, 12, 9, false);
    const auto pool = to_pool(p);
    const auto a = vote(pool, {0, 2, 3}, PoolSplit::validation);
    const auto b = vote(pool, {3, 0, 2}, PoolSplit::validation);
    CHECK(a == b);
    CHECK_THROWS_AS(vote(pool, {1, 1}, PoolSplit::test), std::invalid_argument);

    ProbabilityMatrix short_m(3);
    const std::vector<const ProbabilityMatrix*> mis{&p.members[0].validation, &short_m};
    CHECK_THROWS_AS(vote(mis, p.validation_labels), std::invalid_argument);
    CHECK_THROWS_AS(vote(std::vector<const ProbabilityMatrix*>{}, p.validation_labels), std::invalid_argument);
}

TEST_CASE("pool validation") {
    auto p = testing::random_pool(3, 3, 5, 5, false);
    CHECK_THROWS_AS(ModelPool({}, p.validation_labels, p.test_labels), std::invalid_argument);
    auto dup = p.members;
    dup[1].id = dup[0].id;
    CHECK_THROWS_AS(ModelPool(dup, p.validation_labels, p.test_labels), std::invalid_argument);
    auto bad = p.members;
    bad[0].validation[2][0] += 0.01;
    CHECK_THROWS_AS(ModelPool(bad, p.validation_labels, p.test_labels), std::invalid_argument);
    auto misaligned = p.members;
    misaligned[2].test.pop_back();
    CHECK_THROWS_AS(ModelPool(misaligned, p.validation_labels, p.test_labels), std::invalid_argument);

    const ModelPool pool(p.members, p.validation_labels, p.test_labels);
    CHECK(std::is_sorted(pool.members().begin(), pool.members().end(),
                         [](const auto& a, const auto& b) { return a.id < b.id; }));
}

TEST_CASE("subset counting and budget guard") {
    CHECK(subset_count(3, 8) == 7);
    CHECK(subset_count(10, 8) == 1023 - 1 - 10);
    CHECK(subset_count(40, 8) == 100'146'723ULL);  // sum of C(40,k), k = 1..8
    const auto p = testing::random_pool(4, 10, 5, 5, false);
    CHECK_THROWS_AS(search_best(to_pool(p), 8, 100), std::length_error);
}

TEST_CASE("search_best on small pools") {
    SUBCASE("pool of one") {
        const auto p = testing::random_pool(5, 1, 20, 20, false);
        const auto best = search_best(to_pool(p));
        CHECK(best.members == std::vector<std::string>{p.members[0].id});
        CHECK(best.subsets_evaluated == 1);
    }
    SUBCASE("pool of three against the naive oracle") {
        const auto p = testing::random_pool(6, 3, 40, 40, false);
        const auto best = search_best(to_pool(p));
        const auto naive = testing::naive_search(p.members, p.validation_labels, 8);
        CHECK(best.members == naive.members);
        CHECK(best.validation_accuracy == naive.validation_accuracy);
        CHECK(best.subsets_evaluated == 7);
    }
    SUBCASE("winner is never worse than the best single model, and test accuracy is the winner's vote") {
        for (std::uint64_t seed = 10; seed < 20; ++seed) {
            const auto p = testing::random_pool(seed, 6, 30, 25, seed % 2 == 0);
            const auto pool = to_pool(p);
            const auto best = search_best(pool, 4);
            CHECK(best.members.size() <= 4);
            CHECK(std::is_sorted(best.members.begin(), best.members.end()));
            for (std::size_t i = 0; i < pool.size(); ++i)
                CHECK(best.validation_accuracy >= accuracy(vote(pool, {i}, PoolSplit::validation)));
            std::vector<std::size_t> idx;
            for (const auto& id : best.members) idx.push_back(pool.index_of(id));
            CHECK(best.test_accuracy == accuracy(vote(pool, idx, PoolSplit::test)));
            CHECK(best.validation_accuracy == accuracy(vote(pool, idx, PoolSplit::validation)));
        }
    }
    SUBCASE("ties prefer the smaller subset, then lexicographic ids") {
        // every model identical: all subsets tie, so the first id alone wins
        auto p = testing::random_pool(21, 4, 15, 15, false);
        for (auto& m : p.members) {
            m.validation = p.members[0].validation;
            m.test = p.members[0].test;
        }
        const auto best = search_best(to_pool(p));
        CHECK(best.members == std::vector<std::string>{"m100"});
    }
}
