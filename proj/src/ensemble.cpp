#include "fer/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace fer {

namespace {

void check_matrix(const ProbabilityMatrix& m, std::size_t rows, const std::string& what) {
    if (m.size() != rows)
        throw std::invalid_argument(what + " has " + std::to_string(m.size()) + " rows, expected " +
                                    std::to_string(rows));
    for (std::size_t r = 0; r < m.size(); ++r) {
        double s = 0.0;
        for (auto p : m[r]) {
            if (!(p >= 0.0)) throw std::invalid_argument(what + " row " + std::to_string(r) + " has a negative entry");
            s += p;
        }
        if (std::abs(s - 1.0) > 1e-6)
            throw std::invalid_argument(what + " row " + std::to_string(r) + " sums to " + std::to_string(s));
    }
}

}  // namespace

ModelPool::ModelPool(std::vector<PoolMember> members, std::vector<int> validation_labels, std::vector<int> test_labels)
    : members_(std::move(members)),
      validation_labels_(std::move(validation_labels)),
      test_labels_(std::move(test_labels)) {
    if (members_.empty()) throw std::invalid_argument("model pool is empty");
    std::sort(members_.begin(), members_.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    for (std::size_t i = 1; i < members_.size(); ++i)
        if (members_[i].id == members_[i - 1].id)
            throw std::invalid_argument("duplicate model id '" + members_[i].id + "' in pool");
    for (const auto& m : members_) {
        check_matrix(m.validation, validation_labels_.size(), m.id + " validation matrix");
        check_matrix(m.test, test_labels_.size(), m.id + " test matrix");
    }
}

std::size_t ModelPool::index_of(const std::string& id) const {
    for (std::size_t i = 0; i < members_.size(); ++i)
        if (members_[i].id == id) return i;
    throw std::out_of_range("model '" + id + "' not in pool");
}

std::vector<PredictionRecord> vote(std::span<const ProbabilityMatrix* const> members, std::span<const int> labels) {
    if (members.empty()) throw std::invalid_argument("vote needs at least one member");
    const auto rows = members.front()->size();
    for (const auto* m : members)
        if (m->size() != rows) throw std::invalid_argument("misaligned probability matrices");
    if (labels.size() != rows) throw std::invalid_argument("label count does not match probability rows");

    const double k = static_cast<double>(members.size());
    std::vector<PredictionRecord> out;
    out.reserve(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        ClassProbabilities sum{};
        for (const auto* m : members)
            for (std::size_t c = 0; c < sum.size(); ++c) sum[c] += (*m)[r][c];
        for (auto& x : sum) x /= k;
        out.push_back(make_record(r, sum, labels[r]));
    }
    return out;
}

std::vector<PredictionRecord> vote(const ModelPool& pool, std::vector<std::size_t> indices, PoolSplit split) {
    std::sort(indices.begin(), indices.end());
    if (std::adjacent_find(indices.begin(), indices.end()) != indices.end())
        throw std::invalid_argument("duplicate ensemble member");
    std::vector<const ProbabilityMatrix*> mats;
    for (auto i : indices) {
        const auto& m = pool.members().at(i);
        mats.push_back(split == PoolSplit::validation ? &m.validation : &m.test);
    }
    const auto& labels = split == PoolSplit::validation ? pool.validation_labels() : pool.test_labels();
    return vote(mats, labels);
}

std::uint64_t subset_count(std::size_t n, std::size_t max_size) {
    std::uint64_t total = 0;
    std::uint64_t binom = 1;  // C(n, k)
    for (std::size_t k = 1; k <= std::min(n, max_size); ++k) {
        binom = binom * (n - k + 1) / k;
        total += binom;
    }
    return total;
}

EnsembleSpec search_best(const ModelPool& pool, std::size_t max_size, std::uint64_t budget) {
    if (max_size == 0) throw std::invalid_argument("maximum ensemble size must be at least 1");
    const auto n = pool.size();
    const auto subsets = subset_count(n, max_size);
    if (subsets > budget)
        throw std::length_error("exhaustive search over " + std::to_string(n) + " models needs " +
                                std::to_string(subsets) + " subsets, above the budget of " + std::to_string(budget) +
                                "; prune the pool or lower the maximum ensemble size");

    const auto& labels = pool.validation_labels();
    const auto rows = labels.size();
    const auto depth_limit = std::min(n, max_size);

    // sums[d] holds the running sum of the first d+1 chosen members, added in index order
    std::vector<ProbabilityMatrix> sums(depth_limit, ProbabilityMatrix(rows));
    std::vector<std::size_t> chosen;
    chosen.reserve(depth_limit);

    std::vector<std::size_t> best;
    std::size_t best_correct = 0;
    std::uint64_t evaluated = 0;

    auto score = [&](const ProbabilityMatrix& sum, std::size_t k) {
        const double kd = static_cast<double>(k);
        std::size_t correct = 0;
        for (std::size_t r = 0; r < rows; ++r) {
            ClassProbabilities mean = sum[r];
            for (auto& x : mean) x /= kd;
            correct += argmax(mean) == labels[r] ? 1 : 0;
        }
        return correct;
    };

    // depth-first in increasing index order visits each size class lexicographically
    auto visit = [&](auto&& self, std::size_t start) -> void {
        const auto d = chosen.size();
        for (std::size_t i = start; i < n; ++i) {
            const auto& m = pool.members()[i].validation;
            auto& cur = sums[d];
            for (std::size_t r = 0; r < rows; ++r)
                for (std::size_t c = 0; c < kNumClasses; ++c) cur[r][c] = (d == 0 ? 0.0 : sums[d - 1][r][c]) + m[r][c];
            chosen.push_back(i);
            ++evaluated;
            const auto correct = score(cur, chosen.size());
            if (best.empty() || correct > best_correct || (correct == best_correct && chosen.size() < best.size())) {
                best = chosen;
                best_correct = correct;
            }
            if (chosen.size() < depth_limit) self(self, i + 1);
            chosen.pop_back();
        }
    };
    visit(visit, 0);

    EnsembleSpec spec;
    for (auto i : best) spec.members.push_back(pool.members()[i].id);
    spec.validation_correct = best_correct;
    spec.validation_accuracy = rows ? static_cast<double>(best_correct) / static_cast<double>(rows) : 0.0;
    const auto test_records = vote(pool, best, PoolSplit::test);
    spec.test_accuracy = test_records.empty() ? 0.0 : accuracy(test_records);
    spec.subsets_evaluated = evaluated;
    return spec;
}

}  // namespace fer
