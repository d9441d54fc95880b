#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fer/evaluation.hpp"

namespace fer {

struct PoolMember {
    std::string id;
    std::string architecture;
    ProbabilityMatrix validation;
    ProbabilityMatrix test;
};

/// Trained models with cached per-sample class probabilities for the validation and
/// test splits. Members are kept sorted by id; all matrices are aligned with the
/// pool's label vectors.
class ModelPool {
public:
    ModelPool(std::vector<PoolMember> members, std::vector<int> validation_labels, std::vector<int> test_labels);

    std::size_t size() const { return members_.size(); }
    const std::vector<PoolMember>& members() const { return members_; }
    const std::vector<int>& validation_labels() const { return validation_labels_; }
    const std::vector<int>& test_labels() const { return test_labels_; }
    std::size_t index_of(const std::string& id) const;

private:
    std::vector<PoolMember> members_;
    std::vector<int> validation_labels_;
    std::vector<int> test_labels_;
};

/// Row-wise uniform mean of the member matrices (summed in the given order), then
/// argmax with lowest-id tie-break. Throws std::invalid_argument on misalignment.
std::vector<PredictionRecord> vote(std::span<const ProbabilityMatrix* const> members, std::span<const int> labels);

enum class PoolSplit { validation, test };

/// Votes the pool members at `indices`; the order of `indices` does not matter.
std::vector<PredictionRecord> vote(const ModelPool& pool, std::vector<std::size_t> indices, PoolSplit split);

struct EnsembleSpec {
    std::vector<std::string> members;  // sorted, unique
    double validation_accuracy = 0.0;
    double test_accuracy = 0.0;
    std::size_t validation_correct = 0;
    std::uint64_t subsets_evaluated = 0;
};

/// Number of subsets of size 1..max_size drawn from n models.
std::uint64_t subset_count(std::size_t n, std::size_t max_size);

inline constexpr std::uint64_t kDefaultSearchBudget = 5'000'000;

/// Exhaustive search over member subsets of size 1..max_size using the cached
/// validation matrices. Highest validation accuracy wins; ties go to the smaller
/// subset, then the lexicographically smaller id list. Test accuracy is computed
/// once, for the winner. Throws std::length_error when the number of subsets
/// exceeds `budget`.
EnsembleSpec search_best(const ModelPool& pool, std::size_t max_size = 8, std::uint64_t budget = kDefaultSearchBudget);

}  // namespace fer
