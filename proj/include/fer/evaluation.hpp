#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "fer/dataset.hpp"

namespace fer {

using ClassProbabilities = std::array<double, kNumClasses>;
using ProbabilityMatrix = std::vector<ClassProbabilities>;

/// Index of the largest entry; the lowest class id wins exact ties.
int argmax(const ClassProbabilities& p);

/// Uniform mean of probability vectors, accumulated in input order.
ClassProbabilities average(std::span<const ClassProbabilities> views);

struct PredictionRecord {
    std::size_t index = 0;
    ClassProbabilities probabilities{};
    int predicted = 0;
    int label = 0;

    friend bool operator==(const PredictionRecord&, const PredictionRecord&) = default;
};

PredictionRecord make_record(std::size_t index, const ClassProbabilities& probabilities, int label);

/// correct / total; throws std::invalid_argument on empty input.
double accuracy(std::span<const PredictionRecord> records);
std::size_t correct_count(std::span<const PredictionRecord> records);

struct ConfusionMatrix {
    std::array<std::array<std::size_t, kNumClasses>, kNumClasses> counts{};  // [true][predicted]
    std::array<double, kNumClasses> recall{};                              // 0 for classes without support

    std::size_t total() const;
    std::size_t support(int true_class) const;
};

ConfusionMatrix confusion_matrix(std::span<const PredictionRecord> records);

/// Tab-separated writers for the per-split evaluation report.
void write_confusion(std::ostream& out, const ConfusionMatrix& cm);
void write_probabilities(std::ostream& out, std::span<const PredictionRecord> records);
std::vector<PredictionRecord> read_probabilities(std::istream& in);

}  // namespace fer
