#include "fer/evaluation.hpp"

#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace fer {

int argmax(const ClassProbabilities& p) {
    int best = 0;
    for (int c = 1; c < kNumClasses; ++c)
        if (p[static_cast<std::size_t>(c)] > p[static_cast<std::size_t>(best)]) best = c;
    return best;
}

ClassProbabilities average(std::span<const ClassProbabilities> views) {
    if (views.empty()) throw std::invalid_argument("cannot average zero probability vectors");
    ClassProbabilities sum{};
    for (const auto& v : views)
        for (std::size_t c = 0; c < sum.size(); ++c) sum[c] += v[c];
    const double k = static_cast<double>(views.size());
    for (auto& x : sum) x /= k;
    return sum;
}

PredictionRecord make_record(std::size_t index, const ClassProbabilities& probabilities, int label) {
    return PredictionRecord{index, probabilities, argmax(probabilities), label};
}

std::size_t correct_count(std::span<const PredictionRecord> records) {
    std::size_t correct = 0;
    for (const auto& r : records) correct += r.predicted == r.label ? 1 : 0;
    return correct;
}

double accuracy(std::span<const PredictionRecord> records) {
    if (records.empty()) throw std::invalid_argument("accuracy of an empty record set is undefined");
    return static_cast<double>(correct_count(records)) / static_cast<double>(records.size());
}

std::size_t ConfusionMatrix::total() const {
    std::size_t t = 0;
    for (const auto& row : counts)
        for (auto v : row) t += v;
    return t;
}

std::size_t ConfusionMatrix::support(int true_class) const {
    std::size_t s = 0;
    for (auto v : counts.at(static_cast<std::size_t>(true_class))) s += v;
    return s;
}

ConfusionMatrix confusion_matrix(std::span<const PredictionRecord> records) {
    if (records.empty()) throw std::invalid_argument("confusion matrix of an empty record set is undefined");
    ConfusionMatrix cm;
    for (const auto& r : records) {
        if (r.label < 0 || r.label >= kNumClasses || r.predicted < 0 || r.predicted >= kNumClasses)
            throw std::out_of_range("prediction record with class outside 0..6");
        ++cm.counts[static_cast<std::size_t>(r.label)][static_cast<std::size_t>(r.predicted)];
    }
    for (int c = 0; c < kNumClasses; ++c) {
        const auto s = cm.support(c);
        cm.recall[static_cast<std::size_t>(c)] =
            s ? static_cast<double>(cm.counts[static_cast<std::size_t>(c)][static_cast<std::size_t>(c)]) / s : 0.0;
    }
    return cm;
}

void write_confusion(std::ostream& out, const ConfusionMatrix& cm) {
    out << "true\\predicted";
    for (int c = 0; c < kNumClasses; ++c) out << '\t' << class_name(c);
    out << "\trecall\n";
    for (int t = 0; t < kNumClasses; ++t) {
        out << class_name(t);
        for (int p = 0; p < kNumClasses; ++p)
            out << '\t' << cm.counts[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)];
        out << '\t' << std::fixed << std::setprecision(4) << cm.recall[static_cast<std::size_t>(t)]
            << std::defaultfloat << '\n';
    }
}

void write_probabilities(std::ostream& out, std::span<const PredictionRecord> records) {
    out << "index\tlabel\tpredicted";
    for (int c = 0; c < kNumClasses; ++c) out << "\tp_" << class_name(c);
    out << '\n';
    out << std::setprecision(17);
    for (const auto& r : records) {
        out << r.index << '\t' << r.label << '\t' << r.predicted;
        for (auto p : r.probabilities) out << '\t' << p;
        out << '\n';
    }
}

std::vector<PredictionRecord> read_probabilities(std::istream& in) {
    std::vector<PredictionRecord> records;
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("probability table is empty");
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ss(line);
        PredictionRecord r;
        ss >> r.index >> r.label >> r.predicted;
        for (auto& p : r.probabilities) ss >> p;
        if (!ss) throw std::runtime_error("malformed probability table line " + std::to_string(lineno));
        records.push_back(r);
    }
    return records;
}

}  // namespace fer
