#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "fer/config.hpp"
#include "fer/dataset.hpp"
#include "fer/ensemble.hpp"
#include "fer/nn_arch.hpp"
#include "fer/preprocess.hpp"
#include "fer/registry.hpp"
#include "fer/training.hpp"
#include "json.hpp"

// Registry-backed steps behind each CLI command. Every step reads its inputs from
// the registry, writes new artifacts only, and indexes what it wrote.

namespace fer {

/// Parses and validates the CSV, then writes dataset/manifest.txt. Re-ingesting a
/// file with the same content hash is a no-op; a different file is an error.
DatasetManifest ingest_dataset(RunRegistry& registry, const std::filesystem::path& csv);

DatasetManifest read_dataset_manifest(const RunRegistry& registry);

/// Re-parses the ingested source file and checks it against the manifest hash.
Dataset load_registered_dataset(const RunRegistry& registry);

/// Computes NormStats over the full training split and writes dataset/norm_stats.txt.
NormStats compute_registry_stats(RunRegistry& registry);

NormStats read_registry_stats(const RunRegistry& registry);

/// Preprocessed splits; the training split is subsampled (stratified, seeded) when
/// `train_fraction` < 1. Validation and test are always complete.
PreparedData load_prepared(const RunRegistry& registry, double train_fraction, std::uint64_t seed);

nlohmann::json read_run_manifest(const RunRegistry& registry, const std::string& run_id);

/// One training run under the standard protocol. Returns the new run id.
std::string train_run(RunRegistry& registry, const ArchitectureSpec& spec, const TrainConfig& config,
                      double train_fraction, std::ostream* log = nullptr);

struct GridRunSummary {
    std::string grid_id;
    std::vector<std::string> run_ids;  // one per rate
    double best_rate = 0.0;
    std::string best_run;
};

/// Dropout grid search; each rate is its own training run, and a grid run records
/// the outcome table.
GridRunSummary grid_run(RunRegistry& registry, const ArchitectureSpec& spec, const TrainConfig& config,
                        double train_fraction, const std::vector<double>& rates, std::ostream* log = nullptr);

struct EvalSummary {
    std::string run_id;
    Split split = Split::test;
    double accuracy = 0.0;
    std::size_t samples = 0;
    ConfusionMatrix confusion;
};

/// Ten-crop evaluation of a run's best model on one split. Writes
/// eval/<split>/{summary.json,confusion.tsv,probabilities.tsv}; refuses to
/// overwrite an existing evaluation.
EvalSummary eval_run(RunRegistry& registry, const std::string& run_id, Split split);

/// Frozen-frontend retraining of a run's model with the comparison backend.
std::string features_run(RunRegistry& registry, const std::string& parent_run, const TrainConfig& config,
                         std::ostream* log = nullptr);

/// Pool of evaluated runs. Throws RegistryError for an empty selection, a run without
/// validation/test probabilities, or probabilities computed on a different dataset.
ModelPool build_pool(const RunRegistry& registry, const std::vector<std::string>& run_ids);

/// Every run that has both validation and test evaluations.
std::vector<std::string> evaluated_runs(const RunRegistry& registry);

std::string ensemble_run(RunRegistry& registry, const std::vector<std::string>& run_ids, std::size_t max_size,
                         std::uint64_t budget, std::ostream* log = nullptr);

/// Accuracy table with one row per catalog architecture (NA when untrained), the
/// ensemble table, and a bar chart of test accuracy. Returns the report run id.
std::string report_run(RunRegistry& registry);

/// SVG bar chart; entries with a negative value are drawn as "n/a".
std::string render_bar_chart(const std::vector<std::pair<std::string, double>>& bars, const std::string& title);

}  // namespace fer
