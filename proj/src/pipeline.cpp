#include "fer/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

#include "fer/checkpoint.hpp"
#include "fer/evaluation.hpp"
#include "fer/inference.hpp"

namespace fer {

namespace fs = std::filesystem;

namespace {

std::string fmt_double(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

std::string percent(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", 100.0 * v);
    return buf;
}

void write_json(const fs::path& path, const nlohmann::json& j) { write_new_file(path, j.dump(2) + "\n"); }

nlohmann::json read_json(const fs::path& path) {
    try {
        return nlohmann::json::parse(read_text_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw RegistryError(path.string() + ": " + e.what());
    }
}

std::string metrics_table(const TrainRun& run) {
    std::ostringstream os;
    os << "epoch\tlr\ttrain_loss\ttrain_accuracy\tvalidation_accuracy\n" << std::setprecision(17);
    for (const auto& e : run.epochs)
        os << e.epoch << '\t' << e.lr << '\t' << e.train_loss << '\t' << e.train_accuracy << '\t'
           << e.validation_accuracy << '\n';
    return os.str();
}

// Writes manifest, metrics and the best model for a finished training run.
void persist_training(RunRegistry& registry, const std::string& run_id, const TrainResult& result,
                      nlohmann::json manifest) {
    const auto dir = registry.run_dir(run_id);
    const auto& arch = result.run.architecture;

    const auto best = save_checkpoint(result.record.model, dir / "checkpoints" / "best",
                                      {{"run_id", run_id}, {"best_epoch", result.run.best_epoch}});
    nlohmann::json checkpoints = nlohmann::json::array();
    for (const auto& c : result.run.checkpoints) checkpoints.push_back(fs::relative(c, dir).generic_string());

    manifest["best_epoch"] = result.run.best_epoch;
    manifest["diverged"] = result.run.diverged;
    manifest["validation_accuracy"] = result.record.validation_accuracy;
    manifest["epochs_run"] = result.run.epochs.size();
    manifest["checkpoints"] = checkpoints;
    manifest["model"] = fs::relative(best, dir).generic_string();
    manifest["parameters"] = result.record.model->parameter_count();

    write_new_file(dir / "metrics.tsv", metrics_table(result.run));
    write_json(dir / "manifest.json", manifest);

    registry.record(run_id, "manifest", arch, dir / "manifest.json");
    registry.record(run_id, "metrics", arch, dir / "metrics.tsv");
    for (const auto& c : result.run.checkpoints) {
        registry.record(run_id, "checkpoint", arch, c);
        registry.record(run_id, "checkpoint", arch, fs::path(c).replace_extension(".bin"));
    }
    registry.record(run_id, "model", arch, best);
    registry.record(run_id, "model", arch, fs::path(best).replace_extension(".bin"));
}

nlohmann::json base_manifest(const std::string& run_id, std::string_view kind, const ArchitectureSpec& spec,
                             const TrainConfig& config, const PreparedData& data, const NormStats& stats,
                             double fraction) {
    return {{"format", "fer-run/1"},
            {"run_id", run_id},
            {"kind", kind},
            {"architecture", spec.name},
            {"global_seed", config.global_seed},
            {"config", to_json(config)},
            {"dataset_hash", data.dataset_hash},
            {"norm_stats", {{"mean", stats.mean}, {"std", stats.std}}},
            {"train_fraction", fraction},
            {"train_samples", data.train.size()},
            {"spec", spec}};
}

TrainOptions options_for(const fs::path& run_dir, std::ostream* log, const std::string& label) {
    TrainOptions options;
    options.checkpoint_dir = run_dir / "checkpoints";
    if (log) {
        options.on_epoch = [log, label](const EpochRecord& e) {
            *log << label << " epoch " << e.epoch << "  lr " << e.lr << "  loss " << std::fixed << std::setprecision(4)
                 << e.train_loss << "  train " << percent(e.train_accuracy) << "%  val "
                 << percent(e.validation_accuracy) << "%" << std::defaultfloat << std::endl;
        };
    }
    return options;
}

ProbabilityMatrix matrix_of(const std::vector<PredictionRecord>& records) {
    ProbabilityMatrix m;
    m.reserve(records.size());
    for (const auto& r : records) m.push_back(r.probabilities);
    return m;
}

std::vector<int> labels_of(const std::vector<PredictionRecord>& records) {
    std::vector<int> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back(r.label);
    return out;
}

fs::path eval_dir(const RunRegistry& registry, const std::string& run_id, Split split) {
    return registry.run_dir(run_id) / "eval" / std::string(split_name(split));
}

}  // namespace

DatasetManifest ingest_dataset(RunRegistry& registry, const fs::path& csv) {
    const auto ds = parse_fer2013(csv);
    DatasetManifest m{fs::absolute(csv).lexically_normal().string(), ds.content_hash, ds.stats};

    const auto path = registry.dataset_dir() / "manifest.txt";
    if (fs::exists(path)) {
        const auto existing = read_dataset_manifest(registry);
        if (existing.content_hash != m.content_hash)
            throw RegistryError("registry already holds a different dataset (hash " + existing.content_hash +
                                "); use a fresh registry");
        return existing;
    }
    std::ostringstream os;
    write_manifest(os, m);
    write_new_file(path, os.str());
    registry.record("dataset", "dataset-manifest", "-", path);
    return m;
}

DatasetManifest read_dataset_manifest(const RunRegistry& registry) {
    const auto path = registry.dataset_dir() / "manifest.txt";
    if (!fs::exists(path)) throw RegistryError("no dataset ingested in " + registry.root().string() + " (run ingest)");
    std::istringstream in(read_text_file(path));
    return read_manifest(in);
}

Dataset load_registered_dataset(const RunRegistry& registry) {
    const auto m = read_dataset_manifest(registry);
    auto ds = parse_fer2013(fs::path(m.source));
    if (ds.content_hash != m.content_hash)
        throw RegistryError("dataset file " + m.source + " changed since ingest (hash " + ds.content_hash +
                            ", expected " + m.content_hash + ")");
    return ds;
}

NormStats compute_registry_stats(RunRegistry& registry) {
    const auto ds = load_registered_dataset(registry);
    const auto stats = compute_norm_stats(ds.split(Split::train), ds.content_hash);
    const auto path = registry.dataset_dir() / "norm_stats.txt";
    if (fs::exists(path)) {
        const auto existing = read_registry_stats(registry);
        if (existing.dataset_hash != stats.dataset_hash || existing.mean != stats.mean || existing.std != stats.std)
            throw RegistryError("existing norm_stats.txt disagrees with the ingested dataset");
        return existing;
    }
    std::ostringstream os;
    write_norm_stats(os, stats);
    write_new_file(path, os.str());
    registry.record("dataset", "norm-stats", "-", path);
    return stats;
}

NormStats read_registry_stats(const RunRegistry& registry) {
    const auto path = registry.dataset_dir() / "norm_stats.txt";
    if (!fs::exists(path)) throw RegistryError("no normalization statistics in registry (run stats)");
    std::istringstream in(read_text_file(path));
    auto stats = read_norm_stats(in);
    if (stats.dataset_hash != read_dataset_manifest(registry).content_hash)
        throw RegistryError("norm_stats.txt was computed on a different dataset");
    return stats;
}

PreparedData load_prepared(const RunRegistry& registry, double train_fraction, std::uint64_t seed) {
    const auto stats = read_registry_stats(registry);
    const auto ds = load_registered_dataset(registry);
    const Preprocessor pre(stats);
    PreparedData data;
    data.dataset_hash = ds.content_hash;
    data.train = pre.apply(subset(ds.samples, Split::train, train_fraction, seed));
    data.validation = pre.apply(ds.split(Split::validation));
    data.test = pre.apply(ds.split(Split::test));
    return data;
}

nlohmann::json read_run_manifest(const RunRegistry& registry, const std::string& run_id) {
    if (!registry.has_run(run_id)) throw RegistryError("unknown run '" + run_id + "'");
    const auto path = registry.run_dir(run_id) / "manifest.json";
    if (!fs::exists(path)) throw RegistryError("run " + run_id + " has no manifest (incomplete run)");
    return read_json(path);
}

std::string train_run(RunRegistry& registry, const ArchitectureSpec& spec, const TrainConfig& config,
                      double train_fraction, std::ostream* log) {
    const auto stats = read_registry_stats(registry);
    const auto data = load_prepared(registry, train_fraction, config.global_seed);
    const auto run_id = registry.create_run();
    const auto dir = registry.run_dir(run_id);

    const auto result = train(spec, data, config, options_for(dir, log, run_id + " " + spec.name));
    auto manifest = base_manifest(run_id, "train", training_spec(spec, config), config, data, stats, train_fraction);
    manifest["variant"] = "standard";
    persist_training(registry, run_id, result, std::move(manifest));
    return run_id;
}

GridRunSummary grid_run(RunRegistry& registry, const ArchitectureSpec& spec, const TrainConfig& config,
                        double train_fraction, const std::vector<double>& rates, std::ostream* log) {
    const auto stats = read_registry_stats(registry);
    const auto data = load_prepared(registry, train_fraction, config.global_seed);
    GridRunSummary summary;
    summary.grid_id = registry.create_run();

    TrainFunction trainer = [&](const ArchitectureSpec& s, const PreparedData& d, const TrainConfig& c) {
        const auto run_id = registry.create_run();
        const auto dir = registry.run_dir(run_id);
        char label[64];
        std::snprintf(label, sizeof label, "%s %s dropout %.2f", run_id.c_str(), s.name.c_str(), c.dropout_rate);
        auto result = train(s, d, c, options_for(dir, log, label));
        auto manifest = base_manifest(run_id, "train", training_spec(s, c), c, d, stats, train_fraction);
        manifest["variant"] = "standard";
        manifest["grid_run"] = summary.grid_id;
        persist_training(registry, run_id, result, std::move(manifest));
        summary.run_ids.push_back(run_id);
        return result;
    };
    const auto grid = grid_search_dropout(spec, data, config, rates, trainer);
    summary.best_rate = grid.best_rate;
    summary.best_run = summary.run_ids[grid.best_index];

    std::ostringstream table;
    table << "dropout_rate\trun_id\tvalidation_accuracy\tdiverged\tselected\n";
    nlohmann::json outcomes = nlohmann::json::array();
    for (std::size_t i = 0; i < grid.rates.size(); ++i) {
        const auto& r = grid.runs[i];
        table << grid.rates[i] << '\t' << summary.run_ids[i] << '\t' << fmt_double(r.record.validation_accuracy)
              << '\t' << (r.run.diverged ? "yes" : "no") << '\t' << (i == grid.best_index ? "yes" : "no") << '\n';
        outcomes.push_back({{"dropout_rate", grid.rates[i]},
                            {"run_id", summary.run_ids[i]},
                            {"validation_accuracy", r.record.validation_accuracy},
                            {"diverged", r.run.diverged}});
    }
    const auto dir = registry.run_dir(summary.grid_id);
    write_new_file(dir / "grid.tsv", table.str());
    write_json(dir / "manifest.json", {{"format", "fer-run/1"},
                                       {"run_id", summary.grid_id},
                                       {"kind", "grid"},
                                       {"architecture", spec.name},
                                       {"global_seed", config.global_seed},
                                       {"config", to_json(config)},
                                       {"dataset_hash", data.dataset_hash},
                                       {"train_fraction", train_fraction},
                                       {"outcomes", outcomes},
                                       {"best_rate", summary.best_rate},
                                       {"best_run", summary.best_run}});
    registry.record(summary.grid_id, "manifest", spec.name, dir / "manifest.json");
    registry.record(summary.grid_id, "grid", spec.name, dir / "grid.tsv");
    return summary;
}

EvalSummary eval_run(RunRegistry& registry, const std::string& run_id, Split split) {
    const auto manifest = read_run_manifest(registry, run_id);
    if (!manifest.contains("model")) throw RegistryError("run " + run_id + " holds no trained model");
    const auto out_dir = eval_dir(registry, run_id, split);
    if (fs::exists(out_dir / "summary.json"))
        throw RegistryError("run " + run_id + " already has a " + std::string(split_name(split)) +
                            " evaluation; results are never overwritten");

    const auto stats = read_registry_stats(registry);
    const auto ds = load_registered_dataset(registry);
    if (manifest.value("dataset_hash", std::string{}) != ds.content_hash)
        throw RegistryError("run " + run_id + " was trained on a different dataset");
    const auto samples = Preprocessor(stats).apply(ds.split(split));
    if (samples.empty()) throw RegistryError(std::string(split_name(split)) + " split is empty");

    auto model = load_checkpoint(registry.run_dir(run_id) / manifest.at("model").get<std::string>());
    const int pad = manifest.at("config").value("pad", kDefaultPad);
    const auto records = predict_tencrop(model, samples, pad > 0 ? pad : kDefaultPad);

    EvalSummary s;
    s.run_id = run_id;
    s.split = split;
    s.accuracy = accuracy(records);
    s.samples = records.size();
    s.confusion = confusion_matrix(records);

    nlohmann::json recall = nlohmann::json::object();
    for (int c = 0; c < kNumClasses; ++c) recall[std::string(class_name(c))] = s.confusion.recall[static_cast<std::size_t>(c)];
    std::ostringstream conf, probs;
    write_confusion(conf, s.confusion);
    write_probabilities(probs, records);

    const auto arch = manifest.value("architecture", std::string("-"));
    write_new_file(out_dir / "probabilities.tsv", probs.str());
    write_new_file(out_dir / "confusion.tsv", conf.str());
    write_json(out_dir / "summary.json", {{"run_id", run_id},
                                          {"split", split_name(split)},
                                          {"protocol", "ten-crop"},
                                          {"accuracy", s.accuracy},
                                          {"correct", correct_count(records)},
                                          {"samples", s.samples},
                                          {"recall", recall},
                                          {"dataset_hash", ds.content_hash}});
    for (const char* f : {"probabilities.tsv", "confusion.tsv", "summary.json"})
        registry.record(run_id, "eval-" + std::string(split_name(split)), arch, out_dir / f);
    return s;
}

std::string features_run(RunRegistry& registry, const std::string& parent_run, const TrainConfig& config,
                         std::ostream* log) {
    const auto parent = read_run_manifest(registry, parent_run);
    if (parent.value("kind", "") != "train" || parent.value("variant", "") != "standard")
        throw RegistryError("run " + parent_run + " is not a standard training run");
    const double fraction = parent.value("train_fraction", 1.0);
    auto trained = load_checkpoint(registry.run_dir(parent_run) / parent.at("model").get<std::string>());

    const auto stats = read_registry_stats(registry);
    const auto data = load_prepared(registry, fraction, config.global_seed);
    if (parent.value("dataset_hash", std::string{}) != data.dataset_hash)
        throw RegistryError("run " + parent_run + " was trained on a different dataset");

    const auto run_id = registry.create_run();
    const auto dir = registry.run_dir(run_id);
    const auto cmp = feature_comparison(trained, data, config, options_for(dir, log, run_id + " features"));

    auto manifest =
        base_manifest(run_id, "train", cmp.result.record.model->spec(), config, data, stats, fraction);
    manifest["architecture"] = parent.value("architecture", std::string("-"));
    manifest["variant"] = "feature-comparison";
    manifest["parent_run"] = parent_run;
    manifest["parent_validation_accuracy"] = parent.value("validation_accuracy", 0.0);
    manifest["frontend_layers"] = cmp.boundary;
    manifest["frontend_hash_before"] = cmp.frontend_hash_before;
    manifest["frontend_hash_after"] = cmp.frontend_hash_after;
    manifest["frontend_unchanged"] = cmp.frontend_hash_before == cmp.frontend_hash_after;
    auto result = cmp.result;
    result.run.architecture = manifest["architecture"].get<std::string>();
    persist_training(registry, run_id, result, std::move(manifest));
    return run_id;
}

ModelPool build_pool(const RunRegistry& registry, const std::vector<std::string>& run_ids) {
    if (run_ids.empty()) throw RegistryError("empty pool: select at least one evaluated run");
    const auto expected_hash = read_dataset_manifest(registry).content_hash;

    std::vector<PoolMember> members;
    std::vector<int> val_labels, test_labels;
    for (const auto& id : run_ids) {
        const auto manifest = read_run_manifest(registry, id);
        PoolMember m;
        m.id = id;
        m.architecture = manifest.value("architecture", std::string("-"));
        for (Split split : {Split::validation, Split::test}) {
            const auto dir = eval_dir(registry, id, split);
            if (!fs::exists(dir / "probabilities.tsv") || !fs::exists(dir / "summary.json"))
                throw RegistryError("run " + id + " has no cached " + std::string(split_name(split)) +
                                    " probabilities (run eval --split " + std::string(split_name(split)) + ")");
            const auto summary = read_json(dir / "summary.json");
            if (summary.value("dataset_hash", std::string{}) != expected_hash)
                throw RegistryError("run " + id + " was evaluated on a different dataset (hash mismatch)");
            std::istringstream in(read_text_file(dir / "probabilities.tsv"));
            const auto records = read_probabilities(in);
            auto labels = labels_of(records);
            auto& ref = split == Split::validation ? val_labels : test_labels;
            if (ref.empty()) ref = labels;
            else if (ref != labels)
                throw RegistryError("run " + id + " " + std::string(split_name(split)) +
                                    " probabilities are not aligned with the rest of the pool");
            (split == Split::validation ? m.validation : m.test) = matrix_of(records);
        }
        members.push_back(std::move(m));
    }
    return ModelPool(std::move(members), std::move(val_labels), std::move(test_labels));
}

std::vector<std::string> evaluated_runs(const RunRegistry& registry) {
    std::vector<std::string> out;
    for (const auto& id : registry.run_ids()) {
        if (fs::exists(eval_dir(registry, id, Split::validation) / "probabilities.tsv") &&
            fs::exists(eval_dir(registry, id, Split::test) / "probabilities.tsv"))
            out.push_back(id);
    }
    return out;
}

std::string ensemble_run(RunRegistry& registry, const std::vector<std::string>& run_ids, std::size_t max_size,
                         std::uint64_t budget, std::ostream* log) {
    const auto pool = build_pool(registry, run_ids);
    const auto best = search_best(pool, max_size, budget);

    std::vector<std::size_t> idx;
    for (const auto& id : best.members) idx.push_back(pool.index_of(id));
    const auto test_records = vote(pool, idx, PoolSplit::test);
    const auto cm = confusion_matrix(test_records);

    nlohmann::json pool_json = nlohmann::json::array();
    for (std::size_t i = 0; i < pool.size(); ++i) {
        const auto& m = pool.members()[i];
        pool_json.push_back({{"run_id", m.id},
                             {"architecture", m.architecture},
                             {"validation_accuracy", accuracy(vote(pool, {i}, PoolSplit::validation))},
                             {"test_accuracy", accuracy(vote(pool, {i}, PoolSplit::test))},
                             {"member", std::find(best.members.begin(), best.members.end(), m.id) !=
                                            best.members.end()}});
    }

    const auto run_id = registry.create_run();
    const auto dir = registry.run_dir(run_id);
    std::ostringstream conf;
    write_confusion(conf, cm);
    write_new_file(dir / "confusion.tsv", conf.str());
    write_json(dir / "manifest.json", {{"format", "fer-run/1"},
                                       {"run_id", run_id},
                                       {"kind", "ensemble"},
                                       {"architecture", "ensemble"},
                                       {"dataset_hash", read_dataset_manifest(registry).content_hash},
                                       {"voting", "uniform probability average"},
                                       {"max_size", max_size},
                                       {"members", best.members},
                                       {"validation_accuracy", best.validation_accuracy},
                                       {"test_accuracy", best.test_accuracy},
                                       {"subsets_evaluated", best.subsets_evaluated},
                                       {"pool", pool_json}});
    registry.record(run_id, "manifest", "ensemble", dir / "manifest.json");
    registry.record(run_id, "ensemble-confusion", "ensemble", dir / "confusion.tsv");
    if (log) {
        *log << run_id << " ensemble of " << best.members.size() << " from pool of " << pool.size() << " ("
             << best.subsets_evaluated << " subsets): validation " << percent(best.validation_accuracy)
             << "%, test " << percent(best.test_accuracy) << "%\n";
    }
    return run_id;
}

std::string render_bar_chart(const std::vector<std::pair<std::string, double>>& bars, const std::string& title) {
    const int bar_w = 56, gap = 16, left = 60, top = 50, plot_h = 300, bottom = 110;
    const int width = left + static_cast<int>(bars.size()) * (bar_w + gap) + gap;
    const int height = top + plot_h + bottom;
    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" << title
        << "</text>\n";
    // y axis: 0..100 %
    for (int t = 0; t <= 100; t += 20) {
        const int y = top + plot_h - t * plot_h / 100;
        svg << "<line x1=\"" << left << "\" x2=\"" << width - gap << "\" y1=\"" << y << "\" y2=\"" << y
            << "\" stroke=\"#ddd\"/>\n"
            << "<text x=\"" << left - 6 << "\" y=\"" << y + 4 << "\" text-anchor=\"end\">" << t << "%</text>\n";
    }
    for (std::size_t i = 0; i < bars.size(); ++i) {
        const auto& [name, value] = bars[i];
        const int x = left + gap + static_cast<int>(i) * (bar_w + gap);
        const int cx = x + bar_w / 2;
        if (value >= 0.0) {
            const int h = static_cast<int>(std::lround(std::clamp(value, 0.0, 1.0) * plot_h));
            svg << "<rect x=\"" << x << "\" y=\"" << top + plot_h - h << "\" width=\"" << bar_w << "\" height=\"" << h
                << "\" fill=\"#4a7ab5\"/>\n"
                << "<text x=\"" << cx << "\" y=\"" << top + plot_h - h - 4 << "\" text-anchor=\"middle\">"
                << percent(value) << "</text>\n";
        } else {
            svg << "<text x=\"" << cx << "\" y=\"" << top + plot_h - 4 << "\" text-anchor=\"middle\" fill=\"#888\">n/a</text>\n";
        }
        svg << "<text transform=\"translate(" << cx << "," << top + plot_h + 12 << ") rotate(40)\">" << name
            << "</text>\n";
    }
    svg << "<line x1=\"" << left << "\" x2=\"" << width - gap << "\" y1=\"" << top + plot_h << "\" y2=\""
        << top + plot_h << "\" stroke=\"black\"/>\n</svg>\n";
    return svg.str();
}

std::string report_run(RunRegistry& registry) {
    struct Row {
        std::string run_id;
        double validation = -1.0;
        double test = -1.0;
    };
    std::map<std::string, Row> best_by_arch;
    std::ostringstream ensembles;
    ensembles << "run_id\tmembers\tvalidation_accuracy\ttest_accuracy\n";

    for (const auto& id : registry.run_ids()) {
        const auto path = registry.run_dir(id) / "manifest.json";
        if (!fs::exists(path)) continue;
        const auto m = read_json(path);
        const auto kind = m.value("kind", "");
        if (kind == "ensemble") {
            std::string members;
            for (const auto& x : m.at("members")) members += (members.empty() ? "" : ",") + x.get<std::string>();
            ensembles << id << '\t' << members << '\t' << fmt_double(m.value("validation_accuracy", 0.0)) << '\t'
                      << fmt_double(m.value("test_accuracy", 0.0)) << '\n';
            continue;
        }
        if (kind != "train" || m.value("variant", "") != "standard" || m.value("diverged", false)) continue;
        const auto test_summary = eval_dir(registry, id, Split::test) / "summary.json";
        if (!fs::exists(test_summary)) continue;
        Row row{id, m.value("validation_accuracy", 0.0), read_json(test_summary).value("accuracy", 0.0)};
        auto& slot = best_by_arch[m.value("architecture", std::string("-"))];
        if (slot.run_id.empty() || row.validation > slot.validation) slot = row;
    }

    std::ostringstream table;
    table << "architecture\tcode\tdepth\tparameters\trun_id\tvalidation_accuracy\ttest_accuracy\n";
    std::vector<std::pair<std::string, double>> bars;
    for (const auto& spec : catalog()) {
        table << spec.name << '\t' << spec.code << '\t' << depth(spec) << '\t' << count_parameters(spec) << '\t';
        const auto it = best_by_arch.find(spec.name);
        if (it == best_by_arch.end()) {
            table << "NA\tNA\tNA\n";
            bars.emplace_back(spec.name, -1.0);
        } else {
            table << it->second.run_id << '\t' << fmt_double(it->second.validation) << '\t'
                  << fmt_double(it->second.test) << '\n';
            bars.emplace_back(spec.name, it->second.test);
        }
    }

    const auto run_id = registry.create_run();
    const auto dir = registry.run_dir(run_id);
    write_new_file(dir / "accuracy.tsv", table.str());
    write_new_file(dir / "ensembles.tsv", ensembles.str());
    write_new_file(dir / "accuracy.svg", render_bar_chart(bars, "Ten-crop test accuracy by architecture"));
    write_json(dir / "manifest.json", {{"format", "fer-run/1"}, {"run_id", run_id}, {"kind", "report"}});
    for (const char* f : {"manifest.json", "accuracy.tsv", "ensembles.tsv", "accuracy.svg"})
        registry.record(run_id, "report", "-", dir / f);
    return run_id;
}

}  // namespace fer
