#include "fer/training.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "fer/augment.hpp"
#include "fer/checkpoint.hpp"
#include "fer/evaluation.hpp"
#include "fer/inference.hpp"

namespace fer {

namespace {

void set_lr(torch::optim::SGD& opt, double lr) {
    for (auto& group : opt.param_groups()) static_cast<torch::optim::SGDOptions&>(group.options()).lr(lr);
}

std::vector<torch::Tensor> snapshot(const Network& model) {
    std::vector<torch::Tensor> out;
    for (const auto& [name, t] : model->full_state()) out.push_back(t.detach().clone());
    return out;
}

void restore(Network& model, const std::vector<torch::Tensor>& saved) {
    torch::NoGradGuard no_grad;
    auto state = model->full_state();
    for (std::size_t i = 0; i < state.size(); ++i) state[i].second.copy_(saved[i]);
}

std::string epoch_stem(int epoch) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "epoch-%03d", epoch);
    return buf;
}

// Splits the epoch order into batches; a trailing batch of one sample joins the
// previous batch (batch normalization needs two samples per batch in training).
std::vector<std::pair<std::size_t, std::size_t>> batch_bounds(std::size_t n, std::size_t batch) {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t start = 0; start < n; start += batch) out.emplace_back(start, std::min(n, start + batch));
    if (out.size() > 1 && out.back().second - out.back().first == 1) {
        out[out.size() - 2].second = out.back().second;
        out.pop_back();
    }
    return out;
}

}  // namespace

std::unique_ptr<torch::optim::SGD> make_optimizer(
    const std::vector<std::pair<std::string, torch::Tensor>>& named_parameters, const TrainConfig& config) {
    std::vector<torch::Tensor> decayed, exempt;
    for (const auto& [name, p] : named_parameters) {
        if (!p.requires_grad()) continue;
        (p.dim() >= 2 ? decayed : exempt).push_back(p);
    }
    auto options = [&](double wd) {
        return std::make_unique<torch::optim::SGDOptions>(
            torch::optim::SGDOptions(config.initial_lr).momentum(config.momentum).weight_decay(wd));
    };
    std::vector<torch::optim::OptimizerParamGroup> groups;
    if (!decayed.empty()) groups.emplace_back(decayed, options(config.weight_decay));
    if (!exempt.empty()) groups.emplace_back(exempt, options(0.0));
    if (groups.empty()) throw std::invalid_argument("no trainable parameters");
    return std::make_unique<torch::optim::SGD>(
        groups, torch::optim::SGDOptions(config.initial_lr).momentum(config.momentum));
}

ArchitectureSpec training_spec(const ArchitectureSpec& spec, const TrainConfig& config) {
    return with_dropout_rate(apply_standard_adaptations(spec), config.dropout_rate);
}

TrainResult train(const ArchitectureSpec& spec, const PreparedData& data, const TrainConfig& config,
                  const TrainOptions& options) {
    return train_model(instantiate(training_spec(spec, config), config.global_seed), data, config, options);
}

TrainResult train_model(Network model, const PreparedData& data, const TrainConfig& config,
                        const TrainOptions& options) {
    if (auto problems = check_ranges(config); !problems.empty()) throw ConfigError(std::move(problems));
    if (data.train.empty()) throw std::invalid_argument("training split is empty");
    if (data.validation.empty()) throw std::invalid_argument("validation split is empty");

    torch::manual_seed(config.global_seed);  // dropout masks and stochastic pooling draws

    auto optimizer = make_optimizer(model->named_parameters().pairs(), config);
    const AugmentStream stream(config.global_seed, config.mirror_probability);
    PlateauSchedule schedule(config.initial_lr, config.plateau_patience, config.lr_factor);

    TrainResult result;
    result.run.config = config;
    result.run.architecture = model->spec().name;

    std::vector<torch::Tensor> best_state = snapshot(model);
    std::int64_t best_ticks = -1;
    double best_accuracy = 0.0;
    double lr = config.initial_lr;

    const auto n = data.train.size();
    std::vector<FloatImage> images;
    std::vector<std::int64_t> labels;

    for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
        set_lr(*optimizer, lr);
        model->train();
        const auto order = epoch_order(config.global_seed, static_cast<std::uint64_t>(epoch), n);

        double loss_sum = 0.0;
        std::size_t correct = 0;
        for (const auto& [begin, end] : batch_bounds(n, static_cast<std::size_t>(config.batch_size))) {
            images.clear();
            labels.clear();
            for (std::size_t k = begin; k < end; ++k) {
                const auto& s = data.train[order[k]];
                images.push_back(apply_train_augmentation(s, stream, static_cast<std::uint64_t>(epoch), config.pad));
                labels.push_back(s.label);
            }
            const auto x = to_batch(images);
            const auto y = torch::tensor(labels, torch::kInt64);

            optimizer->zero_grad();
            const auto logits = model->forward(x);
            const auto loss = torch::nn::functional::cross_entropy(logits, y);
            const double batch_loss = loss.item<double>();
            if (!std::isfinite(batch_loss)) {
                result.run.diverged = true;
                break;
            }
            loss.backward();
            optimizer->step();

            loss_sum += batch_loss * static_cast<double>(end - begin);
            correct += static_cast<std::size_t>(logits.argmax(1).eq(y).sum().item<std::int64_t>());
        }
        if (result.run.diverged) break;

        const auto val_records = predict_single_view(model, data.validation);
        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = loss_sum / static_cast<double>(n);
        rec.train_accuracy = static_cast<double>(correct) / static_cast<double>(n);
        rec.validation_accuracy = accuracy(val_records);
        rec.lr = lr;
        result.run.epochs.push_back(rec);

        if (const auto ticks = accuracy_ticks(rec.validation_accuracy); ticks > best_ticks) {
            best_ticks = ticks;
            best_accuracy = rec.validation_accuracy;
            result.run.best_epoch = epoch;
            best_state = snapshot(model);
            if (options.checkpoint_dir) {
                result.run.checkpoints.push_back(save_checkpoint(
                    model, *options.checkpoint_dir / epoch_stem(epoch),
                    {{"epoch", epoch}, {"validation_accuracy", rec.validation_accuracy}}));
            }
        }
        lr = schedule.observe(rec.validation_accuracy);
        if (options.on_epoch) options.on_epoch(rec);
    }

    restore(model, best_state);
    model->eval();
    result.record.architecture = model->spec().name;
    result.record.validation_accuracy = best_accuracy;
    result.record.model = model;
    return result;
}

std::size_t select_dropout(std::span<const GridOutcome> outcomes) {
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        const auto& o = outcomes[i];
        if (o.diverged) continue;
        if (!best || o.validation_accuracy > outcomes[*best].validation_accuracy ||
            (o.validation_accuracy == outcomes[*best].validation_accuracy && o.rate < outcomes[*best].rate))
            best = i;
    }
    if (!best) throw std::runtime_error("every dropout grid run diverged");
    return *best;
}

GridSearchResult grid_search_dropout(const ArchitectureSpec& spec, const PreparedData& data, const TrainConfig& config,
                                     std::span<const double> grid, const TrainFunction& trainer) {
    if (grid.empty()) throw std::invalid_argument("dropout grid is empty");
    for (double r : grid)
        if (!(r >= 0.0 && r < 1.0)) throw std::invalid_argument("dropout grid rates must lie in [0, 1)");

    GridSearchResult out;
    out.rates.assign(grid.begin(), grid.end());
    std::vector<GridOutcome> outcomes;
    for (double rate : grid) {
        auto cfg = config;
        cfg.dropout_rate = rate;
        auto run = trainer ? trainer(spec, data, cfg) : train(spec, data, cfg);
        outcomes.push_back({rate, run.record.validation_accuracy, run.run.diverged});
        out.runs.push_back(std::move(run));
    }
    out.best_index = select_dropout(outcomes);
    out.best_rate = out.rates[out.best_index];
    return out;
}

std::vector<LayerSpec> comparison_backend(double dropout_rate) {
    return {FullyConnected{1024}, BatchNorm{}, Dropout{dropout_rate}, Classifier{}};
}

FeatureComparisonResult feature_comparison(const Network& trained, const PreparedData& data, const TrainConfig& config,
                                           const TrainOptions& options) {
    const auto& original = trained->spec();
    const auto boundary = backend_boundary(original);

    ArchitectureSpec spec;
    spec.name = original.name + "+mlp";
    spec.input = original.input;
    spec.layers.assign(original.layers.begin(), original.layers.begin() + static_cast<std::ptrdiff_t>(boundary));
    for (auto& l : comparison_backend(config.dropout_rate)) spec.layers.push_back(std::move(l));
    spec.code = structural_code(spec.layers);
    spec.target_params = 0;

    auto model = instantiate(spec, config.global_seed);
    {
        torch::NoGradGuard no_grad;
        const auto src = trained->prefix_state(boundary);
        auto dst = model->prefix_state(boundary);
        if (src.size() != dst.size()) throw std::logic_error("frontend state layout differs after backend swap");
        for (std::size_t i = 0; i < src.size(); ++i) {
            if (src[i].first != dst[i].first) throw std::logic_error("frontend tensor name mismatch: " + src[i].first);
            dst[i].second.copy_(src[i].second);
        }
    }
    model->freeze_frontend(boundary);

    FeatureComparisonResult out;
    out.boundary = boundary;
    out.frontend_hash_before = state_hash(trained->prefix_state(boundary));
    out.result = train_model(model, data, config, options);
    out.result.record.variant = "feature-comparison";
    out.frontend_hash_after = state_hash(out.result.record.model->prefix_state(boundary));
    return out;
}

}  // namespace fer
