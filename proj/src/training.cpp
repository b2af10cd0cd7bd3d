#include "calibnet/training.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include "calibnet/error.hpp"
#include "calibnet/inference.hpp"

namespace calibnet {

namespace {

void check_data_matches(const NetworkSpec& spec, const Dataset& data, const char* which) {
    data.validate();
    if (data.inputs.cols != spec.input_dims()) {
        throw Error(ErrorCategory::shape,
                    std::string(which) + " input width does not match the network");
    }
    if (data.task != spec.task) {
        throw Error(ErrorCategory::validation, std::string(which) + " task does not match the network");
    }
    if (spec.task == Task::regression) {
        if (data.targets.cols != spec.output_dims) {
            throw Error(ErrorCategory::shape,
                        std::string(which) + " target width does not match the network");
        }
    } else if (data.num_classes != spec.output_dims) {
        throw Error(ErrorCategory::validation,
                    std::string(which) + " class count does not match the network");
    }
}

struct DataLoss {
    double nll = 0.0;
    double error = 0.0;
    std::size_t clamps = 0;
};

DataLoss sample_data_loss(const NetworkSpec& spec, const Prediction& pred, const Dataset& data,
                          std::size_t idx, const LossSpec& loss) {
    // lambdas zeroed so the per-sample call skips the full weight-norm scan
    LossSpec data_only = loss;
    data_only.lambda_e = 0.0;
    data_only.lambda_l = 0.0;
    static const NetworkParams no_params;
    LossValue lv;
    if (spec.task == Task::regression) {
        const double* row = data.targets.row_ptr(idx);
        const Vector y(row, row + data.targets.cols);
        lv = regression_loss(pred, y, no_params, data_only);
    } else {
        lv = classification_loss(pred, data.labels[idx], no_params, data_only);
    }
    return {lv.nll_part, lv.error_part, lv.clamp_count};
}

double grad_squared_norm(const Gradients& g) {
    double s = 0.0;
    for (const Matrix& w : g.weights) s += squared_norm(w);
    for (const Vector& b : g.biases) s += squared_norm(b);
    return s;
}

void scale_gradients(Gradients& g, double factor) {
    for (Matrix& w : g.weights) {
        for (double& v : w.data) v *= factor;
    }
    for (Vector& b : g.biases) {
        for (double& v : b) v *= factor;
    }
}

void add_gradients(Gradients& acc, const Gradients& g) {
    for (std::size_t l = 0; l < acc.weights.size(); ++l) {
        for (std::size_t i = 0; i < acc.weights[l].data.size(); ++i) {
            acc.weights[l].data[i] += g.weights[l].data[i];
        }
        for (std::size_t i = 0; i < acc.biases[l].size(); ++i) {
            acc.biases[l][i] += g.biases[l][i];
        }
    }
}

double validation_loss(const NetworkSpec& spec, const NetworkParams& params, const Dataset& val,
                       const LossSpec& loss) {
    double nll = 0.0, err = 0.0;
    for (std::size_t i = 0; i < val.size(); ++i) {
        const double* row = val.inputs.row_ptr(i);
        const Vector x(row, row + val.inputs.cols);
        const Prediction pred = head_to_prediction(spec, forward_infer_scaled(spec, params, x));
        const DataLoss dl = sample_data_loss(spec, pred, val, i, loss);
        nll += dl.nll;
        err += dl.error;
    }
    const auto n = static_cast<double>(val.size());
    const double penalty = weight_penalty(params, loss);
    return combine_loss(nll / n, err / n, penalty, loss.alpha);
}

}  // namespace

void TrainConfig::validate() const {
    if (epochs < 1) throw Error(ErrorCategory::validation, "epochs must be >= 1");
    if (batch_size < 1) throw Error(ErrorCategory::validation, "batch size must be >= 1");
    if (!(learning_rate > 0.0)) {
        throw Error(ErrorCategory::validation, "learning rate must be positive");
    }
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
        throw Error(ErrorCategory::validation, "adam betas must lie in [0,1)");
    }
    if (!(adam_eps > 0.0)) throw Error(ErrorCategory::validation, "adam epsilon must be positive");
    if (!(clip_norm >= 0.0)) throw Error(ErrorCategory::validation, "clip norm must be >= 0");
}

AdamState make_adam_state(const NetworkSpec& spec) {
    AdamState s;
    for (std::size_t l = 0; l < spec.num_layers(); ++l) {
        s.m_w.emplace_back(spec.layer_dims[l], spec.layer_dims[l + 1]);
        s.v_w.emplace_back(spec.layer_dims[l], spec.layer_dims[l + 1]);
        s.m_b.emplace_back(spec.layer_dims[l + 1], 0.0);
        s.v_b.emplace_back(spec.layer_dims[l + 1], 0.0);
    }
    return s;
}

void apply_update(NetworkParams& params, const Gradients& grads, const TrainConfig& config,
                  AdamState& state) {
    if (config.optimizer == Optimizer::sgd) {
        for (std::size_t l = 0; l < params.weights.size(); ++l) {
            for (std::size_t i = 0; i < params.weights[l].data.size(); ++i) {
                params.weights[l].data[i] -= config.learning_rate * grads.weights[l].data[i];
            }
            for (std::size_t i = 0; i < params.biases[l].size(); ++i) {
                params.biases[l][i] -= config.learning_rate * grads.biases[l][i];
            }
        }
        return;
    }

    ++state.step;
    const double b1 = config.beta1;
    const double b2 = config.beta2;
    const double bias1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
    const double bias2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
    auto update = [&](double& w, double g, double& m, double& v) {
        m = b1 * m + (1.0 - b1) * g;
        v = b2 * v + (1.0 - b2) * g * g;
        const double mhat = m / bias1;
        const double vhat = v / bias2;
        w -= config.learning_rate * mhat / (std::sqrt(vhat) + config.adam_eps);
    };
    for (std::size_t l = 0; l < params.weights.size(); ++l) {
        for (std::size_t i = 0; i < params.weights[l].data.size(); ++i) {
            update(params.weights[l].data[i], grads.weights[l].data[i], state.m_w[l].data[i],
                   state.v_w[l].data[i]);
        }
        for (std::size_t i = 0; i < params.biases[l].size(); ++i) {
            update(params.biases[l][i], grads.biases[l][i], state.m_b[l][i], state.v_b[l][i]);
        }
    }
}

std::pair<NetworkParams, TrainReport> train(const NetworkSpec& spec, const LossSpec& loss,
                                            const Dataset& train_data, const Dataset& val_data,
                                            const TrainConfig& config) {
    spec.validate();
    loss.validate();
    config.validate();
    check_data_matches(spec, train_data, "training");
    if (train_data.size() == 0) {
        throw Error(ErrorCategory::validation, "training split is empty");
    }
    const bool has_val = val_data.size() > 0;
    if (has_val) check_data_matches(spec, val_data, "validation");
    if (config.early_stop_patience > 0 && !has_val) {
        throw Error(ErrorCategory::validation, "early stopping needs a validation split");
    }

    const auto t0 = std::chrono::steady_clock::now();
    RngStream root(config.seed, 2);
    RngStream init_rng = root.derive(0);
    RngStream shuffle_rng = root.derive(1);
    RngStream mask_rng = root.derive(2);

    NetworkParams params = init_params(spec, init_rng);
    AdamState adam = make_adam_state(spec);
    TrainReport report;

    NetworkParams best_params;
    double best_val = std::numeric_limits<double>::infinity();
    std::size_t since_best = 0;

    const std::size_t n = train_data.size();
    const double blend_lambda = (1.0 - loss.alpha) * loss.lambda_l + loss.alpha * loss.lambda_e;

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        if (config.shuffle) order = shuffled_indices(n, shuffle_rng);

        double epoch_nll = 0.0, epoch_err = 0.0;

        for (std::size_t start = 0; start < n; start += config.batch_size) {
            const std::size_t stop = std::min(n, start + config.batch_size);
            Gradients batch_grads = zero_gradients(spec);

            for (std::size_t b = start; b < stop; ++b) {
                const std::size_t idx = order[b];
                const double* row = train_data.inputs.row_ptr(idx);
                const Vector x(row, row + train_data.inputs.cols);

                const ForwardTrace trace = forward_train(spec, params, x, mask_rng);
                const Vector& head = trace.head();
                const Prediction pred = head_to_prediction(spec, head);

                const DataLoss dl = sample_data_loss(spec, pred, train_data, idx, loss);
                const double sample_total =
                    combine_loss(dl.nll, dl.error, 0.0, loss.alpha);
                if (!std::isfinite(sample_total)) {
                    throw Error(ErrorCategory::numeric,
                                "loss became non-finite at epoch " + std::to_string(epoch) +
                                    ", batch " + std::to_string(start / config.batch_size));
                }
                epoch_nll += dl.nll;
                epoch_err += dl.error;
                report.clamp_events += dl.clamps;

                Vector g_head;
                if (spec.task == Task::regression) {
                    const double* ty = train_data.targets.row_ptr(idx);
                    g_head = loss_gradient_at_head(spec, head,
                                                   Vector(ty, ty + train_data.targets.cols), loss);
                } else {
                    g_head = loss_gradient_at_head(spec, head, train_data.labels[idx], loss);
                }
                add_gradients(batch_grads, backward(spec, params, trace, g_head));
            }

            scale_gradients(batch_grads, 1.0 / static_cast<double>(stop - start));
            if (blend_lambda > 0.0) {
                for (std::size_t l = 0; l < params.weights.size(); ++l) {
                    for (std::size_t i = 0; i < params.weights[l].data.size(); ++i) {
                        batch_grads.weights[l].data[i] +=
                            2.0 * blend_lambda * params.weights[l].data[i];
                    }
                }
            }
            if (config.clip_norm > 0.0) {
                const double norm = std::sqrt(grad_squared_norm(batch_grads));
                if (norm > config.clip_norm) {
                    scale_gradients(batch_grads, config.clip_norm / norm);
                    ++report.clip_events;
                }
            }
            apply_update(params, batch_grads, config, adam);
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_nll = epoch_nll / static_cast<double>(n);
        rec.train_error = epoch_err / static_cast<double>(n);
        rec.train_reg = weight_penalty(params, loss);
        rec.train_total = combine_loss(rec.train_nll, rec.train_error, rec.train_reg, loss.alpha);
        if (has_val) {
            rec.val_total = validation_loss(spec, params, val_data, loss);
            if (!std::isfinite(rec.val_total)) {
                throw Error(ErrorCategory::numeric,
                            "validation loss became non-finite at epoch " + std::to_string(epoch));
            }
        }
        report.epochs.push_back(rec);
        report.final_epoch = epoch;

        if (config.early_stop_patience > 0) {
            if (rec.val_total < best_val) {
                best_val = rec.val_total;
                best_params = params;
                report.best_epoch = epoch;
                since_best = 0;
            } else if (++since_best >= config.early_stop_patience) {
                report.early_stopped = true;
                break;
            }
        } else {
            report.best_epoch = epoch;
        }
    }

    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (config.early_stop_patience > 0) {
        return {std::move(best_params), std::move(report)};
    }
    return {std::move(params), std::move(report)};
}

std::uint64_t derive_sweep_seed(std::uint64_t seed, std::size_t index) {
    RngStream root(seed, 3);
    return root.derive(index).next_u64();
}

SweepResult sweep_alpha(const NetworkSpec& spec, const LossSpec& loss_template,
                        const Dataset& train_data, const Dataset& val_data,
                        const std::vector<double>& alphas, const TrainConfig& config,
                        const ZGrid& grid) {
    if (alphas.empty()) {
        throw Error(ErrorCategory::validation, "alpha sweep needs at least one alpha");
    }
    for (double a : alphas) {
        if (!(a >= 0.0 && a <= 1.0)) {
            throw Error(ErrorCategory::validation, "sweep alphas must lie in [0,1]");
        }
    }
    if (val_data.size() == 0) {
        throw Error(ErrorCategory::validation, "alpha sweep needs a validation split");
    }

    SweepResult sweep;
    sweep.results.resize(alphas.size());
    const auto count = static_cast<std::ptrdiff_t>(alphas.size());

#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < count; ++i) {
        const auto idx = static_cast<std::size_t>(i);
        AlphaResult& res = sweep.results[idx];
        res.alpha = alphas[idx];
        try {
            LossSpec ls = loss_template;
            ls.alpha = alphas[idx];
            TrainConfig cfg = config;
            cfg.seed = derive_sweep_seed(config.seed, idx);

            auto [params, train_report] = train(spec, ls, train_data, val_data, cfg);
            res.train_report = std::move(train_report);

            std::vector<Model> models{{spec, params}};
            MethodSpec method;  // single scaled pass
            const std::vector<Prediction> preds =
                predict_dataset(method, models, val_data, cfg.seed);
            if (spec.task == Task::regression) {
                res.val_report = evaluate_regression(preds, val_data.targets, grid);
            } else {
                res.val_report = evaluate_classification(preds, val_data.labels);
            }
            res.val_report.method_id = method.id();
            res.params = std::move(params);
        } catch (const std::exception& e) {
            res.failed = true;
            res.error = e.what();
        }
    }

    bool found = false;
    for (std::size_t i = 0; i < sweep.results.size(); ++i) {
        const AlphaResult& res = sweep.results[i];
        if (res.failed) continue;
        const double score = spec.task == Task::regression ? res.val_report.deviation_area
                                                           : res.val_report.nll;
        const AlphaResult& best = sweep.results[sweep.best_index];
        const double best_score = !found ? std::numeric_limits<double>::infinity()
                                         : (spec.task == Task::regression
                                                ? best.val_report.deviation_area
                                                : best.val_report.nll);
        if (!found || score < best_score) {
            sweep.best_index = i;
            found = true;
        }
    }
    return sweep;
}

}  // namespace calibnet
