#include "calibnet/inference.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>

#include "calibnet/error.hpp"

namespace calibnet {

namespace {

Vector input_row(const Dataset& data, std::size_t i) {
    const double* p = data.inputs.row_ptr(i);
    return Vector(p, p + data.inputs.cols);
}

void check_models(const MethodSpec& method, const std::vector<Model>& models) {
    if (models.empty()) {
        throw Error(ErrorCategory::validation, "no models supplied");
    }
    if (method.kind == MethodSpec::Kind::ssp) {
        if (models.size() != method.k) {
            throw Error(ErrorCategory::validation, "ensemble size does not match method spec");
        }
    } else if (models.size() != 1) {
        throw Error(ErrorCategory::validation, method.id() + " takes exactly one model");
    }
}

Prediction aggregate_classification(const std::vector<Vector>& prob_sets) {
    Prediction out;
    out.task = Task::classification;
    out.probs.assign(prob_sets[0].size(), 0.0);
    for (const Vector& p : prob_sets) {
        if (p.size() != out.probs.size()) {
            throw Error(ErrorCategory::shape, "inconsistent class counts across components");
        }
        for (std::size_t k = 0; k < p.size(); ++k) out.probs[k] += p[k];
    }
    const auto m = static_cast<double>(prob_sets.size());
    for (double& v : out.probs) v /= m;
    return out;
}

}  // namespace

void MethodSpec::validate() const {
    switch (kind) {
        case Kind::rdeepsense:
        case Kind::gp:
            break;
        case Kind::rdeepsense_mc:
        case Kind::mcdrop:
            if (k < 2) {
                throw Error(ErrorCategory::validation,
                            "monte-carlo methods need k >= 2 (sample variance is undefined at 1)");
            }
            break;
        case Kind::ssp:
            if (k < 1) {
                throw Error(ErrorCategory::validation, "ensembles need k >= 1");
            }
            break;
    }
}

std::string MethodSpec::id() const {
    switch (kind) {
        case Kind::rdeepsense: return "rdeepsense";
        case Kind::rdeepsense_mc: return "rdeepsense-mc-" + std::to_string(k);
        case Kind::mcdrop: return "mcdrop-" + std::to_string(k);
        case Kind::ssp: return "ssp-" + std::to_string(k);
        case Kind::gp: return "gp";
    }
    return "rdeepsense";
}

MethodSpec MethodSpec::parse(const std::string& id) {
    MethodSpec m;
    auto tail_count = [&](const std::string& prefix) {
        const std::string tail = id.substr(prefix.size());
        std::size_t value = 0;
        const char* begin = tail.data();
        const char* end = begin + tail.size();
        auto [ptr, ec] = std::from_chars(begin, end, value);
        if (ec != std::errc() || ptr != end || tail.empty()) {
            throw Error(ErrorCategory::config, "bad sample count in method id: " + id);
        }
        return value;
    };
    if (id == "rdeepsense") {
        m.kind = Kind::rdeepsense;
    } else if (id == "gp") {
        m.kind = Kind::gp;
    } else if (id.rfind("rdeepsense-mc-", 0) == 0) {
        m.kind = Kind::rdeepsense_mc;
        m.k = tail_count("rdeepsense-mc-");
    } else if (id.rfind("mcdrop-", 0) == 0) {
        m.kind = Kind::mcdrop;
        m.k = tail_count("mcdrop-");
    } else if (id.rfind("ssp-", 0) == 0) {
        m.kind = Kind::ssp;
        m.k = tail_count("ssp-");
    } else {
        throw Error(ErrorCategory::config, "unknown method id: " + id);
    }
    m.validate();
    return m;
}

std::pair<Vector, Vector> mixture_moments(const std::vector<Vector>& means,
                                          const std::vector<Vector>& variances) {
    if (means.empty() || means.size() != variances.size()) {
        throw Error(ErrorCategory::shape, "mixture needs matching mean/variance component lists");
    }
    const std::size_t dims = means[0].size();
    Vector mu(dims, 0.0), second(dims, 0.0);
    for (std::size_t m = 0; m < means.size(); ++m) {
        if (means[m].size() != dims || variances[m].size() != dims) {
            throw Error(ErrorCategory::shape, "mixture component width mismatch");
        }
        for (std::size_t d = 0; d < dims; ++d) {
            mu[d] += means[m][d];
            second[d] += variances[m][d] + means[m][d] * means[m][d];
        }
    }
    const auto count = static_cast<double>(means.size());
    Vector var(dims);
    for (std::size_t d = 0; d < dims; ++d) {
        mu[d] /= count;
        var[d] = second[d] / count - mu[d] * mu[d];
    }
    return {std::move(mu), std::move(var)};
}

Prediction predict_rdeepsense(const NetworkSpec& spec, const NetworkParams& params,
                              const Vector& x) {
    return head_to_prediction(spec, forward_infer_scaled(spec, params, x));
}

Prediction predict_mc_rdeepsense(const NetworkSpec& spec, const NetworkParams& params,
                                 const Vector& x, std::size_t k, RngStream& rng) {
    if (k < 2) {
        throw Error(ErrorCategory::validation, "monte-carlo aggregation needs k >= 2");
    }
    if (spec.task == Task::classification) {
        std::vector<Vector> probs;
        probs.reserve(k);
        for (std::size_t m = 0; m < k; ++m) {
            probs.push_back(head_to_prediction(spec, forward_train(spec, params, x, rng).head()).probs);
        }
        return aggregate_classification(probs);
    }
    if (spec.head != HeadKind::gaussian) {
        throw Error(ErrorCategory::validation, "moment matching needs a distribution head");
    }
    std::vector<Vector> means, variances;
    means.reserve(k);
    variances.reserve(k);
    for (std::size_t m = 0; m < k; ++m) {
        Prediction p = head_to_prediction(spec, forward_train(spec, params, x, rng).head());
        means.push_back(std::move(p.mean));
        variances.push_back(std::move(p.variance));
    }
    auto [mu, var] = mixture_moments(means, variances);
    Prediction out;
    out.task = Task::regression;
    out.mean = std::move(mu);
    out.variance = std::move(var);
    return out;
}

Prediction predict_mcdrop(const NetworkSpec& spec, const NetworkParams& params, const Vector& x,
                          std::size_t k, RngStream& rng) {
    if (k < 2) {
        throw Error(ErrorCategory::validation, "sample variance needs k >= 2");
    }
    if (spec.task == Task::classification) {
        std::vector<Vector> probs;
        probs.reserve(k);
        for (std::size_t m = 0; m < k; ++m) {
            probs.push_back(head_to_prediction(spec, forward_train(spec, params, x, rng).head()).probs);
        }
        return aggregate_classification(probs);
    }
    if (spec.head != HeadKind::point) {
        throw Error(ErrorCategory::validation, "this method expects a point-output model");
    }
    const std::size_t dims = spec.output_dims;
    std::vector<Vector> samples;
    samples.reserve(k);
    for (std::size_t m = 0; m < k; ++m) {
        samples.push_back(head_to_prediction(spec, forward_train(spec, params, x, rng).head()).mean);
    }
    Prediction out;
    out.task = Task::regression;
    out.mean.assign(dims, 0.0);
    out.variance.assign(dims, 0.0);
    for (const Vector& s : samples) {
        for (std::size_t d = 0; d < dims; ++d) out.mean[d] += s[d];
    }
    for (double& v : out.mean) v /= static_cast<double>(k);
    for (const Vector& s : samples) {
        for (std::size_t d = 0; d < dims; ++d) {
            const double r = s[d] - out.mean[d];
            out.variance[d] += r * r;
        }
    }
    for (double& v : out.variance) {
        v = v / static_cast<double>(k - 1) + spec.variance_floor;
    }
    return out;
}

Prediction predict_ensemble(const std::vector<Model>& models, const Vector& x) {
    if (models.empty()) {
        throw Error(ErrorCategory::validation, "ensemble needs at least one model");
    }
    const NetworkSpec& first = models[0].spec;
    for (const Model& m : models) {
        if (m.spec.layer_dims != first.layer_dims || m.spec.task != first.task ||
            m.spec.head != first.head) {
            throw Error(ErrorCategory::validation, "ensemble members must share one architecture");
        }
        for (const Vector& keep : m.spec.retain_probs) {
            for (double p : keep) {
                if (p != 1.0) {
                    throw Error(ErrorCategory::validation,
                                "ensemble members must have dropout disabled");
                }
            }
        }
    }
    if (first.task == Task::classification) {
        std::vector<Vector> probs;
        probs.reserve(models.size());
        for (const Model& m : models) {
            probs.push_back(predict_rdeepsense(m.spec, m.params, x).probs);
        }
        return aggregate_classification(probs);
    }
    std::vector<Vector> means, variances;
    means.reserve(models.size());
    variances.reserve(models.size());
    for (const Model& m : models) {
        Prediction p = predict_rdeepsense(m.spec, m.params, x);
        if (!p.has_variance()) {
            throw Error(ErrorCategory::validation, "ensemble members need distribution heads");
        }
        means.push_back(std::move(p.mean));
        variances.push_back(std::move(p.variance));
    }
    auto [mu, var] = mixture_moments(means, variances);
    Prediction out;
    out.task = Task::regression;
    out.mean = std::move(mu);
    out.variance = std::move(var);
    return out;
}

std::vector<Prediction> predict_dataset(const MethodSpec& method, const std::vector<Model>& models,
                                        const Dataset& data, std::uint64_t seed) {
    method.validate();
    check_models(method, models);
    if (method.kind == MethodSpec::Kind::gp) {
        throw Error(ErrorCategory::validation, "gp predictions come from the gp baseline, not here");
    }
    const auto n = static_cast<std::ptrdiff_t>(data.size());
    std::vector<Prediction> preds(data.size());
    RngStream base(seed, 4);
    std::exception_ptr first_error = nullptr;

#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        try {
            const auto idx = static_cast<std::size_t>(i);
            const Vector x = input_row(data, idx);
            switch (method.kind) {
                case MethodSpec::Kind::rdeepsense:
                    preds[idx] = predict_rdeepsense(models[0].spec, models[0].params, x);
                    break;
                case MethodSpec::Kind::rdeepsense_mc: {
                    RngStream rng = base.derive(idx);
                    preds[idx] =
                        predict_mc_rdeepsense(models[0].spec, models[0].params, x, method.k, rng);
                    break;
                }
                case MethodSpec::Kind::mcdrop: {
                    RngStream rng = base.derive(idx);
                    preds[idx] = predict_mcdrop(models[0].spec, models[0].params, x, method.k, rng);
                    break;
                }
                case MethodSpec::Kind::ssp:
                    preds[idx] = predict_ensemble(models, x);
                    break;
                case MethodSpec::Kind::gp:
                    break;  // rejected above
            }
        } catch (...) {
#pragma omp critical
            if (!first_error) first_error = std::current_exception();
        }
    }
    if (first_error) std::rethrow_exception(first_error);
    return preds;
}

BenchReport bench_inference(const MethodSpec& method, const std::vector<Model>& models,
                            const Dataset& data, std::size_t repetitions, std::size_t warmup,
                            std::uint64_t seed) {
    method.validate();
    check_models(method, models);
    if (repetitions == 0) {
        throw Error(ErrorCategory::validation, "benchmark needs at least one repetition");
    }
    if (data.size() == 0) {
        throw Error(ErrorCategory::validation, "benchmark needs a non-empty dataset");
    }

    using clock = std::chrono::steady_clock;
    for (std::size_t w = 0; w < warmup; ++w) {
        predict_dataset(method, models, data, seed);
    }

    std::vector<double> per_sample(repetitions);
    for (std::size_t r = 0; r < repetitions; ++r) {
        const auto t0 = clock::now();
        predict_dataset(method, models, data, seed);
        const auto t1 = clock::now();
        per_sample[r] = std::chrono::duration<double>(t1 - t0).count() /
                        static_cast<double>(data.size());
    }
    std::sort(per_sample.begin(), per_sample.end());

    BenchReport report;
    report.method_id = method.id();
    report.repetitions = repetitions;
    report.warmup_runs = warmup;
    report.sample_count = data.size();
    const std::size_t mid = repetitions / 2;
    report.median_seconds_per_sample = repetitions % 2 == 1
                                           ? per_sample[mid]
                                           : 0.5 * (per_sample[mid - 1] + per_sample[mid]);
    const auto p95_idx = static_cast<std::size_t>(
        std::min<double>(static_cast<double>(repetitions - 1),
                         std::ceil(0.95 * static_cast<double>(repetitions)) - 1.0));
    report.p95_seconds_per_sample = per_sample[p95_idx];

    reset_forward_pass_count();
    predict_dataset(method, models, data, seed);
    const std::uint64_t passes = forward_pass_count();
    report.passes_per_prediction = passes / data.size();
    if (report.passes_per_prediction * data.size() != passes) {
        throw Error(ErrorCategory::internal, "forward-pass count is not a whole per-sample figure");
    }
    return report;
}

}  // namespace calibnet
