#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "calibnet/data.hpp"
#include "calibnet/network.hpp"
#include "calibnet/prediction.hpp"
#include "calibnet/rng.hpp"

namespace calibnet {

struct Model {
    NetworkSpec spec;
    NetworkParams params;
};

// Method identifiers as they appear in reports: "rdeepsense",
// "rdeepsense-mc-K", "mcdrop-K", "ssp-K", "gp".
struct MethodSpec {
    enum class Kind { rdeepsense, rdeepsense_mc, mcdrop, ssp, gp };
    Kind kind = Kind::rdeepsense;
    std::size_t k = 0;

    void validate() const;  // k >= 2 for mc kinds, k >= 1 for ssp
    std::string id() const;
    static MethodSpec parse(const std::string& id);
};

// Mixture of k Gaussians with equal weights, matched to a single Gaussian:
// mu = mean of component means, var = mean(var_m + mu_m^2) - mu^2.
// Components aggregate in index order, so results are scheduling-independent.
std::pair<Vector, Vector> mixture_moments(const std::vector<Vector>& means,
                                          const std::vector<Vector>& variances);

// One weight-scaled forward pass, head mapped to a prediction.
Prediction predict_rdeepsense(const NetworkSpec& spec, const NetworkParams& params,
                              const Vector& x);

// k stochastic passes, Gaussian heads aggregated by moment matching
// (classification: mean of the k probability vectors).
Prediction predict_mc_rdeepsense(const NetworkSpec& spec, const NetworkParams& params,
                                 const Vector& x, std::size_t k, RngStream& rng);

// k stochastic passes through a point-output model; predictive variance is
// the unbiased sample variance of the outputs plus the variance floor.
Prediction predict_mcdrop(const NetworkSpec& spec, const NetworkParams& params, const Vector& x,
                          std::size_t k, RngStream& rng);

// Uniform mixture over independently trained models (dropout disabled).
Prediction predict_ensemble(const std::vector<Model>& models, const Vector& x);

// Whole-dataset prediction for the network-backed methods. MC draws come
// from per-sample derived streams, so parallel scheduling cannot change the
// result. Ensemble methods take the model list; single-model methods use
// models[0].
std::vector<Prediction> predict_dataset(const MethodSpec& method, const std::vector<Model>& models,
                                        const Dataset& data, std::uint64_t seed);

struct BenchReport {
    std::string method_id;
    std::size_t repetitions = 0;
    std::size_t warmup_runs = 0;
    std::size_t sample_count = 0;
    double median_seconds_per_sample = 0.0;
    double p95_seconds_per_sample = 0.0;
    std::uint64_t passes_per_prediction = 0;  // forward-pass counter, hardware independent
};

// Times whole-dataset prediction `repetitions` times after `warmup` unrecorded
// runs; reports per-sample wall clock and the exact forward-pass cost.
BenchReport bench_inference(const MethodSpec& method, const std::vector<Model>& models,
                            const Dataset& data, std::size_t repetitions, std::size_t warmup,
                            std::uint64_t seed);

}  // namespace calibnet
