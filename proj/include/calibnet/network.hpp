#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "calibnet/matrix.hpp"
#include "calibnet/prediction.hpp"
#include "calibnet/rng.hpp"

namespace calibnet {

enum class Activation { relu, softplus, softmax, identity };

// Regression output head. A gaussian head emits (mean, raw variance) pairs,
// interleaved per output dimension; a point head emits means only.
enum class HeadKind { gaussian, point };

const char* activation_name(Activation a);
Activation activation_from_name(const std::string& name);

// Architecture description. layer_dims runs d0..dL; activations and
// retain_probs have one entry per layer 1..L. retain_probs[l] gives the
// keep probability of each input unit of that layer (length d_l-1).
// The final activation is declarative: identity for regression, softmax
// for classification. Forward passes stop at the raw head vector and
// head_to_prediction applies the head mapping, so gradients are taken
// with respect to the raw head.
struct NetworkSpec {
    std::vector<std::size_t> layer_dims;
    std::vector<Activation> activations;
    std::vector<Vector> retain_probs;
    Task task = Task::regression;
    HeadKind head = HeadKind::gaussian;
    std::size_t output_dims = 1;
    double variance_floor = 1e-6;

    std::size_t num_layers() const { return layer_dims.empty() ? 0 : layer_dims.size() - 1; }
    std::size_t input_dims() const { return layer_dims.front(); }
    std::size_t head_width() const { return layer_dims.back(); }

    void validate() const;
};

// Convenience builder: hidden layers share one activation and one retain
// probability, the raw input gets its own retain probability (1 = no
// input dropout).
NetworkSpec make_spec(std::size_t input_dims, const std::vector<std::size_t>& hidden_dims,
                      Activation hidden_activation, Task task, HeadKind head,
                      std::size_t output_dims, double retain_hidden = 0.5,
                      double retain_input = 1.0);

struct NetworkParams {
    std::vector<Matrix> weights;
    std::vector<Vector> biases;
};

struct DropoutMasks {
    std::vector<Vector> layer_masks;  // 0/1, one per layer, length d_l-1
};

// Everything backward needs: per-layer inputs, masked inputs, and
// pre-activations. preacts.back() is the raw head.
struct ForwardTrace {
    std::vector<Vector> inputs;
    std::vector<Vector> masked_inputs;
    std::vector<Vector> preacts;
    DropoutMasks masks;

    const Vector& head() const { return preacts.back(); }
};

struct Gradients {
    std::vector<Matrix> weights;
    std::vector<Vector> biases;
};

// Glorot-uniform weights, zero biases.
NetworkParams init_params(const NetworkSpec& spec, RngStream& rng);

// Stochastic pass: samples a fresh Bernoulli retain mask per layer.
ForwardTrace forward_train(const NetworkSpec& spec, const NetworkParams& params, const Vector& x,
                           RngStream& rng);

// Same pass with caller-supplied masks (finite differencing, replay).
ForwardTrace forward_given_masks(const NetworkSpec& spec, const NetworkParams& params,
                                 const Vector& x, const DropoutMasks& masks);

// Deterministic single pass with inputs scaled by their retain
// probabilities instead of sampled masks. Returns the raw head.
Vector forward_infer_scaled(const NetworkSpec& spec, const NetworkParams& params, const Vector& x);

// Raw head to predictive distribution: gaussian head applies
// softplus + variance floor to the raw variance channels, classification
// applies a max-shifted softmax.
Prediction head_to_prediction(const NetworkSpec& spec, const Vector& head);

// Exact gradients of the sampled network for the given trace.
Gradients backward(const NetworkSpec& spec, const NetworkParams& params, const ForwardTrace& trace,
                   const Vector& head_gradient);

Gradients zero_gradients(const NetworkSpec& spec);

double softplus(double x);
double sigmoid(double x);
Vector softmax(const Vector& logits);

// Process-wide forward pass counter (train + scaled passes), used by the
// inference benchmarks as a hardware independent cost proxy.
std::uint64_t forward_pass_count();
void reset_forward_pass_count();

// Model checkpoint, a self-describing JSON document. Round trips are
// value identical.
struct Checkpoint {
    NetworkSpec spec;
    NetworkParams params;
    std::string config_digest;  // optional, empty if absent
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);
std::string checkpoint_to_string(const Checkpoint& ckpt);
Checkpoint checkpoint_from_string(const std::string& text);

}  // namespace calibnet
