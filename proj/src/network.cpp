#include "calibnet/network.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <sstream>

#include "calibnet/error.hpp"
#include "json.hpp"

namespace calibnet {

namespace {

std::atomic<std::uint64_t> g_forward_passes{0};

void apply_activation(Activation a, const Vector& pre, Vector& post) {
    post.resize(pre.size());
    switch (a) {
        case Activation::relu:
            for (std::size_t i = 0; i < pre.size(); ++i) post[i] = pre[i] > 0.0 ? pre[i] : 0.0;
            break;
        case Activation::softplus:
            for (std::size_t i = 0; i < pre.size(); ++i) post[i] = softplus(pre[i]);
            break;
        case Activation::identity:
        case Activation::softmax:  // head activations are applied in head_to_prediction
            post = pre;
            break;
    }
}

double activation_derivative(Activation a, double pre) {
    switch (a) {
        case Activation::relu: return pre > 0.0 ? 1.0 : 0.0;
        case Activation::softplus: return sigmoid(pre);
        case Activation::identity:
        case Activation::softmax: return 1.0;
    }
    return 1.0;
}

void check_input_length(const NetworkSpec& spec, const Vector& x, const char* where) {
    if (x.size() != spec.input_dims()) {
        throw Error(ErrorCategory::shape,
                    std::string(where) + ": input length " + std::to_string(x.size()) +
                        " does not match d0 = " + std::to_string(spec.input_dims()));
    }
}

void check_params_shapes(const NetworkSpec& spec, const NetworkParams& params, const char* where) {
    const std::size_t L = spec.num_layers();
    if (params.weights.size() != L || params.biases.size() != L) {
        throw Error(ErrorCategory::shape,
                    std::string(where) + ": parameter count does not match network depth");
    }
    for (std::size_t l = 0; l < L; ++l) {
        if (params.weights[l].rows != spec.layer_dims[l] ||
            params.weights[l].cols != spec.layer_dims[l + 1] ||
            params.biases[l].size() != spec.layer_dims[l + 1]) {
            throw Error(ErrorCategory::shape, std::string(where) + ": parameter shapes at layer " +
                                                  std::to_string(l) + " do not match the spec");
        }
    }
}

}  // namespace

double softplus(double x) {
    // overflow-free form
    return std::max(x, 0.0) + std::log1p(std::exp(-std::fabs(x)));
}

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

Vector softmax(const Vector& logits) {
    Vector p(logits.size());
    double mx = logits[0];
    for (double v : logits) mx = std::max(mx, v);
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits[i] - mx);
        sum += p[i];
    }
    for (double& v : p) v /= sum;
    return p;
}

const char* activation_name(Activation a) {
    switch (a) {
        case Activation::relu: return "relu";
        case Activation::softplus: return "softplus";
        case Activation::softmax: return "softmax";
        case Activation::identity: return "identity";
    }
    return "identity";
}

Activation activation_from_name(const std::string& name) {
    if (name == "relu") return Activation::relu;
    if (name == "softplus") return Activation::softplus;
    if (name == "softmax") return Activation::softmax;
    if (name == "identity") return Activation::identity;
    throw Error(ErrorCategory::config, "unknown activation: " + name);
}

void NetworkSpec::validate() const {
    if (layer_dims.size() < 2) {
        throw Error(ErrorCategory::validation, "network needs at least one layer");
    }
    for (std::size_t d : layer_dims) {
        if (d < 1) throw Error(ErrorCategory::validation, "layer dimensions must be positive");
    }
    const std::size_t L = num_layers();
    if (activations.size() != L) {
        throw Error(ErrorCategory::validation, "activations must have one entry per layer");
    }
    if (retain_probs.size() != L) {
        throw Error(ErrorCategory::validation, "retain_probs must have one entry per layer");
    }
    for (std::size_t l = 0; l < L; ++l) {
        if (retain_probs[l].size() != layer_dims[l]) {
            throw Error(ErrorCategory::validation,
                        "retain_probs at layer " + std::to_string(l) + " must have length " +
                            std::to_string(layer_dims[l]));
        }
        for (double p : retain_probs[l]) {
            if (!(p > 0.0 && p <= 1.0)) {
                throw Error(ErrorCategory::validation,
                            "retain probabilities must lie in (0,1], got " + std::to_string(p));
            }
        }
    }
    if (output_dims < 1) {
        throw Error(ErrorCategory::validation, "output_dims must be positive");
    }
    if (task == Task::regression) {
        const std::size_t want = head == HeadKind::gaussian ? 2 * output_dims : output_dims;
        if (head_width() != want) {
            throw Error(ErrorCategory::validation,
                        "regression head width must be " + std::to_string(want) + ", got " +
                            std::to_string(head_width()));
        }
        if (activations.back() != Activation::identity) {
            throw Error(ErrorCategory::validation, "regression head activation must be identity");
        }
    } else {
        if (head_width() != output_dims) {
            throw Error(ErrorCategory::validation,
                        "classification head width must equal the class count");
        }
        if (activations.back() != Activation::softmax) {
            throw Error(ErrorCategory::validation, "classification head activation must be softmax");
        }
    }
    if (!(variance_floor >= 0.0)) {
        throw Error(ErrorCategory::validation, "variance floor must be non-negative");
    }
}

NetworkSpec make_spec(std::size_t input_dims, const std::vector<std::size_t>& hidden_dims,
                      Activation hidden_activation, Task task, HeadKind head,
                      std::size_t output_dims, double retain_hidden, double retain_input) {
    NetworkSpec spec;
    spec.task = task;
    spec.head = head;
    spec.output_dims = output_dims;
    spec.layer_dims.push_back(input_dims);
    for (std::size_t h : hidden_dims) spec.layer_dims.push_back(h);
    std::size_t head_width = output_dims;
    if (task == Task::regression && head == HeadKind::gaussian) head_width = 2 * output_dims;
    spec.layer_dims.push_back(head_width);

    const std::size_t L = spec.num_layers();
    for (std::size_t l = 0; l < L; ++l) {
        const bool last = l + 1 == L;
        spec.activations.push_back(last ? (task == Task::classification ? Activation::softmax
                                                                        : Activation::identity)
                                        : hidden_activation);
        const double keep = l == 0 ? retain_input : retain_hidden;
        spec.retain_probs.emplace_back(spec.layer_dims[l], keep);
    }
    spec.validate();
    return spec;
}

NetworkParams init_params(const NetworkSpec& spec, RngStream& rng) {
    spec.validate();
    NetworkParams params;
    const std::size_t L = spec.num_layers();
    for (std::size_t l = 0; l < L; ++l) {
        const std::size_t fan_in = spec.layer_dims[l];
        const std::size_t fan_out = spec.layer_dims[l + 1];
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        Matrix w(fan_in, fan_out);
        for (double& v : w.data) v = (2.0 * rng.next_uniform() - 1.0) * limit;
        params.weights.push_back(std::move(w));
        params.biases.emplace_back(fan_out, 0.0);
    }
    return params;
}

ForwardTrace forward_given_masks(const NetworkSpec& spec, const NetworkParams& params,
                                 const Vector& x, const DropoutMasks& masks) {
    check_input_length(spec, x, "forward");
    check_params_shapes(spec, params, "forward");
    const std::size_t L = spec.num_layers();
    if (masks.layer_masks.size() != L) {
        throw Error(ErrorCategory::shape, "forward: mask count does not match network depth");
    }

    ForwardTrace trace;
    trace.masks = masks;
    trace.inputs.resize(L);
    trace.masked_inputs.resize(L);
    trace.preacts.resize(L);

    Vector cur = x;
    for (std::size_t l = 0; l < L; ++l) {
        const Vector& mask = masks.layer_masks[l];
        if (mask.size() != spec.layer_dims[l]) {
            throw Error(ErrorCategory::shape,
                        "forward: mask length at layer " + std::to_string(l) + " must be " +
                            std::to_string(spec.layer_dims[l]));
        }
        trace.inputs[l] = cur;
        Vector masked(cur.size());
        for (std::size_t i = 0; i < cur.size(); ++i) masked[i] = cur[i] * mask[i];
        trace.masked_inputs[l] = masked;

        Vector pre = vec_mat(masked, params.weights[l]);
        for (std::size_t j = 0; j < pre.size(); ++j) pre[j] += params.biases[l][j];
        trace.preacts[l] = pre;

        if (l + 1 < L) {
            apply_activation(spec.activations[l], pre, cur);
        }
    }
    g_forward_passes.fetch_add(1, std::memory_order_relaxed);
    return trace;
}

ForwardTrace forward_train(const NetworkSpec& spec, const NetworkParams& params, const Vector& x,
                           RngStream& rng) {
    DropoutMasks masks;
    masks.layer_masks.reserve(spec.num_layers());
    for (std::size_t l = 0; l < spec.num_layers(); ++l) {
        masks.layer_masks.push_back(bernoulli_vector(rng, spec.retain_probs[l]));
    }
    return forward_given_masks(spec, params, x, masks);
}

Vector forward_infer_scaled(const NetworkSpec& spec, const NetworkParams& params, const Vector& x) {
    check_input_length(spec, x, "forward_infer_scaled");
    check_params_shapes(spec, params, "forward_infer_scaled");
    const std::size_t L = spec.num_layers();

    Vector cur = x;
    for (std::size_t l = 0; l < L; ++l) {
        Vector scaled(cur.size());
        const Vector& keep = spec.retain_probs[l];
        for (std::size_t i = 0; i < cur.size(); ++i) scaled[i] = cur[i] * keep[i];

        Vector pre = vec_mat(scaled, params.weights[l]);
        for (std::size_t j = 0; j < pre.size(); ++j) pre[j] += params.biases[l][j];

        if (l + 1 < L) {
            apply_activation(spec.activations[l], pre, cur);
        } else {
            cur = pre;
        }
    }
    g_forward_passes.fetch_add(1, std::memory_order_relaxed);
    return cur;
}

Prediction head_to_prediction(const NetworkSpec& spec, const Vector& head) {
    if (head.size() != spec.head_width()) {
        throw Error(ErrorCategory::shape,
                    "head_to_prediction: head length " + std::to_string(head.size()) +
                        " does not match the final layer width " +
                        std::to_string(spec.head_width()));
    }
    Prediction pred;
    pred.task = spec.task;
    if (spec.task == Task::classification) {
        pred.probs = softmax(head);
        return pred;
    }
    if (spec.head == HeadKind::point) {
        pred.mean = head;
        return pred;
    }
    pred.mean.resize(spec.output_dims);
    pred.variance.resize(spec.output_dims);
    for (std::size_t d = 0; d < spec.output_dims; ++d) {
        pred.mean[d] = head[2 * d];
        pred.variance[d] = softplus(head[2 * d + 1]) + spec.variance_floor;
    }
    return pred;
}

Gradients zero_gradients(const NetworkSpec& spec) {
    Gradients g;
    for (std::size_t l = 0; l < spec.num_layers(); ++l) {
        g.weights.emplace_back(spec.layer_dims[l], spec.layer_dims[l + 1]);
        g.biases.emplace_back(spec.layer_dims[l + 1], 0.0);
    }
    return g;
}

Gradients backward(const NetworkSpec& spec, const NetworkParams& params, const ForwardTrace& trace,
                   const Vector& head_gradient) {
    check_params_shapes(spec, params, "backward");
    const std::size_t L = spec.num_layers();
    if (trace.preacts.size() != L || trace.inputs.size() != L || trace.masked_inputs.size() != L) {
        throw Error(ErrorCategory::shape, "backward: trace does not match network depth");
    }
    if (head_gradient.size() != spec.head_width()) {
        throw Error(ErrorCategory::shape, "backward: head gradient length mismatch");
    }

    Gradients grads = zero_gradients(spec);
    Vector delta = head_gradient;  // d loss / d preact of current layer

    for (std::size_t l = L; l-- > 0;) {
        add_outer(trace.masked_inputs[l], delta, grads.weights[l]);
        for (std::size_t j = 0; j < delta.size(); ++j) grads.biases[l][j] += delta[j];

        if (l == 0) break;

        Vector dx = mat_vec(params.weights[l], delta);
        const Vector& mask = trace.masks.layer_masks[l];
        const Vector& prev_pre = trace.preacts[l - 1];
        delta.resize(dx.size());
        for (std::size_t i = 0; i < dx.size(); ++i) {
            delta[i] = dx[i] * mask[i] * activation_derivative(spec.activations[l - 1], prev_pre[i]);
        }
    }
    return grads;
}

std::uint64_t forward_pass_count() { return g_forward_passes.load(std::memory_order_relaxed); }
void reset_forward_pass_count() { g_forward_passes.store(0, std::memory_order_relaxed); }

// ---- checkpoint io ----

namespace {

using nlohmann::json;

json spec_to_json(const NetworkSpec& spec) {
    json j;
    j["layer_dims"] = spec.layer_dims;
    std::vector<std::string> acts;
    for (Activation a : spec.activations) acts.emplace_back(activation_name(a));
    j["activations"] = acts;
    j["retain_probs"] = spec.retain_probs;
    j["task"] = spec.task == Task::regression ? "regression" : "classification";
    j["head"] = spec.head == HeadKind::gaussian ? "gaussian" : "point";
    j["output_dims"] = spec.output_dims;
    j["variance_floor"] = spec.variance_floor;
    return j;
}

NetworkSpec spec_from_json(const json& j) {
    NetworkSpec spec;
    spec.layer_dims = j.at("layer_dims").get<std::vector<std::size_t>>();
    for (const auto& name : j.at("activations")) {
        spec.activations.push_back(activation_from_name(name.get<std::string>()));
    }
    spec.retain_probs = j.at("retain_probs").get<std::vector<Vector>>();
    const std::string task = j.at("task").get<std::string>();
    if (task == "regression") {
        spec.task = Task::regression;
    } else if (task == "classification") {
        spec.task = Task::classification;
    } else {
        throw Error(ErrorCategory::io, "checkpoint: unknown task " + task);
    }
    const std::string head = j.at("head").get<std::string>();
    if (head == "gaussian") {
        spec.head = HeadKind::gaussian;
    } else if (head == "point") {
        spec.head = HeadKind::point;
    } else {
        throw Error(ErrorCategory::io, "checkpoint: unknown head " + head);
    }
    spec.output_dims = j.at("output_dims").get<std::size_t>();
    spec.variance_floor = j.at("variance_floor").get<double>();
    spec.validate();
    return spec;
}

}  // namespace

std::string checkpoint_to_string(const Checkpoint& ckpt) {
    json j;
    j["format_version"] = 1;
    j["spec"] = spec_to_json(ckpt.spec);
    json weights = json::array();
    for (const Matrix& w : ckpt.params.weights) {
        json wj;
        wj["rows"] = w.rows;
        wj["cols"] = w.cols;
        wj["data"] = w.data;
        weights.push_back(wj);
    }
    j["weights"] = weights;
    j["biases"] = ckpt.params.biases;
    if (!ckpt.config_digest.empty()) j["config_digest"] = ckpt.config_digest;
    return j.dump(2);
}

Checkpoint checkpoint_from_string(const std::string& text) {
    try {
        json j = json::parse(text);
        if (j.at("format_version").get<int>() != 1) {
            throw Error(ErrorCategory::io, "checkpoint: unsupported format version");
        }
        Checkpoint ckpt;
        ckpt.spec = spec_from_json(j.at("spec"));
        for (const auto& wj : j.at("weights")) {
            Matrix w(wj.at("rows").get<std::size_t>(), wj.at("cols").get<std::size_t>());
            w.data = wj.at("data").get<std::vector<double>>();
            if (w.data.size() != w.rows * w.cols) {
                throw Error(ErrorCategory::io, "checkpoint: weight data length mismatch");
            }
            if (!all_finite(w)) throw Error(ErrorCategory::io, "checkpoint: non-finite weight");
            ckpt.params.weights.push_back(std::move(w));
        }
        ckpt.params.biases = j.at("biases").get<std::vector<Vector>>();
        for (const Vector& b : ckpt.params.biases) {
            if (!all_finite(b)) throw Error(ErrorCategory::io, "checkpoint: non-finite bias");
        }
        if (j.contains("config_digest")) {
            ckpt.config_digest = j.at("config_digest").get<std::string>();
        }
        check_params_shapes(ckpt.spec, ckpt.params, "checkpoint");
        return ckpt;
    } catch (const json::exception& e) {
        throw Error(ErrorCategory::io, std::string("checkpoint parse failed: ") + e.what());
    }
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCategory::io, "cannot open " + path + " for writing");
    out << checkpoint_to_string(ckpt) << "\n";
    if (!out) throw Error(ErrorCategory::io, "write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCategory::io, "cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return checkpoint_from_string(ss.str());
}

}  // namespace calibnet
