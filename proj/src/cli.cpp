#include "calibnet/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "calibnet/calibration.hpp"
#include "calibnet/error.hpp"
#include "calibnet/gp.hpp"
#include "calibnet/inference.hpp"
#include "json.hpp"

namespace calibnet {

namespace {

using nlohmann::json;

// ---- strict config parsing ----

void check_keys(const json& obj, const std::string& path,
                std::initializer_list<const char*> allowed) {
    for (const auto& item : obj.items()) {
        bool known = false;
        for (const char* key : allowed) {
            if (item.key() == key) {
                known = true;
                break;
            }
        }
        if (!known) {
            throw Error(ErrorCategory::config,
                        "unknown config key '" + (path.empty() ? item.key() : path + "." + item.key()) + "'");
        }
    }
}

template <typename T>
T get_field(const json& obj, const std::string& path, const char* key, const T& fallback) {
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw Error(ErrorCategory::config, "config key '" + path + "." + std::string(key) +
                                               "' has the wrong type");
    }
}

template <typename T>
T require_field(const json& obj, const std::string& path, const char* key) {
    if (!obj.contains(key)) {
        throw Error(ErrorCategory::config,
                    "missing config key '" + path + "." + std::string(key) + "'");
    }
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw Error(ErrorCategory::config, "config key '" + path + "." + std::string(key) +
                                               "' has the wrong type");
    }
}

Task parse_task(const std::string& name) {
    if (name == "regression") return Task::regression;
    if (name == "classification") return Task::classification;
    throw Error(ErrorCategory::config, "task must be 'regression' or 'classification'");
}

json canonical_config_json(const RunConfig& c);

// ---- report plumbing ----

std::string iso_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm_utc{};
    gmtime_r(&now, &tm_utc);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

std::string make_report(const RunConfig& config, json payload, json meta) {
    payload["config_digest"] = config.digest;
    meta["created_at"] = iso_timestamp();
    json doc;
    doc["meta"] = std::move(meta);
    doc["payload"] = std::move(payload);
    return doc.dump(2) + "\n";
}

struct OutputFile {
    std::string rel_path;
    std::string content;
};

void write_outputs(const RunConfig& config, const std::vector<OutputFile>& files) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(config.out_dir, ec);
    if (ec) {
        throw Error(ErrorCategory::io, "cannot create output directory " + config.out_dir);
    }
    for (const OutputFile& f : files) {
        const fs::path full = fs::path(config.out_dir) / f.rel_path;
        if (full.has_parent_path()) fs::create_directories(full.parent_path(), ec);
        std::ofstream out(full);
        if (!out) throw Error(ErrorCategory::io, "cannot open " + full.string() + " for writing");
        out << f.content;
        if (!out) throw Error(ErrorCategory::io, "write failed: " + full.string());
        if (!config.quiet) std::cout << "wrote " << full.string() << "\n";
    }
}

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// ---- pipeline ----

struct Pipeline {
    Dataset train_std, val_std, test_std;  // standardized units
    Dataset test_raw;                      // original units
    Standardizer stdizer;
    std::size_t input_dims = 0;
    std::size_t output_dims = 0;
};

Dataset load_source(const RunConfig& config) {
    switch (config.data.source) {
        case DataConfig::Source::heteroscedastic:
            return gen_heteroscedastic(config.data.n, config.seed);
        case DataConfig::Source::blobs:
            return gen_blobs(config.data.n, config.data.classes, config.data.separation,
                             config.seed);
        case DataConfig::Source::csv: {
            CsvSchema schema;
            schema.task = config.task;
            schema.feature_columns = config.data.feature_columns;
            schema.target_columns = config.data.target_columns;
            return load_csv(config.data.path, schema);
        }
    }
    throw Error(ErrorCategory::internal, "unreachable data source");
}

Pipeline build_pipeline(const RunConfig& config) {
    Dataset full = load_source(config);
    if (full.task != config.task) {
        throw Error(ErrorCategory::config, "data source task does not match config task");
    }
    Splits parts = split(full, config.split, config.seed);
    if (parts.train.size() == 0) {
        throw Error(ErrorCategory::validation, "training split is empty");
    }

    Pipeline p;
    p.stdizer = fit_standardizer(parts.train);
    p.train_std = standardize(parts.train, p.stdizer);
    p.val_std = standardize(parts.val, p.stdizer);
    p.test_std = standardize(parts.test, p.stdizer);
    p.test_raw = std::move(parts.test);
    p.input_dims = p.train_std.inputs.cols;
    p.output_dims = config.task == Task::regression ? p.train_std.targets.cols
                                                    : p.train_std.num_classes;
    return p;
}

NetworkSpec build_spec(const RunConfig& config, const Pipeline& p, HeadKind head,
                       bool with_dropout) {
    NetworkSpec spec = make_spec(p.input_dims, config.hidden, config.activation, config.task,
                                 head, p.output_dims, with_dropout ? config.retain_hidden : 1.0,
                                 with_dropout ? config.retain_input : 1.0);
    spec.variance_floor = config.variance_floor;
    spec.validate();
    return spec;
}

// ---- model registry for compare/bench ----

std::vector<Model> load_checkpoint_models(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCategory::io, "cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    json j;
    try {
        j = json::parse(ss.str());
    } catch (const json::exception& e) {
        throw Error(ErrorCategory::io, std::string("checkpoint parse failed: ") + e.what());
    }
    std::vector<Model> models;
    if (j.contains("ensemble")) {
        const auto base = std::filesystem::path(path).parent_path();
        for (const auto& rel : j.at("ensemble")) {
            const Checkpoint ckpt =
                load_checkpoint((base / rel.get<std::string>()).string());
            models.push_back({ckpt.spec, ckpt.params});
        }
        if (models.empty()) {
            throw Error(ErrorCategory::io, "ensemble manifest lists no members");
        }
    } else {
        const Checkpoint ckpt = checkpoint_from_string(ss.str());
        models.push_back({ckpt.spec, ckpt.params});
    }
    return models;
}

// Destandardizes regression predictions so metrics read in original units.
CalibrationReport evaluate_network_method(const MethodSpec& method,
                                          const std::vector<Model>& models, const Pipeline& p,
                                          const ZGrid& grid, std::uint64_t seed) {
    std::vector<Prediction> preds = predict_dataset(method, models, p.test_std, seed);
    CalibrationReport report;
    if (p.test_std.task == Task::regression) {
        for (Prediction& pred : preds) pred = destandardize_prediction(pred, p.stdizer);
        report = evaluate_regression(preds, p.test_raw.targets, grid);
    } else {
        report = evaluate_classification(preds, p.test_raw.labels);
    }
    report.method_id = method.id();
    return report;
}

Dataset gp_train_subset(const Pipeline& p, std::size_t cap) {
    const std::size_t n = p.train_std.size();
    if (n <= cap) return p.train_std;
    const std::size_t stride = (n + cap - 1) / cap;
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < n && rows.size() < cap; i += stride) rows.push_back(i);
    return take_rows(p.train_std, rows, "gp-subsample");
}

GpModel fit_gp_baseline(const RunConfig& config, const Pipeline& p) {
    if (config.task != Task::regression || p.output_dims != 1) {
        throw Error(ErrorCategory::validation,
                    "the gp baseline supports single-output regression only");
    }
    const Dataset sub = gp_train_subset(p, config.gp.max_train);
    GpDefaults defs = gp_defaults_from_data(sub);
    if (config.gp.signal_variance > 0.0) defs.kernel.signal_variance = config.gp.signal_variance;
    if (config.gp.length_scale > 0.0) defs.kernel.length_scale = config.gp.length_scale;
    if (config.gp.noise_variance > 0.0) defs.noise_variance = config.gp.noise_variance;

    Vector y(sub.size());
    for (std::size_t i = 0; i < sub.size(); ++i) y[i] = sub.targets(i, 0);
    return gp_fit(sub.inputs, y, defs.kernel, defs.noise_variance, kGpDefaultCap);
}

CalibrationReport evaluate_gp(const RunConfig& config, const Pipeline& p, const ZGrid& grid) {
    const GpModel model = fit_gp_baseline(config, p);
    std::vector<Prediction> preds = gp_predict_dataset(model, p.test_std);
    for (Prediction& pred : preds) pred = destandardize_prediction(pred, p.stdizer);
    CalibrationReport report = evaluate_regression(preds, p.test_raw.targets, grid);
    report.method_id = "gp";
    return report;
}

json report_payload(const CalibrationReport& r) {
    json j;
    j["method"] = r.method_id;
    j["samples"] = r.sample_count;
    if (r.task == Task::regression) {
        j["task"] = "regression";
        j["z_levels"] = r.z_levels;
        j["coverage"] = r.coverage;
        j["deviation_area"] = r.deviation_area;
        j["mae"] = r.mae;
        j["nll"] = r.nll;
        j["nll_no_const"] = r.nll_no_const;
    } else {
        j["task"] = "classification";
        j["accuracy"] = r.accuracy;
        j["macro_f1"] = r.macro_f1;
        j["nll"] = r.nll;
        if (r.mefp_defined) {
            j["mefp"] = r.mefp;
        } else {
            j["mefp"] = nullptr;
        }
    }
    if (!r.model_digest.empty()) j["model_digest"] = r.model_digest;
    return j;
}

std::string metrics_csv(const std::vector<CalibrationReport>& reports,
                        const std::vector<std::uint64_t>& passes) {
    std::string out = "method,metric,value\n";
    for (std::size_t i = 0; i < reports.size(); ++i) {
        for (const auto& [name, value] : report_metric_rows(reports[i])) {
            out += reports[i].method_id + "," + name + "," + value + "\n";
        }
        if (i < passes.size()) {
            out += reports[i].method_id + ",passes_per_prediction," + std::to_string(passes[i]) + "\n";
        }
    }
    return out;
}

// Training wrappers used by compare; seeds derived per role so the models
// are independent but reproducible.

std::uint64_t role_seed(const RunConfig& config, std::uint64_t role) {
    RngStream root(config.seed, 5);
    return root.derive(role).next_u64();
}

Model train_main_model(const RunConfig& config, const Pipeline& p) {
    const NetworkSpec spec = build_spec(config, p, config.head, true);
    TrainConfig cfg = config.train_cfg;
    cfg.seed = role_seed(config, 0);
    auto [params, report] = train(spec, config.loss, p.train_std, p.val_std, cfg);
    (void)report;
    return {spec, std::move(params)};
}

Model train_mcdrop_model(const RunConfig& config, const Pipeline& p) {
    LossSpec loss = config.loss;
    NetworkSpec spec;
    if (config.task == Task::regression) {
        spec = build_spec(config, p, HeadKind::point, true);
        loss.alpha = 1.0;  // point outputs carry no likelihood term
    } else {
        spec = build_spec(config, p, config.head, true);
        loss.alpha = 0.0;  // plain log-likelihood training
    }
    TrainConfig cfg = config.train_cfg;
    cfg.seed = role_seed(config, 1);
    auto [params, report] = train(spec, loss, p.train_std, p.val_std, cfg);
    (void)report;
    return {spec, std::move(params)};
}

std::vector<Model> train_ensemble(const RunConfig& config, const Pipeline& p, std::size_t count) {
    const NetworkSpec spec = build_spec(config, p, config.head, false);
    LossSpec loss = config.loss;
    loss.alpha = 0.0;  // members learn the full predictive distribution
    std::vector<Model> models(count);
    std::exception_ptr first_error = nullptr;
    const auto n = static_cast<std::ptrdiff_t>(count);
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        try {
            TrainConfig cfg = config.train_cfg;
            cfg.seed = role_seed(config, 16 + static_cast<std::uint64_t>(i));
            auto [params, report] = train(spec, loss, p.train_std, p.val_std, cfg);
            (void)report;
            models[static_cast<std::size_t>(i)] = {spec, std::move(params)};
        } catch (...) {
#pragma omp critical
            if (!first_error) first_error = std::current_exception();
        }
    }
    if (first_error) std::rethrow_exception(first_error);
    return models;
}

struct GpTiming {
    double median = 0.0;
    double p95 = 0.0;
};

GpTiming time_gp(const GpModel& model, const Dataset& data, std::size_t repetitions) {
    using clock = std::chrono::steady_clock;
    std::vector<double> per_sample(repetitions);
    for (std::size_t r = 0; r < repetitions; ++r) {
        const auto t0 = clock::now();
        gp_predict_dataset(model, data);
        const auto t1 = clock::now();
        per_sample[r] =
            std::chrono::duration<double>(t1 - t0).count() / static_cast<double>(data.size());
    }
    std::sort(per_sample.begin(), per_sample.end());
    GpTiming t;
    const std::size_t mid = repetitions / 2;
    t.median = repetitions % 2 == 1 ? per_sample[mid]
                                    : 0.5 * (per_sample[mid - 1] + per_sample[mid]);
    const auto p95_idx = static_cast<std::size_t>(
        std::min<double>(static_cast<double>(repetitions - 1),
                         std::ceil(0.95 * static_cast<double>(repetitions)) - 1.0));
    t.p95 = per_sample[p95_idx];
    return t;
}

}  // namespace

// ---- config loading ----

std::string fnv1a_digest(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

namespace {

json canonical_config_json(const RunConfig& c) {
    json j;
    j["task"] = c.task == Task::regression ? "regression" : "classification";
    j["seed"] = c.seed;
    json data;
    switch (c.data.source) {
        case DataConfig::Source::heteroscedastic:
            data["source"] = "heteroscedastic";
            data["n"] = c.data.n;
            break;
        case DataConfig::Source::blobs:
            data["source"] = "blobs";
            data["n"] = c.data.n;
            data["classes"] = c.data.classes;
            data["separation"] = c.data.separation;
            break;
        case DataConfig::Source::csv:
            data["source"] = "csv";
            data["path"] = c.data.path;
            data["features"] = c.data.feature_columns;
            data["targets"] = c.data.target_columns;
            break;
    }
    j["data"] = data;
    j["split"] = {{"train", c.split.train}, {"val", c.split.val}, {"test", c.split.test}};
    j["network"] = {{"hidden", c.hidden},
                    {"activation", activation_name(c.activation)},
                    {"head", c.head == HeadKind::gaussian ? "gaussian" : "point"},
                    {"retain_hidden", c.retain_hidden},
                    {"retain_input", c.retain_input},
                    {"variance_floor", c.variance_floor}};
    j["loss"] = {{"alpha", c.loss.alpha},
                 {"lambda_e", c.loss.lambda_e},
                 {"lambda_l", c.loss.lambda_l}};
    j["train"] = {{"epochs", c.train_cfg.epochs},
                  {"batch_size", c.train_cfg.batch_size},
                  {"optimizer", c.train_cfg.optimizer == Optimizer::adam ? "adam" : "sgd"},
                  {"learning_rate", c.train_cfg.learning_rate},
                  {"beta1", c.train_cfg.beta1},
                  {"beta2", c.train_cfg.beta2},
                  {"epsilon", c.train_cfg.adam_eps},
                  {"early_stop_patience", c.train_cfg.early_stop_patience},
                  {"shuffle", c.train_cfg.shuffle},
                  {"clip_norm", c.train_cfg.clip_norm}};
    j["methods"] = c.methods;
    j["alphas"] = c.alphas;
    j["bench"] = {{"repetitions", c.bench.repetitions},
                  {"warmup", c.bench.warmup},
                  {"sample_cap", c.bench.sample_cap}};
    j["gp"] = {{"max_train", c.gp.max_train},
               {"signal_variance", c.gp.signal_variance},
               {"length_scale", c.gp.length_scale},
               {"noise_variance", c.gp.noise_variance}};
    return j;
}

void refresh_digest(RunConfig& c) { c.digest = fnv1a_digest(canonical_config_json(c).dump()); }

}  // namespace

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCategory::io, "cannot open config " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw Error(ErrorCategory::config, std::string("config parse failed: ") + e.what());
    }
    if (!j.is_object()) {
        throw Error(ErrorCategory::config, "config root must be an object");
    }
    check_keys(j, "", {"task", "seed", "out_dir", "data", "split", "network", "loss", "train",
                       "methods", "alphas", "bench", "gp"});

    RunConfig c;
    c.task = parse_task(require_field<std::string>(j, "", "task"));
    c.seed = get_field<std::uint64_t>(j, "", "seed", 0);
    c.out_dir = get_field<std::string>(j, "", "out_dir", "out");

    const json data = j.contains("data") ? j.at("data") : json::object();
    check_keys(data, "data", {"source", "n", "classes", "separation", "path", "features", "targets"});
    const std::string source = require_field<std::string>(data, "data", "source");
    if (source == "heteroscedastic") {
        c.data.source = DataConfig::Source::heteroscedastic;
        c.data.n = get_field<std::size_t>(data, "data", "n", 10000);
        if (c.task != Task::regression) {
            throw Error(ErrorCategory::config, "the heteroscedastic generator is regression data");
        }
    } else if (source == "blobs") {
        c.data.source = DataConfig::Source::blobs;
        c.data.n = get_field<std::size_t>(data, "data", "n", 10000);
        c.data.classes = get_field<std::size_t>(data, "data", "classes", 2);
        c.data.separation = get_field<double>(data, "data", "separation", 6.0);
        if (c.task != Task::classification) {
            throw Error(ErrorCategory::config, "the blobs generator is classification data");
        }
    } else if (source == "csv") {
        c.data.source = DataConfig::Source::csv;
        c.data.path = require_field<std::string>(data, "data", "path");
        c.data.feature_columns = require_field<std::vector<std::string>>(data, "data", "features");
        c.data.target_columns = require_field<std::vector<std::string>>(data, "data", "targets");
    } else {
        throw Error(ErrorCategory::config, "data.source must be heteroscedastic, blobs, or csv");
    }

    if (j.contains("split")) {
        const json s = j.at("split");
        check_keys(s, "split", {"train", "val", "test"});
        c.split.train = get_field<double>(s, "split", "train", 0.96);
        c.split.val = get_field<double>(s, "split", "val", 0.02);
        c.split.test = get_field<double>(s, "split", "test", 0.02);
    }

    if (j.contains("network")) {
        const json n = j.at("network");
        check_keys(n, "network",
                   {"hidden", "activation", "head", "retain_hidden", "retain_input",
                    "variance_floor"});
        c.hidden = get_field<std::vector<std::size_t>>(n, "network", "hidden", c.hidden);
        c.activation =
            activation_from_name(get_field<std::string>(n, "network", "activation", "relu"));
        const std::string head = get_field<std::string>(n, "network", "head", "gaussian");
        if (head == "gaussian") {
            c.head = HeadKind::gaussian;
        } else if (head == "point") {
            c.head = HeadKind::point;
        } else {
            throw Error(ErrorCategory::config, "network.head must be 'gaussian' or 'point'");
        }
        c.retain_hidden = get_field<double>(n, "network", "retain_hidden", c.retain_hidden);
        c.retain_input = get_field<double>(n, "network", "retain_input", c.retain_input);
        c.variance_floor = get_field<double>(n, "network", "variance_floor", c.variance_floor);
    }

    if (j.contains("loss")) {
        const json l = j.at("loss");
        check_keys(l, "loss", {"alpha", "lambda_e", "lambda_l"});
        c.loss.alpha = get_field<double>(l, "loss", "alpha", c.loss.alpha);
        c.loss.lambda_e = get_field<double>(l, "loss", "lambda_e", c.loss.lambda_e);
        c.loss.lambda_l = get_field<double>(l, "loss", "lambda_l", c.loss.lambda_l);
    }
    c.loss.task = c.task;
    c.loss.validate();

    if (j.contains("train")) {
        const json t = j.at("train");
        check_keys(t, "train",
                   {"epochs", "batch_size", "optimizer", "learning_rate", "beta1", "beta2",
                    "epsilon", "early_stop_patience", "shuffle", "clip_norm"});
        c.train_cfg.epochs = get_field<std::size_t>(t, "train", "epochs", c.train_cfg.epochs);
        c.train_cfg.batch_size =
            get_field<std::size_t>(t, "train", "batch_size", c.train_cfg.batch_size);
        const std::string opt = get_field<std::string>(t, "train", "optimizer", "adam");
        if (opt == "adam") {
            c.train_cfg.optimizer = Optimizer::adam;
        } else if (opt == "sgd") {
            c.train_cfg.optimizer = Optimizer::sgd;
        } else {
            throw Error(ErrorCategory::config, "train.optimizer must be 'adam' or 'sgd'");
        }
        c.train_cfg.learning_rate =
            get_field<double>(t, "train", "learning_rate", c.train_cfg.learning_rate);
        c.train_cfg.beta1 = get_field<double>(t, "train", "beta1", c.train_cfg.beta1);
        c.train_cfg.beta2 = get_field<double>(t, "train", "beta2", c.train_cfg.beta2);
        c.train_cfg.adam_eps = get_field<double>(t, "train", "epsilon", c.train_cfg.adam_eps);
        c.train_cfg.early_stop_patience = get_field<std::size_t>(
            t, "train", "early_stop_patience", c.train_cfg.early_stop_patience);
        c.train_cfg.shuffle = get_field<bool>(t, "train", "shuffle", c.train_cfg.shuffle);
        c.train_cfg.clip_norm = get_field<double>(t, "train", "clip_norm", c.train_cfg.clip_norm);
    }
    c.train_cfg.validate();

    c.methods = get_field<std::vector<std::string>>(j, "", "methods", {});
    for (const std::string& id : c.methods) MethodSpec::parse(id);

    c.alphas = get_field<std::vector<double>>(j, "", "alphas", c.alphas);
    for (double a : c.alphas) {
        if (!(a >= 0.0 && a <= 1.0)) {
            throw Error(ErrorCategory::config, "alphas must lie in [0,1]");
        }
    }

    if (j.contains("bench")) {
        const json b = j.at("bench");
        check_keys(b, "bench", {"repetitions", "warmup", "sample_cap"});
        c.bench.repetitions =
            get_field<std::size_t>(b, "bench", "repetitions", c.bench.repetitions);
        c.bench.warmup = get_field<std::size_t>(b, "bench", "warmup", c.bench.warmup);
        c.bench.sample_cap =
            get_field<std::size_t>(b, "bench", "sample_cap", c.bench.sample_cap);
    }

    if (j.contains("gp")) {
        const json g = j.at("gp");
        check_keys(g, "gp", {"max_train", "signal_variance", "length_scale", "noise_variance"});
        c.gp.max_train = get_field<std::size_t>(g, "gp", "max_train", c.gp.max_train);
        c.gp.signal_variance = get_field<double>(g, "gp", "signal_variance", 0.0);
        c.gp.length_scale = get_field<double>(g, "gp", "length_scale", 0.0);
        c.gp.noise_variance = get_field<double>(g, "gp", "noise_variance", 0.0);
    }

    if (c.head == HeadKind::point && c.task == Task::regression && c.loss.alpha != 1.0) {
        throw Error(ErrorCategory::config, "a point head trains only with alpha = 1");
    }

    refresh_digest(c);
    return c;
}

void apply_overrides(RunConfig& config, std::optional<std::uint64_t> seed,
                     const std::optional<std::string>& out_dir, bool quiet) {
    if (seed) config.seed = *seed;
    if (out_dir) config.out_dir = *out_dir;
    config.quiet = quiet;
    refresh_digest(config);
}

// ---- commands ----

void cmd_gen(const RunConfig& config) {
    if (config.data.source == DataConfig::Source::csv) {
        throw Error(ErrorCategory::config, "gen needs a generator data source, not csv");
    }
    const Dataset data = load_source(config);

    json payload;
    payload["provenance"] = data.provenance;
    payload["rows"] = data.size();
    payload["input_dims"] = data.inputs.cols;
    if (data.task == Task::regression) {
        payload["output_dims"] = data.targets.cols;
    } else {
        payload["classes"] = data.num_classes;
    }

    std::vector<OutputFile> files;
    files.push_back({"dataset.csv", dataset_to_csv(data)});
    files.push_back({"gen_report.json", make_report(config, payload, json::object())});
    write_outputs(config, files);
}

void cmd_train(const RunConfig& config) {
    const Pipeline p = build_pipeline(config);
    const NetworkSpec spec = build_spec(config, p, config.head, true);

    auto [params, report] = train(spec, config.loss, p.train_std, p.val_std, config.train_cfg);

    Checkpoint ckpt{spec, std::move(params), config.digest};

    json payload;
    payload["final_epoch"] = report.final_epoch;
    payload["best_epoch"] = report.best_epoch;
    payload["early_stopped"] = report.early_stopped;
    payload["clip_events"] = report.clip_events;
    payload["clamp_events"] = report.clamp_events;
    json epochs = json::array();
    for (const EpochRecord& e : report.epochs) {
        epochs.push_back({{"epoch", e.epoch},
                          {"train_total", e.train_total},
                          {"train_nll", e.train_nll},
                          {"train_error", e.train_error},
                          {"train_reg", e.train_reg},
                          {"val_total", e.val_total}});
    }
    payload["epochs"] = epochs;

    json meta;
    meta["wall_seconds"] = report.wall_seconds;

    std::vector<OutputFile> files;
    files.push_back({"checkpoint.json", checkpoint_to_string(ckpt) + "\n"});
    files.push_back({"train_report.json", make_report(config, payload, meta)});
    write_outputs(config, files);
}

void cmd_eval(const RunConfig& config, const std::string& checkpoint_path,
              const std::string& method_id) {
    const MethodSpec method = MethodSpec::parse(method_id);
    const Pipeline p = build_pipeline(config);
    const ZGrid grid = ZGrid::default_grid();

    CalibrationReport report;
    if (method.kind == MethodSpec::Kind::gp) {
        report = evaluate_gp(config, p, grid);
    } else {
        const std::vector<Model> models = load_checkpoint_models(checkpoint_path);
        report = evaluate_network_method(method, models, p, grid, config.seed);
        report.model_digest = fnv1a_digest(checkpoint_to_string({models[0].spec,
                                                                 models[0].params, ""}));
    }
    report.config_digest = config.digest;

    std::vector<OutputFile> files;
    files.push_back({"eval_" + method.id() + ".json",
                     make_report(config, report_payload(report), json::object())});
    if (config.task == Task::regression) {
        files.push_back({"eval_" + method.id() + "_curve.csv", curve_table(report)});
    }
    files.push_back({"eval_" + method.id() + "_metrics.csv", metrics_csv({report}, {})});
    write_outputs(config, files);
}

void cmd_compare(const RunConfig& config) {
    if (config.methods.empty()) {
        throw Error(ErrorCategory::config, "compare needs a non-empty methods list");
    }
    std::vector<MethodSpec> methods;
    std::size_t max_ssp = 0;
    bool needs_mcdrop = false, needs_gp = false, needs_main = false;
    for (const std::string& id : config.methods) {
        methods.push_back(MethodSpec::parse(id));
        switch (methods.back().kind) {
            case MethodSpec::Kind::rdeepsense:
            case MethodSpec::Kind::rdeepsense_mc: needs_main = true; break;
            case MethodSpec::Kind::mcdrop: needs_mcdrop = true; break;
            case MethodSpec::Kind::ssp: max_ssp = std::max(max_ssp, methods.back().k); break;
            case MethodSpec::Kind::gp: needs_gp = true; break;
        }
    }

    const Pipeline p = build_pipeline(config);
    const ZGrid grid = ZGrid::default_grid();

    Model main_model, mcdrop_model;
    std::vector<Model> ensemble;
    if (needs_main) main_model = train_main_model(config, p);
    if (needs_mcdrop) mcdrop_model = train_mcdrop_model(config, p);
    if (max_ssp > 0) ensemble = train_ensemble(config, p, max_ssp);

    const std::size_t bench_rows = std::min(config.bench.sample_cap, p.test_std.size());
    std::vector<std::size_t> bench_idx(bench_rows);
    for (std::size_t i = 0; i < bench_rows; ++i) bench_idx[i] = i;
    const Dataset bench_std = take_rows(p.test_std, bench_idx, "bench");

    std::vector<CalibrationReport> reports;
    std::vector<std::uint64_t> passes;
    json latencies = json::array();
    std::vector<std::string> skipped;

    for (const MethodSpec& method : methods) {
        if (method.kind == MethodSpec::Kind::gp) {
            if (config.task != Task::regression || p.output_dims != 1) {
                skipped.push_back("gp: supports single-output regression only");
                continue;
            }
            CalibrationReport r = evaluate_gp(config, p, grid);
            r.config_digest = config.digest;
            reports.push_back(std::move(r));
            passes.push_back(0);
            const GpModel model = fit_gp_baseline(config, p);
            const GpTiming t = time_gp(model, bench_std, config.bench.repetitions);
            latencies.push_back({{"method", "gp"},
                                 {"median_seconds_per_sample", t.median},
                                 {"p95_seconds_per_sample", t.p95}});
            continue;
        }

        std::vector<Model> models;
        switch (method.kind) {
            case MethodSpec::Kind::rdeepsense:
            case MethodSpec::Kind::rdeepsense_mc: models = {main_model}; break;
            case MethodSpec::Kind::mcdrop: models = {mcdrop_model}; break;
            case MethodSpec::Kind::ssp:
                models.assign(ensemble.begin(), ensemble.begin() + method.k);
                break;
            case MethodSpec::Kind::gp: break;
        }
        CalibrationReport r = evaluate_network_method(method, models, p, grid, config.seed);
        r.config_digest = config.digest;
        reports.push_back(std::move(r));

        const BenchReport bench =
            bench_inference(method, models, bench_std, config.bench.repetitions,
                            config.bench.warmup, config.seed);
        passes.push_back(bench.passes_per_prediction);
        latencies.push_back({{"method", method.id()},
                             {"median_seconds_per_sample", bench.median_seconds_per_sample},
                             {"p95_seconds_per_sample", bench.p95_seconds_per_sample}});
    }

    json payload;
    json rows = json::array();
    for (std::size_t i = 0; i < reports.size(); ++i) {
        json row = report_payload(reports[i]);
        row["passes_per_prediction"] = passes[i];
        rows.push_back(std::move(row));
    }
    payload["rows"] = rows;
    payload["skipped"] = skipped;

    json meta;
    meta["latencies"] = latencies;

    std::vector<OutputFile> files;
    files.push_back({"compare.json", make_report(config, payload, meta)});
    files.push_back({"compare.csv", metrics_csv(reports, passes)});

    // models saved so individual methods can be re-evaluated without retraining
    if (needs_main) {
        files.push_back({"checkpoint_main.json",
                         checkpoint_to_string({main_model.spec, main_model.params,
                                               config.digest}) + "\n"});
    }
    if (needs_mcdrop) {
        files.push_back({"checkpoint_mcdrop.json",
                         checkpoint_to_string({mcdrop_model.spec, mcdrop_model.params,
                                               config.digest}) + "\n"});
    }
    if (!ensemble.empty()) {
        json manifest;
        manifest["format_version"] = 1;
        json members = json::array();
        for (std::size_t i = 0; i < ensemble.size(); ++i) {
            const std::string rel = "ensemble/member_" + std::to_string(i) + ".json";
            members.push_back(rel);
            files.push_back({rel, checkpoint_to_string({ensemble[i].spec, ensemble[i].params,
                                                        config.digest}) + "\n"});
        }
        manifest["ensemble"] = members;
        files.push_back({"ensemble/manifest.json", manifest.dump(2) + "\n"});
    }
    write_outputs(config, files);

    if (!config.quiet) {
        std::cout << "\nmethod";
        if (config.task == Task::regression) {
            std::cout << "  mae  nll  deviation_area  passes  median_s/sample\n";
        } else {
            std::cout << "  accuracy  macro_f1  nll  mefp  passes  median_s/sample\n";
        }
        for (std::size_t i = 0; i < reports.size(); ++i) {
            const CalibrationReport& r = reports[i];
            std::cout << r.method_id;
            if (config.task == Task::regression) {
                std::cout << "  " << r.mae << "  " << r.nll << "  " << r.deviation_area;
            } else {
                std::cout << "  " << r.accuracy << "  " << r.macro_f1 << "  " << r.nll << "  "
                          << (r.mefp_defined ? std::to_string(r.mefp) : "undefined");
            }
            std::cout << "  " << passes[i] << "  "
                      << latencies[i].at("median_seconds_per_sample").get<double>() << "\n";
        }
    }
}

void cmd_bench(const RunConfig& config, const std::string& checkpoint_path,
               const std::vector<std::string>& method_ids) {
    const std::vector<std::string>& ids = method_ids.empty() ? config.methods : method_ids;
    if (ids.empty()) {
        throw Error(ErrorCategory::config, "bench needs at least one method");
    }
    const Pipeline p = build_pipeline(config);
    const std::vector<Model> models = load_checkpoint_models(checkpoint_path);

    const std::size_t bench_rows = std::min(config.bench.sample_cap, p.test_std.size());
    std::vector<std::size_t> bench_idx(bench_rows);
    for (std::size_t i = 0; i < bench_rows; ++i) bench_idx[i] = i;
    const Dataset bench_std = take_rows(p.test_std, bench_idx, "bench");

    json payload_methods = json::array();
    json latencies = json::array();
    std::string csv = "method,metric,value\n";
    for (const std::string& id : ids) {
        const MethodSpec method = MethodSpec::parse(id);
        if (method.kind == MethodSpec::Kind::gp) {
            throw Error(ErrorCategory::config, "bench covers network methods; gp has no checkpoint");
        }
        std::vector<Model> used = models;
        if (method.kind == MethodSpec::Kind::ssp) {
            if (models.size() < method.k) {
                throw Error(ErrorCategory::validation,
                            "checkpoint holds " + std::to_string(models.size()) +
                                " models but " + id + " needs " + std::to_string(method.k));
            }
            used.assign(models.begin(), models.begin() + method.k);
        } else {
            used.assign(models.begin(), models.begin() + 1);
        }
        const BenchReport r = bench_inference(method, used, bench_std, config.bench.repetitions,
                                              config.bench.warmup, config.seed);
        payload_methods.push_back({{"method", r.method_id},
                                   {"passes_per_prediction", r.passes_per_prediction},
                                   {"repetitions", r.repetitions},
                                   {"warmup_runs", r.warmup_runs},
                                   {"sample_count", r.sample_count}});
        latencies.push_back({{"method", r.method_id},
                             {"median_seconds_per_sample", r.median_seconds_per_sample},
                             {"p95_seconds_per_sample", r.p95_seconds_per_sample}});
        csv += r.method_id + ",passes_per_prediction," +
               std::to_string(r.passes_per_prediction) + "\n";
        if (!config.quiet) {
            std::cout << r.method_id << ": median " << r.median_seconds_per_sample
                      << " s/sample, p95 " << r.p95_seconds_per_sample << " s/sample, "
                      << r.passes_per_prediction << " passes/prediction\n";
        }
    }

    json payload;
    payload["methods"] = payload_methods;
    json meta;
    meta["latencies"] = latencies;

    std::vector<OutputFile> files;
    files.push_back({"bench.json", make_report(config, payload, meta)});
    files.push_back({"bench.csv", csv});
    write_outputs(config, files);
}

void cmd_sweep_alpha(const RunConfig& config) {
    const Pipeline p = build_pipeline(config);
    const NetworkSpec spec = build_spec(config, p, config.head, true);
    const ZGrid grid = ZGrid::default_grid();

    const SweepResult sweep =
        sweep_alpha(spec, config.loss, p.train_std, p.val_std, config.alphas, config.train_cfg,
                    grid);

    json payload;
    json rows = json::array();
    json walls = json::array();
    bool any_success = false;
    for (const AlphaResult& res : sweep.results) {
        json row;
        row["alpha"] = res.alpha;
        row["failed"] = res.failed;
        if (res.failed) {
            row["error"] = res.error;
        } else {
            any_success = true;
            const CalibrationReport& r = res.val_report;
            if (config.task == Task::regression) {
                row["deviation_area"] = r.deviation_area;
                row["nll"] = r.nll;
                row["nll_no_const"] = r.nll_no_const;
                row["mae"] = r.mae;
            } else {
                row["accuracy"] = r.accuracy;
                row["macro_f1"] = r.macro_f1;
                row["nll"] = r.nll;
            }
            walls.push_back({{"alpha", res.alpha},
                             {"wall_seconds", res.train_report.wall_seconds}});
        }
        rows.push_back(std::move(row));
    }
    if (!any_success) {
        throw Error(ErrorCategory::numeric, "every alpha in the sweep failed to train");
    }
    payload["alphas"] = rows;
    payload["best_alpha"] = sweep.results[sweep.best_index].alpha;
    payload["units"] = "standardized";

    std::string csv = "alpha,metric,value\n";
    for (const AlphaResult& res : sweep.results) {
        if (res.failed) {
            csv += fmt17(res.alpha) + ",error,1\n";
            continue;
        }
        const CalibrationReport& r = res.val_report;
        if (config.task == Task::regression) {
            csv += fmt17(res.alpha) + ",deviation_area," + fmt17(r.deviation_area) + "\n";
            csv += fmt17(res.alpha) + ",nll," + fmt17(r.nll) + "\n";
            csv += fmt17(res.alpha) + ",mae," + fmt17(r.mae) + "\n";
        } else {
            csv += fmt17(res.alpha) + ",accuracy," + fmt17(r.accuracy) + "\n";
            csv += fmt17(res.alpha) + ",nll," + fmt17(r.nll) + "\n";
        }
    }

    json meta;
    meta["train_wall_seconds"] = walls;

    const AlphaResult& best = sweep.results[sweep.best_index];
    Checkpoint best_ckpt{spec, best.params, config.digest};

    std::vector<OutputFile> files;
    files.push_back({"sweep.json", make_report(config, payload, meta)});
    files.push_back({"sweep.csv", csv});
    files.push_back({"checkpoint_best_alpha.json", checkpoint_to_string(best_ckpt) + "\n"});
    write_outputs(config, files);

    if (!config.quiet) {
        std::cout << "best alpha: " << best.alpha << "\n";
    }
}

}  // namespace calibnet
