#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "calibnet/data.hpp"
#include "calibnet/losses.hpp"
#include "calibnet/network.hpp"
#include "calibnet/training.hpp"

namespace calibnet {

struct DataConfig {
    enum class Source { heteroscedastic, blobs, csv };
    Source source = Source::heteroscedastic;
    std::size_t n = 10000;        // generators
    std::size_t classes = 2;      // blobs
    double separation = 6.0;      // blobs
    std::string path;             // csv
    std::vector<std::string> feature_columns;
    std::vector<std::string> target_columns;
};

struct GpConfig {
    std::size_t max_train = 2000;  // exact-fit subsample cap
    double signal_variance = 0.0;  // 0 means derive from the training data
    double length_scale = 0.0;
    double noise_variance = 0.0;
};

struct BenchConfig {
    std::size_t repetitions = 20;
    std::size_t warmup = 2;
    std::size_t sample_cap = 256;  // rows timed per repetition
};

// Parsed, validated run configuration. Unknown keys in the config document
// are rejected up front, before any compute or output.
struct RunConfig {
    Task task = Task::regression;
    std::uint64_t seed = 0;
    std::string out_dir = "out";
    bool quiet = false;

    DataConfig data;
    SplitFractions split;

    std::vector<std::size_t> hidden{64, 64};
    Activation activation = Activation::relu;
    HeadKind head = HeadKind::gaussian;
    double retain_hidden = 0.9;
    double retain_input = 1.0;
    double variance_floor = 1e-6;

    LossSpec loss;
    TrainConfig train_cfg;

    std::vector<std::string> methods;
    std::vector<double> alphas{0.0, 0.2, 0.4, 0.6, 0.8, 0.9};

    GpConfig gp;
    BenchConfig bench;

    std::string digest;  // 16-hex digest of the canonical config document
};

RunConfig load_run_config(const std::string& path);
void apply_overrides(RunConfig& config, std::optional<std::uint64_t> seed,
                     const std::optional<std::string>& out_dir, bool quiet);

// 64-bit FNV-1a over the bytes, as 16 lowercase hex digits.
std::string fnv1a_digest(const std::string& bytes);

// Subcommand bodies; each throws calibnet::Error on failure and writes its
// reports under config.out_dir on success.
void cmd_gen(const RunConfig& config);
void cmd_train(const RunConfig& config);
void cmd_eval(const RunConfig& config, const std::string& checkpoint_path,
              const std::string& method_id);
void cmd_compare(const RunConfig& config);
void cmd_bench(const RunConfig& config, const std::string& checkpoint_path,
               const std::vector<std::string>& method_ids);
void cmd_sweep_alpha(const RunConfig& config);

}  // namespace calibnet
