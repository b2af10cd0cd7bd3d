#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "calibnet/cli.hpp"
#include "calibnet/error.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    bool quiet = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "run configuration document")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--seed", [&args](const CLI::results_t& res) {
        args.seed = std::stoull(res[0]);
        return true;
    }, "seed override");
    cmd->add_option("--out", [&args](const CLI::results_t& res) {
        args.out_dir = res[0];
        return true;
    }, "output directory override");
    cmd->add_flag("--quiet", args.quiet, "suppress progress output");
}

calibnet::RunConfig make_config(const CommonArgs& args) {
    calibnet::RunConfig config = calibnet::load_run_config(args.config_path);
    calibnet::apply_overrides(config, args.seed, args.out_dir, args.quiet);
    return config;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"feedforward networks with calibrated uncertainty from a single scaled pass"};
    app.require_subcommand(1);

    CommonArgs gen_args, train_args, eval_args, compare_args, bench_args, sweep_args;
    std::string eval_checkpoint, eval_method, bench_checkpoint;
    std::vector<std::string> bench_methods;

    CLI::App* gen = app.add_subcommand("gen", "generate a synthetic dataset");
    add_common(gen, gen_args);

    CLI::App* train = app.add_subcommand("train", "train a model and save its checkpoint");
    add_common(train, train_args);

    CLI::App* eval = app.add_subcommand("eval", "evaluate one method against a checkpoint");
    add_common(eval, eval_args);
    eval->add_option("--checkpoint", eval_checkpoint, "model checkpoint or ensemble manifest")
        ->required()
        ->check(CLI::ExistingFile);
    eval->add_option("--method", eval_method, "method id, e.g. rdeepsense or mcdrop-10")
        ->required();

    CLI::App* compare = app.add_subcommand("compare", "train and score every configured method");
    add_common(compare, compare_args);

    CLI::App* bench = app.add_subcommand("bench", "measure per-sample inference latency");
    add_common(bench, bench_args);
    bench->add_option("--checkpoint", bench_checkpoint, "model checkpoint or ensemble manifest")
        ->required()
        ->check(CLI::ExistingFile);
    bench->add_option("--methods", bench_methods, "method ids (default: config list)");

    CLI::App* sweep = app.add_subcommand("sweep-alpha", "train across the alpha grid");
    add_common(sweep, sweep_args);

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            calibnet::cmd_gen(make_config(gen_args));
        } else if (train->parsed()) {
            calibnet::cmd_train(make_config(train_args));
        } else if (eval->parsed()) {
            calibnet::cmd_eval(make_config(eval_args), eval_checkpoint, eval_method);
        } else if (compare->parsed()) {
            calibnet::cmd_compare(make_config(compare_args));
        } else if (bench->parsed()) {
            calibnet::cmd_bench(make_config(bench_args), bench_checkpoint, bench_methods);
        } else if (sweep->parsed()) {
            calibnet::cmd_sweep_alpha(make_config(sweep_args));
        }
    } catch (const calibnet::Error& e) {
        std::cerr << "error: category=" << e.category_name() << " " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: category=internal " << e.what() << "\n";
        return 1;
    }
    return 0;
}
