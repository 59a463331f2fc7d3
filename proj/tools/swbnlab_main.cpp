#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "swbn/experiment.hpp"

int main(int argc, char** argv) {
    CLI::App app{"swbnlab: whitening-normalization experiment driver"};
    app.require_subcommand(1);

    struct Args {
        std::string config;
        std::string out;
        bool verbose = false;
    };

    std::map<std::string, CLI::App*> subs;
    for (const char* name : {"train", "whiten-demo", "heatmap", "bench"}) {
        subs[name] = app.add_subcommand(name);
    }
    Args args;
    for (auto& [name, sub] : subs) {
        sub->add_option("--config", args.config, "experiment config file")->required();
        sub->add_option("--out", args.out, "output directory (overrides output.out_dir)");
        sub->add_flag("--verbose", args.verbose, "progress output");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : swbn::kExitConfigError;
    }

    std::string sub_name = app.get_subcommands().front()->get_name();
    swbn::ExperimentConfig cfg;
    try {
        cfg = swbn::ExperimentConfig::parse_file(args.config);
    } catch (const swbn::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return swbn::kExitConfigError;
    }
    if (!args.out.empty()) cfg.set("output", "out_dir", args.out);
    return swbn::run_subcommand(sub_name, cfg, args.verbose);
}
