#include <iostream>

#include "CLI11.hpp"
#include "partlab/error.hpp"
#include "partlab/experiments.hpp"

using namespace partlab;

int main(int argc, char** argv) {
    CLI::App app{"Particle-system experiments on cellular automata"};
    app.require_subcommand(1);
    app.set_version_flag("--version", tool_version);

    std::string config_path, out_dir = "out";
    std::vector<std::string> overrides;
    long seed = -1;
    int threads = 1;

    const char* kinds[] = {"simulate", "render", "check-system", "defects", "entry-time",
                           "density", "convergence", "qualitative-monitor"};
    for (const char* kind : kinds) {
        auto* sub = app.add_subcommand(kind, std::string("run a ") + kind + " experiment");
        sub->add_option("--config", config_path, "key=value config file");
        sub->add_option("--seed", seed, "master seed (overrides the config)");
        sub->add_option("--out", out_dir, "output directory");
        sub->add_option("--threads", threads, "worker threads")->check(CLI::Range(1, 256));
        sub->add_option("--override", overrides, "key=value, may be repeated");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }
    const std::string kind = app.get_subcommands().front()->get_name();

    try {
        ExperimentConfig config = config_path.empty() ? ExperimentConfig{} : ExperimentConfig::load(config_path);
        for (const auto& o : overrides) config.override_with(o);
        if (seed >= 0) config.set("seed", std::to_string(seed));
        if (config.has("kind") && config.get("kind") != kind)
            throw ConfigError("config is for '" + config.get("kind") + "', not '" + kind + "'");
        config.set("kind", kind);
        auto result = run_experiment(config, out_dir, threads);
        std::cout << result.summary << '\n';
        for (const auto& f : result.manifest.outputs) std::cout << "wrote " << out_dir << '/' << f << '\n';
        return result.exit_code;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const PreconditionError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const FeasibilityError& e) {
        std::cerr << "infeasible: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
