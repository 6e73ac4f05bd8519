// Command-line front end: one subcommand per operation, flags mirror config keys.
#include "staircase/app.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <string>

int main(int argc, char** argv) {
    using namespace staircase;
    CLI::App cli{"staircase rank-one constructions: correlations, identities and spectral diagnostics"};
    cli.require_subcommand(1);

    std::string config_file;
    std::map<std::string, std::string> values;
    std::map<std::string, CLI::Option*> options;

    for (const std::string& name : app::command_names()) {
        CLI::App* sub = cli.add_subcommand(name);
        sub->add_option("--config", config_file, "key=value configuration file");
        for (const ConfigKey& k : config_keys()) {
            std::string flag = "--" + k.name;
            CLI::Option* opt = sub->add_option(flag, values[name + "/" + k.name], k.help);
            options[name + "/" + k.name] = opt;
        }
    }

    CLI11_PARSE(cli, argc, argv);

    const std::string cmd = cli.get_subcommands().front()->get_name();
    try {
        std::map<std::string, std::string> file_settings;
        if (!config_file.empty()) file_settings = read_config_file(config_file);
        std::map<std::string, std::string> flags;
        for (const ConfigKey& k : config_keys()) {
            const std::string id = cmd + "/" + k.name;
            if (options[id]->count() > 0) flags[k.name] = values[id];
        }
        RunConfig cfg = resolve_config(file_settings, flags);
        return app::run_command(cmd, cfg, std::cout, std::cerr);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return app::kError;
    }
}
