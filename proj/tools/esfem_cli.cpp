// Command line front end: `esfem run --config <file> [--key value ...]`.

#include <CLI11.hpp>

#include <cstdio>
#include <map>

#include "esfem/driver.hpp"

int main(int argc, char** argv)
{
    CLI::App app{"Evolving surface finite elements with DeTurck redistribution"};
    app.require_subcommand(1);

    CLI::App* run = app.add_subcommand("run", "run one experiment");
    std::string config_path;
    run->add_option("--config", config_path, "flat key=value configuration file");
    // one override flag per configuration key
    std::map<std::string, std::string> flags;
    for (const auto& key : esfem::config_keys()) run->add_option("--" + key, flags[key], "override '" + key + "'");

    CLI::App* list = app.add_subcommand("examples", "list example ids and their defaults");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 3;
    }

    if (list->parsed()) {
        for (const auto& id : esfem::example_ids()) {
            std::printf("[%s]\n%s\n", id.c_str(), esfem::format_config(esfem::example_defaults(id)).c_str());
        }
        return 0;
    }

    std::vector<esfem::Setting> overrides;
    for (const auto& key : esfem::config_keys())
        if (run->count("--" + key) > 0) overrides.emplace_back(key, flags[key]);

    esfem::RunConfig config;
    try {
        config = config_path.empty() ? esfem::parse_config("", overrides) : esfem::parse_config_file(config_path, overrides);
    } catch (const esfem::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 3;
    }

    try {
        std::string message;
        const int status = esfem::run(config, &message);
        std::fprintf(status == 0 ? stdout : stderr, "%s\n", message.c_str());
        return status;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
