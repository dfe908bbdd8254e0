#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ghlab/cli.hpp"

namespace {

struct Flags {
    std::string config;
    std::string out;
    std::vector<std::string> sets;
    int precision = -1;
};

void add_flags(CLI::App* sub, Flags& f) {
    sub->add_option("--config", f.config, "JSON experiment config")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", f.out, "output directory (overrides outputs.dir)");
    sub->add_option("--set", f.sets, "dotted-path override key=value (repeatable)");
    sub->add_option("--precision", f.precision, "extended-precision digits")->check(CLI::NonNegativeNumber);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spectral laboratory for periodic evolution operators D_t + c(t) P"};
    app.require_subcommand(1);
    Flags flags;
    for (const auto& name : ghlab::cli::kCommands) add_flags(app.add_subcommand(name, "run " + name), flags);
    add_flags(app.add_subcommand("run", "run the command named in the config"), flags);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : ghlab::cli::kUsage;
    }

    std::string command = app.get_subcommands().front()->get_name();
    try {
        const auto cfg = ghlab::cli::load_config(flags.config, flags.sets, flags.out, flags.precision);
        if (command == "run") {
            if (cfg.command.empty()) throw ghlab::cli::ConfigError("/command", "missing key (needed by run)");
            command = cfg.command;
        }
        const auto result = ghlab::cli::run(command, cfg);
        const auto& report = result.report;
        if (report.contains("error")) {
            std::cerr << "error: " << report["error"]["message"].get<std::string>() << '\n';
        } else {
            std::cout << command << ": " << report["status"].get<std::string>() << " (" << report["config_hash"].get<std::string>().substr(0, 12) << ")\n";
        }
        for (const auto& p : result.artifacts) std::cout << "  " << p.string() << '\n';
        return result.exit_code;
    } catch (const ghlab::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return ghlab::cli::exit_code_for(e.kind());
    }
}
