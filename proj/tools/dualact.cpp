#include "verify.hpp"

#include <CLI11.hpp>

int main(int argc, char** argv)
{
    CLI::App app{"Dual variational solvers for algebraic and space-time problems"};
    app.require_subcommand(1, 1);
    std::string config;
    std::string out;
    for (const char* name : {"algebraic", "ibvp", "disloc", "fdmpoint", "verify"}) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config, "INI configuration file")->required();
        sub->add_option("--out", out, "output directory (overrides [run] out)");
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : dualact::app::exit_config;
    }
    std::string sub = app.get_subcommands().front()->get_name();
    std::optional<std::filesystem::path> dir;
    if (!out.empty())
        dir = out;
    return dualact::app::run_command(sub, config, dir, std::cout, std::cerr);
}
