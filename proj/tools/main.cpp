#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "app.hpp"

int main(int argc, char** argv) {
    namespace app = evomarket::app;
    app::RunConfig rc;
    std::vector<std::string> sets;
    std::uint64_t seed = 0;
    std::string config, out, product;

    CLI::App cli{"Evolutionary market dynamics: life cycles, diffusion fits and price noise"};
    cli.add_option("command", rc.command, "simulate | fit | synth | dist | replicate")->required();
    cli.add_option("-c,--config", config, "INI configuration file");
    auto* seed_opt = cli.add_option("-s,--seed", seed, "random seed, overrides [run] seed");
    cli.add_option("-o,--out", out, "output directory, overrides [run] out");
    cli.add_flag("--plot", rc.plot, "also write SVG charts");
    cli.add_option("-p,--product", product, "preset product (colour_tv, fax, bw_tv, clothes_dryer, air_conditioner, vcr, vhs)");
    cli.add_option("--set", sets, "override a config value, section.key=value (repeatable)");

    try {
        cli.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return cli.exit(e);
    } catch (const CLI::ParseError& e) {
        cli.exit(e);
        return app::usage;
    }

    if (!config.empty()) rc.config_path = config;
    if (*seed_opt) rc.seed = seed;
    if (!out.empty()) rc.out_dir = out;
    if (!product.empty()) rc.product = product;
    for (const auto& s : sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) {
            std::cerr << "usage error: --set expects section.key=value, got '" << s << "'\n";
            return app::usage;
        }
        rc.overrides.emplace_back(s.substr(0, eq), s.substr(eq + 1));
    }
    return app::run(rc, std::cout, std::cerr);
}
