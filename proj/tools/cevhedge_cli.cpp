#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"

#include "cevhedge/errors.hpp"
#include "cevhedge/experiments.hpp"

using namespace cevhedge;

namespace {

struct Overrides {
    std::string config;
    std::optional<std::string> out;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
    std::optional<std::string> strategy;
    std::optional<std::string> eps_list;
    std::optional<int> k;
    std::optional<std::string> fields;
};

void add_common(CLI::App* sub, Overrides& o) {
    sub->add_option("--config", o.config, "key = value configuration file")->required();
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--seed", o.seed, "random seed");
    sub->add_option("--threads", o.threads, "worker threads (0 = all cores)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Optimal hedging under CEV dynamics with quadratic illiquidity costs"};
    app.require_subcommand(1);
    Overrides o;

    auto* price = app.add_subcommand("price", "tabulate option price and delta over the grid");
    auto* solve = app.add_subcommand("solve", "solve the HJB coefficient system");
    auto* simulate = app.add_subcommand("simulate", "Monte-Carlo cost of a hedging strategy");
    auto* sweep = app.add_subcommand("sweep", "eps sweep of the benchmark strategy");
    auto* validate = app.add_subcommand("validate", "run the invariant suite at reduced sizes");
    for (auto* sub : {price, solve, simulate, sweep, validate}) add_common(sub, o);
    simulate->add_option("--strategy", o.strategy, "optimal | naive | zero | delta");
    simulate->add_option("--fields", o.fields, "fields.csv from a previous solve");
    sweep->add_option("--eps-list", o.eps_list, "comma-separated eps values");
    sweep->add_option("--k", o.k, "exponent k of the psi / eps^{k/2} ratio");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    ExperimentConfig cfg;
    try {
        cfg = load_config(o.config);
        if (o.out) cfg.out_dir = *o.out;
        if (o.seed) cfg.seed = *o.seed;
        if (o.threads) cfg.threads = *o.threads;
        if (o.strategy) cfg.strategy = *o.strategy;
        if (o.eps_list) cfg.eps_list = parse_float_list(*o.eps_list);
        if (o.k) cfg.k = *o.k;
        if (o.fields) cfg.fields = *o.fields;
    } catch (const InvalidInput& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    }

    int (*command)(const ExperimentConfig&, std::ostream&) = nullptr;
    if (price->parsed()) command = cmd_price;
    if (solve->parsed()) command = cmd_solve;
    if (simulate->parsed()) command = cmd_simulate;
    if (sweep->parsed()) command = cmd_sweep;
    if (validate->parsed()) command = cmd_validate;
    return run_guarded(command, cfg, std::cerr);
}
