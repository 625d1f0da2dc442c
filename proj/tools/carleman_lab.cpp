#include <CLI11.hpp>
#include <iostream>
#include <optional>
#include <string>

#include "carleman_lab/errors.hpp"
#include "carleman_lab/experiment.hpp"

using namespace carleman_lab;

namespace {

struct Flags {
    std::string config;
    std::optional<std::string> out, seed, resolution, s_list, lambda_list, geometry, noise, alpha_list, coefficients;
    bool no_plots = false;
};

void add_flags(CLI::App* sub, Flags& f) {
    sub->add_option("--config", f.config, "INI config file");
    sub->add_option("--out", f.out, "output directory");
    sub->add_option("--seed", f.seed, "random seed");
    sub->add_option("--resolution", f.resolution, "nodes per axis, N or N,N,N,N");
    sub->add_option("--s-list", f.s_list, "comma-separated s values");
    sub->add_option("--lambda-list", f.lambda_list, "comma-separated lambda values");
    sub->add_option("--geometry", f.geometry, "geometry preset");
    sub->add_option("--noise", f.noise, "relative Cauchy data noise");
    sub->add_option("--alpha-list", f.alpha_list, "comma-separated regularization weights");
    sub->add_option("--coefficients", f.coefficients, "coefficient preset");
    sub->add_flag("--no-plots", f.no_plots, "skip SVG output");
}

ExperimentConfig resolve(ExperimentKind kind, const Flags& f) {
    ExperimentConfig c = f.config.empty() ? ExperimentConfig{} : load_config(f.config);
    if (c.kind_set && c.kind != kind)
        throw InputError(std::string("config is for '") + kind_name(c.kind) + "', not '" + kind_name(kind) + "'");
    c.kind = kind;
    const bool uc = kind == ExperimentKind::uc_demo || kind == ExperimentKind::geometry_check;
    if (f.out) set_config_value(c, "experiment", "out", *f.out);
    if (f.seed) set_config_value(c, "experiment", "seed", *f.seed);
    if (f.resolution) set_config_value(c, "experiment", "resolution", *f.resolution);
    if (f.no_plots) c.plots = false;
    if (f.s_list) set_config_value(c, uc ? "uc" : "carleman", "s_list", *f.s_list);
    if (f.lambda_list) {
        if (uc) {
            if (parse_double_list(*f.lambda_list).size() != 1)
                throw InputError("the geometry takes a single lambda");
            set_config_value(c, "geometry", "lambda", *f.lambda_list);
        } else {
            set_config_value(c, "carleman", "lambda_list", *f.lambda_list);
        }
    }
    if (f.geometry) set_config_value(c, "geometry", "preset", *f.geometry);
    if (f.noise) set_config_value(c, "uc", "noise", *f.noise);
    if (f.alpha_list) set_config_value(c, "uc", "alpha_list", *f.alpha_list);
    if (f.coefficients) set_config_value(c, kind == ExperimentKind::uc_demo ? "uc" : "coefficients",
                                         kind == ExperimentKind::uc_demo ? "coefficients" : "preset", *f.coefficients);
    return c;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"carleman-lab: structured population PDE, Carleman estimate and unique continuation experiments"};
    app.require_subcommand(1);
    Flags flags[4];
    const ExperimentKind kinds[4] = {ExperimentKind::simulate, ExperimentKind::carleman_verify, ExperimentKind::uc_demo,
                                     ExperimentKind::geometry_check};
    const char* help[4] = {"run the forward solver", "sweep the Carleman inequality over random bumps",
                           "reconstruct a forward solution from lateral Cauchy data",
                           "check the level sets and inclusions of a continuation geometry"};
    CLI::App* subs[4];
    for (int k = 0; k < 4; ++k) {
        subs[k] = app.add_subcommand(kind_name(kinds[k]), help[k]);
        add_flags(subs[k], flags[k]);
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }
    for (int k = 0; k < 4; ++k) {
        if (!subs[k]->parsed()) continue;
        ExperimentConfig cfg;
        try {
            cfg = resolve(kinds[k], flags[k]);
        } catch (const InputError& e) {
            std::cerr << "config error: " << e.what() << "\n";
            return 2;
        } catch (const IoError& e) {
            std::cerr << "io error: " << e.what() << "\n";
            return 2;
        }
        return run_and_report(cfg, std::cerr);
    }
    return 2;
}
