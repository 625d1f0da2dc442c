#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "carleman_lab/carleman.hpp"
#include "carleman_lab/continuation.hpp"
#include "carleman_lab/grid.hpp"

namespace carleman_lab {

enum class ExperimentKind { simulate, carleman_verify, uc_demo, geometry_check };

const char* kind_name(ExperimentKind k);
ExperimentKind parse_kind(const std::string& name);

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::simulate;
    bool kind_set = false;  // kind given explicitly in the config
    std::uint64_t seed = 1;
    std::filesystem::path out = "out";
    std::vector<int> resolution;  // empty: per-kind default
    bool plots = true;

    // simulate, carleman-verify
    DomainSpec domain = DomainSpec::unit(1);
    std::string coefficients = "logistic-growth";
    std::vector<std::pair<std::string, std::string>> coefficient_tables;
    std::string initial = "default";  // default | zero

    // carleman-verify
    std::string weight = "ramp";  // ramp | bowl
    double weight_slope = 0.75;
    double weight_curvature = 0.25;
    double weight_anchor = 1.0;
    double beta_w = 0.25;
    std::array<double, 3> center{0.5, 0.5, 0.5};
    std::vector<double> carleman_s{4, 8, 16, 32, 64};
    std::vector<double> carleman_lambda{1, 2, 4};
    int bump_count = 20;
    BumpOptions bumps;
    double divergence_factor = 1.5;

    // geometry-check, uc-demo
    std::string geometry = "unit-interval";
    int geometry_dim = 1;
    double geometry_lambda = 1.0;
    double geometry_eps = -1.0;  // negative: preset value
    int geometry_N = 0;          // 0: minimal count, doubled
    int samples = 10000;

    // uc-demo
    std::string uc_coefficients = "separable-birth";
    double noise = 0.0;
    std::vector<double> alpha_list{1e-6};
    std::vector<double> uc_s{8};
    std::vector<double> decay_s{0, 2, 5, 10, 20};
    double penalty = 1e6;
    Preconditioner preconditioner = Preconditioner::ldlt;
    double error_tolerance = -1.0;  // negative: 0.1 without noise, 0.3 with noise

    std::vector<int> effective_resolution() const;
    void validate() const;
};

// INI file with sections [experiment], [domain], [coefficients], [initial],
// [carleman], [geometry], [uc]. Unknown sections or keys are errors.
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config(const std::string& ini_text);

// Individual overrides, as the command line applies them.
void set_config_value(ExperimentConfig& cfg, const std::string& section, const std::string& key,
                      const std::string& value);

std::vector<double> parse_double_list(const std::string& text);
std::vector<int> parse_int_list(const std::string& text);

// Resolved config as nested JSON text (stable key order).
std::string config_json(const ExperimentConfig& cfg);

struct RunResult {
    int exit_code = 0;  // 0 success, 1 verdict failure
    std::string verdict;
    std::vector<std::string> files;
};

// Writes the artifact directory. Throws InputError / IoError for
// configuration problems and NumericalError when the numerics fail.
RunResult run_experiment(const ExperimentConfig& cfg);

// run_experiment with errors mapped to exit codes (2 config or IO, 1 numerics).
int run_and_report(const ExperimentConfig& cfg, std::ostream& log);

}  // namespace carleman_lab
