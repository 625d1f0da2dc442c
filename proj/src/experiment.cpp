#include "carleman_lab/experiment.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <boost/version.hpp>
#include <chrono>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <ostream>
#include <sstream>

#include "carleman_lab/errors.hpp"
#include "carleman_lab/forward.hpp"
#include "carleman_lab/geometry.hpp"
#include "carleman_lab/parallel.hpp"
#include "carleman_lab/report.hpp"

namespace carleman_lab {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) out.push_back(trim(cur));
    return out;
}

double to_double(const std::string& s, const std::string& what) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &pos);
    } catch (const std::exception&) {
        throw InputError("invalid number '" + s + "' for " + what);
    }
    if (pos != s.size() || !std::isfinite(v)) throw InputError("invalid number '" + s + "' for " + what);
    return v;
}

long long to_int(const std::string& s, const std::string& what) {
    std::size_t pos = 0;
    long long v = 0;
    try {
        v = std::stoll(s, &pos);
    } catch (const std::exception&) {
        throw InputError("invalid integer '" + s + "' for " + what);
    }
    if (pos != s.size()) throw InputError("invalid integer '" + s + "' for " + what);
    return v;
}

bool to_bool(const std::string& s, const std::string& what) {
    if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "0" || s == "no" || s == "off") return false;
    throw InputError("invalid boolean '" + s + "' for " + what);
}

Interval to_interval(const std::string& s, const std::string& what) {
    auto v = parse_double_list(s);
    if (v.size() != 2) throw InputError(what + " needs two values lo,hi");
    return {v[0], v[1]};
}

json list_json(const std::vector<double>& v) { return json(v); }

}  // namespace

const char* kind_name(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::simulate: return "simulate";
        case ExperimentKind::carleman_verify: return "carleman-verify";
        case ExperimentKind::uc_demo: return "uc-demo";
        case ExperimentKind::geometry_check: return "geometry-check";
    }
    return "?";
}

ExperimentKind parse_kind(const std::string& name) {
    for (auto k : {ExperimentKind::simulate, ExperimentKind::carleman_verify, ExperimentKind::uc_demo,
                   ExperimentKind::geometry_check})
        if (name == kind_name(k)) return k;
    throw InputError("unknown experiment kind '" + name + "'");
}

std::vector<double> parse_double_list(const std::string& text) {
    std::vector<double> out;
    for (const auto& p : split(text, ',')) {
        if (p.empty()) throw InputError("empty entry in list '" + text + "'");
        out.push_back(to_double(p, "list '" + text + "'"));
    }
    if (out.empty()) throw InputError("empty list");
    return out;
}

std::vector<int> parse_int_list(const std::string& text) {
    std::vector<int> out;
    for (const auto& p : split(text, ',')) {
        if (p.empty()) throw InputError("empty entry in list '" + text + "'");
        out.push_back(static_cast<int>(to_int(p, "list '" + text + "'")));
    }
    if (out.empty()) throw InputError("empty list");
    return out;
}

std::vector<int> ExperimentConfig::effective_resolution() const {
    if (!resolution.empty()) return resolution;
    switch (kind) {
        case ExperimentKind::carleman_verify: return {33};
        default: return {17};
    }
}

void ExperimentConfig::validate() const {
    domain.validate();
    for (int r : effective_resolution())
        if (r < 3) throw InputError("node count < 3 in resolution");
    if (kind == ExperimentKind::simulate || kind == ExperimentKind::carleman_verify) {
        auto names = coefficient_preset_names();
        if (std::find(names.begin(), names.end(), coefficients) == names.end())
            throw InputError("unknown coefficient preset '" + coefficients + "'");
    }
    if (kind == ExperimentKind::uc_demo) {
        auto names = coefficient_preset_names();
        if (std::find(names.begin(), names.end(), uc_coefficients) == names.end())
            throw InputError("unknown coefficient preset '" + uc_coefficients + "'");
    }
    if (initial != "default" && initial != "zero") throw InputError("unknown initial data '" + initial + "'");
    if (weight != "ramp" && weight != "bowl") throw InputError("unknown weight '" + weight + "'");
    if (kind == ExperimentKind::uc_demo || kind == ExperimentKind::geometry_check) {
        auto g = geometry_preset_names();
        if (std::find(g.begin(), g.end(), geometry) == g.end())
            throw InputError("unknown geometry preset '" + geometry + "'");
        if (!(geometry_lambda > 0.0)) throw InputError("geometry lambda must be positive");
        if (geometry_N < 0) throw InputError("N must be positive");
    }
    if (bump_count < 1) throw InputError("bump count must be positive");
    if (samples < 0) throw InputError("sample count must be non-negative");
    if (!(noise >= 0.0)) throw InputError("noise must be non-negative");
    for (double a : alpha_list)
        if (!(a > 0.0)) throw InputError("alpha must be positive");
    for (double s : carleman_s)
        if (!(s >= 0.0)) throw InputError("s must be non-negative");
    for (double s : uc_s)
        if (!(s >= 0.0)) throw InputError("s must be non-negative");
    for (double l : carleman_lambda)
        if (!(l > 0.0)) throw InputError("lambda must be positive");
    if (!(divergence_factor > 0.0)) throw InputError("divergence factor must be positive");
}

void set_config_value(ExperimentConfig& c, const std::string& section, const std::string& key,
                      const std::string& raw) {
    const std::string v = trim(raw);
    const std::string what = section + "." + key;
    auto unknown = [&]() { throw InputError("unknown config key '" + what + "'"); };
    if (section == "experiment") {
        if (key == "kind") {
            c.kind = parse_kind(v);
            c.kind_set = true;
        }
        else if (key == "seed") {
            const long long s = to_int(v, what);
            if (s < 0) throw InputError("seed must be non-negative");
            c.seed = static_cast<std::uint64_t>(s);
        } else if (key == "out") c.out = v;
        else if (key == "resolution") c.resolution = parse_int_list(v);
        else if (key == "plots") c.plots = to_bool(v, what);
        else unknown();
    } else if (section == "domain") {
        if (key == "spatial_dim") {
            const long long n = to_int(v, what);
            if (n != 1 && n != 2) throw InputError("spatial_dim must be 1 or 2");
            c.domain.omega.box.assign(static_cast<std::size_t>(n), Interval{0.0, 1.0});
        } else if (key == "x0") {
            c.domain.omega.box.at(0) = to_interval(v, what);
        } else if (key == "x1") {
            if (c.domain.omega.box.size() < 2) throw InputError("domain.x1 needs spatial_dim = 2 first");
            c.domain.omega.box[1] = to_interval(v, what);
        } else if (key == "t_max") c.domain.t_max = to_double(v, what);
        else if (key == "a_max") c.domain.a_max = to_double(v, what);
        else if (key == "tau") {
            Interval iv = to_interval(v, what);
            c.domain.tau_min = iv.lo;
            c.domain.tau_max = iv.hi;
        } else unknown();
    } else if (section == "coefficients") {
        if (key == "preset") c.coefficients = v;
        else if (key == "diffusion_csv" || key == "drift_csv" || key == "reaction_csv" || key == "growth_csv")
            c.coefficient_tables.emplace_back(key.substr(0, key.size() - 4), v);
        else unknown();
    } else if (section == "initial") {
        if (key == "kind") c.initial = v;
        else unknown();
    } else if (section == "carleman") {
        if (key == "weight") c.weight = v;
        else if (key == "slope") c.weight_slope = to_double(v, what);
        else if (key == "curvature") c.weight_curvature = to_double(v, what);
        else if (key == "anchor") c.weight_anchor = to_double(v, what);
        else if (key == "beta_w") c.beta_w = to_double(v, what);
        else if (key == "center") {
            auto p = parse_double_list(v);
            if (p.size() != 3) throw InputError("carleman.center needs t0,a0,tau0");
            c.center = {p[0], p[1], p[2]};
        } else if (key == "s_list") c.carleman_s = parse_double_list(v);
        else if (key == "lambda_list") c.carleman_lambda = parse_double_list(v);
        else if (key == "bumps") c.bump_count = static_cast<int>(to_int(v, what));
        else if (key == "bump_center") {
            Interval iv = to_interval(v, what);
            c.bumps.center_lo = iv.lo;
            c.bumps.center_hi = iv.hi;
        } else if (key == "bump_width") {
            Interval iv = to_interval(v, what);
            c.bumps.width_lo = iv.lo;
            c.bumps.width_hi = iv.hi;
        } else if (key == "divergence_factor") c.divergence_factor = to_double(v, what);
        else unknown();
    } else if (section == "geometry") {
        if (key == "preset") c.geometry = v;
        else if (key == "spatial_dim") c.geometry_dim = static_cast<int>(to_int(v, what));
        else if (key == "lambda") c.geometry_lambda = to_double(v, what);
        else if (key == "eps") c.geometry_eps = to_double(v, what);
        else if (key == "N") c.geometry_N = static_cast<int>(to_int(v, what));
        else if (key == "samples") c.samples = static_cast<int>(to_int(v, what));
        else unknown();
    } else if (section == "uc") {
        if (key == "coefficients") c.uc_coefficients = v;
        else if (key == "noise") c.noise = to_double(v, what);
        else if (key == "alpha_list") c.alpha_list = parse_double_list(v);
        else if (key == "s_list") c.uc_s = parse_double_list(v);
        else if (key == "decay_s_list") c.decay_s = parse_double_list(v);
        else if (key == "penalty") c.penalty = to_double(v, what);
        else if (key == "preconditioner") {
            if (v == "ldlt") c.preconditioner = Preconditioner::ldlt;
            else if (v == "jacobi") c.preconditioner = Preconditioner::jacobi;
            else throw InputError("unknown preconditioner '" + v + "'");
        } else if (key == "error_tolerance") c.error_tolerance = to_double(v, what);
        else unknown();
    } else {
        throw InputError("unknown config section '" + section + "'");
    }
}

ExperimentConfig parse_config(const std::string& text) {
    boost::property_tree::ptree pt;
    std::istringstream in(text);
    try {
        boost::property_tree::ini_parser::read_ini(in, pt);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw InputError(std::string("config parse error: ") + e.message() + " (line " + std::to_string(e.line()) +
                         ")");
    }
    ExperimentConfig c;
    // spatial_dim first so x1 can follow in any order
    if (auto d = pt.get_optional<std::string>("domain.spatial_dim")) set_config_value(c, "domain", "spatial_dim", *d);
    for (const auto& [section, tree] : pt) {
        if (tree.empty() && !tree.data().empty()) throw InputError("config key '" + section + "' outside a section");
        for (const auto& [key, node] : tree) {
            if (section == "domain" && key == "spatial_dim") continue;
            set_config_value(c, section, key, node.get_value<std::string>());
        }
    }
    return c;
}

ExperimentConfig load_config(const fs::path& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot read config " + path.string());
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str());
}

std::string config_json(const ExperimentConfig& c) {
    json j;
    j["experiment"] = {{"kind", kind_name(c.kind)},
                       {"seed", c.seed},
                       {"out", c.out.string()},
                       {"resolution", c.effective_resolution()},
                       {"plots", c.plots}};
    json box = json::array();
    for (const auto& iv : c.domain.omega.box) box.push_back({iv.lo, iv.hi});
    j["domain"] = {{"spatial_dim", c.domain.spatial_dim()},
                   {"omega_box", box},
                   {"t_max", c.domain.t_max},
                   {"a_max", c.domain.a_max},
                   {"tau", {c.domain.tau_min, c.domain.tau_max}}};
    json tables = json::object();
    for (const auto& [k, p] : c.coefficient_tables) tables[k] = p;
    j["coefficients"] = {{"preset", c.coefficients}, {"tables", tables}};
    j["initial"] = {{"kind", c.initial}};
    j["carleman"] = {{"weight", c.weight},
                     {"slope", c.weight_slope},
                     {"curvature", c.weight_curvature},
                     {"anchor", c.weight_anchor},
                     {"beta_w", c.beta_w},
                     {"center", c.center},
                     {"s_list", list_json(c.carleman_s)},
                     {"lambda_list", list_json(c.carleman_lambda)},
                     {"bumps", c.bump_count},
                     {"bump_center", {c.bumps.center_lo, c.bumps.center_hi}},
                     {"bump_width", {c.bumps.width_lo, c.bumps.width_hi}},
                     {"divergence_factor", c.divergence_factor}};
    j["geometry"] = {{"preset", c.geometry},
                     {"spatial_dim", c.geometry_dim},
                     {"lambda", c.geometry_lambda},
                     {"eps", c.geometry_eps},
                     {"N", c.geometry_N},
                     {"samples", c.samples}};
    j["uc"] = {{"coefficients", c.uc_coefficients},
               {"noise", c.noise},
               {"alpha_list", list_json(c.alpha_list)},
               {"s_list", list_json(c.uc_s)},
               {"decay_s_list", list_json(c.decay_s)},
               {"penalty", c.penalty},
               {"preconditioner", c.preconditioner == Preconditioner::ldlt ? "ldlt" : "jacobi"},
               {"error_tolerance", c.error_tolerance}};
    return j.dump(2);
}

namespace {

double default_initial(const Point& p) {
    const double q = p.tau * (1.0 - p.tau);
    return (1.0 + 0.5 * std::cos(M_PI * p.x[0])) * std::exp(-p.a) * 30.0 * q * q;
}

CoefficientSet make_coefficients(const ExperimentConfig& c, const std::string& preset, int dim) {
    CoefficientSet cs = coefficient_preset(preset, dim);
    if (!c.coefficient_tables.empty()) cs = with_tables(cs, c.coefficient_tables);
    return cs;
}

struct Writer {
    fs::path dir;
    bool plots;
    std::vector<std::string> files;

    void csv(const std::string& name, const Table& t) {
        write_csv(t, dir / name);
        files.push_back(name);
    }
    void text(const std::string& name, const std::string& s) {
        write_text(dir / name, s);
        files.push_back(name);
    }
    void svg(const std::string& name, const std::string& s) {
        if (plots) text(name, s);
    }
};

std::string point_key(const Point& p, int dim) {
    std::ostringstream o;
    o << "(" << format_double(p.x[0]);
    if (dim == 2) o << ", " << format_double(p.x[1]);
    o << ", " << format_double(p.t) << ", " << format_double(p.a) << ", " << format_double(p.tau) << ")";
    return o.str();
}

RunResult run_simulate(const ExperimentConfig& c, Writer& w) {
    ForwardProblem pb;
    pb.domain = c.domain;
    pb.grid = build_grid(c.domain, c.effective_resolution());
    pb.coeffs = make_coefficients(c, c.coefficients, c.domain.spatial_dim());
    if (c.initial == "zero") pb.initial = [](const Point&) { return 0.0; };
    else pb.initial = default_initial;
    Trajectory tr = solve_forward(pb);

    Table t{{"step", "t", "total_population", "max_norm"}, {}};
    for (int n = 0; n < tr.steps(); ++n)
        t.add({static_cast<long long>(n), tr.times[n], tr.total_population[n], tr.max_norm[n]});
    w.csv("trajectory.csv", t);

    const Field last = tr.slice(tr.steps() - 1);
    const Grid& sg = last.grid();
    const int dim = sg.spatial_dim();
    Table s{dim == 2 ? std::vector<std::string>{"x0", "x1", "a", "tau", "u"}
                     : std::vector<std::string>{"x0", "a", "tau", "u"},
            {}};
    for (std::size_t i = 0; i < sg.size(); ++i) {
        const Point p = sg.point(i);
        if (dim == 2) s.add({p.x[0], p.x[1], p.a, p.tau, last[i]});
        else s.add({p.x[0], p.a, p.tau, last[i]});
    }
    w.csv("final_state.csv", s);

    json sum = {{"kind", "simulate"},
                {"steps", tr.steps()},
                {"cfl", StepOperator(*pb.grid, pb.coeffs).cfl()},
                {"initial_birth_mismatch", tr.initial_birth_mismatch},
                {"initial_inflow_mismatch", tr.initial_inflow_mismatch},
                {"final_total_population", tr.total_population.back()},
                {"final_max_norm", tr.max_norm.back()}};
    w.text("summary.json", sum.dump(2) + "\n");
    PlotSpec ps{"total population", "t", "integral of u", false, false};
    w.svg("population.svg", svg_plot(ps, {{"P(t)", tr.times, tr.total_population}}));
    return {0, "ok", {}};
}

RunResult run_carleman(const ExperimentConfig& c, Writer& w) {
    const int dim = c.domain.spatial_dim();
    GridPtr grid = build_grid(c.domain, c.effective_resolution());
    CoefficientSet cs = make_coefficients(c, c.coefficients, dim);
    validate_coefficients(cs, *grid);
    CarlemanWeight wt;
    wt.d = c.weight == "ramp" ? ramp_weight(c.weight_slope, c.weight_curvature, c.weight_anchor, dim)
                              : bowl_weight(dim);
    wt.beta_w = c.beta_w;
    wt.center = c.center;
    std::vector<Field> bumps;
    for (const BumpSpec& b : random_bumps(*grid, c.bump_count, c.seed, c.bumps)) bumps.push_back(sample_bump(b, grid));
    SweepResult sr = sweep_verify(bumps, c.carleman_s, c.carleman_lambda, wt, cs, c.divergence_factor);

    Table t{{"bump_id", "s", "lambda", "lhs_transport", "lhs_gradient", "lhs_zeroth", "rhs", "ratio"}, {}};
    json logs = json::array();
    for (const CarlemanReport& r : sr.rows) {
        t.add({static_cast<long long>(r.bump_id), r.s, r.lambda, std::exp(r.log_lhs_transport),
               std::exp(r.log_lhs_gradient), std::exp(r.log_lhs_zeroth), std::exp(r.log_rhs), r.ratio()});
        logs.push_back({{"bump_id", r.bump_id},
                        {"s", r.s},
                        {"lambda", r.lambda},
                        {"log_lhs", r.log_lhs()},
                        {"log_rhs", r.log_rhs},
                        {"log_ratio", r.log_ratio()}});
    }
    w.csv("carleman.csv", t);
    Table v{{"bump_id", "lambda", "growth", "diverged"}, {}};
    for (const SweepVerdict& sv : sr.verdicts)
        v.add({static_cast<long long>(sv.bump_id), sv.lambda, sv.growth, static_cast<long long>(sv.diverged)});
    if (!v.rows.empty()) w.csv("verdicts.csv", v);

    json sum = {{"kind", "carleman-verify"},
                {"passed", sr.passed},
                {"max_growth", sr.max_growth},
                {"divergence_factor", c.divergence_factor},
                {"skipped", sr.skipped},
                {"rows", logs}};
    w.text("summary.json", sum.dump(2) + "\n");

    std::vector<Series> series;
    for (const double lam : c.carleman_lambda) {
        Series s{"bump 0, lambda " + format_double(lam), {}, {}};
        for (const CarlemanReport& r : sr.rows)
            if (r.bump_id == 0 && r.lambda == lam) {
                s.x.push_back(r.s);
                s.y.push_back(r.ratio());
            }
        series.push_back(s);
    }
    PlotSpec ps{"Carleman ratio lhs/rhs", "s", "ratio", true, true};
    try {
        w.svg("ratio.svg", svg_plot(ps, series));
    } catch (const InputError&) {
        // nothing plottable (all ratios non-positive or non-finite)
    }
    return {sr.passed ? 0 : 1, sr.passed ? "passed" : "diverged", {}};
}

UCGeometry make_geometry(const ExperimentConfig& c) {
    UCGeometry geo = geometry_preset(c.geometry, c.geometry_dim, c.geometry_lambda);
    if (c.geometry_eps < 0.0 && c.geometry_N == 0) return geo;
    const double eps = c.geometry_eps >= 0.0 ? c.geometry_eps : geo.eps;
    std::optional<int> n;
    if (c.geometry_N > 0) n = c.geometry_N;
    UCGeometry out = build_uc_geometry(geo.base, geo.domain, geo.omega0, geo.gamma, eps, n, geo.lambda, geo.center);
    out.name = geo.name;
    return out;
}

std::string cross_section(const UCGeometry& geo) {
    const int n = 121;
    Raster r;
    r.width = n;
    r.height = n;
    r.values.resize(static_cast<std::size_t>(n) * n);
    const auto& box = geo.omega().box;
    const bool two = geo.domain.spatial_dim() == 2;
    r.title = two ? "D at (t, a, tau) = p" : "D at (a, tau) = (a0, tau0)";
    r.xlabel = "x0";
    r.ylabel = two ? "x1" : "t";
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            Point p;
            p.t = geo.center[0];
            p.a = geo.center[1];
            p.tau = geo.center[2];
            p.x[0] = box[0].lo + box[0].length() * j / (n - 1);
            const double yv = static_cast<double>(n - 1 - i) / (n - 1);
            if (two) p.x[1] = box[1].lo + box[1].length() * yv;
            else p.t = geo.domain.t_max * yv;
            r.values[static_cast<std::size_t>(i) * n + j] = geo.in_target(p) ? 1.0 : geo.in_D(p) ? 0.55 : 0.0;
        }
    return svg_raster(r);
}

RunResult run_geometry(const ExperimentConfig& c, Writer& w) {
    UCGeometry geo = make_geometry(c);
    GridPtr grid = build_grid(geo.domain, c.effective_resolution());
    InclusionReport rep = verify_inclusions(geo, c.samples, c.seed, grid);

    Table t{{"geometry", "spatial_dim", "N", "eps", "beta_w", "lambda", "mu1", "mu2", "mu3", "mu4", "target_samples",
             "target_failures", "domain_samples", "domain_failures", "flip_pairs", "flip_failures"},
            {}};
    t.add({geo.name, static_cast<long long>(geo.domain.spatial_dim()), static_cast<long long>(geo.N), geo.eps,
           geo.beta_w, geo.lambda, geo.mu[0], geo.mu[1], geo.mu[2], geo.mu[3],
           static_cast<long long>(rep.target_samples), static_cast<long long>(rep.target_failures),
           static_cast<long long>(rep.domain_samples), static_cast<long long>(rep.domain_failures),
           static_cast<long long>(rep.flip_pairs), static_cast<long long>(rep.flip_failures)});
    w.csv("geometry.csv", t);
    json ce = json::array();
    if (!rep.counterexamples.empty()) {
        Table x{{"kind", "x0", "x1", "t", "a", "tau", "phi"}, {}};
        for (const auto& e : rep.counterexamples) {
            x.add({e.kind, e.p.x[0], e.p.x[1], e.p.t, e.p.a, e.p.tau, e.phi});
            ce.push_back({{"kind", e.kind}, {"point", point_key(e.p, geo.domain.spatial_dim())}, {"phi", e.phi}});
        }
        w.csv("counterexamples.csv", x);
    }
    json sum = {{"kind", "geometry-check"},
                {"geometry", geo.name},
                {"passed", rep.passed()},
                {"N", geo.N},
                {"mu", geo.mu},
                {"mu_strictly_increasing", geo.mu[0] < geo.mu[1] && geo.mu[1] < geo.mu[2] && geo.mu[2] < geo.mu[3]},
                {"weight_base", geo.base.name},
                {"exceptional_set", geo.base.exceptional_desc},
                {"strict_subset_note", geo.strict_subset_note},
                {"counterexamples", ce}};
    w.text("summary.json", sum.dump(2) + "\n");
    w.svg("cross_section.svg", cross_section(geo));
    return {rep.passed() ? 0 : 1, rep.passed() ? "passed" : "counterexamples found", {}};
}

RunResult run_uc(const ExperimentConfig& c, Writer& w) {
    UCGeometry geo = make_geometry(c);
    ForwardProblem pb;
    pb.domain = geo.domain;
    pb.grid = build_grid(geo.domain, c.effective_resolution());
    pb.coeffs = make_coefficients(c, c.uc_coefficients, geo.domain.spatial_dim());
    pb.initial = default_initial;
    Trajectory tr = solve_forward(pb);
    CauchyData data = extract_cauchy(tr, geo, c.noise, c.seed);
    const double tol = c.error_tolerance >= 0.0 ? c.error_tolerance : (c.noise > 0.0 ? 0.3 : 0.1);

    Table t{{"alpha", "s", "residual", "mismatch", "interior_error"}, {}};
    bool ok = true;
    json runs = json::array();
    std::vector<Series> series;
    for (double s : c.uc_s) {
        Series ser{"s = " + format_double(s), {}, {}};
        for (double a : c.alpha_list) {
            ReconstructOptions o;
            o.alpha = a;
            o.s = s;
            o.penalty = c.penalty;
            o.preconditioner = c.preconditioner;
            ContinuationResult r = reconstruct(data, geo, pb.coeffs, o, &tr.u);
            t.add({a, s, r.equation_residual, r.data_mismatch, r.interior_error});
            ok = ok && r.interior_error <= tol;
            runs.push_back({{"alpha", a},
                            {"s", s},
                            {"interior_error", r.interior_error},
                            {"h10_norm", r.h10_norm},
                            {"unknowns", r.unknowns},
                            {"residual_rows", r.residual_rows},
                            {"target_nodes", r.target_nodes},
                            {"cg_iterations", r.iterations}});
            ser.x.push_back(a);
            ser.y.push_back(r.interior_error);
        }
        series.push_back(ser);
    }
    w.csv("uc_demo.csv", t);

    DecayTable dt = decay_experiment(tr.u, geo, pb.coeffs, c.decay_s);
    Table d{{"s", "bound", "measured", "log_bound", "log_measured"}, {}};
    for (const DecayRow& r : dt.rows) d.add({r.s, r.bound, r.measured, r.log_bound, r.log_measured});
    w.csv("decay.csv", d);

    const bool passed = ok && dt.passed();
    json sum = {{"kind", "uc-demo"},
                {"geometry", geo.name},
                {"noise", c.noise},
                {"error_tolerance", tol},
                {"reconstruction_within_tolerance", ok},
                {"decay_bound_decreasing", dt.bound_decreasing},
                {"decay_within_bound", dt.within_bound},
                {"decay_degenerate", dt.degenerate},
                {"passed", passed},
                {"mu", geo.mu},
                {"N", geo.N},
                {"runs", runs}};
    w.text("summary.json", sum.dump(2) + "\n");
    w.svg("interior_error.svg", svg_plot({"interior error vs alpha", "alpha", "relative L2 error", true, true}, series));
    Series b{"bound", {}, {}}, m{"measured / measured(s_min)", {}, {}};
    for (const DecayRow& r : dt.rows) {
        b.x.push_back(r.s);
        b.y.push_back(r.bound);
        m.x.push_back(r.s);
        m.y.push_back(std::exp(r.log_measured - dt.rows.front().log_measured));
    }
    w.svg("decay.svg", svg_plot({"decay mechanism", "s", "factor", false, true}, {b, m}));
    return {passed ? 0 : 1, passed ? "passed" : "failed", {}};
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    std::error_code ec;
    fs::create_directories(cfg.out, ec);
    if (ec || !fs::is_directory(cfg.out)) throw IoError("cannot create output directory " + cfg.out.string());
    Writer w{cfg.out, cfg.plots, {}};
    const auto t0 = std::chrono::steady_clock::now();
    RunResult r;
    switch (cfg.kind) {
        case ExperimentKind::simulate: r = run_simulate(cfg, w); break;
        case ExperimentKind::carleman_verify: r = run_carleman(cfg, w); break;
        case ExperimentKind::uc_demo: r = run_uc(cfg, w); break;
        case ExperimentKind::geometry_check: r = run_geometry(cfg, w); break;
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    r.files = w.files;
    r.files.push_back("manifest.json");

    json m;
    m["tool"] = {{"name", "carleman-lab"}, {"version", kVersion}};
    m["versions"] = {{"compiler", __VERSION__},
                     {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                   std::to_string(EIGEN_MINOR_VERSION)},
                     {"boost", std::to_string(BOOST_VERSION / 100000) + "." + std::to_string(BOOST_VERSION / 100 % 1000) +
                                   "." + std::to_string(BOOST_VERSION % 100)}};
    m["config"] = json::parse(config_json(cfg));
    m["threads"] = thread_count();
    m["timings"] = {{"total_seconds", secs}};
    m["files"] = r.files;
    m["exit_code"] = r.exit_code;
    m["verdict"] = r.verdict;
    write_text(cfg.out / "manifest.json", m.dump(2) + "\n");
    return r;
}

int run_and_report(const ExperimentConfig& cfg, std::ostream& log) {
    try {
        RunResult r = run_experiment(cfg);
        log << kind_name(cfg.kind) << ": " << r.verdict << " (" << cfg.out.string() << ")\n";
        return r.exit_code;
    } catch (const InputError& e) {
        log << "config error: " << e.what() << "\n";
        return 2;
    } catch (const IoError& e) {
        log << "io error: " << e.what() << "\n";
        return 2;
    } catch (const NumericalError& e) {
        log << "numerical failure: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace carleman_lab
