#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include "carleman_lab/errors.hpp"
#include "carleman_lab/experiment.hpp"
#include "carleman_lab/report.hpp"

using namespace carleman_lab;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), {}};
}

fs::path scratch(const std::string& name) {
    fs::path p = fs::temp_directory_path() / ("carleman_lab_unit_" + name);
    fs::remove_all(p);
    return p;
}

}  // namespace

TEST_CASE("csv reports") {
    Table empty{{"a", "b"}, {}};
    try {
        to_csv(empty);
        FAIL("expected InputError");
    } catch (const InputError& e) {
        CHECK(std::string(e.what()) == "nothing to report");
    }

    Table one{{"name", "n", "x"}, {}};
    one.add({std::string("a,b"), 3LL, 0.1});
    CHECK(to_csv(one) == "name,n,x\n\"a,b\",3,0.10000000000000001\n");
    CHECK_THROWS_AS(one.add({1.0}), InputError);

    CHECK(format_double(1.0 / 3.0) == "0.33333333333333331");
    CHECK(format_double(-0.0) == "0");
    CHECK(format_double(INFINITY) == "inf");
    CHECK(format_double(NAN) == "nan");
    CHECK(std::stod(format_double(0.1 + 0.2)) == 0.1 + 0.2);
}

TEST_CASE("plots") {
    const std::string svg = svg_plot({"t", "x", "y", true, true}, {{"s", {1, 10}, {1, 0.5}}});
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find("polyline") != std::string::npos);
    CHECK_THROWS_AS(svg_plot({"t", "x", "y", true, true}, {{"s", {-1}, {1}}}), InputError);
    CHECK_THROWS_AS(svg_raster(Raster{}), InputError);
}

TEST_CASE("config parsing") {
    const ExperimentConfig c = parse_config(
        "[experiment]\nkind = carleman-verify\nseed = 5\nresolution = 9,9,9,9\n"
        "[domain]\nx0 = 0, 2\nspatial_dim = 2\nx1 = -1, 1\n"
        "[carleman]\ns_list = 1, 2\nlambda_list = 3\nweight = bowl\n"
        "[uc]\npreconditioner = jacobi\n");
    CHECK(c.kind == ExperimentKind::carleman_verify);
    CHECK(c.kind_set);
    CHECK(c.seed == 5);
    CHECK(c.effective_resolution() == std::vector<int>{9, 9, 9, 9});
    REQUIRE(c.domain.spatial_dim() == 2);
    CHECK(c.domain.omega.box[0].hi == 2.0);
    CHECK(c.domain.omega.box[1].lo == -1.0);
    CHECK(c.carleman_s == std::vector<double>{1, 2});
    CHECK(c.weight == "bowl");
    CHECK(c.preconditioner == Preconditioner::jacobi);
    c.validate();

    CHECK(parse_config("").effective_resolution() == std::vector<int>{17});
    CHECK_THROWS_AS(parse_config("[nope]\na = 1\n"), InputError);
    CHECK_THROWS_AS(parse_config("[carleman]\nslope = fast\n"), InputError);
    CHECK_THROWS_AS(parse_config("[carleman]\nunknown = 1\n"), InputError);
    CHECK_THROWS_AS(parse_config("[experiment]\nkind = plot\n"), InputError);
    CHECK_THROWS_AS(parse_double_list("1,,2"), InputError);
    CHECK_THROWS_AS(load_config("/nonexistent/x.ini"), IoError);

    ExperimentConfig bad;
    bad.coefficients = "mystery";
    try {
        bad.validate();
        FAIL("expected InputError");
    } catch (const InputError& e) {
        CHECK(std::string(e.what()).find("mystery") != std::string::npos);
    }
}

TEST_CASE("run_experiment exit codes and artifacts") {
    std::ostringstream log;
    ExperimentConfig bad;
    bad.coefficients = "mystery";
    bad.out = scratch("bad");
    CHECK(run_and_report(bad, log) == 2);
    CHECK(log.str().find("mystery") != std::string::npos);

    ExperimentConfig unwritable;
    unwritable.out = "/proc/carleman_lab_cannot_write";
    CHECK(run_and_report(unwritable, log) == 2);

    ExperimentConfig g;
    g.kind = ExperimentKind::geometry_check;
    g.samples = 2000;
    g.out = scratch("geometry");
    CHECK(run_and_report(g, log) == 0);
    const std::string csv = slurp(g.out / "geometry.csv");
    CHECK(csv.find("mu1,mu2,mu3,mu4") != std::string::npos);
    CHECK(fs::exists(g.out / "manifest.json"));
    CHECK(fs::exists(g.out / "cross_section.svg"));
    CHECK_FALSE(fs::exists(g.out / "counterexamples.csv"));

    // a divergence threshold below 1 cannot be met
    ExperimentConfig cv;
    cv.kind = ExperimentKind::carleman_verify;
    cv.resolution = {9};
    cv.bump_count = 2;
    cv.carleman_s = {32, 64};
    cv.carleman_lambda = {1};
    cv.divergence_factor = 0.5;
    cv.plots = false;
    cv.out = scratch("carleman");
    CHECK(run_and_report(cv, log) == 1);
    CHECK(fs::exists(cv.out / "carleman.csv"));
    CHECK_FALSE(fs::exists(cv.out / "ratio.svg"));
    fs::remove_all(g.out);
    fs::remove_all(cv.out);
}

TEST_CASE("identical seeds give identical bytes") {
    ExperimentConfig c;
    c.kind = ExperimentKind::carleman_verify;
    c.resolution = {9};
    c.bump_count = 3;
    c.seed = 99;
    c.out = scratch("det_a");
    run_experiment(c);
    const std::string a = slurp(c.out / "carleman.csv");
    fs::remove_all(c.out);
    c.out = scratch("det_b");
    run_experiment(c);
    CHECK(a == slurp(c.out / "carleman.csv"));
    c.seed = 100;
    run_experiment(c);
    CHECK(a != slurp(c.out / "carleman.csv"));
    fs::remove_all(c.out);
}
