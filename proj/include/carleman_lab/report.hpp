#pragma once

#include <filesystem>
#include <string>
#include <variant>
#include <vector>

namespace carleman_lab {

using Cell = std::variant<double, long long, std::string>;

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;

    void add(std::vector<Cell> row);
};

// %.17g for doubles, "inf"/"-inf"/"nan" for non-finite values.
std::string format_double(double v);
std::string format_cell(const Cell& c);

// Fixed column order, one header line. Throws InputError("nothing to report")
// for a table without rows.
std::string to_csv(const Table& t);
void write_csv(const Table& t, const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

struct Series {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
};

struct PlotSpec {
    std::string title;
    std::string xlabel;
    std::string ylabel;
    bool logx = true;
    bool logy = true;
};

// Line plot; non-positive values are dropped on log axes.
std::string svg_plot(const PlotSpec& spec, const std::vector<Series>& series);

// Raster of cell values in [0, 1] (row 0 at the top) with optional markers.
struct Raster {
    std::string title;
    int width = 0;
    int height = 0;
    std::vector<double> values;  // row-major, height x width
    std::string xlabel;
    std::string ylabel;
};

std::string svg_raster(const Raster& r);

}  // namespace carleman_lab
