#include "carleman_lab/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "carleman_lab/errors.hpp"

namespace carleman_lab {

void Table::add(std::vector<Cell> row) {
    if (row.size() != columns.size()) throw InputError("row width differs from the header");
    rows.push_back(std::move(row));
}

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (v == 0.0) return "0";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string format_cell(const Cell& c) {
    if (const double* d = std::get_if<double>(&c)) return format_double(*d);
    if (const long long* i = std::get_if<long long>(&c)) return std::to_string(*i);
    const std::string& s = std::get<std::string>(c);
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char ch : s) {
        if (ch == '"') q += '"';
        q += ch;
    }
    return q + "\"";
}

std::string to_csv(const Table& t) {
    if (t.rows.empty()) throw InputError("nothing to report");
    std::string out;
    for (std::size_t k = 0; k < t.columns.size(); ++k) out += (k ? "," : "") + t.columns[k];
    out += '\n';
    for (const auto& row : t.rows) {
        for (std::size_t k = 0; k < row.size(); ++k) out += (k ? "," : "") + format_cell(row[k]);
        out += '\n';
    }
    return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write " + path.string());
    f << text;
    if (!f) throw IoError("write failed: " + path.string());
}

void write_csv(const Table& t, const std::filesystem::path& path) { write_text(path, to_csv(t)); }

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string tick(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string o;
    for (char c : s) {
        if (c == '<') o += "&lt;";
        else if (c == '>') o += "&gt;";
        else if (c == '&') o += "&amp;";
        else o += c;
    }
    return o;
}

}  // namespace

std::string svg_plot(const PlotSpec& spec, const std::vector<Series>& series) {
    const double W = 640, H = 420, L = 80, R = 150, T = 40, B = 60;
    auto tx = [&](double v) { return spec.logx ? std::log10(v) : v; };
    auto ty = [&](double v) { return spec.logy ? std::log10(v) : v; };
    auto ok = [&](double x, double y) {
        return std::isfinite(x) && std::isfinite(y) && (!spec.logx || x > 0) && (!spec.logy || y > 0);
    };
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!ok(s.x[i], s.y[i])) continue;
            x0 = std::min(x0, tx(s.x[i]));
            x1 = std::max(x1, tx(s.x[i]));
            y0 = std::min(y0, ty(s.y[i]));
            y1 = std::max(y1, ty(s.y[i]));
        }
    if (!std::isfinite(x0)) throw InputError("nothing to report");
    if (x1 == x0) x1 = x0 + 1;
    if (y1 == y0) y1 = y0 + 1;
    auto px = [&](double v) { return L + (W - L - R) * (tx(v) - x0) / (x1 - x0); };
    auto py = [&](double v) { return H - B - (H - T - B) * (ty(v) - y0) / (y1 - y0); };

    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" << escape(spec.title)
      << "</text>\n";
    o << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\"" << H - T - B
      << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 4; ++k) {
        const double fx = x0 + (x1 - x0) * k / 4, fy = y0 + (y1 - y0) * k / 4;
        const double vx = spec.logx ? std::pow(10.0, fx) : fx, vy = spec.logy ? std::pow(10.0, fy) : fy;
        const double gx = L + (W - L - R) * k / 4, gy = H - B - (H - T - B) * k / 4;
        o << "<text x=\"" << num(gx) << "\" y=\"" << H - B + 18 << "\" text-anchor=\"middle\" font-size=\"11\">"
          << tick(vx) << "</text>\n";
        o << "<text x=\"" << L - 6 << "\" y=\"" << num(gy + 4) << "\" text-anchor=\"end\" font-size=\"11\">"
          << tick(vy) << "</text>\n";
    }
    o << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 15 << "\" text-anchor=\"middle\" font-size=\"13\">"
      << escape(spec.xlabel) << "</text>\n";
    o << "<text x=\"18\" y=\"" << (T + H - B) / 2 << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 18 "
      << (T + H - B) / 2 << ")\">" << escape(spec.ylabel) << "</text>\n";
    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        const char* col = kPalette[k % 8];
        std::string pts;
        for (std::size_t i = 0; i < s.x.size(); ++i)
            if (ok(s.x[i], s.y[i])) pts += num(px(s.x[i])) + "," + num(py(s.y[i])) + " ";
        o << "<polyline fill=\"none\" stroke=\"" << col << "\" stroke-width=\"1.5\" points=\"" << pts << "\"/>\n";
        const double ly = T + 16.0 * (static_cast<double>(k) + 1);
        o << "<line x1=\"" << W - R + 10 << "\" y1=\"" << num(ly) << "\" x2=\"" << W - R + 30 << "\" y2=\"" << num(ly)
          << "\" stroke=\"" << col << "\" stroke-width=\"2\"/>\n";
        o << "<text x=\"" << W - R + 34 << "\" y=\"" << num(ly + 4) << "\" font-size=\"11\">" << escape(s.name)
          << "</text>\n";
    }
    o << "</svg>\n";
    return o.str();
}

std::string svg_raster(const Raster& r) {
    if (r.width <= 0 || r.height <= 0 || r.values.size() != static_cast<std::size_t>(r.width) * r.height)
        throw InputError("nothing to report");
    const double W = 520, H = 520, L = 60, T = 40, B = 50, R = 20;
    const double cw = (W - L - R) / r.width, ch = (H - T - B) / r.height;
    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" << escape(r.title)
      << "</text>\n";
    for (int i = 0; i < r.height; ++i)
        for (int j = 0; j < r.width; ++j) {
            const double v = std::clamp(r.values[static_cast<std::size_t>(i) * r.width + j], 0.0, 1.0);
            const int c = static_cast<int>(std::lround(255 * (1.0 - 0.8 * v)));
            o << "<rect x=\"" << num(L + j * cw) << "\" y=\"" << num(T + i * ch) << "\" width=\"" << num(cw + 0.3)
              << "\" height=\"" << num(ch + 0.3) << "\" fill=\"rgb(" << c << "," << c << ",255)\"/>\n";
        }
    o << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\"" << H - T - B
      << "\" fill=\"none\" stroke=\"black\"/>\n";
    o << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 15 << "\" text-anchor=\"middle\" font-size=\"13\">"
      << escape(r.xlabel) << "</text>\n";
    o << "<text x=\"18\" y=\"" << (T + H - B) / 2 << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 18 "
      << (T + H - B) / 2 << ")\">" << escape(r.ylabel) << "</text>\n";
    o << "</svg>\n";
    return o.str();
}

}  // namespace carleman_lab
