#include "agebif/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "agebif/errors.hpp"

namespace agebif {

std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    const std::filesystem::path dir = path.parent_path();
    if (!dir.empty()) std::filesystem::create_directories(dir);
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw InternalError("cannot open " + tmp.string() + " for writing");
        os.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!os) throw InternalError("short write to " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

namespace {

void check_cell(const std::string& cell) {
    for (char c : cell) {
        if (c == ',' || c == '"' || c == '\n' || c == '\r')
            throw InvalidArgument("csv cell may not contain commas, quotes or line breaks: " +
                                  cell);
    }
}

std::string join_cells(const std::vector<std::string>& cells) {
    std::string line;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        check_cell(cells[i]);
        if (i) line += ',';
        line += cells[i];
    }
    line += '\n';
    return line;
}

} // namespace

CsvTable::CsvTable(std::vector<std::string> header) : n_cols_(header.size()) {
    if (header.empty()) throw InvalidArgument("csv header must not be empty");
    body_ = join_cells(header);
}

void CsvTable::add_row(const std::vector<std::string>& cells) {
    if (cells.size() != n_cols_) {
        std::ostringstream os;
        os << "csv row has " << cells.size() << " cells, expected " << n_cols_;
        throw InvalidArgument(os.str());
    }
    body_ += join_cells(cells);
    ++n_rows_;
}

void CsvTable::add_numeric_row(const std::vector<double>& cells) {
    std::vector<std::string> out;
    out.reserve(cells.size());
    for (double c : cells) out.push_back(format_double(c));
    add_row(out);
}

namespace {

constexpr double kWidth = 720, kHeight = 480;
constexpr double kLeft = 76, kRight = 20, kTop = 40, kBottom = 56;

std::string esc(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '&') out += "&amp;";
        else if (c == '<') out += "&lt;";
        else if (c == '>') out += "&gt;";
        else out += c;
    }
    return out;
}

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

double tick_step(double span) {
    const double raw = span / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    const double norm = raw / mag;
    if (norm < 1.5) return mag;
    if (norm < 3.5) return 2.0 * mag;
    if (norm < 7.5) return 5.0 * mag;
    return 10.0 * mag;
}

std::string tick_label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

} // namespace

LinePlot::LinePlot(std::string title, std::string x_label, std::string y_label)
    : title_(std::move(title)), x_label_(std::move(x_label)), y_label_(std::move(y_label)) {}

void LinePlot::add_series(std::string name, const std::vector<double>& x,
                          const std::vector<double>& y, std::string color, bool dashed) {
    if (x.size() != y.size())
        throw InvalidArgument("plot series " + name + ": x and y lengths differ");
    series_.push_back(Series{std::move(name), x, y, std::move(color), dashed});
}

std::string LinePlot::render() const {
    double xlo = INFINITY, xhi = -INFINITY, ylo = INFINITY, yhi = -INFINITY;
    for (const Series& s : series_) {
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
            xlo = std::min(xlo, s.x[i]);
            xhi = std::max(xhi, s.x[i]);
            ylo = std::min(ylo, s.y[i]);
            yhi = std::max(yhi, s.y[i]);
        }
    }
    if (!std::isfinite(xlo) || !std::isfinite(ylo)) {
        xlo = 0.0; xhi = 1.0; ylo = 0.0; yhi = 1.0;
    }
    if (xhi - xlo <= 0.0) { xlo -= 0.5; xhi += 0.5; }
    if (yhi - ylo <= 0.0) { ylo -= 0.5; yhi += 0.5; }
    const double xpad = 0.03 * (xhi - xlo), ypad = 0.05 * (yhi - ylo);
    xlo -= xpad; xhi += xpad; ylo -= ypad; yhi += ypad;

    const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
    const auto X = [&](double v) { return kLeft + (v - xlo) / (xhi - xlo) * pw; };
    const auto Y = [&](double v) { return kHeight - kBottom - (v - ylo) / (yhi - ylo) * ph; };

    std::string svg;
    svg += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" + num(kWidth) +
           "\" height=\"" + num(kHeight) + "\" viewBox=\"0 0 " + num(kWidth) + " " +
           num(kHeight) + "\">\n";
    svg += "<rect x=\"0\" y=\"0\" width=\"" + num(kWidth) + "\" height=\"" + num(kHeight) +
           "\" fill=\"white\"/>\n";
    svg += "<rect x=\"" + num(kLeft) + "\" y=\"" + num(kTop) + "\" width=\"" + num(pw) +
           "\" height=\"" + num(ph) + "\" fill=\"none\" stroke=\"#404040\"/>\n";
    svg += "<text x=\"" + num(kWidth / 2) + "\" y=\"22\" font-size=\"15\" text-anchor=\"middle\" "
           "font-family=\"sans-serif\">" + esc(title_) + "</text>\n";
    svg += "<text x=\"" + num(kLeft + pw / 2) + "\" y=\"" + num(kHeight - 14) +
           "\" font-size=\"13\" text-anchor=\"middle\" font-family=\"sans-serif\">" +
           esc(x_label_) + "</text>\n";
    svg += "<text x=\"18\" y=\"" + num(kTop + ph / 2) +
           "\" font-size=\"13\" text-anchor=\"middle\" font-family=\"sans-serif\" transform=\""
           "rotate(-90 18 " + num(kTop + ph / 2) + ")\">" + esc(y_label_) + "</text>\n";

    const double xs = tick_step(xhi - xlo), ys = tick_step(yhi - ylo);
    for (double t = std::ceil(xlo / xs) * xs; t <= xhi + 1e-12 * xs; t += xs) {
        const double px = X(t);
        svg += "<line x1=\"" + num(px) + "\" y1=\"" + num(kHeight - kBottom) + "\" x2=\"" +
               num(px) + "\" y2=\"" + num(kHeight - kBottom + 5) + "\" stroke=\"#404040\"/>\n";
        svg += "<text x=\"" + num(px) + "\" y=\"" + num(kHeight - kBottom + 20) +
               "\" font-size=\"11\" text-anchor=\"middle\" font-family=\"sans-serif\">" +
               tick_label(std::abs(t) < 1e-12 * xs ? 0.0 : t) + "</text>\n";
    }
    for (double t = std::ceil(ylo / ys) * ys; t <= yhi + 1e-12 * ys; t += ys) {
        const double py = Y(t);
        svg += "<line x1=\"" + num(kLeft - 5) + "\" y1=\"" + num(py) + "\" x2=\"" + num(kLeft) +
               "\" y2=\"" + num(py) + "\" stroke=\"#404040\"/>\n";
        svg += "<text x=\"" + num(kLeft - 9) + "\" y=\"" + num(py + 4) +
               "\" font-size=\"11\" text-anchor=\"end\" font-family=\"sans-serif\">" +
               tick_label(std::abs(t) < 1e-12 * ys ? 0.0 : t) + "</text>\n";
    }

    for (const Series& s : series_) {
        svg += "<polyline fill=\"none\" stroke=\"" + s.color + "\" stroke-width=\"1.6\"";
        if (s.dashed) svg += " stroke-dasharray=\"6 4\"";
        svg += " points=\"";
        bool first = true;
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
            if (!first) svg += ' ';
            svg += num(X(s.x[i])) + "," + num(Y(s.y[i]));
            first = false;
        }
        svg += "\"/>\n";
    }

    double ly = kTop + 16;
    for (const Series& s : series_) {
        const double lx = kLeft + pw - 150;
        svg += "<line x1=\"" + num(lx) + "\" y1=\"" + num(ly - 4) + "\" x2=\"" + num(lx + 24) +
               "\" y2=\"" + num(ly - 4) + "\" stroke=\"" + s.color + "\" stroke-width=\"1.6\"";
        if (s.dashed) svg += " stroke-dasharray=\"6 4\"";
        svg += "/>\n";
        svg += "<text x=\"" + num(lx + 30) + "\" y=\"" + num(ly) +
               "\" font-size=\"12\" font-family=\"sans-serif\">" + esc(s.name) + "</text>\n";
        ly += 17;
    }

    svg += "</svg>\n";
    return svg;
}

} // namespace agebif
