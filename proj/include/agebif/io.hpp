#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace agebif {

// Shortest decimal form that round-trips a double (printf %.17g semantics
// with enough digits to reparse exactly).
std::string format_double(double x);

// Writes content to path via a temporary file in the same directory followed
// by an atomic rename, creating parent directories as needed.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

// Comma-separated table: UTF-8, header row, LF line endings, numeric cells
// rendered by format_double.
class CsvTable {
  public:
    explicit CsvTable(std::vector<std::string> header);

    void add_row(const std::vector<std::string>& cells);
    // convenience for all-numeric rows
    void add_numeric_row(const std::vector<double>& cells);

    std::size_t rows() const { return n_rows_; }
    const std::string& str() const { return body_; }

  private:
    std::string body_;
    std::size_t n_cols_;
    std::size_t n_rows_ = 0;
};

// Minimal static line plot, emitted as plain SVG 1.1 (no scripts).  Series
// are drawn as polylines in data coordinates mapped to a fixed viewport;
// axes get a handful of labeled ticks.
class LinePlot {
  public:
    LinePlot(std::string title, std::string x_label, std::string y_label);

    void add_series(std::string name, const std::vector<double>& x,
                    const std::vector<double>& y, std::string color, bool dashed = false);

    std::string render() const;

  private:
    struct Series {
        std::string name;
        std::vector<double> x;
        std::vector<double> y;
        std::string color;
        bool dashed;
    };
    std::string title_, x_label_, y_label_;
    std::vector<Series> series_;
};

} // namespace agebif
