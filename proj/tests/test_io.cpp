#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "agebif/errors.hpp"
#include "agebif/io.hpp"

using namespace agebif;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path fresh_dir(const char* tag) {
    const fs::path d = fs::temp_directory_path() / (std::string("agebif_io_") + tag);
    fs::remove_all(d);
    return d;
}

} // namespace

TEST_CASE("format_double round-trips exactly") {
    const double samples[] = {0.0,
                              1.0,
                              -1.0,
                              1.0 / 3.0,
                              3.141592653589793,
                              1e-308,
                              -2.2250738585072014e-308,
                              1.7976931348623157e308,
                              5.889911161520364,
                              0.1,
                              -0.1,
                              1234567890123456.75,
                              6.02e23};
    for (double x : samples) {
        const std::string s = format_double(x);
        CHECK(std::strtod(s.c_str(), nullptr) == x);
    }
    CHECK(format_double(2.0) == "2");
    CHECK(format_double(0.0) == "0");
}

TEST_CASE("csv table renders header and rows with LF endings") {
    CsvTable t({"a", "b", "c"});
    t.add_row({"x", "1", ""});
    t.add_numeric_row({0.5, -1.0, 3.0});
    CHECK(t.rows() == 2);
    CHECK(t.str() == "a,b,c\nx,1,\n0.5,-1,3\n");
    CHECK(t.str().find('\r') == std::string::npos);
}

TEST_CASE("csv table rejects malformed rows and cells") {
    CsvTable t({"a", "b"});
    CHECK_THROWS_AS(t.add_row({"only-one"}), InvalidArgument);
    CHECK_THROWS_AS(t.add_row({"x", "has,comma"}), InvalidArgument);
    CHECK_THROWS_AS(t.add_row({"x", "has\"quote"}), InvalidArgument);
    CHECK_THROWS_AS(t.add_row({"x", "has\nnewline"}), InvalidArgument);
    CHECK_THROWS_AS(t.add_numeric_row({1.0}), InvalidArgument);
    CHECK(t.rows() == 0);
}

TEST_CASE("atomic write creates parents, overwrites, and leaves no temp file") {
    const fs::path dir = fresh_dir("atomic");
    const fs::path p = dir / "sub" / "f.txt";
    write_file_atomic(p, "first\n");
    CHECK(slurp(p) == "first\n");
    write_file_atomic(p, "second\n");
    CHECK(slurp(p) == "second\n");

    std::size_t entries = 0;
    for (const auto& e : fs::directory_iterator(p.parent_path())) {
        (void)e;
        ++entries;
    }
    CHECK(entries == 1);
    fs::remove_all(dir);
}

TEST_CASE("line plot emits static svg 1.1 with the declared series") {
    LinePlot plot("title with <angle> & amp", "time", "norm");
    plot.add_series("solid one", {0.0, 1.0, 2.0}, {1.0, 4.0, 2.0}, "#c0392b");
    plot.add_series("dashed two", {0.0, 1.0, 2.0}, {2.0, 1.0, 3.0}, "#2471a3", true);
    const std::string svg = plot.render();

    CHECK(svg.rfind("<?xml", 0) == 0);
    CHECK(svg.find("xmlns=\"http://www.w3.org/2000/svg\"") != std::string::npos);
    CHECK(svg.find("version=\"1.1\"") != std::string::npos);
    CHECK(svg.find("<script") == std::string::npos);
    CHECK(svg.find("<polyline") != std::string::npos);
    CHECK(svg.find("stroke-dasharray") != std::string::npos);
    CHECK(svg.find("#c0392b") != std::string::npos);
    CHECK(svg.find("title with &lt;angle&gt; &amp; amp") != std::string::npos);
    CHECK(svg.find("<angle>") == std::string::npos);
    CHECK(svg.find("</svg>") != std::string::npos);

    // identical inputs -> identical bytes
    CHECK(plot.render() == svg);
}

TEST_CASE("line plot tolerates degenerate and non-finite data") {
    LinePlot plot("flat", "x", "y");
    plot.add_series("constant", {1.0, 2.0}, {5.0, 5.0}, "#000000");
    const double nan = std::nan("");
    plot.add_series("gappy", {0.0, 1.0, 2.0}, {1.0, nan, 2.0}, "#333333");
    const std::string svg = plot.render();
    CHECK(svg.find("nan") == std::string::npos);
    CHECK(svg.find("<polyline") != std::string::npos);

    LinePlot empty("empty", "x", "y");
    CHECK(empty.render().find("</svg>") != std::string::npos);

    LinePlot bad("bad", "x", "y");
    CHECK_THROWS_AS(bad.add_series("mismatch", {1.0}, {1.0, 2.0}, "#000000"), InvalidArgument);
}
