// helpers.hpp — shared fixture builders for the test suites.
#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "evobt/bar.hpp"

namespace evobt::test {

// A bar with all four prices equal, so every fill/validity edge is explicit.
inline Bar flat_bar(std::int64_t ts_min, double price, double volume = 100.0) {
    Bar b;
    b.ts_min = ts_min;
    b.open = b.high = b.low = b.close = price;
    b.volume = volume;
    return b;
}

inline BarSeries series_of_closes(const std::vector<double>& closes, std::int64_t t0 = 0) {
    BarSeries s;
    s.label = "fixture";
    for (std::size_t i = 0; i < closes.size(); ++i)
        s.bars.push_back(flat_bar(t0 + static_cast<std::int64_t>(i), closes[i]));
    return s;
}

inline std::filesystem::path tmp_file(const std::string& stem, const std::string& ext = ".tmp") {
    static std::mt19937_64 rng{std::random_device{}()};
    return std::filesystem::temp_directory_path() /
           (stem + "_" + std::to_string(rng()) + ext);
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

struct TmpDir {
    std::filesystem::path path;
    explicit TmpDir(const std::string& stem) : path(tmp_file(stem)) {
        std::filesystem::create_directories(path);
    }
    ~TmpDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    std::string str(const std::string& name) const { return (path / name).string(); }
};

}  // namespace evobt::test
