// artifacts.hpp - output files for the command line tool.
#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace seglab::cli {

/// Files staged in memory and written together. Nothing appears on disk
/// unless commit() gets through every file.
class OutputSet {
public:
    void add(std::filesystem::path path, std::string content);
    bool empty() const noexcept { return files_.empty(); }
    const std::vector<std::pair<std::filesystem::path, std::string>>& files() const noexcept { return files_; }

    /// Writes each file to a temporary sibling, then renames them all into place.
    /// On failure the temporaries are removed and std::runtime_error is thrown.
    void commit() const;

private:
    std::vector<std::pair<std::filesystem::path, std::string>> files_;
};

/// Six decimals, "" for missing values.
std::string num(double v);
std::string num(const std::optional<double>& v);

struct Series {
    std::string label;
    std::vector<std::pair<double, double>> points;
};

/// Plain polyline chart, no dependencies. y runs 0..yMax.
std::string line_chart(const std::string& title, const std::string& xLabel, const std::string& yLabel,
                       const std::vector<Series>& series, double yMax);

}  // namespace seglab::cli
