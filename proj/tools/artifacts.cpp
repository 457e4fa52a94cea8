#include "artifacts.hpp"

#include <unistd.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace seglab::cli {

void OutputSet::add(std::filesystem::path path, std::string content) {
    files_.emplace_back(std::move(path), std::move(content));
}

void OutputSet::commit() const {
    namespace fs = std::filesystem;
    std::vector<fs::path> staged;
    auto discard = [&] {
        std::error_code ec;
        for (const auto& t : staged) fs::remove(t, ec);
    };
    try {
        for (const auto& [path, content] : files_) {
            if (path.has_parent_path()) fs::create_directories(path.parent_path());
            fs::path tmp = path;
            tmp += ".tmp-" + std::to_string(::getpid());
            staged.push_back(tmp);
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            out << content;
            out.close();
            if (!out) throw std::runtime_error("cannot write " + tmp.string());
        }
        for (std::size_t i = 0; i < files_.size(); ++i) fs::rename(staged[i], files_[i].first);
    } catch (const fs::filesystem_error& e) {
        discard();
        throw std::runtime_error(e.what());
    } catch (...) {
        discard();
        throw;
    }
}

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

std::string num(const std::optional<double>& v) { return v ? num(*v) : std::string(); }

namespace {

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

constexpr const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

}  // namespace

std::string line_chart(const std::string& title, const std::string& xLabel, const std::string& yLabel,
                       const std::vector<Series>& series, double yMax) {
    const double w = 640, h = 400, left = 60, right = 150, top = 40, bottom = 50;
    const double pw = w - left - right, ph = h - top - bottom;
    double xMin = 0, xMax = 1;
    bool first = true;
    for (const auto& s : series)
        for (const auto& [x, y] : s.points) {
            if (first) xMin = xMax = x, first = false;
            xMin = std::min(xMin, x);
            xMax = std::max(xMax, x);
        }
    if (xMax == xMin) xMax = xMin + 1;
    if (yMax <= 0) yMax = 1;
    auto px = [&](double x) { return left + (x - xMin) / (xMax - xMin) * pw; };
    auto py = [&](double y) { return top + ph - std::clamp(y / yMax, 0.0, 1.0) * ph; };

    std::string svg;
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%g\" height=\"%g\" font-family=\"sans-serif\" "
                  "font-size=\"12\">\n",
                  w, h);
    svg += buf;
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    std::snprintf(buf, sizeof buf, "<text x=\"%g\" y=\"20\" font-size=\"14\">", left);
    svg += buf + escape(title) + "</text>\n";
    std::snprintf(buf, sizeof buf,
                  "<path d=\"M%g %g V%g H%g\" fill=\"none\" stroke=\"black\"/>\n", left, top, top + ph, left + pw);
    svg += buf;
    for (int i = 0; i <= 4; ++i) {
        const double y = yMax * i / 4;
        std::snprintf(buf, sizeof buf, "<text x=\"%g\" y=\"%g\" text-anchor=\"end\">%g</text>\n", left - 6,
                      py(y) + 4, y);
        svg += buf;
        const double x = xMin + (xMax - xMin) * i / 4;
        std::snprintf(buf, sizeof buf, "<text x=\"%g\" y=\"%g\" text-anchor=\"middle\">%g</text>\n", px(x),
                      top + ph + 16, x);
        svg += buf;
    }
    std::snprintf(buf, sizeof buf, "<text x=\"%g\" y=\"%g\" text-anchor=\"middle\">", left + pw / 2, h - 10);
    svg += buf + escape(xLabel) + "</text>\n";
    std::snprintf(buf, sizeof buf, "<text transform=\"translate(16 %g) rotate(-90)\" text-anchor=\"middle\">",
                  top + ph / 2);
    svg += buf + escape(yLabel) + "</text>\n";

    for (std::size_t i = 0; i < series.size(); ++i) {
        const char* color = kPalette[i % std::size(kPalette)];
        std::string pts;
        for (const auto& [x, y] : series[i].points) {
            std::snprintf(buf, sizeof buf, "%.2f,%.2f ", px(x), py(y));
            pts += buf;
        }
        std::snprintf(buf, sizeof buf, "<polyline fill=\"none\" stroke=\"%s\" stroke-width=\"1.5\" points=\"", color);
        svg += buf + pts + "\"/>\n";
        if (i < 20) {
            const double ly = top + 14.0 * static_cast<double>(i);
            std::snprintf(buf, sizeof buf,
                          "<rect x=\"%g\" y=\"%g\" width=\"10\" height=\"10\" fill=\"%s\"/><text x=\"%g\" y=\"%g\">",
                          left + pw + 12, ly, color, left + pw + 26, ly + 9);
            svg += buf + escape(series[i].label) + "</text>\n";
        }
    }
    svg += "</svg>\n";
    return svg;
}

}  // namespace seglab::cli
