#pragma once

#include "reage/core/error.hpp"
#include "reage/datamodel/png_io.hpp"
#include "reage/metrics/evaluate.hpp"

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace reage::cli {

struct MethodRows {
    std::string label;
    std::vector<metrics::EvalRow> rows;
};

inline std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(item);
    if (!s.empty() && s.back() == sep) out.emplace_back();
    return out;
}

/// Reads a rows.csv written by evaluate_corpus.
inline std::vector<metrics::EvalRow> read_rows_csv(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path.string());
    std::string line;
    std::getline(in, line);
    if (line != metrics::EvalReport::kCsvHeader) throw IoError(path.string() + " is not an evaluation rows.csv");
    std::vector<metrics::EvalRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = split(line, ',');
        if (f.size() != 11) throw IoError(path.string() + ": malformed row '" + line + "'");
        metrics::EvalRow r;
        try {
            r.subject = f[0];
            r.input_age = std::stod(f[1]);
            r.target_age = std::stod(f[2]);
            r.frames = std::stoul(f[3]);
            r.ok = f[4] == "ok";
            r.trwc = std::stod(f[5]);
            r.trwc_skip_fraction = std::stod(f[6]);
            r.t_age = std::stod(f[7]);
            r.mae = std::stod(f[8]);
            r.identity = std::stod(f[9]);
            r.error = f[10];
        } catch (const std::exception&) {
            throw IoError(path.string() + ": malformed row '" + line + "'");
        }
        rows.push_back(r);
    }
    return rows;
}

struct ReportCell {
    std::size_t rows = 0;
    double mae = 0, trwc = 0, t_age = 0;
};

/// target age -> one cell per method (in input order).
inline std::map<double, std::vector<ReportCell>> tabulate(const std::vector<MethodRows>& methods)
{
    std::map<double, std::vector<ReportCell>> table;
    for (std::size_t m = 0; m < methods.size(); ++m)
        for (const auto& r : methods[m].rows) {
            auto& cells = table[r.target_age];
            cells.resize(methods.size());
            if (!r.ok) continue;
            auto& c = cells[m];
            ++c.rows;
            c.mae += r.mae;
            c.trwc += r.trwc;
            c.t_age += r.t_age;
        }
    for (auto& [age, cells] : table)
        for (auto& c : cells)
            if (c.rows) {
                c.mae /= c.rows;
                c.trwc /= c.rows;
                c.t_age /= c.rows;
            }
    return table;
}

// 3x5 glyphs for axis labels, one row per 3-bit mask.
inline const std::array<std::uint8_t, 5>* glyph(char ch)
{
    static const std::map<char, std::array<std::uint8_t, 5>> font{
        {'0', {7, 5, 5, 5, 7}}, {'1', {2, 6, 2, 2, 7}}, {'2', {7, 1, 7, 4, 7}}, {'3', {7, 1, 7, 1, 7}},
        {'4', {5, 5, 7, 1, 1}}, {'5', {7, 4, 7, 1, 7}}, {'6', {7, 4, 7, 5, 7}}, {'7', {7, 1, 1, 1, 1}},
        {'8', {7, 5, 7, 5, 7}}, {'9', {7, 5, 7, 1, 7}}, {'.', {0, 0, 0, 0, 2}}, {'-', {0, 0, 7, 0, 0}}};
    const auto it = font.find(ch);
    return it == font.end() ? nullptr : &it->second;
}

class Canvas {
public:
    Canvas(int w, int h) : img_{w, h, std::vector<std::uint8_t>(static_cast<std::size_t>(w) * h * 3, 255)} {}

    void fill(int x0, int y0, int x1, int y1, std::array<std::uint8_t, 3> c)
    {
        for (int y = std::max(0, y0); y < std::min(img_.height, y1); ++y)
            for (int x = std::max(0, x0); x < std::min(img_.width, x1); ++x)
                for (int k = 0; k < 3; ++k) img_.pixels[(static_cast<std::size_t>(y) * img_.width + x) * 3 + k] = c[k];
    }

    void text(int x, int y, const std::string& s, int scale = 2)
    {
        for (char ch : s) {
            if (const auto* g = glyph(ch))
                for (int r = 0; r < 5; ++r)
                    for (int b = 0; b < 3; ++b)
                        if ((*g)[r] & (4 >> b))
                            fill(x + b * scale, y + r * scale, x + (b + 1) * scale, y + (r + 1) * scale, {0, 0, 0});
            x += 4 * scale;
        }
    }

    static int text_width(const std::string& s, int scale = 2) { return static_cast<int>(s.size()) * 4 * scale; }
    const Rgb8Image& image() const { return img_; }

private:
    Rgb8Image img_;
};

inline std::string short_number(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, v >= 10.0 || v == 0.0 ? "%.0f" : "%.2f", v);
    return buf;
}

/// Grouped bars: one group per target age, one bar per method. Group labels
/// are the target ages; the top-left label is the axis maximum.
inline Rgb8Image bar_chart(const std::map<double, std::vector<ReportCell>>& table, std::size_t methods,
                           double ReportCell::*metric)
{
    static constexpr std::array<std::array<std::uint8_t, 3>, 6> palette{
        {{31, 119, 180}, {255, 127, 14}, {44, 160, 44}, {214, 39, 40}, {148, 103, 189}, {140, 86, 75}}};
    const int w = 640, h = 360, left = 56, right = 16, top = 24, bottom = 40;
    Canvas cv(w, h);
    double vmax = 0.0;
    for (const auto& [age, cells] : table)
        for (const auto& c : cells) vmax = std::max(vmax, c.*metric);
    vmax = vmax > 0.0 ? vmax * 1.1 : 1.0;

    const int plot_w = w - left - right, plot_h = h - top - bottom;
    const int groups = std::max<int>(1, static_cast<int>(table.size()));
    const double gw = static_cast<double>(plot_w) / groups;
    const double bw = gw * 0.8 / static_cast<double>(std::max<std::size_t>(1, methods));
    int g = 0;
    for (const auto& [age, cells] : table) {
        const int gx = left + static_cast<int>(g * gw + gw * 0.1);
        for (std::size_t m = 0; m < cells.size(); ++m) {
            const int bh = static_cast<int>(std::lround(plot_h * (cells[m].*metric) / vmax));
            const int x0 = gx + static_cast<int>(m * bw);
            cv.fill(x0, top + plot_h - bh, x0 + std::max(1, static_cast<int>(bw) - 2), top + plot_h, palette[m % palette.size()]);
        }
        const std::string label = short_number(age);
        cv.text(left + static_cast<int>(g * gw + gw / 2) - Canvas::text_width(label) / 2, top + plot_h + 12, label);
        ++g;
    }
    cv.fill(left, top, left + 2, top + plot_h, {0, 0, 0});
    cv.fill(left, top + plot_h, left + plot_w, top + plot_h + 2, {0, 0, 0});
    cv.text(4, top, short_number(vmax));
    cv.text(4, top + plot_h - 10, "0");
    for (std::size_t m = 0; m < methods; ++m)
        cv.fill(w - right - 14 * static_cast<int>(methods - m), 4, w - right - 14 * static_cast<int>(methods - m) + 10, 14,
                palette[m % palette.size()]);
    return cv.image();
}

/// Writes report.csv (long form), <metric>_by_target.csv (one column per
/// method) and <metric>_by_target.png for mae, trwc and t_age.
inline void write_report(const std::vector<MethodRows>& methods, const std::filesystem::path& out)
{
    if (methods.empty()) throw ConfigError("report needs at least one evaluation directory");
    std::filesystem::create_directories(out);
    const auto table = tabulate(methods);
    char buf[256];
    {
        std::ofstream f(out / "report.csv", std::ios::binary);
        f << "target_age,method,rows,mae,trwc,t_age\n";
        for (const auto& [age, cells] : table)
            for (std::size_t m = 0; m < methods.size(); ++m) {
                const auto& c = cells[m];
                std::snprintf(buf, sizeof buf, "%.9g,%s,%zu,%.9g,%.9g,%.9g\n", age, methods[m].label.c_str(), c.rows, c.mae,
                              c.trwc, c.t_age);
                f << buf;
            }
    }
    const std::array<std::pair<const char*, double ReportCell::*>, 3> metrics{
        {{"mae", &ReportCell::mae}, {"trwc", &ReportCell::trwc}, {"t_age", &ReportCell::t_age}}};
    for (const auto& [name, field] : metrics) {
        std::ofstream f(out / (std::string(name) + "_by_target.csv"), std::ios::binary);
        f << "target_age";
        for (const auto& m : methods) f << ',' << m.label;
        f << '\n';
        for (const auto& [age, cells] : table) {
            std::snprintf(buf, sizeof buf, "%.9g", age);
            f << buf;
            for (const auto& c : cells) {
                std::snprintf(buf, sizeof buf, ",%.9g", c.*field);
                f << buf;
            }
            f << '\n';
        }
        write_png(out / (std::string(name) + "_by_target.png"), bar_chart(table, methods.size(), field));
    }
}

} // namespace reage::cli
