#include "sramage/render.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace sramage {

namespace {

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

constexpr uint8_t kSentinelShade = 128;

}

BitmapGeometry bitmap_geometry(size_t num_values) {
    if (num_values == 0) throw InvalidArgumentError("bitmap_geometry: no values");
    BitmapGeometry g;
    g.width = static_cast<size_t>(std::ceil(std::sqrt(static_cast<double>(num_values))));
    g.height = (num_values + g.width - 1) / g.width;
    g.sentinel_cells = g.width * g.height - num_values;
    return g;
}

void render_bitmap(const std::vector<double>& values, double nominal_max, BitmapMode mode,
                   const std::string& path, const ReproStanza& repro) {
    if (nominal_max <= 0.0) throw InvalidArgumentError("render_bitmap: bad nominal_max");
    const BitmapGeometry g = bitmap_geometry(values.size());

    std::vector<uint8_t> pixels(g.width * g.height, kSentinelShade);
    const double scale = 255.0 / nominal_max;
    for (size_t i = 0; i < values.size(); ++i) {
        const double v = std::clamp(values[i] * scale, 0.0, 255.0);
        pixels[i] = static_cast<uint8_t>(std::lround(v));
    }
    if (mode == BitmapMode::row_ranked) {
        for (size_t r = 0; r < g.height; ++r) {
            const size_t begin = r * g.width;
            const size_t data_end = std::min(begin + g.width, values.size());
            if (begin < data_end)
                std::sort(pixels.begin() + static_cast<ptrdiff_t>(begin),
                          pixels.begin() + static_cast<ptrdiff_t>(data_end));
        }
    }

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("render_bitmap: cannot open for writing: " + path);
    out << "P5\n" << repro.comment_line() << "\n" << g.width << " " << g.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(pixels.data()),
              static_cast<std::streamsize>(pixels.size()));
    if (!out) throw IoError("render_bitmap: write failed: " + path);
}

void render_bitmap(const P1Map& map, BitmapMode mode, const std::string& path,
                   const ReproStanza& repro) {
    render_bitmap(map.values(), 1.0, mode, path, repro);
}

void render_bitmap(const InstabilityMap& map, BitmapMode mode, const std::string& path,
                   const ReproStanza& repro) {
    render_bitmap(map.values, 0.5, mode, path, repro);
}

namespace {

bool shared_x(const std::vector<XySeries>& series) {
    for (size_t i = 1; i < series.size(); ++i)
        if (series[i].x != series[0].x) return false;
    return true;
}

void write_svg(const std::vector<XySeries>& series, const std::optional<FitLine>& fit,
               const std::string& path, const ReproStanza& repro) {
    const int w = 640, h = 420, margin = 50;

    double xmin = 0.0, xmax = 1.0, ymin = 0.0, ymax = 1.0;
    bool any = false;
    for (const auto& s : series) {
        for (size_t i = 0; i < s.x.size(); ++i) {
            if (!any) {
                xmin = xmax = s.x[i];
                ymin = ymax = s.y[i];
                any = true;
            } else {
                xmin = std::min(xmin, s.x[i]);
                xmax = std::max(xmax, s.x[i]);
                ymin = std::min(ymin, s.y[i]);
                ymax = std::max(ymax, s.y[i]);
            }
        }
    }
    if (xmax == xmin) xmax = xmin + 1.0;
    if (ymax == ymin) ymax = ymin + 1.0;

    auto px = [&](double x) {
        return margin + (x - xmin) / (xmax - xmin) * (w - 2 * margin);
    };
    auto py = [&](double y) {
        return h - margin - (y - ymin) / (ymax - ymin) * (h - 2 * margin);
    };

    static const char* kColors[] = {"#1f6fb2", "#d1495b", "#3a9d23", "#8d5bd1", "#c78a00"};

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("render_xy: cannot open for writing: " + path);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
        << "\">\n";
    out << "<!-- " << repro.comment_line() << " -->\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<line x1=\"" << margin << "\" y1=\"" << h - margin << "\" x2=\"" << w - margin
        << "\" y2=\"" << h - margin << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << margin << "\" y1=\"" << margin << "\" x2=\"" << margin << "\" y2=\""
        << h - margin << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << margin << "\" y=\"" << h - margin + 30 << "\" font-size=\"11\">"
        << format_double(xmin) << "</text>\n";
    out << "<text x=\"" << w - margin - 40 << "\" y=\"" << h - margin + 30
        << "\" font-size=\"11\">" << format_double(xmax) << "</text>\n";
    out << "<text x=\"4\" y=\"" << h - margin << "\" font-size=\"11\">" << format_double(ymin)
        << "</text>\n";
    out << "<text x=\"4\" y=\"" << margin << "\" font-size=\"11\">" << format_double(ymax)
        << "</text>\n";

    for (size_t s = 0; s < series.size(); ++s) {
        const char* color = kColors[s % 5];
        if (series[s].x.size() > 1) {
            out << "<polyline fill=\"none\" stroke=\"" << color << "\" points=\"";
            for (size_t i = 0; i < series[s].x.size(); ++i)
                out << px(series[s].x[i]) << "," << py(series[s].y[i]) << " ";
            out << "\"/>\n";
        }
        for (size_t i = 0; i < series[s].x.size(); ++i)
            out << "<circle cx=\"" << px(series[s].x[i]) << "\" cy=\"" << py(series[s].y[i])
                << "\" r=\"2\" fill=\"" << color << "\"/>\n";
        out << "<text x=\"" << w - margin + 4 << "\" y=\"" << margin + 14 * (s + 1)
            << "\" font-size=\"11\" fill=\"" << color << "\">" << series[s].name << "</text>\n";
    }
    if (fit) {
        out << "<line x1=\"" << px(xmin) << "\" y1=\"" << py(fit->intercept + fit->slope * xmin)
            << "\" x2=\"" << px(xmax) << "\" y2=\"" << py(fit->intercept + fit->slope * xmax)
            << "\" stroke=\"black\" stroke-dasharray=\"4 3\"/>\n";
    }
    out << "</svg>\n";
    if (!out) throw IoError("render_xy: write failed: " + path);
}

}

void render_xy(const std::vector<XySeries>& series, const std::optional<FitLine>& fit,
               const std::string& base_path, const ReproStanza& repro) {
    if (series.empty()) throw InvalidArgumentError("render_xy: no series");
    for (const auto& s : series) {
        if (s.x.size() != s.y.size())
            throw InvalidArgumentError("render_xy: x/y length mismatch in series " + s.name);
        if (s.name.find_first_of(",\n") != std::string::npos)
            throw InvalidArgumentError("render_xy: series name contains a delimiter");
    }

    const std::string csv_path = base_path + ".csv";
    std::ofstream out(csv_path, std::ios::binary);
    if (!out) throw IoError("render_xy: cannot open for writing: " + csv_path);
    out << repro.comment_line() << "\n";

    if (shared_x(series)) {
        out << "x";
        for (const auto& s : series) out << "," << s.name;
        out << "\n";
        for (size_t i = 0; i < series[0].x.size(); ++i) {
            out << format_double(series[0].x[i]);
            for (const auto& s : series) out << "," << format_double(s.y[i]);
            out << "\n";
        }
    } else {
        out << "series,x,y\n";
        for (const auto& s : series)
            for (size_t i = 0; i < s.x.size(); ++i)
                out << s.name << "," << format_double(s.x[i]) << "," << format_double(s.y[i])
                    << "\n";
    }
    if (fit)
        out << "# fit slope=" << format_double(fit->slope)
            << " intercept=" << format_double(fit->intercept) << "\n";
    if (!out) throw IoError("render_xy: write failed: " + csv_path);
    out.close();

    write_svg(series, fit, base_path + ".svg", repro);
}

std::vector<XySeries> parse_xy_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("parse_xy_csv: cannot open: " + path);

    auto split_line = [](const std::string& line) {
        std::vector<std::string> fields;
        std::string field;
        std::stringstream ss(line);
        while (std::getline(ss, field, ',')) fields.push_back(field);
        return fields;
    };

    std::string line;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        header = split_line(line);
        break;
    }
    if (header.empty()) return {};

    std::vector<XySeries> series;
    if (header[0] == "series") {
        std::map<std::string, size_t> index;
        while (std::getline(in, line)) {
            if (line.empty() || line[0] == '#') continue;
            const auto f = split_line(line);
            if (f.size() != 3) throw FormatError("parse_xy_csv: bad long-format row");
            auto [it, fresh] = index.try_emplace(f[0], series.size());
            if (fresh) series.push_back({f[0], {}, {}});
            series[it->second].x.push_back(std::stod(f[1]));
            series[it->second].y.push_back(std::stod(f[2]));
        }
    } else {
        for (size_t c = 1; c < header.size(); ++c) series.push_back({header[c], {}, {}});
        while (std::getline(in, line)) {
            if (line.empty() || line[0] == '#') continue;
            const auto f = split_line(line);
            if (f.size() != header.size()) throw FormatError("parse_xy_csv: bad wide-format row");
            const double x = std::stod(f[0]);
            for (size_t c = 1; c < f.size(); ++c) {
                series[c - 1].x.push_back(x);
                series[c - 1].y.push_back(std::stod(f[c]));
            }
        }
    }
    return series;
}

}
