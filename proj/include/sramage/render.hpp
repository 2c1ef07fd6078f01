#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sramage/bitcore.hpp"
#include "sramage/repro.hpp"

namespace sramage {

enum class BitmapMode { unsorted, row_ranked };

// Geometry of the near-square presentation grid: width = ceil(sqrt(n)),
// height = ceil(n / width). The layout is presentation-only and has no
// relation to the physical memory arrangement.
struct BitmapGeometry {
    size_t width = 0;
    size_t height = 0;
    size_t sentinel_cells = 0;  // trailing pad cells, drawn mid-gray
};

BitmapGeometry bitmap_geometry(size_t num_values);

// Binary portable graymap (P5): 0 maps to black, nominal_max to white,
// pad cells to mid-gray. Row-ranked mode sorts each row's data cells
// ascending. nominal_max is 1.0 for P1 maps and 0.5 for instability maps.
void render_bitmap(const std::vector<double>& values, double nominal_max, BitmapMode mode,
                   const std::string& path, const ReproStanza& repro);

void render_bitmap(const P1Map& map, BitmapMode mode, const std::string& path,
                   const ReproStanza& repro);
void render_bitmap(const InstabilityMap& map, BitmapMode mode, const std::string& path,
                   const ReproStanza& repro);

struct XySeries {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
};

struct FitLine {
    double slope = 0.0;
    double intercept = 0.0;
};

// Emits the data table at <base>.csv (always; lossless) and a simple
// standalone SVG plot at <base>.svg (cosmetic). When every series shares
// the same x vector the table is wide (x,name1,name2,...), otherwise long
// (series,x,y). The fit line, when given, lands in a '# fit ...' footer.
void render_xy(const std::vector<XySeries>& series, const std::optional<FitLine>& fit,
               const std::string& base_path, const ReproStanza& repro);

// Re-parses a table written by render_xy (round-trip check and tooling).
std::vector<XySeries> parse_xy_csv(const std::string& path);

}
