#pragma once

// Portable grayscale bitmaps (binary PGM) carrying a textual header with the
// workspace geometry, so grids can be reloaded exactly onto their cells.
//
//   P5
//   # psane-grid 1
//   # workspace <width_m> <height_m> <resolution> <origin_x> <origin_y>
//   # layer <name>
//   # scale <lo> <hi>
//   # lipschitz_bound <value>
//   <nx> <ny>
//   255
//   <nx*ny bytes>
//
// Bytes are round(255 * (v - lo) / (hi - lo)), clamped; slip layers use
// lo = 0, hi = 1. Rows are written top (largest y) first so viewers show the
// map north-up; within a row x increases.

#include "psane/core.hpp"
#include "psane/terrain.hpp"

#include <filesystem>
#include <string>

namespace psane::bitmap {

struct GridImage {
    WorkspaceSpec spec;
    std::string layer;
    double lo = 0.0;
    double hi = 1.0;
    double lipschitz_bound = 0.0;
    Grid<std::uint8_t> bytes;

    /* Dequantized values, v = lo + byte / 255 * (hi - lo). */
    ScalarGrid values() const;
};

void write_grid(const std::filesystem::path& path, const ScalarGrid& grid, const WorkspaceSpec& spec,
                const std::string& layer, double lo = 0.0, double hi = 1.0, double lipschitz_bound = 0.0);
void write_mask(const std::filesystem::path& path, const Mask& mask, const WorkspaceSpec& spec,
                const std::string& layer);
/* Throws IoError on unreadable or malformed files. */
GridImage read_grid(const std::filesystem::path& path);

void save_field(const std::filesystem::path& path, const terrain::SlipField& field);
/* Loaded field values are quantized to 1/255. */
terrain::SlipField load_field(const std::filesystem::path& path);

}  // namespace psane::bitmap
