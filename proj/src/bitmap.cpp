#include "psane/bitmap.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace psane::bitmap {

namespace {

std::string fmt_double(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_bytes(const std::filesystem::path& path, const Grid<std::uint8_t>& bytes, const WorkspaceSpec& spec,
                 const std::string& layer, double lo, double hi, double lipschitz_bound)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << "P5\n# psane-grid 1\n"
        << "# workspace " << fmt_double(spec.width_m) << ' ' << fmt_double(spec.height_m) << ' '
        << fmt_double(spec.resolution) << ' ' << fmt_double(spec.origin.x) << ' ' << fmt_double(spec.origin.y) << '\n'
        << "# layer " << (layer.empty() ? "unnamed" : layer) << '\n'
        << "# scale " << fmt_double(lo) << ' ' << fmt_double(hi) << '\n'
        << "# lipschitz_bound " << fmt_double(lipschitz_bound) << '\n'
        << bytes.nx() << ' ' << bytes.ny() << "\n255\n";
    for (int iy = bytes.ny() - 1; iy >= 0; --iy)
        for (int ix = 0; ix < bytes.nx(); ++ix) out.put(static_cast<char>(bytes(ix, iy)));
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace

ScalarGrid GridImage::values() const
{
    ScalarGrid g(bytes.nx(), bytes.ny());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = lo + (hi - lo) * bytes[i] / 255.0;
    return g;
}

void write_grid(const std::filesystem::path& path, const ScalarGrid& grid, const WorkspaceSpec& spec,
                const std::string& layer, double lo, double hi, double lipschitz_bound)
{
    if (!(hi > lo)) throw DomainError("bitmap scale needs hi > lo");
    Grid<std::uint8_t> bytes(grid.nx(), grid.ny());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double t = std::clamp((grid[i] - lo) / (hi - lo), 0.0, 1.0);
        bytes[i] = static_cast<std::uint8_t>(std::lround(t * 255.0));
    }
    write_bytes(path, bytes, spec, layer, lo, hi, lipschitz_bound);
}

void write_mask(const std::filesystem::path& path, const Mask& mask, const WorkspaceSpec& spec,
                const std::string& layer)
{
    Grid<std::uint8_t> bytes(mask.nx(), mask.ny());
    for (std::size_t i = 0; i < mask.size(); ++i) bytes[i] = mask[i] ? 255 : 0;
    write_bytes(path, bytes, spec, layer, 0.0, 1.0, 0.0);
}

GridImage read_grid(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    auto fail = [&](const std::string& what) { return IoError("'" + path.string() + "': " + what); };

    std::string line;
    if (!std::getline(in, line) || line != "P5") throw fail("not a binary PGM");

    GridImage img;
    bool have_workspace = false;
    int nx = 0;
    int ny = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] != '#') {
            std::istringstream dims(line);
            if (!(dims >> nx >> ny)) throw fail("bad dimensions");
            break;
        }
        std::istringstream ss(line.substr(1));
        std::string key;
        ss >> key;
        if (key == "workspace") {
            ss >> img.spec.width_m >> img.spec.height_m >> img.spec.resolution >> img.spec.origin.x >> img.spec.origin.y;
            have_workspace = static_cast<bool>(ss);
        } else if (key == "layer") {
            ss >> img.layer;
        } else if (key == "scale") {
            ss >> img.lo >> img.hi;
        } else if (key == "lipschitz_bound") {
            ss >> img.lipschitz_bound;
        }
    }
    int maxval = 0;
    if (!(in >> maxval) || maxval != 255) throw fail("expected maxval 255");
    in.get();
    if (!have_workspace) throw fail("missing workspace header");
    if (nx != img.spec.nx() || ny != img.spec.ny()) throw fail("dimensions disagree with workspace header");

    img.bytes = Grid<std::uint8_t>(nx, ny);
    for (int iy = ny - 1; iy >= 0; --iy)
        for (int ix = 0; ix < nx; ++ix) {
            const int c = in.get();
            if (c == EOF) throw fail("truncated pixel data");
            img.bytes(ix, iy) = static_cast<std::uint8_t>(c);
        }
    return img;
}

void save_field(const std::filesystem::path& path, const terrain::SlipField& field)
{
    write_grid(path, field.grid, field.spec, "truth", 0.0, 1.0, field.lipschitz_bound);
}

terrain::SlipField load_field(const std::filesystem::path& path)
{
    const GridImage img = read_grid(path);
    terrain::SlipField field;
    field.spec = img.spec;
    field.grid = img.values();
    field.lipschitz_bound = img.lipschitz_bound;
    return field;
}

}  // namespace psane::bitmap
