#include "psane/report.hpp"

#include "psane/bitmap.hpp"
#include "psane/scenario.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace psane::report {

namespace fs = std::filesystem;

namespace {

std::string num(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

/* Quotes a free-text field when it holds separators. */
std::string csv_text(const std::string& s)
{
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c == '\n' ? ' ' : c;
    }
    return out + "\"";
}

std::string epoch_tag(int epoch)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "epoch_%04d", epoch);
    return buf;
}

std::vector<std::string> split(const std::string& line, char sep)
{
    std::vector<std::string> out;
    std::string cur;
    std::istringstream ss(line);
    while (std::getline(ss, cur, sep)) out.push_back(cur);
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

using Rgb = std::array<std::uint8_t, 3>;

Rgb slip_color(double v)
{
    v = std::clamp(v, 0.0, 1.0);
    // green -> yellow -> red
    const double r = v < 0.5 ? 2.0 * v : 1.0;
    const double g = v < 0.5 ? 0.75 + 0.25 * (2.0 * v) : 2.0 * (1.0 - v);
    const double b = 0.15 * (1.0 - v);
    auto q = [](double c) { return static_cast<std::uint8_t>(std::lround(255.0 * std::clamp(c, 0.0, 1.0))); };
    return {q(0.25 + 0.75 * r), q(g * 0.85), q(b)};
}

class Canvas {
public:
    Canvas(int w, int h) : w_(w), h_(h), px_(static_cast<std::size_t>(w) * h * 3, 0) {}

    void set(int x, int y, Rgb c)
    {
        if (x < 0 || y < 0 || x >= w_ || y >= h_) return;
        std::uint8_t* p = &px_[(static_cast<std::size_t>(y) * w_ + x) * 3];
        p[0] = c[0];
        p[1] = c[1];
        p[2] = c[2];
    }

    void shade(int x, int y, double f)
    {
        if (x < 0 || y < 0 || x >= w_ || y >= h_) return;
        std::uint8_t* p = &px_[(static_cast<std::size_t>(y) * w_ + x) * 3];
        for (int k = 0; k < 3; ++k) p[k] = static_cast<std::uint8_t>(std::lround(p[k] * f));
    }

    void fill_rect(int x0, int y0, int x1, int y1, Rgb c)
    {
        for (int y = y0; y < y1; ++y)
            for (int x = x0; x < x1; ++x) set(x, y, c);
    }

    std::string ppm() const
    {
        std::string out = "P6\n" + std::to_string(w_) + " " + std::to_string(h_) + "\n255\n";
        out.append(reinterpret_cast<const char*>(px_.data()), px_.size());
        return out;
    }

private:
    int w_, h_;
    std::vector<std::uint8_t> px_;
};

struct TrajRow {
    double t;
    Vec2 p;
};

std::vector<TrajRow> read_trajectory(const fs::path& path)
{
    std::vector<TrajRow> rows;
    std::ifstream in(path);
    if (!in) return rows;
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
        const auto f = split(line, ',');
        if (f.size() < 3) continue;
        rows.push_back({std::stod(f[0]), {std::stod(f[1]), std::stod(f[2])}});
    }
    return rows;
}

}  // namespace

void write_file(const fs::path& path, const std::string& content)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << content;
    if (!out) throw IoError("write failed: " + path.string());
}

std::string events_csv(const sim::TrialResult& r)
{
    std::ostringstream os;
    os << "epoch,t,x,y,heading,subgoal_x,subgoal_y,safe_cells,frontier_cells,navigable,pareto_size,objective,"
          "g,p_e,v_goal,v_overall,coverage,empty_intersections,dataset_size,event\n";
    for (const auto& e : r.epochs) {
        os << e.epoch << ',' << num(e.t) << ',' << num(e.robot.x) << ',' << num(e.robot.y) << ',' << num(e.heading)
           << ',' << (e.subgoal ? num(e.subgoal->x) : "") << ',' << (e.subgoal ? num(e.subgoal->y) : "") << ','
           << e.safe_cells << ',' << e.frontier_cells << ',' << e.navigable << ',' << e.pareto_size << ','
           << e.objective << ',' << e.g << ',' << num(e.p_e) << ',' << num(e.v_goal) << ',' << num(e.v_overall)
           << ',' << num(e.coverage) << ',' << e.empty_intersections << ',' << e.dataset_size << ',' << e.event
           << '\n';
    }
    return os.str();
}

std::string trajectory_csv(const sim::TrialResult& r)
{
    std::ostringstream os;
    os << "t,x,y,s_true,in_safe_set,event\n";
    for (const auto& p : r.trajectory)
        os << num(p.t) << ',' << num(p.position.x) << ',' << num(p.position.y) << ',' << num(p.s_true) << ','
           << (p.in_safe_set ? 1 : 0) << ',' << p.event << '\n';
    return os.str();
}

std::string candidates_csv(const sim::TrialResult& r)
{
    std::ostringstream os;
    os << "epoch,ix,iy,x,y,g,p_e,v_goal,v_overall,pareto,chosen\n";
    for (const auto& c : r.candidates)
        os << c.epoch << ',' << c.cell.ix << ',' << c.cell.iy << ',' << num(c.location.x) << ','
           << num(c.location.y) << ',' << c.g << ',' << num(c.p_e) << ',' << num(c.v_goal) << ','
           << num(c.v_overall) << ',' << (c.pareto ? 1 : 0) << ',' << (c.chosen ? 1 : 0) << '\n';
    return os.str();
}

std::string coverage_csv(const sim::TrialMetrics& m)
{
    std::ostringstream os;
    os << "t,coverage\n";
    for (const auto& c : m.coverage) os << num(c.t) << ',' << num(c.ratio) << '\n';
    return os.str();
}

std::string summary_json(const sim::TrialResult& r)
{
    const auto& m = r.metrics;
    nlohmann::ordered_json j;
    j["name"] = r.config.name;
    j["strategy"] = frontier::to_string(r.config.strategy);
    j["environment_seed"] = r.config.environment.seed;
    j["outcome"] = sim::to_string(m.outcome);
    j["success"] = m.success;
    j["completion_time"] = m.completion_time;
    j["path_length"] = m.path_length;
    j["safety_violations"] = m.safety_violations;
    j["final_coverage"] = m.final_coverage;
    j["epochs"] = m.epochs;
    j["samples"] = m.samples;
    j["measurement_firings"] = m.measurement_firings;
    j["empty_intersections"] = m.empty_intersections;
    j["safe_set_shrinks"] = m.safe_set_shrinks;
    j["interval_widenings"] = m.interval_widenings;
    j["coverage_decreases"] = m.coverage_decreases;
    j["steps_outside_safe_set"] = m.steps_outside_safe_set;
    j["certified_cells"] = m.certified_cells;
    j["unsound_certified_cells"] = m.unsound_certified_cells;
    j["coverage_exceeds_one"] = m.coverage_exceeds_one;
    j["lipschitz"] = m.lipschitz;
    j["field_lipschitz_bound"] = r.truth.lipschitz_bound;
    return j.dump(2) + "\n";
}

std::string trials_csv(const std::vector<sim::TrialSummary>& trials)
{
    std::ostringstream os;
    os << "environment,strategy,seed,outcome,success,completion_time,path_length,final_coverage,"
          "safety_violations,epochs,samples,empty_intersections,error\n";
    for (const auto& t : trials) {
        const auto& m = t.metrics;
        os << t.environment << ',' << frontier::to_string(t.strategy) << ',' << t.seed << ','
           << sim::to_string(m.outcome) << ',' << (m.success ? 1 : 0) << ',' << num(m.completion_time) << ','
           << num(m.path_length) << ',' << num(m.final_coverage) << ',' << m.safety_violations << ',' << m.epochs
           << ',' << m.samples << ',' << m.empty_intersections << ',' << csv_text(t.error) << '\n';
    }
    return os.str();
}

bool is_completed_run(const fs::path& dir)
{
    std::error_code ec;
    return fs::exists(dir / "summary.json", ec);
}

void write_run(const fs::path& dir, const sim::TrialResult& r, bool force)
{
    if (is_completed_run(dir) && !force)
        throw IoError(dir.string() + " already holds a completed run (use --force to overwrite)");
    std::error_code ec;
    fs::remove(dir / "summary.json", ec);
    fs::remove_all(dir / "snapshots", ec);
    fs::remove_all(dir / "render", ec);
    fs::create_directories(dir / "snapshots", ec);
    if (ec) throw IoError("cannot create " + (dir / "snapshots").string() + ": " + ec.message());

    const WorkspaceSpec& spec = r.truth.spec;
    write_file(dir / "config.json", scenario::to_json(r.config));
    write_file(dir / "events.csv", events_csv(r));
    write_file(dir / "trajectory.csv", trajectory_csv(r));
    write_file(dir / "candidates.csv", candidates_csv(r));
    write_file(dir / "coverage.csv", coverage_csv(r.metrics));
    bitmap::save_field(dir / "truth.pgm", r.truth);

    std::ostringstream index;
    index << "epoch,t,mean,stddev,lower,upper,safe,blocked\n";
    const double sd_hi = r.config.gp.signal_std;
    for (const auto& s : r.snapshots) {
        const std::string tag = epoch_tag(s.epoch);
        const fs::path snap = dir / "snapshots";
        bitmap::write_grid(snap / (tag + "_mean.pgm"), s.mean, spec, "mean");
        bitmap::write_grid(snap / (tag + "_stddev.pgm"), s.stddev, spec, "stddev", 0.0, sd_hi);
        bitmap::write_grid(snap / (tag + "_lower.pgm"), s.lower, spec, "lower");
        bitmap::write_grid(snap / (tag + "_upper.pgm"), s.upper, spec, "upper");
        bitmap::write_mask(snap / (tag + "_safe.pgm"), s.safe, spec, "safe");
        bitmap::write_mask(snap / (tag + "_blocked.pgm"), s.blocked, spec, "blocked");
        index << s.epoch << ',' << num(s.t) << ',' << tag << "_mean.pgm," << tag << "_stddev.pgm," << tag
              << "_lower.pgm," << tag << "_upper.pgm," << tag << "_safe.pgm," << tag << "_blocked.pgm\n";
    }
    write_file(dir / "snapshots" / "index.csv", index.str());
    write_file(dir / "summary.json", summary_json(r));
}

std::string trial_dir_name(const sim::TrialSummary& t)
{
    return t.environment + "_" + frontier::to_string(t.strategy) + "_seed" + std::to_string(t.seed);
}

void write_batch_summary(const fs::path& dir, const sim::BatchResult& result)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    write_file(dir / "aggregate.csv", sim::aggregate_csv(result.aggregate));
    write_file(dir / "aggregate.txt", sim::aggregate_table(result.aggregate));
    write_file(dir / "trials.csv", trials_csv(result.trials));
}

RenderResult render_run(const fs::path& run_dir, int pixels_per_cell)
{
    if (!fs::exists(run_dir / "events.csv")) throw IoError("no run log in " + run_dir.string());
    const sim::ScenarioConfig config = scenario::load(run_dir / "config.json");
    const bitmap::GridImage truth_img = bitmap::read_grid(run_dir / "truth.pgm");
    const ScalarGrid truth = truth_img.values();
    const WorkspaceSpec& spec = truth_img.spec;
    const auto trajectory = read_trajectory(run_dir / "trajectory.csv");

    RenderResult result;
    std::ifstream index(run_dir / "snapshots" / "index.csv");
    if (!index) throw IoError("no snapshot index in " + run_dir.string());
    std::error_code ec;
    fs::create_directories(run_dir / "render", ec);
    if (ec) throw IoError("cannot create " + (run_dir / "render").string());

    const int k = std::max(1, pixels_per_cell);
    const int nx = spec.nx();
    const int ny = spec.ny();
    auto px_x = [&](double x) { return static_cast<int>(std::floor((x - spec.origin.x) / spec.resolution * k + 0.5 * k)); };
    auto px_y = [&](double y) {
        return ny * k - 1 - static_cast<int>(std::floor((y - spec.origin.y) / spec.resolution * k + 0.5 * k));
    };
    auto marker = [&](Canvas& c, Vec2 p, Rgb color) {
        const int cx = px_x(p.x), cy = px_y(p.y), r = std::max(2, k / 2);
        for (int dy = -r; dy <= r; ++dy)
            for (int dx = -r; dx <= r; ++dx)
                if (std::abs(dx) == r || std::abs(dy) == r || (dx == 0 || dy == 0)) c.set(cx + dx, cy + dy, color);
    };

    std::string line;
    std::getline(index, line);
    while (std::getline(index, line)) {
        const auto f = split(line, ',');
        if (f.size() < 8) {
            result.warnings.push_back("malformed snapshot index row: " + line);
            continue;
        }
        const int epoch = std::stoi(f[0]);
        const double t = std::stod(f[1]);
        Mask safe, blocked;
        try {
            const auto safe_img = bitmap::read_grid(run_dir / "snapshots" / f[6]);
            const auto blocked_img = bitmap::read_grid(run_dir / "snapshots" / f[7]);
            if (safe_img.bytes.nx() != nx || safe_img.bytes.ny() != ny || blocked_img.bytes.nx() != nx ||
                blocked_img.bytes.ny() != ny)
                throw IoError("snapshot grid does not match the truth grid");
            safe = Mask(nx, ny, 0);
            blocked = Mask(nx, ny, 0);
            for (std::size_t i = 0; i < safe.size(); ++i) {
                safe[i] = safe_img.bytes[i] >= 128;
                blocked[i] = blocked_img.bytes[i] >= 128;
            }
        } catch (const IoError& e) {
            result.warnings.push_back("epoch " + std::to_string(epoch) + ": " + e.what());
            continue;
        }

        Canvas canvas(nx * k, ny * k);
        for (int iy = 0; iy < ny; ++iy)
            for (int ix = 0; ix < nx; ++ix) {
                const int x0 = ix * k;
                const int y0 = (ny - 1 - iy) * k;
                canvas.fill_rect(x0, y0, x0 + k, y0 + k, slip_color(truth(ix, iy)));
                if (!safe(ix, iy)) {
                    for (int y = y0; y < y0 + k; ++y)
                        for (int x = x0; x < x0 + k; ++x) canvas.shade(x, y, 0.55);
                } else if (blocked(ix, iy)) {
                    for (int y = y0; y < y0 + k; ++y)
                        for (int x = x0; x < x0 + k; ++x)
                            if ((x + y) % 4 == 0) canvas.shade(x, y, 0.6);
                }
            }
        // Safe-set contour: edges between a safe cell and an in-bounds unsafe one.
        const Rgb edge{255, 255, 255};
        for (int iy = 0; iy < ny; ++iy)
            for (int ix = 0; ix < nx; ++ix) {
                if (!safe(ix, iy)) continue;
                const int x0 = ix * k;
                const int y0 = (ny - 1 - iy) * k;
                if (ix + 1 < nx && !safe(ix + 1, iy)) canvas.fill_rect(x0 + k - 1, y0, x0 + k, y0 + k, edge);
                if (ix > 0 && !safe(ix - 1, iy)) canvas.fill_rect(x0, y0, x0 + 1, y0 + k, edge);
                if (iy + 1 < ny && !safe(ix, iy + 1)) canvas.fill_rect(x0, y0, x0 + k, y0 + 1, edge);
                if (iy > 0 && !safe(ix, iy - 1)) canvas.fill_rect(x0, y0 + k - 1, x0 + k, y0 + k, edge);
            }
        const Rgb path_color{30, 60, 220};
        for (const auto& row : trajectory) {
            if (row.t > t + 1e-9) break;
            const int x = px_x(row.p.x), y = px_y(row.p.y);
            canvas.fill_rect(x - 1, y - 1, x + 1, y + 1, path_color);
        }
        marker(canvas, config.start, {0, 0, 0});
        if (config.goal) marker(canvas, *config.goal, {200, 0, 200});

        const fs::path out = run_dir / "render" / (epoch_tag(epoch) + ".ppm");
        write_file(out, canvas.ppm());
        result.images.push_back(out);
    }
    return result;
}

}  // namespace psane::report
