#include "psane/safecert.hpp"

#include "psane/gp.hpp"
#include "psane/terrain.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace psane;
using namespace psane::safecert;
using testsupport::small_spec;

namespace {

ConfidenceState step(const ConfidenceState& s, const WorkspaceSpec& spec, double mean, double sd)
{
    return update_confidence(s, ScalarGrid(spec, mean), ScalarGrid(spec, sd), s.beta);
}

SafeSet single_cell(const WorkspaceSpec& spec, CellIndex c, double h, double L)
{
    SafeSet s{Mask(spec, 0), h, L, 0};
    s.mask(c) = 1;
    return s;
}

bool subset(const Mask& a, const Mask& b)
{
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i] && !b[i]) return false;
    return true;
}

}  // namespace

TEST_SUITE("safecert") {

TEST_CASE("interval intersection rules")
{
    const auto spec = small_spec(8, 8, 0.5);
    const auto init = ConfidenceState::initial(spec, 4.0);
    CHECK(init.lower[0] == -kUnbounded);
    CHECK(init.upper[0] == kUnbounded);

    auto a = step(init, spec, 0.5, 0.1);
    CHECK(a.lower[5] == doctest::Approx(0.3));
    CHECK(a.upper[5] == doctest::Approx(0.7));
    CHECK(a.empty_intersections == 0);

    auto b = step(step(init, spec, 0.4, 0.1), spec, 0.6, 0.15);
    CHECK(b.lower[0] == doctest::Approx(0.3));
    CHECK(b.upper[0] == doctest::Approx(0.6));
    CHECK(b.empty_intersections == 0);

    auto c0 = step(init, spec, 0.25, 0.025);
    CHECK(c0.lower[0] == doctest::Approx(0.2));
    CHECK(c0.upper[0] == doctest::Approx(0.3));
    ScalarGrid mean(spec, 0.25), sd(spec, 0.025);
    mean(3, 4) = 0.55;
    auto c = update_confidence(c0, mean, sd, 4.0);
    CHECK(c.lower(3, 4) == doctest::Approx(0.4));
    CHECK(c.upper(3, 4) == doctest::Approx(0.4));
    CHECK(c.empty_intersections == 1);
    REQUIRE(c.last_collapsed.size() == 1);
    CHECK(c.last_collapsed[0] == spec.linear({3, 4}));

    CHECK_THROWS_AS(update_confidence(init, mean, sd, 0.0), ConfigError);
    CHECK_THROWS_AS(update_confidence(init, ScalarGrid(4, 4), ScalarGrid(4, 4), 4.0), ConfigError);
}

TEST_CASE("single certifying cell grows a disk")
{
    const auto spec = small_spec(30, 30, 0.5);
    const CellIndex c{15, 15};
    ScalarGrid upper(spec, kUnbounded);
    upper(c) = 0.5;
    const auto out = safe_expand(single_cell(spec, c, 0.8, 0.1), upper, spec);
    std::size_t expected = 0;
    for (int y = 0; y < spec.ny(); ++y)
        for (int x = 0; x < spec.nx(); ++x) {
            const bool in = distance(spec.cell_center({x, y}), spec.cell_center(c)) <= 3.0 + 1e-9;
            expected += in;
            CHECK(static_cast<bool>(out.mask(x, y)) == in);
        }
    CHECK(out.size() == expected);
    // Radius of six cells each way.
    CHECK(out.mask(21, 15));
    CHECK_FALSE(out.mask(22, 15));
}

TEST_CASE("no growth without certifying cells or with a huge constant")
{
    const auto spec = small_spec(20, 20, 0.5);
    const CellIndex c{10, 10};
    ScalarGrid upper(spec, kUnbounded);
    upper(c) = 0.9;
    const auto s = single_cell(spec, c, 0.8, 0.1);
    CHECK(safe_expand(s, upper, spec).mask == s.mask);

    upper(c) = 0.1;
    auto rigid = single_cell(spec, c, 0.8, 1e9);
    CHECK(safe_expand(rigid, upper, spec).mask == rigid.mask);
}

TEST_CASE("expansion is order independent, monotone and justified")
{
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(0.0, 1.2);
    for (int inst = 0; inst < 30; ++inst) {
        const auto spec = small_spec(24, 16, 0.5);
        ScalarGrid upper(spec, kUnbounded);
        for (auto& v : upper.values())
            if (u(rng) < 0.6) v = u(rng);
        SafeSet s{testsupport::random_mask(rng, 24, 16, 0.15), 0.8, 0.3, 0};
        const auto fwd = safe_expand(s, upper, spec, IterationOrder::Forward);
        const auto rev = safe_expand(s, upper, spec, IterationOrder::Reverse);
        CHECK(fwd.mask == rev.mask);
        CHECK(subset(s.mask, fwd.mask));
        for (std::size_t i = 0; i < fwd.mask.size(); ++i) {
            if (!fwd.mask[i] || s.mask[i]) continue;
            bool justified = false;
            for (std::size_t j = 0; j < s.mask.size() && !justified; ++j) {
                if (!s.mask[j] || upper[j] > s.threshold) continue;
                const double d = distance(spec.cell_center(spec.unlinear(i)), spec.cell_center(spec.unlinear(j)));
                justified = d <= (s.threshold - upper[j]) / s.lipschitz + 1e-9;
            }
            CHECK(justified);
        }
    }
}

TEST_CASE("initial disk")
{
    const auto spec = small_spec(20, 20, 0.5);
    const Vec2 start = spec.cell_center({10, 10});
    CHECK(init_safe_set(spec, start, 0.25, 0.8, 1.0).safe.size() == 1);
    const auto d = init_safe_set(spec, start, 1.0, 0.8, 1.0);
    CHECK(d.safe.size() == 13);
    CHECK(d.bootstrap.size() == 3);
    for (const auto& p : d.bootstrap) CHECK(distance(p, start) <= 1.0 + 1e-12);

    const auto corner = init_safe_set(spec, spec.cell_center({0, 0}), 1.0, 0.8, 1.0);
    CHECK(corner.safe.size() == 6);
    CHECK_THROWS_AS(init_safe_set(spec, {-3.0, 1.0}, 1.0, 0.8, 1.0), ConfigError);
    CHECK_THROWS_AS(init_safe_set(spec, start, 0.0, 0.8, 1.0), ConfigError);
}

TEST_CASE("coverage ratio")
{
    const auto spec = small_spec(40, 25, 0.5);
    const auto init = init_safe_set(spec, spec.cell_center({20, 12}), 1.0, 0.8, 1.0);
    Mask truth(spec, 1);
    CHECK(coverage_ratio(init.safe, truth) == doctest::Approx(0.013));
    CHECK(coverage_ratio(SafeSet{truth, 0.8, 1.0, 0}, truth) == 1.0);

    Mask small(spec, 0);
    for (int x = 0; x < 5; ++x) small(x, 0) = 1;
    CHECK(coverage_ratio(init.safe, small) > 1.0);
    CHECK_THROWS_AS(coverage_ratio(init.safe, Mask(spec, 0)), DomainError);
}

TEST_CASE("disk cells are clipped to the grid")
{
    const auto spec = small_spec(10, 10, 1.0);
    const auto cells = disk_cells(spec, {0, 9}, 2.0);
    CHECK(cells.size() == 6);
    for (auto c : cells) CHECK(spec.in_bounds(c));
}

TEST_CASE("larger beta certifies a subset")
{
    WorkspaceSpec spec;
    terrain::FieldParams fp;
    fp.mean = 0.4;
    fp.signal_std = 0.2;
    fp.length_scale = 2.0;
    const auto field = terrain::generate_field(spec, terrain::FieldKind::GpPrior, fp, 21);
    gp::KernelParams kp{0.2, 2.0, 0.02};
    const double L = 1.1 * field.lipschitz_bound;
    const Vec2 start{4.0, 5.0};

    auto a = init_safe_set(spec, start, 1.5, 0.8, L).safe;
    auto b = a;
    auto ca = ConfidenceState::initial(spec, 2.0);
    auto cb = ConfidenceState::initial(spec, 6.0);

    std::mt19937_64 rng(9);
    std::normal_distribution<double> step(0.0, 0.8);
    std::vector<terrain::NoisySample> data;
    Vec2 walker = start;
    for (int epoch = 0; epoch < 12; ++epoch) {
        for (int k = 0; k < 6; ++k) {
            walker = walker + Vec2{step(rng), step(rng)};
            walker.x = std::clamp(walker.x, 0.1, 15.9);
            walker.y = std::clamp(walker.y, 0.1, 9.9);
            data.push_back(terrain::sample_truth(field, walker, 0.02, rng));
        }
        const auto pred = gp::GpModel::fit(data, kp, 0.5).predict_grid(spec);
        ca = update_confidence(ca, pred.mean, pred.stddev, 2.0);
        cb = update_confidence(cb, pred.mean, pred.stddev, 6.0);
        a = safe_expand(a, ca.upper, spec);
        b = safe_expand(b, cb.upper, spec);
        CHECK(subset(b.mask, a.mask));
    }
    CHECK(b.size() > 13);
}

}
