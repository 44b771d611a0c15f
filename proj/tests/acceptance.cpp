// Acceptance run: prints one PASS/FAIL line per criterion and exits non-zero
// if any criterion fails.

#include "psane/frontier.hpp"
#include "psane/gp.hpp"
#include "psane/scenario.hpp"
#include "psane/sim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <random>
#include <set>
#include <string>
#include <thread>
#include <vector>

using namespace psane;
using frontier::StrategyKind;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

int g_failed = 0;

void verdict(const char* id, bool pass, const std::string& detail)
{
    std::printf("%s %s  %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failed;
}

std::string fmt(const char* f, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

int workers()
{
    return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

// ---------------------------------------------------------------- GP oracle

using Dense = std::vector<std::vector<double>>;

Dense invert(Dense a)
{
    const std::size_t n = a.size();
    Dense inv(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) inv[i][i] = 1.0;
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t p = c;
        for (std::size_t r = c + 1; r < n; ++r)
            if (std::abs(a[r][c]) > std::abs(a[p][c])) p = r;
        std::swap(a[c], a[p]);
        std::swap(inv[c], inv[p]);
        const double d = a[c][c];
        for (std::size_t k = 0; k < n; ++k) {
            a[c][k] /= d;
            inv[c][k] /= d;
        }
        for (std::size_t r = 0; r < n; ++r) {
            if (r == c) continue;
            const double f = a[r][c];
            for (std::size_t k = 0; k < n; ++k) {
                a[r][k] -= f * a[c][k];
                inv[r][k] -= f * inv[c][k];
            }
        }
    }
    return inv;
}

double rbf(Vec2 a, Vec2 b, const gp::KernelParams& p)
{
    const double d2 = (a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y);
    return p.signal_std * p.signal_std * std::exp(-0.5 * d2 / (p.length_scale * p.length_scale));
}

void ac1()
{
    const auto t0 = Clock::now();
    std::mt19937_64 rng(1001);
    std::uniform_int_distribution<int> count(1, 50);
    std::uniform_real_distribution<double> pos(0.0, 10.0), val(0.0, 1.0), sf(0.1, 0.5), ell(0.5, 3.0),
        noise(0.01, 0.1), prior(0.2, 0.8);
    double worst = 0.0;
    for (int inst = 0; inst < 100; ++inst) {
        const int n = count(rng);
        const gp::KernelParams p{sf(rng), ell(rng), noise(rng)};
        const double m0 = prior(rng);
        std::vector<terrain::NoisySample> s;
        for (int i = 0; i < n; ++i) s.push_back({{pos(rng), pos(rng)}, val(rng), 0.0});
        std::vector<Vec2> q;
        for (int i = 0; i < 25; ++i) q.push_back({pos(rng), pos(rng)});

        const auto model = gp::GpModel::fit(s, p, m0);
        const auto r = model.predict(q);

        Dense k(n, std::vector<double>(n));
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                k[i][j] = rbf(s[i].location, s[j].location, p) +
                          (i == j ? p.noise_std * p.noise_std + model.jitter() : 0.0);
        const Dense inv = invert(k);
        for (std::size_t qi = 0; qi < q.size(); ++qi) {
            std::vector<double> ks(n);
            for (int i = 0; i < n; ++i) ks[i] = rbf(s[i].location, q[qi], p);
            double mean = m0, var = p.signal_std * p.signal_std;
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) {
                    mean += ks[i] * inv[i][j] * (s[j].value - m0);
                    var -= ks[i] * inv[i][j] * ks[j];
                }
            worst = std::max({worst, std::abs(mean - r.mean[qi]),
                              std::abs(std::sqrt(std::max(0.0, var)) - r.stddev[qi])});
        }
    }
    const double secs = seconds_since(t0);
    verdict("AC1", worst <= 1e-8 && secs < 10.0,
            fmt("GP vs dense inverse on 100 instances: max abs error %.3g (<= 1e-8), %.2f s (< 10 s)", worst, secs));
}

// ------------------------------------------------------- batch bookkeeping

struct BatchRun {
    std::string label;
    sim::BatchSpec spec;
    sim::BatchResult result;
    double seconds = 0.0;
};

BatchRun run_manifest(const std::string& label, const std::string& file)
{
    BatchRun b;
    b.label = label;
    b.spec = scenario::load_manifest(std::string(PSANE_SCENARIO_DIR) + "/" + file).batch;
    b.spec.workers = workers();
    const auto t0 = Clock::now();
    b.result = sim::run_batch(b.spec);
    b.seconds = seconds_since(t0);
    return b;
}

BatchRun run_soundness_batch()
{
    BatchRun b;
    b.label = "gp_prior";
    b.spec.environments.push_back({"gp_prior", scenario::preset("gp_prior")});
    for (std::uint64_t s = 1; s <= 50; ++s) b.spec.seeds.push_back(s);
    b.spec.strategies = {b.spec.environments[0].config.strategy};
    b.spec.workers = workers();
    const auto t0 = Clock::now();
    b.result = sim::run_batch(b.spec);
    b.seconds = seconds_since(t0);
    return b;
}

std::size_t errored(const BatchRun& b)
{
    return std::count_if(b.result.trials.begin(), b.result.trials.end(),
                         [](const sim::TrialSummary& t) { return !t.error.empty(); });
}

const sim::AggregateRow* row(const BatchRun& b, const std::string& env, StrategyKind k)
{
    for (const auto& r : b.result.aggregate)
        if (r.environment == env && r.strategy == k) return &r;
    return nullptr;
}

double success(const BatchRun& b, const std::string& env, StrategyKind k)
{
    const auto* r = row(b, env, k);
    return r ? r->success_mean : -1.0;
}

// ----------------------------------------------------------- AC2 and AC3

void ac2(const BatchRun& b)
{
    const auto& cfg = b.spec.environments[0].config;
    double sum = 0.0;
    int used = 0;
    bool lipschitz_ok = true;
    for (const auto& t : b.result.trials) {
        if (!t.error.empty() || t.metrics.certified_cells == 0) continue;
        sum += static_cast<double>(t.metrics.unsound_certified_cells) / t.metrics.certified_cells;
        ++used;
        const auto tc = sim::trial_config(cfg, t.strategy, t.seed);
        const auto field =
            terrain::generate_field(tc.workspace, tc.environment.kind, tc.environment.params, tc.environment.seed);
        lipschitz_ok = lipschitz_ok && t.metrics.lipschitz >= field.lipschitz_bound;
    }
    const double frac = used ? sum / used : 1.0;
    const bool setup = cfg.beta == 4.0 && cfg.h == 0.8 && cfg.environment.kind == terrain::FieldKind::GpPrior &&
                       lipschitz_ok;
    verdict("AC2", setup && used == 50 && frac <= 0.02 && b.seconds < 120.0,
            fmt("unsound fraction of ever-certified cells %.4f (<= 0.02) over %d gp_prior seeds, %.1f s (< 120 s)",
                frac, used, b.seconds));
}

void ac3(const std::vector<const BatchRun*>& runs)
{
    long shrinks = 0, widen = 0, cover = 0, empty = 0, trials = 0, affected = 0;
    for (const auto* b : runs)
        for (const auto& t : b->result.trials) {
            if (!t.error.empty()) continue;
            ++trials;
            shrinks += t.metrics.safe_set_shrinks;
            widen += t.metrics.interval_widenings;
            cover += t.metrics.coverage_decreases;
            empty += t.metrics.empty_intersections;
            affected += t.metrics.interval_widenings > 0;
        }
    verdict("AC3", shrinks == 0 && widen == 0 && cover == 0,
            fmt("%ld trials: safe-set shrinks %ld, interval widenings %ld (in %ld trials, %ld empty intersections), "
                "coverage decreases %ld (all must be 0)",
                trials, shrinks, widen, affected, empty, cover));
}

// ------------------------------------------------------------- AC4, AC5

void ac4()
{
    std::mt19937_64 rng(4004);
    std::uniform_int_distribution<int> size(1, 200), coarse(0, 5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int front_mismatch = 0, argmax_mismatch = 0, positive = 0;
    for (int inst = 0; inst < 200; ++inst) {
        const int n = size(rng);
        const bool ties = inst % 2 == 0;
        std::vector<int> cells(600);
        for (int i = 0; i < 600; ++i) cells[i] = i;
        std::shuffle(cells.begin(), cells.end(), rng);
        std::vector<frontier::FrontierCandidate> c(n);
        for (int i = 0; i < n; ++i) {
            c[i].cell = {cells[i] % 30, cells[i] / 30};
            c[i].p_e = ties ? coarse(rng) / 5.0 : u(rng);
            c[i].v_goal = ties ? coarse(rng) / 5.0 : u(rng);
            c[i].v_overall = c[i].p_e * c[i].v_goal;
        }
        std::set<std::size_t> brute;
        for (int i = 0; i < n; ++i) {
            bool dominated = false;
            for (int j = 0; j < n && !dominated; ++j)
                dominated = c[j].p_e >= c[i].p_e && c[j].v_goal >= c[i].v_goal &&
                            (c[j].p_e > c[i].p_e || c[j].v_goal > c[i].v_goal);
            if (!dominated) brute.insert(i);
        }
        const auto front = frontier::pareto_front(c);
        if (std::set<std::size_t>(front.begin(), front.end()) != brute) ++front_mismatch;

        double best = 0.0;
        for (const auto& x : c) best = std::max(best, x.v_overall);
        if (best > 0.0) {
            ++positive;
            frontier::SelectionStrategy s{StrategyKind::PSANE};
            const auto sel = frontier::select_subgoal(s, c, Vec2{0, 0}, Vec2{0, 0});
            if (c[*sel.candidate].v_overall != best) ++argmax_mismatch;
        }
    }
    verdict("AC4", front_mismatch == 0 && argmax_mismatch == 0,
            fmt("200 candidate sets: Pareto mismatches %d, PSANE argmax mismatches %d over %d positive-max sets",
                front_mismatch, argmax_mismatch, positive));
}

void ac5()
{
    std::mt19937_64 rng(5005);
    std::uniform_int_distribution<int> dim(3, 40);
    std::uniform_real_distribution<double> dens(0.15, 0.85), u(0.0, 1.0);
    int mismatches = 0, rings = 0;
    for (int inst = 0; inst < 100; ++inst) {
        Mask m;
        if (inst % 4 == 0) {
            const int n = 12 + dim(rng) / 2;
            const double c = n / 2.0, ro = n / 2.5, ri = ro * (0.3 + 0.4 * u(rng));
            m = Mask(n, n, 0);
            for (int y = 0; y < n; ++y)
                for (int x = 0; x < n; ++x) {
                    const double d = std::hypot(x - c, y - c);
                    m(x, y) = d >= ri && d <= ro;
                }
            const auto f = frontier::extract_frontiers(m);
            rings += f.contours.size() == 2;
            if (f.contours.size() != 2) ++mismatches;
        } else {
            m = Mask(dim(rng), dim(rng), 0);
            const double p = dens(rng);
            for (auto& v : m.values()) v = u(rng) < p;
        }
        std::vector<CellIndex> ref;
        for (int y = 0; y < m.ny(); ++y)
            for (int x = 0; x < m.nx(); ++x) {
                if (!m(x, y)) continue;
                const bool edge = (x > 0 && !m(x - 1, y)) || (x + 1 < m.nx() && !m(x + 1, y)) ||
                                  (y > 0 && !m(x, y - 1)) || (y + 1 < m.ny() && !m(x, y + 1));
                if (edge) ref.push_back({x, y});
            }
        const auto f = frontier::extract_frontiers(m);
        bool same = f.cells.size() == ref.size();
        for (std::size_t i = 0; same && i < ref.size(); ++i) same = f.cells[i].cell == ref[i];
        if (!same) ++mismatches;
    }
    verdict("AC5", mismatches == 0,
            fmt("100 masks (%d rings with two contours): %d mismatches against the 4-adjacency scan", rings,
                mismatches));
}

// ----------------------------------------------------------- AC6 to AC9

void ac6(const BatchRun& nav)
{
    const double n1 = success(nav, "env1", StrategyKind::NGH), n2 = success(nav, "env2", StrategyKind::NGH);
    const double s1 = success(nav, "env1", StrategyKind::SGH), s2 = success(nav, "env2", StrategyKind::SGH);
    const double g1 = success(nav, "env1", StrategyKind::PGH), g2 = success(nav, "env2", StrategyKind::PGH);
    const double p1 = success(nav, "env1", StrategyKind::PSANE), p2 = success(nav, "env2", StrategyKind::PSANE);
    const bool sgh_between = (s1 > n1 && s1 < p1) || (s2 > n2 && s2 < p2);
    const bool pass = errored(nav) == 0 && nav.spec.seeds.size() == 10 && n1 == 0.0 && n2 == 0.0 && g1 == 1.0 &&
                      g2 == 1.0 && p1 == 1.0 && p2 == 1.0 && sgh_between && nav.seconds < 600.0;
    verdict("AC6", pass,
            fmt("success env1/env2: NGH %.0f%%/%.0f%%, SGH %.0f%%/%.0f%%, PGH %.0f%%/%.0f%%, PSANE %.0f%%/%.0f%%; "
                "%.1f s (< 600 s)",
                100 * n1, 100 * n2, 100 * s1, 100 * s2, 100 * g1, 100 * g2, 100 * p1, 100 * p2, nav.seconds));
}

void ac7(const BatchRun& nav)
{
    const auto* pg = row(nav, "env1", StrategyKind::PGH);
    const auto* ps = row(nav, "env1", StrategyKind::PSANE);
    if (!pg || !ps) {
        verdict("AC7", false, "env1 PGH/PSANE rows missing");
        return;
    }
    const double lr = ps->length_mean / pg->length_mean, tr = ps->time_mean / pg->time_mean;
    verdict("AC7", lr <= 0.8 && tr <= 0.8,
            fmt("env1 PSANE/PGH: length %.2f/%.2f m = %.3f (<= 0.8), time %.1f/%.1f s = %.3f (<= 0.8)",
                ps->length_mean, pg->length_mean, lr, ps->time_mean, pg->time_mean, tr));
}

void ac8(const BatchRun& exp)
{
    const auto& env = exp.spec.environments[0];
    const auto* pg = row(exp, env.environment, StrategyKind::PGH);
    const auto* ps = row(exp, env.environment, StrategyKind::PSANE);
    if (!pg || !ps) {
        verdict("AC8", false, "exploration PGH/PSANE rows missing");
        return;
    }
    const bool pass = errored(exp) == 0 && env.config.exploration() && env.config.time_budget == 1000.0 &&
                      exp.spec.seeds.size() == 10 && ps->coverage_mean >= pg->coverage_mean &&
                      ps->coverage_mean >= 0.4 && pg->coverage_mean >= 0.4;
    verdict("AC8", pass,
            fmt("1000 s exploration coverage: PSANE %.3f +- %.3f >= PGH %.3f +- %.3f, both >= 0.4", ps->coverage_mean,
                ps->coverage_std, pg->coverage_mean, pg->coverage_std));
}

void ac9(const std::vector<const BatchRun*>& runs)
{
    long trials = 0, violations = 0;
    for (const auto* b : runs)
        for (const auto& t : b->result.trials) {
            if (t.strategy == StrategyKind::NGH || !t.error.empty()) continue;
            ++trials;
            violations += t.metrics.safety_violations;
        }
    verdict("AC9", violations == 0 && trials > 0,
            fmt("%ld non-NGH trials: %ld ground-truth safety violations (must be 0)", trials, violations));
}

void ac10(const std::vector<const BatchRun*>& runs)
{
    std::string detail;
    bool pass = true;
    for (const auto* b : runs) {
        auto again = b->spec;
        again.workers = std::max(1, b->spec.workers / 2);
        const bool same = sim::aggregate_csv(sim::run_batch(again).aggregate) == sim::aggregate_csv(b->result.aggregate);
        pass = pass && same;
        detail += b->label + (same ? " identical; " : " DIFFERENT; ");
    }
    verdict("AC10", pass, "rerun aggregate CSV bytes: " + detail);
}

}  // namespace

int main()
{
    ac1();
    const BatchRun sound = run_soundness_batch();
    ac2(sound);
    const BatchRun nav = run_manifest("navigation", "navigation.json");
    const BatchRun exp = run_manifest("exploration", "exploration.json");
    ac3({&nav, &exp, &sound});
    ac4();
    ac5();
    ac6(nav);
    ac7(nav);
    ac8(exp);
    ac9({&nav, &exp});
    ac10({&nav, &exp, &sound});
    std::printf("%d criteria failed\n", g_failed);
    return g_failed == 0 ? 0 : 1;
}
