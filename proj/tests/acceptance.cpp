// Acceptance run: one PASS/FAIL line per criterion.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fanfilter/pipeline.hpp"

using namespace fanfilter;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }
double deg(double r) { return r * 180.0 / std::numbers::pi; }
double rad(double d) { return d * std::numbers::pi / 180.0; }
double axis_deg(const Vec3& a, const Vec3& b) {
    return deg(std::acos(std::min(1.0, std::abs(a.normalized().dot(b.normalized())))));
}

Vec3 random_unit(std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    return Vec3(n(rng), n(rng), n(rng)).normalized();
}

Quat random_quat(std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    return Quat(n(rng), n(rng), n(rng), n(rng)).normalized();
}

double quat_dist(const Quat& a, const Quat& b) {
    return std::min((a.coeffs() - b.coeffs()).norm(), (a.coeffs() + b.coeffs()).norm());
}

struct Outcome {
    bool pass;
    std::string detail;
};

int failures = 0;

void report(const char* id, const Outcome& o) {
    std::printf("%s %s  %s\n", id, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failures;
}

template <class... A>
std::string fmt(const char* f, A... a) {
    char buf[1024];
    std::snprintf(buf, sizeof(buf), f, a...);
    return buf;
}

const LutPair& luts() {
    static const LutPair p = obtain_luts("");
    return p;
}

// Gauss-Legendre in z = cos(theta) over [z0, z1] times a periodic midpoint
// rule in phi; the Bingham density is smooth, so this is spectrally accurate.
double sphere_integral(const std::function<double(const Vec3&)>& f, int nt = 400, int np = 512, double z0 = -1.0,
                       double z1 = 1.0) {
    std::vector<double> x(static_cast<std::size_t>(nt)), w(static_cast<std::size_t>(nt));
    for (int i = 0; i < nt; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (nt + 0.5));
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = z;
            for (int k = 2; k <= nt; ++k) {
                const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            const double dp = nt * (z * p1 - p0) / (z * z - 1.0);
            const double dz = p1 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) {
                w[static_cast<std::size_t>(i)] = 2.0 / ((1.0 - z * z) * dp * dp);
                break;
            }
        }
        x[static_cast<std::size_t>(i)] = z;
    }
    double total = 0.0;
    for (int i = 0; i < nt; ++i) {
        const double t = 0.5 * (z0 + z1) + 0.5 * (z1 - z0) * x[static_cast<std::size_t>(i)], s = std::sqrt(1.0 - t * t);
        double row = 0.0;
        for (int j = 0; j < np; ++j) {
            const double p = 2.0 * std::numbers::pi * (j + 0.5) / np;
            row += f(Vec3(s * std::cos(p), s * std::sin(p), t));
        }
        total += 0.5 * (z1 - z0) * w[static_cast<std::size_t>(i)] * row * (2.0 * std::numbers::pi / np);
    }
    return total;
}

Outcome a1() {
    const auto t0 = Clock::now();
    const double e0 = std::abs(norm_const(0.0, 0.0) - 4.0 * std::numbers::pi);
    double worst = 0.0;
    for (auto [k, b] : {std::pair{10.0, 0.0}, {30.0, 10.0}, {80.0, 40.0}}) {
        const BinghamCompartment c{1.0, Quat(Eigen::AngleAxisd(0.7, Vec3(1, 2, 3).normalized())), k, b};
        worst = std::max(worst, std::abs(sphere_integral([&](const Vec3& v) { return bingham_pdf(v, c); }) - 1.0));
    }
    const double secs = seconds_since(t0);
    return {e0 <= 1e-6 && worst <= 1e-5 && secs < 1.0,
            fmt("|c(0,0) - 4pi| = %.2e, max |integral - 1| = %.2e, %.3f s", e0, worst, secs)};
}

Outcome a2() {
    std::mt19937_64 rng(2);
    double worst = 0.0;
    for (int k = 0; k < 100000; ++k) {
        const Quat q = canonical(random_quat(rng));
        worst = std::max(worst, (quat_from_mrp(mrp_from_quat(q)).coeffs() - q.coeffs()).norm());
        const Quat c = random_quat(rng), r = random_quat(rng);
        worst = std::max(worst, quat_dist(chart_from(chart_to(r, c), c), r));
    }
    const bool ident = mrp_from_quat(Quat::Identity()) == Vec3::Zero();
    return {worst < 1e-12 && ident, fmt("1e5 round trips, max error %.2e; phi(identity) = 0: %s", worst, ident ? "yes" : "no")};
}

// Residual at kappa = 89 of a unit Bingham response against the rank-1 tensor,
// recorded from this implementation as a regression constant; it must also
// stay within 5% of the rank-1 norm.
constexpr double kResidual89 = 0.044424470949896745;

Outcome a3() {
    const SymTensor6 r1 = rank1(1.0, Vec3::UnitZ());
    auto dist = [&](double k) { return apolar_norm(conv_response({1.0, Quat::Identity(), k, 0.0}, luts().conv) - r1); };
    bool decreasing = true;
    double prev = std::numeric_limits<double>::infinity();
    std::string trace;
    for (int k = 10; k <= 80; k += 10) {
        const double d = dist(k);
        decreasing = decreasing && d < prev;
        prev = d;
        trace += fmt(" %.4f", d);
    }
    const double d89 = dist(89.0);
    const bool regression = std::abs(d89 - kResidual89) <= 1e-12 * std::max(1.0, kResidual89);
    const bool within = d89 < 0.05 * apolar_norm(r1);
    return {decreasing && regression && within && d89 < prev,
            fmt("distance over kappa 10..80:%s; kappa 89 residual %.17g (recorded %.17g)", trace.c_str(), d89, kResidual89)};
}

Outcome a4() {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> uk(3.0, 88.0), ub(0.0, 1.0);
    const auto& g = luts().init.grid;
    double dk = 0.0, db = 0.0;
    int flagged = 0;
    for (int n = 0; n < 50; ++n) {
        // off-node interior points: a stricter version of the node round trip
        const double k0 = uk(rng), b0 = ub(rng) * (k0 - 3.0);
        const auto e = response_eigenvalues(moment6_canonical(k0, b0));
        const auto kb = init_from_eigs(e[0], e[1], luts().init);
        dk = std::max(dk, std::abs(kb.kappa - k0));
        db = std::max(db, std::abs(kb.beta - b0));
        flagged += kb.flagged ? 1 : 0;
    }
    double eq = 0.0;
    for (std::size_t i = 0; i < g.kappa_count(); i += 29) {
        const auto e = response_eigenvalues(moment6_canonical(g.kappa_at(i), 0.0));
        eq = std::max(eq, std::abs(e[0] - e[1]) / e[0]);
    }
    return {dk <= 1.0 && db <= 1.0 && eq <= 0.02 && flagged == 0,
            fmt("50 pairs: max |dkappa| = %.3f, max |dbeta| = %.3f, flagged %d; beta=0 max |l1-l2|/l1 = %.4f", dk, db,
                flagged, eq)};
}

Outcome a5() {
    std::mt19937_64 rng(5);
    UkfModel m;
    m.model = Model::bingham;
    m.lut = &luts().conv;
    m.noise = NoiseConfig::defaults(Model::bingham);
    double worst_dir = 0.0, worst_k = 0.0;
    for (int trial = 0; trial < 5; ++trial) {
        const BinghamCompartment c{0.6, Quat(random_quat(rng)), 40.0, 15.0};
        const SymTensor6 z = conv_response(c, luts().conv);
        Vec3 axis = random_unit(rng);
        axis = (axis - axis.dot(c.mu1()) * c.mu1()).normalized();
        UkfFiberState st;
        st.mean << 0.6, 40.0, 15.0, 0, 0, 0;
        st.chart_q = canonical(Quat(Eigen::AngleAxisd(rad(10.0), axis)) * c.q);
        for (int i = 0; i < kStateDim; ++i) st.cov(i, i) = 10.0 * m.noise.q[static_cast<std::size_t>(i)];
        for (int k = 0; k < 50; ++k) st = ukf_update(st, z, {}, m);
        worst_dir = std::max(worst_dir, axis_deg(st.mu1(), c.mu1()));
        worst_k = std::max(worst_k, std::abs(st.kappa() - 40.0) / 40.0);
    }
    return {worst_dir < 2.0 && worst_k < 0.1,
            fmt("5 trials, 10 deg tilt, 50 updates: max direction error %.3f deg, max kappa rel. error %.4f", worst_dir,
                worst_k)};
}

Outcome a6() {
    std::mt19937_64 rng(6);
    double worst = 0.0;
    for (auto [k, b] : {std::pair{10.0, 0.0}, {30.0, 10.0}, {80.0, 40.0}}) {
        const BinghamCompartment c{1.0, Quat(random_quat(rng)), k, b};
        const int n = 100000;
        std::vector<double> s(n);
        for (auto& v : s) v = std::pow(sample_bingham(c, c.mu1(), rng).dot(c.mu1()), 2);
        std::sort(s.begin(), s.end());
        // quadrature CDF of t = <x, mu1>^2 in the canonical frame
        const BinghamCompartment canon{1.0, Quat::Identity(), k, b};
        const double mass = sphere_integral([&](const Vec3& v) { return bingham_pdf(v, canon); });
        for (int q = 1; q < 100; ++q) {
            const double t = q / 100.0;
            const double cdf = sphere_integral([&](const Vec3& v) { return bingham_pdf(v, canon); }, 200, 128,
                                               -std::sqrt(t), std::sqrt(t)) / mass;
            const double emp = static_cast<double>(std::upper_bound(s.begin(), s.end(), t) - s.begin()) / n;
            worst = std::max(worst, std::abs(emp - cdf));
        }
    }
    return {worst < 0.01, fmt("max sup-norm CDF distance over (10,0), (30,10), (80,40): %.4f", worst)};
}

struct Stats {
    double mean = 0.0, range = 0.0;
};

Stats stats(const std::vector<double>& v) {
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    return {std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()), *hi - *lo};
}

// a < b by more than the larger of the two seed spreads
bool separated(const Stats& a, const Stats& b) { return b.mean - a.mean > std::max(a.range, b.range); }

Outcome a7() {
    PhantomSpec s;
    s.shape = PhantomShape::fan;
    s.dims = {24, 64, 64};
    s.kappa = 30;
    s.radius_mm = 2.0;
    s.fan_half_angle_mu2_deg = 30.0;
    s.ref_spacing_mm = 0.25;
    s.noise_sigma = 0.0;
    const Phantom ph = gen_phantom(s, luts().conv);
    std::vector<double> comp[3], exc[3];
    const Model models[3] = {Model::bingham, Model::watson, Model::lowrank};
    for (int mi = 0; mi < 3; ++mi)
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            TrackerConfig cfg;
            cfg.model = models[mi];
            cfg.noise = NoiseConfig::defaults(cfg.model);
            const auto rec = drop_short(track_all(ph.field, ph.seeds, 3, cfg, luts().view(), seed, 1), 10.0);
            comp[mi].push_back(directed_hausdorff_q95(ph.reference, rec));
            exc[mi].push_back(directed_hausdorff_q95(rec, ph.reference));
        }
    Stats c[3], e[3];
    for (int i = 0; i < 3; ++i) {
        c[i] = stats(comp[i]);
        e[i] = stats(exc[i]);
    }
    const bool bw = separated(c[0], c[1]), wl = separated(c[1], c[2]);
    // "<=" holds when bingham is lower, or within seed noise of lowrank
    const bool ex = e[0].mean <= e[2].mean + std::max(e[0].range, e[2].range);
    std::string d = fmt("completeness mean/range mm: bingham %.3f/%.3f watson %.3f/%.3f lowrank %.3f/%.3f; ", c[0].mean,
                        c[0].range, c[1].mean, c[1].range, c[2].mean, c[2].range);
    d += fmt("excess: bingham %.3f/%.3f watson %.3f/%.3f lowrank %.3f/%.3f; ", e[0].mean, e[0].range, e[1].mean,
             e[1].range, e[2].mean, e[2].range);
    d += fmt("bingham<watson %s, watson<lowrank %s, excess bingham<=lowrank %s", bw ? "yes" : "no", wl ? "yes" : "no",
             ex ? "yes" : "no");
    return {bw && wl && ex, d};
}

Outcome a8() {
    PhantomSpec s;
    s.shape = PhantomShape::straight;
    s.dims = {20, 20, 110};
    s.kappa = 30;
    const Phantom ph = gen_phantom(s, luts().conv);
    std::vector<Seed> seeds;
    for (std::size_t k = 0; seeds.size() < 1000; ++k) seeds.push_back(ph.seeds[k % ph.seeds.size()]);
    double secs[2] = {0, 0}, length[2] = {0, 0};
    std::size_t points[2] = {0, 0};
    const Model models[2] = {Model::bingham, Model::lowrank};
    for (int mi = 0; mi < 2; ++mi) {
        TrackerConfig cfg;
        cfg.model = models[mi];
        cfg.noise = NoiseConfig::defaults(cfg.model);
        const auto t0 = Clock::now();
        const auto sl = track_all(ph.field, seeds, 1, cfg, luts().view(), 8, 1);
        secs[mi] = seconds_since(t0);
        for (const auto& x : sl) {
            length[mi] += x.length() / static_cast<double>(sl.size());
            points[mi] += x.points.size();
        }
    }
    const double ratio = secs[0] / secs[1];
    return {secs[0] <= 300.0 && ratio <= 2.5,
            fmt("1000 streamlines: bingham %.1f s (mean %.1f mm, %.1f us/point), lowrank %.1f s (mean %.1f mm, %.1f "
                "us/point), ratio %.2f",
                secs[0], length[0], 1e6 * secs[0] / static_cast<double>(points[0]), secs[1], length[1],
                1e6 * secs[1] / static_cast<double>(points[1]), ratio)};
}

Outcome a9() {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.0, 50.0);
    auto cloud = [&](std::size_t n) {
        std::vector<Streamline> out(1);
        for (std::size_t i = 0; i < n; ++i) {
            if (out.back().points.size() == 100) out.emplace_back();
            out.back().points.emplace_back(u(rng), u(rng), u(rng));
        }
        return out;
    };
    auto brute = [](const std::vector<Streamline>& a, const std::vector<Streamline>& b) {
        std::vector<double> d;
        for (const auto& sa : a)
            for (const auto& p : sa.points) {
                double best = std::numeric_limits<double>::infinity();
                for (const auto& sb : b)
                    for (const auto& q : sb.points) best = std::min(best, (p - q).squaredNorm());
                d.push_back(best);
            }
        std::sort(d.begin(), d.end());
        return std::sqrt(d[static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(d.size()))) - 1]);
    };
    int mismatches = 0, cases = 0;
    for (std::size_t n : {10u, 100u, 1000u, 5000u, 10000u})
        for (int rep = 0; rep < 2; ++rep) {
            const auto a = cloud(n), b = cloud(std::max<std::size_t>(1, n / (rep + 1)));
            mismatches += directed_hausdorff_q95(a, b) != brute(a, b);
            ++cases;
        }
    Streamline a, b;
    for (int k = 0; k < 100; ++k) {
        b.points.emplace_back(k, 0, 0);
        a.points.emplace_back(k, 1, 0);
    }
    a.points.emplace_back(50, 50, 0);
    const double example = directed_hausdorff_q95({a}, {b});
    return {mismatches == 0 && example == 1.0,
            fmt("%d/%d randomized cases equal brute force; 100 at 1 mm + 1 at 50 mm gives %.1f", cases - mismatches,
                cases, example)};
}

Outcome a10() {
    const fs::path root = fs::temp_directory_path() / "fanfilter_acceptance_a10";
    fs::remove_all(root);
    std::ostringstream sink;
    for (const char* run : {"run1", "run2"}) {
        const fs::path d = root / run;
        fs::create_directories(d);
        cmd_lut_build((d / "luts").string(), sink);
        detail::write_text((d / "spec.json").string(),
                           R"({"shape": "fan", "dims": [20, 40, 40], "noise_sigma": 0.01, "rng_seed": 3})");
        cmd_phantom_gen((d / "spec.json").string(), (d / "ph").string(), (d / "luts").string(), sink);
        const std::string cfg = R"({"model": "bingham", "rng_seed": 11, "paths": {"fodf": ")" + (d / "ph.fof").string() +
                                R"(", "seeds": ")" + (d / "ph_seeds.txt").string() + R"(", "lut_dir": ")" +
                                (d / "luts").string() + R"(", "output": ")" + (d / "rec.tsl").string() +
                                R"(", "report": ")" + (d / "report.json").string() + R"("}})";
        detail::write_text((d / "run.json").string(), cfg);
        cmd_track((d / "run.json").string(), 2, sink);
        cmd_eval((d / "ph_ref.tsl").string(), (d / "rec.tsl").string(), (d / "run.json").string(), "", sink);
    }
    int same = 0, total = 0;
    std::string diff;
    for (const char* f : {"luts/conv.blut", "luts/init.blut", "ph.fof", "ph_ref.tsl", "ph_seeds.txt", "rec.tsl",
                          "report.json"}) {
        ++total;
        if (binary::read_file((root / "run1" / f).string()) == binary::read_file((root / "run2" / f).string()))
            ++same;
        else
            diff += std::string(" ") + f;
    }
    fs::remove_all(root);
    return {same == total, fmt("%d/%d output files byte-identical%s", same, total, diff.c_str())};
}

}  // namespace

// Exit status is 0 when all criteria pass. With --known-failures A7,A8 the
// status is 0 only if exactly those criteria fail, so ctest still flags both
// regressions and criteria that start passing.
int main(int argc, char** argv) {
    std::set<std::string> known;
    for (int i = 1; i + 1 < argc; i += 2) {
        if (std::string(argv[i]) != "--known-failures") {
            std::fprintf(stderr, "usage: acceptance [--known-failures A7,A8]\n");
            return 2;
        }
        std::stringstream ss(argv[i + 1]);
        for (std::string id; std::getline(ss, id, ',');) known.insert(id);
    }
    const std::pair<const char*, Outcome (*)()> criteria[] = {{"A1", a1}, {"A2", a2}, {"A3", a3}, {"A4", a4},
                                                              {"A5", a5}, {"A6", a6}, {"A7", a7}, {"A8", a8},
                                                              {"A9", a9}, {"A10", a10}};
    std::set<std::string> failed;
    for (const auto& [id, fn] : criteria) {
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        report(id, o);
        if (!o.pass) failed.insert(id);
    }
    std::printf("%d of 10 criteria failed\n", failures);
    if (known.empty()) return failures == 0 ? 0 : 1;
    if (failed != known) {
        std::printf("failed set differs from the known failures\n");
        return 1;
    }
    return 0;
}
