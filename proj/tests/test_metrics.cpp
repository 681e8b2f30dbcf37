#include <gtest/gtest.h>

#include "common.hpp"

using namespace fanfilter;
using namespace testutil;

namespace {

double brute_force_q95(const std::vector<Streamline>& a, const std::vector<Streamline>& b) {
    std::vector<double> d;
    for (const auto& sa : a)
        for (const auto& p : sa.points) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& sb : b)
                for (const auto& q : sb.points) best = std::min(best, (p - q).squaredNorm());
            d.push_back(best);
        }
    std::sort(d.begin(), d.end());
    const auto k = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(d.size())));
    return std::sqrt(d[k - 1]);
}

std::vector<Streamline> cloud(std::mt19937_64& rng, std::size_t n, std::size_t per_line, double extent) {
    std::uniform_real_distribution<double> u(0.0, extent);
    std::vector<Streamline> out;
    for (std::size_t i = 0; i < n; i += per_line) {
        Streamline s;
        for (std::size_t k = i; k < std::min(n, i + per_line); ++k) s.points.emplace_back(u(rng), u(rng), u(rng));
        out.push_back(s);
    }
    return out;
}

Streamline line(const Vec3& a, const Vec3& b, double step = 0.5) {
    Streamline s;
    const int n = static_cast<int>(std::round((b - a).norm() / step));
    for (int k = 0; k <= n; ++k) s.points.push_back(a + (b - a) * (static_cast<double>(k) / n));
    return s;
}

}  // namespace

TEST(Hausdorff, IdenticalSetsGiveZero) {
    std::mt19937_64 rng(81);
    const auto a = cloud(rng, 500, 50, 10.0);
    EXPECT_EQ(directed_hausdorff_q95(a, a), 0.0);
}

TEST(Hausdorff, OutlierBeyondQuantileRank) {
    EXPECT_EQ(q95_rank(101), 96u);
    Streamline b, a;
    for (int k = 0; k < 100; ++k) {
        b.points.emplace_back(k, 0, 0);
        a.points.emplace_back(k, 1, 0);
    }
    a.points.emplace_back(50, 50, 0);
    EXPECT_EQ(directed_hausdorff_q95({a}, {b}), 1.0);
    // not symmetric: every point of b is within 1 of a
    EXPECT_EQ(directed_hausdorff_q95({b}, {a}), 1.0);
    a.points.resize(95);
    for (int k = 0; k < 6; ++k) a.points.emplace_back(k, 7, 0);
    EXPECT_EQ(directed_hausdorff_q95({a}, {b}), 7.0);
}

TEST(Hausdorff, MatchesBruteForceExactly) {
    std::mt19937_64 rng(82);
    for (std::size_t n : {1u, 7u, 100u, 1000u, 10000u}) {
        const auto a = cloud(rng, n, 37, 30.0);
        const auto b = cloud(rng, std::max<std::size_t>(1, n / 2), 23, 30.0);
        EXPECT_EQ(directed_hausdorff_q95(a, b), brute_force_q95(a, b)) << n;
        EXPECT_EQ(directed_hausdorff_q95(b, a, 3), brute_force_q95(b, a)) << n;
    }
    // clustered and degenerate geometries
    std::vector<Streamline> flat{line(Vec3(0, 0, 0), Vec3(40, 0, 0), 0.1)};
    const auto spread = cloud(rng, 3000, 100, 40.0);
    EXPECT_EQ(directed_hausdorff_q95(spread, flat), brute_force_q95(spread, flat));
    EXPECT_EQ(directed_hausdorff_q95(flat, spread), brute_force_q95(flat, spread));
    std::vector<Streamline> one{Streamline{{Vec3(1, 2, 3)}, Termination::none}};
    EXPECT_EQ(directed_hausdorff_q95(spread, one), brute_force_q95(spread, one));
}

TEST(Hausdorff, EnlargingTargetNeverIncreases) {
    std::mt19937_64 rng(83);
    const auto a = cloud(rng, 2000, 40, 20.0);
    auto b = cloud(rng, 200, 20, 20.0);
    double prev = directed_hausdorff_q95(a, b);
    for (int k = 0; k < 5; ++k) {
        const auto more = cloud(rng, 200, 20, 20.0);
        b.insert(b.end(), more.begin(), more.end());
        const double h = directed_hausdorff_q95(a, b);
        EXPECT_LE(h, prev);
        prev = h;
    }
}

TEST(Hausdorff, EmptyInputIsAnError) {
    const std::vector<Streamline> some{line(Vec3::Zero(), Vec3::UnitX())};
    EXPECT_THROW(directed_hausdorff_q95({}, some), MetricError);
    EXPECT_THROW(directed_hausdorff_q95(some, {}), MetricError);
    EXPECT_THROW(directed_hausdorff_q95(some, {Streamline{}}), MetricError);
}

TEST(DensityFilter, Examples) {
    const VoxelGrid g{{40, 40, 40}, Vec3::Ones(), Vec3::Zero()};
    std::vector<Streamline> s(100, line(Vec3(5, 5, 5), Vec3(5, 5, 30)));
    EXPECT_EQ(density_filter(s, g).size(), 100u);  // all identical
    s.push_back(line(Vec3(30, 30, 5), Vec3(30, 30, 30)));
    auto kept = density_filter(s, g);
    ASSERT_EQ(kept.size(), 100u);
    for (const auto& k : kept) EXPECT_EQ(k.points.front().x(), 5.0);

    // two disjoint dense bundles
    std::vector<Streamline> two;
    for (int k = 0; k < 10; ++k) {
        two.push_back(line(Vec3(5 + 0.1 * k, 5, 5), Vec3(5 + 0.1 * k, 5, 30)));
        two.push_back(line(Vec3(30, 30 + 0.1 * k, 5), Vec3(30, 30 + 0.1 * k, 30)));
    }
    EXPECT_EQ(density_filter(two, g).size(), 20u);
    EXPECT_THROW(density_filter(two, g, {0, 0.3}), ContractViolation);
}

TEST(DensityFilter, LowFractionThreshold) {
    const VoxelGrid g{{40, 40, 40}, Vec3::Ones(), Vec3::Zero()};
    // 10 points: 7 shared with a partner, 3 alone
    Streamline partner, probe;
    for (int k = 0; k < 7; ++k) partner.points.emplace_back(10, 10, 10 + k);
    probe.points = partner.points;
    for (int k = 0; k < 3; ++k) probe.points.emplace_back(20, 20, 10 + k);
    EXPECT_EQ(density_filter({partner, probe}, g, {2, 0.3}).size(), 2u);   // 3/10 <= 0.3
    EXPECT_EQ(density_filter({partner, probe}, g, {2, 0.29}).size(), 1u);  // 3/10 > 0.29
    // points outside the grid count as low
    probe.points.emplace_back(-5, 0, 0);
    EXPECT_EQ(density_filter({partner, probe}, g, {2, 0.3}).size(), 1u);
}

TEST(DensityFilter, TwoPassStable) {
    const auto p = gen_phantom(PhantomSpec{}, luts().conv);
    TrackerConfig cfg;
    cfg.noise = NoiseConfig::defaults(Model::bingham);
    auto s = track_all(p.field, p.seeds, 10, cfg, {&luts().conv, &luts().init}, 21);
    // a handful of strays
    for (int k = 0; k < 3; ++k) s.push_back(line(Vec3(2, 2 + 3 * k, 2), Vec3(2, 2 + 3 * k, 30)));
    const auto g = VoxelGrid::of(p.field);
    const auto once = density_filter(s, g);
    EXPECT_LE(once.size(), s.size() - 3);
    EXPECT_GT(once.size(), s.size() / 2);
    EXPECT_EQ(density_filter(once, g).size(), once.size());
}

TEST(RoiFilter, Examples) {
    std::vector<Streamline> s(5, line(Vec3(10, 10, 0), Vec3(10, 10, 40)));
    s.push_back(line(Vec3(30, 30, 0), Vec3(30, 30, 40)));
    EXPECT_EQ(roi_filter(s, {}).size(), s.size());
    RoiSet inc;
    inc.include.push_back(Region::sphere(Vec3(10, 10, 20), 2.0));
    EXPECT_EQ(roi_filter(s, inc).size(), 5u);
    RoiSet everything;
    everything.exclude.push_back(Region::box(Vec3(-100, -100, -100), Vec3(100, 100, 100)));
    EXPECT_TRUE(roi_filter(s, everything).empty());
    // all includes must be hit
    inc.include.push_back(Region::box(Vec3(29, 29, 0), Vec3(31, 31, 40)));
    EXPECT_TRUE(roi_filter(s, inc).empty());
    RoiSet both;
    both.include.push_back(Region::box(Vec3(0, 0, 19), Vec3(40, 40, 21)));
    both.exclude.push_back(Region::sphere(Vec3(30, 30, 35), 1.0));
    EXPECT_EQ(roi_filter(s, both).size(), 5u);
}

TEST(RoiFilter, BoundaryAndIdempotence) {
    EXPECT_TRUE(Region::sphere(Vec3::Zero(), 1.0).contains(Vec3(1, 0, 0)));
    EXPECT_FALSE(Region::sphere(Vec3::Zero(), 1.0).contains(Vec3(1.0 + 1e-12, 0, 0)));
    EXPECT_TRUE(Region::box(Vec3::Zero(), Vec3::Ones()).contains(Vec3::Ones()));
    std::mt19937_64 rng(84);
    const auto s = cloud(rng, 4000, 40, 20.0);
    RoiSet r;
    r.include.push_back(Region::sphere(Vec3(10, 10, 10), 3.0));
    r.exclude.push_back(Region::box(Vec3(0, 0, 0), Vec3(4, 4, 4)));
    const auto once = roi_filter(s, r);
    EXPECT_GT(once.size(), 0u);
    EXPECT_LT(once.size(), s.size());
    EXPECT_EQ(format_tsl(roi_filter(once, r)), format_tsl(once));
}
