#pragma once

// Probabilistic streamline tracking: seed initialization from the low-rank fit,
// per-step filtering of every fiber, compartment selection, direction sampling
// and second-order Runge-Kutta integration.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <optional>
#include <random>
#include <thread>
#include <vector>

#include "fanfilter/bingham.hpp"
#include "fanfilter/error.hpp"
#include "fanfilter/field.hpp"
#include "fanfilter/lowrank.hpp"
#include "fanfilter/lut.hpp"
#include "fanfilter/quaternion.hpp"
#include "fanfilter/streamline.hpp"
#include "fanfilter/ukf.hpp"

namespace fanfilter {

struct TrackerConfig {
    Model model = Model::bingham;
    int rank = 2;
    double step_mm = 0.5;
    double wm_threshold = 0.4;
    double max_angle_deg = 60.0;
    int max_steps = 2000;
    int max_tries = 100;
    double min_fraction = 0.05;  // fibers below this share of the total fraction are dropped at the seed
    double rank_gain = 0.05;     // required drop in relative model error per additional fiber at the seed
    bool bidirectional = false;
    bool fix_beta_zero = false;  // start every fiber isotropic (beta = 0, no prior variance on beta)
    NoiseConfig noise = NoiseConfig::defaults(Model::bingham);
    SigmaParams sigma{};
};

struct Luts {
    const ConvLut* conv = nullptr;
    const InitLut* init = nullptr;
};

using Rng = std::mt19937_64;

/// Independent generator for one (seed point, repetition) pair.
inline Rng stream_rng(std::uint64_t global_seed, std::uint64_t seed_index, std::uint64_t repetition) {
    std::seed_seq seq{static_cast<std::uint32_t>(global_seed), static_cast<std::uint32_t>(global_seed >> 32),
                      static_cast<std::uint32_t>(seed_index), static_cast<std::uint32_t>(seed_index >> 32),
                      static_cast<std::uint32_t>(repetition), static_cast<std::uint32_t>(repetition >> 32)};
    return Rng(seq);
}

/// Angle between two axes (antipodally folded), radians in [0, pi/2].
inline double axial_angle(const Vec3& a, const Vec3& b) {
    const double c = std::min(1.0, std::abs(a.dot(b)) / (a.norm() * b.norm()));
    return std::acos(c);
}

namespace detail {

inline UkfModel ukf_model(const TrackerConfig& cfg, const Luts& luts) {
    UkfModel m;
    m.model = cfg.model;
    m.lut = luts.conv;
    m.noise = cfg.noise;
    m.sigma = cfg.sigma;
    return m;
}

inline Vec3 any_perpendicular(const Vec3& v) { return tangent_frame(v).first; }

}  // namespace detail

namespace detail {

/// Compartments for a given set of low-rank peaks: orientation from the peak,
/// (kappa, beta) from the residual Hessian, fractions by NNLS over the
/// unit-fraction responses. Returns the compartments and the relative error of
/// the resulting model.
inline std::pair<std::vector<BinghamCompartment>, double> compartments_from_peaks(
    const SymTensor6& fodf, const std::vector<FiberPeak>& peaks, const TrackerConfig& cfg, const Luts& luts) {
    std::vector<BinghamCompartment> comps;
    const UkfModel m = ukf_model(cfg, luts);
    for (std::size_t i = 0; i < peaks.size(); ++i) {
        BinghamCompartment c;
        if (cfg.model == Model::lowrank) {
            c.q = quat_from_frame(peaks[i].v, any_perpendicular(peaks[i].v));
            c.kappa = kKappaMax;
            c.beta = 0.0;
            c.alpha = peaks[i].alpha;
            comps.push_back(c);
            continue;
        }
        if (!(peaks[i].alpha >= 1e-6)) continue;
        const TangentHessian h = tangent_hessian(residual_fodf(fodf, peaks, i), peaks[i].v);
        KappaBeta kb;
        if (h.flagged) {
            // no usable anisotropy information: isotropic fanning at the larger curvature
            kb = init_from_eigs(h.lambda1, h.lambda1, *luts.init);
            kb.beta = 0.0;
        } else {
            kb = init_from_eigs(h.lambda1, h.lambda2, *luts.init);
        }
        if (cfg.model == Model::watson || cfg.fix_beta_zero) kb.beta = 0.0;
        c.q = quat_from_frame(peaks[i].v, h.u2);
        c.kappa = kb.kappa;
        c.beta = kb.beta;
        comps.push_back(c);
    }
    SymTensor6 model;
    if (!comps.empty()) {
        std::vector<SymTensor6> resp;
        for (const auto& c : comps) resp.push_back(compartment_response(1.0, c.q, c.kappa, c.beta, m));
        if (cfg.model != Model::lowrank) {
            const auto alphas = nnls_fractions(fodf, resp);
            for (std::size_t i = 0; i < comps.size(); ++i) comps[i].alpha = alphas[i];
        }
        for (std::size_t i = 0; i < comps.size(); ++i) model.add_scaled(comps[i].alpha, resp[i]);
    }
    const double norm = apolar_norm(fodf);
    return {comps, norm > 0.0 ? apolar_norm(fodf - model) / norm : 0.0};
}

}  // namespace detail

/// Initial filter states at a point. Ranks 1..cfg.rank are tried in turn; an
/// additional fiber is kept only if it lowers the relative model error by at
/// least cfg.rank_gain (a single broad fiber otherwise splits into two peaks).
inline std::vector<UkfFiberState> init_seed_state(const SymTensor6& fodf, const TrackerConfig& cfg, const Luts& luts) {
    if (cfg.rank < 1 || cfg.rank > 3) throw ConfigError("rank must be 1, 2 or 3");
    std::vector<BinghamCompartment> comps;
    double err = std::numeric_limits<double>::infinity();
    for (int k = 1; k <= cfg.rank; ++k) {
        const auto peaks = fit_low_rank(fodf, k);
        if (peaks.empty()) break;
        auto [c, e] = detail::compartments_from_peaks(fodf, peaks, cfg, luts);
        if (k > 1 && !(e < err - cfg.rank_gain)) break;
        comps = std::move(c);
        err = e;
    }

    double total = 0.0;
    for (const auto& c : comps) total += c.alpha;
    std::vector<UkfFiberState> out;
    if (!(total > 0.0)) return out;
    for (const auto& c : comps) {
        if (c.alpha < cfg.min_fraction * total) continue;
        UkfFiberState s;
        s.mean << c.alpha, c.kappa, c.beta, 0.0, 0.0, 0.0;
        s.chart_q = c.q;
        for (int k = 0; k < kStateDim; ++k) s.cov(k, k) = 10.0 * cfg.noise.q[static_cast<std::size_t>(k)];
        if (cfg.model == Model::watson || cfg.fix_beta_zero) s.cov(kBeta, kBeta) = 0.0;
        if (cfg.model == Model::lowrank) s.cov(kKappa, kKappa) = s.cov(kBeta, kBeta) = 0.0;
        out.push_back(s);
    }
    return out;
}

namespace detail {

/// Updates every fiber once, in order of descending fraction, with the others
/// entering at their current means.
inline void update_fibers(std::vector<UkfFiberState>& states, const SymTensor6& z, const UkfModel& m) {
    std::vector<std::size_t> order(states.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return states[a].alpha() > states[b].alpha(); });
    for (std::size_t i : order) {
        std::vector<BinghamCompartment> others;
        for (std::size_t j = 0; j < states.size(); ++j)
            if (j != i) others.push_back(states[j].compartment());
        states[i] = ukf_update(states[i], z, others, m);
    }
}

/// Fiber whose main axis is closest to d; ties go to the larger fraction.
inline std::optional<std::size_t> select_fiber(const std::vector<UkfFiberState>& states, const Vec3& d) {
    std::optional<std::size_t> best;
    double best_angle = 0.0;
    for (std::size_t i = 0; i < states.size(); ++i) {
        if (!(states[i].alpha() > 0.0)) continue;
        const double a = axial_angle(states[i].mu1(), d);
        if (!best || a < best_angle || (a == best_angle && states[i].alpha() > states[*best].alpha())) {
            best = i;
            best_angle = a;
        }
    }
    return best;
}

/// A direction within the angle gate of d, or nothing.
inline std::optional<Vec3> draw_direction(const UkfFiberState& s, const Vec3& d, const TrackerConfig& cfg, Rng& rng) {
    const double gate = cfg.max_angle_deg * std::numbers::pi / 180.0;
    if (cfg.model == Model::lowrank) {
        Vec3 v = s.mu1();
        if (v.dot(d) < 0.0) v = -v;
        if (axial_angle(v, d) <= gate) return v;
        return std::nullopt;
    }
    const BinghamCompartment c = s.compartment();
    for (int k = 0; k < cfg.max_tries; ++k) {
        const Vec3 v = sample_bingham(c, d, rng);
        if (axial_angle(v, d) <= gate) return v;
    }
    return std::nullopt;
}

enum class PointCheck { ok, bounds, wm };

inline PointCheck check_point(const FodfField& f, const Vec3& p, const TrackerConfig& cfg, FodfSample& out) {
    auto s = interp_fodf(f, p);
    if (!s) return PointCheck::bounds;
    if (s->wm < cfg.wm_threshold) return PointCheck::wm;
    out = *s;
    return PointCheck::ok;
}

inline Termination to_reason(PointCheck c) { return c == PointCheck::bounds ? Termination::bounds : Termination::wm_exit; }

inline Streamline track_one_way(const FodfField& field, const Seed& seed, const TrackerConfig& cfg, const Luts& luts,
                                Rng& rng) {
    Streamline sl;
    FodfSample here;
    Vec3 p = seed.position;
    Vec3 d = seed.direction.normalized();
    if (const auto c = check_point(field, p, cfg, here); c != PointCheck::ok) {
        sl.reason = to_reason(c);
        return sl;
    }
    auto states = init_seed_state(here.t, cfg, luts);
    if (states.empty()) {
        sl.reason = Termination::angle_fail;
        return sl;
    }
    const UkfModel m = ukf_model(cfg, luts);
    const double h = cfg.step_mm;
    sl.points.push_back(p);
    for (int step = 0; step < cfg.max_steps; ++step) {
        try {
            update_fibers(states, here.t, m);
        } catch (const FilterDivergence&) {
            sl.reason = Termination::divergence;
            return sl;
        }
        auto sel = select_fiber(states, d);
        std::optional<Vec3> d1;
        if (sel) d1 = draw_direction(states[*sel], d, cfg, rng);
        if (!d1) {
            sl.reason = Termination::angle_fail;
            return sl;
        }

        const Vec3 ph = p + 0.5 * h * *d1;
        FodfSample half;
        if (const auto c = check_point(field, ph, cfg, half); c != PointCheck::ok) {
            sl.reason = to_reason(c);
            return sl;
        }
        try {
            update_fibers(states, half.t, m);
        } catch (const FilterDivergence&) {
            sl.reason = Termination::divergence;
            return sl;
        }
        sel = select_fiber(states, d);
        std::optional<Vec3> d2;
        if (sel) d2 = draw_direction(states[*sel], d, cfg, rng);
        if (!d2) {
            sl.reason = Termination::angle_fail;
            return sl;
        }

        const Vec3 next = p + h * *d2;
        if (const auto c = check_point(field, next, cfg, here); c != PointCheck::ok) {
            sl.reason = to_reason(c);
            return sl;
        }
        p = next;
        d = *d2;
        sl.points.push_back(p);
    }
    sl.reason = Termination::max_steps;
    return sl;
}

}  // namespace detail

/// One streamline from a seed. With cfg.bidirectional the backward half is
/// tracked first from a fresh initialization and prepended in reverse order.
inline Streamline track_streamline(const FodfField& field, const Seed& seed, const TrackerConfig& cfg,
                                   const Luts& luts, Rng& rng) {
    if (!luts.conv || !luts.init) throw ContractViolation("track_streamline: lookup tables missing");
    if (!cfg.bidirectional) return detail::track_one_way(field, seed, cfg, luts, rng);
    const Streamline back = detail::track_one_way(field, {seed.position, -seed.direction}, cfg, luts, rng);
    Streamline fwd = detail::track_one_way(field, seed, cfg, luts, rng);
    if (back.points.size() > 1) {
        std::vector<Vec3> pts(back.points.rbegin(), back.points.rend() - 1);
        pts.insert(pts.end(), fwd.points.begin(), fwd.points.end());
        fwd.points = std::move(pts);
    }
    return fwd;
}

/// Tracks every seed `repetitions` times with independent generators, on
/// `threads` workers. Output order is (seed index, repetition) regardless of
/// the number of workers.
inline std::vector<Streamline> track_all(const FodfField& field, const std::vector<Seed>& seeds, int repetitions,
                                         const TrackerConfig& cfg, const Luts& luts, std::uint64_t global_seed,
                                         int threads = 1) {
    const std::size_t reps = static_cast<std::size_t>(std::max(0, repetitions));
    const std::size_t n = seeds.size() * reps;
    std::vector<Streamline> out(n);
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t k = next++; k < n; k = next++) {
            try {
                Rng rng = stream_rng(global_seed, k / reps, k % reps);
                out[k] = track_streamline(field, seeds[k / reps], cfg, luts, rng);
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next = n;
            }
        }
    };
    const int t = std::max(1, std::min<int>(threads, static_cast<int>(std::max<std::size_t>(n, 1))));
    if (t == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < t; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (failure) std::rethrow_exception(failure);
    return out;
}

inline std::map<Termination, std::size_t> reason_counts(const std::vector<Streamline>& s) {
    std::map<Termination, std::size_t> c;
    for (Termination t : kTrackingReasons) c[t] = 0;
    for (const auto& sl : s) ++c[sl.reason];
    return c;
}

inline std::vector<Streamline> drop_short(std::vector<Streamline> s, double min_length_mm) {
    std::erase_if(s, [&](const Streamline& sl) { return sl.length() < min_length_mm; });
    return s;
}

/// Seeds where reference streamlines cross the plane through `point` with
/// normal `normal`: one per sign change of the signed distance between
/// consecutive vertices, tangent oriented towards the positive side.
inline std::vector<Seed> seeds_from_reference(const std::vector<Streamline>& ref, const Vec3& point,
                                              const Vec3& normal) {
    const double nn = normal.norm();
    if (!(nn > 0.0)) throw ContractViolation("seeds_from_reference: zero plane normal");
    const Vec3 n = normal / nn;
    std::vector<Seed> out;
    for (const auto& sl : ref)
        for (std::size_t k = 0; k + 1 < sl.points.size(); ++k) {
            const Vec3& a = sl.points[k];
            const Vec3& b = sl.points[k + 1];
            const double sa = (a - point).dot(n), sb = (b - point).dot(n);
            if ((sa < 0.0) == (sb < 0.0)) continue;
            const double t = sa / (sa - sb);
            Vec3 dir = (b - a).normalized();
            if (dir.dot(n) < 0.0) dir = -dir;
            out.push_back({a + t * (b - a), dir});
        }
    return out;
}

}  // namespace fanfilter
