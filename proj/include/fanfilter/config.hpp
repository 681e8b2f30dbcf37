#pragma once

// JSON run configuration and phantom specification. Unknown keys are errors.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <map>
#include <optional>
#include <string>
#include <type_traits>

#include <json.hpp>

#include "fanfilter/error.hpp"
#include "fanfilter/metrics.hpp"
#include "fanfilter/phantom.hpp"
#include "fanfilter/tracker.hpp"

namespace fanfilter {

using Json = nlohmann::json;

struct RunPaths {
    std::string fodf, lut_dir, seeds, output, report;
};

struct RunConfig {
    Model model = Model::bingham;
    int rank = 2;
    double step_mm = 0.5;
    int seeds_per_point = 3;
    double wm_threshold = 0.4;
    double max_angle_deg = 60.0;
    std::map<Model, std::array<double, kStateDim>> q{{Model::bingham, NoiseConfig::defaults(Model::bingham).q},
                                                     {Model::watson, NoiseConfig::defaults(Model::watson).q},
                                                     {Model::lowrank, NoiseConfig::defaults(Model::lowrank).q}};
    double r = 0.02;
    std::uint64_t rng_seed = 1;
    int max_steps = 2000;
    double min_length_mm = 10.0;
    bool density_filter = true;
    DensityParams density{};
    RoiSet rois{};
    RunPaths paths{};
    bool fix_beta_zero = false;
    bool bidirectional = false;
    int threads = 0;  // 0 = all logical cores

    TrackerConfig tracker() const {
        TrackerConfig c;
        c.model = model;
        c.rank = rank;
        c.step_mm = step_mm;
        c.wm_threshold = wm_threshold;
        c.max_angle_deg = max_angle_deg;
        c.max_steps = max_steps;
        c.bidirectional = bidirectional;
        c.fix_beta_zero = fix_beta_zero;
        c.noise = {q.at(model), r};
        return c;
    }
};

namespace detail {

inline void check_keys(const Json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected a JSON object");
    for (const auto& [k, v] : j.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || k == a;
        if (!ok) throw ConfigError(where + ": unknown key '" + k + "'");
    }
}

template <class T>
T get_as(const Json& j, const std::string& key) {
    try {
        if constexpr (std::is_same_v<T, double>) {
            if (!j.is_number()) throw ConfigError("");
        } else if constexpr (std::is_unsigned_v<T> && !std::is_same_v<T, bool>) {
            if (!j.is_number_unsigned()) throw ConfigError("");
        } else if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
            if (!j.is_number_integer()) throw ConfigError("");
        }
        return j.get<T>();
    } catch (const std::exception&) {
        throw ConfigError("'" + key + "' has the wrong type");
    }
}

template <class T>
void read_opt(const Json& j, const char* key, T& out) {
    if (j.contains(key)) out = get_as<T>(j.at(key), key);
}

inline Vec3 get_vec3(const Json& j, const std::string& key) {
    if (!j.is_array() || j.size() != 3) throw ConfigError("'" + key + "' must be an array of three numbers");
    Vec3 v;
    for (int a = 0; a < 3; ++a) v[a] = get_as<double>(j[static_cast<std::size_t>(a)], key);
    if (!v.allFinite()) throw ConfigError("'" + key + "' must be finite");
    return v;
}

inline Model parse_model(const std::string& s) {
    for (Model m : {Model::bingham, Model::watson, Model::lowrank})
        if (s == model_name(m)) return m;
    throw ConfigError("unknown model '" + s + "'");
}

/// State noise keys per model; parameters a model does not carry stay at 0.
inline std::array<double, kStateDim> parse_q(const Json& j, Model m) {
    static const char* names[kStateDim] = {"alpha", "kappa", "beta", "e1", "e2", "e3"};
    std::array<bool, kStateDim> used{true, m != Model::lowrank, m == Model::bingham, true, true, true};
    const std::string where = std::string("Q.") + model_name(m);
    if (!j.is_object()) throw ConfigError(where + ": expected a JSON object");
    std::array<double, kStateDim> q{};
    for (int i = 0; i < kStateDim; ++i) {
        if (!used[static_cast<std::size_t>(i)]) {
            if (j.contains(names[i])) throw ConfigError(where + ": key '" + names[i] + "' does not apply to this model");
            continue;
        }
        if (!j.contains(names[i])) throw ConfigError(where + ": missing key '" + names[i] + "'");
        q[static_cast<std::size_t>(i)] = get_as<double>(j.at(names[i]), where + "." + names[i]);
        if (!(q[static_cast<std::size_t>(i)] >= 0.0)) throw ConfigError(where + "." + names[i] + " must be >= 0");
    }
    if (j.size() != static_cast<std::size_t>(std::count(used.begin(), used.end(), true)))
        throw ConfigError(where + ": unknown key");
    return q;
}

inline Region parse_region(const Json& j) {
    if (!j.is_object() || j.size() != 1) throw ConfigError("ROI must be {\"box\": ...} or {\"sphere\": ...}");
    if (j.contains("box")) {
        const auto& b = j.at("box");
        check_keys(b, {"min", "max"}, "box");
        if (!b.contains("min") || !b.contains("max")) throw ConfigError("box needs 'min' and 'max'");
        const Vec3 lo = get_vec3(b.at("min"), "min"), hi = get_vec3(b.at("max"), "max");
        if (!(lo.array() <= hi.array()).all()) throw ConfigError("box min must not exceed max");
        return Region::box(lo, hi);
    }
    if (j.contains("sphere")) {
        const auto& s = j.at("sphere");
        check_keys(s, {"center", "radius"}, "sphere");
        if (!s.contains("center") || !s.contains("radius")) throw ConfigError("sphere needs 'center' and 'radius'");
        const double r = get_as<double>(s.at("radius"), "radius");
        if (!(r > 0.0)) throw ConfigError("sphere radius must be > 0");
        return Region::sphere(get_vec3(s.at("center"), "center"), r);
    }
    throw ConfigError("ROI must be {\"box\": ...} or {\"sphere\": ...}");
}

inline std::vector<Region> parse_regions(const Json& j, const std::string& key) {
    if (!j.is_array()) throw ConfigError("'" + key + "' must be an array");
    std::vector<Region> out;
    for (const auto& r : j) out.push_back(parse_region(r));
    return out;
}

inline Json parse_json_text(const std::string& text, const std::string& what) {
    try {
        return Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw ConfigError(what + ": " + e.what());
    }
}

}  // namespace detail

inline RunConfig parse_run_config(const Json& j) {
    using namespace detail;
    check_keys(j,
               {"model", "rank", "step_mm", "seeds_per_point", "wm_threshold", "max_angle_deg", "Q", "R", "rng_seed",
                "max_steps", "min_length_mm", "density_filter", "rois", "paths", "fix_beta_zero", "bidirectional",
                "threads"},
               "config");
    RunConfig c;
    if (j.contains("model")) c.model = parse_model(get_as<std::string>(j.at("model"), "model"));
    read_opt(j, "rank", c.rank);
    read_opt(j, "step_mm", c.step_mm);
    read_opt(j, "seeds_per_point", c.seeds_per_point);
    read_opt(j, "wm_threshold", c.wm_threshold);
    read_opt(j, "max_angle_deg", c.max_angle_deg);
    read_opt(j, "R", c.r);
    read_opt(j, "rng_seed", c.rng_seed);
    read_opt(j, "max_steps", c.max_steps);
    read_opt(j, "min_length_mm", c.min_length_mm);
    read_opt(j, "fix_beta_zero", c.fix_beta_zero);
    read_opt(j, "bidirectional", c.bidirectional);
    read_opt(j, "threads", c.threads);
    if (j.contains("Q")) {
        const auto& q = j.at("Q");
        check_keys(q, {"bingham", "watson", "lowrank"}, "Q");
        for (const auto& [k, v] : q.items()) c.q[parse_model(k)] = parse_q(v, parse_model(k));
    }
    if (j.contains("density_filter")) {
        const auto& d = j.at("density_filter");
        check_keys(d, {"enabled", "min_visits", "max_low_frac"}, "density_filter");
        read_opt(d, "enabled", c.density_filter);
        read_opt(d, "min_visits", c.density.min_visits);
        read_opt(d, "max_low_frac", c.density.max_low_frac);
    }
    if (j.contains("rois")) {
        const auto& r = j.at("rois");
        check_keys(r, {"include", "exclude"}, "rois");
        if (r.contains("include")) c.rois.include = parse_regions(r.at("include"), "include");
        if (r.contains("exclude")) c.rois.exclude = parse_regions(r.at("exclude"), "exclude");
    }
    if (j.contains("paths")) {
        const auto& p = j.at("paths");
        check_keys(p, {"fodf", "lut_dir", "seeds", "output", "report"}, "paths");
        read_opt(p, "fodf", c.paths.fodf);
        read_opt(p, "lut_dir", c.paths.lut_dir);
        read_opt(p, "seeds", c.paths.seeds);
        read_opt(p, "output", c.paths.output);
        read_opt(p, "report", c.paths.report);
    }

    if (c.rank < 1 || c.rank > 3) throw ConfigError("rank must lie in [1, 3]");
    if (!(c.step_mm > 0.0) || !std::isfinite(c.step_mm)) throw ConfigError("step_mm must be > 0");
    if (c.seeds_per_point < 1) throw ConfigError("seeds_per_point must be >= 1");
    if (!(c.wm_threshold >= 0.0 && c.wm_threshold <= 1.0)) throw ConfigError("wm_threshold must lie in [0, 1]");
    if (!(c.max_angle_deg > 0.0 && c.max_angle_deg <= 90.0)) throw ConfigError("max_angle_deg must lie in (0, 90]");
    if (!(c.r > 0.0) || !std::isfinite(c.r)) throw ConfigError("R must be > 0");
    if (c.max_steps < 1) throw ConfigError("max_steps must be >= 1");
    if (!(c.min_length_mm >= 0.0)) throw ConfigError("min_length_mm must be >= 0");
    if (c.density.min_visits < 1) throw ConfigError("density_filter.min_visits must be >= 1");
    if (!(c.density.max_low_frac >= 0.0 && c.density.max_low_frac <= 1.0))
        throw ConfigError("density_filter.max_low_frac must lie in [0, 1]");
    if (c.threads < 0) throw ConfigError("threads must be >= 0");
    return c;
}

inline RunConfig parse_run_config_text(const std::string& text) {
    return parse_run_config(detail::parse_json_text(text, "config"));
}

inline PhantomShape parse_shape(const std::string& s) {
    for (PhantomShape p : {PhantomShape::straight, PhantomShape::crossing, PhantomShape::arc, PhantomShape::fan})
        if (s == shape_name(p)) return p;
    throw ConfigError("unknown phantom shape '" + s + "'");
}

inline PhantomSpec parse_phantom_spec(const Json& j) {
    using namespace detail;
    check_keys(j,
               {"shape", "dims", "spacing", "kappa", "beta", "noise_sigma", "radius_mm", "margin_mm",
                "crossing_angle_deg", "arc_radius_mm", "fan_half_angle_mu2_deg", "fan_half_angle_mu3_deg",
                "fan_start_frac", "fan_window_mm", "ref_spacing_mm", "seed_plane_frac", "rng_seed"},
               "phantom spec");
    PhantomSpec s;
    if (j.contains("shape")) s.shape = parse_shape(get_as<std::string>(j.at("shape"), "shape"));
    if (j.contains("dims")) {
        const auto& d = j.at("dims");
        if (!d.is_array() || d.size() != 3) throw ConfigError("'dims' must be an array of three integers");
        for (std::size_t a = 0; a < 3; ++a) {
            const auto v = get_as<std::int64_t>(d[a], "dims");
            if (v < 2 || v > 4096) throw ConfigError("'dims' entries must lie in [2, 4096]");
            s.dims[a] = static_cast<std::uint32_t>(v);
        }
    }
    if (j.contains("spacing")) s.spacing = get_vec3(j.at("spacing"), "spacing");
    read_opt(j, "kappa", s.kappa);
    read_opt(j, "beta", s.beta);
    read_opt(j, "noise_sigma", s.noise_sigma);
    read_opt(j, "radius_mm", s.radius_mm);
    read_opt(j, "margin_mm", s.margin_mm);
    read_opt(j, "crossing_angle_deg", s.crossing_angle_deg);
    read_opt(j, "arc_radius_mm", s.arc_radius_mm);
    read_opt(j, "fan_half_angle_mu2_deg", s.fan_half_angle_mu2_deg);
    read_opt(j, "fan_half_angle_mu3_deg", s.fan_half_angle_mu3_deg);
    read_opt(j, "fan_start_frac", s.fan_start_frac);
    read_opt(j, "fan_window_mm", s.fan_window_mm);
    read_opt(j, "ref_spacing_mm", s.ref_spacing_mm);
    read_opt(j, "seed_plane_frac", s.seed_plane_frac);
    read_opt(j, "rng_seed", s.rng_seed);
    s.validate();
    return s;
}

inline PhantomSpec parse_phantom_spec_text(const std::string& text) {
    return parse_phantom_spec(detail::parse_json_text(text, "phantom spec"));
}

}  // namespace fanfilter
