#pragma once

// Command implementations behind the CLI: LUT build, phantom generation,
// tracking and evaluation.

#include <chrono>
#include <filesystem>
#include <ostream>
#include <string>
#include <thread>

#include "fanfilter/config.hpp"
#include "fanfilter/field.hpp"
#include "fanfilter/lut.hpp"
#include "fanfilter/metrics.hpp"
#include "fanfilter/phantom.hpp"
#include "fanfilter/streamline.hpp"
#include "fanfilter/tracker.hpp"

namespace fanfilter {

inline constexpr const char* kConvLutFile = "conv.blut";
inline constexpr const char* kInitLutFile = "init.blut";

struct LutPair {
    ConvLut conv;
    InitLut init;
    Luts view() const { return {&conv, &init}; }
};

inline LutPair load_luts(const std::string& dir) {
    namespace fs = std::filesystem;
    LutPair p{read_conv_lut((fs::path(dir) / kConvLutFile).string()), {}};
    p.init = read_init_lut((fs::path(dir) / kInitLutFile).string());
    if (!(p.init.grid == p.conv.grid)) throw ConfigError("LUT files in '" + dir + "' use different grids");
    return p;
}

/// LUTs from dir, or built in memory when dir is empty.
inline LutPair obtain_luts(const std::string& dir) {
    if (!dir.empty()) return load_luts(dir);
    LutPair p{build_conv_lut(), {}};
    p.init = build_init_lut(p.conv);
    return p;
}

inline int resolve_threads(int requested) {
    if (requested > 0) return requested;
    return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

inline void cmd_lut_build(const std::string& out_dir, std::ostream& os) {
    namespace fs = std::filesystem;
    const auto t0 = std::chrono::steady_clock::now();
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw Error("cannot create directory '" + out_dir + "': " + ec.message());
    const ConvLut conv = build_conv_lut();
    const InitLut init = build_init_lut(conv);
    write_lut((fs::path(out_dir) / kConvLutFile).string(), conv);
    write_lut((fs::path(out_dir) / kInitLutFile).string(), init);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    os << "conv nodes: " << conv.grid.node_count() << "\n"
       << "init nodes: " << init.grid.node_count() << "\n"
       << "kappa range: " << conv.grid.kappa_at(0) << " .. " << conv.grid.kappa_at(conv.grid.kappa_count() - 1) << "\n"
       << "build time: " << secs << " s\n";
}

struct PhantomFiles {
    std::string fodf, reference, seeds;
};

inline PhantomFiles phantom_files(const std::string& prefix) {
    return {prefix + ".fof", prefix + "_ref.tsl", prefix + "_seeds.txt"};
}

inline void cmd_phantom_gen(const std::string& spec_path, const std::string& prefix, const std::string& lut_dir,
                            std::ostream& os) {
    const PhantomSpec spec = parse_phantom_spec_text(detail::read_text(spec_path));
    const ConvLut conv = lut_dir.empty() ? build_conv_lut()
                                         : read_conv_lut((std::filesystem::path(lut_dir) / kConvLutFile).string());
    const Phantom ph = gen_phantom(spec, conv);
    const auto files = phantom_files(prefix);
    write_fodf_field(files.fodf, ph.field);
    write_tsl(files.reference, ph.reference);
    write_seeds(files.seeds, ph.seeds);
    os << "shape: " << shape_name(spec.shape) << "\n"
       << "voxels: " << ph.field.size() << "\n"
       << "reference streamlines: " << ph.reference.size() << "\n"
       << "seeds: " << ph.seeds.size() << "\n";
}

inline std::vector<Streamline> run_tracking(const RunConfig& cfg, int threads, std::ostream& os) {
    if (cfg.paths.fodf.empty() || cfg.paths.seeds.empty()) throw ConfigError("paths.fodf and paths.seeds are required");
    const FodfField field = read_fodf_field(cfg.paths.fodf);
    const auto seeds = read_seeds(cfg.paths.seeds);
    const LutPair luts = obtain_luts(cfg.paths.lut_dir);
    const auto all = track_all(field, seeds, cfg.seeds_per_point, cfg.tracker(), luts.view(), cfg.rng_seed,
                               resolve_threads(threads));
    for (Termination t : kTrackingReasons) os << reason_name(t) << ": " << reason_counts(all)[t] << "\n";
    auto kept = drop_short(all, cfg.min_length_mm);
    os << "streamlines: " << all.size() << " tracked, " << kept.size() << " kept (>= " << cfg.min_length_mm
       << " mm)\n";
    return kept;
}

inline void cmd_track(const std::string& config_path, int threads_override, std::ostream& os) {
    const RunConfig cfg = parse_run_config_text(detail::read_text(config_path));
    if (cfg.paths.output.empty()) throw ConfigError("paths.output is required");
    const auto s = run_tracking(cfg, threads_override > 0 ? threads_override : cfg.threads, os);
    write_tsl(cfg.paths.output, s);
}

struct EvalResult {
    double completeness_mm = 0.0, excess_mm = 0.0;
    std::size_t reference = 0, reconstructed = 0, kept = 0;
};

/// Applies the configured ROI and density filters to the reconstruction.
inline std::vector<Streamline> filter_reconstruction(const std::vector<Streamline>& rec, const RunConfig& cfg) {
    auto out = roi_filter(rec, cfg.rois);
    if (cfg.density_filter) {
        if (cfg.paths.fodf.empty()) throw ConfigError("density filtering needs paths.fodf for the voxel grid");
        out = density_filter(out, VoxelGrid::of(read_fodf_field(cfg.paths.fodf)), cfg.density);
    }
    return out;
}

inline EvalResult evaluate(const std::vector<Streamline>& ref, const std::vector<Streamline>& rec) {
    EvalResult r;
    r.reference = ref.size();
    r.reconstructed = r.kept = rec.size();
    r.completeness_mm = directed_hausdorff_q95(ref, rec);
    r.excess_mm = directed_hausdorff_q95(rec, ref);
    return r;
}

inline std::string eval_report(const EvalResult& r) {
    Json j;
    j["completeness_mm"] = r.completeness_mm;
    j["excess_mm"] = r.excess_mm;
    j["reference_streamlines"] = r.reference;
    j["reconstructed_streamlines"] = r.reconstructed;
    j["kept_streamlines"] = r.kept;
    return j.dump(2) + "\n";
}

inline EvalResult cmd_eval(const std::string& ref_path, const std::string& rec_path, const std::string& config_path,
                           std::string report_path, std::ostream& os) {
    const auto ref = read_tsl(ref_path);
    const auto rec = read_tsl(rec_path);
    std::vector<Streamline> kept = rec;
    if (!config_path.empty()) {
        const RunConfig cfg = parse_run_config_text(detail::read_text(config_path));
        kept = filter_reconstruction(rec, cfg);
        if (report_path.empty()) report_path = cfg.paths.report;
    }
    if (report_path.empty()) report_path = std::filesystem::path(rec_path).replace_extension("").string() + "_report.json";
    EvalResult r = evaluate(ref, kept);
    r.reconstructed = rec.size();
    os << "completeness h(ref, rec): " << r.completeness_mm << " mm\n"
       << "excess h(rec, ref): " << r.excess_mm << " mm\n"
       << "streamlines: " << r.reference << " reference, " << r.reconstructed << " reconstructed, " << r.kept
       << " after filtering\n";
    detail::write_text(report_path, eval_report(r));
    return r;
}

}  // namespace fanfilter
