#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "fanfilter/pipeline.hpp"

namespace {

enum Exit { kOk = 0, kConfig = 2, kFormat = 3, kNumeric = 4, kOther = 1 };

int env_threads(int fallback) {
    const char* v = std::getenv("FANFILTER_THREADS");
    if (!v || !*v) return fallback;
    char* end = nullptr;
    const long n = std::strtol(v, &end, 10);
    if (*end != '\0' || n < 1) throw fanfilter::ConfigError("FANFILTER_THREADS must be a positive integer");
    return static_cast<int>(n);
}

bool is_numeric(const fanfilter::Error& e) {
    using namespace fanfilter;
    return dynamic_cast<const DomainError*>(&e) || dynamic_cast<const RangeError*>(&e) ||
           dynamic_cast<const DegenerateFraction*>(&e) || dynamic_cast<const ChartDomainError*>(&e) ||
           dynamic_cast<const FilterDivergence*>(&e) || dynamic_cast<const SamplingError*>(&e) ||
           dynamic_cast<const MetricError*>(&e);
}

}  // namespace

int main(int argc, char** argv) {
    using namespace fanfilter;
    CLI::App app{"Tractography with an unscented Kalman filter over Bingham-fanned low-rank fODF models"};
    app.require_subcommand(1);

    auto* lut = app.add_subcommand("lut", "lookup tables");
    lut->require_subcommand(1);
    std::string lut_out;
    auto* lut_build = lut->add_subcommand("build", "build conv.blut and init.blut");
    lut_build->add_option("--out", lut_out, "output directory")->required();

    auto* phantom = app.add_subcommand("phantom", "synthetic fields");
    phantom->require_subcommand(1);
    std::string spec_path, prefix, phantom_luts;
    auto* phantom_gen = phantom->add_subcommand("gen", "write <prefix>.fof, <prefix>_ref.tsl, <prefix>_seeds.txt");
    phantom_gen->add_option("--spec", spec_path, "phantom spec JSON")->required();
    phantom_gen->add_option("--out", prefix, "output prefix")->required();
    phantom_gen->add_option("--luts", phantom_luts, "LUT directory (built in memory if omitted)");

    std::string config_path;
    int threads = 0;
    auto* track = app.add_subcommand("track", "track from seeds");
    track->add_option("--config", config_path, "run config JSON")->required();
    track->add_option("--threads", threads, "worker threads (default: FANFILTER_THREADS, then config, then all cores)")
        ->check(CLI::PositiveNumber);

    std::string ref_path, rec_path, eval_config, report_path;
    auto* eval = app.add_subcommand("eval", "completeness and excess of a reconstruction");
    eval->add_option("--ref", ref_path, "reference TSL")->required();
    eval->add_option("--rec", rec_path, "reconstruction TSL")->required();
    eval->add_option("--config", eval_config, "run config with ROI and density filter settings");
    eval->add_option("--report", report_path, "JSON report path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kConfig;
    }

    try {
        if (lut_build->parsed()) cmd_lut_build(lut_out, std::cout);
        if (phantom_gen->parsed()) cmd_phantom_gen(spec_path, prefix, phantom_luts, std::cout);
        if (track->parsed()) cmd_track(config_path, threads > 0 ? threads : env_threads(0), std::cout);
        if (eval->parsed()) cmd_eval(ref_path, rec_path, eval_config, report_path, std::cout);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfig;
    } catch (const FormatError& e) {
        std::cerr << "format error: " << e.what() << "\n";
        return kFormat;
    } catch (const Error& e) {
        if (is_numeric(e)) {
            std::cerr << "numeric error: " << e.what() << "\n";
            return kNumeric;
        }
        std::cerr << "error: " << e.what() << "\n";
        return kOther;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kOther;
    }
    return kOk;
}
