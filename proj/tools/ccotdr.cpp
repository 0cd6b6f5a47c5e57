// Scenario-driven front end: simulate, compress, analyze, run, convert.
#include "ccotdr/pipeline.hpp"
#include "ccotdr/scenario.hpp"
#include "ccotdr/trace_io.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace ccotdr;

namespace {

enum Exit { kOk = 0, kConfig = 2, kValidation = 3, kIo = 4, kInternal = 1 };

struct Common {
    std::string config;
    std::vector<std::string> overrides;
    std::string out;
    std::optional<std::int64_t> seed;
    std::optional<int> workers;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("-c,--config", c.config, "Scenario config file")->required();
    cmd->add_option("--set", c.overrides, "Override a config key (key=value), repeatable");
    cmd->add_option("-o,--out", c.out, "Output directory (overrides output.dir)");
    cmd->add_option("--seed", c.seed, "Scenario seed (overrides scenario.seed)");
    cmd->add_option("--workers", c.workers, "Simulation worker threads (overrides campaign.workers)");
}

PreparedScenario load(const Common& c, fs::path& out_dir) {
    Config config = Config::load(c.config);
    for (const auto& o : c.overrides) config.apply_override(o);
    if (c.seed) config.set("scenario.seed", std::to_string(*c.seed));
    if (c.workers) config.set("campaign.workers", std::to_string(*c.workers));
    if (!c.out.empty()) config.set("output.dir", c.out);
    PreparedScenario p = prepare_scenario(build_scenario(config));
    out_dir = p.scenario.output_dir;
    fs::create_directories(out_dir);
    return p;
}

void convert(const fs::path& input, const fs::path& output) {
    std::ifstream in(input, std::ios::binary);
    if (!in) throw fs::filesystem_error("cannot read", input, std::make_error_code(std::errc::io_error));
    const bool to_csv = output.extension() != ".ccot";
    std::vector<TraceRecord> records = to_csv ? read_trace(in) : read_trace_csv(in);
    std::ofstream out(output, std::ios::binary);
    if (!out) throw fs::filesystem_error("cannot write", output, std::make_error_code(std::errc::io_error));
    if (to_csv) {
        write_trace_csv(out, records);
    } else {
        for (const auto& r : records) write_trace(out, r);
    }
    out.flush();
    if (!out) throw fs::filesystem_error("write failed", output, std::make_error_code(std::errc::io_error));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Coherent correlation OTDR simulator and analysis toolkit"};
    app.require_subcommand(1);

    Common sim_opts, comp_opts, ana_opts, run_opts;
    auto* sim = app.add_subcommand("simulate", "Simulate shots into <out>/shots.ccot");
    add_common(sim, sim_opts);
    auto* comp = app.add_subcommand("compress", "Compress <out>/shots.ccot into <out>/profiles.ccot");
    add_common(comp, comp_opts);
    auto* ana = app.add_subcommand("analyze", "Analyze <out>/profiles.ccot and write CSV and summary");
    add_common(ana, ana_opts);
    auto* run = app.add_subcommand("run", "Simulate, compress and analyze in one streaming pass");
    add_common(run, run_opts);

    std::string conv_in, conv_out;
    auto* conv = app.add_subcommand("convert", "Convert a trace between binary (.ccot) and CSV");
    conv->add_option("input", conv_in, "Input trace")->required();
    conv->add_option("output", conv_out, "Output file; .ccot writes binary, anything else CSV")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfig;
    }

    try {
        fs::path dir;
        if (*sim) {
            const auto p = load(sim_opts, dir);
            write_shot_file(p, dir / "shots.ccot");
        } else if (*comp) {
            const auto p = load(comp_opts, dir);
            compress_shot_file(p, dir / "shots.ccot", dir / "profiles.ccot");
        } else if (*ana) {
            const auto p = load(ana_opts, dir);
            const auto report = analyze(p, read_profile_file(p, dir / "profiles.ccot"));
            write_outputs(p, report, dir);
            for (const auto& line : report.summary()) std::cout << line << '\n';
        } else if (*run) {
            const auto p = load(run_opts, dir);
            const auto report = analyze(p, acquire(p));
            write_outputs(p, report, dir);
            for (const auto& line : report.summary()) std::cout << line << '\n';
        } else if (*conv) {
            convert(conv_in, conv_out);
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfig;
    } catch (const ValidationError& e) {
        std::cerr << "validation error: " << e.what() << '\n';
        return kValidation;
    } catch (const FormatError& e) {
        std::cerr << "format error: " << e.what() << '\n';
        return kIo;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "i/o error: " << e.what() << '\n';
        return kIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kInternal;
    }
    return kOk;
}
