#include <cstdlib>
#include <exception>
#include <iostream>
#include <stdexcept>
#include <string>

#include <CLI11.hpp>

#include "rmtwarn/pipeline.hpp"

namespace {

int fail(int code, const std::string& kind, const std::string& message) {
    std::cerr << "rmtwarn: " << kind << ": " << message << '\n';
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    using namespace rmtwarn;

    CLI::App app{"Random-matrix instability indicators and crisis backtests"};
    app.require_subcommand(1, 1);
    std::string config_path;
    std::string output_dir;
    unsigned threads = 0;
    bool threads_set = false;

    for (const char* name : {"ingest", "reference", "indicators", "backtest", "report"}) {
        auto* sub = app.add_subcommand(name, std::string("run the ") + name + " stage");
        sub->add_option("-c,--config", config_path, "config file")->required();
        sub->add_option("-o,--output", output_dir, "output directory (overrides output.dir)");
        sub->add_option("-j,--threads", threads, "worker threads (0 = hardware)")
            ->each([&](const std::string&) { threads_set = true; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        const auto stage = parse_stage(app.get_subcommands().front()->get_name());
        RunConfig config = load_config(config_path);
        if (!output_dir.empty()) {
            config.output_dir = output_dir;
        }
        if (threads_set) {
            config.threads = threads;
        }
        run_stage(*stage, config);
    } catch (const ConfigError& e) {
        return fail(kExitConfig, "config error", e.what());
    } catch (const std::invalid_argument& e) {
        return fail(kExitConfig, "invalid parameter", e.what());
    } catch (const DegenerateAssetError& e) {
        return fail(kExitDegenerate, "degenerate asset", e.what());
    } catch (const InsufficientHistoryError& e) {
        return fail(kExitHistory, "insufficient history", e.what());
    } catch (const DataError& e) {
        return fail(kExitData, "data error", e.what());
    } catch (const std::exception& e) {
        return fail(kExitFailure, "error", e.what());
    }
    return kExitOk;
}
