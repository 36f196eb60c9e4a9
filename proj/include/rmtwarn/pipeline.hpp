/**
 * @file pipeline.hpp
 * @brief Config-driven orchestration behind the `rmtwarn` command line tool.
 *
 * Stages run in the order ingest -> reference -> indicators -> backtest ->
 * report. Each stage writes its artifacts under the output directory and a
 * later stage reloads them from there, recomputing any that are missing.
 * Outputs are a pure function of the config (and seed), so re-running with the
 * caches deleted gives byte-identical files.
 *
 * Output layout (relative to output.dir):
 *
 *     panel.csv                      aligned panel cache
 *     reference/theta{1,2,3}.csv     bin_center,mass
 *     reference/meta.csv             key,value (N, T, gamma, lambda edges, rho, ...)
 *     cache/reference_<key>.csv      exact densities keyed by spec hash
 *     indicators/<NAME>.csv          date,value per series
 *     indicators/a_series.csv        date,A1,A2,A3
 *     indicators/b_series.csv        date,B1,B2,B3[,B3A,B3B,B3C]
 *     indicators/skipped.csv         series,date (dates without usable weights)
 *     indicators/meta.csv            key,value (rescale factor, ...)
 *     backtest/mdd.csv               date,mdd
 *     backtest/zones.csv             indicator,low,high,f1,points,events,source
 *     backtest/flags_<NAME>.csv      date,flag
 *     backtest/historical_<NAME>.csv crisis_label,percent,predicted
 *     backtest/historical_summary.csv indicator,zone_points,crisis_zone_points,crisis_point_ratio,false_positive_ratio
 *     backtest/threshold.csv         threshold,crises,predicted,fp,fn
 *     backtest/scatter_<NAME>.csv    date,indicator,mdd
 *     report.txt                     text tables
 */

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rmtwarn/core.hpp"
#include "rmtwarn/crisis_eval.hpp"
#include "rmtwarn/market_data.hpp"

namespace rmtwarn {

/// Environment variable consulted when the config does not set output.dir.
inline constexpr const char* kOutputDirEnv = "RMTWARN_OUTPUT_DIR";

enum class RescaleMode { fixed, mean_variance };

struct RunConfig {
    std::filesystem::path config_dir;

    // [data]
    std::vector<std::filesystem::path> panel_paths;
    AlignmentPolicy alignment;

    // [synthetic] (used when no panel paths are given)
    bool synthetic = false;
    SyntheticSpec synthetic_spec;
    std::uint64_t synthetic_seed = 1;

    // [window]
    std::size_t window = 150;
    std::size_t pooling = 20;

    // [reference]
    std::optional<double> rho = 0.5;  ///< nullopt = estimate from rho_slice
    std::optional<DateRange> rho_slice;
    std::size_t samples = 500;
    std::uint64_t reference_seed = 20150101;
    std::size_t bins = 200;
    double support_multiplier = 25.0;
    double truncation_divisor = 10.0;
    bool standardize_student = false;
    unsigned threads = 0;

    // [rescale]
    RescaleMode rescale_mode = RescaleMode::mean_variance;
    double rescale_factor = 1.0;
    std::optional<DateRange> rescale_slice;
    bool rescale_b_series = false;

    // [indicators]
    std::vector<std::string> indicators{"A1", "A2", "A3", "B1", "B2", "B3", "B3A", "B3B", "B3C"};
    std::size_t smoothing = 150;

    // [backtest]
    std::vector<std::string> backtest_indicators{"B3B", "B3C"};
    std::string threshold_indicator;  ///< Defaults to the first backtest indicator.
    std::string reference_ticker;     ///< Defaults to the first panel ticker.
    std::size_t mdd_horizon = 100;
    std::vector<double> mdd_thresholds{0.10, 0.15, 0.20, 0.25};
    std::size_t lookback = 100;
    double fraction = 0.6;
    std::optional<DateRange> calibration_range;
    std::optional<DateRange> evaluation_range;
    double objective_mdd_threshold = 0.15;
    std::size_t grid_levels = 101;
    std::optional<std::filesystem::path> calendar_path;
    std::map<std::string, DangerZone> fixed_zones;

    // [output]
    std::filesystem::path output_dir;
};

/// Parses an INI-style config (sections + key = value). Relative paths resolve
/// against the config file's directory. Throws ConfigError.
RunConfig load_config(const std::filesystem::path& path);
RunConfig parse_config(const std::string& text, const std::filesystem::path& config_dir);

/// Parses "vol:corr:length[:distribution]" entries separated by ';'.
std::vector<Regime> parse_regimes(const std::string& text);

enum class Stage { ingest, reference, indicators, backtest, report };

std::optional<Stage> parse_stage(const std::string& name);

/// Runs one stage, first producing any missing upstream artifacts.
void run_stage(Stage stage, const RunConfig& config);

/// Process exit codes.
enum ExitCode : int {
    kExitOk = 0,
    kExitFailure = 1,
    kExitConfig = 2,
    kExitData = 3,
    kExitHistory = 4,
    kExitDegenerate = 5,
};

}  // namespace rmtwarn
