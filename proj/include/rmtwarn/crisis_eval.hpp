/**
 * @file crisis_eval.hpp
 * @brief Drawdown targets, danger-zone calibration, red flags and backtests.
 *
 * Forward maximum drawdown of a reference price R at horizon H:
 *
 *     MDD_H(t) = max_{t <= x <= y <= t+H} (1 - R(y) / R(x))
 *
 * A danger zone is a closed interval [low, high] of indicator values. A red
 * flag is raised at t0 when at least fraction * (L + 1) of the indicator values
 * on [t0 - L, t0] (L + 1 points, by position) lie in the zone.
 *
 * Two evaluations are provided:
 *   - historical: for each dated crisis, the share of the L + 1 points ending at
 *     the crisis that are in the zone, and the share of all in-zone points that
 *     fall in some crisis lookback;
 *   - threshold: every date whose MDD reaches a threshold is a crisis, and flags
 *     are scored date by date.
 */

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rmtwarn/core.hpp"
#include "rmtwarn/hellinger_indicators.hpp"

namespace rmtwarn {

struct MddSeries {
    std::vector<Date> dates;
    std::vector<double> values;
    std::size_t horizon = 100;
    std::string reference_ticker;
};

/// MDD for every t with H future observations (prices.size() - H values), O(H)
/// per date. Throws std::invalid_argument on H < 1, non-positive prices or size
/// mismatch, InsufficientHistoryError when prices.size() <= H.
MddSeries mdd(std::span<const Date> dates, std::span<const double> prices, std::size_t horizon,
              std::string reference_ticker = {});

struct DangerZone {
    double low = 0.0;
    double high = 0.0;

    [[nodiscard]] bool contains(double v) const { return low <= v && v <= high; }
};

struct CalibrationConfig {
    double mdd_threshold = 0.15;  ///< Event: MDD_H(t) >= threshold.
    std::size_t grid_levels = 101;  ///< Quantile levels 0, 1/(G-1), ..., 1.
    unsigned threads = 0;
};

struct ZoneCalibration {
    DangerZone zone;
    double f1 = 0.0;
    std::size_t points = 0;  ///< Overlapping dates used.
    std::size_t events = 0;  ///< Of which MDD reached the threshold.
    std::vector<double> grid;  ///< Candidate bounds (distinct indicator quantiles).
};

/// Grid search over pairs low < high of indicator quantiles in the calibration
/// range, maximizing the F1 score of "value in [low, high]" against the MDD
/// event. Ties go to the narrower zone, then the lower `low`. Throws DataError
/// when the overlap is empty, the indicator is constant on it, or no event occurs.
ZoneCalibration calibrate_danger_zone(const IndicatorSeries& indicator, const MddSeries& mdd,
                                      const std::optional<DateRange>& calibration_range,
                                      const CalibrationConfig& config = {});

struct FlagSeries {
    std::vector<Date> dates;
    std::vector<std::uint8_t> flags;

    [[nodiscard]] std::size_t raised() const;
};

/// Flags for positions lookback .. n-1. Throws InsufficientHistoryError when the
/// series has at most `lookback` values.
FlagSeries red_flags(const IndicatorSeries& indicator, const DangerZone& zone, std::size_t lookback = 100,
                     double fraction = 0.6);

struct CrisisEvent {
    Date date;
    std::string label;
};

struct CrisisCalendar {
    std::vector<CrisisEvent> events;
};

/// `date,label` CSV; dates must be ascending.
CrisisCalendar parse_crisis_calendar(const std::string& text);
CrisisCalendar read_crisis_calendar(const std::filesystem::path& path);

struct HistoricalOptions {
    std::size_t lookback = 100;
    double fraction = 0.6;
    /// Range over which the in-zone point ratios are counted (whole series if unset).
    std::optional<DateRange> evaluation_range;
    /// Crises inside this range are marked as in-sample.
    std::optional<DateRange> calibration_range;
};

struct CrisisRow {
    CrisisEvent event;
    std::optional<double> percent;  ///< Unset (NA) when the crisis is outside the series span.
    bool predicted = false;
    bool in_calibration = false;
};

struct HistoricalReport {
    DangerZone zone;
    std::vector<CrisisRow> rows;
    std::size_t zone_points = 0;         ///< In-zone points in the evaluation range.
    std::size_t crisis_zone_points = 0;  ///< Of which inside some crisis lookback.
    /// crisis_zone_points / zone_points (NaN when there are no in-zone points).
    [[nodiscard]] double crisis_point_ratio() const;
    /// 1 - crisis_point_ratio.
    [[nodiscard]] double false_positive_ratio() const;
};

HistoricalReport historical_backtest(const IndicatorSeries& indicator, const DangerZone& zone,
                                     const CrisisCalendar& calendar, const HistoricalOptions& options = {});

struct ThresholdRow {
    double threshold = 0.0;
    std::size_t crises = 0;
    std::size_t predicted = 0;
    std::size_t false_positives = 0;
    std::size_t false_negatives = 0;
};

struct ThresholdReport {
    std::size_t dates = 0;  ///< Overlapping flag/MDD dates evaluated.
    std::size_t flags = 0;  ///< Raised flags among them.
    std::vector<ThresholdRow> rows;
};

/// Scores flags against MDD exceedances on the dates both series share (and that
/// fall in `range`, when given).
ThresholdReport threshold_backtest(const FlagSeries& flags, const MddSeries& mdd, std::span<const double> thresholds,
                                   const std::optional<DateRange>& range = std::nullopt);

/// Table-style text: one row per crisis, one column per named report, then the
/// false-positive percentage row. In-sample crises are prefixed with '*'.
std::string render_historical_table(const std::vector<std::pair<std::string, HistoricalReport>>& reports);
/// `crisis_label,percent,predicted` rows (percent "NA" when out of span).
std::string historical_csv(const HistoricalReport& report);

/// Thresholds as columns; rows Crises / Predicted crises / False positives / False negatives.
std::string render_threshold_table(const ThresholdReport& report);
/// `threshold,crises,predicted,fp,fn` rows.
std::string threshold_csv(const ThresholdReport& report);

}  // namespace rmtwarn
