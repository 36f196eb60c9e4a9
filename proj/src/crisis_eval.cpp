#include "rmtwarn/crisis_eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <fmt/format.h>

#include "rmtwarn/parallel.hpp"
#include "rmtwarn/text_io.hpp"

namespace rmtwarn {

namespace {

// Counts of a candidate zone, compared exactly through integer cross products.
struct ZoneScore {
    std::size_t low_index = 0;
    std::size_t high_index = 0;
    std::uint64_t true_pos = 0;
    std::uint64_t denom = 0;  // 2 TP + FP + FN
    double width = std::numeric_limits<double>::infinity();
    double low = 0.0;
    bool valid = false;
};

// True when `a` should replace `b` as the best zone.
bool better(const ZoneScore& a, const ZoneScore& b) {
    if (!b.valid) {
        return a.valid;
    }
    if (!a.valid) {
        return false;
    }
    // F1 = 2TP / denom; compare TPa * denom_b vs TPb * denom_a. Counts are bounded
    // by the series length, so the products fit in 64 bits.
    const std::uint64_t lhs = a.true_pos * b.denom;
    const std::uint64_t rhs = b.true_pos * a.denom;
    if (lhs != rhs) {
        return lhs > rhs;
    }
    if (a.width != b.width) {
        return a.width < b.width;
    }
    return a.low < b.low;
}

std::size_t count_in(const std::vector<double>& sorted, double low, double high) {
    return static_cast<std::size_t>(std::upper_bound(sorted.begin(), sorted.end(), high) -
                                    std::lower_bound(sorted.begin(), sorted.end(), low));
}

// Index of the last date <= d, if any.
std::optional<std::size_t> last_on_or_before(const std::vector<Date>& dates, const Date& d) {
    const auto it = std::upper_bound(dates.begin(), dates.end(), d);
    if (it == dates.begin()) {
        return std::nullopt;
    }
    return static_cast<std::size_t>(it - dates.begin()) - 1;
}

std::string pad_right(const std::string& s, std::size_t width) {
    return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

std::string pad_left(const std::string& s, std::size_t width) {
    return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

std::string threshold_label(double t) { return fmt::format("{:g}%", std::round(t * 1e6) / 1e4); }

}  // namespace

MddSeries mdd(std::span<const Date> dates, std::span<const double> prices, std::size_t horizon,
              std::string reference_ticker) {
    if (horizon < 1) {
        throw std::invalid_argument("mdd: horizon must be >= 1");
    }
    if (dates.size() != prices.size()) {
        throw std::invalid_argument("mdd: dates and prices differ in length");
    }
    for (double p : prices) {
        if (!(p > 0.0)) {
            throw std::invalid_argument("mdd: prices must be positive");
        }
    }
    if (prices.size() <= horizon) {
        throw InsufficientHistoryError(
            fmt::format("mdd: horizon {} needs more than {} prices, have {}", horizon, horizon, prices.size()));
    }
    MddSeries out;
    out.horizon = horizon;
    out.reference_ticker = std::move(reference_ticker);
    const std::size_t count = prices.size() - horizon;
    out.dates.assign(dates.begin(), dates.begin() + static_cast<std::ptrdiff_t>(count));
    out.values.resize(count);
    for (std::size_t t = 0; t < count; ++t) {
        double peak = prices[t];
        double worst = 0.0;
        for (std::size_t y = t; y <= t + horizon; ++y) {
            peak = std::max(peak, prices[y]);
            worst = std::max(worst, 1.0 - prices[y] / peak);
        }
        out.values[t] = worst;
    }
    return out;
}

ZoneCalibration calibrate_danger_zone(const IndicatorSeries& indicator, const MddSeries& mdd,
                                      const std::optional<DateRange>& calibration_range,
                                      const CalibrationConfig& config) {
    if (config.grid_levels < 2) {
        throw std::invalid_argument("calibration grid needs at least 2 levels");
    }
    std::vector<double> values;
    std::vector<double> event_values;
    std::size_t i = 0;
    std::size_t j = 0;
    while (i < indicator.size() && j < mdd.values.size()) {
        if (indicator.dates[i] < mdd.dates[j]) {
            ++i;
        } else if (mdd.dates[j] < indicator.dates[i]) {
            ++j;
        } else {
            if (!calibration_range || calibration_range->contains(indicator.dates[i])) {
                values.push_back(indicator.values[i]);
                if (mdd.values[j] >= config.mdd_threshold) {
                    event_values.push_back(indicator.values[i]);
                }
            }
            ++i;
            ++j;
        }
    }
    if (values.empty()) {
        throw DataError(fmt::format("calibration: {} and MDD share no dates in the calibration range",
                                    indicator.name));
    }
    if (event_values.empty()) {
        throw DataError(fmt::format("calibration: no date with MDD >= {} in the calibration range",
                                    config.mdd_threshold));
    }
    std::sort(values.begin(), values.end());
    std::sort(event_values.begin(), event_values.end());

    std::vector<double> grid;
    const double last = static_cast<double>(values.size() - 1);
    for (std::size_t k = 0; k < config.grid_levels; ++k) {
        const double level = static_cast<double>(k) / static_cast<double>(config.grid_levels - 1);
        grid.push_back(values[static_cast<std::size_t>(std::llround(level * last))]);
    }
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    if (grid.size() < 2) {
        throw DataError(fmt::format("calibration: {} is constant on the calibration range", indicator.name));
    }

    const std::uint64_t events = event_values.size();
    std::vector<ZoneScore> best_per_low(grid.size());
    parallel_for(
        grid.size(),
        [&](std::size_t lo) {
            ZoneScore best;
            for (std::size_t hi = lo + 1; hi < grid.size(); ++hi) {
                ZoneScore s;
                s.low_index = lo;
                s.high_index = hi;
                s.low = grid[lo];
                s.width = grid[hi] - grid[lo];
                const std::uint64_t in_zone = count_in(values, grid[lo], grid[hi]);
                s.true_pos = count_in(event_values, grid[lo], grid[hi]);
                const std::uint64_t fp = in_zone - s.true_pos;
                const std::uint64_t fn = events - s.true_pos;
                s.denom = 2 * s.true_pos + fp + fn;
                s.valid = true;
                if (better(s, best)) {
                    best = s;
                }
            }
            best_per_low[lo] = best;
        },
        config.threads);

    ZoneScore best;
    for (const auto& s : best_per_low) {
        if (better(s, best)) {
            best = s;
        }
    }
    ZoneCalibration out;
    out.zone = {grid[best.low_index], grid[best.high_index]};
    out.f1 = best.denom == 0 ? 0.0 : 2.0 * static_cast<double>(best.true_pos) / static_cast<double>(best.denom);
    out.points = values.size();
    out.events = event_values.size();
    out.grid = std::move(grid);
    return out;
}

std::size_t FlagSeries::raised() const {
    return static_cast<std::size_t>(std::count(flags.begin(), flags.end(), std::uint8_t{1}));
}

FlagSeries red_flags(const IndicatorSeries& indicator, const DangerZone& zone, std::size_t lookback, double fraction) {
    if (!(fraction >= 0.0 && fraction <= 1.0)) {
        throw std::invalid_argument("red_flags: fraction must lie in [0, 1]");
    }
    if (indicator.size() <= lookback) {
        throw InsufficientHistoryError(fmt::format("red_flags: {} needs more than {} values, has {}", indicator.name,
                                                   lookback, indicator.size()));
    }
    // Guard against 0.6 * 5 landing a hair above 3 in binary.
    const double needed = fraction * static_cast<double>(lookback + 1) - 1e-9;
    FlagSeries out;
    std::size_t in_zone = 0;
    for (std::size_t t = 0; t < indicator.size(); ++t) {
        in_zone += zone.contains(indicator.values[t]) ? 1 : 0;
        if (t > lookback) {
            in_zone -= zone.contains(indicator.values[t - lookback - 1]) ? 1 : 0;
        }
        if (t >= lookback) {
            out.dates.push_back(indicator.dates[t]);
            out.flags.push_back(static_cast<double>(in_zone) >= needed ? 1 : 0);
        }
    }
    return out;
}

CrisisCalendar parse_crisis_calendar(const std::string& text) {
    const auto lines = text::data_lines(text);
    CrisisCalendar cal;
    if (lines.empty()) {
        return cal;
    }
    const auto header = text::split(lines.front());
    if (header.size() < 2 || header[0] != "date" || header[1] != "label") {
        throw DataError("crisis calendar header must be 'date,label'");
    }
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto comma = lines[i].find(',');
        if (comma == std::string_view::npos) {
            throw DataError(fmt::format("crisis calendar line {}: expected 'date,label'", i + 1));
        }
        CrisisEvent e;
        e.date = Date::parse(text::trim(lines[i].substr(0, comma)));
        e.label = std::string(text::trim(lines[i].substr(comma + 1)));
        if (!cal.events.empty() && e.date < cal.events.back().date) {
            throw DataError(fmt::format("crisis calendar line {}: dates must be ascending", i + 1));
        }
        cal.events.push_back(std::move(e));
    }
    return cal;
}

CrisisCalendar read_crisis_calendar(const std::filesystem::path& path) {
    return parse_crisis_calendar(text::read_file(path));
}

double HistoricalReport::crisis_point_ratio() const {
    if (zone_points == 0) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    return static_cast<double>(crisis_zone_points) / static_cast<double>(zone_points);
}

double HistoricalReport::false_positive_ratio() const { return 1.0 - crisis_point_ratio(); }

HistoricalReport historical_backtest(const IndicatorSeries& indicator, const DangerZone& zone,
                                     const CrisisCalendar& calendar, const HistoricalOptions& options) {
    if (!(options.fraction >= 0.0 && options.fraction <= 1.0)) {
        throw std::invalid_argument("historical_backtest: fraction must lie in [0, 1]");
    }
    HistoricalReport report;
    report.zone = zone;
    const std::size_t n = indicator.size();
    std::vector<std::uint8_t> in_crisis_window(n, 0);
    const double needed = options.fraction * static_cast<double>(options.lookback + 1) - 1e-9;

    for (const auto& event : calendar.events) {
        CrisisRow row;
        row.event = event;
        row.in_calibration = options.calibration_range && options.calibration_range->contains(event.date);
        const auto end = last_on_or_before(indicator.dates, event.date);
        const bool in_span = n > 0 && end && event.date <= indicator.dates.back() && *end >= options.lookback;
        if (in_span) {
            std::size_t count = 0;
            for (std::size_t t = *end - options.lookback; t <= *end; ++t) {
                count += zone.contains(indicator.values[t]) ? 1 : 0;
                in_crisis_window[t] = 1;
            }
            row.percent = 100.0 * static_cast<double>(count) / static_cast<double>(options.lookback + 1);
            row.predicted = static_cast<double>(count) >= needed;
        }
        report.rows.push_back(std::move(row));
    }

    for (std::size_t t = 0; t < n; ++t) {
        if (options.evaluation_range && !options.evaluation_range->contains(indicator.dates[t])) {
            continue;
        }
        if (zone.contains(indicator.values[t])) {
            ++report.zone_points;
            report.crisis_zone_points += in_crisis_window[t];
        }
    }
    return report;
}

ThresholdReport threshold_backtest(const FlagSeries& flags, const MddSeries& mdd, std::span<const double> thresholds,
                                   const std::optional<DateRange>& range) {
    std::vector<std::pair<bool, double>> joined;
    std::size_t i = 0;
    std::size_t j = 0;
    while (i < flags.dates.size() && j < mdd.dates.size()) {
        if (flags.dates[i] < mdd.dates[j]) {
            ++i;
        } else if (mdd.dates[j] < flags.dates[i]) {
            ++j;
        } else {
            if (!range || range->contains(flags.dates[i])) {
                joined.emplace_back(flags.flags[i] != 0, mdd.values[j]);
            }
            ++i;
            ++j;
        }
    }
    ThresholdReport report;
    report.dates = joined.size();
    for (const auto& [f, _] : joined) {
        report.flags += f ? 1 : 0;
    }
    for (double threshold : thresholds) {
        ThresholdRow row;
        row.threshold = threshold;
        for (const auto& [flag, value] : joined) {
            const bool crisis = value >= threshold;
            row.crises += crisis ? 1 : 0;
            row.predicted += (crisis && flag) ? 1 : 0;
            row.false_positives += (flag && !crisis) ? 1 : 0;
        }
        row.false_negatives = row.crises - row.predicted;
        report.rows.push_back(row);
    }
    return report;
}

std::string render_historical_table(const std::vector<std::pair<std::string, HistoricalReport>>& reports) {
    std::size_t label_width = std::string("False Positive (%)").size();
    std::size_t rows = 0;
    if (!reports.empty()) {
        rows = reports.front().second.rows.size();
        for (const auto& r : reports.front().second.rows) {
            label_width = std::max(label_width, r.event.label.size() + 1);
        }
    }
    for (const auto& [_, report] : reports) {
        if (report.rows.size() != rows) {
            throw std::invalid_argument("render_historical_table: reports cover different calendars");
        }
    }
    constexpr std::size_t col = 10;
    std::string out = pad_right("Crisis", label_width);
    for (const auto& [name, _] : reports) {
        out += pad_left(name, col);
    }
    out += '\n';
    for (std::size_t k = 0; k < rows; ++k) {
        const auto& first = reports.front().second.rows[k];
        out += pad_right((first.in_calibration ? "*" : "") + first.event.label, label_width);
        for (const auto& [_, report] : reports) {
            const auto& row = report.rows[k];
            out += pad_left(row.percent ? fmt::format("{:.0f}", *row.percent) : "NA", col);
        }
        out += '\n';
    }
    out += pad_right("False Positive (%)", label_width);
    for (const auto& [_, report] : reports) {
        const double fp = report.false_positive_ratio();
        out += pad_left(std::isnan(fp) ? "NA" : fmt::format("{:.2f}", 100.0 * fp), col);
    }
    out += '\n';
    return out;
}

std::string historical_csv(const HistoricalReport& report) {
    std::string out = "crisis_label,percent,predicted\n";
    for (const auto& row : report.rows) {
        out += fmt::format("{},{},{}\n", row.event.label,
                           row.percent ? text::format_double(*row.percent) : std::string("NA"),
                           row.percent ? (row.predicted ? "1" : "0") : "NA");
    }
    return out;
}

std::string render_threshold_table(const ThresholdReport& report) {
    constexpr std::size_t label_width = 18;
    constexpr std::size_t col = 9;
    std::string out = pad_right("MDD Threshold", label_width);
    for (const auto& r : report.rows) {
        out += pad_left(threshold_label(r.threshold), col);
    }
    out += '\n';
    auto line = [&](const std::string& label, auto field) {
        out += pad_right(label, label_width);
        for (const auto& r : report.rows) {
            out += pad_left(std::to_string(field(r)), col);
        }
        out += '\n';
    };
    line("Crises", [](const ThresholdRow& r) { return r.crises; });
    line("Predicted crises", [](const ThresholdRow& r) { return r.predicted; });
    line("False positives", [](const ThresholdRow& r) { return r.false_positives; });
    line("False negatives", [](const ThresholdRow& r) { return r.false_negatives; });
    return out;
}

std::string threshold_csv(const ThresholdReport& report) {
    std::string out = "threshold,crises,predicted,fp,fn\n";
    for (const auto& r : report.rows) {
        out += fmt::format("{},{},{},{},{}\n", text::format_double(r.threshold), r.crises, r.predicted,
                           r.false_positives, r.false_negatives);
    }
    return out;
}

}  // namespace rmtwarn
