/**
 * @file market_data.hpp
 * @brief Price-file ingestion, calendar alignment and log-return panels.
 *
 * Input is one CSV file per ticker (ticker = file stem) with header
 * `date,close[,volume,market_cap]` and ISO-8601 dates. Rows must be strictly
 * increasing in date. An empty value cell means "not observed that day" and is
 * filled by carrying the previous value of the same column forward.
 *
 * Alignment keeps the dates common to every ticker (intersection), or the
 * calendar of one designated reference ticker, in which case the other
 * tickers are forward-filled onto it.
 *
 * Prices are expected already adjusted for dividends, splits and currency.
 */

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "rmtwarn/core.hpp"

namespace rmtwarn {

/// One parsed row. Missing cells are nullopt.
struct PriceRecord {
    Date date;
    std::optional<double> close;
    std::optional<double> volume;
    std::optional<double> market_cap;
};

/// Raw per-ticker series as read from disk.
struct TickerSeries {
    std::string ticker;
    bool has_volume = false;
    bool has_market_cap = false;
    std::vector<PriceRecord> records;
};

struct AlignmentPolicy {
    enum class Calendar { intersection, reference_ticker };
    Calendar calendar = Calendar::intersection;
    /// Only used with Calendar::reference_ticker.
    std::string reference_ticker;
};

/// Aligned N x D price panel. Rows are assets, columns are dates.
struct AssetPanel {
    std::vector<std::string> tickers;
    std::vector<Date> dates;
    Eigen::MatrixXd close;
    std::optional<Eigen::MatrixXd> volume;
    std::optional<Eigen::MatrixXd> market_cap;

    [[nodiscard]] std::size_t assets() const { return tickers.size(); }
    [[nodiscard]] std::size_t days() const { return dates.size(); }
    [[nodiscard]] std::optional<std::size_t> ticker_index(const std::string& ticker) const;

    friend bool operator==(const AssetPanel& a, const AssetPanel& b);
};

/// N x (D-1) log-returns. Column k is the return from panel date k to k+1 and is
/// stamped with panel date k+1. Volume/market-cap, when present, are the values
/// on the stamped date.
struct ReturnPanel {
    std::vector<std::string> tickers;
    std::vector<Date> dates;
    Eigen::MatrixXd returns;
    std::optional<Eigen::MatrixXd> volume;
    std::optional<Eigen::MatrixXd> market_cap;

    [[nodiscard]] std::size_t assets() const { return tickers.size(); }
    [[nodiscard]] std::size_t days() const { return dates.size(); }
};

/// Parses one per-ticker file. Throws DataError on malformed rows, unordered
/// dates or invalid values (close <= 0, volume < 0, market_cap <= 0).
TickerSeries read_ticker_file(const std::filesystem::path& path);
TickerSeries parse_ticker_csv(const std::string& ticker, const std::string& text);

/// Aligns already-parsed series onto a common calendar.
AssetPanel align_series(const std::vector<TickerSeries>& series, const AlignmentPolicy& policy = {});

AssetPanel load_panel(const std::vector<std::filesystem::path>& paths, const AlignmentPolicy& policy = {});

/// Splits a panel back into per-ticker series (inverse of align_series on aligned input).
std::vector<TickerSeries> to_series(const AssetPanel& panel);

/// Throws InsufficientHistoryError when the panel has fewer than two dates.
ReturnPanel log_returns(const AssetPanel& panel);

/// Distribution of the unit shocks driving a synthetic regime.
enum class ShockDistribution {
    gaussian,
    student_t3,      ///< Student t(3) rescaled to unit variance.
    student_t3_raw,  ///< Student t(3) as drawn (variance 3).
};

struct Regime {
    double volatility = 0.01;  ///< Per-asset daily return scale.
    double correlation = 0.0;  ///< Pairwise correlation of the shocks, in [0, 1].
    std::size_t length = 1;    ///< Number of return days.
    ShockDistribution distribution = ShockDistribution::gaussian;
};

struct SyntheticSpec {
    std::size_t assets = 10;
    std::vector<Regime> regimes;
    Date start = Date(2000, 1, 3);
    double initial_price = 100.0;
    bool with_volume = false;
    bool with_market_cap = false;
};

/// Deterministic one-factor panel. Each day's returns are
/// volatility * (sqrt(c) * f + sqrt(1 - c) * e_j) with f, e_j i.i.d. shocks of the
/// regime's distribution. Dates are consecutive weekdays from `start`; the panel
/// has sum(length) + 1 dates. Throws std::invalid_argument on bad parameters.
AssetPanel synthetic_panel(const SyntheticSpec& spec, std::uint64_t seed);

/// Panel cache: a single CSV with header `field,date,<tickers...>` and one row per
/// (field, date), field in {close, volume, market_cap}. Values are written in
/// shortest round-trip form, so the file reloads bit-identical.
void write_panel_cache(const AssetPanel& panel, const std::filesystem::path& path);
AssetPanel read_panel_cache(const std::filesystem::path& path);

}  // namespace rmtwarn
