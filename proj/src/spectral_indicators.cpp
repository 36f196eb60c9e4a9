#include "rmtwarn/spectral_indicators.hpp"

#include <cmath>
#include <optional>
#include <stdexcept>

#include <fmt/format.h>

#include "rmtwarn/parallel.hpp"

namespace rmtwarn {

namespace {

std::optional<std::vector<double>> positive_column(const Eigen::MatrixXd& m, Eigen::Index col) {
    std::vector<double> w(static_cast<std::size_t>(m.rows()));
    for (Eigen::Index j = 0; j < m.rows(); ++j) {
        const double v = m(j, col);
        if (!(v > 0.0) || !std::isfinite(v)) {
            return std::nullopt;
        }
        w[static_cast<std::size_t>(j)] = v;
    }
    return w;
}

}  // namespace

double b1(const CovarianceMatrix& cov) { return eigen_spectrum(cov.values).largest(); }

double b2(const CovarianceMatrix& cov) { return cov.values.trace(); }

double b3(const CorrelationMatrix& corr) { return eigen_spectrum(corr.values).largest(); }

double b3_weighted(const CorrelationMatrix& corr, std::span<const double> weights) {
    return eigen_spectrum(weight_correlation(corr.values, weights)).largest();
}

IndicatorSeries moving_average(const IndicatorSeries& series, std::size_t window) {
    if (window < 1) {
        throw std::invalid_argument("moving_average: window must be >= 1");
    }
    if (series.size() < window) {
        throw InsufficientHistoryError(
            fmt::format("moving_average: {} needs {} values, has {}", series.name, window, series.size()));
    }
    IndicatorSeries out;
    out.name = series.name + "_ma";
    for (std::size_t t = window; t < series.size(); ++t) {
        double sum = 0.0;
        for (std::size_t k = 1; k <= window; ++k) {
            sum += series.values[t - k];
        }
        out.dates.push_back(series.dates[t]);
        out.values.push_back(sum / static_cast<double>(window));
    }
    return out;
}

BSeries b_series(const ReturnPanel& returns, const BSeriesConfig& config) {
    if (config.window < 2) {
        throw std::invalid_argument("rolling window must be >= 2");
    }
    if (returns.days() < config.window) {
        throw InsufficientHistoryError(fmt::format("B-series need at least {} return dates, have {}", config.window,
                                                   returns.days()));
    }
    const double scale = config.rescale ? config.rescale_factor : 1.0;
    if (!(scale > 0.0)) {
        throw std::invalid_argument("B-series rescale factor must be positive");
    }
    const std::size_t count = returns.days() - config.window + 1;

    struct Row {
        Date date;
        double b1 = 0.0;
        double b2 = 0.0;
        double b3 = 0.0;
        std::optional<double> b3a;
        std::optional<double> b3b;
    };
    std::vector<Row> rows(count);
    parallel_for(
        count,
        [&](std::size_t k) {
            const std::size_t end = k + config.window - 1;
            const auto w = rolling_window(returns, end, config.window);
            const auto cov = covariance(w);
            const auto corr = correlation(w);
            Row& r = rows[k];
            r.date = w.end_date;
            r.b1 = scale * b1(cov);
            r.b2 = scale * b2(cov);
            r.b3 = b3(corr);
            const auto col = static_cast<Eigen::Index>(end);
            if (returns.market_cap) {
                if (auto weights = positive_column(*returns.market_cap, col)) {
                    r.b3a = b3_weighted(corr, *weights);
                }
            }
            if (returns.volume) {
                if (auto weights = positive_column(*returns.volume, col)) {
                    r.b3b = b3_weighted(corr, *weights);
                }
            }
        },
        config.threads);

    BSeries out;
    out.has_b3a = returns.market_cap.has_value();
    out.has_b3b = returns.volume.has_value();
    for (const auto& r : rows) {
        out.b1.dates.push_back(r.date);
        out.b1.values.push_back(r.b1);
        out.b2.dates.push_back(r.date);
        out.b2.values.push_back(r.b2);
        out.b3.dates.push_back(r.date);
        out.b3.values.push_back(r.b3);
        if (out.has_b3a) {
            if (r.b3a) {
                out.b3a.dates.push_back(r.date);
                out.b3a.values.push_back(*r.b3a);
            } else {
                out.skipped_b3a.push_back(r.date);
            }
        }
        if (out.has_b3b) {
            if (r.b3b) {
                out.b3b.dates.push_back(r.date);
                out.b3b.values.push_back(*r.b3b);
            } else {
                out.skipped_b3b.push_back(r.date);
            }
        }
    }
    if (out.has_b3b && out.b3b.size() > config.smoothing) {
        out.b3c = moving_average(out.b3b, config.smoothing);
        out.b3c.name = "B3C";
    }
    return out;
}

}  // namespace rmtwarn
