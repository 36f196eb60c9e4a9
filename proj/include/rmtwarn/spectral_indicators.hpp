// B-series indicators: spectral radius and trace of the rolling covariance,
// spectral radius of the rolling correlation and of its market-cap / volume
// weighted versions, and the trailing moving average of the volume-weighted one.

#pragma once

#include <span>
#include <string>
#include <vector>

#include "rmtwarn/hellinger_indicators.hpp"
#include "rmtwarn/matrix_engine.hpp"

namespace rmtwarn {

/// Largest eigenvalue of the covariance (B1).
double b1(const CovarianceMatrix& cov);
/// Trace of the covariance (B2).
double b2(const CovarianceMatrix& cov);
/// Largest eigenvalue of the correlation (B3); lies in [1, N].
double b3(const CorrelationMatrix& corr);
/// Largest eigenvalue of weight_correlation(corr, weights) (B3A with market caps,
/// B3B with volumes).
double b3_weighted(const CorrelationMatrix& corr, std::span<const double> weights);

/// Strictly trailing mean: out(t) = (1/window) * sum_{k=1..window} in(t - k), by
/// position. Emitted for positions window .. n-1. Throws InsufficientHistoryError
/// when the series is shorter than `window`.
IndicatorSeries moving_average(const IndicatorSeries& series, std::size_t window = 150);

struct BSeriesConfig {
    std::size_t window = 150;
    /// Multiply B1/B2 by rescale_factor (off by default: raw covariance units).
    bool rescale = false;
    double rescale_factor = 1.0;
    std::size_t smoothing = 150;  ///< B3C averaging length.
    unsigned threads = 0;
};

struct BSeries {
    IndicatorSeries b1{"B1", {}, {}};
    IndicatorSeries b2{"B2", {}, {}};
    IndicatorSeries b3{"B3", {}, {}};
    bool has_b3a = false;
    bool has_b3b = false;
    IndicatorSeries b3a{"B3A", {}, {}};
    IndicatorSeries b3b{"B3B", {}, {}};
    IndicatorSeries b3c{"B3C", {}, {}};
    /// Dates dropped from B3A / B3B because a weight was not strictly positive.
    std::vector<Date> skipped_b3a;
    std::vector<Date> skipped_b3b;
};

/// All B-series on return columns window-1 .. D-1. B3A / B3B are computed when the
/// panel carries market caps / volumes; B3C when B3B has more than `smoothing`
/// values.
BSeries b_series(const ReturnPanel& returns, const BSeriesConfig& config);

}  // namespace rmtwarn
