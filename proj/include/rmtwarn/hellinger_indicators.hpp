/**
 * @file hellinger_indicators.hpp
 * @brief A-series indicators: distance of the pooled covariance spectrum to the
 * reference densities.
 *
 * At each date t the covariance spectra of the last P windows (each rescaled)
 * are pooled into P*N eigenvalues and histogrammed on the reference support,
 * giving E. Below lambda* = lambda+ / divisor the empirical mass is capped by
 * the reference:
 *
 *     E*(bin) = min(E(bin), Ref(bin))   if center(bin) <  lambda*
 *     E*(bin) = E(bin)                  otherwise
 *
 * and the indicator is the discrete Hellinger distance
 *
 *     D(p, q) = sqrt( sum_i (sqrt(p_i) - sqrt(q_i))^2 ).
 *
 * E* is deliberately left unnormalized. A1, A2, A3 use theta1, theta2, theta3.
 * A3 is an inverted indicator: turmoil pulls it down.
 */

#pragma once

#include <span>
#include <string>
#include <vector>

#include "rmtwarn/core.hpp"
#include "rmtwarn/market_data.hpp"
#include "rmtwarn/matrix_engine.hpp"
#include "rmtwarn/reference_dists.hpp"

namespace rmtwarn {

/// A dated scalar series (A1..A3, B1..B3, B3A, B3B, B3C).
struct IndicatorSeries {
    std::string name;
    std::vector<Date> dates;
    std::vector<double> values;

    [[nodiscard]] std::size_t size() const { return values.size(); }
};

struct PooledSpectrum {
    Date end_date;
    std::vector<double> eigenvalues;
};

struct TruncationRule {
    double lambda_star = 0.0;

    /// lambda+ / divisor.
    static TruncationRule from_mp(const MPParams& params, double divisor = 10.0);
};

/// Concatenates the spectra in order; end_date is that of the last one. Throws
/// InsufficientHistoryError for an empty input.
PooledSpectrum pool_spectra(std::span<const Spectrum> spectra);

/// Normalized histogram of the pooled eigenvalues (out-of-range values are
/// clamped into the first/last bin).
BinnedDensity empirical_density(const PooledSpectrum& pooled, std::span<const double> edges);

/// Throws std::invalid_argument when the two densities have different edges.
BinnedDensity truncate_modify(const BinnedDensity& empirical, const BinnedDensity& reference,
                              const TruncationRule& rule);

/// Throws std::invalid_argument on length mismatch or a negative entry.
double hellinger(std::span<const double> p, std::span<const double> q);

struct ASeriesConfig {
    std::size_t window = 150;   ///< T
    std::size_t pooling = 20;   ///< P
    double rescale_factor = 1.0;
    TruncationRule truncation;
    unsigned threads = 0;
};

struct ASeries {
    IndicatorSeries a1;
    IndicatorSeries a2;
    IndicatorSeries a3;
};

/// Covariance spectra (rescaled, negligible negatives clamped) of every window
/// of length `window`, i.e. for return columns window-1 .. D-1.
std::vector<Spectrum> rolling_covariance_spectra(const ReturnPanel& returns, std::size_t window, double rescale_factor,
                                                 unsigned threads = 0);

/// The three A-series on dates index window+pooling-2 .. D-1 of the return panel
/// (returns.days() - window - pooling + 2 values). References must share edges. Throws
/// InsufficientHistoryError when that count is not positive.
ASeries a_series(const ReturnPanel& returns, const BinnedDensity& theta1, const BinnedDensity& theta2,
                 const BinnedDensity& theta3, const ASeriesConfig& config);

}  // namespace rmtwarn
