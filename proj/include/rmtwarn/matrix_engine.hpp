/**
 * @file matrix_engine.hpp
 * @brief Rolling windows, covariance/correlation matrices and their spectra.
 *
 * All estimators use the biased 1/T normalization:
 *
 *     X*  = X with each row's mean removed
 *     CV  = (1/T) X* X*'
 *     CR  = (1/T) S S',  S(j,:) = X*(j,:) / sqrt(var_j),  var_j = (1/T) |X*(j,:)|^2
 *
 * Weighted correlation (market-cap or volume weights w):
 *
 *     CRw(i,j) = CR(i,j) * w_i w_j / sum_k w_k^2
 *
 * Everything here is a pure function of its inputs.
 */

#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "rmtwarn/core.hpp"
#include "rmtwarn/market_data.hpp"

namespace rmtwarn {

/// Row variance (1/T) below which an asset is treated as constant.
inline constexpr double kVarianceFloor = 1e-18;

/// N x T block of log-returns ending at `end_date` (inclusive).
struct RollingWindow {
    Date end_date;
    Eigen::MatrixXd data;
    std::vector<std::string> tickers;  ///< Optional; used to name degenerate assets.

    [[nodiscard]] Eigen::Index assets() const { return data.rows(); }
    [[nodiscard]] Eigen::Index length() const { return data.cols(); }
};

struct CovarianceMatrix {
    Date end_date;
    Eigen::MatrixXd values;
};

struct CorrelationMatrix {
    Date end_date;
    Eigen::MatrixXd values;
};

/// Eigenvalues sorted descending.
struct Spectrum {
    Date end_date;
    std::vector<double> eigenvalues;

    [[nodiscard]] double largest() const { return eigenvalues.empty() ? 0.0 : eigenvalues.front(); }
};

/// The T return columns ending at column `end_index` (inclusive) of `returns`.
/// Throws InsufficientHistoryError when end_index + 1 < T.
RollingWindow rolling_window(const ReturnPanel& returns, std::size_t end_index, std::size_t length);

/// Throws std::invalid_argument when T < 2.
RollingWindow center_rows(const RollingWindow& window);

/// Centers internally. Throws std::invalid_argument when T < 2.
CovarianceMatrix covariance(const RollingWindow& window);

/// Throws DegenerateAssetError when a row's variance is <= kVarianceFloor.
CorrelationMatrix correlation(const RollingWindow& window);

/// Throws std::invalid_argument on a non-positive or non-finite weight or size mismatch.
Eigen::MatrixXd weight_correlation(const Eigen::MatrixXd& correlation, std::span<const double> weights);

/// Eigenvalues of a symmetric matrix, descending. The input is symmetrized as
/// (A + A')/2 first. Throws std::invalid_argument when |A - A'| exceeds 1e-9 of
/// max|A| (or 1e-12 absolute for tiny matrices).
Spectrum eigen_spectrum(const Eigen::MatrixXd& matrix, Date end_date = {});

/// Multiplies every eigenvalue by `factor` (> 0).
Spectrum rescale_spectrum(const Spectrum& spectrum, double factor);

/// Sets eigenvalues in (-1e-9 * max|lambda|, 0) to exactly zero; leaves larger
/// negative values alone.
Spectrum clamp_negligible_negatives(const Spectrum& spectrum);

/// 1 / mean over assets of the (1/T) variance of each return row, restricted to
/// columns [first, last). Throws InsufficientHistoryError for fewer than 2 columns,
/// DataError when the mean variance is zero.
double mean_variance_rescale_factor(const ReturnPanel& returns, std::size_t first, std::size_t last);

/// Mean of the off-diagonal entries of the correlation matrix of columns
/// [first, last). Used to pick the equicorrelation parameter of the references.
double mean_pairwise_correlation(const ReturnPanel& returns, std::size_t first, std::size_t last);

/// Column indices [first, last) of `dates` falling in `range`; empty when none.
std::pair<std::size_t, std::size_t> date_slice(const std::vector<Date>& dates, const DateRange& range);

}  // namespace rmtwarn
