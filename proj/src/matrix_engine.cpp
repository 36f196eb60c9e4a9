#include "rmtwarn/matrix_engine.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

namespace rmtwarn {

namespace {

// Gram matrix (1/T) A A' with the upper triangle mirrored from the lower one so
// the result is exactly symmetric.
Eigen::MatrixXd scaled_gram(const Eigen::MatrixXd& a) {
    Eigen::MatrixXd g = (a * a.transpose()) / static_cast<double>(a.cols());
    g.triangularView<Eigen::StrictlyUpper>() = g.transpose();
    return g;
}

void require_length(const RollingWindow& w) {
    if (w.length() < 2) {
        throw std::invalid_argument(fmt::format("window needs T >= 2, got {}", w.length()));
    }
}

}  // namespace

RollingWindow rolling_window(const ReturnPanel& returns, std::size_t end_index, std::size_t length) {
    if (length < 1 || end_index >= returns.days()) {
        throw std::invalid_argument("rolling_window: end index outside the return panel");
    }
    if (end_index + 1 < length) {
        throw InsufficientHistoryError(fmt::format("window of {} returns ending at {} needs {} more observations",
                                                   length, returns.dates[end_index].to_string(),
                                                   length - end_index - 1));
    }
    RollingWindow w;
    w.end_date = returns.dates[end_index];
    w.data = returns.returns.middleCols(static_cast<Eigen::Index>(end_index + 1 - length),
                                        static_cast<Eigen::Index>(length));
    w.tickers = returns.tickers;
    return w;
}

RollingWindow center_rows(const RollingWindow& window) {
    require_length(window);
    RollingWindow out = window;
    const Eigen::VectorXd means = window.data.rowwise().mean();
    out.data.colwise() -= means;
    return out;
}

CovarianceMatrix covariance(const RollingWindow& window) {
    const auto centered = center_rows(window);
    return {window.end_date, scaled_gram(centered.data)};
}

CorrelationMatrix correlation(const RollingWindow& window) {
    auto standardized = center_rows(window);
    const double t = static_cast<double>(window.length());
    for (Eigen::Index j = 0; j < standardized.assets(); ++j) {
        const double var = standardized.data.row(j).squaredNorm() / t;
        if (!(var > kVarianceFloor)) {
            const std::string name = static_cast<std::size_t>(j) < window.tickers.size()
                                         ? window.tickers[static_cast<std::size_t>(j)]
                                         : fmt::format("#{}", j);
            throw DegenerateAssetError(name, fmt::format("asset {} has near-constant returns (variance {:.3g}) in "
                                                         "the window ending {}",
                                                         name, var, window.end_date.to_string()));
        }
        standardized.data.row(j) /= std::sqrt(var);
    }
    return {window.end_date, scaled_gram(standardized.data)};
}

Eigen::MatrixXd weight_correlation(const Eigen::MatrixXd& correlation, std::span<const double> weights) {
    if (static_cast<Eigen::Index>(weights.size()) != correlation.rows() || correlation.rows() != correlation.cols()) {
        throw std::invalid_argument(fmt::format("weight_correlation: {} weights for a {}x{} matrix", weights.size(),
                                                correlation.rows(), correlation.cols()));
    }
    Eigen::VectorXd w(static_cast<Eigen::Index>(weights.size()));
    for (std::size_t k = 0; k < weights.size(); ++k) {
        if (!(weights[k] > 0.0) || !std::isfinite(weights[k])) {
            throw std::invalid_argument(fmt::format("weight_correlation: weight {} is {}", k, weights[k]));
        }
        w(static_cast<Eigen::Index>(k)) = weights[k];
    }
    double norm = 0.0;
    for (Eigen::Index k = 0; k < w.size(); ++k) {
        norm += w(k) * w(k);
    }
    Eigen::MatrixXd out(correlation.rows(), correlation.cols());
    for (Eigen::Index j = 0; j < out.cols(); ++j) {
        for (Eigen::Index i = 0; i < out.rows(); ++i) {
            out(i, j) = correlation(i, j) * ((w(i) * w(j)) / norm);
        }
    }
    return out;
}

Spectrum eigen_spectrum(const Eigen::MatrixXd& matrix, Date end_date) {
    if (matrix.rows() != matrix.cols()) {
        throw std::invalid_argument("eigen_spectrum: matrix is not square");
    }
    Spectrum s;
    s.end_date = end_date;
    if (matrix.size() == 0) {
        return s;
    }
    const double scale = matrix.cwiseAbs().maxCoeff();
    const double asym = (matrix - matrix.transpose()).cwiseAbs().maxCoeff();
    if (asym > std::max(1e-9 * scale, 1e-12)) {
        throw std::invalid_argument(fmt::format("eigen_spectrum: matrix not symmetric (max |A-A'| = {:.3g})", asym));
    }
    const Eigen::MatrixXd sym = 0.5 * (matrix + matrix.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) {
        throw Error("eigen_spectrum: eigenvalue iteration did not converge");
    }
    const auto& ev = solver.eigenvalues();
    s.eigenvalues.assign(ev.data(), ev.data() + ev.size());
    std::sort(s.eigenvalues.begin(), s.eigenvalues.end(), std::greater<>());
    return s;
}

Spectrum rescale_spectrum(const Spectrum& spectrum, double factor) {
    if (!(factor > 0.0) || !std::isfinite(factor)) {
        throw std::invalid_argument(fmt::format("rescale_spectrum: factor must be positive, got {}", factor));
    }
    Spectrum out = spectrum;
    for (auto& v : out.eigenvalues) {
        v *= factor;
    }
    return out;
}

Spectrum clamp_negligible_negatives(const Spectrum& spectrum) {
    Spectrum out = spectrum;
    double scale = 0.0;
    for (double v : out.eigenvalues) {
        scale = std::max(scale, std::abs(v));
    }
    for (auto& v : out.eigenvalues) {
        if (v < 0.0 && v > -1e-9 * scale) {
            v = 0.0;
        }
    }
    return out;
}

double mean_variance_rescale_factor(const ReturnPanel& returns, std::size_t first, std::size_t last) {
    if (last > returns.days() || first >= last || last - first < 2) {
        throw InsufficientHistoryError("rescale calibration slice needs at least 2 return dates");
    }
    const auto block = returns.returns.middleCols(static_cast<Eigen::Index>(first),
                                                  static_cast<Eigen::Index>(last - first));
    const Eigen::MatrixXd centered = block.colwise() - block.rowwise().mean();
    const double mean_var = centered.rowwise().squaredNorm().mean() / static_cast<double>(block.cols());
    if (!(mean_var > 0.0)) {
        throw DataError("rescale calibration slice has zero variance");
    }
    return 1.0 / mean_var;
}

double mean_pairwise_correlation(const ReturnPanel& returns, std::size_t first, std::size_t last) {
    if (last > returns.days() || first >= last || last - first < 2) {
        throw InsufficientHistoryError("correlation calibration slice needs at least 2 return dates");
    }
    RollingWindow w;
    w.end_date = returns.dates[last - 1];
    w.data = returns.returns.middleCols(static_cast<Eigen::Index>(first), static_cast<Eigen::Index>(last - first));
    w.tickers = returns.tickers;
    const auto cr = correlation(w).values;
    const auto n = cr.rows();
    if (n < 2) {
        return 0.0;
    }
    return (cr.sum() - cr.trace()) / static_cast<double>(n * (n - 1));
}

std::pair<std::size_t, std::size_t> date_slice(const std::vector<Date>& dates, const DateRange& range) {
    const auto lo = std::lower_bound(dates.begin(), dates.end(), range.first);
    const auto hi = std::upper_bound(dates.begin(), dates.end(), range.last);
    if (lo >= hi) {
        return {0, 0};
    }
    return {static_cast<std::size_t>(lo - dates.begin()), static_cast<std::size_t>(hi - dates.begin())};
}

}  // namespace rmtwarn
