#include "rmtwarn/hellinger_indicators.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

#include "rmtwarn/parallel.hpp"

namespace rmtwarn {

TruncationRule TruncationRule::from_mp(const MPParams& params, double divisor) {
    if (!(divisor > 0.0)) {
        throw std::invalid_argument("truncation divisor must be positive");
    }
    return {mp_edges(params).second / divisor};
}

PooledSpectrum pool_spectra(std::span<const Spectrum> spectra) {
    if (spectra.empty()) {
        throw InsufficientHistoryError("no spectra to pool");
    }
    PooledSpectrum pooled;
    pooled.end_date = spectra.back().end_date;
    for (const auto& s : spectra) {
        pooled.eigenvalues.insert(pooled.eigenvalues.end(), s.eigenvalues.begin(), s.eigenvalues.end());
    }
    return pooled;
}

BinnedDensity empirical_density(const PooledSpectrum& pooled, std::span<const double> edges) {
    return histogram_density(pooled.eigenvalues, edges);
}

BinnedDensity truncate_modify(const BinnedDensity& empirical, const BinnedDensity& reference,
                              const TruncationRule& rule) {
    if (empirical.edges != reference.edges || empirical.mass.size() != reference.mass.size()) {
        throw std::invalid_argument("truncate_modify: empirical and reference supports differ");
    }
    BinnedDensity out = empirical;
    for (std::size_t b = 0; b < out.bins(); ++b) {
        if (out.center(b) < rule.lambda_star) {
            out.mass[b] = std::min(empirical.mass[b], reference.mass[b]);
        }
    }
    return out;
}

double hellinger(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size()) {
        throw std::invalid_argument(fmt::format("hellinger: length mismatch {} vs {}", p.size(), q.size()));
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] < 0.0 || q[i] < 0.0) {
            throw std::invalid_argument("hellinger: negative mass");
        }
        const double d = std::sqrt(p[i]) - std::sqrt(q[i]);
        sum += d * d;
    }
    return std::sqrt(sum);
}

std::vector<Spectrum> rolling_covariance_spectra(const ReturnPanel& returns, std::size_t window, double rescale_factor,
                                                 unsigned threads) {
    if (window < 2) {
        throw std::invalid_argument("rolling window must be >= 2");
    }
    if (returns.days() < window) {
        throw InsufficientHistoryError(
            fmt::format("need at least {} return dates for one window, have {}", window, returns.days()));
    }
    const std::size_t count = returns.days() - window + 1;
    std::vector<Spectrum> spectra(count);
    parallel_for(
        count,
        [&](std::size_t k) {
            const auto w = rolling_window(returns, k + window - 1, window);
            const auto cov = covariance(w);
            spectra[k] = clamp_negligible_negatives(rescale_spectrum(eigen_spectrum(cov.values, w.end_date),
                                                                     rescale_factor));
        },
        threads);
    return spectra;
}

ASeries a_series(const ReturnPanel& returns, const BinnedDensity& theta1, const BinnedDensity& theta2,
                 const BinnedDensity& theta3, const ASeriesConfig& config) {
    if (config.pooling < 1) {
        throw std::invalid_argument("pooling depth must be >= 1");
    }
    if (theta1.edges != theta2.edges || theta1.edges != theta3.edges) {
        throw std::invalid_argument("a_series: reference densities must share a support");
    }
    if (returns.days() + 2 < config.window + config.pooling ||
        returns.days() + 2 - config.window - config.pooling == 0) {
        throw InsufficientHistoryError(fmt::format("A-series needs more than {} return dates (T={}, P={}), have {}",
                                                   config.window + config.pooling - 2, config.window,
                                                   config.pooling, returns.days()));
    }
    const auto spectra = rolling_covariance_spectra(returns, config.window, config.rescale_factor, config.threads);
    const std::size_t count = spectra.size() - config.pooling + 1;

    ASeries out{{"A1", {}, std::vector<double>(count)},
                {"A2", {}, std::vector<double>(count)},
                {"A3", {}, std::vector<double>(count)}};
    parallel_for(
        count,
        [&](std::size_t k) {
            const auto pooled = pool_spectra(std::span<const Spectrum>(spectra).subspan(k, config.pooling));
            const auto e = empirical_density(pooled, theta1.edges);
            out.a1.values[k] = hellinger(truncate_modify(e, theta1, config.truncation).mass, theta1.mass);
            out.a2.values[k] = hellinger(truncate_modify(e, theta2, config.truncation).mass, theta2.mass);
            out.a3.values[k] = hellinger(truncate_modify(e, theta3, config.truncation).mass, theta3.mass);
        },
        config.threads);
    for (std::size_t k = 0; k < count; ++k) {
        const Date d = spectra[k + config.pooling - 1].end_date;
        out.a1.dates.push_back(d);
        out.a2.dates.push_back(d);
        out.a3.dates.push_back(d);
    }
    return out;
}

}  // namespace rmtwarn
