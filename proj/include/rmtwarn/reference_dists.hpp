/**
 * @file reference_dists.hpp
 * @brief Binned eigenvalue densities and the three reference spectra.
 *
 *   theta1  Marchenko-Pastur law for an N x T matrix of i.i.d. N(0, sigma2)
 *           entries, gamma = N/T, integrated exactly over each bin:
 *
 *               lambda(+/-) = sigma2 (1 +/- sqrt(gamma))^2
 *               f(x) = sqrt((lambda+ - x)(x - lambda-)) / (2 pi sigma2 gamma x)
 *
 *   theta2  Monte-Carlo spectrum of (1/T) X X' with
 *               X(i,j) = rho Z0(j) + sqrt(1 - rho^2) Z(i,j),  Z, Z0 ~ N(0, 1)
 *
 *   theta3  same recipe with Z, Z0 ~ Student t(3) (raw draws by default).
 *
 * Densities live on a common support [0, multiplier * lambda+] split into
 * uniform bins; masses sum to one.
 */

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace rmtwarn {

struct MPParams {
    double sigma2 = 1.0;
    double gamma = 0.5;  ///< N / T
};

/// Histogram on explicit bin edges. mass.size() == edges.size() - 1.
struct BinnedDensity {
    std::vector<double> edges;
    std::vector<double> mass;

    [[nodiscard]] std::size_t bins() const { return mass.size(); }
    [[nodiscard]] double center(std::size_t bin) const { return 0.5 * (edges[bin] + edges[bin + 1]); }
    [[nodiscard]] double total() const;
};

enum class ReferenceKind { marchenko_pastur, gaussian_corr, student_corr };

std::string to_string(ReferenceKind kind);

struct ReferenceSpec {
    ReferenceKind kind = ReferenceKind::gaussian_corr;
    std::size_t assets = 11;        ///< N
    std::size_t observations = 150; ///< T
    double rho = 0.5;
    std::size_t samples = 500;
    std::uint64_t seed = 20150101;
    std::size_t bins = 200;
    /// Divide Student draws by sqrt(3) so they have unit variance.
    bool standardize_student = false;
    /// Worker threads for replicate generation (0 = hardware concurrency).
    unsigned threads = 0;

    [[nodiscard]] MPParams mp_params() const;
};

/// (lambda-, lambda+). Throws std::invalid_argument unless sigma2 > 0 and gamma > 0.
std::pair<double, double> mp_edges(const MPParams& params);

/// Pointwise Marchenko-Pastur density (zero outside the support).
double mp_pdf(const MPParams& params, double x);

/// Integral of the density over each bin, not renormalized. Requires 0 < gamma < 1.
std::vector<double> mp_bin_integrals(const MPParams& params, std::span<const double> edges);

/// mp_bin_integrals renormalized to total mass 1. Throws std::invalid_argument when gamma >= 1.
BinnedDensity mp_density(const MPParams& params, std::span<const double> edges);

/// Uniform edges on [0, multiplier * lambda+]; bins + 1 entries.
std::vector<double> standard_support(const MPParams& params, double multiplier = 25.0, std::size_t bins = 200);

/// Normalized histogram. Values below the first edge land in bin 0, values at or
/// above the last edge in the last bin. Throws std::invalid_argument when `values`
/// is empty or edges are not strictly ascending.
BinnedDensity histogram_density(std::span<const double> values, std::span<const double> edges);

/// Eigenvalues of every Monte-Carlo replicate, each sorted descending. Replicate k
/// draws from the stream derive_seed(seed, k), so the result does not depend on
/// the thread count.
std::vector<std::vector<double>> simulate_eigenvalues(const ReferenceSpec& spec);

/// Pooled replicate eigenvalues histogrammed on `edges`.
BinnedDensity simulate_reference(const ReferenceSpec& spec, std::span<const double> edges);

/// theta1 / theta2 / theta3 for `spec` on `edges` (kind selects which).
BinnedDensity build_reference(const ReferenceSpec& spec, std::span<const double> edges);

/// Stable 64-bit FNV-1a key (16 hex chars) over the canonical text of spec + edges.
std::string reference_cache_key(const ReferenceSpec& spec, std::span<const double> edges);

/// `bin_center,mass` table for plotting.
std::string density_plot_table(const BinnedDensity& density);

/// Exact round-trip form: `bin_low,bin_high,mass`.
void write_density(const BinnedDensity& density, const std::filesystem::path& path);
BinnedDensity read_density(const std::filesystem::path& path);

}  // namespace rmtwarn
