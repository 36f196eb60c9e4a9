#include "rmtwarn/reference_dists.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <boost/math/quadrature/gauss.hpp>
#include <fmt/format.h>

#include "rmtwarn/core.hpp"
#include "rmtwarn/parallel.hpp"
#include "rmtwarn/random.hpp"
#include "rmtwarn/text_io.hpp"

namespace rmtwarn {

namespace {

void check_edges(std::span<const double> edges) {
    if (edges.size() < 2) {
        throw std::invalid_argument("bin edges need at least two entries");
    }
    for (std::size_t k = 1; k < edges.size(); ++k) {
        if (!(edges[k] > edges[k - 1])) {
            throw std::invalid_argument("bin edges must be strictly ascending");
        }
    }
}

std::vector<double> normalized(std::vector<double> mass) {
    double total = 0.0;
    for (double m : mass) {
        total += m;
    }
    if (!(total > 0.0)) {
        throw std::invalid_argument("density has zero total mass");
    }
    for (auto& m : mass) {
        m /= total;
    }
    return mass;
}

}  // namespace

double BinnedDensity::total() const {
    double s = 0.0;
    for (double m : mass) {
        s += m;
    }
    return s;
}

std::string to_string(ReferenceKind kind) {
    switch (kind) {
        case ReferenceKind::marchenko_pastur:
            return "marchenko_pastur";
        case ReferenceKind::gaussian_corr:
            return "gaussian_corr";
        case ReferenceKind::student_corr:
            return "student_corr";
    }
    return "unknown";
}

MPParams ReferenceSpec::mp_params() const {
    return {1.0, static_cast<double>(assets) / static_cast<double>(observations)};
}

std::pair<double, double> mp_edges(const MPParams& params) {
    if (!(params.sigma2 > 0.0) || !(params.gamma > 0.0)) {
        throw std::invalid_argument("Marchenko-Pastur parameters need sigma2 > 0 and gamma > 0");
    }
    const double root = std::sqrt(params.gamma);
    return {params.sigma2 * (1.0 - root) * (1.0 - root), params.sigma2 * (1.0 + root) * (1.0 + root)};
}

double mp_pdf(const MPParams& params, double x) {
    const auto [lo, hi] = mp_edges(params);
    if (x <= lo || x >= hi || x <= 0.0) {
        return 0.0;
    }
    return std::sqrt((hi - x) * (x - lo)) / (2.0 * std::numbers::pi * params.sigma2 * params.gamma * x);
}

std::vector<double> mp_bin_integrals(const MPParams& params, std::span<const double> edges) {
    check_edges(edges);
    if (!(params.gamma < 1.0)) {
        throw std::invalid_argument("mp_density requires gamma < 1 (no atom at zero)");
    }
    const auto [lo, hi] = mp_edges(params);
    // x = mid - half cos(theta) maps theta in [0, pi] onto [lo, hi] and turns the
    // square-root edge behaviour into a smooth integrand:
    //   f(x) dx = half^2 sin^2(theta) / (2 pi sigma2 gamma x) dtheta
    const double mid = 0.5 * (hi + lo);
    const double half = 0.5 * (hi - lo);
    const double norm = 2.0 * std::numbers::pi * params.sigma2 * params.gamma;
    auto theta_of = [&](double x) { return std::acos(std::clamp((mid - x) / half, -1.0, 1.0)); };
    auto integrand = [&](double theta) {
        const double s = std::sin(theta);
        return half * half * s * s / (norm * (mid - half * std::cos(theta)));
    };

    std::vector<double> mass(edges.size() - 1, 0.0);
    for (std::size_t b = 0; b + 1 < edges.size(); ++b) {
        const double a = std::max(edges[b], lo);
        const double c = std::min(edges[b + 1], hi);
        if (!(c > a)) {
            continue;
        }
        mass[b] = boost::math::quadrature::gauss<double, 30>::integrate(integrand, theta_of(a), theta_of(c));
    }
    return mass;
}

BinnedDensity mp_density(const MPParams& params, std::span<const double> edges) {
    BinnedDensity d;
    d.edges.assign(edges.begin(), edges.end());
    d.mass = normalized(mp_bin_integrals(params, edges));
    return d;
}

std::vector<double> standard_support(const MPParams& params, double multiplier, std::size_t bins) {
    if (!(multiplier >= 1.0)) {
        throw std::invalid_argument(fmt::format("support multiplier must be >= 1, got {}", multiplier));
    }
    if (bins < 1) {
        throw std::invalid_argument("support needs at least one bin");
    }
    const double top = multiplier * mp_edges(params).second;
    std::vector<double> edges(bins + 1);
    for (std::size_t k = 0; k <= bins; ++k) {
        edges[k] = top * static_cast<double>(k) / static_cast<double>(bins);
    }
    return edges;
}

BinnedDensity histogram_density(std::span<const double> values, std::span<const double> edges) {
    check_edges(edges);
    if (values.empty()) {
        throw std::invalid_argument("cannot histogram an empty sample");
    }
    const std::size_t bins = edges.size() - 1;
    std::vector<double> counts(bins, 0.0);
    for (double v : values) {
        // First edge strictly greater than v; bin is one before it.
        const auto it = std::upper_bound(edges.begin(), edges.end(), v);
        std::size_t bin = it == edges.begin() ? 0 : static_cast<std::size_t>(it - edges.begin()) - 1;
        bin = std::min(bin, bins - 1);
        counts[bin] += 1.0;
    }
    const double n = static_cast<double>(values.size());
    BinnedDensity d;
    d.edges.assign(edges.begin(), edges.end());
    d.mass.resize(bins);
    for (std::size_t b = 0; b < bins; ++b) {
        d.mass[b] = counts[b] / n;
    }
    return d;
}

std::vector<std::vector<double>> simulate_eigenvalues(const ReferenceSpec& spec) {
    if (spec.kind == ReferenceKind::marchenko_pastur) {
        throw std::invalid_argument("simulate_reference: Marchenko-Pastur is analytic, not simulated");
    }
    if (spec.assets < 1 || spec.observations < 2 || spec.samples < 1) {
        throw std::invalid_argument("simulate_reference: need N >= 1, T >= 2, samples >= 1");
    }
    if (!(spec.rho >= 0.0 && spec.rho <= 1.0)) {
        throw std::invalid_argument("simulate_reference: rho must lie in [0, 1]");
    }
    const auto n = static_cast<Eigen::Index>(spec.assets);
    const auto t = static_cast<Eigen::Index>(spec.observations);
    const double common = spec.rho;
    const double idio = std::sqrt(1.0 - spec.rho * spec.rho);
    const bool student = spec.kind == ReferenceKind::student_corr;
    const double student_scale = spec.standardize_student ? 1.0 / std::sqrt(3.0) : 1.0;

    std::vector<std::vector<double>> out(spec.samples);
    parallel_for(
        spec.samples,
        [&](std::size_t k) {
            Rng rng(derive_seed(spec.seed, k));
            auto draw = [&] { return student ? student_scale * rng.student_t(3) : rng.normal(); };
            Eigen::MatrixXd x(n, t);
            for (Eigen::Index j = 0; j < t; ++j) {
                const double z0 = draw();
                for (Eigen::Index i = 0; i < n; ++i) {
                    x(i, j) = common * z0 + idio * draw();
                }
            }
            Eigen::MatrixXd y = (x * x.transpose()) / static_cast<double>(t);
            y.triangularView<Eigen::StrictlyUpper>() = y.transpose();
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(y, Eigen::EigenvaluesOnly);
            const auto& ev = solver.eigenvalues();
            std::vector<double> values(ev.data(), ev.data() + ev.size());
            std::sort(values.begin(), values.end(), std::greater<>());
            out[k] = std::move(values);
        },
        spec.threads);
    return out;
}

BinnedDensity simulate_reference(const ReferenceSpec& spec, std::span<const double> edges) {
    check_edges(edges);
    const auto replicates = simulate_eigenvalues(spec);
    std::vector<double> pooled;
    pooled.reserve(spec.samples * spec.assets);
    for (const auto& r : replicates) {
        pooled.insert(pooled.end(), r.begin(), r.end());
    }
    return histogram_density(pooled, edges);
}

BinnedDensity build_reference(const ReferenceSpec& spec, std::span<const double> edges) {
    if (spec.kind == ReferenceKind::marchenko_pastur) {
        return mp_density(spec.mp_params(), edges);
    }
    return simulate_reference(spec, edges);
}

std::string reference_cache_key(const ReferenceSpec& spec, std::span<const double> edges) {
    std::string canonical = fmt::format("kind={};N={};T={};rho={};samples={};seed={};std={};edges=", to_string(spec.kind),
                                        spec.assets, spec.observations, text::format_double(spec.rho), spec.samples,
                                        spec.seed, spec.standardize_student ? 1 : 0);
    for (double e : edges) {
        canonical += text::format_double(e);
        canonical += ';';
    }
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : canonical) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return fmt::format("{:016x}", h);
}

std::string density_plot_table(const BinnedDensity& density) {
    std::string out = "bin_center,mass\n";
    for (std::size_t b = 0; b < density.bins(); ++b) {
        out += text::format_double(density.center(b));
        out += ',';
        out += text::format_double(density.mass[b]);
        out += '\n';
    }
    return out;
}

void write_density(const BinnedDensity& density, const std::filesystem::path& path) {
    std::string out = "bin_low,bin_high,mass\n";
    for (std::size_t b = 0; b < density.bins(); ++b) {
        out += fmt::format("{},{},{}\n", text::format_double(density.edges[b]),
                           text::format_double(density.edges[b + 1]), text::format_double(density.mass[b]));
    }
    text::write_file(path, out);
}

BinnedDensity read_density(const std::filesystem::path& path) {
    const std::string content = text::read_file(path);
    const auto lines = text::data_lines(content);
    if (lines.empty() || text::trim(lines.front()) != "bin_low,bin_high,mass") {
        throw DataError(fmt::format("{}: not a density file", path.string()));
    }
    BinnedDensity d;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto f = text::split(lines[i]);
        const auto lo = f.size() == 3 ? text::parse_double(f[0]) : std::nullopt;
        const auto hi = f.size() == 3 ? text::parse_double(f[1]) : std::nullopt;
        const auto m = f.size() == 3 ? text::parse_double(f[2]) : std::nullopt;
        if (!lo || !hi || !m) {
            throw DataError(fmt::format("{}: line {}: malformed density row", path.string(), i + 1));
        }
        if (d.edges.empty()) {
            d.edges.push_back(*lo);
        } else if (*lo != d.edges.back()) {
            throw DataError(fmt::format("{}: line {}: bins are not contiguous", path.string(), i + 1));
        }
        d.edges.push_back(*hi);
        d.mass.push_back(*m);
    }
    if (d.mass.empty()) {
        throw DataError(fmt::format("{}: empty density", path.string()));
    }
    return d;
}

}  // namespace rmtwarn
