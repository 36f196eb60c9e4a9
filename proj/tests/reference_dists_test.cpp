#include <doctest.h>

#include <cmath>
#include <numbers>
#include <numeric>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "rmtwarn/hellinger_indicators.hpp"
#include "rmtwarn/reference_dists.hpp"
#include "support.hpp"

using namespace rmtwarn;

namespace {

// Oracle: raw MP density integrated in x by tanh-sinh, which copes with the
// square-root endpoint singularities of the derivative on its own.
double oracle_mass(const MPParams& p, double a, double b) {
    const auto [lo, hi] = mp_edges(p);
    a = std::max(a, lo);
    b = std::min(b, hi);
    if (!(b > a)) {
        return 0.0;
    }
    auto f = [&](double x) {
        const double v = (hi - x) * (x - lo);
        return v <= 0.0 ? 0.0 : std::sqrt(v) / (2.0 * std::numbers::pi * p.sigma2 * p.gamma * x);
    };
    boost::math::quadrature::tanh_sinh<double> integrator;
    return integrator.integrate(f, a, b);
}

double mass_above(const BinnedDensity& d, double x) {
    double s = 0.0;
    for (std::size_t b = 0; b < d.bins(); ++b) {
        if (d.edges[b] >= x) {
            s += d.mass[b];
        }
    }
    return s;
}

double mean_of(const BinnedDensity& d) {
    double m = 0.0;
    for (std::size_t b = 0; b < d.bins(); ++b) {
        m += d.center(b) * d.mass[b];
    }
    return m;
}

}  // namespace

TEST_CASE("mp_edges") {
    CHECK(mp_edges({1.0, 0.25}) == std::pair<double, double>{0.25, 2.25});
    CHECK(mp_edges({1.0, 1.0}) == std::pair<double, double>{0.0, 4.0});
    CHECK(mp_edges({2.0, 0.25}) == std::pair<double, double>{0.5, 4.5});
    CHECK_THROWS_AS(mp_edges({0.0, 0.5}), std::invalid_argument);
    CHECK_THROWS_AS(mp_edges({1.0, 0.0}), std::invalid_argument);
}

TEST_CASE("mp_density against an independent quadrature") {
    const MPParams p{1.0, 0.25};
    const auto [lo, hi] = mp_edges(p);
    CHECK(oracle_mass(p, lo, hi) == doctest::Approx(1.0).epsilon(1e-9));

    const auto fine = standard_support(p, 1.0, 400);
    const auto raw = mp_bin_integrals(p, fine);
    double total = 0.0;
    for (std::size_t b = 0; b < raw.size(); ++b) {
        const double expected = oracle_mass(p, fine[b], fine[b + 1]);
        CHECK(raw[b] == doctest::Approx(expected).epsilon(1e-8).scale(1e-12));
        total += raw[b];
    }
    CHECK(std::abs(total - 1.0) < 1e-6);

    const auto d = mp_density(p, fine);
    CHECK(std::abs(d.total() - 1.0) < 1e-9);
    CHECK(std::abs(mean_of(d) - p.sigma2) < 1e-3);

    const auto wide = mp_density(p, standard_support(p));
    for (std::size_t b = 0; b < wide.bins(); ++b) {
        if (wide.edges[b + 1] <= lo || wide.edges[b] >= hi) {
            CHECK(wide.mass[b] == 0.0);
        }
        CHECK(wide.mass[b] >= 0.0);
    }
    CHECK_THROWS_AS(mp_density({1.0, 1.0}, fine), std::invalid_argument);
    CHECK_THROWS_AS(mp_density({1.0, 1.5}, fine), std::invalid_argument);
}

TEST_CASE("property: mp_density normalizes for many aspect ratios") {
    rmtwarn::testing::Gen gen(21);
    for (int trial = 0; trial < 40; ++trial) {
        const MPParams p{gen.uniform(0.2, 3.0), gen.uniform(0.01, 0.95)};
        const auto edges = standard_support(p, gen.uniform(1.0, 30.0), gen.index(10, 300));
        const auto d = mp_density(p, edges);
        CHECK(std::abs(d.total() - 1.0) < 1e-9);
        const auto raw = mp_bin_integrals(p, edges);
        CHECK(std::abs(std::accumulate(raw.begin(), raw.end(), 0.0) - 1.0) < 1e-6);
    }
}

TEST_CASE("standard_support") {
    const MPParams p{1.0, 0.25};
    const auto e = standard_support(p);
    CHECK(e.size() == 201);
    CHECK(e.front() == 0.0);
    CHECK(e.back() == doctest::Approx(56.25).epsilon(1e-15));
    CHECK(standard_support(p, 1.0, 200).back() == doctest::Approx(2.25).epsilon(1e-15));
    const auto e100 = standard_support(p, 25.0, 100);
    CHECK(e100.size() == 101);
    for (std::size_t k = 1; k < e100.size(); ++k) {
        CHECK(e100[k] - e100[k - 1] == doctest::Approx(0.5625).epsilon(1e-12));
    }
    CHECK_THROWS_AS(standard_support(p, 0.5), std::invalid_argument);
}

TEST_CASE("histogram_density clamps out-of-range values") {
    const std::vector<double> edges{0.0, 1.0, 2.0, 3.0};
    const std::vector<double> values{-0.5, 0.5, 1.0, 2.999, 3.0, 100.0};
    const auto h = histogram_density(values, edges);
    CHECK(h.mass[0] == doctest::Approx(2.0 / 6.0));
    CHECK(h.mass[1] == doctest::Approx(1.0 / 6.0));
    CHECK(h.mass[2] == doctest::Approx(3.0 / 6.0));
    CHECK(std::abs(h.total() - 1.0) < 1e-12);
    CHECK_THROWS_AS(histogram_density(std::vector<double>{}, edges), std::invalid_argument);
}

TEST_CASE("simulated references") {
    SUBCASE("deterministic, thread-count independent and seed sensitive") {
        ReferenceSpec spec;
        spec.kind = ReferenceKind::student_corr;
        spec.assets = 5;
        spec.observations = 40;
        spec.samples = 30;
        const auto edges = standard_support(spec.mp_params());
        spec.threads = 1;
        const auto serial = simulate_reference(spec, edges);
        spec.threads = 4;
        const auto parallel = simulate_reference(spec, edges);
        CHECK(serial.mass == parallel.mass);
        CHECK(std::abs(serial.total() - 1.0) < 1e-9);
        spec.seed += 1;
        CHECK(simulate_reference(spec, edges).mass != serial.mass);
    }
    SUBCASE("rho = 1 collapses to rank one") {
        ReferenceSpec spec;
        spec.assets = 6;
        spec.observations = 30;
        spec.rho = 1.0;
        spec.samples = 10;
        for (const auto& ev : simulate_eigenvalues(spec)) {
            CHECK(ev[0] > 0.1);
            for (std::size_t k = 1; k < ev.size(); ++k) {
                CHECK(std::abs(ev[k]) < 1e-12 * ev[0]);
            }
        }
    }
    SUBCASE("Student reference has heavier mass above the MP edge") {
        ReferenceSpec spec;
        spec.assets = 11;
        spec.observations = 150;
        spec.samples = 100;
        const auto edges = standard_support(spec.mp_params());
        const double lambda_plus = mp_edges(spec.mp_params()).second;
        spec.kind = ReferenceKind::gaussian_corr;
        const auto gauss = simulate_reference(spec, edges);
        spec.kind = ReferenceKind::student_corr;
        const auto student = simulate_reference(spec, edges);
        CHECK(mass_above(student, lambda_plus) > mass_above(gauss, lambda_plus));
    }
    SUBCASE("rho = 0 Gaussian converges to the MP law") {
        ReferenceSpec spec;
        spec.assets = 50;
        spec.observations = 500;
        spec.rho = 0.0;
        spec.samples = 40;
        const auto edges = standard_support(spec.mp_params());
        const auto sim = simulate_reference(spec, edges);
        const auto mp = mp_density(spec.mp_params(), edges);
        CHECK(hellinger(sim.mass, mp.mass) < 0.15);
        double mean = 0.0;
        std::size_t count = 0;
        for (const auto& ev : simulate_eigenvalues(spec)) {
            mean += std::accumulate(ev.begin(), ev.end(), 0.0);
            count += ev.size();
        }
        CHECK(std::abs(mean / static_cast<double>(count) - 1.0) < 0.02);
    }
    SUBCASE("top eigenvalue grows with rho") {
        ReferenceSpec spec;
        spec.assets = 11;
        spec.observations = 150;
        spec.samples = 200;
        double previous = 0.0;
        for (double rho : {0.0, 0.3, 0.6}) {
            spec.rho = rho;
            double top = 0.0;
            for (const auto& ev : simulate_eigenvalues(spec)) {
                top += ev[0];
            }
            CHECK(top > previous);
            previous = top;
        }
    }
    SUBCASE("invalid specs") {
        ReferenceSpec spec;
        spec.kind = ReferenceKind::marchenko_pastur;
        CHECK_THROWS_AS(simulate_eigenvalues(spec), std::invalid_argument);
        spec.kind = ReferenceKind::gaussian_corr;
        spec.rho = 1.5;
        CHECK_THROWS_AS(simulate_eigenvalues(spec), std::invalid_argument);
        spec.rho = 0.5;
        spec.samples = 0;
        CHECK_THROWS_AS(simulate_eigenvalues(spec), std::invalid_argument);
    }
}

TEST_CASE("build_reference dispatches on kind") {
    ReferenceSpec spec;
    spec.kind = ReferenceKind::marchenko_pastur;
    const auto edges = standard_support(spec.mp_params());
    CHECK(build_reference(spec, edges).mass == mp_density(spec.mp_params(), edges).mass);
    CHECK(to_string(ReferenceKind::student_corr) == "student_corr");
}

TEST_CASE("density serialization and cache keys") {
    ReferenceSpec spec;
    spec.samples = 20;
    const auto edges = standard_support(spec.mp_params());
    const auto d = simulate_reference(spec, edges);
    rmtwarn::testing::TempDir dir("density");
    write_density(d, dir.path() / "d.csv");
    const auto back = read_density(dir.path() / "d.csv");
    CHECK(back.edges == d.edges);
    CHECK(back.mass == d.mass);

    const auto table = density_plot_table(d);
    CHECK(table.rfind("bin_center,mass\n", 0) == 0);

    const auto key = reference_cache_key(spec, edges);
    CHECK(key.size() == 16);
    CHECK(key == reference_cache_key(spec, edges));
    auto other = spec;
    other.seed += 1;
    CHECK(key != reference_cache_key(other, edges));
    other = spec;
    other.rho = 0.4;
    CHECK(key != reference_cache_key(other, edges));
}
