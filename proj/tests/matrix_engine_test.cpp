#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "rmtwarn/matrix_engine.hpp"
#include "support.hpp"

using namespace rmtwarn;
using rmtwarn::testing::Gen;

namespace {

RollingWindow window_of(const Eigen::MatrixXd& data) {
    RollingWindow w;
    w.end_date = Date(2010, 5, 5);
    w.data = data;
    return w;
}

double max_asym(const Eigen::MatrixXd& m) { return (m - m.transpose()).cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("rolling window cuts the T most recent columns") {
    Eigen::MatrixXd r(2, 5);
    r << 1, 2, 3, 4, 5, 6, 7, 8, 9, 10;
    const auto panel = rmtwarn::testing::make_returns(r);
    const auto w = rolling_window(panel, 3, 2);
    CHECK(w.end_date == panel.dates[3]);
    CHECK(w.data(0, 0) == 3.0);
    CHECK(w.data(1, 1) == 9.0);
    CHECK_THROWS_AS(rolling_window(panel, 0, 2), InsufficientHistoryError);
    CHECK_THROWS_AS(rolling_window(panel, 5, 2), std::invalid_argument);
}

TEST_CASE("center_rows") {
    Eigen::MatrixXd m(1, 3);
    m << 1, 2, 3;
    const auto c = center_rows(window_of(m));
    CHECK(c.data(0, 0) == -1.0);
    CHECK(c.data(0, 1) == 0.0);
    CHECK(c.data(0, 2) == 1.0);
    CHECK(center_rows(c).data == c.data);

    Gen gen(3);
    const auto random = center_rows(window_of(gen.normal_matrix(8, 150)));
    CHECK(random.data.rowwise().mean().cwiseAbs().maxCoeff() < 1e-14);
    CHECK_THROWS_AS(center_rows(window_of(Eigen::MatrixXd::Ones(2, 1))), std::invalid_argument);
}

TEST_CASE("covariance uses the biased normalization") {
    CHECK(covariance(window_of(Eigen::MatrixXd::Constant(3, 10, 2.5))).values.isZero(0.0));

    Eigen::MatrixXd twin(2, 4);
    twin << 1, -1, 1, -1, 1, -1, 1, -1;
    const auto cv = covariance(window_of(twin)).values;
    CHECK(cv(0, 0) == 1.0);
    CHECK(cv(0, 1) == 1.0);
    CHECK(cv(1, 1) == 1.0);
    CHECK(cv.trace() == 2.0);

    Eigen::MatrixXd one(1, 4);
    one << 1, 2, 3, 6;
    CHECK(covariance(window_of(one)).values(0, 0) == doctest::Approx(3.5).epsilon(1e-14));
    CHECK_THROWS_AS(covariance(window_of(Eigen::MatrixXd::Ones(2, 1))), std::invalid_argument);
}

TEST_CASE("correlation") {
    Eigen::MatrixXd anti(2, 3);
    anti << 1, 2, 3, 3, 2, 1;
    CHECK(correlation(window_of(anti)).values(0, 1) == doctest::Approx(-1.0).epsilon(1e-14));

    Eigen::MatrixXd dup(2, 4);
    dup << 0.1, -0.3, 0.2, 0.5, 0.1, -0.3, 0.2, 0.5;
    CHECK(correlation(window_of(dup)).values(0, 1) == doctest::Approx(1.0).epsilon(1e-14));

    Gen gen(4);
    const auto cr = correlation(window_of(gen.normal_matrix(3, 10000))).values;
    CHECK(std::abs(cr(0, 1)) < 0.05);
    CHECK(std::abs(cr(1, 2)) < 0.05);
    CHECK((cr.diagonal().array() - 1.0).abs().maxCoeff() < 1e-9);
    CHECK(max_asym(cr) == 0.0);
}

TEST_CASE("degenerate asset is named") {
    Eigen::MatrixXd m(2, 5);
    m << 0.1, 0.2, -0.1, 0.0, 0.3, 0.01, 0.01, 0.01, 0.01, 0.01;
    auto w = window_of(m);
    w.tickers = {"GOOD", "STALE"};
    try {
        (void)correlation(w);
        FAIL("expected DegenerateAssetError");
    } catch (const DegenerateAssetError& e) {
        CHECK(e.ticker() == "STALE");
    }
}

TEST_CASE("weighted correlation") {
    Eigen::MatrixXd cr(2, 2);
    cr << 1.0, 0.5, 0.5, 1.0;
    const std::vector<double> w{3.0, 4.0};
    const auto out = weight_correlation(cr, w);
    CHECK(out(0, 1) == doctest::Approx(0.24).epsilon(1e-12));
    CHECK(out(0, 0) == doctest::Approx(9.0 / 25.0).epsilon(1e-12));
    CHECK(out(1, 1) == doctest::Approx(16.0 / 25.0).epsilon(1e-12));

    const std::vector<double> tiny{1.0, 1e-9};
    const auto dominated = weight_correlation(cr, tiny);
    CHECK(dominated(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(dominated(1, 1) < 1e-17);

    const std::vector<double> bad{1.0, 0.0};
    CHECK_THROWS_AS(weight_correlation(cr, bad), std::invalid_argument);
    const std::vector<double> short_w{1.0};
    CHECK_THROWS_AS(weight_correlation(cr, short_w), std::invalid_argument);
}

TEST_CASE("property: equal weights scale by 1/N exactly") {
    Gen gen(5);
    for (int trial = 0; trial < 200; ++trial) {
        const auto n = static_cast<Eigen::Index>(gen.index(1, 20));
        const auto cr = correlation(window_of(gen.normal_matrix(n, 150))).values;
        const double weight = gen.coin() ? 1.0 : 2.5;
        const std::vector<double> w(static_cast<std::size_t>(n), weight);
        const Eigen::MatrixXd expected = cr * (1.0 / static_cast<double>(n));
        CHECK(weight_correlation(cr, w) == expected);
    }
}

TEST_CASE("eigen_spectrum") {
    const auto id = eigen_spectrum(Eigen::Matrix3d::Identity());
    CHECK(id.eigenvalues == std::vector<double>{1.0, 1.0, 1.0});

    Eigen::Matrix3d d = Eigen::Vector3d(2, -1, 5).asDiagonal();
    const auto s = eigen_spectrum(d);
    CHECK(s.eigenvalues[0] == doctest::Approx(5.0));
    CHECK(s.eigenvalues[1] == doctest::Approx(2.0));
    CHECK(s.eigenvalues[2] == doctest::Approx(-1.0));

    const auto eq = eigen_spectrum(rmtwarn::testing::equicorrelation(4, 0.5));
    CHECK(std::abs(eq.eigenvalues[0] - 2.5) < 1e-10);
    for (int k = 1; k < 4; ++k) {
        CHECK(std::abs(eq.eigenvalues[static_cast<std::size_t>(k)] - 0.5) < 1e-10);
    }

    Eigen::Matrix2d asym;
    asym << 1.0, 0.5, 0.4, 1.0;
    CHECK_THROWS_AS(eigen_spectrum(asym), std::invalid_argument);
    CHECK_THROWS_AS(eigen_spectrum(Eigen::MatrixXd(2, 3)), std::invalid_argument);
}

TEST_CASE("property: covariance and correlation identities on random windows") {
    Gen gen(6);
    for (int trial = 0; trial < 200; ++trial) {
        const auto n = static_cast<Eigen::Index>(gen.index(1, 20));
        Eigen::MatrixXd data = gen.normal_matrix(n, 150);
        // Mix in a common factor so matrices are not near-identity.
        const Eigen::RowVectorXd f = gen.normal_matrix(1, 150);
        const double load = gen.uniform(0.0, 2.0);
        data.rowwise() += load * f;
        data *= gen.uniform(0.001, 0.05);
        const auto w = window_of(data);

        const auto cv = covariance(w).values;
        CHECK(max_asym(cv) == 0.0);
        const auto s = eigen_spectrum(cv);
        CHECK(std::is_sorted(s.eigenvalues.rbegin(), s.eigenvalues.rend()));
        const double sum = std::accumulate(s.eigenvalues.begin(), s.eigenvalues.end(), 0.0);
        CHECK(std::abs(sum - cv.trace()) <= 1e-8 * cv.trace());
        CHECK(s.eigenvalues.back() >= -1e-9 * cv.trace());
        CHECK(covariance(center_rows(w)).values.isApprox(cv, 1e-12));

        const auto cr = correlation(w).values;
        CHECK(std::abs(cr.trace() - static_cast<double>(n)) < 1e-9);
        CHECK(cr.cwiseAbs().maxCoeff() <= 1.0 + 1e-9);
        const double top = eigen_spectrum(cr).largest();
        CHECK(top >= 1.0 - 1e-9);
        CHECK(top <= static_cast<double>(n) + 1e-9);
    }
}

TEST_CASE("property: permuting assets permutes matrices and keeps the spectrum") {
    Gen gen(7);
    for (int trial = 0; trial < 50; ++trial) {
        const auto n = static_cast<Eigen::Index>(gen.index(2, 12));
        const Eigen::MatrixXd data = gen.normal_matrix(n, 150);
        Eigen::PermutationMatrix<Eigen::Dynamic> perm(n);
        perm.setIdentity();
        std::shuffle(perm.indices().data(), perm.indices().data() + n, gen.engine());
        const Eigen::MatrixXd permuted = perm * data;

        const auto cv = covariance(window_of(data)).values;
        const auto cvp = covariance(window_of(permuted)).values;
        CHECK((perm * cv * perm.transpose() - cvp).cwiseAbs().maxCoeff() < 1e-14);
        const auto a = eigen_spectrum(cv).eigenvalues;
        const auto b = eigen_spectrum(cvp).eigenvalues;
        for (std::size_t k = 0; k < a.size(); ++k) {
            CHECK(std::abs(a[k] - b[k]) < 1e-10);
        }
    }
}

TEST_CASE("rescaling") {
    Spectrum s{Date(2000, 1, 3), {2.0, 1.0, 0.0}};
    CHECK(rescale_spectrum(s, 1.0).eigenvalues == s.eigenvalues);
    CHECK(rescale_spectrum(s, 3410.0).eigenvalues == std::vector<double>{6820.0, 3410.0, 0.0});
    CHECK_THROWS_AS(rescale_spectrum(s, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(rescale_spectrum(s, -2.0), std::invalid_argument);

    Spectrum noisy{Date(), {4.0, 1.0, -1e-12, -1.0}};
    const auto clamped = clamp_negligible_negatives(noisy).eigenvalues;
    CHECK(clamped[2] == 0.0);
    CHECK(clamped[3] == -1.0);

    Gen gen(8);
    const Eigen::MatrixXd r = 0.02 * gen.normal_matrix(6, 400);
    const auto panel = rmtwarn::testing::make_returns(r);
    const double factor = mean_variance_rescale_factor(panel, 0, 400);
    const Eigen::MatrixXd centered = (r.colwise() - r.rowwise().mean()) * std::sqrt(factor);
    const double mean_var = centered.rowwise().squaredNorm().mean() / 400.0;
    CHECK(mean_var == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(factor == doctest::Approx(2500.0).epsilon(0.1));
}

TEST_CASE("date_slice") {
    const auto dates = rmtwarn::testing::consecutive_days(Date(2000, 1, 1), 10);
    const auto [a, b] = date_slice(dates, {Date(2000, 1, 3), Date(2000, 1, 5)});
    CHECK(a == 2);
    CHECK(b == 5);
    const auto [c, d] = date_slice(dates, {Date(1999, 1, 1), Date(1999, 2, 1)});
    CHECK(c == d);
}
