#include <doctest.h>

#include <cmath>

#include "rmtwarn/market_data.hpp"
#include "rmtwarn/matrix_engine.hpp"
#include "rmtwarn/text_io.hpp"
#include "support.hpp"

using namespace rmtwarn;
using rmtwarn::testing::Gen;
using rmtwarn::testing::TempDir;

namespace {

TickerSeries series_of(const std::string& ticker, const std::vector<std::pair<std::string, double>>& rows) {
    std::string csv = "date,close\n";
    for (const auto& [d, p] : rows) {
        csv += d + "," + text::format_double(p) + "\n";
    }
    return parse_ticker_csv(ticker, csv);
}

}  // namespace

TEST_CASE("dates parse strictly and order chronologically") {
    CHECK(Date::parse("2008-09-15").to_string() == "2008-09-15");
    CHECK(Date(2000, 2, 29).to_string() == "2000-02-29");
    CHECK_THROWS_AS(Date(2001, 2, 29), DataError);
    CHECK_THROWS_AS(Date::parse("2008-9-15"), DataError);
    CHECK_THROWS_AS(Date::parse("15/09/2008"), DataError);
    CHECK(Date(2008, 9, 15) < Date(2008, 9, 16));
    CHECK(Date(2024, 6, 1).is_weekend());
    CHECK_FALSE(Date(2024, 6, 3).is_weekend());
}

TEST_CASE("text helpers") {
    CHECK(text::parse_double(" 1.5 ") == 1.5);
    CHECK(text::parse_double("+2") == 2.0);
    CHECK_FALSE(text::parse_double("1.5x").has_value());
    CHECK_FALSE(text::parse_double("").has_value());
    CHECK(text::format_double(0.1) == "0.1");
    CHECK(text::parse_double(text::format_double(1.0 / 3.0)) == 1.0 / 3.0);
    const auto lines = text::data_lines("a\r\n\n# note\nb");
    REQUIRE(lines.size() == 2);
    CHECK(lines[0] == "a");
    CHECK(lines[1] == "b");
}

TEST_CASE("identical calendars need no alignment") {
    const std::vector<std::pair<std::string, double>> rows{
        {"2020-01-01", 1}, {"2020-01-02", 2}, {"2020-01-03", 3}, {"2020-01-06", 4}, {"2020-01-07", 5}};
    const auto panel = align_series({series_of("A", rows), series_of("B", rows)});
    CHECK(panel.days() == 5);
    CHECK(panel.assets() == 2);
    CHECK(panel.close(1, 4) == 5.0);
    CHECK_FALSE(panel.volume.has_value());
}

TEST_CASE("alignment keeps the intersection of calendars") {
    const auto a = series_of("A", {{"2020-01-01", 1}, {"2020-01-02", 2}, {"2020-01-03", 3}, {"2020-01-04", 4},
                                   {"2020-01-05", 5}});
    const auto b = series_of("B", {{"2020-01-01", 10}, {"2020-01-02", 20}, {"2020-01-04", 40}, {"2020-01-05", 50}});
    const auto panel = align_series({a, b});
    REQUIRE(panel.days() == 4);
    CHECK(panel.dates[2] == Date(2020, 1, 4));
    CHECK(panel.close(0, 2) == 4.0);
    CHECK(panel.close(1, 2) == 40.0);
}

TEST_CASE("missing close on a retained date carries the previous close") {
    const auto a = parse_ticker_csv("A", "date,close\n2020-01-01,100\n2020-01-02,\n2020-01-03,102\n");
    const auto b = series_of("B", {{"2020-01-01", 1}, {"2020-01-02", 2}, {"2020-01-03", 3}});
    const auto panel = align_series({a, b});
    REQUIRE(panel.days() == 3);
    CHECK(panel.close(0, 1) == 100.0);
}

TEST_CASE("reference calendar forward-fills the other tickers") {
    const auto ref = series_of("IDX", {{"2020-01-01", 1}, {"2020-01-02", 2}, {"2020-01-03", 3}});
    const auto other = series_of("X", {{"2020-01-01", 10}, {"2020-01-03", 30}});
    AlignmentPolicy policy;
    policy.calendar = AlignmentPolicy::Calendar::reference_ticker;
    policy.reference_ticker = "IDX";
    const auto panel = align_series({ref, other}, policy);
    REQUIRE(panel.days() == 3);
    CHECK(panel.close(1, 1) == 10.0);
}

TEST_CASE("ingestion errors") {
    CHECK_THROWS_AS(parse_ticker_csv("A", "date,close\n2020-01-01,0\n"), DataError);
    CHECK_THROWS_AS(parse_ticker_csv("A", "date,close\n2020-01-01,-3\n"), DataError);
    CHECK_THROWS_AS(parse_ticker_csv("A", "date,close\n2020-01-01,abc\n"), DataError);
    CHECK_THROWS_AS(parse_ticker_csv("A", "date,close,volume\n2020-01-01,1,-1\n"), DataError);
    CHECK_THROWS_AS(parse_ticker_csv("A", "date,close,market_cap\n2020-01-01,1,0\n"), DataError);
    CHECK_THROWS_AS(parse_ticker_csv("A", "date,close\n2020-01-02,1\n2020-01-01,1\n"), DataError);
    CHECK_THROWS_AS(parse_ticker_csv("A", "price,date\n"), DataError);
    CHECK_THROWS_AS(parse_ticker_csv("A", "date,close\n2020-01-01\n"), DataError);
    const auto a = series_of("A", {{"2020-01-01", 1}});
    const auto b = series_of("B", {{"2020-01-02", 1}});
    CHECK_THROWS_AS(align_series({a, b}), DataError);
    CHECK_THROWS_AS(align_series({a, a}), DataError);
    const auto leading_gap = parse_ticker_csv("C", "date,close\n2020-01-01,\n2020-01-02,3\n");
    CHECK_THROWS_AS(align_series({leading_gap, series_of("D", {{"2020-01-01", 1}, {"2020-01-02", 2}})}),
                    DataError);
    CHECK_THROWS_AS(read_ticker_file("/nonexistent/path/X.csv"), DataError);
}

TEST_CASE("volume and market cap panels exist only when every input has them") {
    const auto with = parse_ticker_csv("A", "date,close,volume,market_cap\n2020-01-01,1,5,7\n2020-01-02,2,6,8\n");
    const auto without = series_of("B", {{"2020-01-01", 1}, {"2020-01-02", 2}});
    const auto volume_only = parse_ticker_csv("C", "date,close,volume\n2020-01-01,1,1\n2020-01-02,1,2\n");
    const auto both = align_series({with, volume_only});
    CHECK(both.volume.has_value());
    CHECK_FALSE(both.market_cap.has_value());
    const auto mixed = align_series({with, without});
    CHECK_FALSE(mixed.volume.has_value());
    CHECK_FALSE(mixed.market_cap.has_value());
}

TEST_CASE("load_panel reads per-ticker files named by stem") {
    TempDir dir("load");
    text::write_file(dir.path() / "AAA.csv", "date,close\n2020-01-01,1\n2020-01-02,2\n");
    text::write_file(dir.path() / "BBB.csv", "date,close\n2020-01-01,3\n2020-01-02,4\n");
    const auto panel = load_panel({dir.path() / "AAA.csv", dir.path() / "BBB.csv"});
    CHECK(panel.tickers == std::vector<std::string>{"AAA", "BBB"});
    CHECK(panel.close(1, 1) == 4.0);
}

TEST_CASE("alignment is idempotent") {
    SyntheticSpec spec;
    spec.assets = 4;
    spec.regimes = {{0.01, 0.3, 60, ShockDistribution::gaussian}};
    spec.with_volume = true;
    spec.with_market_cap = true;
    const auto panel = synthetic_panel(spec, 3);
    CHECK(align_series(to_series(panel)) == panel);
}

TEST_CASE("log returns") {
    const auto flat = align_series({series_of("A", {{"2020-01-01", 5}, {"2020-01-02", 5}, {"2020-01-03", 5}})});
    CHECK(log_returns(flat).returns.isZero(0.0));

    const auto up = align_series({series_of("A", {{"2020-01-01", 100}, {"2020-01-02", 110}})});
    const auto r = log_returns(up);
    CHECK(r.returns(0, 0) == doctest::Approx(0.0953101798).epsilon(1e-9));
    CHECK(r.dates.front() == Date(2020, 1, 2));

    const auto e = align_series({series_of("A", {{"2020-01-01", 100}, {"2020-01-02", 100 * std::exp(1.0)}})});
    CHECK(log_returns(e).returns(0, 0) == doctest::Approx(1.0).epsilon(1e-15));

    const auto single = align_series({series_of("A", {{"2020-01-01", 100}})});
    CHECK_THROWS_AS(log_returns(single), InsufficientHistoryError);
}

TEST_CASE("property: log returns invert cumulative exponentiation") {
    Gen gen(11);
    for (int trial = 0; trial < 50; ++trial) {
        const auto n = static_cast<Eigen::Index>(gen.index(1, 6));
        const auto d = static_cast<Eigen::Index>(gen.index(2, 80));
        const Eigen::MatrixXd r = 0.02 * gen.normal_matrix(n, d);
        AssetPanel panel;
        for (Eigen::Index i = 0; i < n; ++i) {
            panel.tickers.push_back("T" + std::to_string(i));
        }
        panel.dates = rmtwarn::testing::consecutive_days(Date(2010, 1, 1), static_cast<std::size_t>(d + 1));
        panel.close.resize(n, d + 1);
        panel.close.col(0).setOnes();
        for (Eigen::Index k = 0; k < d; ++k) {
            panel.close.col(k + 1) = panel.close.col(k).array() * r.col(k).array().exp();
        }
        const auto back = log_returns(panel);
        CHECK((back.returns - r).cwiseAbs().maxCoeff() < 1e-12);
        // Date monotonicity and shape.
        CHECK(back.returns.cols() == d);
        CHECK(std::is_sorted(back.dates.begin(), back.dates.end()));
    }
}

TEST_CASE("synthetic panel") {
    SUBCASE("uncorrelated regime has near-zero sample correlation") {
        SyntheticSpec spec;
        spec.assets = 10;
        spec.regimes = {{0.01, 0.0, 400, ShockDistribution::gaussian}};
        const auto r = log_returns(synthetic_panel(spec, 5));
        CHECK(std::abs(mean_pairwise_correlation(r, 0, r.days())) < 0.1);
        CHECK(r.days() == 400);
        for (const auto& d : r.dates) {
            CHECK_FALSE(d.is_weekend());
        }
    }
    SUBCASE("full correlation gives identical rows") {
        SyntheticSpec spec;
        spec.assets = 5;
        spec.regimes = {{0.01, 1.0, 50, ShockDistribution::gaussian}};
        const auto r = log_returns(synthetic_panel(spec, 5));
        for (Eigen::Index i = 1; i < 5; ++i) {
            CHECK((r.returns.row(i) - r.returns.row(0)).cwiseAbs().maxCoeff() < 1e-15);
        }
    }
    SUBCASE("five-fold volatility gives about 25x variance") {
        SyntheticSpec spec;
        spec.assets = 10;
        spec.regimes = {{0.01, 0.2, 500, ShockDistribution::gaussian}, {0.05, 0.2, 500, ShockDistribution::gaussian}};
        const auto r = log_returns(synthetic_panel(spec, 9));
        const auto var = [&](Eigen::Index first) {
            const Eigen::MatrixXd block = r.returns.middleCols(first, 500);
            const Eigen::MatrixXd centered = block.colwise() - block.rowwise().mean();
            return centered.squaredNorm() / static_cast<double>(block.size());
        };
        const double ratio = var(500) / var(0);
        CHECK(ratio > 25.0 * 0.8);
        CHECK(ratio < 25.0 * 1.2);
    }
    SUBCASE("deterministic for a seed and sensitive to it") {
        SyntheticSpec spec;
        spec.assets = 3;
        spec.regimes = {{0.02, 0.5, 30, ShockDistribution::student_t3}};
        spec.with_volume = true;
        CHECK(synthetic_panel(spec, 1) == synthetic_panel(spec, 1));
        CHECK_FALSE(synthetic_panel(spec, 1) == synthetic_panel(spec, 2));
    }
    SUBCASE("invalid regimes") {
        SyntheticSpec spec;
        spec.assets = 3;
        spec.regimes = {{-0.01, 0.5, 30, ShockDistribution::gaussian}};
        CHECK_THROWS_AS(synthetic_panel(spec, 1), std::invalid_argument);
        spec.regimes = {{0.01, 1.5, 30, ShockDistribution::gaussian}};
        CHECK_THROWS_AS(synthetic_panel(spec, 1), std::invalid_argument);
        spec.regimes = {{0.01, 0.5, 0, ShockDistribution::gaussian}};
        CHECK_THROWS_AS(synthetic_panel(spec, 1), std::invalid_argument);
        spec.regimes.clear();
        CHECK_THROWS_AS(synthetic_panel(spec, 1), std::invalid_argument);
    }
}

TEST_CASE("panel cache round-trips bit-exactly") {
    SyntheticSpec spec;
    spec.assets = 4;
    spec.regimes = {{0.02, 0.4, 40, ShockDistribution::student_t3}};
    spec.with_volume = true;
    spec.with_market_cap = true;
    const auto panel = synthetic_panel(spec, 17);
    TempDir dir("cache");
    write_panel_cache(panel, dir.path() / "panel.csv");
    CHECK(read_panel_cache(dir.path() / "panel.csv") == panel);

    spec.with_volume = false;
    spec.with_market_cap = false;
    const auto plain = synthetic_panel(spec, 17);
    write_panel_cache(plain, dir.path() / "plain.csv");
    CHECK(read_panel_cache(dir.path() / "plain.csv") == plain);
}
