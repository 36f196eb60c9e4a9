#include "rmtwarn/pipeline.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include "rmtwarn/hellinger_indicators.hpp"
#include "rmtwarn/matrix_engine.hpp"
#include "rmtwarn/reference_dists.hpp"
#include "rmtwarn/spectral_indicators.hpp"
#include "rmtwarn/text_io.hpp"

namespace fs = std::filesystem;
namespace pt = boost::property_tree;

namespace rmtwarn {

namespace {

const std::set<std::string> kKnownKeys = {
    "data.panels", "data.panel_dir", "data.calendar", "data.reference_ticker",
    "synthetic.enabled", "synthetic.assets", "synthetic.seed", "synthetic.regimes", "synthetic.start",
    "synthetic.initial_price", "synthetic.with_volume", "synthetic.with_market_cap",
    "window.length", "window.pooling",
    "reference.rho", "reference.rho_start", "reference.rho_end", "reference.samples", "reference.seed",
    "reference.bins", "reference.support_multiplier", "reference.truncation_divisor",
    "reference.standardize_student", "reference.threads",
    "rescale.mode", "rescale.factor", "rescale.start", "rescale.end", "rescale.apply_to_b_series",
    "indicators.select", "indicators.smoothing",
    "backtest.indicators", "backtest.threshold_indicator", "backtest.reference_ticker", "backtest.mdd_horizon",
    "backtest.mdd_thresholds", "backtest.lookback", "backtest.fraction", "backtest.calibration_start",
    "backtest.calibration_end", "backtest.evaluation_start", "backtest.evaluation_end",
    "backtest.objective_mdd_threshold", "backtest.grid_levels", "backtest.calendar",
    "output.dir",
};

const std::array<std::string, 9> kIndicatorNames = {"A1", "A2", "A3", "B1", "B2", "B3", "B3A", "B3B", "B3C"};

// ---------------------------------------------------------------- config parsing

class ConfigReader {
public:
    explicit ConfigReader(const pt::ptree& tree) {
        for (const auto& [section, body] : tree) {
            if (body.empty()) {
                throw ConfigError(fmt::format("key '{}' must live inside a [section]", section));
            }
            for (const auto& [key, value] : body) {
                const std::string full = section + "." + key;
                if (!kKnownKeys.count(full) && section != "zone") {
                    throw ConfigError(fmt::format("unknown config key '{}'", full));
                }
                values_[full] = std::string(text::trim(value.data()));
            }
        }
    }

    [[nodiscard]] std::optional<std::string> raw(const std::string& key) const {
        const auto it = values_.find(key);
        if (it == values_.end() || it->second.empty()) {
            return std::nullopt;
        }
        return it->second;
    }

    [[nodiscard]] std::string str(const std::string& key, const std::string& fallback) const {
        return raw(key).value_or(fallback);
    }

    [[nodiscard]] double number(const std::string& key, double fallback) const {
        const auto r = raw(key);
        if (!r) {
            return fallback;
        }
        const auto v = text::parse_double(*r);
        if (!v) {
            throw ConfigError(fmt::format("{}: '{}' is not a number", key, *r));
        }
        return *v;
    }

    [[nodiscard]] std::uint64_t integer(const std::string& key, std::uint64_t fallback) const {
        const auto r = raw(key);
        if (!r) {
            return fallback;
        }
        std::uint64_t v = 0;
        const auto* end = r->data() + r->size();
        auto [ptr, ec] = std::from_chars(r->data(), end, v);
        if (ec != std::errc{} || ptr != end) {
            throw ConfigError(fmt::format("{}: '{}' is not a non-negative integer", key, *r));
        }
        return v;
    }

    [[nodiscard]] bool boolean(const std::string& key, bool fallback) const {
        const auto r = raw(key);
        if (!r) {
            return fallback;
        }
        if (*r == "true" || *r == "1" || *r == "yes" || *r == "on") {
            return true;
        }
        if (*r == "false" || *r == "0" || *r == "no" || *r == "off") {
            return false;
        }
        throw ConfigError(fmt::format("{}: '{}' is not a boolean", key, *r));
    }

    [[nodiscard]] std::optional<Date> date(const std::string& key) const {
        const auto r = raw(key);
        if (!r) {
            return std::nullopt;
        }
        try {
            return Date::parse(*r);
        } catch (const DataError&) {
            throw ConfigError(fmt::format("{}: '{}' is not a YYYY-MM-DD date", key, *r));
        }
    }

    [[nodiscard]] std::optional<DateRange> range(const std::string& first_key, const std::string& last_key) const {
        const auto first = date(first_key);
        const auto last = date(last_key);
        if (!first && !last) {
            return std::nullopt;
        }
        DateRange r{first.value_or(Date(1, 1, 1)), last.value_or(Date(9999, 12, 31))};
        if (r.last < r.first) {
            throw ConfigError(fmt::format("{} is after {}", first_key, last_key));
        }
        return r;
    }

    [[nodiscard]] std::vector<std::string> list(const std::string& key, std::vector<std::string> fallback) const {
        const auto r = raw(key);
        if (!r) {
            return fallback;
        }
        std::vector<std::string> out;
        for (auto item : text::split(*r)) {
            if (!item.empty()) {
                out.emplace_back(item);
            }
        }
        return out;
    }

    [[nodiscard]] std::vector<std::pair<std::string, std::string>> section(const std::string& name) const {
        std::vector<std::pair<std::string, std::string>> out;
        const std::string prefix = name + ".";
        for (const auto& [k, v] : values_) {
            if (k.rfind(prefix, 0) == 0) {
                out.emplace_back(k.substr(prefix.size()), v);
            }
        }
        return out;
    }

private:
    std::map<std::string, std::string> values_;
};

fs::path resolve(const fs::path& base, const std::string& p) {
    fs::path path(p);
    return path.is_absolute() ? path : base / path;
}

void require(bool ok, const std::string& message) {
    if (!ok) {
        throw ConfigError(message);
    }
}

ShockDistribution parse_distribution(std::string_view name) {
    if (name == "gaussian" || name == "normal") {
        return ShockDistribution::gaussian;
    }
    if (name == "student_t3" || name == "student") {
        return ShockDistribution::student_t3;
    }
    if (name == "student_t3_raw") {
        return ShockDistribution::student_t3_raw;
    }
    throw ConfigError(fmt::format("unknown shock distribution '{}'", name));
}

// ---------------------------------------------------------------- file helpers

struct Layout {
    fs::path root;

    [[nodiscard]] fs::path panel() const { return root / "panel.csv"; }
    [[nodiscard]] fs::path reference(int k) const { return root / "reference" / fmt::format("theta{}.csv", k); }
    [[nodiscard]] fs::path reference_meta() const { return root / "reference" / "meta.csv"; }
    [[nodiscard]] fs::path reference_cache(const std::string& key) const {
        return root / "cache" / fmt::format("reference_{}.csv", key);
    }
    [[nodiscard]] fs::path series(const std::string& name) const {
        return root / "indicators" / fmt::format("{}.csv", name);
    }
    [[nodiscard]] fs::path indicators(const std::string& file) const { return root / "indicators" / file; }
    [[nodiscard]] fs::path backtest(const std::string& file) const { return root / "backtest" / file; }
    [[nodiscard]] fs::path report() const { return root / "report.txt"; }
};

std::string key_value_table(const std::vector<std::pair<std::string, std::string>>& rows) {
    std::string out = "key,value\n";
    for (const auto& [k, v] : rows) {
        out += k + "," + v + "\n";
    }
    return out;
}

void write_series(const IndicatorSeries& s, const fs::path& path) {
    std::string out = "date,value\n";
    for (std::size_t k = 0; k < s.size(); ++k) {
        out += s.dates[k].to_string() + "," + text::format_double(s.values[k]) + "\n";
    }
    text::write_file(path, out);
}

IndicatorSeries read_series(const std::string& name, const fs::path& path) {
    const std::string content = text::read_file(path);
    const auto lines = text::data_lines(content);
    if (lines.empty() || text::trim(lines.front()) != "date,value") {
        throw DataError(fmt::format("{}: not a series file", path.string()));
    }
    IndicatorSeries s;
    s.name = name;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto f = text::split(lines[i]);
        const auto v = f.size() == 2 ? text::parse_double(f[1]) : std::nullopt;
        if (!v) {
            throw DataError(fmt::format("{}: line {}: malformed row", path.string(), i + 1));
        }
        s.dates.push_back(Date::parse(f[0]));
        s.values.push_back(*v);
    }
    return s;
}

// Table keyed on the union of dates; empty cells where a series is undefined.
std::string combined_table(const std::vector<const IndicatorSeries*>& columns) {
    std::set<Date> dates;
    for (const auto* c : columns) {
        dates.insert(c->dates.begin(), c->dates.end());
    }
    std::string out = "date";
    for (const auto* c : columns) {
        out += "," + c->name;
    }
    out += '\n';
    std::vector<std::size_t> cursor(columns.size(), 0);
    for (const auto& d : dates) {
        out += d.to_string();
        for (std::size_t c = 0; c < columns.size(); ++c) {
            out += ',';
            const auto& s = *columns[c];
            if (cursor[c] < s.size() && s.dates[cursor[c]] == d) {
                out += text::format_double(s.values[cursor[c]]);
                ++cursor[c];
            }
        }
        out += '\n';
    }
    return out;
}

// ---------------------------------------------------------------- stages

AssetPanel run_ingest(const RunConfig& c) {
    AssetPanel panel;
    if (!c.panel_paths.empty()) {
        panel = load_panel(c.panel_paths, c.alignment);
    } else if (c.synthetic) {
        panel = synthetic_panel(c.synthetic_spec, c.synthetic_seed);
    } else {
        throw ConfigError("no input: set data.panels / data.panel_dir or enable [synthetic]");
    }
    write_panel_cache(panel, Layout{c.output_dir}.panel());
    return panel;
}

AssetPanel ensure_panel(const RunConfig& c) {
    const Layout out{c.output_dir};
    if (!fs::exists(out.panel())) {
        run_ingest(c);
    }
    return read_panel_cache(out.panel());
}

std::pair<std::size_t, std::size_t> slice_or_all(const std::vector<Date>& dates, const std::optional<DateRange>& r,
                                                 const std::string& what) {
    if (!r) {
        return {0, dates.size()};
    }
    const auto s = date_slice(dates, *r);
    if (s.second - s.first < 2) {
        throw ConfigError(fmt::format("{} slice contains fewer than 2 return dates", what));
    }
    return s;
}

struct References {
    MPParams mp;
    double rho = 0.5;
    TruncationRule truncation;
    std::array<BinnedDensity, 3> theta;
};

References run_reference(const RunConfig& c, const ReturnPanel& returns) {
    const Layout out{c.output_dir};
    References refs;
    refs.mp = {1.0, static_cast<double>(returns.assets()) / static_cast<double>(c.window)};
    if (!(refs.mp.gamma < 1.0)) {
        throw ConfigError(fmt::format("reference densities need N < T (N={}, T={})", returns.assets(), c.window));
    }
    if (c.rho) {
        refs.rho = *c.rho;
    } else {
        const auto [first, last] = slice_or_all(returns.dates, c.rho_slice, "reference.rho");
        refs.rho = std::clamp(mean_pairwise_correlation(returns, first, last), 0.0, 0.999);
    }
    refs.truncation = TruncationRule::from_mp(refs.mp, c.truncation_divisor);
    const auto edges = standard_support(refs.mp, c.support_multiplier, c.bins);

    const std::array kinds{ReferenceKind::marchenko_pastur, ReferenceKind::gaussian_corr, ReferenceKind::student_corr};
    for (std::size_t k = 0; k < kinds.size(); ++k) {
        ReferenceSpec spec;
        spec.kind = kinds[k];
        spec.assets = returns.assets();
        spec.observations = c.window;
        spec.rho = refs.rho;
        spec.samples = c.samples;
        spec.seed = c.reference_seed;
        spec.bins = c.bins;
        spec.standardize_student = c.standardize_student;
        spec.threads = c.threads;
        const auto cache = out.reference_cache(reference_cache_key(spec, edges));
        if (fs::exists(cache)) {
            refs.theta[k] = read_density(cache);
        } else {
            refs.theta[k] = build_reference(spec, edges);
            write_density(refs.theta[k], cache);
        }
        text::write_file(out.reference(static_cast<int>(k) + 1), density_plot_table(refs.theta[k]));
    }
    const auto [lo, hi] = mp_edges(refs.mp);
    text::write_file(out.reference_meta(),
                     key_value_table({{"assets", std::to_string(returns.assets())},
                                      {"window", std::to_string(c.window)},
                                      {"gamma", text::format_double(refs.mp.gamma)},
                                      {"lambda_minus", text::format_double(lo)},
                                      {"lambda_plus", text::format_double(hi)},
                                      {"lambda_star", text::format_double(refs.truncation.lambda_star)},
                                      {"support_max", text::format_double(edges.back())},
                                      {"bins", std::to_string(c.bins)},
                                      {"rho", text::format_double(refs.rho)},
                                      {"samples", std::to_string(c.samples)},
                                      {"seed", std::to_string(c.reference_seed)},
                                      {"standardize_student", c.standardize_student ? "true" : "false"}}));
    return refs;
}

bool selected(const RunConfig& c, const std::string& name) {
    return std::find(c.indicators.begin(), c.indicators.end(), name) != c.indicators.end();
}

using SeriesMap = std::map<std::string, IndicatorSeries>;

SeriesMap run_indicators(const RunConfig& c) {
    const Layout out{c.output_dir};
    const auto panel = ensure_panel(c);
    const auto returns = log_returns(panel);

    double factor = c.rescale_factor;
    if (c.rescale_mode == RescaleMode::mean_variance) {
        const auto [first, last] = slice_or_all(returns.dates, c.rescale_slice, "rescale");
        factor = mean_variance_rescale_factor(returns, first, last);
    }

    SeriesMap series;
    std::vector<std::pair<std::string, std::string>> meta{{"rescale_factor", text::format_double(factor)},
                                                          {"window", std::to_string(c.window)},
                                                          {"pooling", std::to_string(c.pooling)}};
    std::string skipped = "series,date\n";

    if (selected(c, "A1") || selected(c, "A2") || selected(c, "A3")) {
        const auto refs = run_reference(c, returns);
        ASeriesConfig ac;
        ac.window = c.window;
        ac.pooling = c.pooling;
        ac.rescale_factor = factor;
        ac.truncation = refs.truncation;
        ac.threads = c.threads;
        auto a = a_series(returns, refs.theta[0], refs.theta[1], refs.theta[2], ac);
        std::vector<const IndicatorSeries*> cols;
        for (auto* s : {&a.a1, &a.a2, &a.a3}) {
            if (selected(c, s->name)) {
                series[s->name] = *s;
                cols.push_back(&series[s->name]);
            }
        }
        text::write_file(out.indicators("a_series.csv"), combined_table(cols));
    }

    if (std::any_of(kIndicatorNames.begin() + 3, kIndicatorNames.end(),
                    [&](const std::string& n) { return selected(c, n); })) {
        BSeriesConfig bc;
        bc.window = c.window;
        bc.rescale = c.rescale_b_series;
        bc.rescale_factor = factor;
        bc.smoothing = c.smoothing;
        bc.threads = c.threads;
        auto b = b_series(returns, bc);
        std::vector<IndicatorSeries*> produced{&b.b1, &b.b2, &b.b3};
        if (b.has_b3a) {
            produced.push_back(&b.b3a);
        }
        if (b.has_b3b) {
            produced.push_back(&b.b3b);
            if (b.b3c.size() > 0) {
                produced.push_back(&b.b3c);
            }
        }
        std::vector<const IndicatorSeries*> cols;
        for (auto* s : produced) {
            if (selected(c, s->name)) {
                series[s->name] = *s;
                cols.push_back(&series[s->name]);
            }
        }
        for (const char* name : {"B3A", "B3B", "B3C"}) {
            if (selected(c, name) && !series.count(name)) {
                meta.emplace_back(fmt::format("{}_status", name), "unavailable");
            }
        }
        for (const auto& d : b.skipped_b3a) {
            skipped += "B3A," + d.to_string() + "\n";
        }
        for (const auto& d : b.skipped_b3b) {
            skipped += "B3B," + d.to_string() + "\n";
        }
        text::write_file(out.indicators("b_series.csv"), combined_table(cols));
    }

    for (const auto& [name, s] : series) {
        write_series(s, out.series(name));
    }
    text::write_file(out.indicators("skipped.csv"), skipped);
    std::string names;
    for (const auto& [name, _] : series) {
        names += (names.empty() ? "" : ";") + name;
    }
    meta.emplace_back("series", names);
    // Written last: its presence marks a complete indicator stage.
    text::write_file(out.indicators("meta.csv"), key_value_table(meta));
    return series;
}

SeriesMap ensure_indicators(const RunConfig& c) {
    const Layout out{c.output_dir};
    if (!fs::exists(out.indicators("meta.csv"))) {
        return run_indicators(c);
    }
    SeriesMap series;
    for (const auto& name : kIndicatorNames) {
        if (fs::exists(out.series(name))) {
            series[name] = read_series(name, out.series(name));
        }
    }
    return series;
}

struct BacktestResult {
    std::size_t panel_assets = 0;
    std::size_t panel_days = 0;
    Date first_date;
    Date last_date;
    std::vector<std::pair<std::string, HistoricalReport>> historical;
    std::vector<std::pair<std::string, ZoneCalibration>> zones;
    std::vector<std::string> zone_sources;
    std::string threshold_indicator;
    ThresholdReport threshold;
    SeriesMap series;
};

// Open-ended bounds are stored as sentinels and always accepted.
void check_in_span(const std::optional<DateRange>& r, const AssetPanel& panel, const std::string& what) {
    if (!r) {
        return;
    }
    const DateRange span{panel.dates.front(), panel.dates.back()};
    const bool first_ok = r->first == Date(1, 1, 1) || span.contains(r->first);
    const bool last_ok = r->last == Date(9999, 12, 31) || span.contains(r->last);
    if (!first_ok || !last_ok) {
        throw ConfigError(fmt::format("{} {} .. {} lies outside the panel span {} .. {}", what, r->first.to_string(),
                                      r->last.to_string(), span.first.to_string(), span.last.to_string()));
    }
}

BacktestResult run_backtest(const RunConfig& c) {
    const Layout out{c.output_dir};
    const auto panel = ensure_panel(c);
    check_in_span(c.calibration_range, panel, "calibration range");
    check_in_span(c.evaluation_range, panel, "evaluation range");

    BacktestResult result;
    result.series = ensure_indicators(c);
    result.panel_assets = panel.assets();
    result.panel_days = panel.days();
    result.first_date = panel.dates.front();
    result.last_date = panel.dates.back();

    const std::string ticker = c.reference_ticker.empty() ? panel.tickers.front() : c.reference_ticker;
    const auto index = panel.ticker_index(ticker);
    if (!index) {
        throw ConfigError(fmt::format("backtest.reference_ticker '{}' is not in the panel", ticker));
    }
    const Eigen::RowVectorXd prices = panel.close.row(static_cast<Eigen::Index>(*index));
    const auto drawdown = mdd(panel.dates, std::span<const double>(prices.data(), static_cast<std::size_t>(prices.size())),
                              c.mdd_horizon, ticker);
    {
        std::string text = "date,mdd\n";
        for (std::size_t k = 0; k < drawdown.values.size(); ++k) {
            text += drawdown.dates[k].to_string() + "," + text::format_double(drawdown.values[k]) + "\n";
        }
        text::write_file(out.backtest("mdd.csv"), text);
    }

    const CrisisCalendar calendar = c.calendar_path ? read_crisis_calendar(*c.calendar_path) : CrisisCalendar{};
    HistoricalOptions hopt;
    hopt.lookback = c.lookback;
    hopt.fraction = c.fraction;
    hopt.calibration_range = c.calibration_range;
    hopt.evaluation_range = c.evaluation_range;
    CalibrationConfig cal;
    cal.mdd_threshold = c.objective_mdd_threshold;
    cal.grid_levels = c.grid_levels;
    cal.threads = c.threads;

    std::map<std::string, FlagSeries> flags;
    std::string zones_csv = "indicator,low,high,f1,points,events,source\n";
    std::string summary = "indicator,zone_points,crisis_zone_points,crisis_point_ratio,false_positive_ratio\n";
    for (const auto& name : c.backtest_indicators) {
        const auto it = result.series.find(name);
        if (it == result.series.end()) {
            throw ConfigError(fmt::format("backtest indicator {} was not computed (not selected, or the panel "
                                          "lacks the weights it needs)",
                                          name));
        }
        const auto& s = it->second;
        ZoneCalibration zc;
        std::string source = "calibrated";
        if (const auto fixed = c.fixed_zones.find(name); fixed != c.fixed_zones.end()) {
            zc.zone = fixed->second;
            source = "fixed";
        } else {
            zc = calibrate_danger_zone(s, drawdown, c.calibration_range, cal);
        }
        zones_csv += fmt::format("{},{},{},{},{},{},{}\n", name, text::format_double(zc.zone.low),
                                 text::format_double(zc.zone.high), text::format_double(zc.f1), zc.points, zc.events,
                                 source);
        auto f = red_flags(s, zc.zone, c.lookback, c.fraction);
        {
            std::string text = "date,flag\n";
            for (std::size_t k = 0; k < f.dates.size(); ++k) {
                text += f.dates[k].to_string() + (f.flags[k] ? ",1\n" : ",0\n");
            }
            text::write_file(out.backtest(fmt::format("flags_{}.csv", name)), text);
        }
        {
            std::string text = "date,indicator,mdd\n";
            std::size_t j = 0;
            for (std::size_t k = 0; k < s.size(); ++k) {
                while (j < drawdown.dates.size() && drawdown.dates[j] < s.dates[k]) {
                    ++j;
                }
                if (j < drawdown.dates.size() && drawdown.dates[j] == s.dates[k]) {
                    text += s.dates[k].to_string() + "," + text::format_double(s.values[k]) + "," +
                            text::format_double(drawdown.values[j]) + "\n";
                }
            }
            text::write_file(out.backtest(fmt::format("scatter_{}.csv", name)), text);
        }
        auto report = historical_backtest(s, zc.zone, calendar, hopt);
        text::write_file(out.backtest(fmt::format("historical_{}.csv", name)), historical_csv(report));
        const double ratio = report.crisis_point_ratio();
        summary += fmt::format("{},{},{},{},{}\n", name, report.zone_points, report.crisis_zone_points,
                               std::isnan(ratio) ? "NA" : text::format_double(ratio),
                               std::isnan(ratio) ? "NA" : text::format_double(report.false_positive_ratio()));
        result.historical.emplace_back(name, std::move(report));
        result.zones.emplace_back(name, std::move(zc));
        result.zone_sources.push_back(source);
        flags.emplace(name, std::move(f));
    }
    text::write_file(out.backtest("zones.csv"), zones_csv);
    text::write_file(out.backtest("historical_summary.csv"), summary);

    result.threshold_indicator = c.threshold_indicator.empty() ? c.backtest_indicators.front() : c.threshold_indicator;
    const auto fit = flags.find(result.threshold_indicator);
    if (fit == flags.end()) {
        throw ConfigError(fmt::format("backtest.threshold_indicator {} is not among backtest.indicators",
                                      result.threshold_indicator));
    }
    result.threshold = threshold_backtest(fit->second, drawdown, c.mdd_thresholds, c.evaluation_range);
    text::write_file(out.backtest("threshold.csv"), threshold_csv(result.threshold));
    return result;
}

double median_of(std::vector<double> v) {
    if (v.empty()) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

void run_report(const RunConfig& c) {
    const auto bt = run_backtest(c);
    std::string r;
    r += "rmtwarn report\n\n";
    r += fmt::format("panel: {} assets, {} dates, {} .. {}\n", bt.panel_assets, bt.panel_days,
                     bt.first_date.to_string(), bt.last_date.to_string());
    r += fmt::format("window T = {}, pooling P = {}, MDD horizon H = {}\n", c.window, c.pooling, c.mdd_horizon);
    r += fmt::format("red flag: >= {:g}% of the {} points ending at t in the danger zone\n\n", 100.0 * c.fraction,
                     c.lookback + 1);

    r += "indicator series\n";
    r += fmt::format("{:<6}{:>8}  {:<10}  {:<10}{:>14}{:>14}{:>14}\n", "name", "count", "first", "last", "min",
                     "median", "max");
    for (const auto& [name, s] : bt.series) {
        if (s.size() == 0) {
            continue;
        }
        const auto [mn, mx] = std::minmax_element(s.values.begin(), s.values.end());
        r += fmt::format("{:<6}{:>8}  {:<10}  {:<10}{:>14.6g}{:>14.6g}{:>14.6g}\n", name, s.size(),
                         s.dates.front().to_string(), s.dates.back().to_string(), *mn, median_of(s.values), *mx);
    }

    r += "\ndanger zones\n";
    for (std::size_t k = 0; k < bt.zones.size(); ++k) {
        const auto& [name, zc] = bt.zones[k];
        if (bt.zone_sources[k] == "fixed") {
            r += fmt::format("{:<6}[{:.6g}, {:.6g}]  (fixed)\n", name, zc.zone.low, zc.zone.high);
        } else {
            r += fmt::format("{:<6}[{:.6g}, {:.6g}]  F1 {:.4f} on {} dates, {} with MDD >= {:g}%\n", name,
                             zc.zone.low, zc.zone.high, zc.f1, zc.points, zc.events, 100.0 * c.objective_mdd_threshold);
        }
    }

    r += "\nhistorical crisis prediction (percent of points in the danger zone; * = calibration period)\n";
    r += render_historical_table(bt.historical);

    r += fmt::format("\ncrisis prediction by MDD threshold ({}, {} dates, {} flags)\n", bt.threshold_indicator,
                     bt.threshold.dates, bt.threshold.flags);
    r += render_threshold_table(bt.threshold);
    text::write_file(Layout{c.output_dir}.report(), r);
}

}  // namespace

std::vector<Regime> parse_regimes(const std::string& text) {
    std::vector<Regime> regimes;
    for (auto entry : text::split(text, ';')) {
        if (entry.empty()) {
            continue;
        }
        const auto parts = text::split(entry, ':');
        if (parts.size() < 3 || parts.size() > 4) {
            throw ConfigError(fmt::format("regime '{}' must be vol:corr:length[:distribution]", entry));
        }
        Regime r;
        const auto vol = text::parse_double(parts[0]);
        const auto corr = text::parse_double(parts[1]);
        const auto len = text::parse_double(parts[2]);
        if (!vol || !corr || !len || *len < 1 || *len != static_cast<double>(static_cast<std::size_t>(*len))) {
            throw ConfigError(fmt::format("regime '{}' has invalid numbers", entry));
        }
        r.volatility = *vol;
        r.correlation = *corr;
        r.length = static_cast<std::size_t>(*len);
        if (parts.size() == 4) {
            r.distribution = parse_distribution(parts[3]);
        }
        regimes.push_back(r);
    }
    if (regimes.empty()) {
        throw ConfigError("synthetic.regimes is empty");
    }
    return regimes;
}

RunConfig parse_config(const std::string& text, const fs::path& config_dir) {
    pt::ptree tree;
    try {
        std::istringstream in(text);
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(fmt::format("config: {}", e.message()));
    }
    const ConfigReader cfg(tree);
    RunConfig c;
    c.config_dir = config_dir;

    for (const auto& p : cfg.list("data.panels", {})) {
        c.panel_paths.push_back(resolve(config_dir, p));
    }
    if (const auto dir = cfg.raw("data.panel_dir")) {
        const fs::path d = resolve(config_dir, *dir);
        if (!fs::is_directory(d)) {
            throw ConfigError(fmt::format("data.panel_dir '{}' is not a directory", d.string()));
        }
        std::vector<fs::path> found;
        for (const auto& e : fs::directory_iterator(d)) {
            if (e.is_regular_file() && e.path().extension() == ".csv") {
                found.push_back(e.path());
            }
        }
        std::sort(found.begin(), found.end());
        c.panel_paths.insert(c.panel_paths.end(), found.begin(), found.end());
    }
    if (const auto ref = cfg.raw("data.reference_ticker")) {
        c.alignment.calendar = AlignmentPolicy::Calendar::reference_ticker;
        c.alignment.reference_ticker = *ref;
    }
    if (const auto cal = cfg.raw("data.calendar")) {
        c.calendar_path = resolve(config_dir, *cal);
    }
    if (const auto cal = cfg.raw("backtest.calendar")) {
        c.calendar_path = resolve(config_dir, *cal);
    }

    c.synthetic = cfg.boolean("synthetic.enabled", false);
    if (c.synthetic) {
        c.synthetic_spec.assets = cfg.integer("synthetic.assets", 10);
        c.synthetic_spec.regimes = parse_regimes(cfg.str("synthetic.regimes", ""));
        if (const auto start = cfg.date("synthetic.start")) {
            c.synthetic_spec.start = *start;
        }
        c.synthetic_spec.initial_price = cfg.number("synthetic.initial_price", 100.0);
        c.synthetic_spec.with_volume = cfg.boolean("synthetic.with_volume", false);
        c.synthetic_spec.with_market_cap = cfg.boolean("synthetic.with_market_cap", false);
        c.synthetic_seed = cfg.integer("synthetic.seed", 1);
        require(c.synthetic_spec.assets >= 1, "synthetic.assets must be >= 1");
        for (const auto& r : c.synthetic_spec.regimes) {
            require(r.volatility > 0.0, "synthetic regime volatility must be > 0");
            require(r.correlation >= 0.0 && r.correlation < 1.0, "synthetic regime correlation must be in [0, 1)");
        }
    }

    c.window = cfg.integer("window.length", 150);
    c.pooling = cfg.integer("window.pooling", 20);
    require(c.window >= 2, "window.length must be >= 2");
    require(c.pooling >= 1, "window.pooling must be >= 1");

    const std::string rho = cfg.str("reference.rho", "0.5");
    if (rho == "auto") {
        c.rho.reset();
        c.rho_slice = cfg.range("reference.rho_start", "reference.rho_end");
    } else {
        const auto v = text::parse_double(rho);
        require(v.has_value() && *v >= 0.0 && *v < 1.0, "reference.rho must be 'auto' or a number in [0, 1)");
        c.rho = *v;
    }
    c.samples = cfg.integer("reference.samples", 500);
    c.reference_seed = cfg.integer("reference.seed", 20150101);
    c.bins = cfg.integer("reference.bins", 200);
    c.support_multiplier = cfg.number("reference.support_multiplier", 25.0);
    c.truncation_divisor = cfg.number("reference.truncation_divisor", 10.0);
    c.standardize_student = cfg.boolean("reference.standardize_student", false);
    c.threads = static_cast<unsigned>(cfg.integer("reference.threads", 0));
    require(c.samples >= 1, "reference.samples must be >= 1");
    require(c.bins >= 10, "reference.bins must be >= 10");
    require(c.support_multiplier >= 1.0, "reference.support_multiplier must be >= 1");
    require(c.truncation_divisor > 0.0, "reference.truncation_divisor must be > 0");

    const std::string mode = cfg.str("rescale.mode", "mean_variance");
    if (mode == "fixed") {
        c.rescale_mode = RescaleMode::fixed;
        c.rescale_factor = cfg.number("rescale.factor", 1.0);
        require(c.rescale_factor > 0.0, "rescale.factor must be > 0");
    } else if (mode == "mean_variance") {
        c.rescale_mode = RescaleMode::mean_variance;
        c.rescale_slice = cfg.range("rescale.start", "rescale.end");
    } else {
        throw ConfigError(fmt::format("rescale.mode must be 'fixed' or 'mean_variance', got '{}'", mode));
    }
    c.rescale_b_series = cfg.boolean("rescale.apply_to_b_series", false);

    c.indicators = cfg.list("indicators.select", c.indicators);
    for (const auto& name : c.indicators) {
        require(std::find(kIndicatorNames.begin(), kIndicatorNames.end(), name) != kIndicatorNames.end(),
                fmt::format("indicators.select: unknown indicator '{}'", name));
    }
    c.smoothing = cfg.integer("indicators.smoothing", 150);
    require(c.smoothing >= 1, "indicators.smoothing must be >= 1");

    c.backtest_indicators = cfg.list("backtest.indicators", c.backtest_indicators);
    require(!c.backtest_indicators.empty(), "backtest.indicators must not be empty");
    c.threshold_indicator = cfg.str("backtest.threshold_indicator", "");
    c.reference_ticker = cfg.str("backtest.reference_ticker", "");
    c.mdd_horizon = cfg.integer("backtest.mdd_horizon", 100);
    require(c.mdd_horizon >= 1, "backtest.mdd_horizon must be >= 1");
    if (const auto list = cfg.raw("backtest.mdd_thresholds")) {
        c.mdd_thresholds.clear();
        for (auto item : text::split(*list)) {
            const auto v = text::parse_double(item);
            require(v.has_value() && *v >= 0.0 && *v <= 1.0, "backtest.mdd_thresholds must be numbers in [0, 1]");
            c.mdd_thresholds.push_back(*v);
        }
    }
    c.lookback = cfg.integer("backtest.lookback", 100);
    c.fraction = cfg.number("backtest.fraction", 0.6);
    require(c.fraction >= 0.0 && c.fraction <= 1.0, "backtest.fraction must be in [0, 1]");
    c.calibration_range = cfg.range("backtest.calibration_start", "backtest.calibration_end");
    c.evaluation_range = cfg.range("backtest.evaluation_start", "backtest.evaluation_end");
    c.objective_mdd_threshold = cfg.number("backtest.objective_mdd_threshold", 0.15);
    c.grid_levels = cfg.integer("backtest.grid_levels", 101);
    require(c.grid_levels >= 2, "backtest.grid_levels must be >= 2");

    for (const auto& [name, value] : cfg.section("zone")) {
        const auto parts = text::split(value);
        const std::string message = fmt::format("zone.{} must be 'low,high' with low < high", name);
        require(parts.size() == 2, message);
        const double lo = text::parse_double(parts[0]).value_or(std::numeric_limits<double>::quiet_NaN());
        const double hi = text::parse_double(parts[1]).value_or(std::numeric_limits<double>::quiet_NaN());
        require(lo < hi, message);
        c.fixed_zones[name] = {lo, hi};
    }

    if (const auto dir = cfg.raw("output.dir")) {
        c.output_dir = resolve(config_dir, *dir);
    } else if (const char* env = std::getenv(kOutputDirEnv); env != nullptr && *env != '\0') {
        c.output_dir = env;
    } else {
        c.output_dir = config_dir / "rmtwarn_out";
    }
    return c;
}

RunConfig load_config(const fs::path& path) {
    std::string text;
    try {
        text = text::read_file(path);
    } catch (const DataError& e) {
        throw ConfigError(e.what());
    }
    return parse_config(text, fs::absolute(path).parent_path());
}

std::optional<Stage> parse_stage(const std::string& name) {
    if (name == "ingest") {
        return Stage::ingest;
    }
    if (name == "reference") {
        return Stage::reference;
    }
    if (name == "indicators") {
        return Stage::indicators;
    }
    if (name == "backtest") {
        return Stage::backtest;
    }
    if (name == "report") {
        return Stage::report;
    }
    return std::nullopt;
}

void run_stage(Stage stage, const RunConfig& config) {
    switch (stage) {
        case Stage::ingest:
            run_ingest(config);
            return;
        case Stage::reference:
            run_reference(config, log_returns(ensure_panel(config)));
            return;
        case Stage::indicators:
            run_indicators(config);
            return;
        case Stage::backtest:
            run_backtest(config);
            return;
        case Stage::report:
            run_report(config);
            return;
    }
}

}  // namespace rmtwarn
