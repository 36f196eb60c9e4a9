#include "rmtwarn/market_data.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

#include <fmt/format.h>

#include "rmtwarn/random.hpp"
#include "rmtwarn/text_io.hpp"

namespace rmtwarn {

namespace {

enum class Column { close, volume, market_cap };

std::optional<double> field_value(std::string_view field, const std::string& ticker, std::size_t line_no) {
    if (text::trim(field).empty()) {
        return std::nullopt;
    }
    auto value = text::parse_double(field);
    if (!value || !std::isfinite(*value)) {
        throw DataError(fmt::format("{}: line {}: unparseable number '{}'", ticker, line_no, field));
    }
    return value;
}

// Forward-fills one column of a ticker's records onto `dates`. `pick` selects the
// column. Dates absent from the ticker's own calendar are filled too (only
// happens with a reference-ticker calendar).
template <typename Pick>
Eigen::RowVectorXd fill_onto(const TickerSeries& s, const std::vector<Date>& dates, Pick pick,
                             std::string_view column) {
    Eigen::RowVectorXd row(static_cast<Eigen::Index>(dates.size()));
    std::optional<double> last;
    std::size_t r = 0;
    for (std::size_t k = 0; k < dates.size(); ++k) {
        while (r < s.records.size() && s.records[r].date <= dates[k]) {
            if (auto v = pick(s.records[r])) {
                last = v;
            }
            ++r;
        }
        if (!last) {
            throw DataError(fmt::format("{}: no {} observed on or before {} to carry forward", s.ticker,
                                        column, dates[k].to_string()));
        }
        row(static_cast<Eigen::Index>(k)) = *last;
    }
    return row;
}

}  // namespace

std::optional<std::size_t> AssetPanel::ticker_index(const std::string& ticker) const {
    const auto it = std::find(tickers.begin(), tickers.end(), ticker);
    if (it == tickers.end()) {
        return std::nullopt;
    }
    return static_cast<std::size_t>(it - tickers.begin());
}

bool operator==(const AssetPanel& a, const AssetPanel& b) {
    auto same_opt = [](const std::optional<Eigen::MatrixXd>& x, const std::optional<Eigen::MatrixXd>& y) {
        if (x.has_value() != y.has_value()) {
            return false;
        }
        return !x || (x->rows() == y->rows() && x->cols() == y->cols() && *x == *y);
    };
    return a.tickers == b.tickers && a.dates == b.dates && a.close.rows() == b.close.rows() &&
           a.close.cols() == b.close.cols() && a.close == b.close && same_opt(a.volume, b.volume) &&
           same_opt(a.market_cap, b.market_cap);
}

TickerSeries parse_ticker_csv(const std::string& ticker, const std::string& content) {
    const auto lines = text::data_lines(content);
    if (lines.empty()) {
        throw DataError(fmt::format("{}: empty price file", ticker));
    }
    const auto header = text::split(lines.front());
    if (header.size() < 2 || header[0] != "date" || header[1] != "close") {
        throw DataError(fmt::format("{}: header must start with 'date,close'", ticker));
    }
    std::vector<Column> columns{Column::close};
    TickerSeries series;
    series.ticker = ticker;
    for (std::size_t c = 2; c < header.size(); ++c) {
        if (header[c] == "volume" && !series.has_volume) {
            columns.push_back(Column::volume);
            series.has_volume = true;
        } else if (header[c] == "market_cap" && !series.has_market_cap) {
            columns.push_back(Column::market_cap);
            series.has_market_cap = true;
        } else {
            throw DataError(fmt::format("{}: unexpected header column '{}'", ticker, header[c]));
        }
    }

    series.records.reserve(lines.size() - 1);
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const std::size_t line_no = i + 1;
        const auto fields = text::split(lines[i]);
        if (fields.size() != header.size()) {
            throw DataError(fmt::format("{}: line {}: expected {} fields, got {}", ticker, line_no, header.size(),
                                        fields.size()));
        }
        PriceRecord rec;
        try {
            rec.date = Date::parse(fields[0]);
        } catch (const DataError& e) {
            throw DataError(fmt::format("{}: line {}: {}", ticker, line_no, e.what()));
        }
        for (std::size_t c = 0; c < columns.size(); ++c) {
            const auto v = field_value(fields[c + 1], ticker, line_no);
            switch (columns[c]) {
                case Column::close:
                    if (v && *v <= 0.0) {
                        throw DataError(fmt::format("{}: line {}: non-positive price {}", ticker, line_no, *v));
                    }
                    rec.close = v;
                    break;
                case Column::volume:
                    if (v && *v < 0.0) {
                        throw DataError(fmt::format("{}: line {}: negative volume {}", ticker, line_no, *v));
                    }
                    rec.volume = v;
                    break;
                case Column::market_cap:
                    if (v && *v <= 0.0) {
                        throw DataError(
                            fmt::format("{}: line {}: non-positive market cap {}", ticker, line_no, *v));
                    }
                    rec.market_cap = v;
                    break;
            }
        }
        if (!series.records.empty() && rec.date <= series.records.back().date) {
            throw DataError(fmt::format("{}: line {}: dates must be strictly increasing", ticker, line_no));
        }
        series.records.push_back(rec);
    }
    return series;
}

TickerSeries read_ticker_file(const std::filesystem::path& path) {
    return parse_ticker_csv(path.stem().string(), text::read_file(path));
}

AssetPanel align_series(const std::vector<TickerSeries>& series, const AlignmentPolicy& policy) {
    if (series.empty()) {
        throw DataError("no input series");
    }
    {
        std::set<std::string> seen;
        for (const auto& s : series) {
            if (!seen.insert(s.ticker).second) {
                throw DataError(fmt::format("duplicate ticker '{}'", s.ticker));
            }
        }
    }

    std::vector<Date> dates;
    if (policy.calendar == AlignmentPolicy::Calendar::intersection) {
        std::map<Date, std::size_t> counts;
        for (const auto& s : series) {
            for (const auto& r : s.records) {
                ++counts[r.date];
            }
        }
        for (const auto& [d, n] : counts) {
            if (n == series.size()) {
                dates.push_back(d);
            }
        }
    } else {
        const auto it = std::find_if(series.begin(), series.end(),
                                     [&](const TickerSeries& s) { return s.ticker == policy.reference_ticker; });
        if (it == series.end()) {
            throw DataError(fmt::format("reference ticker '{}' not among inputs", policy.reference_ticker));
        }
        for (const auto& r : it->records) {
            dates.push_back(r.date);
        }
        // Dates before every asset has printed a price cannot be filled.
        Date earliest_common = dates.empty() ? Date{} : dates.front();
        for (const auto& s : series) {
            const auto first = std::find_if(s.records.begin(), s.records.end(),
                                            [](const PriceRecord& r) { return r.close.has_value(); });
            if (first == s.records.end()) {
                throw DataError(fmt::format("{}: no prices", s.ticker));
            }
            earliest_common = std::max(earliest_common, first->date);
        }
        dates.erase(std::remove_if(dates.begin(), dates.end(), [&](const Date& d) { return d < earliest_common; }),
                    dates.end());
    }
    if (dates.empty()) {
        throw DataError("empty date intersection across tickers");
    }

    const auto n = static_cast<Eigen::Index>(series.size());
    const auto d = static_cast<Eigen::Index>(dates.size());
    const bool all_volume = std::all_of(series.begin(), series.end(), [](const auto& s) { return s.has_volume; });
    const bool all_cap = std::all_of(series.begin(), series.end(), [](const auto& s) { return s.has_market_cap; });

    AssetPanel panel;
    panel.dates = dates;
    panel.close.resize(n, d);
    if (all_volume) {
        panel.volume = Eigen::MatrixXd(n, d);
    }
    if (all_cap) {
        panel.market_cap = Eigen::MatrixXd(n, d);
    }
    for (Eigen::Index j = 0; j < n; ++j) {
        const auto& s = series[static_cast<std::size_t>(j)];
        panel.tickers.push_back(s.ticker);
        panel.close.row(j) = fill_onto(s, dates, [](const PriceRecord& r) { return r.close; }, "close");
        if (all_volume) {
            panel.volume->row(j) = fill_onto(s, dates, [](const PriceRecord& r) { return r.volume; }, "volume");
        }
        if (all_cap) {
            panel.market_cap->row(j) =
                fill_onto(s, dates, [](const PriceRecord& r) { return r.market_cap; }, "market_cap");
        }
    }
    return panel;
}

AssetPanel load_panel(const std::vector<std::filesystem::path>& paths, const AlignmentPolicy& policy) {
    std::vector<TickerSeries> series;
    series.reserve(paths.size());
    for (const auto& p : paths) {
        series.push_back(read_ticker_file(p));
    }
    return align_series(series, policy);
}

std::vector<TickerSeries> to_series(const AssetPanel& panel) {
    std::vector<TickerSeries> out;
    for (std::size_t j = 0; j < panel.assets(); ++j) {
        const auto row = static_cast<Eigen::Index>(j);
        TickerSeries s;
        s.ticker = panel.tickers[j];
        s.has_volume = panel.volume.has_value();
        s.has_market_cap = panel.market_cap.has_value();
        for (std::size_t k = 0; k < panel.days(); ++k) {
            const auto col = static_cast<Eigen::Index>(k);
            PriceRecord r;
            r.date = panel.dates[k];
            r.close = panel.close(row, col);
            if (panel.volume) {
                r.volume = (*panel.volume)(row, col);
            }
            if (panel.market_cap) {
                r.market_cap = (*panel.market_cap)(row, col);
            }
            s.records.push_back(r);
        }
        out.push_back(std::move(s));
    }
    return out;
}

ReturnPanel log_returns(const AssetPanel& panel) {
    if (panel.days() < 2) {
        throw InsufficientHistoryError(
            fmt::format("log-returns need at least 2 dates, panel has {}", panel.days()));
    }
    const auto m = panel.close.cols() - 1;
    ReturnPanel out;
    out.tickers = panel.tickers;
    out.dates.assign(panel.dates.begin() + 1, panel.dates.end());
    out.returns = (panel.close.rightCols(m).array() / panel.close.leftCols(m).array()).log().matrix();
    if (panel.volume) {
        out.volume = panel.volume->rightCols(m);
    }
    if (panel.market_cap) {
        out.market_cap = panel.market_cap->rightCols(m);
    }
    if (!out.returns.allFinite()) {
        throw DataError("non-finite log-return (check for zero or missing prices)");
    }
    return out;
}

AssetPanel synthetic_panel(const SyntheticSpec& spec, std::uint64_t seed) {
    if (spec.assets == 0) {
        throw std::invalid_argument("synthetic_panel: need at least one asset");
    }
    if (spec.regimes.empty()) {
        throw std::invalid_argument("synthetic_panel: empty regime schedule");
    }
    if (!(spec.initial_price > 0.0)) {
        throw std::invalid_argument("synthetic_panel: initial price must be positive");
    }
    std::size_t total = 0;
    for (const auto& r : spec.regimes) {
        if (!(r.volatility > 0.0) || !std::isfinite(r.volatility)) {
            throw std::invalid_argument("synthetic_panel: volatility must be positive");
        }
        if (!(r.correlation >= 0.0 && r.correlation <= 1.0)) {
            throw std::invalid_argument("synthetic_panel: correlation must lie in [0, 1]");
        }
        if (r.length < 1) {
            throw std::invalid_argument("synthetic_panel: regime length must be >= 1");
        }
        total += r.length;
    }

    const auto n = static_cast<Eigen::Index>(spec.assets);
    const auto d = static_cast<Eigen::Index>(total + 1);
    AssetPanel panel;
    for (std::size_t j = 0; j < spec.assets; ++j) {
        panel.tickers.push_back(fmt::format("SYN{:03d}", j));
    }
    Date day = spec.start;
    while (day.is_weekend()) {
        day = day.plus_days(1);
    }
    for (Eigen::Index k = 0; k < d; ++k) {
        panel.dates.push_back(day);
        do {
            day = day.plus_days(1);
        } while (day.is_weekend());
    }

    Rng rng(derive_seed(seed, 0));
    auto draw = [&rng](ShockDistribution dist) {
        switch (dist) {
            case ShockDistribution::gaussian:
                return rng.normal();
            case ShockDistribution::student_t3:
                return rng.student_t(3) / std::sqrt(3.0);
            case ShockDistribution::student_t3_raw:
                return rng.student_t(3);
        }
        return 0.0;
    };

    panel.close.resize(n, d);
    panel.close.col(0).setConstant(spec.initial_price);
    Eigen::MatrixXd returns(n, d - 1);
    Eigen::Index col = 0;
    for (const auto& regime : spec.regimes) {
        const double common = std::sqrt(regime.correlation);
        const double idio = std::sqrt(1.0 - regime.correlation);
        for (std::size_t t = 0; t < regime.length; ++t, ++col) {
            const double f = draw(regime.distribution);
            for (Eigen::Index j = 0; j < n; ++j) {
                returns(j, col) = regime.volatility * (common * f + idio * draw(regime.distribution));
            }
        }
    }
    for (Eigen::Index k = 1; k < d; ++k) {
        panel.close.col(k) = panel.close.col(k - 1).array() * returns.col(k - 1).array().exp();
    }

    if (spec.with_volume || spec.with_market_cap) {
        Rng aux(derive_seed(seed, 1));
        Eigen::VectorXd shares(n);
        Eigen::VectorXd activity(n);
        for (Eigen::Index j = 0; j < n; ++j) {
            shares(j) = 1e6 * std::exp(aux.normal());
            activity(j) = 1e5 * std::exp(0.5 * aux.normal());
        }
        if (spec.with_market_cap) {
            Eigen::MatrixXd cap(n, d);
            for (Eigen::Index k = 0; k < d; ++k) {
                cap.col(k) = panel.close.col(k).cwiseProduct(shares);
            }
            panel.market_cap = std::move(cap);
        }
        if (spec.with_volume) {
            // Traded value grows with the size of the day's move.
            Eigen::MatrixXd vol(n, d);
            for (Eigen::Index k = 0; k < d; ++k) {
                for (Eigen::Index j = 0; j < n; ++j) {
                    const double move = k == 0 ? 0.0 : std::abs(returns(j, k - 1));
                    vol(j, k) = activity(j) * panel.close(j, k) * (1.0 + 50.0 * move) * std::exp(0.25 * aux.normal());
                }
            }
            panel.volume = std::move(vol);
        }
    }
    return panel;
}

void write_panel_cache(const AssetPanel& panel, const std::filesystem::path& path) {
    std::string out = "field,date";
    for (const auto& t : panel.tickers) {
        out += ',';
        out += t;
    }
    out += '\n';
    auto emit = [&](std::string_view field, const Eigen::MatrixXd& m) {
        for (Eigen::Index k = 0; k < m.cols(); ++k) {
            out += field;
            out += ',';
            out += panel.dates[static_cast<std::size_t>(k)].to_string();
            for (Eigen::Index j = 0; j < m.rows(); ++j) {
                out += ',';
                out += text::format_double(m(j, k));
            }
            out += '\n';
        }
    };
    emit("close", panel.close);
    if (panel.volume) {
        emit("volume", *panel.volume);
    }
    if (panel.market_cap) {
        emit("market_cap", *panel.market_cap);
    }
    text::write_file(path, out);
}

AssetPanel read_panel_cache(const std::filesystem::path& path) {
    const std::string content = text::read_file(path);
    const auto lines = text::data_lines(content);
    if (lines.empty()) {
        throw DataError(fmt::format("{}: empty panel cache", path.string()));
    }
    const auto header = text::split(lines.front());
    if (header.size() < 3 || header[0] != "field" || header[1] != "date") {
        throw DataError(fmt::format("{}: bad panel cache header", path.string()));
    }
    AssetPanel panel;
    for (std::size_t c = 2; c < header.size(); ++c) {
        panel.tickers.emplace_back(header[c]);
    }
    const auto n = static_cast<Eigen::Index>(panel.tickers.size());

    std::map<std::string, std::vector<std::pair<Date, Eigen::VectorXd>>> fields;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto f = text::split(lines[i]);
        if (f.size() != header.size()) {
            throw DataError(fmt::format("{}: line {}: wrong field count", path.string(), i + 1));
        }
        Eigen::VectorXd values(n);
        for (Eigen::Index j = 0; j < n; ++j) {
            const auto v = text::parse_double(f[static_cast<std::size_t>(j) + 2]);
            if (!v) {
                throw DataError(fmt::format("{}: line {}: unparseable value", path.string(), i + 1));
            }
            values(j) = *v;
        }
        fields[std::string(f[0])].emplace_back(Date::parse(f[1]), std::move(values));
    }
    auto assemble = [&](const std::vector<std::pair<Date, Eigen::VectorXd>>& rows) {
        Eigen::MatrixXd m(n, static_cast<Eigen::Index>(rows.size()));
        for (std::size_t k = 0; k < rows.size(); ++k) {
            if (rows[k].first != panel.dates[k]) {
                throw DataError(fmt::format("{}: field calendars differ", path.string()));
            }
            m.col(static_cast<Eigen::Index>(k)) = rows[k].second;
        }
        return m;
    };
    const auto close = fields.find("close");
    if (close == fields.end() || close->second.empty()) {
        throw DataError(fmt::format("{}: no close rows", path.string()));
    }
    for (const auto& [d, _] : close->second) {
        if (!panel.dates.empty() && d <= panel.dates.back()) {
            throw DataError(fmt::format("{}: dates must be strictly increasing", path.string()));
        }
        panel.dates.push_back(d);
    }
    for (const auto& [name, rows] : fields) {
        if (name != "close" && name != "volume" && name != "market_cap") {
            throw DataError(fmt::format("{}: unknown field '{}'", path.string(), name));
        }
        if (rows.size() != panel.dates.size()) {
            throw DataError(fmt::format("{}: field '{}' has {} rows, expected {}", path.string(), name, rows.size(),
                                        panel.dates.size()));
        }
    }
    panel.close = assemble(close->second);
    if (!(panel.close.array() > 0.0).all()) {
        throw DataError(fmt::format("{}: non-positive price", path.string()));
    }
    if (auto it = fields.find("volume"); it != fields.end()) {
        panel.volume = assemble(it->second);
    }
    if (auto it = fields.find("market_cap"); it != fields.end()) {
        panel.market_cap = assemble(it->second);
    }
    return panel;
}

}  // namespace rmtwarn
