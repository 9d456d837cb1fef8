#pragma once

// OHLC ingestion, alignment and windowing.
//
// Prices are stored time-major: row t of every panel is trading day t, column i
// is risky asset i. The risk-free leg has no price panel; it is a constant
// per-period growth factor derived from `risk_free_annual`.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "lfss/error.hpp"

namespace lfss {

inline constexpr int kDefaultPeriodsPerYear = 252;
inline constexpr double kDefaultRiskFreeAnnual = 0.0005;

struct OhlcSeries {
    std::vector<std::string> tickers;
    std::vector<std::string> dates;  // ISO-8601, strictly increasing
    Eigen::MatrixXd open;            // length x assets
    Eigen::MatrixXd high;
    Eigen::MatrixXd low;
    Eigen::MatrixXd close;
    double risk_free_annual = kDefaultRiskFreeAnnual;
    int periods_per_year = kDefaultPeriodsPerYear;

    std::size_t length() const noexcept { return dates.size(); }
    std::size_t asset_count() const noexcept { return tickers.size(); }

    /// Rows [begin, begin + count) as a new series.
    OhlcSeries slice(std::size_t begin, std::size_t count) const {
        if (begin + count > length()) throw IndexError("series slice out of range");
        OhlcSeries out;
        out.tickers = tickers;
        out.dates.assign(dates.begin() + static_cast<std::ptrdiff_t>(begin),
                         dates.begin() + static_cast<std::ptrdiff_t>(begin + count));
        const auto b = static_cast<Eigen::Index>(begin);
        const auto c = static_cast<Eigen::Index>(count);
        out.open = open.middleRows(b, c);
        out.high = high.middleRows(b, c);
        out.low = low.middleRows(b, c);
        out.close = close.middleRows(b, c);
        out.risk_free_annual = risk_free_annual;
        out.periods_per_year = periods_per_year;
        return out;
    }

    friend bool operator==(const OhlcSeries& a, const OhlcSeries& b) {
        return a.tickers == b.tickers && a.dates == b.dates && a.open == b.open &&
               a.high == b.high && a.low == b.low && a.close == b.close &&
               a.risk_free_annual == b.risk_free_annual &&
               a.periods_per_year == b.periods_per_year;
    }
};

/// Gross per-period growth of the risk-free leg.
inline double risk_free_growth(double risk_free_annual, int periods_per_year) {
    return std::pow(1.0 + risk_free_annual, 1.0 / static_cast<double>(periods_per_year));
}

inline double risk_free_growth(const OhlcSeries& s) {
    return risk_free_growth(s.risk_free_annual, s.periods_per_year);
}

namespace detail {

inline bool is_iso_date(std::string_view d) {
    if (d.size() != 10 || d[4] != '-' || d[7] != '-') return false;
    for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u})
        if (d[i] < '0' || d[i] > '9') return false;
    const int month = (d[5] - '0') * 10 + (d[6] - '0');
    const int day = (d[8] - '0') * 10 + (d[9] - '0');
    return month >= 1 && month <= 12 && day >= 1 && day <= 31;
}

// Days since 1970-01-01 for a proleptic Gregorian date, and back.
inline long days_from_civil(long y, unsigned m, unsigned d) {
    y -= m <= 2;
    const long era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<long>(doe) - 719468;
}

inline std::string civil_from_days(long z) {
    z += 719468;
    const long era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    long y = static_cast<long>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned d = doy - (153 * mp + 2) / 5 + 1;
    const unsigned m = mp < 10 ? mp + 3 : mp - 9;
    y += m <= 2;
    char buf[48];
    std::snprintf(buf, sizeof buf, "%04ld-%02u-%02u", y, m, d);
    return buf;
}

/// Consecutive weekdays starting at `first` (a yyyy-mm-dd string).
inline std::vector<std::string> business_days(std::string_view first, std::size_t count) {
    long z = days_from_civil(std::stol(std::string(first.substr(0, 4))),
                             static_cast<unsigned>(std::stoul(std::string(first.substr(5, 2)))),
                             static_cast<unsigned>(std::stoul(std::string(first.substr(8, 2)))));
    std::vector<std::string> out;
    out.reserve(count);
    while (out.size() < count) {
        const long weekday = ((z % 7) + 7 + 4) % 7;  // 1970-01-01 was a Thursday
        if (weekday != 0 && weekday != 6) out.push_back(civil_from_days(z));
        ++z;
    }
    return out;
}

inline std::vector<std::string_view> split(std::string_view line, char delim) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(delim, start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    for (auto& f : out) {
        while (!f.empty() && (f.front() == ' ' || f.front() == '\t')) f.remove_prefix(1);
        while (!f.empty() && (f.back() == ' ' || f.back() == '\t' || f.back() == '\r'))
            f.remove_suffix(1);
    }
    return out;
}

inline double parse_double(std::string_view field, std::size_t line, std::string_view what) {
    double value = 0.0;
    const auto* end = field.data() + field.size();
    const auto [ptr, ec] = std::from_chars(field.data(), end, value);
    if (ec != std::errc() || ptr != end || !std::isfinite(value))
        throw ParseError("cannot parse " + std::string(what) + " '" + std::string(field) + "'",
                         line);
    return value;
}

inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct Bar {
    double open, high, low, close;
};

inline void check_bar(const Bar& b, std::string_view ticker, std::string_view date,
                      std::size_t line, bool check_order = true) {
    std::string problem;
    if (!(b.open > 0 && b.high > 0 && b.low > 0 && b.close > 0))
        problem = "non-positive price";
    else if (check_order && b.high < std::max(b.open, b.close))
        problem = "high below max(open, close)";
    else if (check_order && b.low > std::min(b.open, b.close))
        problem = "low above min(open, close)";
    if (problem.empty()) return;
    std::string msg = problem + " for asset " + std::string(ticker) + " on " + std::string(date);
    if (line > 0) msg = "line " + std::to_string(line) + ": " + msg;
    throw ValidationError(msg);
}

}  // namespace detail

/// Checks every invariant of an OhlcSeries, naming the offending asset/date.
/// Smoothed series keep positivity but not the high/low envelope, so the
/// envelope check can be switched off for them.
inline void validate(const OhlcSeries& s, bool check_order = true) {
    const auto T = static_cast<Eigen::Index>(s.length());
    const auto n = static_cast<Eigen::Index>(s.asset_count());
    for (const auto* panel : {&s.open, &s.high, &s.low, &s.close})
        if (panel->rows() != T || panel->cols() != n)
            throw ValidationError("price panel shape does not match dates x tickers");
    for (std::size_t t = 0; t < s.length(); ++t) {
        if (!detail::is_iso_date(s.dates[t]))
            throw ValidationError("date '" + s.dates[t] + "' is not ISO-8601 (yyyy-mm-dd)");
        if (t > 0 && !(s.dates[t - 1] < s.dates[t]))
            throw ValidationError("dates not strictly increasing at " + s.dates[t]);
    }
    for (Eigen::Index t = 0; t < T; ++t)
        for (Eigen::Index i = 0; i < n; ++i)
            detail::check_bar({s.open(t, i), s.high(t, i), s.low(t, i), s.close(t, i)},
                              s.tickers[static_cast<std::size_t>(i)],
                              s.dates[static_cast<std::size_t>(t)], 0, check_order);
    if (!(s.periods_per_year > 0)) throw ValidationError("periods_per_year must be positive");
    if (!(s.risk_free_annual > -1.0)) throw ValidationError("risk_free_annual must exceed -1");
}

enum class CsvLayout { long_format, wide_format };

/// Column map for CSV ingestion. Long layout: one row per (date, ticker) with
/// the named columns in any order. Wide layout: one row per date with columns
/// `<ticker>_<field>` where field is e.g. `close` (or `filtered_close` with a
/// prefix).
struct CsvSchema {
    CsvLayout layout = CsvLayout::long_format;
    std::string date_column = "date";
    std::string ticker_column = "ticker";
    std::string open_column = "open";
    std::string high_column = "high";
    std::string low_column = "low";
    std::string close_column = "close";
    std::string field_prefix;
    char delimiter = ',';
    bool check_ohlc_order = true;  // off for filtered series
};

namespace detail {

inline OhlcSeries assemble(std::vector<std::string> tickers,
                           const std::map<std::string, std::map<std::string, Bar>>& by_date,
                           double risk_free_annual, int periods_per_year) {
    OhlcSeries s;
    s.risk_free_annual = risk_free_annual;
    s.periods_per_year = periods_per_year;
    s.tickers = std::move(tickers);
    for (const auto& [date, _] : by_date) s.dates.push_back(date);
    const auto T = static_cast<Eigen::Index>(s.dates.size());
    const auto n = static_cast<Eigen::Index>(s.tickers.size());
    s.open.resize(T, n);
    s.high.resize(T, n);
    s.low.resize(T, n);
    s.close.resize(T, n);
    Eigen::Index t = 0;
    for (const auto& [date, bars] : by_date) {
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto& tk = s.tickers[static_cast<std::size_t>(i)];
            const auto it = bars.find(tk);
            if (it == bars.end())
                throw ValidationError("asset " + tk + " is missing date " + date +
                                      " (assets must be fully aligned)");
            s.open(t, i) = it->second.open;
            s.high(t, i) = it->second.high;
            s.low(t, i) = it->second.low;
            s.close(t, i) = it->second.close;
        }
        ++t;
    }
    if (s.dates.empty()) throw ValidationError("CSV contains no data rows");
    return s;
}

inline std::size_t column_index(const std::vector<std::string_view>& header,
                                const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw ParseError("header lacks column '" + name + "'", 1);
    return static_cast<std::size_t>(it - header.begin());
}

}  // namespace detail

inline OhlcSeries read_csv(std::istream& in, const CsvSchema& schema = {},
                           double risk_free_annual = kDefaultRiskFreeAnnual,
                           int periods_per_year = kDefaultPeriodsPerYear) {
    std::string line;
    std::size_t line_no = 0;
    auto next_line = [&]() -> bool {
        while (std::getline(in, line)) {
            ++line_no;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty() || line.front() == '#') continue;
            return true;
        }
        return false;
    };
    if (!next_line()) throw ValidationError("CSV is empty");
    const std::string header_line = line;
    const auto header = detail::split(header_line, schema.delimiter);

    std::vector<std::string> tickers;
    std::map<std::string, std::map<std::string, detail::Bar>> by_date;
    const std::string& pre = schema.field_prefix;

    if (schema.layout == CsvLayout::long_format) {
        const std::size_t c_date = detail::column_index(header, schema.date_column);
        const std::size_t c_tk = detail::column_index(header, schema.ticker_column);
        const std::size_t c_o = detail::column_index(header, pre + schema.open_column);
        const std::size_t c_h = detail::column_index(header, pre + schema.high_column);
        const std::size_t c_l = detail::column_index(header, pre + schema.low_column);
        const std::size_t c_c = detail::column_index(header, pre + schema.close_column);
        std::unordered_map<std::string, bool> seen;
        while (next_line()) {
            const auto f = detail::split(line, schema.delimiter);
            if (f.size() != header.size())
                throw ParseError("expected " + std::to_string(header.size()) + " fields, got " +
                                     std::to_string(f.size()),
                                 line_no);
            const std::string date(f[c_date]);
            const std::string tk(f[c_tk]);
            if (!detail::is_iso_date(date)) throw ParseError("bad date '" + date + "'", line_no);
            if (tk.empty()) throw ParseError("empty ticker", line_no);
            detail::Bar bar{detail::parse_double(f[c_o], line_no, "open"),
                            detail::parse_double(f[c_h], line_no, "high"),
                            detail::parse_double(f[c_l], line_no, "low"),
                            detail::parse_double(f[c_c], line_no, "close")};
            detail::check_bar(bar, tk, date, line_no, schema.check_ohlc_order);
            if (!seen.count(tk)) {
                seen[tk] = true;
                tickers.push_back(tk);
            }
            auto& slot = by_date[date];
            if (!slot.emplace(tk, bar).second)
                throw ParseError("duplicate row for " + tk + " on " + date, line_no);
        }
    } else {
        const std::size_t c_date = detail::column_index(header, schema.date_column);
        struct Col {
            std::size_t ticker;
            int field;  // 0 open 1 high 2 low 3 close
        };
        std::vector<std::pair<std::size_t, Col>> cols;
        const std::string fields[4] = {pre + schema.open_column, pre + schema.high_column,
                                       pre + schema.low_column, pre + schema.close_column};
        for (std::size_t c = 0; c < header.size(); ++c) {
            if (c == c_date) continue;
            const std::string name(header[c]);
            int field = -1;
            std::string tk;
            for (int k = 0; k < 4; ++k) {
                const std::string suffix = "_" + fields[k];
                if (name.size() > suffix.size() &&
                    name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0) {
                    field = k;
                    tk = name.substr(0, name.size() - suffix.size());
                }
            }
            if (field < 0) throw ParseError("unrecognized wide column '" + name + "'", 1);
            auto it = std::find(tickers.begin(), tickers.end(), tk);
            if (it == tickers.end()) {
                tickers.push_back(tk);
                it = tickers.end() - 1;
            }
            cols.push_back({c, Col{static_cast<std::size_t>(it - tickers.begin()), field}});
        }
        while (next_line()) {
            const auto f = detail::split(line, schema.delimiter);
            if (f.size() != header.size())
                throw ParseError("expected " + std::to_string(header.size()) + " fields, got " +
                                     std::to_string(f.size()),
                                 line_no);
            const std::string date(f[c_date]);
            if (!detail::is_iso_date(date)) throw ParseError("bad date '" + date + "'", line_no);
            std::vector<std::array<double, 4>> vals(tickers.size(), {NAN, NAN, NAN, NAN});
            for (const auto& [c, col] : cols)
                vals[col.ticker][static_cast<std::size_t>(col.field)] =
                    detail::parse_double(f[c], line_no, header[c]);
            auto& slot = by_date[date];
            if (!slot.empty()) throw ParseError("duplicate date " + date, line_no);
            for (std::size_t k = 0; k < tickers.size(); ++k) {
                const auto& v = vals[k];
                if (std::isnan(v[0]) || std::isnan(v[1]) || std::isnan(v[2]) || std::isnan(v[3]))
                    throw ParseError("asset " + tickers[k] + " lacks one of open/high/low/close",
                                     line_no);
                detail::Bar bar{v[0], v[1], v[2], v[3]};
                detail::check_bar(bar, tickers[k], date, line_no, schema.check_ohlc_order);
                slot.emplace(tickers[k], bar);
            }
        }
    }
    OhlcSeries s = detail::assemble(std::move(tickers), by_date, risk_free_annual,
                                    periods_per_year);
    validate(s, schema.check_ohlc_order);
    return s;
}

inline OhlcSeries load_csv(const std::string& path, const CsvSchema& schema = {},
                           double risk_free_annual = kDefaultRiskFreeAnnual,
                           int periods_per_year = kDefaultPeriodsPerYear) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    return read_csv(in, schema, risk_free_annual, periods_per_year);
}

/// Long-format CSV with full round-trip precision.
inline void write_csv(std::ostream& out, const OhlcSeries& s, const std::string& field_prefix = {}) {
    out << "date,ticker," << field_prefix << "open," << field_prefix << "high," << field_prefix
        << "low," << field_prefix << "close\n";
    for (std::size_t t = 0; t < s.length(); ++t) {
        const auto ti = static_cast<Eigen::Index>(t);
        for (std::size_t i = 0; i < s.asset_count(); ++i) {
            const auto ii = static_cast<Eigen::Index>(i);
            out << s.dates[t] << ',' << s.tickers[i] << ',' << detail::format_double(s.open(ti, ii))
                << ',' << detail::format_double(s.high(ti, ii)) << ','
                << detail::format_double(s.low(ti, ii)) << ','
                << detail::format_double(s.close(ti, ii)) << '\n';
        }
    }
}

inline void write_csv(const std::string& path, const OhlcSeries& s,
                      const std::string& field_prefix = {}) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    write_csv(out, s, field_prefix);
    if (!out) throw IoError("write failed for " + path);
}

/// Rows in the training side of a chronological split: ceil(fraction * length),
/// so a fractional boundary row lands in training.
inline std::size_t train_rows(std::size_t length, double fraction) {
    if (!(fraction > 0.0 && fraction < 1.0))
        throw ValidationError("split fraction must lie in (0, 1)");
    const double raw = fraction * static_cast<double>(length);
    return static_cast<std::size_t>(std::ceil(raw - 1e-9));
}

inline std::pair<OhlcSeries, OhlcSeries> split_train_test(const OhlcSeries& s, double fraction) {
    const std::size_t train = train_rows(s.length(), fraction);
    if (train < 2 || s.length() - train < 2)
        throw ValidationError("split fraction " + std::to_string(fraction) + " of " +
                              std::to_string(s.length()) +
                              " rows leaves fewer than 2 rows on one side");
    return {s.slice(0, train), s.slice(train, s.length() - train)};
}

/// Gross returns realised between rows t-1 and t. Element 0 is the risk-free leg.
inline Eigen::VectorXd price_relatives(const OhlcSeries& s, std::size_t t) {
    if (t < 1 || t >= s.length())
        throw IndexError("price_relatives: t=" + std::to_string(t) + " outside [1, " +
                         std::to_string(s.length()) + ")");
    const auto n = static_cast<Eigen::Index>(s.asset_count());
    Eigen::VectorXd y(n + 1);
    y(0) = risk_free_growth(s);
    const auto ti = static_cast<Eigen::Index>(t);
    y.tail(n) = (s.close.row(ti).array() / s.close.row(ti - 1).array()).transpose();
    return y;
}

/// Close/high/low windows (assets x m) normalised by the close at the window end.
struct OhlcTensor {
    Eigen::MatrixXd close;
    Eigen::MatrixXd high;
    Eigen::MatrixXd low;

    const Eigen::MatrixXd& channel(int c) const { return c == 0 ? close : (c == 1 ? high : low); }
};

inline OhlcTensor ohlc_tensor(const OhlcSeries& s, std::size_t t, std::size_t m) {
    if (m == 0) throw ValidationError("window length must be positive");
    if (t < m)
        throw IndexError("insufficient history: t=" + std::to_string(t) + " < window " +
                         std::to_string(m));
    if (t >= s.length()) throw IndexError("ohlc_tensor: t beyond series end");
    const auto first = static_cast<Eigen::Index>(t + 1 - m);
    const auto mm = static_cast<Eigen::Index>(m);
    const Eigen::ArrayXd last_close = s.close.row(static_cast<Eigen::Index>(t)).transpose();
    auto normalise = [&](const Eigen::MatrixXd& panel) {
        Eigen::MatrixXd w = panel.middleRows(first, mm).transpose();
        w.array().colwise() /= last_close;
        return w;
    };
    return {normalise(s.close), normalise(s.high), normalise(s.low)};
}

struct SynthOptions {
    double start_price = 100.0;
    /// Intraday high/low excursion scale as a multiple of the per-period vol.
    double intraday_scale = 0.5;
    std::string first_date = "2007-01-01";
    double risk_free_annual = kDefaultRiskFreeAnnual;
    int periods_per_year = kDefaultPeriodsPerYear;
};

/// Series whose every price column equals the given closes (length x assets),
/// with tickers S00.. and business-day dates.
inline OhlcSeries series_from_closes(const Eigen::MatrixXd& close, const SynthOptions& opt = {}) {
    if (close.rows() < 2 || close.cols() < 1) throw ValidationError("close panel needs >= 2 rows and >= 1 asset");
    if (!close.allFinite() || close.minCoeff() <= 0.0) throw ValidationError("close prices must be positive");
    OhlcSeries s;
    s.risk_free_annual = opt.risk_free_annual;
    s.periods_per_year = opt.periods_per_year;
    for (Eigen::Index i = 0; i < close.cols(); ++i) {
        char buf[16];
        std::snprintf(buf, sizeof buf, "S%02d", static_cast<int>(i));
        s.tickers.emplace_back(buf);
    }
    s.dates = detail::business_days(opt.first_date, static_cast<std::size_t>(close.rows()));
    s.open = s.high = s.low = s.close = close;
    return s;
}

/// Seeded geometric Brownian motion market. Drifts and vols are annualised.
inline OhlcSeries synth_gbm(std::uint64_t seed, std::size_t n, std::size_t length,
                            const std::vector<double>& drifts, const std::vector<double>& vols,
                            const SynthOptions& opt = {}) {
    if (length < 2) throw ValidationError("synth_gbm needs length >= 2");
    if (n == 0) throw ValidationError("synth_gbm needs at least one asset");
    if (drifts.size() != n || vols.size() != n)
        throw ValidationError("synth_gbm: drifts and vols must have one entry per asset");
    for (double v : vols)
        if (!(v >= 0.0)) throw ValidationError("synth_gbm: vols must be non-negative");

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double dt = 1.0 / static_cast<double>(opt.periods_per_year);

    OhlcSeries s;
    s.risk_free_annual = opt.risk_free_annual;
    s.periods_per_year = opt.periods_per_year;
    for (std::size_t i = 0; i < n; ++i) {
        char buf[16];
        std::snprintf(buf, sizeof buf, "S%02zu", i);
        s.tickers.emplace_back(buf);
    }
    s.dates = detail::business_days(opt.first_date, length);
    const auto T = static_cast<Eigen::Index>(length);
    const auto N = static_cast<Eigen::Index>(n);
    s.open.resize(T, N);
    s.high.resize(T, N);
    s.low.resize(T, N);
    s.close.resize(T, N);
    for (Eigen::Index t = 0; t < T; ++t) {
        for (Eigen::Index i = 0; i < N; ++i) {
            const double mu = drifts[static_cast<std::size_t>(i)];
            const double sigma = vols[static_cast<std::size_t>(i)];
            const double z = normal(rng);
            const double up = std::min(0.5, std::abs(normal(rng)) * opt.intraday_scale * sigma *
                                                 std::sqrt(dt));
            const double down = std::min(0.5, std::abs(normal(rng)) * opt.intraday_scale * sigma *
                                                   std::sqrt(dt));
            const double prev = t == 0 ? opt.start_price : s.close(t - 1, i);
            const double close =
                t == 0 ? opt.start_price
                       : prev * std::exp((mu - 0.5 * sigma * sigma) * dt + sigma * std::sqrt(dt) * z);
            s.open(t, i) = prev;
            s.close(t, i) = close;
            s.high(t, i) = std::max(prev, close) * (1.0 + up);
            s.low(t, i) = std::min(prev, close) * (1.0 - down);
        }
    }
    return s;
}

/// Per-period log returns log(p_t / p_{t-1}) of one price panel; row 0 is zero.
inline Eigen::MatrixXd log_returns(const Eigen::MatrixXd& prices) {
    Eigen::MatrixXd r = Eigen::MatrixXd::Zero(prices.rows(), prices.cols());
    for (Eigen::Index t = 1; t < prices.rows(); ++t)
        r.row(t) = (prices.row(t).array() / prices.row(t - 1).array()).log().matrix();
    return r;
}

}  // namespace lfss
