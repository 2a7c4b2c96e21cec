// market_data.cpp
#include "evobt/market_data.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>

namespace evobt {

namespace {

// Howard Hinnant's days-from-civil: valid over the whole int range we care about.
std::int64_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

std::vector<std::string> split_line(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

bool parse_double(const std::string& s, double& out) {
    const std::string t = trim(s);
    if (t.empty()) return false;
    const char* begin = t.data();
    const char* end = begin + t.size();
    auto [ptr, ec] = std::from_chars(begin, end, out);
    return ec == std::errc() && ptr == end && std::isfinite(out);
}

}  // namespace

std::int64_t parse_utc_date(const std::string& s) {
    int y = 0, m = 0, d = 0;
    if (std::sscanf(trim(s).c_str(), "%4d-%2d-%2d", &y, &m, &d) != 3 || m < 1 || m > 12 ||
        d < 1 || d > 31)
        throw std::runtime_error("bad date: " + s);
    return days_from_civil(y, m, d);
}

std::int64_t parse_timestamp_minutes(const std::string& raw) {
    const std::string s = trim(raw);
    if (s.empty()) throw std::runtime_error("empty timestamp");
    // Numeric field means epoch seconds.
    if (s.find('-') == std::string::npos || (s[0] == '-' && s.find('-', 1) == std::string::npos)) {
        double sec;
        if (!parse_double(s, sec)) throw std::runtime_error("bad timestamp: " + s);
        return static_cast<std::int64_t>(std::floor(sec / 60.0));
    }
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, se = 0;
    const int n = std::sscanf(s.c_str(), "%4d-%2d-%2d%*1[T ]%2d:%2d:%2d", &y, &mo, &d, &h, &mi, &se);
    if (n < 3 || mo < 1 || mo > 12 || d < 1 || d > 31 || h < 0 || h > 23 || mi < 0 || mi > 59 ||
        se < 0 || se > 60)
        throw std::runtime_error("bad timestamp: " + s);
    return days_from_civil(y, mo, d) * 1440 + h * 60 + mi;
}

BarSeries load_csv(const std::string& path, const CsvSchema& schema) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open CSV: " + path);

    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file, header required");

    auto header = split_line(line, ',');
    for (auto& h : header) h = trim(h);

    auto col_of = [&](const std::string& canonical) {
        std::string want = canonical;
        if (auto it = schema.find(canonical); it != schema.end()) want = it->second;
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == want) return static_cast<long>(i);
        throw std::runtime_error(path + ": missing column '" + want + "'");
    };

    const long c_ts = col_of("timestamp");
    const long c_o = col_of("open");
    const long c_h = col_of("high");
    const long c_l = col_of("low");
    const long c_c = col_of("close");
    const long c_v = col_of("volume");
    const long need = std::max({c_ts, c_o, c_h, c_l, c_c, c_v});

    BarSeries series;
    series.label = path;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) continue;
        const auto f = split_line(line, ',');
        auto fail = [&](const std::string& why) {
            throw std::runtime_error(path + ": row " + std::to_string(row) + ": " + why);
        };
        if (static_cast<long>(f.size()) <= need) fail("too few fields");
        Bar b;
        try {
            b.ts_min = parse_timestamp_minutes(f[c_ts]);
        } catch (const std::exception& e) {
            fail(e.what());
        }
        if (!parse_double(f[c_o], b.open) || !parse_double(f[c_h], b.high) ||
            !parse_double(f[c_l], b.low) || !parse_double(f[c_c], b.close) ||
            !parse_double(f[c_v], b.volume))
            fail("non-numeric field");
        if (!b.valid()) fail("bar sanity violated (prices > 0, low <= open/close <= high)");
        if (!series.bars.empty() && b.ts_min <= series.bars.back().ts_min)
            fail("non-monotone timestamp");
        series.bars.push_back(b);
    }
    return series;
}

SplitResult split(const BarSeries& series, const SplitSpec& spec) {
    spec.validate();
    SplitResult r;
    r.train.label = series.label + ":train";
    r.validation.label = series.label + ":validation";
    r.test.label = series.label + ":test";

    auto in_window = [](std::int64_t t, std::int64_t a_day, std::int64_t b_day) {
        return t >= a_day * 1440 && t < (b_day + 1) * 1440;
    };
    for (const Bar& b : series.bars) {
        if (in_window(b.ts_min, spec.train_start_day, spec.train_end_day))
            r.train.bars.push_back(b);
        else if (in_window(b.ts_min, spec.val_start_day, spec.val_end_day))
            r.validation.bars.push_back(b);
        else if (in_window(b.ts_min, spec.test_start_day, spec.test_end_day))
            r.test.bars.push_back(b);
        else
            ++r.dropped;
    }
    if (r.train.empty()) r.warnings.push_back("train split is empty");
    if (r.validation.empty()) r.warnings.push_back("validation split is empty");
    if (r.test.empty()) r.warnings.push_back("test split is empty");
    return r;
}

BarSeries synthesize(const SynthConfig& cfg) {
    if (cfg.n_minutes == 0) throw std::runtime_error("synthesize: n_minutes must be positive");
    if (cfg.base_price <= 0.0) throw std::runtime_error("synthesize: base_price must be positive");
    if (cfg.vol_per_min < 0.0 || cfg.signal_coef < 0.0 || cfg.signal_halflife <= 0.0)
        throw std::runtime_error("synthesize: bad noise parameters");

    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    // Latent AR(1) signal with stationary sd = signal_coef. The current
    // signal level enters the next log return, so past returns carry
    // information about future ones.
    const double rho = std::exp(-std::numbers::ln2 / cfg.signal_halflife);
    const double innov = cfg.signal_coef * std::sqrt(1.0 - rho * rho);

    BarSeries series;
    series.label = "synth:" + std::to_string(cfg.seed);
    series.bars.reserve(cfg.n_minutes);

    // Fixed start: 2024-01-01 00:00 UTC.
    const std::int64_t t0 = days_from_civil(2024, 1, 1) * 1440;

    double close = cfg.base_price;
    double sig = 0.0;
    for (std::size_t i = 0; i < cfg.n_minutes; ++i) {
        const double eps = gauss(rng);
        const double eta = gauss(rng);
        const double u = std::abs(gauss(rng));
        const double v = std::abs(gauss(rng));
        const double w = gauss(rng);

        const double r = sig + cfg.vol_per_min * eps;
        sig = rho * sig + innov * eta;

        Bar b;
        b.ts_min = t0 + static_cast<std::int64_t>(i);
        b.open = close;
        b.close = close * std::exp(r);
        b.high = std::max(b.open, b.close) * std::exp(u * cfg.vol_per_min);
        b.low = std::min(b.open, b.close) * std::exp(-v * cfg.vol_per_min);
        b.volume = 100.0 * std::exp(0.5 * w);
        series.bars.push_back(b);
        close = b.close;
    }
    return series;
}

void write_csv(const BarSeries& series, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write CSV: " + path);
    out << "timestamp,open,high,low,close,volume\n";
    out.precision(17);
    for (const Bar& b : series.bars)
        out << b.ts_min * 60 << ',' << b.open << ',' << b.high << ',' << b.low << ',' << b.close
            << ',' << b.volume << '\n';
}

}  // namespace evobt
