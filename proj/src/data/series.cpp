#include "neutsflow/data/series.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>

namespace neutsflow::data {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '"'))
        s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_line(std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t pos = 0;
    while (true) {
        const std::size_t comma = line.find(',', pos);
        cells.push_back(trim(line.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos)));
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    return cells;
}

bool is_missing(std::string_view cell) {
    return cell.empty() || cell == "NA" || cell == "NaN" || cell == "nan" || cell == "null";
}

bool parse_number(std::string_view cell, double& out) {
    const char* end = cell.data() + cell.size();
    auto [ptr, ec] = std::from_chars(cell.data(), end, out);
    return ec == std::errc{} && ptr == end && std::isfinite(out);
}

template <class Int>
bool parse_int(std::string_view s, Int& out) {
    if (s.empty()) return false;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size();
}

std::string join_lines(const std::vector<std::size_t>& lines) {
    std::string s;
    const std::size_t shown = std::min<std::size_t>(lines.size(), 20);
    for (std::size_t i = 0; i < shown; ++i) s += (i ? ", " : "") + std::to_string(lines[i]);
    if (lines.size() > shown) s += ", ... (" + std::to_string(lines.size()) + " total)";
    return s;
}

} // namespace

void SeriesTable::validate() const {
    if (values.rank() != 2 || values.dim(0) != timestamps.size() || values.dim(1) != channel_names.size())
        throw DataError("series: values " + numerics::shape_string(values.shape()) + " inconsistent with " +
                        std::to_string(timestamps.size()) + " timestamps and " +
                        std::to_string(channel_names.size()) + " channels");
    for (std::size_t i = 1; i < timestamps.size(); ++i)
        if (timestamps[i] <= timestamps[i - 1])
            throw DataError("series: timestamps not strictly increasing at row " + std::to_string(i));
    for (double v : values.values())
        if (!std::isfinite(v)) throw DataError("series: non-finite value");
}

SeriesTable SeriesTable::slice(std::size_t begin, std::size_t end) const {
    if (begin > end || end > length())
        throw UsageError("series: slice [" + std::to_string(begin) + ", " + std::to_string(end) + ") outside " +
                         std::to_string(length()) + " rows");
    SeriesTable out;
    out.timestamps.assign(timestamps.begin() + begin, timestamps.begin() + end);
    const std::size_t c = channels();
    std::vector<double> v(values.storage().begin() + begin * c, values.storage().begin() + end * c);
    out.values = RealTensor({end - begin, c}, std::move(v));
    out.channel_names = channel_names;
    return out;
}

Timestamp SeriesTable::sampling_interval() const {
    if (timestamps.size() < 2) return 0;
    std::map<Timestamp, std::size_t> counts;
    for (std::size_t i = 1; i < timestamps.size(); ++i) ++counts[timestamps[i] - timestamps[i - 1]];
    auto best = counts.begin();
    for (auto it = counts.begin(); it != counts.end(); ++it)
        if (it->second > best->second) best = it;
    return best->first;
}

FillPolicy parse_fill_policy(std::string_view text) {
    if (text == "reject") return FillPolicy::reject;
    if (text == "forward_fill") return FillPolicy::forward_fill;
    throw UsageError("unknown fill policy '" + std::string(text) + "' (expected reject or forward_fill)");
}

std::string to_string(FillPolicy policy) { return policy == FillPolicy::reject ? "reject" : "forward_fill"; }

Timestamp parse_datetime(std::string_view text) {
    text = trim(text);
    auto fail = [&]() -> Timestamp {
        throw DataError("cannot parse datetime '" + std::string(text) + "' (expected YYYY-MM-DD HH:MM:SS)");
    };
    if (text.size() < 10 || text[4] != '-' || text[7] != '-') return fail();
    int y = 0;
    unsigned mo = 0, d = 0, h = 0, mi = 0, s = 0;
    if (!parse_int(text.substr(0, 4), y) || !parse_int(text.substr(5, 2), mo) || !parse_int(text.substr(8, 2), d))
        return fail();
    if (text.size() > 10) {
        const std::string_view clock = text.substr(11);
        if ((text[10] != ' ' && text[10] != 'T') || clock.size() < 5 || clock[2] != ':') return fail();
        if (!parse_int(clock.substr(0, 2), h) || !parse_int(clock.substr(3, 2), mi)) return fail();
        if (clock.size() == 8) {
            if (clock[5] != ':' || !parse_int(clock.substr(6, 2), s)) return fail();
        } else if (clock.size() != 5) {
            return fail();
        }
    }
    using namespace std::chrono;
    const year_month_day ymd{year{y}, month{mo}, day{d}};
    if (!ymd.ok() || h > 23 || mi > 59 || s > 59) return fail();
    return sys_days{ymd}.time_since_epoch().count() * 86400LL + h * 3600LL + mi * 60LL + s;
}

std::string format_datetime(Timestamp t) {
    using namespace std::chrono;
    const Timestamp days = t >= 0 ? t / 86400 : (t - 86399) / 86400;
    const Timestamp rem = t - days * 86400;
    const year_month_day ymd{sys_days{std::chrono::days{days}}};
    char buf[64];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u %02lld:%02lld:%02lld", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<long long>(rem / 3600), static_cast<long long>(rem / 60 % 60),
                  static_cast<long long>(rem % 60));
    return buf;
}

SeriesTable read_csv(std::istream& in, std::string_view datetime_column, FillPolicy fill, std::string_view source) {
    const std::string where(source);
    std::string line;
    if (!std::getline(in, line)) throw DataError(where + ": empty file, header row expected");
    const auto header = split_line(line);
    std::size_t time_col = 0;
    if (!datetime_column.empty()) {
        auto it = std::find(header.begin(), header.end(), datetime_column);
        if (it == header.end())
            throw DataError(where + ": no datetime column '" + std::string(datetime_column) + "' in header");
        time_col = static_cast<std::size_t>(it - header.begin());
    }
    SeriesTable table;
    for (std::size_t c = 0; c < header.size(); ++c)
        if (c != time_col) table.channel_names.emplace_back(header[c]);
    const std::size_t C = table.channel_names.size();
    if (C == 0) throw DataError(where + ": no value columns");

    std::vector<double> values;
    std::vector<std::size_t> bad_rows, missing_rows;
    std::vector<double> previous(C, std::numeric_limits<double>::quiet_NaN());
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto cells = split_line(line);
        if (cells.size() != header.size()) {
            bad_rows.push_back(line_no);
            continue;
        }
        Timestamp ts = 0;
        try {
            ts = parse_datetime(cells[time_col]);
        } catch (const DataError&) {
            bad_rows.push_back(line_no);
            continue;
        }
        std::vector<double> row;
        row.reserve(C);
        bool bad = false, missing = false;
        for (std::size_t c = 0; c < cells.size(); ++c) {
            if (c == time_col) continue;
            double v = 0.0;
            if (is_missing(cells[c])) {
                missing = true;
                v = previous[row.size()];
            } else if (!parse_number(cells[c], v)) {
                bad = true;
            }
            row.push_back(v);
        }
        if (bad) {
            bad_rows.push_back(line_no);
            continue;
        }
        if (missing) {
            if (fill == FillPolicy::reject || std::any_of(row.begin(), row.end(), [](double v) { return std::isnan(v); })) {
                missing_rows.push_back(line_no);
                continue;
            }
        }
        if (!table.timestamps.empty() && ts <= table.timestamps.back())
            throw DataError(where + ": timestamps not strictly increasing at line " + std::to_string(line_no));
        table.timestamps.push_back(ts);
        values.insert(values.end(), row.begin(), row.end());
        previous = row;
    }
    if (!bad_rows.empty()) throw DataError(where + ": unparseable rows at lines " + join_lines(bad_rows));
    if (!missing_rows.empty())
        throw DataError(where + ": missing values at lines " + join_lines(missing_rows) +
                        (fill == FillPolicy::reject ? " (fill policy reject)" : " (nothing to forward-fill from)"));
    table.values = RealTensor({table.timestamps.size(), C}, std::move(values));
    return table;
}

SeriesTable load_csv(const std::filesystem::path& path, std::string_view datetime_column, FillPolicy fill) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    return read_csv(in, datetime_column, fill, path.string());
}

void write_csv(const SeriesTable& table, std::ostream& out, std::string_view datetime_header) {
    out << datetime_header;
    for (const auto& name : table.channel_names) out << ',' << name;
    out << '\n';
    const std::size_t C = table.channels();
    char buf[64];
    for (std::size_t t = 0; t < table.length(); ++t) {
        out << format_datetime(table.timestamps[t]);
        for (std::size_t c = 0; c < C; ++c) {
            auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, table.values[t * C + c]);
            out << ',' << std::string_view(buf, static_cast<std::size_t>(ptr - buf));
        }
        out << '\n';
    }
}

void save_csv(const SeriesTable& table, const std::filesystem::path& path, std::string_view datetime_header) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    write_csv(table, out, datetime_header);
}

} // namespace neutsflow::data
