#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "neutsflow/numerics/tensor.hpp"

namespace neutsflow::data {

using numerics::RealTensor;
using numerics::Shape;

/// Seconds since 1970-01-01 00:00:00, timezone-naive.
using Timestamp = std::int64_t;

/// Multivariate series on strictly increasing timestamps; values are [T, C].
struct SeriesTable {
    std::vector<Timestamp> timestamps;
    RealTensor values;
    std::vector<std::string> channel_names;

    std::size_t length() const { return timestamps.size(); }
    std::size_t channels() const { return channel_names.size(); }

    /// Throws DataError when the invariants do not hold.
    void validate() const;
    /// Rows [begin, end).
    SeriesTable slice(std::size_t begin, std::size_t end) const;
    /// Most common spacing between consecutive timestamps (0 for fewer than two rows).
    Timestamp sampling_interval() const;
};

enum class FillPolicy { reject, forward_fill };

FillPolicy parse_fill_policy(std::string_view text);
std::string to_string(FillPolicy policy);

/// Parses "YYYY-MM-DD HH:MM:SS" (a 'T' separator and a bare date are also accepted).
Timestamp parse_datetime(std::string_view text);
std::string format_datetime(Timestamp t);

/// Reads a CSV with a header row. `datetime_column` empty means the first column.
/// Every other column becomes a channel, in file order.
SeriesTable load_csv(const std::filesystem::path& path, std::string_view datetime_column = "date",
                     FillPolicy fill = FillPolicy::reject);
SeriesTable read_csv(std::istream& in, std::string_view datetime_column = "date",
                     FillPolicy fill = FillPolicy::reject, std::string_view source = "<stream>");

void write_csv(const SeriesTable& table, std::ostream& out, std::string_view datetime_header = "date");
void save_csv(const SeriesTable& table, const std::filesystem::path& path, std::string_view datetime_header = "date");

} // namespace neutsflow::data
