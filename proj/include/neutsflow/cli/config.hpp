#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "neutsflow/data/series.hpp"
#include "neutsflow/eval/eval.hpp"

namespace neutsflow::cli {

using Pairs = std::vector<std::pair<std::string, std::string>>;

/// Everything one command needs; every field has a default and is settable by key.
struct RunConfig {
    std::string data;
    /// Empty means the data file's stem.
    std::string dataset;
    std::string datetime_column = "date";
    data::FillPolicy fill = data::FillPolicy::reject;
    std::string out = "run";
    eval::RunSpec run;

    RunConfig();

    /// Sets one key; unknown keys and malformed values are usage errors naming the key.
    void set(std::string_view key, std::string_view value);
    /// Applies pairs in order, except that `task` goes first so that it can reset
    /// the task lengths before explicit S/L/decimation/phase values land. Without
    /// explicit fractions the split follows the dataset family.
    void apply(const Pairs& pairs);
    /// Fully resolved configuration; applying it to a default RunConfig reproduces this one.
    Pairs to_pairs() const;
    /// dataset, or the stem of data.
    std::string dataset_name() const;
    void validate() const;
};

/// Flat "key = value" lines; '#' starts a comment; blank lines are ignored.
Pairs parse_config_text(std::string_view text, std::string_view source = "<config>");
Pairs read_config_file(const std::filesystem::path& path);
std::string render_config(const Pairs& pairs);
/// "key=value" as given to --set.
std::pair<std::string, std::string> parse_assignment(std::string_view text);

} // namespace neutsflow::cli
