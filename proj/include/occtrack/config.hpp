#pragma once

// Flat key=value configuration files. '#' starts a comment; blank lines are
// ignored; unknown keys are rejected so typos surface early.

#include <occtrack/tracker.hpp>

#include <filesystem>
#include <map>
#include <string>

namespace occtrack {

using ConfigMap = std::map<std::string, std::string>;

/// Throws ParseError naming the offending line.
ConfigMap parse_config(const std::string &text);
ConfigMap read_config_file(const std::filesystem::path &path);

/// Applies recognised keys on top of `base`. Throws ParseError on unknown keys
/// or malformed values and InvalidArgument on out-of-range values.
TrackerConfig tracker_config_from(const ConfigMap &kv, TrackerConfig base = {});
TrackerConfig load_tracker_config(const std::filesystem::path &path);

/// Key=value rendering of every tunable, with the default file's comments.
std::string to_config_text(const TrackerConfig &cfg);

ScaleMode parse_scale_mode(const std::string &s);
std::string_view to_string(ScaleMode m);

namespace config_detail {
double to_double(const std::string &key, const std::string &v);
int to_int(const std::string &key, const std::string &v);
bool to_bool(const std::string &key, const std::string &v);
} // namespace config_detail

} // namespace occtrack
