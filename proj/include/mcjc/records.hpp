#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

namespace mcjc::records {

/// 64-bit FNV-1a of the compact, key-sorted JSON dump, as 16 hex digits.
std::string config_hash(const nlohmann::json& j);

/// Writes `content` to a temporary file in the destination directory and
/// renames it into place, so readers see either the old file or the whole
/// new one. When MCJC_TEST_KILL_BEFORE_RENAME is a file name, or a number
/// k, the process exits after writing the temporary for that destination
/// (or for the k-th write) and before the rename; used to test interrupted
/// runs.
void atomic_write(const std::filesystem::path& path, const std::string& content);

/// Missing or malformed files throw Error(io).
nlohmann::json read_json(const std::filesystem::path& path);

/// Leftover temporaries from interrupted writes in `dir` are removed.
int remove_stale_temporaries(const std::filesystem::path& dir);

std::string software_version();
std::string utc_timestamp();
/// Peak resident set size of this process in kilobytes.
long peak_rss_kb();

}  // namespace mcjc::records
