#include "mcjc/records.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <sstream>

#include <sys/resource.h>
#include <unistd.h>

#include "mcjc/error.hpp"

namespace mcjc::records {

namespace fs = std::filesystem;

namespace {
std::atomic<unsigned> g_tmp_counter{0};
constexpr const char* kTmpMarker = ".tmp-";
}  // namespace

std::string config_hash(const nlohmann::json& j) {
  const std::string s = j.dump();
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void atomic_write(const fs::path& path, const std::string& content) {
  const fs::path dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorCode::io, "cannot create directory " + dir.string());
  const fs::path tmp = dir / (path.filename().string() + kTmpMarker + std::to_string(::getpid()) + "-" +
                              std::to_string(g_tmp_counter++));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::io, "cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) fail(ErrorCode::io, "short write to " + tmp.string());
  }
  if (const char* kill = std::getenv("MCJC_TEST_KILL_BEFORE_RENAME"); kill && *kill) {
    static std::atomic<long> writes{0};
    const std::string k = kill;
    const bool numeric = k.find_first_not_of("0123456789") == std::string::npos;
    if (numeric ? ++writes == std::stol(k) : path.filename() == k) std::_Exit(137);
  }
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    fail(ErrorCode::io, "cannot rename into " + path.string());
  }
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot read " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::io, "malformed JSON in " + path.string() + ": " + e.what());
  }
}

int remove_stale_temporaries(const fs::path& dir) {
  int n = 0;
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) return 0;
  for (const auto& e : fs::directory_iterator(dir, ec)) {
    if (e.path().filename().string().find(kTmpMarker) == std::string::npos) continue;
    if (fs::remove(e.path(), ec)) ++n;
  }
  return n;
}

std::string software_version() {
#ifdef MCJC_VERSION
  return MCJC_VERSION;
#else
  return "unknown";
#endif
}

std::string utc_timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

long peak_rss_kb() {
  rusage u{};
  getrusage(RUSAGE_SELF, &u);
  return u.ru_maxrss;
}

}  // namespace mcjc::records
