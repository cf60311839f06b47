#include "mcjc/env_store.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>
#include <fstream>

#include <unistd.h>

#include <json.hpp>

#include "mcjc/error.hpp"

namespace mcjc::dmrg {

namespace fs = std::filesystem;

namespace {
constexpr char kMagic[8] = {'M', 'C', 'J', 'C', 'E', 'N', 'V', '1'};
std::atomic<int> g_store_counter{0};
}  // namespace

std::size_t Env::bytes() const {
  std::size_t n = 0;
  for (const auto& row : blocks)
    for (const auto& m : row) n += static_cast<std::size_t>(m.size()) * sizeof(double);
  return n;
}

fs::path default_scratch_root() {
  if (const char* s = std::getenv("MCJC_SCRATCH"); s && *s) return fs::path(s);
  return fs::temp_directory_path();
}

EnvStore::EnvStore(int num_sites, std::size_t budget_bytes, fs::path scratch_dir)
    : left_(num_sites + 1), right_(num_sites + 1), budget_(budget_bytes) {
  if (budget_ > 0) {
    const fs::path root = scratch_dir.empty() ? default_scratch_root() : scratch_dir;
    dir_ = root / ("mcjc-env-" + std::to_string(::getpid()) + "-" + std::to_string(g_store_counter++));
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) fail(ErrorCode::io, "EnvStore: cannot create scratch directory " + dir_.string());
    own_dir_ = true;
  }
}

EnvStore::~EnvStore() {
  if (own_dir_) {
    std::error_code ec;
    fs::remove_all(dir_, ec);
  }
}

EnvStore::Slot& EnvStore::slot(Side side, int bond) {
  auto& v = side == Side::left ? left_ : right_;
  require(bond >= 0 && bond < static_cast<int>(v.size()), "EnvStore: bond out of range", ErrorCode::internal);
  return v[bond];
}

fs::path EnvStore::stem(Side side, int bond) const {
  return dir_ / ((side == Side::left ? "env_L_" : "env_R_") + std::to_string(bond));
}

int EnvStore::distance(Side side, int bond) const {
  return side == Side::left ? std::abs(bond - focus_) : std::abs(bond - (focus_ + 2));
}

void EnvStore::put(Side side, int bond, Env env) {
  Slot& s = slot(side, bond);
  if (s.env) resident_ -= s.env->bytes();
  resident_ += env.bytes();
  s.env = std::move(env);
  s.on_disk = false;
  enforce_budget();
}

const Env& EnvStore::get(Side side, int bond) {
  Slot& s = slot(side, bond);
  if (!s.env) {
    require(s.on_disk, "EnvStore: environment was never stored", ErrorCode::internal);
    s.env = read_env(stem(side, bond));
    resident_ += s.env->bytes();
    enforce_budget();
  }
  return *s.env;
}

void EnvStore::set_focus(int j) {
  focus_ = j;
  enforce_budget();
}

void EnvStore::enforce_budget() {
  if (budget_ == 0) return;
  while (resident_ > budget_) {
    Side victim_side = Side::left;
    int victim = -1, worst = 2;
    for (Side side : {Side::left, Side::right}) {
      auto& v = side == Side::left ? left_ : right_;
      for (int b = 0; b < static_cast<int>(v.size()); ++b) {
        if (!v[b].env) continue;
        const int d = distance(side, b);
        if (d > worst) {
          worst = d;
          victim = b;
          victim_side = side;
        }
      }
    }
    if (victim < 0) return;  // only pinned environments left
    Slot& s = slot(victim_side, victim);
    write_env(*s.env, stem(victim_side, victim), victim_side, victim);
    resident_ -= s.env->bytes();
    s.env.reset();
    s.on_disk = true;
    ++spills_;
  }
}

void EnvStore::write_env(const Env& env, const fs::path& stem, Side side, int bond) {
  nlohmann::json meta;
  meta["side"] = side == Side::left ? "left" : "right";
  meta["bond"] = bond;
  meta["mpo_dim"] = env.shift.size();
  meta["shift"] = env.shift;
  meta["sectors"] = nlohmann::json::array();
  for (const auto& s : env.bond.sectors()) meta["sectors"].push_back({{"charge", s.charge}, {"dim", s.dim}});
  meta["blocks"] = nlohmann::json::array();

  fs::path bin = stem;
  bin += ".bin";
  std::ofstream out(bin, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::io, "EnvStore: cannot write " + bin.string());
  out.write(kMagic, sizeof(kMagic));
  std::size_t offset = sizeof(kMagic);
  for (std::size_t k = 0; k < env.blocks.size(); ++k) {
    for (int l = 0; l < static_cast<int>(env.blocks[k].size()); ++l) {
      const Matrix& m = env.blocks[k][l];
      if (m.size() == 0) continue;
      const int ket = env.bond[l].charge;
      meta["blocks"].push_back({{"mpo_state", k},
                                {"ket_sector", ket},
                                {"bra_sector", ket + env.shift[k]},
                                {"rows", m.rows()},
                                {"cols", m.cols()},
                                {"offset", offset}});
      const auto n = static_cast<std::streamsize>(m.size() * sizeof(double));
      out.write(reinterpret_cast<const char*>(m.data()), n);
      offset += static_cast<std::size_t>(n);
    }
  }
  if (!out) fail(ErrorCode::io, "EnvStore: short write to " + bin.string());
  fs::path side_json = stem;
  side_json += ".json";
  std::ofstream js(side_json, std::ios::trunc);
  js << meta.dump(1) << '\n';
  if (!js) fail(ErrorCode::io, "EnvStore: cannot write " + side_json.string());
}

Env EnvStore::read_env(const fs::path& stem) {
  fs::path side_json = stem;
  side_json += ".json";
  fs::path bin = stem;
  bin += ".bin";
  std::ifstream js(side_json);
  if (!js) fail(ErrorCode::io, "EnvStore: missing sidecar " + side_json.string());
  const nlohmann::json meta = nlohmann::json::parse(js);
  std::vector<Sector> sectors;
  for (const auto& s : meta.at("sectors")) sectors.push_back({s.at("charge").get<int>(), s.at("dim").get<int>()});
  Env env;
  env.bond = BondSpace(sectors);
  env.shift = meta.at("shift").get<std::vector<int>>();
  env.blocks.assign(env.shift.size(), std::vector<Matrix>(env.bond.size()));

  std::ifstream in(bin, std::ios::binary);
  if (!in) fail(ErrorCode::io, "EnvStore: missing block file " + bin.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) fail(ErrorCode::io, "EnvStore: bad magic in " + bin.string());
  for (const auto& b : meta.at("blocks")) {
    const int k = b.at("mpo_state").get<int>();
    const int l = env.bond.find(b.at("ket_sector").get<int>());
    require(l >= 0, "EnvStore: sidecar references unknown sector", ErrorCode::io);
    Matrix m(b.at("rows").get<Eigen::Index>(), b.at("cols").get<Eigen::Index>());
    in.seekg(static_cast<std::streamoff>(b.at("offset").get<std::size_t>()));
    in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
    if (!in) fail(ErrorCode::io, "EnvStore: truncated block file " + bin.string());
    env.blocks[k][l] = std::move(m);
  }
  return env;
}

}  // namespace mcjc::dmrg
