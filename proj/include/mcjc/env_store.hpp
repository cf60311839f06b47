#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "mcjc/mps.hpp"

namespace mcjc::dmrg {

/// Contraction of the MPS, its conjugate and the MPO on one side of a bond,
/// one matrix (bra x ket) per MPO automaton state and ket sector. The bra
/// sector of ket sector l in state k has charge c_l + shift[k].
struct Env {
  BondSpace bond;
  std::vector<int> shift;
  std::vector<std::vector<Matrix>> blocks;  // [state][ket sector], empty when absent

  std::size_t bytes() const;
};

/// Holds the left and right environments of a sweep. When a memory budget is
/// set, environments far from the current focus are written to the scratch
/// directory and read back on demand. Each spilled environment is a raw
/// little-endian file `env_<L|R>_<bond>.bin` (8-byte magic "MCJCENV1", then
/// row-major doubles of every block back to back) plus a JSON sidecar
/// `env_<L|R>_<bond>.json` listing bond sectors, shifts and block offsets.
class EnvStore {
 public:
  EnvStore(int num_sites, std::size_t budget_bytes, std::filesystem::path scratch_dir);
  ~EnvStore();
  EnvStore(const EnvStore&) = delete;
  EnvStore& operator=(const EnvStore&) = delete;

  enum class Side { left, right };

  void put(Side side, int bond, Env env);
  /// Reference stays valid until the next put/get/focus call.
  const Env& get(Side side, int bond);
  /// Two-site step at sites (j, j+1): the left environment at bond j and the
  /// right one at bond j+2 stay resident.
  void set_focus(int j);

  std::size_t resident_bytes() const { return resident_; }
  int spill_count() const { return spills_; }
  const std::filesystem::path& scratch_dir() const { return dir_; }

  static void write_env(const Env& env, const std::filesystem::path& stem, Side side, int bond);
  static Env read_env(const std::filesystem::path& stem);

 private:
  struct Slot {
    std::optional<Env> env;
    bool on_disk = false;
  };
  Slot& slot(Side side, int bond);
  std::filesystem::path stem(Side side, int bond) const;
  void enforce_budget();
  int distance(Side side, int bond) const;

  std::vector<Slot> left_, right_;
  std::size_t budget_;
  std::size_t resident_ = 0;
  int spills_ = 0;
  int focus_ = 0;
  std::filesystem::path dir_;
  bool own_dir_ = false;
};

/// Default scratch location: $MCJC_SCRATCH when set, else the system temp dir.
std::filesystem::path default_scratch_root();

}  // namespace mcjc::dmrg
