#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mcjc/linalg.hpp"

namespace mcjc {

/// One charge sector of a vector space: all basis states carrying `charge`.
struct Sector {
  int charge = 0;
  int dim = 0;
  bool operator==(const Sector&) const = default;
};

}  // namespace mcjc

namespace mcjc::model {

using linalg::Matrix;

enum class Boundary { open, periodic };

/// Physical and numerical description of one lattice problem. Energies are in
/// units where omega_c = 1 unless stated otherwise.
struct ModelParams {
  int L = 2;
  double omega_c = 1.0;
  double omega_z = 1.0;
  double g_l = 0.015;
  double g_r = 0.015;
  int n_max = 5;
  Boundary boundary = Boundary::open;

  double detuning() const { return omega_z - omega_c; }
  int num_sites() const { return 2 * L; }
  int max_charge() const { return L * (n_max + 1); }

  /// Throws Error(invalid_argument) on L < 2, n_max < 1, omega_c <= 0 or
  /// negative couplings.
  void validate() const;

  bool operator==(const ModelParams&) const = default;
};

nlohmann::json to_json(const ModelParams& p);
/// Strict parser: unknown keys are rejected, L is required, other fields
/// default to the values above.
ModelParams params_from_json(const nlohmann::json& j);

std::string to_string(Boundary b);
Boundary boundary_from_string(const std::string& s);

enum class SiteKind { qubit, cavity };

/// Local basis of one chain site. Basis index equals polariton charge:
/// qubit {down, up} -> {0, 1}, cavity photon number n -> n.
struct SiteBasis {
  SiteKind kind = SiteKind::qubit;
  int dim = 2;
  std::vector<int> charge;
};

// Chain order is [qubit_1, cavity_1, qubit_2, cavity_2, ...].
inline int qubit_site(int cell) { return 2 * cell; }
inline int cavity_site(int cell) { return 2 * cell + 1; }
inline int cell_of(int site) { return site / 2; }

SiteBasis site_basis(const ModelParams& p, int site);
std::vector<SiteBasis> chain_bases(const ModelParams& p);

/// Small dense local operator with a definite charge shift q: it maps local
/// charge c to c + q. All operators used here have at most one nonzero per
/// column, which `column_map` exposes for fast product-state application.
struct LocalOp {
  std::string name;
  int charge_shift = 0;
  Matrix m;

  /// For each input state: (output state, amplitude), or (-1, 0) when the
  /// column is zero.
  std::vector<std::pair<int, double>> column_map() const;
  LocalOp adjoint() const;
};

LocalOp identity_op(int dim);
LocalOp sigma_plus();
LocalOp sigma_minus();
LocalOp sigma_z();
LocalOp qubit_number();
LocalOp annihilate(int n_max);
LocalOp create(int n_max);
LocalOp photon_number(int n_max);

/// Number operator of a site (qubit excitation or photon number).
LocalOp number_op(const SiteBasis& b);

struct OnsiteTerm {
  int site;
  double coeff;
  LocalOp op;
};

/// coeff * (sigma+_qubit a_cavity + a^dag_cavity sigma-_qubit).
struct HoppingTerm {
  int qubit;
  int cavity;
  double coeff;
  bool wraps = false;  // the periodic g_l bond between the last cavity and the first qubit
};

/// coeff * op_a(site_a) op_b(site_b), with site_a < site_b.
struct OperatorProduct {
  int site_a;
  LocalOp op_a;
  int site_b;
  LocalOp op_b;
  double coeff;
};

struct LocalTerms {
  std::vector<OnsiteTerm> onsite;
  std::vector<HoppingTerm> hopping;

  /// Both Hermitian-conjugate halves of every hopping term.
  std::vector<OperatorProduct> products(const ModelParams& p) const;
};

/// On-site terms (omega_z/2) sigma^z on qubits and omega_c a^dag a on
/// cavities; g_r hopping inside each cell; g_l hopping from cavity i to qubit
/// i+1, plus the wrap-around g_l bond for periodic boundaries.
LocalTerms build_local_terms(const ModelParams& p);

/// Operator with definite charge shift, stored as dense blocks between
/// charge sectors. Every stored block satisfies row_charge = col_charge + shift.
class BlockedOperator {
 public:
  BlockedOperator(std::vector<Sector> row_sectors, std::vector<Sector> col_sectors, int charge_shift);

  /// Builds from a dense matrix whose basis states carry the given charges.
  /// Throws if any nonzero element violates the charge shift.
  static BlockedOperator from_dense(const Matrix& m, std::span<const int> row_charges,
                                    std::span<const int> col_charges, int charge_shift);
  static BlockedOperator from_local(const LocalOp& op, const SiteBasis& b);

  void set_block(int row_charge, int col_charge, Matrix block);
  const Matrix* block(int row_charge, int col_charge) const;

  int charge_shift() const { return charge_shift_; }
  const std::vector<Sector>& row_sectors() const { return rows_; }
  const std::vector<Sector>& col_sectors() const { return cols_; }
  const std::map<std::pair<int, int>, Matrix>& blocks() const { return blocks_; }

  BlockedOperator adjoint() const;
  /// Dense form with sectors laid out in ascending charge order.
  Matrix to_dense() const;

 private:
  std::vector<Sector> rows_;
  std::vector<Sector> cols_;
  int charge_shift_;
  std::map<std::pair<int, int>, Matrix> blocks_;
};

/// Product states of the chain, encoded as mixed-radix integers with site 0
/// most significant. Enumeration is lexicographic in the local charges, which
/// is ascending code order.
class ProductSpace {
 public:
  explicit ProductSpace(const ModelParams& p);

  int num_sites() const { return static_cast<int>(dims_.size()); }
  std::uint64_t encode(std::span<const int> local) const;
  void decode(std::uint64_t code, std::span<int> local) const;
  int local_state(std::uint64_t code, int site) const {
    return static_cast<int>((code / stride_[site]) % dims_[site]);
  }
  std::uint64_t stride(int site) const { return stride_[site]; }
  std::uint64_t full_dim() const;

  /// All states with total charge N (or every state when N is empty), in
  /// lexicographic order. Throws Error(dimension) above `cap`.
  std::vector<std::uint64_t> enumerate(std::optional<int> N, std::size_t cap) const;

 private:
  std::vector<int> dims_;
  std::vector<std::uint64_t> stride_;
};

/// Applies H to a single product state: calls emit(code', amplitude) for
/// every output component (diagonal included, possibly repeated codes).
class HamiltonianAction {
 public:
  explicit HamiltonianAction(const ModelParams& p);

  template <class Emit>
  void apply(std::uint64_t code, Emit&& emit) const {
    double diag = 0.0;
    for (const auto& t : onsite_) diag += t.coeff * t.diag[space_.local_state(code, t.site)];
    emit(code, diag);
    for (const auto& t : products_) {
      const int sa = space_.local_state(code, t.site_a);
      const int sb = space_.local_state(code, t.site_b);
      const auto [oa, va] = t.map_a[sa];
      const auto [ob, vb] = t.map_b[sb];
      if (oa < 0 || ob < 0) continue;
      const std::uint64_t next = code + (static_cast<std::int64_t>(oa) - sa) * space_.stride(t.site_a) +
                                 (static_cast<std::int64_t>(ob) - sb) * space_.stride(t.site_b);
      emit(next, t.coeff * va * vb);
    }
  }

  const ProductSpace& space() const { return space_; }

 private:
  struct Onsite {
    int site;
    double coeff;
    std::vector<double> diag;
  };
  struct Product {
    int site_a, site_b;
    double coeff;
    std::vector<std::pair<int, double>> map_a, map_b;
  };
  ProductSpace space_;
  std::vector<Onsite> onsite_;
  std::vector<Product> products_;
};

inline constexpr std::size_t kDefaultDimensionCap = 200000;

/// Dense Hamiltonian on the full space or on one total-charge sector.
Matrix build_dense_hamiltonian(const ModelParams& p, std::optional<int> sector = std::nullopt,
                               std::size_t cap = kDefaultDimensionCap);

/// N_t over the full product space, blocked by total charge.
BlockedOperator total_number_operator(const ModelParams& p, std::size_t cap = kDefaultDimensionCap);

}  // namespace mcjc::model
