#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace rislink {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

enum class PortKind { Tx, RisElement, Rx };

struct PortRole {
  PortKind kind = PortKind::RisElement;
  int element = 0;  // element number, meaningful for RisElement only

  static PortRole tx() { return {PortKind::Tx, 0}; }
  static PortRole rx() { return {PortKind::Rx, 0}; }
  static PortRole ris(int m) { return {PortKind::RisElement, m}; }

  friend bool operator==(const PortRole&, const PortRole&) = default;
};

/// Dense single-frequency scatter matrix with port roles.
///
/// Two layouts are valid: a full link (Tx at index 0, RIS elements in the
/// middle, Rx last) and a RIS-only matrix (every port a RIS element). The
/// reduced 2x2 link {Tx, Rx} is the full layout with zero elements.
class ScatterMatrix {
 public:
  ScatterMatrix(CMatrix entries, double freq_hz, double z0_ohm, std::vector<PortRole> roles);

  /// RIS-only matrix whose ports are elements numbered `element_numbers`.
  static ScatterMatrix ris_only(CMatrix entries, double freq_hz, double z0_ohm,
                                const std::vector<int>& element_numbers);

  const CMatrix& entries() const noexcept { return entries_; }
  Complex operator()(Eigen::Index i, Eigen::Index j) const { return entries_(i, j); }
  double freq_hz() const noexcept { return freq_hz_; }
  double z0_ohm() const noexcept { return z0_ohm_; }
  const std::vector<PortRole>& roles() const noexcept { return roles_; }
  Eigen::Index size() const noexcept { return entries_.rows(); }

  bool is_full_link() const noexcept { return has_tx_; }
  /// Number of RIS element ports.
  std::size_t element_count() const noexcept;
  /// Element numbers of the RIS ports, in port order.
  std::vector<int> element_numbers() const;

  Eigen::Index tx_index() const;
  Eigen::Index rx_index() const;

 private:
  CMatrix entries_;
  double freq_hz_;
  double z0_ohm_;
  std::vector<PortRole> roles_;
  bool has_tx_ = false;
};

/// Load reflection coefficients, one per RIS port, |gamma| <= 1.
struct ReflectionVector {
  std::vector<Complex> gammas;

  ReflectionVector() = default;
  explicit ReflectionVector(std::vector<Complex> g);
  std::size_t size() const noexcept { return gammas.size(); }
};

/// Threshold on the reciprocal condition number of (I - S_ii * Gamma).
inline constexpr double kMinReciprocalCondition = 1e-12;
inline constexpr double kDefaultPassivityTol = 1e-6;

/// Terminate the RIS ports of a full link with `loads` and return the 2x2
/// {Tx, Rx} matrix S_ee + S_ei G (I - S_ii G)^-1 S_ie.
///
/// Throws IllConditionedError when the loaded inner system is singular,
/// DimensionError on role or length mismatch.
ScatterMatrix reduce_loaded(const ScatterMatrix& full, const ReflectionVector& loads);

/// |S_Rx,Tx|^2 of a reduced {Tx, Rx} matrix: matched transducer power gain.
double power_transfer(const ScatterMatrix& reduced);

/// True iff every singular value is <= 1 + tol.
bool check_passivity(const ScatterMatrix& s, double tol = kDefaultPassivityTol);
bool check_passivity(const CMatrix& s, double tol = kDefaultPassivityTol);

/// True iff max |S_ij - S_ji| <= tol.
bool check_reciprocity(const ScatterMatrix& s, double tol);
bool check_reciprocity(const CMatrix& s, double tol);

double largest_singular_value(const CMatrix& m);

/// Precomputed block split of a full link for repeated reductions with
/// different loads. Evaluates S_Rx,Tx only, which is what power transfer
/// and the BRCS sweep need.
class LinkReducer {
 public:
  explicit LinkReducer(const ScatterMatrix& full);

  std::size_t element_count() const noexcept { return static_cast<std::size_t>(inner_.rows()); }

  /// S_Rx,Tx after loading.
  Complex transfer(const ReflectionVector& loads) const;
  Complex transfer(const std::vector<Complex>& gammas) const;

  /// S_Rx,Tx and its partial derivatives with respect to each gamma_m.
  Complex transfer_with_gradient(const std::vector<Complex>& gammas,
                                 std::vector<Complex>& d_transfer) const;

  const CVector& tx_column() const noexcept { return tx_col_; }
  const CVector& rx_row() const noexcept { return rx_row_; }

 private:
  CMatrix inner_;   // S_ii
  CVector tx_col_;  // S_i,Tx
  CVector rx_row_;  // S_Rx,i (as a column vector)
  Complex direct_;  // S_Rx,Tx
};

}  // namespace rislink
